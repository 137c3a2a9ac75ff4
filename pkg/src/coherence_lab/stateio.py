"""JSON encoding of states, channels and protocols.

Complex numbers are ``[re, im]`` pairs.  A mixed state is
``{"dims": [...], "matrix": [[[re, im], ...], ...]}``, a pure state is
``{"dims": [...], "vector": [[re, im], ...]}`` and several states may be
bundled as ``{"states": [...]}``.  Non-finite numbers are rejected.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

import numpy as np

from .errors import StateParseError
from .maxcorr import ProtocolStep, make_step
from .protocols import IncoherentChannel, validate_incoherent
from .states import DensityMatrix, PureState

_NONFINITE = re.compile(r"-?(NaN|Infinity)|-?\d+(\.\d*)?[eE][+-]?\d+")


class _NonFinite(ValueError):
    def __init__(self, token: str):
        super().__init__(token)
        self.token = token


def _reject_constant(token: str):
    raise _NonFinite(token)


def _finite_float(token: str) -> float:
    value = float(token)
    if not math.isfinite(value):
        raise _NonFinite(token)
    return value


def _position(text: str, token: str) -> tuple[int | None, int | None]:
    for m in _NONFINITE.finditer(text):
        if m.group(0) == token:
            line = text.count("\n", 0, m.start()) + 1
            col = m.start() - (text.rfind("\n", 0, m.start()) + 1) + 1
            return line, col
    return None, None


def loads(text: str, source: str = "<string>"):
    """Parse JSON text, raising StateParseError with a line and column on failure."""
    try:
        return json.loads(text, parse_constant=_reject_constant, parse_float=_finite_float)
    except _NonFinite as exc:
        line, col = _position(text, exc.token)
        raise StateParseError(f"{source}: non-finite number {exc.token!r}", line, col) from None
    except json.JSONDecodeError as exc:
        raise StateParseError(f"{source}: {exc.msg}", exc.lineno, exc.colno) from None


def _complex(value, where: str) -> complex:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise StateParseError(f"{where}: expected a [re, im] pair of numbers, got {value!r}")
    return complex(value[0], value[1])


def parse_vector(data, where: str = "vector") -> np.ndarray:
    if not isinstance(data, list):
        raise StateParseError(f"{where}: expected a list of [re, im] pairs")
    return np.array([_complex(v, f"{where}[{i}]") for i, v in enumerate(data)], dtype=complex)


def parse_matrix(data, where: str = "matrix") -> np.ndarray:
    """Row-major nested rows of ``[re, im]`` pairs; ragged rows are a parse error."""
    if not isinstance(data, list) or not data:
        raise StateParseError(f"{where}: expected a non-empty list of rows")
    rows = [parse_vector(r, f"{where}[{i}]") for i, r in enumerate(data)]
    if len({r.size for r in rows}) != 1:
        raise StateParseError(f"{where}: rows have different lengths")
    return np.stack(rows)


def _dims(doc, where: str) -> list:
    dims = doc.get("dims")
    if not isinstance(dims, list) or not all(isinstance(d, int) and not isinstance(d, bool) for d in dims):
        raise StateParseError(f"{where}: 'dims' must be a list of integers")
    return dims


def state_from_json(doc, where: str = "state"):
    """Build a validated DensityMatrix or PureState from a decoded document.

    Raises:
        StateParseError: if the document does not have the expected shape.
        InvariantViolation: if the numbers do not form a valid state.
    """
    if not isinstance(doc, dict):
        raise StateParseError(f"{where}: expected a JSON object")
    dims = _dims(doc, where)
    if "matrix" in doc:
        return DensityMatrix(dims, parse_matrix(doc["matrix"], f"{where}.matrix"))
    if "vector" in doc:
        return PureState(dims, parse_vector(doc["vector"], f"{where}.vector"))
    raise StateParseError(f"{where}: expected a 'matrix' or 'vector' entry")


def load_states(path) -> list:
    """All states in a file: a single state document or ``{"states": [...]}``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise StateParseError(f"{path}: {exc.strerror}") from None
    doc = loads(text, str(path))
    if isinstance(doc, dict) and "states" in doc:
        if not isinstance(doc["states"], list) or not doc["states"]:
            raise StateParseError(f"{path}: 'states' must be a non-empty list")
        return [state_from_json(d, f"{path}:states[{i}]") for i, d in enumerate(doc["states"])]
    return [state_from_json(doc, str(path))]


def load_state(path):
    states = load_states(path)
    if len(states) != 1:
        raise StateParseError(f"{path}: expected one state, found {len(states)}")
    return states[0]


def _pairs(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in a]
    return [_pairs(row) for row in a]


def state_to_json(state) -> dict:
    """Encode a state; floats keep full double precision so files round-trip exactly."""
    if isinstance(state, PureState):
        return {"dims": list(state.dims), "vector": _pairs(state.vec)}
    return {"dims": list(state.dims), "matrix": _pairs(state.mat)}


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, allow_nan=False) + "\n"


def _kraus_list(data, where: str) -> list:
    if not isinstance(data, list) or not data:
        raise StateParseError(f"{where}: expected a non-empty list of matrices")
    return [parse_matrix(m, f"{where}[{i}]") for i, m in enumerate(data)]


def channel_from_json(doc, where: str = "channel") -> IncoherentChannel:
    if not isinstance(doc, dict) or "kraus" not in doc:
        raise StateParseError(f"{where}: expected an object with a 'kraus' list")
    return validate_incoherent(_kraus_list(doc["kraus"], f"{where}.kraus"))


def protocol_from_json(doc, where: str = "protocol") -> list[ProtocolStep]:
    """``{"steps": [{"party": "A"|"B", "kraus": [...]}, ...]}`` to validated steps."""
    if not isinstance(doc, dict) or not isinstance(doc.get("steps"), list):
        raise StateParseError(f"{where}: expected an object with a 'steps' list")
    steps = []
    for i, s in enumerate(doc["steps"]):
        if not isinstance(s, dict) or s.get("party") not in ("A", "B"):
            raise StateParseError(f"{where}.steps[{i}]: 'party' must be \"A\" or \"B\"")
        steps.append(make_step(s["party"], _kraus_list(s.get("kraus"), f"{where}.steps[{i}].kraus")))
    return steps


def load_protocol(path) -> list[ProtocolStep]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise StateParseError(f"{path}: {exc.strerror}") from None
    return protocol_from_json(loads(text, str(path)), str(path))
