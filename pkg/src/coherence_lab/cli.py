"""``coherence-lab`` command-line front end.

Exit codes: 0 success, 1 a verification suite failed, 2 usage or parse
error, 3 a state, channel or protocol violates a data invariant.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

import numpy as np

from . import measures, roof
from .errors import ContractViolation, InvariantViolation, StateParseError
from .maxcorr import run_protocol, sample_protocol
from .sampling import DEFAULT_SEED, random_density_matrix, random_pure_state, rng_from_seed
from .states import as_density
from .stateio import dumps, load_protocol, load_states, state_to_json
from .suites import SUITES, SuiteOptions, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2, 3
SEED_ENV = "COHERENCE_LAB_SEED"
MEASURES = ("cr", "coa", "coa-inf", "cof", "qire", "eoa", "eoa-inf", "entropy", "gain")
BIPARTITE_MEASURES = {"qire", "eoa", "eoa-inf"}


class UsageError(Exception):
    pass


def _round12(x):
    """Round every float to 12 significant digits, recursively."""
    if isinstance(x, float):
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: _round12(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round12(v) for v in x]
    return x


def _resolve_seed(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get(SEED_ENV)
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env, 0)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None


def _uint64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# measure


def _measure_one(name: str, state, cfg: roof.RoofConfig) -> dict:
    rho = as_density(state)
    if name in BIPARTITE_MEASURES and rho.n_subsystems != 2:
        raise UsageError(f"measure {name!r} needs a bipartite state, got dims {list(rho.dims)}")
    result = None
    if name == "cr":
        value = measures.relative_entropy_of_coherence(rho)
    elif name == "coa":
        result = roof.coherence_of_assistance(rho, cfg)
    elif name == "coa-inf":
        value = measures.regularized_coa(rho)
    elif name == "cof":
        result = roof.coherence_of_formation(rho, cfg)
    elif name == "qire":
        value = measures.qi_relative_entropy(rho)
    elif name == "eoa":
        result = roof.entanglement_of_assistance(rho, cfg)
    elif name == "eoa-inf":
        value = measures.regularized_eoa(rho)
    elif name == "entropy":
        value = measures.von_neumann_entropy(rho)
    else:
        value = measures.assistance_gain(rho)
    if result is not None:
        return {"value_bits": result.value, "converged": result.converged,
                "restarts_used": result.restarts_used, "ensemble_size": len(result.ensemble)}
    return {"value_bits": float(value), "converged": True, "restarts_used": 0}


def cmd_measure(args) -> int:
    names = []
    for item in args.measure or ["cr"]:
        for name in item.split(","):
            if name not in MEASURES:
                raise UsageError(f"unknown measure {name!r}; choose from {', '.join(MEASURES)}")
            names.append(name)
    seed = _resolve_seed(args.seed)
    cfg = roof.RoofConfig(restarts=args.restarts, tol=args.tol, seed=seed)
    tolerances = {"roof_tol": args.tol, "support_tol": measures.SUPPORT_TOL,
                  "clip_tol": measures.CLIP_TOL, "incoherent_tol": measures.INCOHERENT_TOL}
    reports = []
    for path in args.state:
        states = load_states(path)
        for k, state in enumerate(states):
            label = path if len(states) == 1 else f"{path}#{k}"
            for name in names:
                rec = {"input": label, "measure": name, "seed": seed, "tolerances": tolerances}
                rec.update(_measure_one(name, state, cfg))
                reports.append(rec)
    if args.report == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["input", "measure", "value_bits", "converged", "seed"])
        for r in reports:
            w.writerow([r["input"], r["measure"], f"{r['value_bits']:.12g}", str(r["converged"]).lower(), r["seed"]])
        _emit(buf.getvalue(), args.out)
    else:
        _emit(dumps(_round12({"command": "measure", "reports": reports})), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    seed = _resolve_seed(args.seed)
    names = list(SUITES) if args.suite == "all" else [args.suite]
    opts = SuiteOptions(cases=args.cases, seed=seed, restarts=args.restarts, tol=args.tol)
    results = [run_suite(name, opts) for name in names]
    ok = all(r.passed for r in results)
    if args.report == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["suite", "cases_run", "cases_passed", "worst_deviation", "passed", "seed"])
        for r in results:
            w.writerow([r.suite, r.cases_run, r.cases_passed, f"{r.worst_deviation:.12g}", str(r.passed).lower(), seed])
        _emit(buf.getvalue(), args.out)
    else:
        doc = {"command": "verify", "seed": seed, "passed": ok, "suites": [r.to_json() for r in results]}
        _emit(dumps(_round12(doc)), args.out)
    for r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.suite}: {r.cases_passed}/{r.cases_run} {status} (worst deviation {r.worst_deviation:.3g})",
              file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# protocol


def _node_json(node) -> dict:
    return {
        "party": node.party,
        "operation": node.operation,
        "outcome_index": node.outcome_index,
        "probability": node.probability,
        "path_probability": node.path_probability,
        "q_alpha": node.q_alpha,
        "success_prob": node.success_prob,
        "ancilla_prob": node.ancilla_prob,
        "deterministic_path": node.deterministic_path,
        "aborted": node.aborted,
        "post_state_digest": node.post_state_digest,
        "lift_deviation": node.lift_deviation,
    }


def cmd_protocol(args) -> int:
    if len(args.state) != 1:
        raise UsageError("protocol takes exactly one --state")
    if not args.protocol:
        raise UsageError("protocol needs --protocol PATH")
    states = load_states(args.state[0])
    if len(states) != 1:
        raise UsageError(f"{args.state[0]} holds {len(states)} states, protocol needs one")
    steps = load_protocol(args.protocol)
    rho = as_density(states[0])
    tree = run_protocol(rho, steps, b_slot=args.b_slot)
    doc = {
        "command": "protocol",
        "input": args.state[0],
        "protocol": args.protocol,
        "steps": len(steps),
        "tree": {path: _node_json(n) for path, n in tree.items()},
    }
    if args.monte_carlo:
        seed = _resolve_seed(args.seed)
        runs = args.monte_carlo
        counts = sample_protocol(tree, runs, rng_from_seed(seed))
        paths = {}
        for path, rec in counts.items():
            exact = tree[path].path_probability
            freq = rec["count"] / runs
            sigma = float(np.sqrt(max(exact * (1 - exact), 0.0) / runs))
            entry = {"count": rec["count"], "frequency": freq, "exact": exact, "sigma": sigma,
                     "within_3sigma": abs(freq - exact) <= 3 * sigma + 1e-15}
            if "ancilla_successes" in rec:
                entry["ancilla_successes"] = rec["ancilla_successes"]
                entry["ancilla_frequency"] = rec["ancilla_successes"] / rec["count"] if rec["count"] else None
            paths[path] = entry
        doc["monte_carlo"] = {"runs": runs, "seed": seed, "paths": paths}
    _emit(dumps(_round12(doc)), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# random


def cmd_random(args) -> int:
    try:
        dims = [int(d) for d in args.dims.split(",")]
    except ValueError:
        raise UsageError(f"--dims must be comma-separated integers, got {args.dims!r}") from None
    if not dims or any(d < 1 for d in dims):
        raise UsageError(f"--dims entries must be >= 1, got {args.dims!r}")
    d = int(np.prod(dims))
    if args.pure and args.rank not in (None, 1):
        raise UsageError("--pure states have rank 1")
    if args.rank is not None and not 1 <= args.rank <= d:
        raise UsageError(f"--rank {args.rank} exceeds the dimension {d}")
    seed = _resolve_seed(args.seed)
    rng = rng_from_seed(seed)
    states = []
    for _ in range(args.count):
        if args.pure:
            states.append(random_pure_state(rng, dims))
        else:
            states.append(random_density_matrix(rng, dims, args.rank))
    docs = [state_to_json(s) for s in states]
    _emit(dumps(docs[0] if len(docs) == 1 else {"states": docs}), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coherence-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_uint64, default=None,
                        help=f"base seed (default: ${SEED_ENV} or {DEFAULT_SEED})")
    common.add_argument("--report", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")

    m = sub.add_parser("measure", parents=[common], help="compute measures of state files")
    m.add_argument("--state", action="append", required=True, metavar="PATH")
    m.add_argument("--measure", action="append", metavar="NAME",
                   help=f"one of {', '.join(MEASURES)}; repeatable or comma-separated (default cr)")
    m.add_argument("--restarts", type=_positive, default=32)
    m.add_argument("--tol", type=float, default=1e-7)
    m.set_defaults(func=cmd_measure)

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", required=True, choices=[*SUITES, "all"])
    v.add_argument("--cases", type=_positive, default=None)
    v.add_argument("--restarts", type=_positive, default=None, help="roof restarts (suite default if unset)")
    v.add_argument("--tol", type=float, default=1e-7)
    v.set_defaults(func=cmd_verify)

    pr = sub.add_parser("protocol", parents=[common], help="simulate a protocol on a state")
    pr.add_argument("--state", action="append", required=True, metavar="PATH")
    pr.add_argument("--protocol", metavar="PATH")
    pr.add_argument("--monte-carlo", type=_positive, default=None, metavar="N")
    pr.add_argument("--b-slot", type=int, choices=(0, 1), default=1)
    pr.set_defaults(func=cmd_protocol)

    r = sub.add_parser("random", parents=[common], help="generate random states")
    r.add_argument("--dims", required=True, metavar="CSV")
    r.add_argument("--rank", type=_positive, default=None)
    r.add_argument("--pure", action="store_true")
    r.add_argument("--count", type=_positive, default=1)
    r.set_defaults(func=cmd_random)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StateParseError as exc:
        print(f"coherence-lab: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"coherence-lab: invariant violated [{exc.invariant}]: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (UsageError, ContractViolation) as exc:
        print(f"coherence-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
