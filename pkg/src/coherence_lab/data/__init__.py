"""Shipped fixtures and report schemas."""

from pathlib import Path

DATA_DIR = Path(__file__).parent
FIXTURES = DATA_DIR / "fixtures"
SCHEMAS = DATA_DIR / "schemas"
