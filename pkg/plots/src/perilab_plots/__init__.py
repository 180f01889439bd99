"""Deterministic figure regeneration from perilab sweep CSV files."""

from .figures import KINDS, FigureSpec, render
from .schema import COLUMNS, Row, SchemaError, load_rows

__version__ = "0.1.0"
