"""Offline figures and pass/fail summaries from experiment-runner outputs.

Strictly downstream: reads only the documented CSV/manifest schemas and
never recomputes any of the underlying quantities.
"""

__version__ = "0.1.0"

from .schemas import Bundle, NoDataError, SchemaError, discover, load_table
from .figures import render_figures
from .summary import summarize

__all__ = [
    "Bundle",
    "NoDataError",
    "SchemaError",
    "discover",
    "load_table",
    "render_figures",
    "summarize",
]
