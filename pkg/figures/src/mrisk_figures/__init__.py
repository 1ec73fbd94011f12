"""Batch rendering of mrisk experiment CSVs into figures."""

__version__ = "0.1.0"

from .render import (FIGURE_KINDS, FigureSpec, SchemaError, load_records,
                     relative_errors, render, tuning_summary)

__all__ = ["FIGURE_KINDS", "FigureSpec", "SchemaError", "load_records",
           "relative_errors", "render", "tuning_summary"]
