"""Offline renderer for ssmclab trace/summary CSV exports."""

__version__ = "0.1.0"

from .render import (EmptyTraceError, FigureSpec, MissingColumnError,
                     PRESETS, read_csv_columns, render_figure, render_preset)

__all__ = ["EmptyTraceError", "FigureSpec", "MissingColumnError", "PRESETS",
           "read_csv_columns", "render_figure", "render_preset",
           "__version__"]
