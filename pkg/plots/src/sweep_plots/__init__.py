"""Batch figure generation for solver sweep and conservation CSV output."""

__version__ = "0.1.0"

from .figures import (  # noqa: F401
    FIGURE_KINDS,
    FigureSpec,
    SchemaError,
    fit_loglog_slope,
    plot,
    read_table,
)
