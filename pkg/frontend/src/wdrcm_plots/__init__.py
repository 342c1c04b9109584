"""Batch figure rendering for wdrcm experiment CSV outputs."""

__version__ = "0.1.0"

from .figures import (
    KINDS,
    REQUIRED_COLUMNS,
    FigureSpec,
    SchemaError,
    load_table,
    render,
)
