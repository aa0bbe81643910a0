"""Batch figure renderer for the digraphon-mfg CSV experiment logs."""

from .render import DEFAULT_ALPHAS, KINDS, FigureSpec, SchemaError, read_columns, render

__version__ = "0.1.0"
