"""Recommend conditional formats and charts for spreadsheet tables, with the
analytical semantics (user intent, data focus) that explain each choice."""

__version__ = "0.1.0"
