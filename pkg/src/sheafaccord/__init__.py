"""Sheaf-based consistency analysis of parameterized theories."""

__version__ = "0.1.0"
