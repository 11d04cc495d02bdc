"""Automated N-version programming over a small SSA IR."""

__version__ = "0.1.0"
