"""Lexicographic chemotherapy appointment scheduling: models, solvers, bounds and reports."""

__version__ = "0.1.0"
