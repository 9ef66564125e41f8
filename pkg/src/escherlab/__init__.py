"""Tabular ESCHER, CFR and Monte-Carlo CFR solvers for small imperfect-information games."""

__version__ = "0.1.0"
