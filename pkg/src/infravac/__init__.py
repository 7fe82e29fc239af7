"""Numerical workbench for infravacuum maps of the free massless scalar field."""

__version__ = "0.1.0"
