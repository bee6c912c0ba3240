"""Recursive residue number system arithmetic on small lookup tables."""

__version__ = "0.1.0"
