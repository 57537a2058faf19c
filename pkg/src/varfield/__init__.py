"""Numerical verification toolkit for Caratheodory-type field theories of the calculus of variations."""
__version__ = "0.1.0"
