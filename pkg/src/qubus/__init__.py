"""Weak cross-Kerr photonic logic: hybrid simulation, element gates and compilation."""

__version__ = "0.1.0"
