"""Solitary traveling waves of abcd Boussinesq systems."""

__version__ = "0.1.0"
