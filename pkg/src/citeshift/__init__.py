"""Entropy statistics for structural change in journal citation networks."""

__version__ = "0.1.0"
