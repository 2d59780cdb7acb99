"""Simultaneous inference against the overall mean in one-way layouts."""

__version__ = "0.1.0"
