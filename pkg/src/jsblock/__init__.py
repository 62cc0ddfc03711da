"""Trace-driven JavaScript blocking analysis."""

__version__ = "0.1.0"
