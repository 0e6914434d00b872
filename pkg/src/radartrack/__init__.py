"""Continuous radar placement optimization for multi-target tracking."""

__version__ = "0.1.0"
