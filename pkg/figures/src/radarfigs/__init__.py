"""Figures for radar placement campaign outputs (metrics.json + trace CSVs)."""

__version__ = "0.1.0"
