"""Readers for the simulator's campaign outputs.

This package only consumes the documented file formats: the campaign
``metrics.json`` and per-trial ``trial_NNN.csv`` traces.  Trace columns are
located by header name, never by position.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class InputError(ValueError):
    pass


def load_metrics(input_dir) -> dict:
    path = Path(input_dir) / "metrics.json"
    if not path.is_file():
        raise InputError(f"no metrics.json in {input_dir}")
    try:
        metrics = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed metrics.json: {exc}") from exc
    for key in ("rmse_mean", "hdi_lo", "hdi_hi", "ecdf_values",
                "ecdf_fractions", "config", "derived"):
        if key not in metrics:
            raise InputError(f"metrics.json missing key {key!r}")
    if not metrics["rmse_mean"]:
        raise InputError("empty campaign: no per-step statistics")
    return metrics


class Trace:
    """Column-addressable view of one trial CSV."""

    def __init__(self, header: list[str], data: np.ndarray):
        self._index = {name: i for i, name in enumerate(header)}
        self._data = data

    @property
    def num_steps(self) -> int:
        return self._data.shape[0]

    def column(self, name: str) -> np.ndarray:
        if name not in self._index:
            raise InputError(f"trace has no column {name!r}")
        return self._data[:, self._index[name]]

    def positions(self, prefix: str, count: int, step: int) -> np.ndarray:
        """(count, 3) xyz positions, e.g. prefix='radar' or 'true_t'."""
        out = np.empty((count, 3))
        for i in range(count):
            for j, axis in enumerate(("x", "y", "z")):
                out[i, j] = self.column(f"{prefix}{i}_{axis}")[step]
        return out


def load_trace(input_dir, trial: int) -> Trace:
    path = Path(input_dir) / f"trial_{trial:03d}.csv"
    if not path.is_file():
        raise InputError(f"no trace file {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    if not rows:
        raise InputError(f"trace file {path} has no steps")
    return Trace(header, np.asarray(rows))
