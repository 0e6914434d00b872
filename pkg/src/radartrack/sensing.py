"""Received power, range measurement statistics, and measurement sampling.

Measurement vectors are target-major: entry ``i`` pairs target
``m = i // N`` with radar ``n = i % N``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RadarParams

# Pairs closer than this are treated as a modeling error: collision
# constraints keep real geometries far away from the singularity.
EPS_DISTANCE = 1e-6


class SensingError(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementModel:
    """Range-noise model: distance-dependent (ddr) or constant (ccr).

    ``gamma`` is the range-variance constant (variance = gamma * d^4 under
    ddr).  gamma = 0 is the noiseless limit used by degenerate tests.  The
    ccr variant uses the fixed variance gamma * r2t_m^4 at every distance.
    """

    kind: str
    gamma: float
    r2t_m: float = 0.0

    def __post_init__(self):
        if self.kind not in ("ddr", "ccr"):
            raise SensingError(f"unknown measurement model kind {self.kind!r}")
        if self.gamma < 0:
            raise SensingError("gamma must be ≥ 0")
        if self.kind == "ccr" and self.r2t_m <= 0:
            raise SensingError("ccr model requires r2t_m > 0")

    @property
    def ccr_variance(self) -> float:
        return self.gamma * self.r2t_m**4


def received_power(rp: RadarParams, radar_pos, target_pos) -> float:
    """Radar-equation return power for one radar-target pair."""
    d = float(np.linalg.norm(np.asarray(target_pos, float)
                             - np.asarray(radar_pos, float)))
    if d <= EPS_DISTANCE:
        raise SensingError("coincident radar and target")
    lam = rp.wavelength_m
    return (rp.transmit_power_w * rp.gain_tx * rp.gain_rx * lam**2
            * rp.rcs_m2) / ((4 * np.pi) ** 3 * d**4 * rp.loss)


def range_mean(radar_pos, target_pos) -> float:
    """Round-trip range: twice the Euclidean distance."""
    return 2.0 * float(np.linalg.norm(np.asarray(target_pos, float)
                                      - np.asarray(radar_pos, float)))


def range_variance(mm: MeasurementModel, radar_pos, target_pos) -> float:
    if mm.kind == "ccr":
        return mm.ccr_variance
    d = float(np.linalg.norm(np.asarray(target_pos, float)
                             - np.asarray(radar_pos, float)))
    if d <= EPS_DISTANCE:
        raise SensingError("coincident radar and target")
    return mm.gamma * d**4


def target_positions(targets: np.ndarray) -> np.ndarray:
    """(M, 3) positions from a stacked 6M target state."""
    targets = np.asarray(targets, dtype=float)
    if targets.ndim != 1 or targets.size % 6:
        raise SensingError("target stack length must be a multiple of 6")
    return targets.reshape(-1, 6)[:, :3]


def pair_distances(radars: np.ndarray, tpos: np.ndarray) -> np.ndarray:
    """(M, N) distances between radar rows and target positions."""
    rpos = np.asarray(radars, dtype=float)[:, :3]
    diff = tpos[:, None, :] - rpos[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def range_mean_vector(radars: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Target-major NM vector of round-trip ranges."""
    return 2.0 * pair_distances(radars, target_positions(targets)).ravel()


def range_variance_vector(mm: MeasurementModel, radars: np.ndarray,
                          targets: np.ndarray) -> np.ndarray:
    dist = pair_distances(radars, target_positions(targets))
    if np.any(dist <= EPS_DISTANCE):
        raise SensingError("coincident radar and target")
    if mm.kind == "ccr":
        return np.full(dist.size, mm.ccr_variance)
    return (mm.gamma * dist**4).ravel()


def sample_measurements(mm_truth: MeasurementModel, radars: np.ndarray,
                        targets: np.ndarray,
                        rng: np.random.Generator) -> np.ndarray:
    """Draw one independent Gaussian range sample per radar-target pair."""
    mean = range_mean_vector(radars, targets)
    var = range_variance_vector(mm_truth, radars, targets)
    return mean + np.sqrt(var) * rng.standard_normal(mean.size)
