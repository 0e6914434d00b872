"""Cubature Kalman filter over the stacked target state.

Third-order spherical cubature: 2d equally weighted points at
mean +/- sqrt(d) * (Cholesky column).  The transition is linear, so the
predict step uses the exact closed form; the range-measurement update is
the standard additive-noise cubature correction with the noise covariance
evaluated at the predicted mean.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import TransitionModel
from .fim import embed_blocks, sfim_blocks
from .sensing import (MeasurementModel, pair_distances,
                      range_variance_vector)


class CkfError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True)
class SigmaSet:
    points: np.ndarray  # (2d, d)
    weight: float       # 1 / (2d)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def target_positions(self) -> np.ndarray:
        """(2d, M, 3) per-point target positions for a 6M state."""
        return self.points.reshape(self.points.shape[0], -1, 6)[:, :, :3]


def _chol_with_jitter(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    dim = cov.shape[0]
    jitter = 1e-9 * float(np.trace(cov)) / dim
    try:
        return np.linalg.cholesky(cov + jitter * np.eye(dim))
    except np.linalg.LinAlgError as exc:
        raise CkfError("belief covariance is not positive definite") from exc


def sigma_points(belief: GaussianBelief) -> SigmaSet:
    mean = np.asarray(belief.mean, dtype=float)
    cov = np.asarray(belief.cov, dtype=float)
    d = mean.size
    chol = _chol_with_jitter(cov)
    offsets = np.sqrt(d) * chol.T  # row i = sqrt(d) * column i of chol
    points = np.concatenate([mean + offsets, mean - offsets], axis=0)
    return SigmaSet(points=points, weight=1.0 / (2 * d))


def predict(belief: GaussianBelief, tm: TransitionModel) -> GaussianBelief:
    mean = tm.a @ belief.mean
    cov = tm.a @ belief.cov @ tm.a.T + tm.w
    return GaussianBelief(mean=mean, cov=0.5 * (cov + cov.T))


def cubature_update(belief: GaussianBelief, z: np.ndarray, h_fn,
                    noise_cov: np.ndarray) -> GaussianBelief:
    """Additive-noise cubature correction with measurement map ``h_fn``.

    ``h_fn`` maps a (2d, d) point matrix to (2d, m) predicted measurements.
    """
    sig = sigma_points(belief)
    z = np.asarray(z, dtype=float)
    preds = np.asarray(h_fn(sig.points), dtype=float)
    z_hat = preds.mean(axis=0)
    dz = preds - z_hat
    dx = sig.points - belief.mean
    s_mat = sig.weight * dz.T @ dz + noise_cov
    try:
        np.linalg.cholesky(0.5 * (s_mat + s_mat.T))
    except np.linalg.LinAlgError as exc:
        raise CkfError("innovation covariance singular") from exc
    cross = sig.weight * dx.T @ dz
    gain = np.linalg.solve(s_mat.T, cross.T).T
    mean = belief.mean + gain @ (z - z_hat)
    cov = belief.cov - gain @ s_mat @ gain.T
    return GaussianBelief(mean=mean, cov=0.5 * (cov + cov.T))


def update(belief: GaussianBelief, z: np.ndarray, radars: np.ndarray,
           mm: MeasurementModel) -> GaussianBelief:
    """Range-measurement correction under the assumed noise model."""
    def h_fn(points):
        pos = points.reshape(points.shape[0], -1, 6)[:, :, :3]
        dist = np.stack([pair_distances(radars, p) for p in pos])
        return 2.0 * dist.reshape(points.shape[0], -1)

    noise = np.diag(range_variance_vector(mm, radars, belief.mean))
    return cubature_update(belief, z, h_fn, noise)


def propagate(belief: GaussianBelief, tm: TransitionModel,
              horizon: int) -> list[SigmaSet]:
    """Sigma sets of the belief pushed 1..horizon steps ahead.

    Each step applies the exact linear predict and regenerates points from
    the grown covariance.
    """
    if horizon < 1:
        raise ValueError("horizon must be ≥ 1")
    sets = []
    current = belief
    for _ in range(horizon):
        current = predict(current, tm)
        sets.append(sigma_points(current))
    return sets


def expected_jd(sig: SigmaSet, radars: np.ndarray, mm: MeasurementModel) -> np.ndarray:
    """Belief-averaged full-state measurement information, E[J_D].

    Equal-weight average over the sigma points of the velocity-embedded
    per-target information blocks.
    """
    tpos = sig.target_positions()          # (2d, M, 3)
    blocks = sfim_blocks(tpos, radars, mm)  # (2d, M, 3, 3)
    return embed_blocks(blocks.mean(axis=0))
