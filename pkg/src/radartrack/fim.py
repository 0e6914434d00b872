"""Fisher information for target positions under the range models.

For a Gaussian range measurement with mean 2d and variance G d^4
(distance-dependent model), the information a single radar carries about
one target position is the rank-1 matrix

    J = (t - r)(t - r)^T * (4 / (G d^6) + 8 / d^4)

(first term from the mean sensitivity, second from the variance
sensitivity).  Under the constant-variance model (variance s2 at every
distance) only the mean term survives:

    J = (t - r)(t - r)^T * 4 / (s2 d^2)

Per-target information is additive over radars; distinct targets occupy
independent diagonal blocks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import TransitionModel
from .sensing import EPS_DISTANCE, MeasurementModel, target_positions

# logdet_objective is a total function: factorization failure maps to this.
LOGDET_FAIL = -1e12

# Relative diagonal jitter applied to W before inversion in the recursion
# forms.  W is exactly rank-deficient for constant-velocity noise; 1e-7
# keeps the raw D-term form (which subtracts O(1/jitter) matrices) accurate
# to ~1e-9 in float64 while perturbing the recursion result negligibly.
PFIM_W_JITTER = 1e-7


class FimError(ValueError):
    pass


@dataclass(frozen=True)
class FisherInfo:
    matrix: np.ndarray
    mode: str  # "sfim" (3M x 3M, positions) or "pfim" (6M x 6M, full state)


def default_jitter(matrix: np.ndarray) -> float:
    """Scale-aware diagonal jitter: 1e-9 * (1 + trace/dim)."""
    dim = matrix.shape[-1]
    return 1e-9 * (1.0 + float(np.trace(matrix)) / dim)


def sfim_coefficients(dist_sq: np.ndarray, mm: MeasurementModel) -> np.ndarray:
    """Scalar factor multiplying the pair outer product, per squared distance."""
    d2 = np.asarray(dist_sq, dtype=float)
    if mm.kind == "ccr":
        return 4.0 / (mm.ccr_variance * d2)
    if mm.gamma <= 0:
        raise FimError("distance-dependent information requires gamma > 0")
    d4 = d2 * d2
    return 4.0 / (mm.gamma * d4 * d2) + 8.0 / d4


def sfim_single(target_pos, radar_pos, gamma: float) -> np.ndarray:
    """3x3 information about one target position from one radar (ddr model)."""
    delta = np.asarray(target_pos, float) - np.asarray(radar_pos, float)
    d2 = float(delta @ delta)
    if d2 <= EPS_DISTANCE**2:
        raise FimError("coincident radar and target")
    mm = MeasurementModel(kind="ddr", gamma=gamma)
    return np.outer(delta, delta) * sfim_coefficients(d2, mm)


def sfim_blocks(tpos: np.ndarray, radars: np.ndarray,
                mm: MeasurementModel, clamp: bool = False) -> np.ndarray:
    """Per-target 3x3 blocks, radar contributions summed.

    ``tpos`` is (..., M, 3); ``radars`` is (..., N, >=3) with leading dims
    broadcastable against tpos's.  Returns (..., M, 3, 3).  With ``clamp``
    the pair distance is floored at EPS_DISTANCE instead of raising, which
    keeps sampled rollouts total.
    """
    rpos = np.asarray(radars, dtype=float)[..., :3]
    delta = tpos[..., :, None, :] - rpos[..., None, :, :]  # (..., M, N, 3)
    d2 = np.sum(delta * delta, axis=-1)
    if clamp:
        d2 = np.maximum(d2, EPS_DISTANCE**2)
    elif np.any(d2 <= EPS_DISTANCE**2):
        raise FimError("coincident radar and target")
    coef = sfim_coefficients(d2, mm)
    return np.einsum("...n,...ni,...nj->...ij", coef, delta, delta)


def sfim_multi(targets: np.ndarray, radars: np.ndarray, gamma: float) -> FisherInfo:
    """Block-diagonal 3M x 3M position information for stacked targets."""
    mm = MeasurementModel(kind="ddr", gamma=gamma)
    return sfim_multi_model(targets, radars, mm)


def sfim_multi_model(targets: np.ndarray, radars: np.ndarray,
                     mm: MeasurementModel) -> FisherInfo:
    tpos = target_positions(targets)
    blocks = sfim_blocks(tpos, radars, mm)
    m = tpos.shape[0]
    out = np.zeros((3 * m, 3 * m))
    for i in range(m):
        out[3 * i:3 * i + 3, 3 * i:3 * i + 3] = blocks[i]
    return FisherInfo(matrix=out, mode="sfim")


def embed_velocity(sfim_pos: FisherInfo) -> FisherInfo:
    """Lift 3M x 3M position information to the 6M x 6M full state.

    Velocity rows and columns are zero: range measurements carry no direct
    velocity information.
    """
    if sfim_pos.mode != "sfim":
        raise FimError("embed_velocity expects position-mode information")
    mat = sfim_pos.matrix
    m = mat.shape[0] // 3
    out = np.zeros((6 * m, 6 * m))
    for i in range(m):
        for j in range(m):
            out[6 * i:6 * i + 3, 6 * j:6 * j + 3] = \
                mat[3 * i:3 * i + 3, 3 * j:3 * j + 3]
    return FisherInfo(matrix=out, mode="pfim")


def embed_blocks(blocks: np.ndarray) -> np.ndarray:
    """(..., M, 3, 3) per-target position blocks -> (..., 6M, 6M) full state."""
    m = blocks.shape[-3]
    lead = blocks.shape[:-3]
    out = np.zeros(lead + (6 * m, 6 * m))
    for i in range(m):
        out[..., 6 * i:6 * i + 3, 6 * i:6 * i + 3] = blocks[..., i, :, :]
    return out


def _w_effective(tm: TransitionModel) -> np.ndarray:
    w = tm.w
    jitter = PFIM_W_JITTER * (1.0 + float(np.trace(w)) / w.shape[0])
    return w + jitter * np.eye(w.shape[0])


def _finish(mat: np.ndarray) -> FisherInfo:
    return FisherInfo(matrix=0.5 * (mat + mat.T), mode="pfim")


def pfim_step_simplified(j_k: FisherInfo, tm: TransitionModel,
                         expected_jd: np.ndarray) -> FisherInfo:
    """One recursion step: (W + A J^-1 A^T)^-1 + E[J_D].

    This is the Woodbury rearrangement of :func:`pfim_step_raw`; both share
    the same jittered W so the two code paths stay numerically comparable.
    """
    w = _w_effective(tm)
    try:
        j_inv = np.linalg.inv(j_k.matrix)
    except np.linalg.LinAlgError as exc:
        raise FimError("PFIM singular; check initialization") from exc
    inner = w + tm.a @ j_inv @ tm.a.T
    return _finish(np.linalg.inv(inner) + expected_jd)


def pfim_step_raw(j_k: FisherInfo, tm: TransitionModel,
                  expected_jd: np.ndarray) -> FisherInfo:
    """One recursion step via the D-term form D22 - D21 (J + D11)^-1 D12."""
    w = _w_effective(tm)
    try:
        w_inv = np.linalg.inv(w)
    except np.linalg.LinAlgError as exc:
        raise FimError("transition noise covariance singular") from exc
    d11 = tm.a.T @ w_inv @ tm.a
    d12 = -tm.a.T @ w_inv
    d21 = d12.T
    d22 = w_inv + expected_jd
    return _finish(d22 - d21 @ np.linalg.solve(j_k.matrix + d11, d12))


def logdet_objective(j, jitter: float | None = None) -> float:
    """log det(J + jitter*I) via Cholesky; -1e12 when factorization fails."""
    mat = j.matrix if isinstance(j, FisherInfo) else np.asarray(j, dtype=float)
    if jitter is None:
        jitter = default_jitter(mat)
    if jitter:
        mat = mat + jitter * np.eye(mat.shape[0])
    try:
        chol = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        return LOGDET_FAIL
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def logdet3_batch(blocks: np.ndarray) -> np.ndarray:
    """Closed-form log det for batches of symmetric 3x3 blocks.

    Applies the default trace-scaled jitter per block; non-positive
    determinants map to LOGDET_FAIL.
    """
    a = blocks[..., 0, 0]
    b = blocks[..., 1, 1]
    c = blocks[..., 2, 2]
    d = blocks[..., 0, 1]
    e = blocks[..., 0, 2]
    f = blocks[..., 1, 2]
    jit = 1e-9 * (1.0 + (a + b + c) / 3.0)
    a = a + jit
    b = b + jit
    c = c + jit
    det = a * (b * c - f * f) - d * (d * c - f * e) + e * (d * f - b * e)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(det > 0, np.log(np.maximum(det, 1e-300)), LOGDET_FAIL)
    return out
