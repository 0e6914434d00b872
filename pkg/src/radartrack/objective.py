"""Receding-horizon cost: information reward plus separation penalties.

The horizon covers K+1 configurations: the pre-control state plus the K
post-control states produced by direct shooting through the radar
kinematics.  MPPI minimizes the total, so the information term enters as
a discounted negative log-determinant; penalties count discounted
boundary violations (closed boundary: distance equal to the radius
counts).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fim
from ._kernels import horizon_cost_kernel
from .ckf import SigmaSet
from .config import KinematicLimits, MpcParams
from .dynamics import TransitionModel, step_radar_batch
from .sensing import MeasurementModel


class ObjectiveError(ValueError):
    pass


@dataclass(frozen=True)
class CostBreakdown:
    total: float
    traj: float
    r2r: float
    r2t: float


def rollout_radars(radars0: np.ndarray, controls: np.ndarray, dt: float,
                   limits: KinematicLimits) -> np.ndarray:
    """Direct shooting: (S, K*2N) flat control rows -> (S, K+1, N, 6) states.

    Row layout is step-major, radar-minor: entry (t, n) holds
    (u_a, u_wdot) at flat offsets (t*N + n)*2.
    """
    radars0 = np.asarray(radars0, dtype=float)
    controls = np.asarray(controls, dtype=float)
    n_radars = radars0.shape[0]
    s_count, flat = controls.shape
    if flat % (2 * n_radars):
        raise ObjectiveError("control row length must be K * 2N")
    k = flat // (2 * n_radars)
    if k < 1:
        raise ObjectiveError("horizon must be ≥ 1 step")
    u = controls.reshape(s_count, k, n_radars, 2)
    traj = np.empty((s_count, k + 1, n_radars, 6))
    traj[:, 0] = radars0
    for t in range(k):
        traj[:, t + 1] = step_radar_batch(traj[:, t], u[:, t], dt, limits)
    return traj


def _sigma_point_positions(sigma_sets: list[SigmaSet]) -> np.ndarray:
    """(K1, P, M, 3) target positions from a per-step sigma set list."""
    return np.stack([s.target_positions() for s in sigma_sets])


def _discounts(count: int, discount: float) -> np.ndarray:
    # 0^0 == 1 by convention: a zero discount keeps only the first term.
    return np.array([discount**t for t in range(count)])


def _traj_and_r2t_batch(radar_traj: np.ndarray, sigma_sets: list[SigmaSet],
                        mpc: MpcParams, mm: MeasurementModel):
    points = _sigma_point_positions(sigma_sets)
    disc = _discounts(len(sigma_sets), mpc.discount)
    is_ccr = mm.kind == "ccr"
    ccr_var = mm.ccr_variance if is_ccr else 1.0
    return horizon_cost_kernel(
        np.ascontiguousarray(radar_traj[..., :3]),
        np.ascontiguousarray(points), disc, is_ccr, mm.gamma, ccr_var,
        mpc.r2t_m)


def _logdet_psd_batch(mats: np.ndarray) -> np.ndarray:
    """Default-jittered log det for a (S, d, d) stack; failures -> LOGDET_FAIL."""
    dim = mats.shape[-1]
    traces = np.trace(mats, axis1=-2, axis2=-1)
    jit = 1e-9 * (1.0 + traces / dim)
    shifted = mats + jit[:, None, None] * np.eye(dim)
    out = np.empty(mats.shape[0])
    try:
        chols = np.linalg.cholesky(shifted)
        out[:] = 2.0 * np.sum(np.log(np.diagonal(chols, axis1=-2, axis2=-1)),
                              axis=-1)
    except np.linalg.LinAlgError:
        for i, mat in enumerate(shifted):
            try:
                chol = np.linalg.cholesky(mat)
                out[i] = 2.0 * float(np.sum(np.log(np.diag(chol))))
            except np.linalg.LinAlgError:
                out[i] = fim.LOGDET_FAIL
    return out


def _pfim_traj_batch(radar_traj: np.ndarray, sigma_sets: list[SigmaSet],
                     mpc: MpcParams, mm: MeasurementModel,
                     tm: TransitionModel, j_init: np.ndarray) -> np.ndarray:
    """Thread the simplified information recursion per sample.

    The recursion state is shared across sigma points; the belief enters
    through the point-averaged data term.
    """
    s_count = radar_traj.shape[0]
    dim = tm.dim
    w_eff = fim._w_effective(tm)
    j_mat = np.broadcast_to(j_init, (s_count, dim, dim)).copy()
    disc = _discounts(len(sigma_sets), mpc.discount)
    cost = np.zeros(s_count)
    for t, sig in enumerate(sigma_sets):
        tpos = sig.target_positions()  # (P, M, 3)
        blocks = fim.sfim_blocks(tpos[None], radar_traj[:, t][:, None],
                                 mm, clamp=True)  # (S, P, M, 3, 3)
        e_jd = fim.embed_blocks(blocks.mean(axis=1))  # (S, 6M, 6M)
        j_inv = np.linalg.inv(j_mat)
        inner = w_eff + np.einsum("ij,sjk,lk->sil", tm.a, j_inv, tm.a)
        j_mat = np.linalg.inv(inner) + e_jd
        j_mat = 0.5 * (j_mat + np.transpose(j_mat, (0, 2, 1)))
        cost += disc[t] * (-_logdet_psd_batch(j_mat))
    return cost


def _as_traj_array(radar_traj) -> np.ndarray:
    arr = np.asarray(radar_traj, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 6:
        raise ObjectiveError("radar trajectory must be (steps, N, 6)")
    return arr


def traj_cost(radar_traj, sigma_sets: list[SigmaSet], mpc: MpcParams,
              mode: str, mm: MeasurementModel, tm: TransitionModel = None,
              j_init: np.ndarray = None) -> float:
    """Discounted negative expected information over one radar trajectory."""
    arr = _as_traj_array(radar_traj)[None]
    if len(sigma_sets) != arr.shape[1]:
        raise ObjectiveError("horizon lengths disagree")
    if mode == "sfim":
        traj, _ = _traj_and_r2t_batch(arr, sigma_sets, mpc, mm)
        return float(traj[0])
    if mode == "pfim":
        if tm is None or j_init is None:
            raise ObjectiveError("pfim mode requires tm and j_init")
        return float(_pfim_traj_batch(arr, sigma_sets, mpc, mm, tm, j_init)[0])
    raise ObjectiveError(f"unknown fim mode {mode!r}")


def r2t_penalty(radar_traj, sigma_sets: list[SigmaSet], mpc: MpcParams) -> float:
    """Discounted expected count of radar-target pairs at or inside r2t_m."""
    arr = _as_traj_array(radar_traj)[None]
    if len(sigma_sets) != arr.shape[1]:
        raise ObjectiveError("horizon lengths disagree")
    # The kernel also produces the information term; only the count is used.
    mm = MeasurementModel(kind="ddr", gamma=1.0)
    _, r2t = _traj_and_r2t_batch(arr, sigma_sets, mpc, mm)
    return float(r2t[0])


def _r2r_batch(radar_traj: np.ndarray, mpc: MpcParams) -> np.ndarray:
    pos = radar_traj[..., :3]  # (S, K1, N, 3)
    n = pos.shape[2]
    if n < 2:
        return np.zeros(pos.shape[0])
    diff = pos[:, :, :, None, :] - pos[:, :, None, :, :]
    dist_sq = np.sum(diff * diff, axis=-1)  # (S, K1, N, N)
    iu, ju = np.triu_indices(n, k=1)
    viol = (dist_sq[:, :, iu, ju] <= mpc.r2r_m**2).sum(axis=-1)  # (S, K1)
    disc = _discounts(radar_traj.shape[1], mpc.discount)
    # Sequential accumulation keeps the reduction bit-reproducible against
    # a step-ordered enumeration of the same counts.
    out = np.zeros(radar_traj.shape[0])
    for t in range(radar_traj.shape[1]):
        out += disc[t] * viol[:, t]
    return out


def r2r_penalty(radar_traj, mpc: MpcParams) -> float:
    """Discounted count of unordered radar pairs at or inside r2r_m."""
    return float(_r2r_batch(_as_traj_array(radar_traj)[None], mpc)[0])


def batch_total_cost(controls: np.ndarray, radars0: np.ndarray,
                     sigma_sets: list[SigmaSet], mpc: MpcParams, mode: str,
                     mm: MeasurementModel, tm: TransitionModel,
                     j_init: np.ndarray, dt: float,
                     limits: KinematicLimits):
    """Evaluate the full objective for a batch of flat control rows.

    Returns (total, traj, r2r, r2t) arrays of shape (S,).
    """
    controls = np.atleast_2d(np.asarray(controls, dtype=float))
    if not np.all(np.isfinite(controls)):
        raise ObjectiveError("controls must be finite")
    radar_traj = rollout_radars(radars0, controls, dt, limits)
    if len(sigma_sets) != radar_traj.shape[1]:
        raise ObjectiveError(
            f"need {radar_traj.shape[1]} sigma sets, got {len(sigma_sets)}")
    if mode == "sfim":
        traj, r2t = _traj_and_r2t_batch(radar_traj, sigma_sets, mpc, mm)
    elif mode == "pfim":
        _, r2t = _traj_and_r2t_batch(radar_traj, sigma_sets, mpc, mm)
        traj = _pfim_traj_batch(radar_traj, sigma_sets, mpc, mm, tm, j_init)
    else:
        raise ObjectiveError(f"unknown fim mode {mode!r}")
    r2r = _r2r_batch(radar_traj, mpc)
    total = traj + mpc.alpha_r2r * r2r + mpc.alpha_r2t * r2t
    return total, traj, r2r, r2t


def total_cost(controls: np.ndarray, radars0: np.ndarray,
               sigma_sets: list[SigmaSet], mpc: MpcParams, mode: str,
               mm: MeasurementModel, tm: TransitionModel,
               j_init: np.ndarray, dt: float,
               limits: KinematicLimits) -> CostBreakdown:
    """Single-plan convenience wrapper around :func:`batch_total_cost`."""
    controls = np.asarray(controls, dtype=float).ravel()[None]
    total, traj, r2r, r2t = batch_total_cost(
        controls, radars0, sigma_sets, mpc, mode, mm, tm, j_init, dt, limits)
    return CostBreakdown(total=float(total[0]), traj=float(traj[0]),
                         r2r=float(r2r[0]), r2t=float(r2t[0]))
