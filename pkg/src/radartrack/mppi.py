"""Sampling-based planner: Gaussian control perturbations, exponentiated
cost weighting, and cross-entropy adaptation with shrinkage.

Each sub-iteration samples control rows from the current Gaussian plan,
scores them with the horizon objective, softmax-weights them by negative
cost over the temperature, and refits the plan to the elite fraction with
a Ledoit-Wolf shrunk covariance.  The actuated command is the first step
of the final mean (receding horizon).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import objective
from .config import KinematicLimits, MpcParams, MppiParams
from .dynamics import TransitionModel
from .sensing import MeasurementModel

# Rollouts whose cost is non-finite are assigned this and lose any chance
# of joining the elite set.
LARGE_COST = 1e15


class MppiError(RuntimeError):
    pass


@dataclass(frozen=True)
class ControlPlan:
    mean: np.ndarray  # (K * 2N,), step-major then radar-major (u_a, u_wdot)
    cov: np.ndarray   # (K * 2N, K * 2N)


@dataclass(frozen=True)
class SampleBatch:
    controls: np.ndarray  # (n, K * 2N)
    costs: np.ndarray     # (n,)
    weights: np.ndarray   # (n,), nonnegative, sums to 1


def initial_covariance(params: MppiParams, horizon: int,
                       num_radars: int) -> np.ndarray:
    """Diagonal sampling covariance: per-channel stds tiled over the plan."""
    var = np.tile([params.std_accel**2, params.std_angaccel**2],
                  horizon * num_radars)
    return np.diag(var)


def shift_plan_mean(mean: np.ndarray, num_radars: int) -> np.ndarray:
    """Warm start between ticks: drop the first step, duplicate the last."""
    width = 2 * num_radars
    rows = np.asarray(mean, dtype=float).reshape(-1, width)
    return np.concatenate([rows[1:], rows[-1:]]).ravel()


def sample_controls(plan: ControlPlan, n: int,
                    rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. draws from N(plan.mean, plan.cov), one per row."""
    try:
        chol = np.linalg.cholesky(plan.cov)
    except np.linalg.LinAlgError as exc:
        raise MppiError("sampling covariance is not positive definite") from exc
    z = rng.standard_normal((n, plan.mean.size))
    return plan.mean + z @ chol.T


def compute_weights(costs: np.ndarray, temperature: float) -> np.ndarray:
    """Shift-invariant softmax of negative cost over the temperature."""
    if temperature <= 0:
        raise MppiError("temperature must be > 0")
    costs = np.asarray(costs, dtype=float)
    if not np.any(np.isfinite(costs)):
        raise MppiError("no feasible rollout")
    if not np.all(np.isfinite(costs)):
        raise MppiError("costs must be finite")
    shifted = -(costs - costs.min()) / temperature
    w = np.exp(shifted)
    return w / w.sum()


def ledoit_wolf(samples: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted Ledoit-Wolf shrinkage of the sample covariance.

    With normalized weights w and centered rows y_i:
        S      = sum_i w_i y_i y_i^T
        mu     = trace(S) / p
        b2     = sum_i w_i^2 ||y_i y_i^T - S||_F^2   (estimation error)
        d2     = ||S - mu I||_F^2                    (dispersion)
        rho    = min(1, b2 / d2), floored at 1e-6 so rank-deficient inputs
                 still come out positive definite
        out    = (1 - rho) S + rho mu I
    Uniform weights recover the standard estimator (b2 has the 1/n^2 factor
    through w_i^2).
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise MppiError("need at least 2 samples for covariance estimation")
    weights = np.asarray(weights, dtype=float)
    weights = weights / weights.sum()
    p = samples.shape[1]

    mean = weights @ samples
    centered = samples - mean
    s_mat = (weights[:, None] * centered).T @ centered
    s_mat = 0.5 * (s_mat + s_mat.T)
    mu = float(np.trace(s_mat)) / p

    d2 = float(np.sum((s_mat - mu * np.eye(p)) ** 2))
    if d2 <= 0.0:
        return s_mat  # already isotropic: shrinkage target reached
    outer_err = np.einsum("ni,nj->nij", centered, centered) - s_mat
    b2 = float(np.sum(weights**2 * np.sum(outer_err**2, axis=(1, 2))))
    rho = min(1.0, max(b2 / d2, 1e-6))
    return (1.0 - rho) * s_mat + rho * mu * np.eye(p)


def ledoit_wolf_intensity(samples: np.ndarray, weights: np.ndarray) -> float:
    """Shrinkage intensity alone (diagnostic; same formula as ledoit_wolf)."""
    samples = np.asarray(samples, dtype=float)
    weights = np.asarray(weights, dtype=float)
    weights = weights / weights.sum()
    p = samples.shape[1]
    centered = samples - weights @ samples
    s_mat = (weights[:, None] * centered).T @ centered
    mu = float(np.trace(s_mat)) / p
    d2 = float(np.sum((s_mat - mu * np.eye(p)) ** 2))
    if d2 <= 0.0:
        return 0.0
    outer_err = np.einsum("ni,nj->nij", centered, centered) - s_mat
    b2 = float(np.sum(weights**2 * np.sum(outer_err**2, axis=(1, 2))))
    return min(1.0, max(b2 / d2, 1e-6))


def _ensure_pd(cov: np.ndarray) -> np.ndarray:
    """Add an escalating trace-scaled floor until Cholesky succeeds."""
    p = cov.shape[0]
    floor = 1e-9 * (1.0 + float(np.trace(cov)) / p)
    for _ in range(8):
        try:
            np.linalg.cholesky(cov + floor * np.eye(p))
            return cov + floor * np.eye(p)
        except np.linalg.LinAlgError:
            floor *= 100.0
    raise MppiError("could not repair adapted covariance")


def num_elites(params: MppiParams, n: int) -> int:
    """Sample count kept by cross-entropy: the best (1 - quantile) fraction."""
    return max(2, int(round((1.0 - params.elite_quantile) * n)))


def adapt(plan: ControlPlan, batch: SampleBatch,
          params: MppiParams) -> ControlPlan:
    """Cross-entropy refit of the plan to the elite samples."""
    order = np.argsort(batch.costs, kind="stable")
    elite_idx = order[:num_elites(params, batch.costs.size)]
    elite = batch.controls[elite_idx]
    w = batch.weights[elite_idx]
    total = w.sum()
    if total <= 0:
        w = np.full(elite_idx.size, 1.0 / elite_idx.size)
    else:
        w = w / total
    mean = w @ elite
    cov = _ensure_pd(ledoit_wolf(elite, w))
    return ControlPlan(mean=mean, cov=cov)


def optimize(plan: ControlPlan, cost_fn, params: MppiParams,
             rng: np.random.Generator) -> ControlPlan:
    """Generic adaptive importance sampling loop over a cost callable.

    ``cost_fn`` maps an (n, p) control matrix to an (n,) cost vector.
    """
    for _ in range(params.num_subiters):
        controls = sample_controls(plan, params.num_samples, rng)
        costs = np.asarray(cost_fn(controls), dtype=float)
        costs = np.where(np.isfinite(costs), costs, LARGE_COST)
        weights = compute_weights(costs, params.temperature)
        plan = adapt(plan, SampleBatch(controls, costs, weights), params)
    return plan


def plan(radars: np.ndarray, sigma_sets, mpc: MpcParams, params: MppiParams,
         mm: MeasurementModel, tm: TransitionModel, mode: str,
         j_init: np.ndarray, dt: float, limits: KinematicLimits,
         rng: np.random.Generator,
         warm_mean: np.ndarray = None) -> ControlPlan:
    """Plan radar controls for the current belief horizon.

    The first 2N entries of the returned mean are the actuated command.
    """
    radars = np.asarray(radars, dtype=float)
    horizon = len(sigma_sets) - 1
    if horizon < 1:
        raise MppiError("need at least 2 sigma sets (initial + horizon)")
    width = 2 * radars.shape[0]
    mean0 = (np.zeros(horizon * width) if warm_mean is None
             else np.asarray(warm_mean, dtype=float).ravel().copy())
    if mean0.size != horizon * width:
        raise MppiError("warm-start mean has the wrong length")
    start = ControlPlan(mean=mean0,
                        cov=initial_covariance(params, horizon, radars.shape[0]))

    def cost_fn(controls):
        total, _, _, _ = objective.batch_total_cost(
            controls, radars, sigma_sets, mpc, mode, mm, tm, j_init, dt,
            limits)
        return total

    return optimize(start, cost_fn, params, rng)
