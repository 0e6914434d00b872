"""Target constant-velocity transitions and radar unicycle kinematics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import KinematicLimits


@dataclass(frozen=True)
class TransitionModel:
    """Linear transition x' = A x + w, w ~ N(0, W), for M stacked targets.

    ``noise_factor`` satisfies L L^T = W exactly (eigen fallback when the
    Cholesky factorization rejects the rank-deficient W).
    """

    a_single: np.ndarray
    w_single: np.ndarray
    a: np.ndarray
    w: np.ndarray
    noise_factor: np.ndarray
    dt: float
    sigma_w: float
    num_targets: int

    @property
    def dim(self) -> int:
        return 6 * self.num_targets


def psd_factor(mat: np.ndarray) -> np.ndarray:
    """Factor L with L L^T = mat for symmetric PSD mat.

    Tries Cholesky first; on rank deficiency falls back to an
    eigendecomposition with negative eigenvalues clipped to zero, which is
    exact for the rank-3 constant-velocity noise blocks (and gives L = 0
    for W = 0).
    """
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        eigval, eigvec = np.linalg.eigh(mat)
        return eigvec * np.sqrt(np.clip(eigval, 0.0, None))


def build_transition(dt: float, sigma_w: float, num_targets: int) -> TransitionModel:
    if dt < 0:
        raise ValueError("dt must be ≥ 0")
    if sigma_w < 0:
        raise ValueError("sigma_w must be ≥ 0")
    eye3 = np.eye(3)
    a_single = np.eye(6)
    a_single[:3, 3:] = dt * eye3
    w_dt = np.vstack([0.5 * dt**2 * eye3, dt * eye3])  # 6x3
    w_single = w_dt @ (sigma_w**2 * eye3) @ w_dt.T
    a = np.kron(np.eye(num_targets), a_single)
    w = np.kron(np.eye(num_targets), w_single)
    return TransitionModel(a_single=a_single, w_single=w_single, a=a, w=w,
                           noise_factor=psd_factor(w), dt=dt, sigma_w=sigma_w,
                           num_targets=num_targets)


def step_targets(tm: TransitionModel, x: np.ndarray,
                 rng: np.random.Generator) -> np.ndarray:
    """Advance the stacked target state one step with process noise."""
    x = np.asarray(x, dtype=float)
    if x.shape != (tm.dim,):
        raise ValueError(f"state must have shape ({tm.dim},)")
    return tm.a @ x + tm.noise_factor @ rng.standard_normal(tm.dim)


def wrap_angle(theta):
    """Wrap angles to (-pi, pi]."""
    wrapped = np.mod(theta, 2.0 * np.pi)
    return np.where(wrapped > np.pi, wrapped - 2.0 * np.pi, wrapped)


def step_radar_batch(states: np.ndarray, controls: np.ndarray, dt: float,
                     limits: KinematicLimits) -> np.ndarray:
    """Second-order unicycle Euler step for any leading batch shape.

    ``states[..., :]`` is (x, y, z, theta, v, omega); ``controls[..., :]``
    is (u_a, u_wdot).  Controls are clipped before integration; the
    resulting v and omega are clipped after; z never changes.
    """
    states = np.asarray(states, dtype=float)
    controls = np.asarray(controls, dtype=float)
    ua = np.clip(controls[..., 0], limits.ua_min, limits.ua_max)
    uw = np.clip(controls[..., 1], limits.uw_min, limits.uw_max)

    theta = states[..., 3]
    v = states[..., 4]
    omega = states[..., 5]

    out = np.empty_like(states)
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    out[..., 0] = states[..., 0] + cos_t * v * dt + 0.5 * cos_t * dt**2 * ua
    out[..., 1] = states[..., 1] + sin_t * v * dt + 0.5 * sin_t * dt**2 * ua
    out[..., 2] = states[..., 2]
    out[..., 3] = wrap_angle(theta + omega * dt + 0.5 * dt**2 * uw)
    out[..., 4] = np.clip(v + dt * ua, limits.v_min, limits.v_max)
    out[..., 5] = np.clip(omega + dt * uw, limits.omega_min, limits.omega_max)
    return out


def step_radar(state: np.ndarray, control: np.ndarray, dt: float,
               limits: KinematicLimits) -> np.ndarray:
    """Single-radar convenience wrapper around :func:`step_radar_batch`."""
    state = np.asarray(state, dtype=float)
    if state.shape != (6,):
        raise ValueError("radar state must have shape (6,)")
    return step_radar_batch(state, np.asarray(control, dtype=float), dt, limits)
