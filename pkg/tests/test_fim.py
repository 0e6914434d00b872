import math

import numpy as np
import pytest

from radartrack.config import gamma_const, noise_power
from radartrack.dynamics import TransitionModel, build_transition, psd_factor
from radartrack.fim import (FimError, FisherInfo, LOGDET_FAIL, embed_velocity,
                            logdet_objective, logdet3_batch,
                            pfim_step_raw, pfim_step_simplified, sfim_multi,
                            sfim_multi_model, sfim_single)
from radartrack.sensing import MeasurementModel


# ---------------------------------------------------------------------------
# oracle: general Gaussian FIM with central finite differences
#
# For independent scalar measurements z_n ~ N(mu_n(theta), var_n(theta)):
#   J = sum_n  dmu_n dmu_n^T / var_n  +  0.5 * dvar_n dvar_n^T / var_n^2
# with the derivatives estimated numerically.  This never touches the
# closed-form production code.

def numeric_gaussian_fim(target, radars, gamma):
    target = np.asarray(target, dtype=float)
    radars = np.asarray(radars, dtype=float)

    def mu_var(theta):
        d = np.linalg.norm(theta - radars, axis=1)
        return 2.0 * d, gamma * d**4

    fim = np.zeros((3, 3))
    grads_mu = np.zeros((len(radars), 3))
    grads_var = np.zeros((len(radars), 3))
    d0 = np.linalg.norm(target - radars, axis=1)
    h = 1e-4 * d0.min()
    for i in range(3):
        step = np.zeros(3)
        step[i] = h
        mu_p, var_p = mu_var(target + step)
        mu_m, var_m = mu_var(target - step)
        grads_mu[:, i] = (mu_p - mu_m) / (2 * h)
        grads_var[:, i] = (var_p - var_m) / (2 * h)
    _, var0 = mu_var(target)
    for n in range(len(radars)):
        fim += np.outer(grads_mu[n], grads_mu[n]) / var0[n]
        fim += 0.5 * np.outer(grads_var[n], grads_var[n]) / var0[n] ** 2
    return fim


def table_gamma():
    from radartrack.config import RadarParams
    rp = RadarParams(carrier_freq_hz=1e8, transmit_power_w=1000.0,
                     gain_tx=200.0, gain_rx=200.0, loss=1.0, rcs_m2=1.0,
                     snr_db=-20.0, snr_ref_radius_m=500.0)
    return gamma_const(rp, noise_power(rp, 4))


def fake_tm(a: np.ndarray, w: np.ndarray) -> TransitionModel:
    """Minimal stand-in for recursion tests with custom A, W."""
    return TransitionModel(a_single=a, w_single=w, a=a, w=w,
                           noise_factor=psd_factor(w), dt=0.0, sigma_w=0.0,
                           num_targets=max(1, a.shape[0] // 6))


def random_spd(rng, dim, scale=1.0):
    m = rng.standard_normal((dim, dim))
    return scale * (m @ m.T + dim * np.eye(dim))


# ---------------------------------------------------------------------------
# sfim

def test_sfim_single_axis_aligned_value():
    j = sfim_single(np.array([100.0, 0.0, 0.0]), np.zeros(3), gamma=1.0)
    assert j[0, 0] == pytest.approx(8.0004e-4, rel=1e-12)
    assert np.count_nonzero(j) == 1


def test_sfim_single_rank_one_structure():
    rng = np.random.default_rng(3)
    for _ in range(10):
        target = rng.uniform(-300, 300, 3)
        radar = rng.uniform(-300, 300, 3)
        delta = target - radar
        j = sfim_single(target, radar, gamma=1e-8)
        perp = np.cross(delta, rng.standard_normal(3))
        assert np.allclose(j @ perp, 0.0, atol=1e-8 * np.linalg.norm(j))
        assert np.trace(j) > 0


def test_sfim_single_matches_numeric_gaussian_fim():
    gamma = table_gamma()
    rng = np.random.default_rng(20)
    for _ in range(20):
        d = rng.uniform(50.0, 2000.0)
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        radar = rng.uniform(-100, 100, 3)
        target = radar + d * direction
        ours = sfim_single(target, radar, gamma)
        oracle = numeric_gaussian_fim(target, radar[None, :], gamma)
        rel = np.linalg.norm(ours - oracle) / np.linalg.norm(oracle)
        assert rel < 1e-5


def test_sfim_single_rejects_coincidence():
    with pytest.raises(FimError):
        sfim_single(np.zeros(3), np.zeros(3), gamma=1.0)


def test_sfim_scale_law():
    rng = np.random.default_rng(8)
    gamma = 2.5e-9
    delta = rng.uniform(-50, 50, 3)
    radar = rng.uniform(-20, 20, 3)
    for s in (0.5, 2.0, 7.0):
        target = radar + s * delta
        direct = sfim_single(target, radar, gamma)
        d = np.linalg.norm(delta)
        manual = np.outer(delta, delta) * s**2 * (
            4.0 / (gamma * (s * d) ** 6) + 8.0 / (s * d) ** 4)
        assert np.allclose(direct, manual, rtol=1e-10)


def test_sfim_rotation_equivariance():
    rng = np.random.default_rng(14)
    gamma = table_gamma()
    for _ in range(10):
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        radar = rng.uniform(-200, 200, 3)
        target = radar + rng.uniform(100, 400) * rng.standard_normal(3)
        j = sfim_single(target, radar, gamma)
        j_rot = sfim_single(q @ target, q @ radar, gamma)
        assert np.allclose(j_rot, q @ j @ q.T, atol=1e-9 * np.linalg.norm(j))


def test_sfim_multi_degenerate_equals_single():
    gamma = table_gamma()
    target = np.array([10.0, 20.0, 55.0, 1.0, 2.0, 0.0])
    radars = np.array([[100.0, -50.0, 0.0, 0, 0, 0]])
    multi = sfim_multi(target, radars, gamma)
    assert multi.mode == "sfim"
    assert np.allclose(multi.matrix,
                       sfim_single(target[:3], radars[0, :3], gamma),
                       rtol=1e-14)


def test_sfim_multi_block_diagonal():
    gamma = table_gamma()
    targets = np.array([0.0, 0.0, 55.0, 0, 0, 0, 300.0, 200.0, 45.0, 0, 0, 0])
    radars = np.array([[100.0, 0, 0, 0, 0, 0], [-100.0, 50.0, 0, 0, 0, 0]])
    multi = sfim_multi(targets, radars, gamma).matrix
    assert np.array_equal(multi[:3, 3:], np.zeros((3, 3)))
    assert np.array_equal(multi[3:, :3], np.zeros((3, 3)))


def test_sfim_multi_additive_over_radars():
    gamma = 1.0
    target = np.array([0.0, 0.0, 55.0, 0, 0, 0])
    radar_rows = [np.array([100.0, 0.0, 0.0]), np.array([-100.0, 0.0, 0.0]),
                  np.array([0.0, 100.0, 0.0])]
    stack = np.zeros((3, 6))
    stack[:, :3] = radar_rows
    multi = sfim_multi(target, stack, gamma).matrix
    oracle = sum(sfim_single(target[:3], r, gamma) for r in radar_rows)
    assert np.allclose(multi, oracle, rtol=1e-12)


def test_sfim_psd_and_symmetric():
    gamma = table_gamma()
    rng = np.random.default_rng(31)
    for _ in range(15):
        m = int(rng.integers(1, 4))
        n = int(rng.integers(1, 5))
        targets = rng.uniform(-300, 300, 6 * m)
        radars = np.zeros((n, 6))
        radars[:, :2] = rng.uniform(400, 900, (n, 2))
        fi = sfim_multi(targets, radars, gamma)
        mat = fi.matrix
        assert np.allclose(mat, mat.T, atol=1e-10)
        eig = np.linalg.eigvalsh(mat)
        assert eig.min() >= -1e-8 * np.trace(mat)


def test_ccr_model_information_is_angle_only():
    # constant-variance information depends on direction, not distance
    mm = MeasurementModel(kind="ccr", gamma=7.285e-10, r2t_m=125.0)
    t1 = np.array([100.0, 0.0, 0.0, 0, 0, 0])
    t2 = np.array([1000.0, 0.0, 0.0, 0, 0, 0])
    radars = np.zeros((1, 6))
    j1 = sfim_multi_model(t1, radars, mm).matrix
    j2 = sfim_multi_model(t2, radars, mm).matrix
    assert np.allclose(j1, j2, rtol=1e-12)
    assert j1[0, 0] == pytest.approx(4.0 / mm.ccr_variance, rel=1e-12)


# ---------------------------------------------------------------------------
# velocity embedding

def test_embed_velocity_zero_and_identity():
    zero = FisherInfo(matrix=np.zeros((6, 6)), mode="sfim")
    assert np.array_equal(embed_velocity(zero).matrix, np.zeros((12, 12)))
    one = FisherInfo(matrix=np.eye(3), mode="sfim")
    out = embed_velocity(one).matrix
    assert np.array_equal(out[:3, :3], np.eye(3))
    assert np.count_nonzero(out) == 3
    assert np.trace(out) == np.trace(one.matrix)


def test_embed_velocity_mode_guard():
    with pytest.raises(FimError):
        embed_velocity(FisherInfo(matrix=np.eye(6), mode="pfim"))


# ---------------------------------------------------------------------------
# recursion forms

def test_pfim_scalar_analogue():
    tm = fake_tm(np.eye(1), np.eye(1))
    j = FisherInfo(matrix=np.eye(1), mode="pfim")
    out = pfim_step_simplified(j, tm, np.zeros((1, 1)))
    assert out.matrix[0, 0] == pytest.approx(0.5, abs=1e-6)
    out_raw = pfim_step_raw(j, tm, np.zeros((1, 1)))
    assert out_raw.matrix[0, 0] == pytest.approx(0.5, abs=1e-6)


def test_pfim_zero_noise_limit_accumulates():
    tm = fake_tm(np.eye(4), np.zeros((4, 4)))
    rng = np.random.default_rng(0)
    j = random_spd(rng, 4)
    jd = random_spd(rng, 4, scale=0.1)
    out = pfim_step_simplified(FisherInfo(j, "pfim"), tm, jd)
    assert np.allclose(out.matrix, j + jd, atol=1e-5 * np.linalg.norm(j))


def test_pfim_raw_equals_simplified_on_paper_model():
    tm = build_transition(0.1, math.sqrt(10), 1)
    rng = np.random.default_rng(77)
    for _ in range(50):
        j = FisherInfo(random_spd(rng, 6), "pfim")
        jd = random_spd(rng, 6, scale=float(rng.uniform(0.01, 2.0)))
        a = pfim_step_simplified(j, tm, jd).matrix
        b = pfim_step_raw(j, tm, jd).matrix
        rel = np.linalg.norm(a - b) / np.linalg.norm(a)
        assert rel < 1e-8
        eig = np.linalg.eigvalsh(a)
        assert eig.min() >= -1e-8 * np.trace(a)


def test_pfim_d21_is_d12_transpose():
    tm = build_transition(0.1, math.sqrt(10), 1)
    w = tm.w + 1e-7 * (1 + np.trace(tm.w) / 6) * np.eye(6)
    w_inv = np.linalg.inv(w)
    d12 = -tm.a.T @ w_inv
    d21 = -w_inv @ tm.a
    assert np.allclose(d21, d12.T, atol=1e-12)


def test_pfim_singular_initialization_raises():
    tm = build_transition(0.1, 1.0, 1)
    singular = FisherInfo(np.zeros((6, 6)), "pfim")
    with pytest.raises(FimError, match="singular"):
        pfim_step_simplified(singular, tm, np.zeros((6, 6)))


# ---------------------------------------------------------------------------
# logdet

def test_logdet_objective_basics():
    assert logdet_objective(np.eye(3), jitter=0.0) == pytest.approx(0.0)
    assert logdet_objective(np.diag([2.0, 3.0, 4.0]), jitter=0.0) == \
        pytest.approx(math.log(24.0), rel=1e-14)


def test_logdet_objective_block_additivity():
    rng = np.random.default_rng(5)
    b1 = random_spd(rng, 3)
    b2 = random_spd(rng, 4)
    full = np.zeros((7, 7))
    full[:3, :3] = b1
    full[3:, 3:] = b2
    total = logdet_objective(full, jitter=0.0)
    parts = logdet_objective(b1, jitter=0.0) + logdet_objective(b2, jitter=0.0)
    assert total == pytest.approx(parts, abs=1e-10)


def test_logdet_objective_failure_is_large_negative():
    assert logdet_objective(-np.eye(3), jitter=0.0) == LOGDET_FAIL


def test_logdet3_batch_matches_scalar_path():
    rng = np.random.default_rng(6)
    blocks = np.stack([random_spd(rng, 3, scale=float(rng.uniform(0.1, 10)))
                       for _ in range(40)])
    batch = logdet3_batch(blocks)
    for i, block in enumerate(blocks):
        assert batch[i] == pytest.approx(logdet_objective(block), rel=1e-12)
