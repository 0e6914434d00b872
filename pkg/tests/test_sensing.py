import math

import numpy as np
import pytest

from radartrack.config import gamma_const, noise_power
from radartrack.sensing import (MeasurementModel, SensingError,
                                range_mean, range_mean_vector, range_variance,
                                received_power, sample_measurements)

C = 299792458.0


def test_received_power_table_value(table_radar):
    p = received_power(table_radar, np.zeros(3), np.array([500.0, 0.0, 0.0]))
    assert p == pytest.approx(2.8986233594046838e-06, rel=1e-12)


def test_received_power_inverse_fourth_law(table_radar):
    p1 = received_power(table_radar, np.zeros(3), np.array([300.0, 0.0, 0.0]))
    p2 = received_power(table_radar, np.zeros(3), np.array([600.0, 0.0, 0.0]))
    assert p1 / p2 == pytest.approx(16.0, rel=1e-12)


def test_received_power_rejects_coincidence(table_radar):
    with pytest.raises(SensingError, match="coincident"):
        received_power(table_radar, np.ones(3), np.ones(3))


def test_range_mean_examples():
    assert range_mean(np.zeros(3), np.array([3.0, 4.0, 0.0])) == 10.0
    assert range_mean(np.ones(3), np.ones(3)) == 0.0
    assert range_mean(np.zeros(3), np.array([0.0, 0.0, 55.0])) == 110.0


def test_range_variance_ddr_direct():
    mm = MeasurementModel(kind="ddr", gamma=1.0)
    assert range_variance(mm, np.zeros(3),
                          np.array([2.0, 0.0, 0.0])) == pytest.approx(16.0)


def test_range_variance_cross_formula_oracle(table_radar):
    # variance must equal c^2 sigma_a^2 / (8 pi^2 fc^2 P_r) for any geometry
    sigma_a2 = noise_power(table_radar, 4)
    gamma = gamma_const(table_radar, sigma_a2)
    mm = MeasurementModel(kind="ddr", gamma=gamma)
    rng = np.random.default_rng(2)
    for _ in range(30):
        radar = rng.uniform(-500, 500, 3)
        target = rng.uniform(-500, 500, 3)
        if np.linalg.norm(radar - target) < 1.0:
            continue
        var = range_variance(mm, radar, target)
        p_r = received_power(table_radar, radar, target)
        oracle = C**2 * sigma_a2 / (8 * math.pi**2
                                    * table_radar.carrier_freq_hz**2 * p_r)
        assert var == pytest.approx(oracle, rel=1e-10)


def test_power_times_variance_is_geometry_free(table_radar):
    sigma_a2 = noise_power(table_radar, 2)
    gamma = gamma_const(table_radar, sigma_a2)
    mm = MeasurementModel(kind="ddr", gamma=gamma)
    const = C**2 * sigma_a2 / (8 * math.pi**2 * table_radar.carrier_freq_hz**2)
    rng = np.random.default_rng(9)
    for _ in range(20):
        radar = rng.uniform(-800, 800, 3)
        target = rng.uniform(-800, 800, 3)
        if np.linalg.norm(radar - target) < 1.0:
            continue
        product = (received_power(table_radar, radar, target)
                   * range_variance(mm, radar, target))
        assert product == pytest.approx(const, rel=1e-10)


def test_ccr_variance_constant_over_distance(table_radar):
    gamma = gamma_const(table_radar, noise_power(table_radar, 4))
    mm = MeasurementModel(kind="ccr", gamma=gamma, r2t_m=125.0)
    expect = 125.0**4 * gamma
    assert expect == pytest.approx(0.1778573017857328, rel=1e-12)
    for d in (1.0, 50.0, 500.0, 5000.0):
        assert range_variance(mm, np.zeros(3), np.array([d, 0, 0])) == expect


def test_ddr_variance_monotone_in_distance():
    mm = MeasurementModel(kind="ddr", gamma=7.285e-10)
    rng = np.random.default_rng(4)
    dists = np.sort(rng.uniform(1.0, 2000.0, 50))
    vars_ = [range_variance(mm, np.zeros(3), np.array([d, 0, 0]))
             for d in dists]
    assert all(a < b for a, b in zip(vars_, vars_[1:]))


def test_sample_measurements_zero_variance_hits_means():
    mm = MeasurementModel(kind="ddr", gamma=0.0)
    radars = np.array([[0.0, 0, 0, 0, 0, 0], [100.0, 0, 0, 0, 0, 0]])
    targets = np.array([3.0, 4.0, 0.0, 0.0, 0.0, 0.0])
    z = sample_measurements(mm, radars, targets, np.random.default_rng(0))
    assert np.array_equal(z, range_mean_vector(radars, targets))
    assert z[0] == 10.0


def test_sample_measurements_seeded_determinism(table_radar):
    gamma = gamma_const(table_radar, noise_power(table_radar, 2))
    mm = MeasurementModel(kind="ddr", gamma=gamma)
    radars = np.array([[0.0, 0, 0, 0, 0, 0], [300.0, 0, 0, 0, 0, 0]])
    targets = np.array([10.0, 20.0, 55.0, 0, 0, 0, -40.0, 80.0, 45.0, 0, 0, 0])
    z1 = sample_measurements(mm, radars, targets, np.random.default_rng(17))
    z2 = sample_measurements(mm, radars, targets, np.random.default_rng(17))
    assert np.array_equal(z1, z2)


def test_sample_measurements_empirical_variance(table_radar):
    gamma = gamma_const(table_radar, noise_power(table_radar, 1))
    mm = MeasurementModel(kind="ddr", gamma=gamma)
    radars = np.zeros((1, 6))
    targets = np.array([400.0, 300.0, 0.0, 0, 0, 0])  # d = 500
    rng = np.random.default_rng(123)
    draws = np.array([sample_measurements(mm, radars, targets, rng)[0]
                      for _ in range(100_000)])
    expect_var = gamma * 500.0**4
    assert draws.var() == pytest.approx(expect_var, rel=0.03)
    assert draws.mean() == pytest.approx(1000.0, abs=0.1)


def test_measurement_ordering_is_target_major():
    mm = MeasurementModel(kind="ddr", gamma=0.0)
    radars = np.array([[0.0, 0, 0, 0, 0, 0], [1000.0, 0, 0, 0, 0, 0]])
    targets = np.array([100.0, 0, 0, 0, 0, 0, 700.0, 0, 0, 0, 0, 0])
    z = sample_measurements(mm, radars, targets, np.random.default_rng(0))
    # entry i -> target i // N, radar i % N
    assert z[0] == 200.0    # t0-r0
    assert z[1] == 1800.0   # t0-r1
    assert z[2] == 1400.0   # t1-r0
    assert z[3] == 600.0    # t1-r1
    swapped = sample_measurements(mm, radars[::-1], targets,
                                  np.random.default_rng(0))
    assert np.array_equal(swapped.reshape(2, 2), z.reshape(2, 2)[:, ::-1])


def test_sampling_rejects_coincident_pair():
    mm = MeasurementModel(kind="ddr", gamma=1e-9)
    radars = np.array([[1.0, 2.0, 0.0, 0, 0, 0]])
    targets = np.array([1.0, 2.0, 0.0, 0, 0, 0])
    with pytest.raises(SensingError, match="coincident"):
        sample_measurements(mm, radars, targets, np.random.default_rng(0))


def test_model_validation():
    with pytest.raises(SensingError):
        MeasurementModel(kind="bogus", gamma=1.0)
    with pytest.raises(SensingError):
        MeasurementModel(kind="ccr", gamma=1.0)  # needs r2t_m
    with pytest.raises(SensingError):
        MeasurementModel(kind="ddr", gamma=-1.0)
