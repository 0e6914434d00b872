import numpy as np
import pytest

from radartrack.config import MpcParams, MppiParams, RadarParams


@pytest.fixture
def table_radar() -> RadarParams:
    """Radar-equation settings used throughout the experiments."""
    return RadarParams(carrier_freq_hz=1e8, transmit_power_w=1000.0,
                       gain_tx=200.0, gain_rx=200.0, loss=1.0, rcs_m2=1.0,
                       snr_db=-20.0, snr_ref_radius_m=500.0)


@pytest.fixture
def table_mpc() -> MpcParams:
    return MpcParams(discount=0.95, horizon_steps=15, r2t_m=125.0,
                     r2r_m=10.0, alpha_r2r=500.0, alpha_r2t=1000.0)


@pytest.fixture
def table_mppi() -> MppiParams:
    return MppiParams(std_accel=25.0, std_angaccel=np.radians(45.0),
                      num_samples=200, num_subiters=5, temperature=0.1,
                      elite_quantile=0.9)
