"""Scenario, radar, MPC, and MPPI parameter loading and validation.

Scenario files are TOML with four sections: ``[radar]``, ``[mpc]``,
``[mppi]``, ``[scenario]`` (plus the optional ``[scenario.limits]``
sub-table).  All units are SI and all angles are radians; any key may
instead be given with a ``_deg`` suffix, in which case its value is
converted from degrees at parse time.
"""
from __future__ import annotations

import math
import numbers
import sys
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SPEED_OF_LIGHT = 299792458.0  # m/s, fixed


class ScenarioError(ValueError):
    """Raised for scenario-file parse failures and invariant violations.

    The message always starts with the offending key path (``section.key``)
    when one exists.
    """


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ScenarioError(f"{path}: {msg}")


@dataclass(frozen=True)
class RadarParams:
    """Radar-equation constants shared by every radar."""

    carrier_freq_hz: float
    transmit_power_w: float
    gain_tx: float
    gain_rx: float
    loss: float
    rcs_m2: float
    snr_db: float
    snr_ref_radius_m: float
    speed_of_light_mps: float = SPEED_OF_LIGHT

    def __post_init__(self):
        for name in ("carrier_freq_hz", "transmit_power_w", "gain_tx",
                     "gain_rx", "loss", "rcs_m2", "snr_ref_radius_m",
                     "speed_of_light_mps"):
            _require(getattr(self, name) > 0, f"radar.{name}", "must be > 0")

    @property
    def wavelength_m(self) -> float:
        return self.speed_of_light_mps / self.carrier_freq_hz


@dataclass(frozen=True)
class MpcParams:
    """Receding-horizon objective settings."""

    discount: float
    horizon_steps: int
    r2t_m: float
    r2r_m: float
    alpha_r2r: float
    alpha_r2t: float

    def __post_init__(self):
        _require(0 < self.discount <= 1, "mpc.discount", "must be in (0, 1]")
        _require(self.horizon_steps >= 1, "mpc.horizon_steps", "must be ≥ 1")
        _require(self.r2t_m >= 0, "mpc.r2t_m", "must be ≥ 0")
        _require(self.r2r_m >= 0, "mpc.r2r_m", "must be ≥ 0")
        _require(self.alpha_r2r >= 0, "mpc.alpha_r2r", "must be ≥ 0")
        _require(self.alpha_r2t >= 0, "mpc.alpha_r2t", "must be ≥ 0")


@dataclass(frozen=True)
class MppiParams:
    """Sampling-based controller settings."""

    std_accel: float
    std_angaccel: float
    num_samples: int
    num_subiters: int
    temperature: float
    elite_quantile: float

    def __post_init__(self):
        _require(self.std_accel > 0, "mppi.std_accel", "must be > 0")
        _require(self.std_angaccel > 0, "mppi.std_angaccel", "must be > 0")
        _require(self.num_samples >= 2, "mppi.num_samples", "num_samples ≥ 2")
        _require(self.num_subiters >= 0, "mppi.num_subiters", "must be ≥ 0")
        _require(self.temperature > 0, "mppi.temperature", "must be > 0")
        _require(0 < self.elite_quantile < 1, "mppi.elite_quantile",
                 "must be in (0, 1)")


@dataclass(frozen=True)
class KinematicLimits:
    """Clipping bounds for the radar unicycle model.

    Defaults keep an 800 m arena traversable within a 60 s episode.
    """

    v_min: float = 0.0
    v_max: float = 50.0
    omega_min: float = -math.pi
    omega_max: float = math.pi
    ua_min: float = -25.0
    ua_max: float = 25.0
    uw_min: float = -math.pi / 4
    uw_max: float = math.pi / 4

    def __post_init__(self):
        for lo, hi in (("v_min", "v_max"), ("omega_min", "omega_max"),
                       ("ua_min", "ua_max"), ("uw_min", "uw_max")):
            _require(getattr(self, lo) <= getattr(self, hi),
                     f"scenario.limits.{lo}", f"must be ≤ {hi}")


MEASUREMENT_MODELS = ("ddr", "ccr")
CONTROLLERS = ("mppi", "stationary")
FIM_MODES = ("sfim", "pfim")


@dataclass(frozen=True)
class ScenarioConfig:
    """Episode-level settings: counts, timing, initial states, modes."""

    num_radars: int
    num_targets: int
    num_steps: int
    accel_noise_std: float
    initial_targets: tuple  # M rows of (x, y, z, vx, vy, vz)
    dt_s: float = 0.1
    control_period_steps: int = 1
    radar_init_square_edge_m: float = 800.0
    limits: KinematicLimits = field(default_factory=KinematicLimits)
    measurement_model: str = "ddr"
    controller: str = "mppi"
    fim_mode: str = "sfim"
    seed: int = 0
    prior_pos_std_m: float = 10.0
    prior_vel_std_mps: float = 5.0

    def __post_init__(self):
        _require(self.num_radars >= 1, "scenario.num_radars", "must be ≥ 1")
        _require(self.num_targets >= 1, "scenario.num_targets", "must be ≥ 1")
        _require(self.num_steps >= 1, "scenario.num_steps", "must be ≥ 1")
        _require(self.dt_s > 0, "scenario.dt_s", "must be > 0")
        _require(self.control_period_steps >= 1,
                 "scenario.control_period_steps", "must be ≥ 1")
        _require(self.accel_noise_std >= 0, "scenario.accel_noise_std",
                 "must be ≥ 0")
        _require(self.radar_init_square_edge_m >= 0,
                 "scenario.radar_init_square_edge_m", "must be ≥ 0")
        _require(self.prior_pos_std_m > 0, "scenario.prior_pos_std_m",
                 "must be > 0")
        _require(self.prior_vel_std_mps > 0, "scenario.prior_vel_std_mps",
                 "must be > 0")
        _require(self.seed >= 0, "scenario.seed", "must be ≥ 0")
        _require(self.measurement_model in MEASUREMENT_MODELS,
                 "scenario.measurement_model",
                 f"must be one of {MEASUREMENT_MODELS}")
        _require(self.controller in CONTROLLERS, "scenario.controller",
                 f"must be one of {CONTROLLERS}")
        _require(self.fim_mode in FIM_MODES, "scenario.fim_mode",
                 f"must be one of {FIM_MODES}")
        rows = self.initial_targets
        _require(len(rows) == self.num_targets, "scenario.initial_targets",
                 f"must have exactly {self.num_targets} rows")
        for i, row in enumerate(rows):
            _require(len(row) == 6, f"scenario.initial_targets[{i}]",
                     "each row must have 6 entries")
            _require(all(math.isfinite(v) for v in row),
                     f"scenario.initial_targets[{i}]", "entries must be finite")

    @property
    def initial_targets_array(self) -> np.ndarray:
        return np.asarray(self.initial_targets, dtype=float)


class LoadedScenario(NamedTuple):
    scenario: ScenarioConfig
    radar: RadarParams
    mpc: MpcParams
    mppi: MppiParams


# ---------------------------------------------------------------------------
# derived constants

def noise_power(rp: RadarParams, num_targets: int) -> float:
    """Return the AWGN power that yields ``rp.snr_db`` at the reference radius.

    sigma_a^2 = M * P_ref / 10^(SNR/10), with P_ref the radar-equation
    received power at ``snr_ref_radius_m``.
    """
    lam = rp.wavelength_m
    d = rp.snr_ref_radius_m
    p_ref = (rp.transmit_power_w * rp.gain_tx * rp.gain_rx * lam**2
             * rp.rcs_m2) / ((4 * math.pi) ** 3 * d**4 * rp.loss)
    return num_targets * p_ref / 10 ** (rp.snr_db / 10)


def gamma_const(rp: RadarParams, sigma_a2: float) -> float:
    """Range-variance constant: var(range) = gamma * distance^4.

    Defined so the Gaussian range model's variance
    c^2 sigma_a^2 / (8 pi^2 f_c^2 P_r) collapses to gamma * d^4 after
    substituting the radar equation for P_r.
    """
    if sigma_a2 < 0:
        raise ScenarioError("sigma_a2: must be ≥ 0")
    c = rp.speed_of_light_mps
    lam = rp.wavelength_m
    return (c**2 * sigma_a2 * (4 * math.pi) ** 3 * rp.loss) / (
        8 * math.pi**2 * rp.carrier_freq_hz**2 * rp.transmit_power_w
        * rp.gain_tx * rp.gain_rx * lam**2 * rp.rcs_m2)


# ---------------------------------------------------------------------------
# file loading

_RADAR_KEYS = {
    "carrier_freq_hz": (float, True),
    "transmit_power_w": (float, True),
    "gain_tx": (float, True),
    "gain_rx": (float, True),
    "loss": (float, True),
    "rcs_m2": (float, True),
    "snr_db": (float, True),
    "snr_ref_radius_m": (float, True),
}

_MPC_KEYS = {
    "discount": (float, True),
    "horizon_steps": (int, True),
    "r2t_m": (float, True),
    "r2r_m": (float, True),
    "alpha_r2r": (float, True),
    "alpha_r2t": (float, True),
}

_MPPI_KEYS = {
    "std_accel": (float, True),
    "std_angaccel": (float, True),
    "num_samples": (int, True),
    "num_subiters": (int, True),
    "temperature": (float, True),
    "elite_quantile": (float, True),
}

_SCENARIO_KEYS = {
    "num_radars": (int, True),
    "num_targets": (int, True),
    "num_steps": (int, True),
    "accel_noise_std": (float, True),
    "initial_targets": (list, True),
    "dt_s": (float, False),
    "control_period_steps": (int, False),
    "radar_init_square_edge_m": (float, False),
    "measurement_model": (str, False),
    "controller": (str, False),
    "fim_mode": (str, False),
    "seed": (int, False),
    "prior_pos_std_m": (float, False),
    "prior_vel_std_mps": (float, False),
}

_LIMITS_KEYS = {name: (float, False) for name in (
    "v_min", "v_max", "omega_min", "omega_max",
    "ua_min", "ua_max", "uw_min", "uw_max")}


def _coerce(section: str, key: str, value, want):
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"{section}.{key}: expected a number, "
                                f"got {type(value).__name__}")
        return float(value)
    if want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"{section}.{key}: expected an integer, "
                                f"got {type(value).__name__}")
        return value
    if not isinstance(value, want):
        raise ScenarioError(f"{section}.{key}: expected {want.__name__}, "
                            f"got {type(value).__name__}")
    return value


def _read_section(data: dict, section: str, schema: dict) -> dict:
    raw = dict(data.get(section, {}))
    out = {}
    for key in list(raw):
        if key.endswith("_deg"):
            base = key[:-4]
            if base not in schema:
                raise ScenarioError(f"{section}.{key}: unknown key")
            if base in raw:
                raise ScenarioError(
                    f"{section}.{key}: conflicts with {section}.{base}")
            val = _coerce(section, key, raw.pop(key), float)
            raw[base] = math.radians(val)
    for key, value in raw.items():
        if key not in schema:
            if section == "scenario" and key == "limits":
                continue
            raise ScenarioError(f"{section}.{key}: unknown key")
        out[key] = _coerce(section, key, value, schema[key][0])
    for key, (_, required) in schema.items():
        if required and key not in out:
            raise ScenarioError(f"{section}.{key}: missing required key")
    return out


def parse_scenario_text(text: str) -> LoadedScenario:
    """Parse scenario TOML text into validated parameter objects."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"parse failure: {exc}") from exc

    for section in data:
        if section not in ("radar", "mpc", "mppi", "scenario"):
            raise ScenarioError(f"{section}: unknown section")

    radar = RadarParams(**_read_section(data, "radar", _RADAR_KEYS))
    mpc = MpcParams(**_read_section(data, "mpc", _MPC_KEYS))
    mppi = MppiParams(**_read_section(data, "mppi", _MPPI_KEYS))

    sc_raw = _read_section(data, "scenario", _SCENARIO_KEYS)
    lim_raw = _read_section(data.get("scenario", {}), "limits", _LIMITS_KEYS)
    if "initial_targets" in sc_raw:
        rows = []
        for i, row in enumerate(sc_raw["initial_targets"]):
            if not isinstance(row, list):
                raise ScenarioError(
                    f"scenario.initial_targets[{i}]: expected a row of 6 numbers")
            rows.append(tuple(
                _coerce("scenario", f"initial_targets[{i}][{j}]", v, float)
                for j, v in enumerate(row)))
        sc_raw["initial_targets"] = tuple(rows)
    scenario = ScenarioConfig(limits=KinematicLimits(**lim_raw), **sc_raw)
    return LoadedScenario(scenario, radar, mpc, mppi)


def load_scenario(path) -> LoadedScenario:
    """Load and validate a scenario file; errors carry the offending key path."""
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    return parse_scenario_text(text)


# ---------------------------------------------------------------------------
# serialization (exact round-trip: floats written with repr)

def _fmt(value) -> str:
    if isinstance(value, bool):
        raise TypeError("no boolean scenario keys")
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        value = float(value)
        if not math.isfinite(value):
            raise ScenarioError(f"cannot serialize non-finite value {value}")
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dump_scenario(loaded: LoadedScenario) -> str:
    """Serialize parameters back to TOML text; load(dump(x)) == x."""
    sc, rp, mpc, mp = (loaded.scenario, loaded.radar, loaded.mpc, loaded.mppi)
    lines = ["[radar]"]
    for key in _RADAR_KEYS:
        lines.append(f"{key} = {_fmt(getattr(rp, key))}")
    lines.append("")
    lines.append("[mpc]")
    for key in _MPC_KEYS:
        lines.append(f"{key} = {_fmt(getattr(mpc, key))}")
    lines.append("")
    lines.append("[mppi]")
    for key in _MPPI_KEYS:
        lines.append(f"{key} = {_fmt(getattr(mp, key))}")
    lines.append("")
    lines.append("[scenario]")
    for key in _SCENARIO_KEYS:
        if key == "initial_targets":
            continue
        lines.append(f"{key} = {_fmt(getattr(sc, key))}")
    rows = ",\n".join(
        "    [" + ", ".join(_fmt(v) for v in row) + "]"
        for row in sc.initial_targets)
    lines.append("initial_targets = [\n" + rows + ",\n]")
    lines.append("")
    lines.append("[scenario.limits]")
    for key in _LIMITS_KEYS:
        lines.append(f"{key} = {_fmt(getattr(sc.limits, key))}")
    lines.append("")
    return "\n".join(lines)


def scenario_dict(loaded: LoadedScenario) -> dict:
    """Nested plain-dict echo of all parameters (JSON-friendly)."""
    sc = loaded.scenario
    return {
        "radar": {k: getattr(loaded.radar, k) for k in _RADAR_KEYS},
        "mpc": {k: getattr(loaded.mpc, k) for k in _MPC_KEYS},
        "mppi": {k: getattr(loaded.mppi, k) for k in _MPPI_KEYS},
        "scenario": {
            **{k: getattr(sc, k) for k in _SCENARIO_KEYS
               if k != "initial_targets"},
            "initial_targets": [list(row) for row in sc.initial_targets],
            "limits": {k: getattr(sc.limits, k) for k in _LIMITS_KEYS},
        },
    }


def scenario_from_dict(data: dict) -> LoadedScenario:
    """Inverse of :func:`scenario_dict` (used to round-trip metrics echoes)."""
    sc_raw = dict(data["scenario"])
    lim_raw = sc_raw.pop("limits", {})
    sc_raw["initial_targets"] = tuple(
        tuple(float(v) for v in row) for row in sc_raw["initial_targets"])
    scenario = ScenarioConfig(limits=KinematicLimits(**lim_raw), **sc_raw)
    return LoadedScenario(scenario, RadarParams(**data["radar"]),
                          MpcParams(**data["mpc"]), MppiParams(**data["mppi"]))
