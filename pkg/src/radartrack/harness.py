"""Closed-loop trial execution, Monte-Carlo campaigns, and statistics.

Per step the loop is: transition targets, filter predict, (re)plan on
control ticks, actuate, measure, filter update.  Every random draw comes
from one of four counter-based streams derived from (trial seed, stream
id), so trials are replayable and order-independent.
"""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import ckf, mppi, objective
from .config import LoadedScenario, gamma_const, noise_power
from .dynamics import build_transition, step_radar_batch, step_targets
from .sensing import MeasurementModel, sample_measurements

_STREAM_IDS = {"init": 0, "targets": 1, "measurements": 2, "mppi": 3}


class TrialError(RuntimeError):
    pass


def make_stream(seed: int, name: str) -> np.random.Generator:
    """Counter-based per-trial stream; (seed, stream) fully determines it."""
    seq = np.random.SeedSequence((seed, _STREAM_IDS[name]))
    return np.random.Generator(np.random.Philox(seq))


@dataclass
class TrialTrace:
    """Per-step history of one closed-loop trial."""

    seed: int
    num_radars: int
    num_targets: int
    true_states: np.ndarray    # (T, 6M)
    est_means: np.ndarray      # (T, 6M)
    est_cov_diag: np.ndarray   # (T, 6M)
    radar_states: np.ndarray   # (T, N, 6)
    controls: np.ndarray       # (T, N, 2)
    measurements: np.ndarray   # (T, N*M)
    cost_total: np.ndarray     # (T,)
    cost_traj: np.ndarray
    cost_r2r: np.ndarray
    cost_r2t: np.ndarray
    rmse_full: np.ndarray
    rmse_pos: np.ndarray
    runtime_s: float = 0.0

    @property
    def num_steps(self) -> int:
        return self.true_states.shape[0]


def rmse_step(true_state: np.ndarray, est_mean: np.ndarray) -> float:
    """Root mean squared error over every state component."""
    true_state = np.asarray(true_state, dtype=float)
    est_mean = np.asarray(est_mean, dtype=float)
    if true_state.shape != est_mean.shape:
        raise ValueError("state dimensions disagree")
    err = true_state - est_mean
    return float(np.sqrt(np.mean(err * err)))


def rmse_step_positions(true_state: np.ndarray, est_mean: np.ndarray) -> float:
    """Position-only variant of :func:`rmse_step` (x, y, z per target)."""
    t = np.asarray(true_state, dtype=float).reshape(-1, 6)[:, :3]
    e = np.asarray(est_mean, dtype=float).reshape(-1, 6)[:, :3]
    err = t - e
    return float(np.sqrt(np.mean(err * err)))


def _prior_std_vector(loaded: LoadedScenario) -> np.ndarray:
    sc = loaded.scenario
    per_target = [sc.prior_pos_std_m] * 3 + [sc.prior_vel_std_mps] * 3
    return np.tile(per_target, sc.num_targets)


def run_trial(loaded: LoadedScenario, seed: int) -> TrialTrace:
    """Execute one closed-loop trial; deterministic in (loaded, seed)."""
    t_start = time.perf_counter()
    sc, rp, mpc, mp = loaded
    n, m, steps = sc.num_radars, sc.num_targets, sc.num_steps

    rng_init = make_stream(seed, "init")
    rng_targets = make_stream(seed, "targets")
    rng_meas = make_stream(seed, "measurements")
    rng_mppi = make_stream(seed, "mppi")

    tm = build_transition(sc.dt_s, sc.accel_noise_std, m)
    sigma_a2 = noise_power(rp, m)
    gamma = gamma_const(rp, sigma_a2)
    mm_truth = MeasurementModel(kind="ddr", gamma=gamma)
    mm_assumed = MeasurementModel(kind=sc.measurement_model, gamma=gamma,
                                  r2t_m=mpc.r2t_m)

    # Radars: uniform XY in the init square, heading uniform in (-pi, pi],
    # zero speed and turn rate, always on the ground plane.
    half = sc.radar_init_square_edge_m / 2.0
    radars = np.zeros((n, 6))
    radars[:, 0] = rng_init.uniform(-half, half, n)
    radars[:, 1] = rng_init.uniform(-half, half, n)
    radars[:, 3] = np.pi - rng_init.uniform(0.0, 2.0 * np.pi, n)

    truth = sc.initial_targets_array.ravel()
    prior_std = _prior_std_vector(loaded)
    belief = ckf.GaussianBelief(
        mean=truth + prior_std * rng_init.standard_normal(truth.size),
        cov=np.diag(prior_std**2))

    width = 2 * n
    prev_mean = np.zeros(mpc.horizon_steps * width)
    current_control = np.zeros((n, 2))
    breakdown = objective.CostBreakdown(0.0, 0.0, 0.0, 0.0)

    trace = TrialTrace(
        seed=seed, num_radars=n, num_targets=m,
        true_states=np.empty((steps, 6 * m)),
        est_means=np.empty((steps, 6 * m)),
        est_cov_diag=np.empty((steps, 6 * m)),
        radar_states=np.empty((steps, n, 6)),
        controls=np.empty((steps, n, 2)),
        measurements=np.empty((steps, n * m)),
        cost_total=np.empty(steps), cost_traj=np.empty(steps),
        cost_r2r=np.empty(steps), cost_r2t=np.empty(steps),
        rmse_full=np.empty(steps), rmse_pos=np.empty(steps))

    phase = "update"  # loop invariant: each pass starts after an update
    for k in range(steps):
        try:
            assert phase == "update"
            truth = step_targets(tm, truth, rng_targets)
            phase = "transition"

            assert phase == "transition"
            belief = ckf.predict(belief, tm)
            phase = "predict"

            if sc.controller == "mppi" and k % sc.control_period_steps == 0:
                assert phase == "predict"
                sigma_sets = [ckf.sigma_points(belief)]
                sigma_sets += ckf.propagate(belief, tm, mpc.horizon_steps)
                j_init = None
                if sc.fim_mode == "pfim":
                    j_init = np.linalg.inv(belief.cov)
                    j_init = 0.5 * (j_init + j_init.T)
                warm = mppi.shift_plan_mean(prev_mean, n)
                plan = mppi.plan(radars, sigma_sets, mpc, mp, mm_assumed, tm,
                                 sc.fim_mode, j_init, sc.dt_s, sc.limits,
                                 rng_mppi, warm_mean=warm)
                prev_mean = plan.mean
                current_control = plan.mean[:width].reshape(n, 2)
                breakdown = objective.total_cost(
                    plan.mean, radars, sigma_sets, mpc, sc.fim_mode,
                    mm_assumed, tm, j_init, sc.dt_s, sc.limits)
                phase = "plan"

            assert phase in ("predict", "plan")
            radars = step_radar_batch(radars, current_control, sc.dt_s,
                                      sc.limits)
            phase = "actuate"

            assert phase == "actuate"
            z = sample_measurements(mm_truth, radars, truth, rng_meas)
            phase = "measure"

            assert phase == "measure"
            belief = ckf.update(belief, z, radars, mm_assumed)
            phase = "update"
        except AssertionError:
            raise
        except Exception as exc:
            raise TrialError(f"step {k}: {exc}") from exc

        trace.true_states[k] = truth
        trace.est_means[k] = belief.mean
        trace.est_cov_diag[k] = np.diag(belief.cov)
        trace.radar_states[k] = radars
        trace.controls[k] = current_control
        trace.measurements[k] = z
        trace.cost_total[k] = breakdown.total
        trace.cost_traj[k] = breakdown.traj
        trace.cost_r2r[k] = breakdown.r2r
        trace.cost_r2t[k] = breakdown.r2t
        trace.rmse_full[k] = rmse_step(truth, belief.mean)
        trace.rmse_pos[k] = rmse_step_positions(truth, belief.mean)

    trace.runtime_s = time.perf_counter() - t_start
    return trace


# ---------------------------------------------------------------------------
# statistics

def hdi_90(samples: np.ndarray) -> tuple[float, float]:
    """Shortest contiguous window of the sorted samples holding 90% of them.

    Ties are broken toward the smallest lower bound.
    """
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.size
    if n < 10:
        raise ValueError("hdi_90 requires at least 10 samples")
    m = math.ceil(0.9 * n)
    widths = s[m - 1:] - s[:n - m + 1]
    i = int(np.argmin(widths))  # argmin returns the first minimum
    return float(s[i]), float(s[i + m - 1])


def ecdf(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sorted samples with cumulative fractions (right-continuous ECDF)."""
    s = np.sort(np.asarray(samples, dtype=float))
    if s.size == 0:
        raise ValueError("ecdf requires at least 1 sample")
    return s, np.arange(1, s.size + 1) / s.size


@dataclass
class CampaignStats:
    rmse_mean: np.ndarray      # (T,)
    rmse_pos_mean: np.ndarray  # (T,)
    hdi_lo: np.ndarray         # (T,)
    hdi_hi: np.ndarray         # (T,)
    hdi_method: str            # "hdi90", or "minmax" below 10 trials
    ecdf_values: np.ndarray
    ecdf_fractions: np.ndarray


@dataclass
class CampaignResult:
    stats: CampaignStats
    traces: list           # per trial id; None where the trial failed
    summaries: list        # one dict per trial id
    failures: list         # (trial id, message)


def stats_from_traces(traces: list[TrialTrace]) -> CampaignStats:
    """Reduce per-trial RMSE curves to campaign statistics."""
    if not traces:
        raise ValueError("no successful trials")
    rmse = np.stack([t.rmse_full for t in traces])     # (n, T)
    rmse_pos = np.stack([t.rmse_pos for t in traces])
    if rmse.shape[0] >= 10:
        method = "hdi90"
        bounds = np.array([hdi_90(rmse[:, k]) for k in range(rmse.shape[1])])
    else:
        method = "minmax"
        bounds = np.stack([rmse.min(axis=0), rmse.max(axis=0)], axis=1)
    values, fractions = ecdf(rmse.ravel())
    return CampaignStats(rmse_mean=rmse.mean(axis=0),
                         rmse_pos_mean=rmse_pos.mean(axis=0),
                         hdi_lo=bounds[:, 0], hdi_hi=bounds[:, 1],
                         hdi_method=method, ecdf_values=values,
                         ecdf_fractions=fractions)


def _trial_job(args):
    loaded, seed = args
    return run_trial(loaded, seed)


def default_workers() -> int:
    return max(1, int(os.environ.get("RADARTRACK_WORKERS", "1")))


def run_campaign(loaded: LoadedScenario, trials: int, base_seed: int,
                 workers: int = None,
                 progress=None) -> CampaignResult:
    """Run ``trials`` independent trials seeded base_seed + index.

    Failed trials are excluded from the statistics and reported in
    ``failures``.  Results are identical for any worker count because each
    trial owns its seed.
    """
    if trials < 1:
        raise ValueError("trials must be ≥ 1")
    workers = default_workers() if workers is None else max(1, workers)
    jobs = [(loaded, base_seed + i) for i in range(trials)]

    traces: list = [None] * trials
    failures = []
    if workers == 1 or trials == 1:
        for i, job in enumerate(jobs):
            try:
                traces[i] = _trial_job(job)
            except TrialError as exc:
                failures.append((i, str(exc)))
            if progress:
                progress(i + 1, trials)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_trial_job, job): i
                       for i, job in enumerate(jobs)}
            done = 0
            for future, i in futures.items():
                try:
                    traces[i] = future.result()
                except TrialError as exc:
                    failures.append((i, str(exc)))
                done += 1
                if progress:
                    progress(done, trials)
    failures.sort()

    summaries = []
    for i, trace in enumerate(traces):
        if trace is None:
            summaries.append({"trial": i, "seed": base_seed + i,
                              "status": "failed"})
        else:
            # wall time stays off the summary: metrics files must be
            # byte-identical across reruns of the same (scenario, seed)
            summaries.append({
                "trial": i, "seed": base_seed + i, "status": "ok",
                "mean_rmse": float(trace.rmse_full.mean()),
                "final_rmse": float(trace.rmse_full[-1]),
            })
    ok = [t for t in traces if t is not None]
    stats = stats_from_traces(ok)
    return CampaignResult(stats=stats, traces=traces, summaries=summaries,
                          failures=failures)


def campaign_metrics(loaded: LoadedScenario, result: CampaignResult,
                     trials: int, base_seed: int) -> dict:
    """JSON-ready campaign metrics with a round-trippable config echo."""
    from .config import scenario_dict

    sc = loaded.scenario
    stats = result.stats
    return {
        "config": scenario_dict(loaded),
        "derived": {
            "sigma_a2": noise_power(loaded.radar, sc.num_targets),
            "gamma": gamma_const(loaded.radar,
                                 noise_power(loaded.radar, sc.num_targets)),
        },
        "controller": sc.controller,
        "measurement_model": sc.measurement_model,
        "fim_mode": sc.fim_mode,
        "trials": trials,
        "base_seed": base_seed,
        "rmse_mean": [float(v) for v in stats.rmse_mean],
        "rmse_pos_mean": [float(v) for v in stats.rmse_pos_mean],
        "hdi_lo": [float(v) for v in stats.hdi_lo],
        "hdi_hi": [float(v) for v in stats.hdi_hi],
        "hdi_method": stats.hdi_method,
        "ecdf_values": [float(v) for v in stats.ecdf_values],
        "ecdf_fractions": [float(v) for v in stats.ecdf_fractions],
        "per_trial": result.summaries,
        "failures": [{"trial": i, "message": msg}
                     for i, msg in result.failures],
    }


# ---------------------------------------------------------------------------
# trace file format (CSV, one row per step)

def _trace_header(n: int, m: int) -> list[str]:
    comps = ["x", "y", "z", "vx", "vy", "vz"]
    cols = ["step"]
    cols += [f"true_t{i}_{c}" for i in range(m) for c in comps]
    cols += [f"est_t{i}_{c}" for i in range(m) for c in comps]
    cols += [f"var_t{i}_{c}" for i in range(m) for c in comps]
    cols += [f"radar{j}_{c}" for j in range(n)
             for c in ("x", "y", "z", "theta", "v", "omega")]
    cols += [f"u{j}_{c}" for j in range(n) for c in ("a", "w")]
    cols += [f"z_t{i}_r{j}" for i in range(m) for j in range(n)]
    cols += ["cost_total", "cost_traj", "cost_r2r", "cost_r2t",
             "rmse_full", "rmse_pos"]
    return cols


def trace_to_csv(trace: TrialTrace, path) -> None:
    """Write one trial to CSV with full round-trip float precision."""
    n, m = trace.num_radars, trace.num_targets
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_trace_header(n, m))
        for k in range(trace.num_steps):
            row = [k]
            row += [repr(float(v)) for v in trace.true_states[k]]
            row += [repr(float(v)) for v in trace.est_means[k]]
            row += [repr(float(v)) for v in trace.est_cov_diag[k]]
            row += [repr(float(v)) for v in trace.radar_states[k].ravel()]
            row += [repr(float(v)) for v in trace.controls[k].ravel()]
            row += [repr(float(v)) for v in trace.measurements[k]]
            row += [repr(float(a[k])) for a in
                    (trace.cost_total, trace.cost_traj, trace.cost_r2r,
                     trace.cost_r2t, trace.rmse_full, trace.rmse_pos)]
            writer.writerow(row)


def trace_from_csv(path, num_radars: int, num_targets: int,
                   seed: int = -1) -> TrialTrace:
    """Parse a trace written by :func:`trace_to_csv`."""
    n, m = num_radars, num_targets
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != _trace_header(n, m):
            raise ValueError(f"unexpected trace header in {path}")
        rows = [[float(v) for v in row[1:]] for row in reader]
    data = np.asarray(rows)
    steps = data.shape[0]
    d = 6 * m
    idx = 0

    def take(count):
        nonlocal idx
        block = data[:, idx:idx + count]
        idx += count
        return block

    return TrialTrace(
        seed=seed, num_radars=n, num_targets=m,
        true_states=take(d), est_means=take(d), est_cov_diag=take(d),
        radar_states=take(6 * n).reshape(steps, n, 6),
        controls=take(2 * n).reshape(steps, n, 2),
        measurements=take(n * m),
        cost_total=take(1).ravel(), cost_traj=take(1).ravel(),
        cost_r2r=take(1).ravel(), cost_r2t=take(1).ravel(),
        rmse_full=take(1).ravel(), rmse_pos=take(1).ravel())
