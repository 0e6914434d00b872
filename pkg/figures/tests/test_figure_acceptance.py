"""Secondary acceptance: figure pipeline on a 5-trial campaign, with the
snapshot heatmap cross-checked against the simulator's --probe output."""
import numpy as np

from _driver import run_simulator
from radarfigs.inputs import load_metrics
from radarfigs.render import FigureSpec, render, snapshot_geometry


def test_figure_pipeline_acceptance(campaign_dir, tmp_path):
    out_dir = campaign_dir["out"]
    for kind in ("rmse_band", "ecdf", "snapshot"):
        path = tmp_path / f"{kind}.png"
        render(FigureSpec(input_dir=str(out_dir), kind=kind, step=7,
                          mesh_size=16), path)
        assert path.exists()

    spec = FigureSpec(input_dir=str(out_dir), kind="snapshot", step=7,
                      mesh_size=16)
    metrics = load_metrics(out_dir)
    _, _, _, xs, ys, probe_z, grid = snapshot_geometry(spec, metrics)

    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(10):
        i = int(rng.integers(0, ys.size))
        j = int(rng.integers(0, xs.size))
        probe = f"{float(xs[j])!r},{float(ys[i])!r},{float(probe_z)!r}"
        proc = run_simulator([
            "--scenario", str(campaign_dir["scenario"]),
            "--probe=" + probe,
            "--probe-trace", str(out_dir / "trial_000.csv"),
            "--probe-step", "7"])
        assert proc.returncode == 0, proc.stderr
        simulator_value = float(proc.stdout.strip())
        worst = max(worst, abs(simulator_value - grid[i, j]))
    print(f"[{'PASS' if worst < 1e-4 else 'FAIL'}] Figure pipeline "
          f"(probe mismatch {worst:.2e})")
    assert worst < 1e-4
