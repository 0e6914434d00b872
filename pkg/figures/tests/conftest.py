import pytest

from _driver import SCENARIO, run_simulator


@pytest.fixture(scope="session")
def campaign_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("campaign")
    scenario = root / "scenario.toml"
    scenario.write_text(SCENARIO)
    out = root / "out"
    proc = run_simulator(["--scenario", str(scenario), "--trials", "5",
                          "--seed", "3", "--out", str(out), "--quiet"])
    assert proc.returncode == 0, proc.stderr
    return {"out": out, "scenario": scenario}
