import json

import numpy as np
import pytest

from bohmlab.cli import loads_config, parse_config, validate_config
from bohmlab.cli.config import ConfigParseError, ConfigValidationError
from bohmlab.cli.build import build
from bohmlab.cli.main import main
from bohmlab.cli.suite import bundled_scenarios, row_names, scenario_path
from bohmlab.wavefield.snapshot import load_state

SMALL = {
    "name": "small",
    "grid": {"num_particles": 2, "box": [-10.0, 10.0], "points_per_axis": 64},
    "state": {"kind": "gaussian", "packets": [
        {"center": [-1.0], "width": 1.0, "momentum": [1.0]},
        {"center": [1.5], "width": 1.0, "momentum": [-0.5]}]},
    "experiment": {"kind": "equivariance", "law": {"kind": "full"}, "T": 0.3, "n": 2000,
                   "n_seeds": 3},
}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return p


def _with(cfg, **exp):
    out = json.loads(json.dumps(cfg))
    for k, v in exp.items():
        if k == "law":
            out["experiment"]["law"] = v
        else:
            out["experiment"][k] = v
    return out


def test_defaults():
    cfg = validate_config(SMALL)
    assert cfg.model.hbar == 1.0 and cfg.model.masses is None
    assert cfg.experiment.alpha == 0.01 and cfg.experiment.n_bins == 64
    assert cfg.seeds() == [0, 1, 2] and cfg.min_pass() == 3
    assert validate_config(_with(SMALL, n_seeds=5)).min_pass() == 4


def test_real_set_out_of_range_names_field(tmp_path, capsys):
    bad = _with(SMALL, law={"kind": "reduced", "real_set": [3]})
    with pytest.raises(ConfigValidationError, match="experiment.law.real_set"):
        validate_config(bad)
    assert main(["run", str(_write(tmp_path, bad))]) == 3
    assert "experiment.law.real_set" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path):
    bad = json.loads(json.dumps(SMALL))
    bad["grid"]["pointz"] = 3
    with pytest.raises(ConfigValidationError, match="grid.pointz"):
        validate_config(bad)
    assert main(["run", str(_write(tmp_path, bad))]) == 3


def test_duplicate_key_is_parse_error(tmp_path):
    text = '{"name": "a", "name": "b"}'
    with pytest.raises(ConfigParseError, match="duplicate"):
        loads_config(text)
    assert main(["run", str(_write(tmp_path, text))]) == 2


def test_malformed_json(tmp_path):
    assert main(["run", str(_write(tmp_path, "{not json"))]) == 2


def test_grid_memory_budget_exceeded(tmp_path):
    bad = json.loads(json.dumps(SMALL))
    bad["grid"]["points_per_axis"] = 4096
    bad["grid"]["memory_budget"] = 1 << 20
    assert main(["run", str(_write(tmp_path, bad))]) == 3


def test_small_run_passes_and_is_reproducible(tmp_path):
    p = _write(tmp_path, SMALL)
    assert main(["run", str(p), "--output", str(tmp_path / "a")]) == 0
    assert main(["run", str(p), "--output", str(tmp_path / "b"), "--workers", "2"]) == 0
    ra = (tmp_path / "a" / "report.json").read_text()
    assert ra == (tmp_path / "b" / "report.json").read_text()
    rep = json.loads(ra)
    assert rep["pass"] is True and rep["reason"] is None
    for t in rep["tests"]:
        assert {"statistic", "dof", "p", "pass", "seed"} <= set(t)
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert {"config", "config_hash", "seed", "versions"} <= set(man)
    for s in (0, 1, 2):
        assert (tmp_path / "a" / f"samples_seed{s}.csv").read_text() == \
            (tmp_path / "b" / f"samples_seed{s}.csv").read_text()


def test_seed_override(tmp_path):
    p = _write(tmp_path, SMALL)
    assert main(["run", str(p), "--seed", "5", "--output", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["seeds"] == [5, 6, 7]


def test_velocity_control_fails(tmp_path):
    bad = _with(SMALL, law={"kind": "full", "velocity_scale": 2.0}, T=1.0)
    assert main(["run", str(_write(tmp_path, bad)), "--output", str(tmp_path / "o")]) == 1
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["pass"] is False and "seeds passed" in rep["reason"]


def test_figures_written(tmp_path):
    p = _write(tmp_path, _with(SMALL, n_seeds=1, n=500))
    assert main(["run", str(p), "--output", str(tmp_path / "o"), "--figures"]) == 0
    assert list((tmp_path / "o").glob("*.png"))


def test_markovization_run(tmp_path):
    cfg = _with(SMALL, kind="markovization", law={"kind": "jump"}, n_seeds=1, n=1000,
                partition={"bounds": [[0.0, None]]})
    assert main(["run", str(_write(tmp_path, cfg)), "--output", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["sector_mass_sum_max_error"] <= 1e-8


def test_trajectories_run(tmp_path):
    cfg = _with(SMALL, kind="trajectories", n=100, record_every=5)
    assert main(["run", str(_write(tmp_path, cfg)), "--output", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "trajectories.csv").read_text().splitlines()
    assert len(lines) > 100


def test_dump_state_roundtrip(tmp_path):
    p = _write(tmp_path, SMALL)
    out = tmp_path / "psi.bin"
    assert main(["dump-state", str(p), "--output", str(out)]) == 0
    psi = load_state(out)
    assert psi.grid.spec.points_per_axis == 64
    np.testing.assert_allclose(psi.norm2(), 1.0, atol=1e-6)
    ref = build(parse_config(p)).psi0.amplitudes.astype(np.complex64)
    assert psi.amplitudes.astype(np.complex64).tobytes() == ref.tobytes()


def test_bundled_scenarios_validate():
    names = bundled_scenarios()
    assert "equivariance_full" in names and "markovization_half_line" in names
    for name in names:
        parse_config(scenario_path(name))


def test_verify_list(capsys):
    assert main(["verify", "--list"]) == 0
    out = capsys.readouterr().out.split()
    assert set(row_names()) == set(out)


def test_verify_empty_suite_warns(tmp_path, capsys):
    assert main(["verify", "--suite", str(_write(tmp_path, "", "empty.txt"))]) == 0
    assert "warning" in capsys.readouterr().err


def test_verify_unknown_row():
    assert main(["verify", "--row", "no_such_row"]) == 3


def test_verify_deterministic_row():
    assert main(["verify", "--row", "unitarity"]) == 0


@pytest.mark.slow
def test_injected_velocity_bug_is_caught():
    assert main(["verify", "--row", "equivariance_full", "--inject-velocity-bug"]) == 1
