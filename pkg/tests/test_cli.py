import csv
import json

import numpy as np
import pytest

from latticegeo import cli
from latticegeo.config import ScenarioConfig, apply_overrides, config_from_mapping, parse_config, parse_value
from latticegeo.errors import ConfigError, ConfigParseError, DivergenceError
from latticegeo.presets import list_presets, load_preset
from latticegeo.runner import FIELDS_COLUMNS, SUMMARY_COLUMNS, load_config_file, run_scenario

SMALL = """
[lattice]
size = 41

[theta0]
center = 20
width = 3

[psi0]
center = 18
width = 3

[integrator]
steps = 40

[output]
record_every = 10
"""


def small_config(**overrides) -> ScenarioConfig:
    cfg = parse_config(SMALL)
    return apply_overrides(cfg, overrides) if overrides else cfg


def test_empty_document_defaults():
    cfg = parse_config("")
    assert cfg.lattice.size == 201
    assert cfg.integrator.ds == 1e-3
    assert cfg.flow.r == 3.0
    assert cfg.flow.mode == "flat_polar"
    assert (cfg.theta0.kind, cfg.theta0.center) == ("gaussian", 50.0)
    assert (cfg.psi0.kind, cfg.psi0.center) == ("gaussian", 25.0)


def test_zero_metric_value_names_index():
    values = [1.0] * 5
    values[3] = 0.0
    text = f'[lattice]\nsize = 5\n[metric]\nkind = "explicit"\nvalues = {values}\n[flow]\nmode = "generic"\n'
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == "metric.values[3]"


def test_flat_polar_rejects_nonconstant_metric():
    text = '[lattice]\nsize = 4\n[metric]\nkind = "explicit"\nvalues = [1, 2, 1, 2]\n'
    with pytest.raises(ConfigError, match="divergence-compatible"):
        parse_config(text)
    with pytest.raises(ConfigError, match="divergence-compatible"):
        parse_config('[metric]\nkind = "geometric-open"\nlambda = 1.1\n')


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("[flow]\nspeed = 3\n")
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[solver]\nx = 1\n")


def test_parse_error_location():
    with pytest.raises(ConfigParseError) as info:
        parse_config("[flow]\nr = = 3\n")
    assert info.value.line == 2
    assert info.value.column is not None


@pytest.mark.parametrize(
    "text, field",
    [
        ("[lattice]\nsize = 2\n", "lattice.size"),
        ("[integrator]\nds = 0.0\n", "integrator.ds"),
        ("[integrator]\nsteps = 0\n", "integrator.steps"),
        ("[flow]\nr = -1.0\n", "flow.r"),
        ('[flow]\nmode = "fast"\n', "flow.mode"),
        ('[flow]\nr = "x"\n', "flow.r"),
        ("[lattice]\nsize = 2.5\n", "lattice.size"),
        ('[output]\ntrack = "kappa"\n', "output.track"),
    ],
)
def test_validation_errors(text, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == field


def test_parse_value():
    assert parse_value("3") == 3
    assert parse_value("1e-3") == 1e-3
    assert parse_value("true") is True
    assert parse_value("generic") == "generic"
    assert parse_value("[1, 2]") == [1, 2]


def test_presets_listed():
    names = dict(list_presets())
    for required in (
        "fig1-theta-flow",
        "fig2-amplitude",
        "theta-constant-control",
        "plane-wave-control",
        "generic-metric-demo",
    ):
        assert required in names
    assert "Theta flow" in names["fig1-theta-flow"]
    assert "Amplitude flow" in names["fig2-amplitude"]
    for name in names:
        load_preset(name)


def _read_csv(path):
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    return rows[0], np.array(rows[1:], dtype=float)


def test_run_writes_artifacts(tmp_path):
    result = run_scenario(small_config(), tmp_path / "out")
    out = result.output_dir
    header, fields = _read_csv(out / "fields.csv")
    assert tuple(header) == FIELDS_COLUMNS
    assert fields.shape == (5 * 41, 7)
    header, summary = _read_csv(out / "summary.csv")
    assert tuple(header) == SUMMARY_COLUMNS
    assert summary.shape == (5, 8)
    np.testing.assert_allclose(summary[:, 0], [0, 0.01, 0.02, 0.03, 0.04])
    meta = json.loads((out / "run.json").read_text())
    assert meta["status"] == "ok"
    assert meta["software"]["package"] == "latticegeo"
    assert "wall_clock_seconds" in meta
    assert meta["config"]["lattice"]["size"] == 41
    # 17 significant digits round-trip doubles exactly
    np.testing.assert_array_equal(fields[:, 4], result.trajectory.psi.real.reshape(-1))
    np.testing.assert_array_equal(fields[:, 2], result.trajectory.theta.reshape(-1))


def test_run_json_round_trip_is_bit_identical(tmp_path):
    first = run_scenario(small_config(), tmp_path / "a")
    cfg = load_config_file(first.output_dir / "run.json")
    second = run_scenario(cfg, tmp_path / "b")
    for name in ("fields.csv", "summary.csv"):
        assert (first.output_dir / name).read_bytes() == (second.output_dir / name).read_bytes()


def test_stationary_run(tmp_path):
    result = run_scenario(small_config(**{"flow.r": 0.0}), tmp_path)
    _, summary = _read_csv(tmp_path / "summary.csv")
    np.testing.assert_array_equal(summary[:, 2], 0)
    traj = result.trajectory
    np.testing.assert_array_equal(traj.psi, np.broadcast_to(traj.psi[0], traj.psi.shape))
    np.testing.assert_array_equal(traj.theta, np.broadcast_to(traj.theta[0], traj.theta.shape))


def test_seam_warning(tmp_path):
    result = run_scenario(small_config(**{"psi0.center": 1.0}), tmp_path)
    assert any("seam" in w for w in result.warnings)
    meta = json.loads((tmp_path / "run.json").read_text())
    assert meta["warnings"]
    quiet = run_scenario(small_config(**{"psi0.center": 20.0, "psi0.width": 2.0}), tmp_path / "q")
    assert not quiet.warnings


def test_output_dir_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("OUTPUT_DIR", str(tmp_path / "env"))
    result = run_scenario(small_config())
    assert result.output_dir == tmp_path / "env"
    assert (tmp_path / "env" / "run.json").exists()


def test_divergence_writes_run_json(tmp_path):
    cfg = small_config(**{"flow.r": 1e6})
    with pytest.raises(DivergenceError):
        run_scenario(cfg, tmp_path)
    meta = json.loads((tmp_path / "run.json").read_text())
    assert meta["status"] == "diverged"
    assert meta["last_good_s"] >= 0


def test_generic_run_records_residuals(tmp_path):
    result = run_scenario(small_config(**{"flow.mode": "generic"}), tmp_path)
    assert result.diagnostics["max_reality_residual"] < 1e-10
    assert result.diagnostics["max_aux_residual"] < 1e-10


def test_cli_run_and_exit_codes(tmp_path, capsys):
    cfg_path = tmp_path / "scenario.toml"
    cfg_path.write_text(SMALL)
    assert cli.main(["run", str(cfg_path), "--out", str(tmp_path / "run")]) == 0
    assert (tmp_path / "run" / "fields.csv").exists()
    assert cli.main(["run", str(cfg_path), "--set", "flow.r=-2", "--out", str(tmp_path / "x")]) == 2
    assert "flow.r" in capsys.readouterr().err
    bad = tmp_path / "bad.toml"
    bad.write_text("[flow\n")
    assert cli.main(["run", str(bad), "--out", str(tmp_path / "y")]) == 2
    assert cli.main(["run", str(cfg_path), "--set", "flow.r=1e6", "--out", str(tmp_path / "z")]) == 3
    assert cli.main(["run", "--preset", "nope"]) == 2
    assert cli.main(["run", str(tmp_path / "missing.toml")]) == 2


def test_cli_preset_with_overrides(tmp_path):
    code = cli.main(
        [
            "run",
            "--preset",
            "fig2-amplitude",
            "--set",
            "integrator.steps=20",
            "--set",
            "output.record_every=10",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    meta = json.loads((tmp_path / "run.json").read_text())
    assert meta["preset"] == "fig2-amplitude"
    assert meta["config"]["output"]["track"] == "psi"
    assert meta["config"]["integrator"]["steps"] == 20


def test_cli_list_presets(capsys):
    assert cli.main(["list-presets"]) == 0
    out = capsys.readouterr().out
    assert "fig1-theta-flow" in out and "generic-metric-demo" in out


def test_cli_sweep(tmp_path):
    cfg_path = tmp_path / "scenario.toml"
    cfg_path.write_text(SMALL)
    base = tmp_path / "sweep"
    code = cli.main(
        ["sweep", str(cfg_path), "--vary", "flow.r=1.0,2.0", "--vary", "theta0.height=0.5,1.0",
         "--out", str(base), "--jobs", "2"]
    )
    assert code == 0
    index = json.loads((base / "sweep.json").read_text())
    assert len(index) == 4
    assert [r["dir"] for r in index] == sorted(r["dir"] for r in index)
    for r in index:
        assert (tmp_path / r["dir"]).joinpath("summary.csv").exists()
    sub = base / "flow.r=2.0__theta0.height=0.5"
    meta = json.loads((sub / "run.json").read_text())
    assert meta["config"]["flow"]["r"] == 2.0
    # the sweep member matches a direct run of the same config
    direct = run_scenario(small_config(**{"flow.r": 2.0, "theta0.height": 0.5}), tmp_path / "direct")
    assert (sub / "fields.csv").read_bytes() == (direct.output_dir / "fields.csv").read_bytes()


def test_config_from_mapping_round_trip():
    cfg = small_config(**{"metric.kind": "geometric-open", "metric.lambda": 1.5, "flow.mode": "generic"})
    again = config_from_mapping(cfg.to_dict())
    assert again == cfg
    assert cfg.to_dict()["metric"]["lambda"] == 1.5
