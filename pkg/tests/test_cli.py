import json

import pytest

from cssf import store
from cssf.cli import main


def sets(tmp_path, **kw):
    args = ["--set", f"output_dir={tmp_path}"]
    for k, v in kw.items():
        args += ["--set", f"{k.replace('__', '.')}={v}"]
    return args


def test_presets(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in ("circle", "ellipse", "offset_circle", "wave3d", "trefoil", "perturbed_circle"):
        assert f"{name}(" in out


def test_run_then_export(tmp_path, capsys):
    assert main(["run", *sets(tmp_path, preset="wave3d", n_nodes=64, t_end=0.01,
                              snapshot_every=5, formats="csv,svg")]) == 0
    traj = store.read_trajectory(tmp_path / "trajectory")
    assert traj.times[-1] == 0.01 and len(traj) >= 3
    assert (tmp_path / "curves_xy.svg").exists() and (tmp_path / "curves_xz.svg").exists()

    assert main(["export", "--what", "curves", "--format", "csv", *sets(tmp_path)]) == 0
    assert (tmp_path / "frame_00000.csv").read_text().startswith("i,x,kappa")
    assert main(["export", "--what", "energies", "--format", "csv", *sets(tmp_path)]) == 0
    rows = store.read_reports_csv(tmp_path / "summary_huisken.csv")
    assert len(rows) == len(traj) - 2
    assert main(["export", "--what", "energies", "--pair", "lambda:2", *sets(tmp_path)]) == 0
    assert (tmp_path / "energy_lambda_2.0.svg").exists()


def test_export_functions(tmp_path):
    assert main(["export", "--what", "functions", *sets(tmp_path)]) == 0
    for name in ("f_lambda", "h", "rb"):
        assert (tmp_path / f"{name}.svg").read_text().startswith("<svg")
    assert main(["export", "--what", "functions", "--format", "csv", *sets(tmp_path)]) == 2


def test_export_without_run(tmp_path, capsys):
    assert main(["export", "--what", "curves", *sets(tmp_path)]) == 2
    assert "run `cssf run` first" in capsys.readouterr().err


def test_verify_passes(tmp_path, capsys):
    code = main(["verify", "--pair", "huisken",
                 *sets(tmp_path, n_nodes=256, t_end=0.004, snapshot_every=20)])
    out = capsys.readouterr().out
    assert code == 0, out
    lines = [l for l in out.splitlines() if l.startswith("tau=")]
    assert lines and all(l.endswith("PASS") and "(thr " in l for l in lines)
    assert "thm-generic=" in lines[0]
    reports = json.loads((tmp_path / "reports_huisken.json").read_text())
    assert len(reports) == len(lines)
    assert (tmp_path / "summary_huisken.csv").exists()


def test_verify_residual_failure(tmp_path, capsys):
    # at n = 128 the order-4 truncation of the chain-rule residual is ~1.6e-5
    code = main(["verify", *sets(tmp_path, n_nodes=128, t_end=0.004, snapshot_every=20)])
    assert code == 1
    assert "FAIL" in capsys.readouterr().out


def test_verify_sphere_offset_circle(tmp_path, capsys):
    code = main(["verify", "--pair", "sphere",
                 *sets(tmp_path, preset="offset_circle", n_nodes=256, t_end=0.01,
                       snapshot_every=20)])
    out = capsys.readouterr().out
    assert code == 0, out
    line = next(l for l in out.splitlines() if l.startswith("singular_sum"))
    assert float(line.split(":")[1]) == pytest.approx(-2.309, abs=2e-3)


def test_verify_needs_rescaled(tmp_path):
    assert main(["verify", *sets(tmp_path, frame="physical")]) == 2


def test_abort_saves_last_good(tmp_path, capsys):
    assert main(["run", *sets(tmp_path, dt_safety=10)]) == 3
    err = capsys.readouterr().err
    assert "singularity resolution exceeded" in err
    last = store.read_snapshot(tmp_path / "last_good.csv")
    assert last.n_nodes == 256


@pytest.mark.parametrize("argv", [["verify", "--pair", "kepler"], ["fly"], [],
                                  ["run", "--set", "n_nodes=15"],
                                  ["run", "--set", "preset.R=-1", "--set", "preset=circle"],
                                  ["export"]])
def test_usage_errors(tmp_path, argv, capsys):
    assert main(argv + sets(tmp_path) if argv and argv[0] in ("verify", "run") else argv) == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"preset = circle\nn_nodes = 64\nt_end = 0.001\noutput_dir = {tmp_path}\n")
    assert main(["run", "--config", str(cfg)]) == 0
    assert store.read_trajectory(tmp_path / "trajectory").states[0].n_nodes == 64
