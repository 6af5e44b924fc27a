"""Command-line behavior: parsing, outputs, exit codes, reproducibility."""

import argparse
import csv
import json

import numpy as np
import pytest

from ductsim import cli, engine
from ductsim.config import load_config

TINY_CFG = """\
num_victim_bs = 2
num_aggressor_bs = 2
antennas_per_bs = 8
ues_per_cell = 2
pilot_len = 8
trials = 2
rng_seed = 7
fp_max_iters = 15
"""


@pytest.fixture
def tiny_cfg_path(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_CFG, encoding="utf-8")
    return path


def test_parse_sweep_grids():
    assert cli._parse_sweep("-10:10:30 dBm") == (-10.0, 0.0, 10.0, 20.0, 30.0)
    assert cli._parse_sweep("0:7:20") == (0.0, 7.0, 14.0)
    assert cli._parse_sweep("10:5:10") == (10.0,)


@pytest.mark.parametrize("bad", ["1:2", "a:b:c", "0:0:10", "10:5:0"])
def test_parse_sweep_rejects(bad):
    with pytest.raises(argparse.ArgumentTypeError):
        cli._parse_sweep(bad)


def test_parse_methods():
    assert cli._parse_methods("no_ri, null") == ("no_ri", "null")
    with pytest.raises(argparse.ArgumentTypeError, match="unknown method"):
        cli._parse_methods("no_ri,zf")
    with pytest.raises(argparse.ArgumentTypeError, match="no methods"):
        cli._parse_methods(" , ")


def test_missing_required_config_flag():
    with pytest.raises(SystemExit) as excinfo:
        cli.main([])
    assert excinfo.value.code == 2


def test_unreadable_config_exits_2(tmp_path, capsys):
    code = cli.main(["--config", str(tmp_path / "nope.cfg")])
    assert code == 2
    assert "configuration error: cannot read" in capsys.readouterr().err


def test_invalid_config_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("whatever = 1\n", encoding="utf-8")
    assert cli.main(["--config", str(path)]) == 2
    assert "whatever" in capsys.readouterr().err


def test_violated_invariant_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("ul_power = -1.0\n", encoding="utf-8")
    assert cli.main(["--config", str(path)]) == 2
    assert "ul_power" in capsys.readouterr().err


def test_blocked_output_dir_exits_1(tmp_path, tiny_cfg_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("file", encoding="utf-8")
    code = cli.main(["--config", str(tiny_cfg_path), "--methods", "no_ri",
                     "--out", str(blocker / "sub")])
    assert code == 1
    assert "runtime error: stage unknown" in capsys.readouterr().err


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_sweep_outputs_and_manifest(tmp_path, tiny_cfg_path):
    out = tmp_path / "out"
    code = cli.main(["--config", str(tiny_cfg_path),
                     "--methods", "no_ri,ignore_ri",
                     "--combiner", "both",
                     "--sweep", "-10:20:10",
                     "--out", str(out)])
    assert code == 0
    for name in ("nmse.csv", "ul_rate.csv", "dl_rate.csv", "manifest.json"):
        assert (out / name).exists()
    rows = _read_rows(out / "nmse.csv")
    assert rows[0] == ["method", "combiner", "p_ul_dbm", "mean_nmse",
                       "ci_low", "ci_high", "trials"]
    assert len(rows) == 1 + 2 * 2 * 2  # methods x combiners x grid
    assert _read_rows(out / "ul_rate.csv")[0] == \
        ["method", "combiner", "p_ul_dbm", "mean_ul_rate", "ci_low",
         "ci_high", "trials"]
    assert _read_rows(out / "dl_rate.csv")[0] == \
        ["method", "combiner", "p_ul_dbm", "mean_dl_rate", "ci_low",
         "ci_high", "trials"]
    assert all(row[-1] == "2" for row in rows[1:])

    manifest = json.loads((out / "manifest.json").read_text("utf-8"))
    assert manifest["tool"] == "ductsim"
    assert manifest["mode"] == "sweep"
    assert manifest["methods"] == ["no_ri", "ignore_ri"]
    assert manifest["combiners"] == ["mrc", "mmse"]
    assert manifest["p_ul_dbm"] == [-10.0, 10.0]
    assert manifest["trials"] == 2
    assert manifest["seed"] == 7
    assert manifest["backend"] in ("compiled", "python")
    assert manifest["outputs"]["nmse"] == "nmse.csv"
    assert "error_level_convention" in manifest["resolved_defaults"]
    assert manifest["config"]["pilot_len"] == 8


def test_sweep_values_match_library_at_full_precision(tmp_path,
                                                      tiny_cfg_path):
    out = tmp_path / "out"
    assert cli.main(["--config", str(tiny_cfg_path), "--methods",
                     "no_ri,null", "--sweep", "-10:20:10",
                     "--out", str(out)]) == 0
    cfg = load_config(tiny_cfg_path)
    sweep = engine.run_sweep(cfg, ("no_ri", "null"), (-10.0, 10.0), 2,
                             combiners=("mmse",))
    rows = _read_rows(out / "nmse.csv")[1:]
    for (mth, ip), row in zip(
            [(m, ip) for m in ("no_ri", "null") for ip in range(2)], rows):
        mean, lo, hi = sweep.mean_ci(sweep.nmse[(mth, ip)])
        assert row[0] == mth
        assert row[2] == format(float((-10.0, 10.0)[ip]), ".17g")
        assert row[3] == format(mean, ".17g")
        assert row[4] == format(lo, ".17g")
        assert row[5] == format(hi, ".17g")


def test_sweep_reruns_are_byte_identical(tmp_path, tiny_cfg_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    argv = ["--config", str(tiny_cfg_path), "--methods", "no_ri,null",
            "--sweep", "-10:20:10"]
    assert cli.main(argv + ["--out", str(out1)]) == 0
    assert cli.main(argv + ["--out", str(out2)]) == 0
    for name in ("nmse.csv", "ul_rate.csv", "dl_rate.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_flag_overrides_reach_the_manifest(tmp_path, tiny_cfg_path):
    out = tmp_path / "out"
    assert cli.main(["--config", str(tiny_cfg_path), "--methods", "no_ri",
                     "--seed", "123", "--trials", "1",
                     "--paper-literal-null-scalar", "--single-duct-angle",
                     "--true-angles", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text("utf-8"))
    assert manifest["seed"] == 123
    assert manifest["trials"] == 1
    assert manifest["true_angles"] is True
    assert manifest["config"]["rng_seed"] == 123
    assert manifest["config"]["paper_literal_null_scalar"] is True
    assert manifest["config"]["single_duct_angle"] is True
    # without a --sweep the configured power is the single grid point
    dbm = engine.watts_to_dbm(load_config(tiny_cfg_path).ul_power)
    assert manifest["p_ul_dbm"] == [pytest.approx(dbm)]


def test_fp_trace_mode_outputs(tmp_path, tiny_cfg_path):
    out = tmp_path / "out"
    code = cli.main(["--config", str(tiny_cfg_path), "--mode", "fp-trace",
                     "--trials", "2", "--out", str(out)])
    assert code == 0
    rows = _read_rows(out / "fp_objective.csv")
    assert rows[0] == ["iteration", "objective", "dl_ar_joint",
                       "dl_ar_dlonly"]
    assert [row[0] for row in rows[1:]] == \
        [str(i) for i in range(len(rows) - 1)]
    objective = np.array([float(row[1]) for row in rows[1:]])
    assert np.all(np.diff(objective) >= -1e-9)

    manifest = json.loads((out / "manifest.json").read_text("utf-8"))
    assert manifest["mode"] == "fp-trace"
    assert manifest["outputs"] == {"fp_objective": "fp_objective.csv"}
    for key in ("fp_runs_converged_joint", "fp_runs_converged_dlonly",
                "fp_final_dl_ar_joint_mean", "fp_final_dl_ar_dlonly_mean"):
        assert key in manifest
    assert 0 <= manifest["fp_runs_converged_joint"] <= 2


def test_fp_trace_reruns_are_byte_identical(tmp_path, tiny_cfg_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    argv = ["--config", str(tiny_cfg_path), "--mode", "fp-trace",
            "--trials", "2"]
    assert cli.main(argv + ["--out", str(out1)]) == 0
    assert cli.main(argv + ["--out", str(out2)]) == 0
    assert (out1 / "fp_objective.csv").read_bytes() == \
        (out2 / "fp_objective.csv").read_bytes()
