import json
import math

import pytest

from k4flab import harness
from k4flab.errors import ConfigError
from k4flab.harness import (
    ExperimentConfig,
    config_hash,
    fit_scaling,
    report,
    run_experiment,
)


def greedy_config(out, ns=(12,), seeds=(0, 1), **params):
    params.setdefault("sample_size", 0)
    params.setdefault("checkpoints", "t4")
    return ExperimentConfig(
        kind="greedy", out_dir=str(out), n_grid=tuple(ns),
        seeds=tuple(seeds), params=params,
    )


# ---------- config ----------

def test_config_validation_collects_problems():
    with pytest.raises(ConfigError) as err:
        ExperimentConfig(
            kind="anneal", out_dir="x", n_grid=(20, 10), seeds=(1, 1),
            parallelism=0,
        )
    msg = str(err.value)
    for frag in ("not in", "seeds not distinct", "ascending", "< 1"):
        assert frag in msg, frag


def test_config_per_kind_guards(tmp_path):
    with pytest.raises(ConfigError, match="n=3 < 4"):
        ExperimentConfig(kind="greedy", out_dir="x", n_grid=(3,), seeds=(0,))
    with pytest.raises(ConfigError, match="checkpoint"):
        ExperimentConfig(kind="greedy", out_dir="x", n_grid=(10,),
                         seeds=(0,), params={"checkpoints": "x5"})
    with pytest.raises(ConfigError, match="profile"):
        ExperimentConfig(kind="staged", out_dir="x", n_grid=(30,),
                         seeds=(0,), params={"profile": "nope"})
    with pytest.raises(ConfigError, match="k_grid"):
        ExperimentConfig(kind="survival", out_dir="x")
    with pytest.raises(ConfigError, match="positive"):
        ExperimentConfig(kind="ramsey", out_dir="x", n_grid=(30,),
                         seeds=(0,), params={"C": -1})
    with pytest.raises(ConfigError, match="x_max"):
        ExperimentConfig(kind="trajectory", out_dir="x",
                         params={"x_max": 0.0})


def test_config_roundtrip_and_hash(tmp_path):
    cfg = greedy_config(tmp_path, ns=(12, 16), seeds=(0, 1, 2))
    again = ExperimentConfig.from_dict(cfg.to_jsonable())
    assert again == cfg
    h = config_hash(cfg)
    assert len(h) == 16 and int(h, 16) >= 0
    assert config_hash(again) == h
    other = greedy_config(tmp_path, ns=(12, 16), seeds=(0, 1, 3))
    assert config_hash(other) != h


# ---------- scaling fit ----------

def synthetic_samples(c, ns=(100, 200, 400), per_n=5, log_factor=True):
    out = {}
    for n in ns:
        m = c * n ** 1.6
        if log_factor:
            m *= math.log(n) ** 0.2
        out[n] = [m] * per_n
    return out


def test_fit_scaling_recovers_exact_model():
    fit = fit_scaling(synthetic_samples(0.4))
    assert fit.c == pytest.approx(0.4, rel=1e-12)
    assert fit.log_factor
    assert set(fit.ratios) == {100, 200, 400}
    for r in fit.ratios.values():
        assert r == pytest.approx(0.4, rel=1e-12)
    assert fit.dispersion == pytest.approx(1.0, rel=1e-12)
    assert not fit.monotone_trend
    assert "ln n" in fit.model_label


def test_fit_scaling_wrong_model_shows_drift():
    # data carries the log factor; fitting without it leaves a monotone
    # residual ratio
    fit = fit_scaling(synthetic_samples(0.4), log_factor=False)
    vals = [fit.ratios[n] for n in sorted(fit.ratios)]
    assert vals == sorted(vals)
    assert fit.monotone_trend
    assert fit.dispersion > 1.0
    assert "ln" not in fit.model_label


def test_fit_scaling_guards():
    with pytest.raises(ConfigError, match=">= 3 distinct n"):
        fit_scaling(synthetic_samples(0.4, ns=(100, 200)))
    bad = synthetic_samples(0.4)
    bad[200] = bad[200][:4]
    with pytest.raises(ConfigError, match=">= 5 seeds"):
        fit_scaling(bad)


# ---------- run_experiment ----------

def read_manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_trajectory_cell_and_manifest(tmp_path):
    cfg = ExperimentConfig(
        kind="trajectory", out_dir=str(tmp_path),
        params={"x_max": 1.0, "h": 1e-3},
    )
    res = run_experiment(cfg)
    assert res.statuses == {"trajectory.csv": "done"}
    assert not res.partial
    cell = tmp_path / "trajectory.csv"
    assert cell.exists() and (tmp_path / "trajectory.csv.ok").exists()
    assert not list(tmp_path.glob("*.tmp"))
    assert cell.read_text().startswith("x,phi_upper,phi_lower\n")

    man = read_manifest(tmp_path)
    assert man["config_hash"] == config_hash(cfg)
    assert man["cells"] == {"trajectory.csv": "done"}
    assert set(man["versions"]) == {"k4flab", "numpy", "scipy"}
    assert man["kind"] == "trajectory"

    before = cell.read_bytes()
    res2 = run_experiment(cfg)
    assert res2.statuses == {"trajectory.csv": "resumed"}
    assert cell.read_bytes() == before


def strip_wall(text):
    head, *rows = text.strip().splitlines()
    assert head.split(",")[-1] == "wall_ms"
    return [",".join(r.split(",")[:-1]) for r in [head] + rows]


def test_greedy_cells_deterministic_up_to_wall_time(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        run_experiment(greedy_config(out))
    for name in ("greedy_n12_s0.csv", "greedy_n12_s1.csv"):
        ta = strip_wall((a / name).read_text())
        tb = strip_wall((b / name).read_text())
        assert ta == tb
    assert strip_wall((a / "greedy_n12_s0.csv").read_text()) != strip_wall(
        (a / "greedy_n12_s1.csv").read_text())


def test_resume_reruns_only_incomplete_cells(tmp_path):
    cfg = greedy_config(tmp_path)
    run_experiment(cfg)
    keep = strip_wall((tmp_path / "greedy_n12_s1.csv").read_text())
    (tmp_path / "greedy_n12_s0.csv.ok").unlink()
    res = run_experiment(cfg)
    assert res.statuses["greedy_n12_s0.csv"] == "done"
    assert res.statuses["greedy_n12_s1.csv"] == "resumed"
    assert strip_wall((tmp_path / "greedy_n12_s1.csv").read_text()) == keep


def test_staged_cells_byte_identical_across_dirs(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for out, seeds in ((a, (0, 1)), (b, (0, 1)), (c, (1,))):
        cfg = ExperimentConfig(
            kind="staged", out_dir=str(out), n_grid=(30,), seeds=seeds,
            params={"rounds": 2, "sample_size": 50},
        )
        run_experiment(cfg)
    name = "staged_n30_s0.csv"
    assert (a / name).read_bytes() == (b / name).read_bytes()
    # a cell depends only on its own (n, seed), not on the grid shape
    assert (a / "staged_n30_s1.csv").read_bytes() == \
        (c / "staged_n30_s1.csv").read_bytes()
    head = (a / name).read_text().splitlines()[0]
    assert head == ("i,bigbite,bigbite2,bite,m,open,devA1,devA2,"
                    "devA3_j1,devA3_j2,devA3_j3,devA3_j4,devA3_j5")


def test_failed_cell_marks_partial_and_retries(tmp_path, monkeypatch):
    cfg = greedy_config(tmp_path)
    real = harness._cell_greedy

    def flaky(config, n, seed):
        if seed == 1:
            raise RuntimeError("boom")
        return real(config, n, seed)

    monkeypatch.setattr(harness, "_cell_greedy", flaky)
    res = run_experiment(cfg)
    assert res.statuses["greedy_n12_s0.csv"] == "done"
    assert res.statuses["greedy_n12_s1.csv"].startswith("failed: boom")
    assert res.partial
    assert not (tmp_path / "greedy_n12_s1.csv.ok").exists()
    man = read_manifest(tmp_path)
    assert man["cells"]["greedy_n12_s1.csv"].startswith("failed")

    # next run with the bug gone finishes the missing cell only
    monkeypatch.setattr(harness, "_cell_greedy", real)
    res2 = run_experiment(cfg)
    assert res2.statuses["greedy_n12_s0.csv"] == "resumed"
    assert res2.statuses["greedy_n12_s1.csv"] == "done"
    assert not res2.partial


def test_empty_seed_grid_is_a_noop(tmp_path):
    cfg = greedy_config(tmp_path, seeds=())
    res = run_experiment(cfg)
    assert res.statuses == {}
    assert not res.partial
    assert (tmp_path / "manifest.json").exists()


def test_parallel_matches_serial(tmp_path):
    outs = {}
    for tag, par in (("ser", 1), ("par", 2)):
        out = tmp_path / tag
        cfg = ExperimentConfig(
            kind="survival", out_dir=str(out), parallelism=par,
            params={"k_grid": [2, 4], "x_max": 1.0, "h": 1e-3,
                    "max_rows": 40},
        )
        res = run_experiment(cfg)
        assert set(res.statuses.values()) == {"done"}
        outs[tag] = {
            p.name: p.read_bytes() for p in out.glob("survival_k*.csv")
        }
    assert outs["ser"] == outs["par"]
    assert set(outs["ser"]) == {"survival_k2.csv", "survival_k4.csv"}


def test_ramsey_cell_schema(tmp_path):
    cfg = ExperimentConfig(
        kind="ramsey", out_dir=str(tmp_path), n_grid=(30,), seeds=(0,),
        params={"C": 1.4, "samples": 50, "probe_budget": 100},
    )
    run_experiment(cfg)
    lines = (tmp_path / "ramsey_n30_s0.csv").read_text().splitlines()
    assert lines[0] == "n,seed,s,samples,violations,probe_size"
    n, seed, s, samples, violations, probe = map(int, lines[1].split(","))
    assert (n, seed, samples) == (30, 0, 50)
    assert 3 <= s <= 30
    assert 0 <= violations <= 50
    assert 2 <= probe <= 30


# ---------- report ----------

def test_report_golden_headers(tmp_path):
    src = tmp_path / "cells"
    dst = tmp_path / "summary"
    run_experiment(greedy_config(src, ns=(12, 13, 14), seeds=range(5)))
    run_experiment(ExperimentConfig(
        kind="staged", out_dir=str(src), n_grid=(30,), seeds=(0, 1),
        params={"rounds": 2, "sample_size": 50},
    ))
    run_experiment(ExperimentConfig(
        kind="survival", out_dir=str(src),
        params={"k_grid": [2, 4], "x_max": 1.0, "h": 1e-3, "max_rows": 40},
    ))
    run_experiment(ExperimentConfig(
        kind="ramsey", out_dir=str(src), n_grid=(30,), seeds=(0,),
        params={"C": 1.4, "samples": 20, "probe_budget": 100},
    ))

    written = report(src, dst)
    names = {p.split("/")[-1] for p in written}
    assert names == {"scaling_fit.csv", "trajectory_overlay.csv",
                     "eventA.csv", "survival_errors.csv", "cover.csv"}

    fit_lines = (dst / "scaling_fit.csv").read_text().splitlines()
    assert fit_lines[0] == "n,ratio,c_fit,ratio_nolog,c_fit_nolog"
    assert [int(r.split(",")[0]) for r in fit_lines[1:]] == [12, 13, 14]
    c_fit = {float(r.split(",")[2]) for r in fit_lines[1:]}
    assert len(c_fit) == 1  # one global fit repeated per row

    over = (dst / "trajectory_overlay.csv").read_text().splitlines()
    assert over[0] == "x,empirical,predicted,residual"
    x0, emp, pred, resid = map(float, over[1].split(","))
    assert resid == pytest.approx(emp - pred, abs=1e-6)

    ev = (dst / "eventA.csv").read_text().splitlines()
    assert ev[0] == ("i,devA1,devA2,devA3_j1,devA3_j2,devA3_j3,"
                     "devA3_j4,devA3_j5")
    assert [int(r.split(",")[0]) for r in ev[1:]] == [1, 2]

    surv = (dst / "survival_errors.csv").read_text().splitlines()
    assert surv[0] == "x,err_k2,err_k4"

    cover = (dst / "cover.csv").read_text().splitlines()
    assert cover[0] == "n,seed,s,samples,violations,probe_size"
    assert cover[1].startswith("30,0,")
