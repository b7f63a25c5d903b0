"""Ensemble orchestration: run experiment cells, persist, fit, report.

An experiment is a grid of independent cells (usually (n, seed) pairs).
Each cell writes one CSV atomically (tmp file + rename) followed by a
".ok" marker, so an interrupted experiment resumes by skipping complete
cells. A JSON manifest records the config, its hash, package/library
versions, the master seed and per-cell statuses; timestamps live only
there (cell CSVs carry wall-time measurements but no clock times).

Cell CSV schemas (consumed by the report step and the plots component):

  greedy      step,m,open,xbar1..xbar5,xsd1..xsd5,wall_ms
  staged      i,bigbite,bigbite2,bite,m,open,devA1,devA2,devA3_j1..devA3_j5
  survival    x,p,P,phi_upper,abs_err        (one file per k)
  ramsey      n,seed,s,samples,violations,probe_size
  trajectory  x,phi_upper,phi_lower

report() aggregates a result tree into summary CSVs:

  scaling_fit.csv        n,ratio,c_fit,ratio_nolog,c_fit_nolog
  trajectory_overlay.csv x,empirical,predicted,residual
  eventA.csv             i,devA1,devA2,devA3_j1..devA3_j5
  survival_errors.csv    x,err_k<k1>,err_k<k2>,...
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import __version__, rng
from .errors import ConfigError
from . import greedy as greedy_mod
from . import ramsey as ramsey_mod
from . import staged as staged_mod
from . import survival as survival_mod
from . import trajectory as trajectory_mod

KINDS = ("greedy", "staged", "survival", "ramsey", "trajectory")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    out_dir: str
    n_grid: tuple[int, ...] = ()
    seeds: tuple[int, ...] = ()
    params: dict = field(default_factory=dict)
    master_seed: int = rng.DEFAULT_MASTER_SEED
    parallelism: int = 1

    def __post_init__(self):
        problems = []
        if self.kind not in KINDS:
            problems.append(f"kind {self.kind!r} not in {KINDS}")
        if len(set(self.seeds)) != len(self.seeds):
            problems.append("seeds not distinct")
        if list(self.n_grid) != sorted(self.n_grid):
            problems.append("n grid not ascending")
        if self.parallelism < 1:
            problems.append(f"parallelism {self.parallelism} < 1")
        # fail early on per-kind constraint violations
        try:
            if self.kind == "greedy":
                greedy_mod.parse_checkpoints(self.params.get("checkpoints"))
                for n in self.n_grid:
                    if n < 4:
                        problems.append(f"n={n} < 4")
            elif self.kind == "staged":
                for n in self.n_grid:
                    staged_mod.make_params(
                        n,
                        self.params.get("profile", "desk"),
                        rounds=self.params.get("rounds"),
                        master_seed=self.master_seed,
                    )
            elif self.kind == "ramsey":
                c = float(self.params.get("C", staged_mod.DEFAULT_COVER_C))
                if c <= 0:
                    problems.append(f"C={c} must be positive")
            elif self.kind == "survival":
                ks = self.params.get("k_grid", [])
                if not ks:
                    problems.append("survival needs a k_grid")
            elif self.kind == "trajectory":
                if float(self.params.get("x_max", 10.0)) <= 0:
                    problems.append("x_max must be positive")
        except ConfigError as exc:
            problems.append(str(exc))
        if problems:
            raise ConfigError("invalid experiment config: " + "; ".join(problems))

    def to_jsonable(self) -> dict:
        d = asdict(self)
        d["n_grid"] = list(self.n_grid)
        d["seeds"] = list(self.seeds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(
            kind=d["kind"],
            out_dir=d["out_dir"],
            n_grid=tuple(d.get("n_grid", ())),
            seeds=tuple(d.get("seeds", ())),
            params=dict(d.get("params", {})),
            master_seed=int(d.get("master_seed", rng.DEFAULT_MASTER_SEED)),
            parallelism=int(d.get("parallelism", 1)),
        )


def config_hash(config: ExperimentConfig) -> str:
    blob = json.dumps(config.to_jsonable(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
    path.with_name(path.name + ".ok").write_text("")


def _cell_complete(path: Path) -> bool:
    return path.exists() and path.with_name(path.name + ".ok").exists()


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def greedy_run_csv(run: greedy_mod.GreedyRun) -> str:
    head = (
        "step,m,open,"
        + ",".join(f"xbar{j}" for j in range(1, 6))
        + ","
        + ",".join(f"xsd{j}" for j in range(1, 6))
        + ",wall_ms\n"
    )
    lines = [head]
    for r in run.records:
        cells = (
            [str(r.step), str(r.m), str(r.open_count)]
            + [_fmt(v) for v in r.x_mean]
            + [_fmt(v) for v in r.x_sd]
            + [f"{r.wall_ms:.3f}"]
        )
        lines.append(",".join(cells) + "\n")
    return "".join(lines)


def _cell_greedy(config: ExperimentConfig, n: int, seed: int) -> str:
    p = config.params
    checkpoints = greedy_mod.parse_checkpoints(p.get("checkpoints"))
    stop_at_m = None
    if p.get("stop_frac") is not None:
        stop_at_m = round(float(p["stop_frac"]) * n ** 1.6)
    elif p.get("stop_at_m") is not None:
        stop_at_m = int(p["stop_at_m"])
    run = greedy_mod.run_greedy(
        n,
        seed,
        checkpoints=checkpoints,
        stop_at_m=stop_at_m,
        sample_size=int(p.get("sample_size", 200)),
        master_seed=config.master_seed,
    )
    return greedy_run_csv(run)


def staged_round_csv(reports: list) -> str:
    head = (
        "i,bigbite,bigbite2,bite,m,open,devA1,devA2,"
        + ",".join(f"devA3_j{j}" for j in range(1, 6))
        + "\n"
    )
    lines = [head]
    for sizes, rep in reports:
        cells = (
            [str(rep.i)]
            + [str(s) for s in sizes]
            + [str(rep.m), str(rep.open_count), _fmt(rep.m_dev), _fmt(rep.open_dev)]
            + [_fmt(d) for d in rep.comp_dev]
        )
        lines.append(",".join(cells) + "\n")
    return "".join(lines)


def _cell_staged(config: ExperimentConfig, n: int, seed: int) -> str:
    p = config.params
    params = staged_mod.make_params(
        n,
        p.get("profile", "desk"),
        rounds=p.get("rounds"),
        master_seed=_cell_master(config.master_seed, seed),
    )
    table = trajectory_mod.solve_ode(
        max(1e-6, params.rounds * n ** (-params.eps1)) + 0.5, 1e-3
    )
    state = staged_mod.initial_state(params)
    rows = []
    sample = int(p.get("sample_size", 200))
    for _ in range(params.rounds):
        state = staged_mod.step(state, params)
        rep = staged_mod.measure_tracking(state, params, table, sample_size=sample)
        sizes = (len(state.bigbite), len(state.bigbite2), len(state.bite))
        rows.append((sizes, rep))
    return staged_round_csv(rows)


def _cell_master(master_seed: int, seed: int) -> int:
    # staged runs key all their streams off master_seed; give each
    # ensemble cell its own derived master so seeds decorrelate
    k1, _ = rng.stream_key(master_seed, "cell-master", seed)
    return k1


def _cell_ramsey(config: ExperimentConfig, n: int, seed: int) -> str:
    p = config.params
    c = float(p.get("C", staged_mod.DEFAULT_COVER_C))
    samples = int(p.get("samples", 10000))
    run = greedy_mod.run_greedy(
        n, seed, sample_size=0, master_seed=config.master_seed
    )
    s = min(n, staged_mod.default_subset_size(n, c))
    rep = ramsey_mod.check_s_subsets(
        run.graph,
        s,
        samples,
        seed=_cell_master(config.master_seed, seed),
        probe_budget=p.get("probe_budget"),
    )
    return (
        "n,seed,s,samples,violations,probe_size\n"
        f"{n},{seed},{s},{samples},{rep.violations},{rep.probe.size}\n"
    )


def _cell_survival(config: ExperimentConfig, k: float) -> str:
    p = config.params
    x_max = float(p.get("x_max", 3.0))
    h = float(p.get("h", 1e-4))
    cur = survival_mod.regular_tree_limit(k, x_max, h)
    table = trajectory_mod.solve_ode(x_max, h)
    lines = ["x,p,P,phi_upper,abs_err\n"]
    stride = max(1, len(cur.grid) // int(p.get("max_rows", 3001)))
    for idx in range(0, len(cur.grid), stride):
        x = cur.grid[idx]
        err = abs(cur.P[idx] - table.phi_upper[idx])
        lines.append(
            f"{_fmt(x)},{_fmt(cur.p[idx])},{_fmt(cur.P[idx])},"
            f"{_fmt(table.phi_upper[idx])},{err:.6e}\n"
        )
    return "".join(lines)


def _cell_trajectory(config: ExperimentConfig) -> str:
    p = config.params
    table = trajectory_mod.solve_ode(float(p.get("x_max", 10.0)), float(p.get("h", 1e-3)))
    lines = ["x,phi_upper,phi_lower\n"]
    for x, up, lo in zip(table.x, table.phi_upper, table.phi_lower):
        lines.append(f"{x:.12g},{up:.17g},{lo:.17g}\n")
    return "".join(lines)


def cell_layout(config: ExperimentConfig) -> list[tuple[str, tuple]]:
    """(cell file name, dispatch args) for every cell in the config."""
    cells: list[tuple[str, tuple]] = []
    if config.kind in ("greedy", "staged", "ramsey"):
        for n in config.n_grid:
            for seed in config.seeds:
                cells.append((f"{config.kind}_n{n}_s{seed}.csv", (n, seed)))
    elif config.kind == "survival":
        for k in config.params.get("k_grid", []):
            cells.append((f"survival_k{int(k)}.csv", (float(k),)))
    elif config.kind == "trajectory":
        cells.append(("trajectory.csv", ()))
    return cells


def _run_cell(config: ExperimentConfig, name: str, args: tuple) -> tuple[str, str]:
    if config.kind == "greedy":
        text = _cell_greedy(config, *args)
    elif config.kind == "staged":
        text = _cell_staged(config, *args)
    elif config.kind == "ramsey":
        text = _cell_ramsey(config, *args)
    elif config.kind == "survival":
        text = _cell_survival(config, *args)
    else:
        text = _cell_trajectory(config)
    return name, text


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    statuses: dict[str, str]
    manifest_path: str

    @property
    def partial(self) -> bool:
        return any(s.startswith("failed") for s in self.statuses.values())


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute all cells (resuming completed ones), write the manifest."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = cell_layout(config)
    statuses: dict[str, str] = {}
    started = time.strftime("%Y-%m-%dT%H:%M:%S")

    todo = []
    for name, args in cells:
        if _cell_complete(out / name):
            statuses[name] = "resumed"
        else:
            todo.append((name, args))

    if config.parallelism > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            futures = {
                pool.submit(_run_cell, config, name, args): name for name, args in todo
            }
            for fut, name in futures.items():
                try:
                    _, text = fut.result()
                    _write_atomic(out / name, text)
                    statuses[name] = "done"
                except Exception as exc:  # cell failure shouldn't kill the run
                    statuses[name] = f"failed: {exc}"
    else:
        for name, args in todo:
            try:
                _, text = _run_cell(config, name, args)
                _write_atomic(out / name, text)
                statuses[name] = "done"
            except Exception as exc:
                statuses[name] = f"failed: {exc}"

    import scipy

    manifest = {
        "kind": config.kind,
        "config": config.to_jsonable(),
        "config_hash": config_hash(config),
        "master_seed": config.master_seed,
        "versions": {
            "k4flab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "started_at": started,
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "cells": {name: statuses[name] for name, _ in cells},
    }
    mpath = out / "manifest.json"
    _write_atomic(mpath, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"[harness] {config.kind}: {len(cells)} cells, master seed "
          f"{config.master_seed:#x}, manifest {mpath}")
    return ExperimentResult(config=config, statuses=statuses, manifest_path=str(mpath))


@dataclass(frozen=True)
class ScalingFit:
    """Fit of final edge counts against c * n^{8/5} (ln n)^{1/5}.

    ratios holds the per-n mean ratio against the model shape (without
    c); dispersion is max/min of those ratios; monotone_trend flags a
    strictly monotone drift of the ratios across the grid.
    """

    c: float
    log_factor: bool
    ratios: dict[int, float]
    dispersion: float
    monotone_trend: bool

    @property
    def model_label(self) -> str:
        return "n^(8/5) (ln n)^(1/5)" if self.log_factor else "n^(8/5)"


def fit_scaling(samples: dict[int, list[float]], log_factor: bool = True) -> ScalingFit:
    """Least-squares c on the log of the model; per-n ratios and spread."""
    if len(samples) < 3:
        raise ConfigError(f"need >= 3 distinct n, got {len(samples)}")
    for n, ms in samples.items():
        if len(ms) < 5:
            raise ConfigError(f"need >= 5 seeds per n, got {len(ms)} at n={n}")

    def model(n: int) -> float:
        g = n ** 1.6
        if log_factor:
            g *= math.log(n) ** 0.2
        return g

    logs = [
        math.log(m) - math.log(model(n)) for n, ms in samples.items() for m in ms
    ]
    c = math.exp(sum(logs) / len(logs))
    ratios = {
        n: (sum(ms) / len(ms)) / model(n) for n, ms in sorted(samples.items())
    }
    vals = list(ratios.values())
    dispersion = max(vals) / min(vals)
    increasing = all(b > a for a, b in zip(vals, vals[1:]))
    decreasing = all(b < a for a, b in zip(vals, vals[1:]))
    return ScalingFit(
        c=c,
        log_factor=log_factor,
        ratios=ratios,
        dispersion=dispersion,
        monotone_trend=increasing or decreasing,
    )


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    lines = path.read_text().strip().splitlines()
    head = lines[0].split(",")
    return head, [ln.split(",") for ln in lines[1:]]


def report(in_dir, out_dir) -> list[str]:
    """Aggregate a result tree into the summary CSVs for plotting."""
    src = Path(in_dir)
    dst = Path(out_dir)
    dst.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    greedy_cells = sorted(src.glob("greedy_n*_s*.csv"))
    if greedy_cells:
        finals: dict[int, list[float]] = {}
        overlay_rows = []
        for path in greedy_cells:
            stem = path.stem  # greedy_n{n}_s{seed}
            n = int(stem.split("_")[1][1:])
            head, rows = _read_csv(path)
            col = {h: i for i, h in enumerate(head)}
            last = rows[-1]
            finals.setdefault(n, []).append(float(last[col["m"]]))
            for r in rows:
                m = float(r[col["m"]])
                emp = float(r[col["open"]])
                pred = trajectory_mod.predicted_open_count(n, m)
                overlay_rows.append((m, emp, pred, emp - pred))
        ns = {n for n in finals}
        if len(ns) >= 3 and all(len(v) >= 5 for v in finals.values()):
            fit = fit_scaling(finals, log_factor=True)
            alt = fit_scaling(finals, log_factor=False)
            p = dst / "scaling_fit.csv"
            with open(p, "w") as fh:
                fh.write("n,ratio,c_fit,ratio_nolog,c_fit_nolog\n")
                for n in sorted(finals):
                    fh.write(
                        f"{n},{_fmt(fit.ratios[n])},{_fmt(fit.c)},"
                        f"{_fmt(alt.ratios[n])},{_fmt(alt.c)}\n"
                    )
            written.append(str(p))
        if overlay_rows:
            p = dst / "trajectory_overlay.csv"
            with open(p, "w") as fh:
                fh.write("x,empirical,predicted,residual\n")
                for m, emp, pred, res in sorted(overlay_rows):
                    fh.write(f"{_fmt(m)},{_fmt(emp)},{_fmt(pred)},{_fmt(res)}\n")
            written.append(str(p))

    staged_cells = sorted(src.glob("staged_n*_s*.csv"))
    if staged_cells:
        acc: dict[int, list[np.ndarray]] = {}
        for path in staged_cells:
            head, rows = _read_csv(path)
            col = {h: i for i, h in enumerate(head)}
            want = ["devA1", "devA2"] + [f"devA3_j{j}" for j in range(1, 6)]
            for r in rows:
                i = int(r[col["i"]])
                acc.setdefault(i, []).append(
                    np.array([float(r[col[w]]) for w in want])
                )
        p = dst / "eventA.csv"
        with open(p, "w") as fh:
            fh.write("i,devA1,devA2," + ",".join(f"devA3_j{j}" for j in range(1, 6)) + "\n")
            for i in sorted(acc):
                mean = np.mean(acc[i], axis=0)
                fh.write(str(i) + "," + ",".join(_fmt(v) for v in mean) + "\n")
        written.append(str(p))

    surv_cells = sorted(src.glob("survival_k*.csv"))
    if surv_cells:
        ks = []
        series = []
        xs = None
        for path in surv_cells:
            k = int(path.stem.split("k")[-1])
            head, rows = _read_csv(path)
            col = {h: i for i, h in enumerate(head)}
            ks.append(k)
            xs = [float(r[col["x"]]) for r in rows]
            series.append([float(r[col["abs_err"]]) for r in rows])
        order = np.argsort(ks)
        p = dst / "survival_errors.csv"
        with open(p, "w") as fh:
            fh.write("x," + ",".join(f"err_k{ks[i]}" for i in order) + "\n")
            for row_i in range(len(xs)):
                fh.write(
                    _fmt(xs[row_i])
                    + ","
                    + ",".join(f"{series[i][row_i]:.6e}" for i in order)
                    + "\n"
                )
        written.append(str(p))

    ramsey_cells = sorted(src.glob("ramsey_n*_s*.csv"))
    if ramsey_cells:
        p = dst / "cover.csv"
        with open(p, "w") as fh:
            fh.write("n,seed,s,samples,violations,probe_size\n")
            for path in ramsey_cells:
                _, rows = _read_csv(path)
                for r in rows:
                    fh.write(",".join(r) + "\n")
        written.append(str(p))

    return written
