"""The K4-free random greedy process in uniform random order.

All C(n,2) vertex pairs are traversed in a seeded uniform random
permutation; each pair is added to the growing graph M unless that
would close a K4. The run is a pure function of (n, seed, master seed):
the permutation comes from a keyed counter-based stream, so ensembles
are reproducible cell by cell.

Observables are snapshotted at checkpoints ("t<k>" = after the k-th
traversal, "m<k>" = right after the edge count reaches k): the open-pair
count and sampled per-open-pair completion statistics, which are what
the closed-form predictions in the trajectory module talk about.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import ConfigError
from .graphcore import (
    Graph,
    PairCodec,
    completion_profile,
    good_rows,
    open_pair_rows,
    rows_to_pairs,
)

_DECODE_CHUNK = 1 << 18
_SAMPLE_SIZE_DEFAULT = 200


@dataclass(frozen=True)
class Checkpoint:
    kind: str  # "t" (traversal count) or "m" (edge-count target)
    value: int

    def __post_init__(self):
        if self.kind not in ("t", "m"):
            raise ConfigError(f"checkpoint kind {self.kind!r} not in t/m")
        if self.value < 0:
            raise ConfigError(f"checkpoint value {self.value} negative")


def parse_checkpoints(spec: str | None) -> list[Checkpoint]:
    """Parse "t1000,m57450,..." into Checkpoint objects."""
    if not spec or spec == "none":
        return []
    out = []
    for tok in spec.split(","):
        tok = tok.strip()
        if not tok:
            continue
        kind, val = tok[0], tok[1:]
        if kind not in ("t", "m") or not val.isdigit():
            raise ConfigError(f"bad checkpoint token {tok!r} (want t<int> or m<int>)")
        out.append(Checkpoint(kind, int(val)))
    return out


@dataclass
class RunRecord:
    """Snapshot of one checkpoint (or the final state)."""

    step: int
    m: int
    open_count: int
    x_mean: tuple[float, ...]  # mean completion counts, j = 1..5
    x_sd: tuple[float, ...]
    wall_ms: float

    def same_content(self, other: "RunRecord") -> bool:
        """Equality ignoring wall time."""
        return (
            self.step == other.step
            and self.m == other.m
            and self.open_count == other.open_count
            and self.x_mean == other.x_mean
            and self.x_sd == other.x_sd
        )


@dataclass
class GreedyRun:
    n: int
    seed: int
    master_seed: int
    checkpoints: list[Checkpoint]
    graph: Graph
    trav: Graph
    records: list[RunRecord] = field(default_factory=list)
    exhausted: bool = True

    def same_content(self, other: "GreedyRun") -> bool:
        return (
            self.n == other.n
            and self.seed == other.seed
            and self.master_seed == other.master_seed
            and self.checkpoints == other.checkpoints
            and self.graph == other.graph
            and self.trav == other.trav
            and self.exhausted == other.exhausted
            and len(self.records) == len(other.records)
            and all(a.same_content(b) for a, b in zip(self.records, other.records))
        )


def _order_stream(master_seed: int, n: int, seed: int) -> np.random.Generator:
    return rng.stream(master_seed, "greedy-edge-order", n, seed)


def _sample_stats(M: Graph, Trav: Graph, step: int, seed: int, master_seed: int,
                  sample_size: int) -> tuple[int, tuple, tuple]:
    """Open count plus sampled completion mean/sd for j = 1..5."""
    rows, open_count = open_pair_rows(M, Trav)
    if open_count == 0 or sample_size <= 0:
        zeros = (0.0,) * 5
        return open_count, zeros, zeros
    n = M.n
    us, vs = rows_to_pairs(rows, n)
    gen = rng.stream(master_seed, "greedy-xsample", n, seed, step)
    k = min(sample_size, open_count)
    pick = gen.choice(open_count, size=k, replace=False)
    good = good_rows(M, rows)
    profiles = np.empty((k, 5))
    for row, idx in enumerate(pick.tolist()):
        c = completion_profile(M, good, int(us[idx]), int(vs[idx]))
        profiles[row] = c[1:]
    mean = profiles.mean(axis=0)
    sd = profiles.std(axis=0, ddof=1) if k > 1 else np.zeros(5)
    return open_count, tuple(float(v) for v in mean), tuple(float(v) for v in sd)


def run_greedy(
    n: int,
    seed: int,
    checkpoints: list[Checkpoint] | None = None,
    stop_at_m: int | None = None,
    sample_size: int = _SAMPLE_SIZE_DEFAULT,
    master_seed: int = rng.DEFAULT_MASTER_SEED,
) -> GreedyRun:
    """Run the process to exhaustion (or to an m-target) and snapshot it.

    Deterministic in (n, seed, master_seed) up to wall-clock fields.
    """
    if n < 4:
        raise ConfigError(f"n={n} degenerate; need n >= 4")
    checkpoints = list(checkpoints or [])
    codec = PairCodec(n)
    t_targets = sorted({c.value for c in checkpoints if c.kind == "t"})
    m_targets = {c.value for c in checkpoints if c.kind == "m"}
    if stop_at_m is not None:
        if stop_at_m < 0:
            raise ConfigError(f"stop_at_m={stop_at_m} negative")
        m_targets.add(stop_at_m)
    m_targets = sorted(m_targets)

    M = Graph(n)
    Trav = Graph(n)
    adj = M.adj
    tadj = Trav.adj
    t0 = time.perf_counter()
    run = GreedyRun(
        n=n, seed=seed, master_seed=master_seed,
        checkpoints=checkpoints, graph=M, trav=Trav,
    )

    def snapshot(step: int, m: int):
        M.m = m
        Trav.m = step
        open_count, mean, sd = _sample_stats(M, Trav, step, seed, master_seed, sample_size)
        run.records.append(RunRecord(
            step=step, m=m, open_count=open_count, x_mean=mean, x_sd=sd,
            wall_ms=(time.perf_counter() - t0) * 1000.0,
        ))

    perm = _order_stream(master_seed, n, seed).permutation(codec.num_pairs)
    sentinel = codec.num_pairs + 1
    ti = mi = 0
    next_t = t_targets[0] if t_targets else sentinel
    next_m = m_targets[0] if m_targets else sentinel
    t = m = 0
    stopped = False
    for base in range(0, codec.num_pairs, _DECODE_CHUNK):
        ids = perm[base : base + _DECODE_CHUNK]
        cu, cv = codec.decode_array(ids)
        for u, v in zip(cu.tolist(), cv.tolist()):
            t += 1
            inter = adj[u] & adj[v]
            ok = True
            while inter:
                lsb = inter & -inter
                inter ^= lsb
                if adj[lsb.bit_length() - 1] & inter:
                    ok = False
                    break
            if ok:
                adj[u] |= 1 << v
                adj[v] |= 1 << u
                m += 1
            tadj[u] |= 1 << v
            tadj[v] |= 1 << u
            if ok and m == next_m:
                snapshot(t, m)
                mi += 1
                next_m = m_targets[mi] if mi < len(m_targets) else sentinel
                if stop_at_m is not None and m >= stop_at_m:
                    stopped = True
                    break
            if t == next_t:
                if not run.records or run.records[-1].step != t:
                    snapshot(t, m)
                ti += 1
                next_t = t_targets[ti] if ti < len(t_targets) else sentinel
        if stopped:
            break
    M.m = m
    Trav.m = t
    run.exhausted = not stopped and t == codec.num_pairs
    if not run.records or run.records[-1].step != t:
        snapshot(t, m)
    run.records.sort(key=lambda r: r.step)
    return run


def verify_k4_free(M: Graph) -> bool:
    """No four mutually adjacent vertices; edge-wise bitset scan."""
    adj = M.adj
    for u, v in M.edges():
        inter = adj[u] & adj[v]
        while inter:
            lsb = inter & -inter
            inter ^= lsb
            if adj[lsb.bit_length() - 1] & inter:
                return False
    return True


def is_maximal_k4_free(M: Graph) -> bool:
    """Every absent pair would close a K4 (exhaustion certificate)."""
    for u in range(M.n):
        for v in range(u + 1, M.n):
            if not M.has_edge(u, v) and not M.creates_k4(u, v):
                return False
    return True


def _quad_edge_masks(n: int) -> list[list[int]]:
    """For each pair id e = {u,v}: masks of the other 5 pair ids of each
    4-clique through {u,v}. Used by the small-n exhaustive/fast paths."""
    codec = PairCodec(n)
    masks: list[list[int]] = [[] for _ in range(codec.num_pairs)]
    for u in range(n):
        for v in range(u + 1, n):
            e = codec.encode(u, v)
            others = [w for w in range(n) if w not in (u, v)]
            for a in range(len(others)):
                for b in range(a + 1, len(others)):
                    w, x = others[a], others[b]
                    quad = 0
                    for p, q in ((u, w), (v, w), (u, x), (v, x), (w, x)):
                        quad |= 1 << codec.encode(p, q)
                    masks[e].append(quad)
    return masks


def exact_final_histogram(n: int) -> dict[int, int]:
    """Final edge-count histogram over every traversal order, exactly.

    Brute force over all C(n,2)! permutations, so n <= 5 only.
    """
    if not 4 <= n <= 5:
        raise ConfigError(f"exhaustive enumeration only feasible for n in 4..5, got {n}")
    codec = PairCodec(n)
    quads = [tuple(q) for q in _quad_edge_masks(n)]
    hist: dict[int, int] = {}
    for perm in itertools.permutations(range(codec.num_pairs)):
        mmask = 0
        for e in perm:
            for q in quads[e]:
                if mmask & q == q:
                    break
            else:
                mmask |= 1 << e
        c = mmask.bit_count()
        hist[c] = hist.get(c, 0) + 1
    return dict(sorted(hist.items()))


def final_size_ensemble(
    n: int,
    num_runs: int,
    master_seed: int = rng.DEFAULT_MASTER_SEED,
    first_seed: int = 0,
) -> np.ndarray:
    """Final |M| for seeds first_seed..first_seed+num_runs-1 (small n).

    Fast path sharing run_greedy's permutation stream, so entry k equals
    run_greedy(n, first_seed + k).graph.m exactly. Mask-table based;
    keep n modest (memory is C(n,2) * C(n-2,2) masks).
    """
    if n < 4:
        raise ConfigError(f"n={n} degenerate; need n >= 4")
    if n > 12:
        raise ConfigError(f"mask-table ensemble path meant for n <= 12, got {n}")
    codec = PairCodec(n)
    quads = [tuple(q) for q in _quad_edge_masks(n)]
    out = np.empty(num_runs, dtype=np.int32)
    num_pairs = codec.num_pairs
    for k in range(num_runs):
        perm = _order_stream(master_seed, n, first_seed + k).permutation(num_pairs)
        mmask = 0
        for e in perm.tolist():
            for q in quads[e]:
                if mmask & q == q:
                    break
            else:
                mmask |= 1 << e
        out[k] = mmask.bit_count()
    return out
