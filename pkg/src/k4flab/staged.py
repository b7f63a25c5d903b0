"""Staged ("bite") variant of the K4-free greedy process.

Instead of one long traversal, the pair space is eaten in rounds. In
round i each untraversed pair independently passes through three nested
Bernoulli stages:

  bigbite   with probability n^(eps3 - 2/5)       (wide pool)
  bigbite2  with probability n^(eps2 - eps3)      (middle pool)
  bite      with probability n^(-eps1 - eps2) / (1 - i n^(-eps1 - eps2))

The surviving "bite" pairs get uniform birthtimes and are traversed in
increasing birthtime order, each added to M unless it closes a K4. The
denominator keeps the marginal inclusion probability of a fixed pair in
round i's bite equal to n^(-eps1 - 2/5) / (1 - i n^(-eps1-eps2))
conditioned on being untraversed, so the one-shot variant (step_oneshot)
that samples the bite directly in one Bernoulli pass is distributionally
equivalent; the exhaustive ordinary process corresponds to running until
the pair space is gone.

Per-pair randomness is a pure function of (master seed, stage tag,
round, pair id), so sampling is reproducible and independent of how
many other pairs remain.
"""

from __future__ import annotations

import math
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
from .trajectory import TrajectoryTable, TrajectoryQuantities

DESK_PROFILE = (0.3, 0.15, 0.2)
# eps3 small, eps2 = 1e4 * eps3^3, eps1 small relative to eps2
PAPER_PROFILE = (0.001, 0.00512, 0.008)
PROFILES = {"desk": DESK_PROFILE, "paper": PAPER_PROFILE}

DEFAULT_COVER_C = 2.4  # see ramsey.calibrate_cover_constant
DEFAULT_DENOM_FLOOR = 0.1


def default_rounds(n: int, eps1: float) -> int:
    return int(math.floor(n ** (eps1 + eps1 * eps1)))


def default_subset_size(n: int, cover_c: float) -> int:
    return int(math.ceil(cover_c * n ** 0.6 * math.log(n) ** 0.2))


@dataclass(frozen=True)
class ProcessParams:
    """Parameters of one staged run.

    The admissibility constraints keep every stage a genuine Bernoulli
    probability: eps3 <= 2/5 (wide stage), eps2 <= eps3 (middle stage),
    all three positive. rounds defaults to floor(n^(eps1 + eps1^2));
    subset_size to ceil(C n^(3/5) (ln n)^(1/5)).
    """

    n: int
    eps1: float
    eps2: float
    eps3: float
    rounds: int
    subset_size: int
    master_seed: int = rng.DEFAULT_MASTER_SEED
    profile: str = "custom"
    denom_floor: float = DEFAULT_DENOM_FLOOR

    def __post_init__(self):
        problems = []
        if self.n < 4:
            problems.append(f"n={self.n} < 4")
        if self.eps1 <= 0:
            problems.append(f"eps1={self.eps1} must be > 0")
        if self.eps2 <= 0:
            problems.append(f"eps2={self.eps2} must be > 0")
        if self.eps3 <= 0:
            problems.append(f"eps3={self.eps3} must be > 0")
        if self.eps3 > 0.4:
            problems.append(
                f"eps3={self.eps3} > 2/5 makes the wide-stage probability exceed 1"
            )
        if self.eps2 > self.eps3:
            problems.append(
                f"eps2={self.eps2} > eps3={self.eps3} makes the middle-stage"
                " probability exceed 1"
            )
        if self.rounds < 1:
            problems.append(f"rounds={self.rounds} < 1")
        if self.subset_size < 3:
            problems.append(f"subset_size={self.subset_size} < 3")
        if not 0 < self.denom_floor < 1:
            problems.append(f"denom_floor={self.denom_floor} outside (0,1)")
        if problems:
            raise ConfigError("invalid process parameters: " + "; ".join(problems))


def make_params(
    n: int,
    profile: str = "desk",
    rounds: int | None = None,
    master_seed: int = rng.DEFAULT_MASTER_SEED,
    cover_c: float = DEFAULT_COVER_C,
    eps: tuple[float, float, float] | None = None,
) -> ProcessParams:
    """Build ProcessParams from a named profile (or explicit eps triple)."""
    if eps is not None:
        profile = "custom" if profile in PROFILES else profile
        eps1, eps2, eps3 = eps
    elif profile in PROFILES:
        eps1, eps2, eps3 = PROFILES[profile]
    else:
        raise ConfigError(f"unknown profile {profile!r} (want desk or paper)")
    if rounds is None:
        rounds = default_rounds(n, eps1)
    return ProcessParams(
        n=n,
        eps1=eps1,
        eps2=eps2,
        eps3=eps3,
        rounds=rounds,
        subset_size=min(n, default_subset_size(n, cover_c)),
        master_seed=master_seed,
        profile=profile,
    )


@dataclass
class StageState:
    """State after round i (i = number of completed rounds).

    The three id arrays hold the pools sampled in the round that
    produced this state (ascending pair ids); birthtimes maps each bite
    member to its traversal time. trav_mask is bookkeeping: a bool per
    pair id, true iff traversed.
    """

    i: int
    M: Graph
    Trav: Graph
    bigbite: np.ndarray
    bigbite2: np.ndarray
    bite: np.ndarray
    birthtimes: dict[int, float] = field(default_factory=dict)
    trav_mask: np.ndarray = None  # type: ignore[assignment]


def initial_state(params: ProcessParams) -> StageState:
    n = params.n
    empty = np.empty(0, dtype=np.int64)
    return StageState(
        i=0,
        M=Graph(n),
        Trav=Graph(n),
        bigbite=empty,
        bigbite2=empty,
        bite=empty,
        birthtimes={},
        trav_mask=np.zeros(n * (n - 1) // 2, dtype=bool),
    )


def _bite_denominator(params: ProcessParams, i: int) -> float:
    denom = 1.0 - i * params.n ** (-params.eps1 - params.eps2)
    if denom < params.denom_floor:
        raise ConfigError(
            f"round {i}: bite denominator {denom:.4g} below floor"
            f" {params.denom_floor} (schedule too long for n={params.n})"
        )
    return denom


def stage_probabilities(params: ProcessParams, i: int) -> tuple[float, float, float]:
    """(wide, middle, bite) stage probabilities for round i; all in (0,1]."""
    n = params.n
    p1 = n ** (params.eps3 - 0.4)
    p2 = n ** (params.eps2 - params.eps3)
    p3 = n ** (-params.eps1 - params.eps2) / _bite_denominator(params, i)
    if p3 > 1.0:
        raise ConfigError(
            f"round {i}: bite probability {p3:.4g} exceeds 1"
            f" (parameter regime violated at n={params.n})"
        )
    return p1, p2, p3


def oneshot_probability(params: ProcessParams, i: int) -> float:
    """Marginal bite probability of round i (product of the 3 stages)."""
    p = params.n ** (-params.eps1 - 0.4) / _bite_denominator(params, i)
    if p > 1.0:
        raise ConfigError(
            f"round {i}: bite probability {p:.4g} exceeds 1"
            f" (parameter regime violated at n={params.n})"
        )
    return p


def _finish_round(
    state: StageState,
    params: ProcessParams,
    bigbite: np.ndarray,
    bigbite2: np.ndarray,
    bite: np.ndarray,
) -> StageState:
    """Assign birthtimes, traverse the bite in birthtime order, return
    the next state. Ties (probability ~0) break by pair id."""
    n = params.n
    i = state.i
    bt = rng.edge_uniforms((params.master_seed, "stage-birthtime", n, i), bite)
    order = np.lexsort((bite, bt))
    codec = PairCodec(n)
    us, vs = codec.decode_array(bite[order])
    M = state.M.copy()
    Trav = state.Trav.copy()
    adj = M.adj
    tadj = Trav.adj
    m = M.m
    for u, v in zip(us.tolist(), vs.tolist()):
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
    M.m = m
    Trav.m = state.Trav.m + len(bite)
    mask = state.trav_mask.copy()
    mask[bite] = True
    return StageState(
        i=i + 1,
        M=M,
        Trav=Trav,
        bigbite=bigbite,
        bigbite2=bigbite2,
        bite=bite,
        birthtimes={int(e): float(b) for e, b in zip(bite, bt)},
        trav_mask=mask,
    )


def step(state: StageState, params: ProcessParams) -> StageState:
    """One round with the full three-stage sampling."""
    if state.i >= params.rounds:
        raise ConfigError(f"round {state.i} beyond configured schedule {params.rounds}")
    p1, p2, p3 = stage_probabilities(params, state.i)
    n, i = params.n, state.i
    avail = np.nonzero(~state.trav_mask)[0]
    u1 = rng.edge_uniforms((params.master_seed, "stage-bigbite", n, i), avail)
    bigbite = avail[u1 < p1]
    u2 = rng.edge_uniforms((params.master_seed, "stage-bigbite2", n, i), bigbite)
    bigbite2 = bigbite[u2 < p2]
    u3 = rng.edge_uniforms((params.master_seed, "stage-bite", n, i), bigbite2)
    bite = bigbite2[u3 < p3]
    return _finish_round(state, params, bigbite, bigbite2, bite)


def step_oneshot(state: StageState, params: ProcessParams) -> StageState:
    """One round sampling the bite directly at the marginal probability.

    Distributionally equivalent to step; the intermediate pools are left
    empty in the returned state.
    """
    if state.i >= params.rounds:
        raise ConfigError(f"round {state.i} beyond configured schedule {params.rounds}")
    p = oneshot_probability(params, state.i)
    n, i = params.n, state.i
    avail = np.nonzero(~state.trav_mask)[0]
    u = rng.edge_uniforms((params.master_seed, "stage-oneshot", n, i), avail)
    bite = avail[u < p]
    empty = np.empty(0, dtype=np.int64)
    return _finish_round(state, params, empty, empty, bite)


def run_staged(
    params: ProcessParams,
    variant: str = "staged",
    rounds: int | None = None,
) -> StageState:
    """Run `rounds` rounds (default: the configured schedule)."""
    if variant not in ("staged", "oneshot"):
        raise ConfigError(f"unknown variant {variant!r}")
    advance = step if variant == "staged" else step_oneshot
    state = initial_state(params)
    for _ in range(params.rounds if rounds is None else rounds):
        state = advance(state, params)
    return state


@dataclass(frozen=True)
class TrackingReport:
    """Observed-vs-predicted snapshot after round i (report only).

    Deviations are relative: (observed - predicted)/predicted, with 0/0
    reported as 0. envelope is the trajectory error envelope at round i;
    the nominal bands are 100*envelope for the edge/open counts and
    1000*envelope for the completion counts, both vacuous at desk n.
    """

    i: int
    x: float
    m: int
    m_pred: float
    m_dev: float
    open_count: int
    open_pred: float
    open_dev: float
    comp_mean: tuple[float, ...]  # sampled over open pairs, j = 1..5
    comp_pred: tuple[float, ...]
    comp_dev: tuple[float, ...]
    envelope: float
    log_envelope: float
    sampled_pairs: int


def _rel_dev(emp: float, pred: float) -> float:
    if pred == 0.0:
        return 0.0 if emp == 0.0 else math.inf
    return (emp - pred) / pred


def measure_tracking(
    state: StageState,
    params: ProcessParams,
    table: TrajectoryTable,
    sample_size: int = 200,
) -> TrackingReport:
    """Compare the state against the trajectory predictions."""
    n = params.n
    q = TrajectoryQuantities(n, params.eps1, params.eps2, table)
    x = q.time_of_round(state.i)
    upper = table.upper_at(x)
    lower = table.lower_at(x)
    m_pred = 0.5 * n ** 1.6 * upper
    open_pred = 0.5 * n * n * lower

    rows, open_count = open_pair_rows(state.M, state.Trav)
    comp_pred = tuple(q.completions(state.i, j) for j in range(1, 6))
    if open_count == 0 or sample_size <= 0:
        comp_mean = (0.0,) * 5
        sampled = 0
    else:
        us, vs = rows_to_pairs(rows, n)
        gen = rng.stream(params.master_seed, "stage-xsample", n, state.i)
        sampled = min(sample_size, open_count)
        pick = gen.choice(open_count, size=sampled, replace=False)
        good = good_rows(state.M, rows)
        acc = np.zeros(5)
        for idx in pick.tolist():
            c = completion_profile(state.M, good, int(us[idx]), int(vs[idx]))
            acc += c[1:]
        comp_mean = tuple(float(v) for v in acc / sampled)

    return TrackingReport(
        i=state.i,
        x=x,
        m=state.M.m,
        m_pred=m_pred,
        m_dev=_rel_dev(state.M.m, m_pred),
        open_count=open_count,
        open_pred=open_pred,
        open_dev=_rel_dev(open_count, open_pred),
        comp_mean=comp_mean,
        comp_pred=comp_pred,
        comp_dev=tuple(
            _rel_dev(e, p) for e, p in zip(comp_mean, comp_pred)
        ),
        envelope=q.envelope(state.i),
        log_envelope=q.log_envelope(state.i),
        sampled_pairs=sampled,
    )
