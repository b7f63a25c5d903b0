"""Survival probabilities on alternating even/odd trees.

The recursive game: levels of a rooted tree alternate even/odd (root
even, every leaf even). Each even node carries a birthtime -- uniforms
for all non-root even nodes, a parameter t for the root. A leaf
survives. An internal even node v0 is killed by an odd child v1 when
every child v2 of v1 was born before v0 AND survives; v0 survives iff
no odd child kills it.

With independent subtrees this gives the recursion

    p_v0(t) = prod over odd children v1 of (1 - prod over v2 of P_v2(t))
    P_v(t)  = integral_0^t p_v(s) ds,

computed here three ways: exact quadrature DP on finite trees
(survival_dp), direct Monte Carlo over the predicate (survival_mc), and
for the infinite (k odd-children, arity-5) regular tree the self-similar
ODE P' = (1 - P^5)^k, returned in rescaled units x = t (2k)^{1/5},
Phat = (2k)^{1/5} P, whose k -> infinity limit is the trajectory
module's upper function (regular_tree_limit). truncations() gives the
depth-2c leaf-closed truncations of the same regular tree by functional
iteration, for convergence studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import ConfigError

EVEN = "even"
ODD = "odd"


@dataclass
class TreeNode:
    ident: int
    parent: int  # -1 for root
    kind: str
    children: list[int] = field(default_factory=list)


class TreeSpec:
    """Alternating tree, nodes stored root-first (parents before children)."""

    def __init__(self, nodes: list[TreeNode]):
        self.nodes = nodes
        self.index = {nd.ident: k for k, nd in enumerate(nodes)}
        self.validate()

    def validate(self) -> None:
        if not self.nodes:
            raise ConfigError("empty tree")
        if len(self.index) != len(self.nodes):
            raise ConfigError("duplicate node ids")
        root = self.nodes[0]
        if root.parent != -1:
            raise ConfigError("first node must be the root")
        if root.kind != EVEN:
            raise ConfigError("root must be even")
        seen = set()
        for nd in self.nodes:
            if nd.kind not in (EVEN, ODD):
                raise ConfigError(f"node {nd.ident}: bad kind {nd.kind!r}")
            if nd.parent == -1:
                if nd is not root:
                    raise ConfigError(f"second root at node {nd.ident}")
            else:
                if nd.parent not in seen:
                    raise ConfigError(
                        f"node {nd.ident}: parent {nd.parent} not defined before it"
                    )
                pk = self.nodes[self.index[nd.parent]].kind
                if pk == nd.kind:
                    raise ConfigError(
                        f"node {nd.ident}: kind {nd.kind} equals its parent's"
                    )
            seen.add(nd.ident)
        for nd in self.nodes:
            if nd.kind == ODD and not nd.children:
                raise ConfigError(f"odd node {nd.ident} must have arity >= 1")

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    def node(self, ident: int) -> TreeNode:
        return self.nodes[self.index[ident]]

    def even_count(self) -> int:
        return sum(1 for nd in self.nodes if nd.kind == EVEN)


def parse_tree(text: str) -> TreeSpec:
    """Parse the line format "node <id> parent <id|root> kind even|odd arity <j>"."""
    nodes: list[TreeNode] = []
    by_id: dict[int, TreeNode] = {}
    declared: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if (
            len(parts) != 8
            or parts[0] != "node"
            or parts[2] != "parent"
            or parts[4] != "kind"
            or parts[6] != "arity"
        ):
            raise ConfigError(f"line {lineno}: malformed tree line {raw!r}")
        ident = int(parts[1])
        parent = -1 if parts[3] == "root" else int(parts[3])
        kind = parts[5]
        arity = int(parts[7])
        nd = TreeNode(ident=ident, parent=parent, kind=kind)
        if ident in by_id:
            raise ConfigError(f"line {lineno}: duplicate node id {ident}")
        nodes.append(nd)
        by_id[ident] = nd
        declared[ident] = arity
        if parent != -1:
            if parent not in by_id:
                raise ConfigError(f"line {lineno}: parent {parent} not yet defined")
            by_id[parent].children.append(ident)
    tree = TreeSpec(nodes)
    for nd in nodes:
        if declared[nd.ident] != len(nd.children):
            raise ConfigError(
                f"node {nd.ident}: declared arity {declared[nd.ident]}"
                f" != {len(nd.children)} children"
            )
    return tree


def format_tree(tree: TreeSpec) -> str:
    lines = []
    for nd in tree.nodes:
        parent = "root" if nd.parent == -1 else str(nd.parent)
        lines.append(
            f"node {nd.ident} parent {parent} kind {nd.kind} arity {len(nd.children)}"
        )
    return "\n".join(lines) + "\n"


def load_tree(path) -> TreeSpec:
    with open(path) as fh:
        return parse_tree(fh.read())


def save_tree(tree: TreeSpec, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_tree(tree))


@dataclass(frozen=True)
class SurvivalCurve:
    """p and its running integral P on a uniform grid (t or rescaled x)."""

    grid: np.ndarray
    p: np.ndarray
    P: np.ndarray

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def p_at(self, x: float) -> float:
        return float(np.interp(x, self.grid, self.p))

    def P_at(self, x: float) -> float:
        return float(np.interp(x, self.grid, self.P))


def _cumtrapz(p: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(p)
    out[0] = 0.0
    np.cumsum((p[1:] + p[:-1]) * (0.5 * h), out=out[1:])
    return out


def survival_dp(tree: TreeSpec, grid_step: float = 1e-3) -> SurvivalCurve:
    """Exact-quadrature survival curve of the root on a [0,1] grid."""
    if grid_step <= 0 or grid_step > 0.5:
        raise ConfigError(f"grid_step {grid_step} unusable")
    steps = max(2, round(1.0 / grid_step))
    h = 1.0 / steps
    grid = np.linspace(0.0, 1.0, steps + 1)
    curves: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for nd in reversed(tree.nodes):
        if nd.kind != EVEN:
            continue
        p = np.ones(steps + 1)
        for c1 in nd.children:
            odd = tree.node(c1)
            prod_P = np.ones(steps + 1)
            for c2 in odd.children:
                prod_P *= curves[c2][1]
            p *= 1.0 - prod_P
        # rounding in the products can push p a few ulp outside [0,1]
        np.clip(p, 0.0, 1.0, out=p)
        P = _cumtrapz(p, h)
        curves[nd.ident] = (p, P)
    p, P = curves[tree.root.ident]
    return SurvivalCurve(grid=grid, p=p, P=P)


def survival_mc(
    tree: TreeSpec, t: float, trials: int, seed=0
) -> tuple[float, float]:
    """Monte Carlo estimate (mean, standard error) of root survival at t."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t={t} outside [0,1]")
    if trials <= 0:
        raise ConfigError(f"trials={trials} must be positive")
    gen = rng.stream(seed, "survival-mc", t, trials)
    beta: dict[int, np.ndarray] = {}
    for nd in tree.nodes:
        if nd.kind == EVEN:
            beta[nd.ident] = (
                np.full(trials, t) if nd.parent == -1 else gen.random(trials)
            )
    surv: dict[int, np.ndarray] = {}
    for nd in reversed(tree.nodes):
        if nd.kind != EVEN:
            continue
        alive = np.ones(trials, dtype=bool)
        for c1 in nd.children:
            odd = tree.node(c1)
            killed = np.ones(trials, dtype=bool)
            for c2 in odd.children:
                killed &= (beta[c2] < beta[nd.ident]) & surv[c2]
            alive &= ~killed
        surv[nd.ident] = alive
    mean = float(surv[tree.root.ident].mean())
    se = math.sqrt(mean * (1.0 - mean) / trials)
    return mean, se


def _pow_k(base: np.ndarray | float, k: float):
    """(base)^k via exp(k log1p(base-1)), stable for huge k; clamps at 0."""
    b = np.maximum(base, 0.0)
    with np.errstate(divide="ignore"):
        return np.where(b > 0.0, np.exp(k * np.log1p(b - 1.0)), 0.0)


def regular_tree_limit(k: float, x_max: float = 3.0, h: float = 1e-4) -> SurvivalCurve:
    """Infinite regular tree (k odd children per even node, arity 5).

    Self-similarity turns the recursion into P' = (1 - P^5)^k on [0,1]
    birthtime units; returned in rescaled units x = t (2k)^{1/5},
    Phat = (2k)^{1/5} P, where the k -> infinity limit of Phat is the
    trajectory upper function.
    """
    if k < 1:
        raise ConfigError(f"k={k} must be >= 1")
    if x_max <= 0 or h <= 0:
        raise ConfigError(f"bad grid x_max={x_max}, h={h}")
    steps = max(1, math.ceil(x_max / h - 1e-12))
    hh = x_max / steps
    two_k = 2.0 * k

    def rate(P_hat: float) -> float:
        # dPhat/dx = (1 - Phat^5/(2k))^k
        return float(_pow_k(1.0 - P_hat**5 / two_k, k))

    P = np.empty(steps + 1)
    P[0] = 0.0
    y = 0.0
    for s in range(steps):
        k1 = rate(y)
        k2 = rate(y + 0.5 * hh * k1)
        k3 = rate(y + 0.5 * hh * k2)
        k4 = rate(y + hh * k3)
        y += hh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        P[s + 1] = y
    x = np.linspace(0.0, x_max, steps + 1)
    p = _pow_k(1.0 - P**5 / two_k, k)
    return SurvivalCurve(grid=x, p=p, P=P)


def truncations(
    k: float, depths: list[int], x_max: float = 3.0, h: float = 1e-4
) -> dict[int, SurvivalCurve]:
    """Depth-2c leaf-closed truncations of the regular tree, rescaled.

    Functional iteration from the leaf curve (p = 1): c applications of
    p <- (1 - P^5/(2k))^k. Returns the curves for each requested c.
    """
    if any(c < 0 for c in depths):
        raise ConfigError("truncation depths must be >= 0")
    steps = max(1, math.ceil(x_max / h - 1e-12))
    hh = x_max / steps
    x = np.linspace(0.0, x_max, steps + 1)
    two_k = 2.0 * k
    p = np.ones(steps + 1)
    P = x.copy()
    out: dict[int, SurvivalCurve] = {}
    if 0 in depths:
        out[0] = SurvivalCurve(grid=x, p=p.copy(), P=P.copy())
    for c in range(1, max(depths) + 1 if depths else 0):
        p = _pow_k(1.0 - P**5 / two_k, k)
        P = _cumtrapz(p, hh)
        if c in depths:
            out[c] = SurvivalCurve(grid=x, p=p.copy(), P=P.copy())
    return out


def truncation_study(
    k: float, depths: list[int], xs: list[float], x_max: float = 3.0, h: float = 1e-4
) -> list[dict]:
    """Error table |p_c(x) - p_limit(x)| for the regular-tree truncations."""
    limit = regular_tree_limit(k, x_max, h)
    curves = truncations(k, depths, x_max, h)
    rows = []
    for c in sorted(curves):
        cur = curves[c]
        errs = {x: abs(cur.p_at(x) - limit.p_at(x)) for x in xs}
        rows.append(
            {
                "depth": c,
                "signed_at": {x: cur.p_at(x) - limit.p_at(x) for x in xs},
                "abs_at": errs,
                "sup": float(np.max(np.abs(cur.p - limit.p))),
            }
        )
    return rows


def regular_tree(k: int, arity: int, depth: int) -> TreeSpec:
    """Finite regular TreeSpec: even nodes get k odd children of the
    given arity, down to even-depth `depth` (leaves there)."""
    if k < 1 or arity < 1 or depth < 0:
        raise ConfigError("regular_tree wants k, arity >= 1 and depth >= 0")
    nodes = [TreeNode(ident=0, parent=-1, kind=EVEN)]
    frontier = [nodes[0]]
    next_id = 1
    for _ in range(depth):
        new_frontier = []
        for even in frontier:
            for _ in range(k):
                odd = TreeNode(ident=next_id, parent=even.ident, kind=ODD)
                next_id += 1
                nodes.append(odd)
                even.children.append(odd.ident)
                for _ in range(arity):
                    leaf = TreeNode(ident=next_id, parent=odd.ident, kind=EVEN)
                    next_id += 1
                    nodes.append(leaf)
                    odd.children.append(leaf.ident)
                    new_frontier.append(leaf)
        frontier = new_frontier
    return TreeSpec(nodes)


def random_tree(
    seed: int,
    max_even_depth: int = 3,
    max_children: int = 3,
    max_arity: int = 4,
    max_nodes: int = 60,
) -> TreeSpec:
    """Random alternating tree for cross-checks (jittered child counts)."""
    gen = rng.stream(seed, "random-tree")
    root = TreeNode(ident=0, parent=-1, kind=EVEN)
    nodes = [root]
    frontier = [(root, 0)]  # (node, even-depth)
    next_id = 1
    while frontier:
        even, d = frontier.pop()
        if d >= max_even_depth or next_id >= max_nodes:
            continue
        for _ in range(int(gen.integers(0, max_children + 1))):
            if next_id >= max_nodes:
                break
            odd = TreeNode(ident=next_id, parent=even.ident, kind=ODD)
            next_id += 1
            arity = int(gen.integers(1, max_arity + 1))
            kids = []
            for _ in range(arity):
                if next_id >= max_nodes:
                    break
                kids.append(TreeNode(ident=next_id, parent=odd.ident, kind=EVEN))
                next_id += 1
            if not kids:
                next_id -= 1  # roll back the odd node, it would be childless
                continue
            nodes.append(odd)
            even.children.append(odd.ident)
            for kid in kids:
                nodes.append(kid)
                odd.children.append(kid.ident)
                frontier.append((kid, d + 1))
    return TreeSpec(nodes)
