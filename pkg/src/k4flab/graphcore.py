"""Dense bitset graphs and the K4-completion machinery built on them.

Vertices are 0..n-1. Adjacency is a list of Python ints used as bitsets
(bit v of adj[u] set iff uv is an edge), which keeps the hot operations
(row AND, lowest-set-bit iteration, popcount) in C. Two Graph instances
travel together through the process modules: M (the accepted edges) and
Trav (every traversed pair, accepted or not), so each vertex pair is in
exactly one of three classes:

  M   - traversed and accepted,
  R   - traversed and rejected (in Trav but not M),
  NT  - not yet traversed.

A pair f not in Trav is "open" when M + f is still K4-free. A
"completion" of f = {u,v} is a pair {w,x} of other vertices such that
the 5 edges of K4({u,v,w,x}) - f all avoid class R and every NT edge
among them is open; its j value is the number of NT edges among the 5.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError

MAX_VERTICES = 65536


class EdgeClass(str, Enum):
    IN_M = "M"
    NOT_TRAVERSED = "NT"
    REJECTED = "R"


class PairCodec:
    """Canonical integer ids for unordered vertex pairs.

    Pairs {u,v} with u < v are numbered in lexicographic order of (u, v);
    ids run over 0..C(n,2)-1. encode/decode are exact inverses, and the
    id order is the package-wide "canonical order" for pair iteration.
    """

    def __init__(self, n: int):
        if n < 2:
            raise ConfigError(f"pair codec needs n >= 2, got {n}")
        self.n = n
        self.num_pairs = n * (n - 1) // 2
        # offsets[u] = id of pair (u, u+1); row u holds n-1-u pairs
        u = np.arange(n, dtype=np.int64)
        self._offsets = u * (n - 1) - u * (u - 1) // 2

    def encode(self, u: int, v: int) -> int:
        if u > v:
            u, v = v, u
        if u == v or v >= self.n or u < 0:
            raise ValueError(f"bad pair ({u}, {v}) for n={self.n}")
        return int(self._offsets[u]) + v - u - 1

    def decode(self, e: int) -> tuple[int, int]:
        if not 0 <= e < self.num_pairs:
            raise ValueError(f"pair id {e} out of range")
        u = int(np.searchsorted(self._offsets, e, side="right")) - 1
        return u, e - int(self._offsets[u]) + u + 1

    def decode_array(self, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized decode; returns (u, v) arrays with u < v."""
        ids = np.asarray(ids, dtype=np.int64)
        u = np.searchsorted(self._offsets, ids, side="right") - 1
        v = ids - self._offsets[u] + u + 1
        return u, v

    def encode_array(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        return self._offsets[lo] + hi - lo - 1


class Graph:
    """Mutable simple graph on a fixed vertex set, bitset adjacency."""

    __slots__ = ("n", "m", "adj")

    def __init__(self, n: int):
        if not 1 <= n <= MAX_VERTICES:
            raise ConfigError(f"vertex count {n} outside [1, {MAX_VERTICES}]")
        self.n = n
        self.m = 0
        self.adj: list[int] = [0] * n

    def has_edge(self, u: int, v: int) -> bool:
        return (self.adj[u] >> v) & 1 == 1

    def add_edge(self, u: int, v: int) -> None:
        if u == v:
            raise ValueError(f"self-loop at {u}")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ValueError(f"vertex out of range: ({u}, {v})")
        if (self.adj[u] >> v) & 1:
            raise ValueError(f"edge ({u}, {v}) already present")
        self.adj[u] |= 1 << v
        self.adj[v] |= 1 << u
        self.m += 1

    def remove_edge(self, u: int, v: int) -> None:
        if not self.has_edge(u, v):
            raise ValueError(f"edge ({u}, {v}) not present")
        self.adj[u] &= ~(1 << v)
        self.adj[v] &= ~(1 << u)
        self.m -= 1

    def degree(self, u: int) -> int:
        return self.adj[u].bit_count()

    def edges(self):
        """Yield edges (u, v), u < v, in canonical order."""
        for u in range(self.n):
            row = self.adj[u] >> (u + 1)
            v = u + 1
            while row:
                shift = (row & -row).bit_length() - 1
                v += shift
                yield (u, v)
                row >>= shift + 1
                v += 1

    def copy(self) -> "Graph":
        g = Graph.__new__(Graph)
        g.n = self.n
        g.m = self.m
        g.adj = list(self.adj)
        return g

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph) and self.n == other.n and self.adj == other.adj
        )

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    def creates_k4(self, u: int, v: int) -> bool:
        """Would adding the absent pair uv close a K4?

        True iff some edge {w,x} of the graph has both endpoints adjacent
        to both u and v. Works row-at-a-time: intersect the two
        neighborhoods, then look for an edge inside the intersection.
        """
        if u == v:
            raise ValueError(f"self-loop at {u}")
        au = self.adj[u]
        if (au >> v) & 1:
            raise ValueError(f"pair ({u}, {v}) is already an edge")
        inter = au & self.adj[v]
        adj = self.adj
        while inter:
            lsb = inter & -inter
            inter ^= lsb
            # bits left in inter are all above w, so each edge {w,x} is
            # seen exactly once
            if adj[lsb.bit_length() - 1] & inter:
                return True
        return False


def iter_bits(mask: int):
    """Yield positions of set bits in ascending order."""
    while mask:
        lsb = mask & -mask
        yield lsb.bit_length() - 1
        mask ^= lsb


def classify(M: Graph, Trav: Graph, u: int, v: int) -> EdgeClass:
    if M.has_edge(u, v):
        return EdgeClass.IN_M
    if Trav.has_edge(u, v):
        return EdgeClass.REJECTED
    return EdgeClass.NOT_TRAVERSED


def is_open(M: Graph, Trav: Graph, u: int, v: int) -> bool:
    """Is the untraversed pair uv addable without closing a K4?"""
    if Trav.has_edge(u, v):
        raise ValueError(f"pair ({u}, {v}) already traversed; openness undefined")
    return not M.creates_k4(u, v)


@dataclass(frozen=True)
class CompletionRecord:
    """One K4-completion through a pair f = {u,v}.

    quad is (u, v, w, x) with u < v, w < x; edges/classes list the five
    non-f edges of K4(quad) in the fixed order
    (u,w), (v,w), (u,x), (v,x), (w,x). j counts NT edges among the five.
    """

    quad: tuple[int, int, int, int]
    j: int
    edges: tuple[tuple[int, int], ...]
    classes: tuple[EdgeClass, ...]


def enumerate_completions(M: Graph, Trav: Graph, u: int, v: int) -> list[CompletionRecord]:
    """All completions of the untraversed pair uv (reference version).

    Plain double loop over candidate pairs {w,x}; the fast counting path
    is completion_profile. A pair {w,x} yields a record iff none of the
    5 edges is Rejected and every NT edge among them is open.
    """
    if Trav.has_edge(u, v):
        raise ValueError(f"pair ({u}, {v}) already traversed")
    if u > v:
        u, v = v, u
    n = M.n
    out = []
    for w in range(n):
        if w == u or w == v:
            continue
        for x in range(w + 1, n):
            if x == u or x == v:
                continue
            pairs = ((u, w), (v, w), (u, x), (v, x), (w, x))
            classes = []
            ok = True
            j = 0
            for (a, b) in pairs:
                c = classify(M, Trav, a, b)
                if c is EdgeClass.REJECTED:
                    ok = False
                    break
                if c is EdgeClass.NOT_TRAVERSED:
                    if M.creates_k4(a, b):
                        ok = False
                        break
                    j += 1
                classes.append(c)
            if ok:
                out.append(
                    CompletionRecord(
                        quad=(u, v, w, x),
                        j=j,
                        edges=pairs,
                        classes=tuple(classes),
                    )
                )
    return out


def open_pair_rows(M: Graph, Trav: Graph) -> tuple[list[int], int]:
    """Bitset rows of the open-pair graph, plus the open-pair count.

    Row u has bit v set iff {u,v} is untraversed and open. Full scan of
    the pair space; meant for checkpoints, not inner loops.
    """
    n = M.n
    rows = [0] * n
    count = 0
    adj = M.adj
    full = (1 << n) - 1
    for u in range(n):
        # untraversed partners above u
        cand = ~Trav.adj[u] & ~((1 << (u + 1)) - 1) & full
        au = adj[u]
        while cand:
            lsb = cand & -cand
            cand ^= lsb
            v = lsb.bit_length() - 1
            inter = au & adj[v]
            hit = False
            while inter:
                l2 = inter & -inter
                inter ^= l2
                if adj[l2.bit_length() - 1] & inter:
                    hit = True
                    break
            if not hit:
                rows[u] |= lsb
                rows[v] |= 1 << u
                count += 1
    return rows, count


def completion_profile(M: Graph, good: list[int], u: int, v: int) -> list[int]:
    """Counts of completions of uv by j = 0..5, via bitset popcounts.

    good[w] must have bit x set iff the pair {w,x} is usable in a
    completion (in M, or untraversed and open); see good_rows. Returns
    a 6-list c with c[j] = number of completions having j NT edges.
    """
    adj = M.adj
    A = good[u] & good[v] & ~((1 << u) | (1 << v))
    counts = [0, 0, 0, 0, 0, 0]
    Mu, Mv = adj[u], adj[v]
    while A:
        lsb = A & -A
        A ^= lsb
        if not A:
            break
        w = lsb.bit_length() - 1
        B = A & good[w]  # candidate x > w with wx usable
        if not B:
            continue
        Mw = adj[w]
        s1, s2, s3 = B & Mu, B & Mv, B & Mw
        n1, n2, n3 = s1.bit_count(), s2.bit_count(), s3.bit_count()
        n12, n13, n23 = (s1 & s2).bit_count(), (s1 & s3).bit_count(), (s2 & s3).bit_count()
        n123 = (s1 & s2 & s3).bit_count()
        nb = B.bit_count()
        c3 = n123
        c2 = n12 + n13 + n23 - 3 * n123
        c1 = n1 + n2 + n3 - 2 * (n12 + n13 + n23) + 3 * n123
        c0 = nb - c1 - c2 - c3
        # NT count among {uw, vw} plus (3 - #M-edges) among {ux, vx, wx}
        base = 2 - ((Mu >> w) & 1) - ((Mv >> w) & 1)
        counts[base + 0] += c3
        counts[base + 1] += c2
        counts[base + 2] += c1
        counts[base + 3] += c0
    return counts


def good_rows(M: Graph, open_rows: list[int]) -> list[int]:
    """Rows marking pairs usable in completions: in M or open."""
    return [M.adj[i] | open_rows[i] for i in range(M.n)]


def rows_to_pairs(rows: list[int], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Flatten symmetric bitset rows to pair arrays (u, v), u < v.

    Pairs come out in canonical order. Uses unpackbits row by row, so
    it is fine for the ~n^2/2 pairs seen at checkpoints.
    """
    nbytes = (n + 7) // 8
    us_parts, vs_parts = [], []
    for u in range(n):
        hi = rows[u] >> (u + 1)
        if not hi:
            continue
        bits = np.unpackbits(
            np.frombuffer(hi.to_bytes(nbytes, "little"), dtype=np.uint8),
            bitorder="little",
        )[: n - u - 1]
        vtail = np.nonzero(bits)[0].astype(np.int32) + (u + 1)
        us_parts.append(np.full(len(vtail), u, dtype=np.int32))
        vs_parts.append(vtail)
    if not us_parts:
        empty = np.empty(0, dtype=np.int32)
        return empty, empty
    return np.concatenate(us_parts), np.concatenate(vs_parts)


def spans_triangle(M: Graph, S) -> bool:
    """Does some triangle of M lie entirely inside vertex set S?"""
    smask = 0
    for s in S:
        if not 0 <= s < M.n:
            raise ValueError(f"vertex {s} out of range")
        smask |= 1 << s
    adj = M.adj
    for u in iter_bits(smask):
        cand = adj[u] & smask & ~((1 << (u + 1)) - 1)
        for v in iter_bits(cand):
            if adj[v] & cand & ~((1 << (v + 1)) - 1):
                return True
    return False


def dump_classes(M: Graph, Trav: Graph) -> str:
    """Debug dump: one "u v class" line per pair in canonical order."""
    lines = []
    for u in range(M.n):
        for v in range(u + 1, M.n):
            lines.append(f"{u} {v} {classify(M, Trav, u, v).value}")
    return "\n".join(lines) + "\n"


def save_edge_list(M: Graph, path) -> None:
    """Write the canonical edge list, one "u v" line per edge."""
    with open(path, "w") as fh:
        for (u, v) in M.edges():
            fh.write(f"{u} {v}\n")


def load_edge_list(path, n: int | None = None) -> Graph:
    """Read an edge list written by save_edge_list.

    n defaults to 1 + the largest vertex id seen.
    """
    edges = []
    top = -1
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            a, b = line.split()
            u, v = int(a), int(b)
            edges.append((u, v))
            top = max(top, u, v)
    if n is None:
        n = top + 1
    if n < 1:
        raise ConfigError(f"cannot infer vertex count from empty file {path}")
    g = Graph(n)
    for (u, v) in edges:
        g.add_edge(u, v)
    return g
