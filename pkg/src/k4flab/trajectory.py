"""Trajectory functions for the K4-free process and its staged variant.

Everything here derives from one ODE: the "upper" function U solves

    U'(x) = exp(-0.5 U(x)^5),  U(0) = 0,

and the "lower" function is its derivative L(x) = exp(-0.5 U(x)^5).
(In CSV output these appear as phi_upper and phi_lower.) The upper
function scales the accepted-edge count, the lower one the open-pair
fraction: after "time" x the process on n vertices is expected to hold
about 0.5 n^{8/5} U(x) edges with about 0.5 n^2 L(x) open pairs.

Module contents:

* solve_ode            fixed-step RK4, tabulated on a uniform grid
* TrajectoryTable      the table plus Hermite interpolation accessors
* TrajectoryQuantities per-round predictions for the staged process
                       (completion/triangle counts and error envelopes)
* predicted_open_count / predicted_completion_count
                       closed forms in terms of the edge count m, for
                       checkpoint comparisons in the uniform process
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError

_BINOM5 = (1, 5, 10, 10, 5, 1)
_BINOM3 = (1, 3, 3, 1)


def _rate(u: float) -> float:
    return math.exp(-0.5 * u**5)


@dataclass(frozen=True)
class TrajectoryTable:
    """Uniform-grid table of the upper/lower trajectory functions."""

    x: np.ndarray
    phi_upper: np.ndarray
    phi_lower: np.ndarray
    h: float

    @property
    def x_max(self) -> float:
        return float(self.x[-1])

    def _locate(self, x: float) -> tuple[int, float]:
        if not math.isfinite(x):
            raise ValueError(f"non-finite query x={x}")
        slack = 1e-9 * max(1.0, self.x_max)
        if x < -slack or x > self.x_max + slack:
            raise ValueError(
                f"x={x} outside table domain [0, {self.x_max}]; no extrapolation"
            )
        x = min(max(x, 0.0), self.x_max)
        k = min(int(x / self.h), len(self.x) - 2)
        return k, (x - k * self.h) / self.h

    def upper_at(self, x: float) -> float:
        """Upper function at x, cubic Hermite between grid points."""
        k, s = self._locate(x)
        u0, u1 = float(self.phi_upper[k]), float(self.phi_upper[k + 1])
        d0, d1 = float(self.phi_lower[k]), float(self.phi_lower[k + 1])
        s2, s3 = s * s, s * s * s
        return (
            (2 * s3 - 3 * s2 + 1) * u0
            + (s3 - 2 * s2 + s) * self.h * d0
            + (-2 * s3 + 3 * s2) * u1
            + (s3 - s2) * self.h * d1
        )

    def lower_at(self, x: float) -> float:
        """Lower function at x (the derivative of the upper one)."""
        return _rate(self.upper_at(x))


def solve_ode(x_max: float, h: float = 1e-3) -> TrajectoryTable:
    """Integrate the trajectory ODE with classical RK4.

    The grid ends exactly at x_max; the actual step is x_max/N for the
    smallest N making it <= h.
    """
    if x_max <= 0:
        raise ValueError(f"x_max must be positive, got {x_max}")
    if h <= 0:
        raise ValueError(f"step must be positive, got {h}")
    steps = max(1, math.ceil(x_max / h - 1e-12))
    hh = x_max / steps
    upper = np.empty(steps + 1)
    upper[0] = 0.0
    y = 0.0
    for k in range(steps):
        k1 = _rate(y)
        k2 = _rate(y + 0.5 * hh * k1)
        k3 = _rate(y + 0.5 * hh * k2)
        k4 = _rate(y + hh * k3)
        y += hh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not math.isfinite(y):
            raise NumericError(f"ODE state non-finite at step {k + 1}")
        upper[k + 1] = y
    x = np.linspace(0.0, x_max, steps + 1)
    lower = np.exp(-0.5 * upper**5)
    return TrajectoryTable(x=x, phi_upper=upper, phi_lower=lower, h=hh)


def large_x_profile(xs) -> list[tuple[float, float, float]]:
    """(x, upper, lower) at large x values, for asymptotics checks.

    Integrates normally to x = 1, then in u = ln x (dU/du = x L(x)),
    which keeps the step count manageable out to x = 10^6 or so.
    """
    xs = sorted(float(v) for v in xs)
    if not xs or xs[0] < 1.0:
        raise ValueError("large_x_profile wants all x >= 1")
    base = solve_ode(1.0, 1e-4)
    y = float(base.phi_upper[-1])
    out = []
    u = 0.0
    hu = 1e-4

    def du(uu: float, yy: float) -> float:
        return math.exp(uu - 0.5 * yy**5)

    for target in xs:
        ut = math.log(target)
        while u < ut - 1e-15:
            step = min(hu, ut - u)
            k1 = du(u, y)
            k2 = du(u + 0.5 * step, y + 0.5 * step * k1)
            k3 = du(u + 0.5 * step, y + 0.5 * step * k2)
            k4 = du(u + step, y + step * k3)
            y += step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            u += step
        out.append((target, y, _rate(y)))
    return out


def write_table_csv(table: TrajectoryTable, path) -> None:
    """CSV columns x,phi_upper,phi_lower."""
    with open(path, "w") as fh:
        fh.write("x,phi_upper,phi_lower\n")
        for x, up, lo in zip(table.x, table.phi_upper, table.phi_lower):
            fh.write(f"{x:.12g},{up:.17g},{lo:.17g}\n")


def predicted_open_count(n: int, m: float) -> float:
    """Closed-form open-pair count at edge count m (uniform process)."""
    if m < 0:
        raise ValueError(f"edge count m={m} negative")
    mu = m / n ** (8.0 / 5.0)
    return 0.5 * n * n * math.exp(-16.0 * mu**5)


def predicted_completion_count(n: int, m: float, j: int) -> float:
    """Closed-form mean count of j-untraversed completions per open pair."""
    if not 0 <= j <= 5:
        raise ValueError(f"j={j} outside 0..5")
    if m < 0:
        raise ValueError(f"edge count m={m} negative")
    mu = m / n ** (8.0 / 5.0)
    return (
        n ** (2.0 * j / 5.0)
        * 2.0 ** (4 - j)
        * _BINOM5[j]
        * mu ** (5 - j)
        * math.exp(-16.0 * j * mu**5)
    )


class TrajectoryQuantities:
    """Per-round predictions for the staged process on n vertices.

    Rounds map to trajectory time via x = i * n^{-eps1}. completions,
    triangles and pool_completions are the predicted counts the process
    is tracked against; round_growth/envelope give the multiplicative
    error envelope (envelope(0) = n^{-eps1}, then the recurrence
    envelope(i) = envelope(i-1) * (1 + round_growth(i-1))).

    The envelope explodes at desk-scale n, so a log-space accessor is
    provided; envelope() returns inf when exp would overflow.
    """

    def __init__(self, n: int, eps1: float, eps2: float, table: TrajectoryTable):
        if n < 2:
            raise ValueError(f"n={n} too small")
        if eps1 <= 0 or eps2 <= 0:
            raise ValueError(f"eps1={eps1}, eps2={eps2} must be positive")
        self.n = n
        self.eps1 = eps1
        self.eps2 = eps2
        self.table = table
        self._log_growth: list[float] = []  # log1p(round_growth(k)) for k < len

    def time_of_round(self, i: int) -> float:
        if i < 0:
            raise ValueError(f"round {i} negative")
        return i * self.n ** (-self.eps1)

    def _upper_lower(self, i: int) -> tuple[float, float]:
        x = self.time_of_round(i)
        up = self.table.upper_at(x)
        return up, _rate(up)

    def completions(self, i: int, j: int) -> float:
        """Predicted per-pair count of completions with j untraversed edges."""
        if not 0 <= j <= 5:
            raise ValueError(f"j={j} outside 0..5")
        n = self.n
        up, lo = self._upper_lower(i)
        return (
            0.5 * n * (n - 1)
            * _BINOM5[j]
            * (up / n ** 0.4) ** (5 - j)
            * lo**j
        )

    def triangles(self, i: int, j: int, t: float) -> float:
        """Predicted count of j-untraversed triangles in a t-triangle family."""
        if not 0 <= j <= 3:
            raise ValueError(f"j={j} outside 0..3")
        if t < 0:
            raise ValueError(f"family size t={t} negative")
        up, lo = self._upper_lower(i)
        return t * _BINOM3[j] * (up / self.n ** 0.4) ** (3 - j) * lo**j

    def pool_completions(self, i: int, j: int) -> float:
        """completions(i, j) thinned into a round's middle sampling pool."""
        return self.n ** ((self.eps2 - 0.4) * j) * self.completions(i, j)

    def _growth_exponent(self, i: int) -> float:
        """Positive exponent A with round_growth(i) = 2 exp(A) - 2."""
        n = self.n
        acc = 0.0
        for j in range(1, 6):
            delta = n ** (-(self.eps1 + self.eps2) * j)
            if delta >= 0.5:
                raise ValueError(
                    f"growth factor base 1 - 2*n^-{(self.eps1 + self.eps2) * j:.4g}"
                    " is not positive"
                )
            acc += -6000.0 * self.pool_completions(i, j) * math.log1p(-2.0 * delta)
        return acc

    def _log_growth_at(self, i: int) -> float:
        """log1p of round_growth(i), always finite."""
        acc = self._growth_exponent(i)
        # growth = 2*expm1(acc); log1p of it = log(2 e^acc - 1)
        if acc > 50.0:
            return acc + math.log(2.0 - math.exp(-acc))
        return math.log(2.0 * math.exp(acc) - 1.0)

    def round_growth(self, i: int) -> float:
        """Relative envelope growth in round i; positive for valid input."""
        acc = self._growth_exponent(i)
        if acc > 700.0:
            return math.inf
        return 2.0 * math.expm1(acc)

    def log_envelope(self, i: int) -> float:
        """ln of envelope(i); stays finite when envelope overflows."""
        if i < 0:
            raise ValueError(f"round {i} negative")
        while len(self._log_growth) < i:
            self._log_growth.append(self._log_growth_at(len(self._log_growth)))
        return -self.eps1 * math.log(self.n) + math.fsum(self._log_growth[:i])

    def envelope(self, i: int) -> float:
        le = self.log_envelope(i)
        if le > 709.0:
            return math.inf
        return math.exp(le)
