"""Wrapped-Gaussian limit shapes for necklace chains.

At time ``t = c (n + (mu-1) m)^3 / (sigma^2 m)`` the law of a necklace started
at ``s_0`` is close to ``pi_n(s) * theta_c(x_s)``, where ``theta_c`` is the
heat kernel on the unit circle and ``x_s = (t - i - (mu-1) R_i) / (n + (mu-1) m)``
for a state at position ``i``. Total variation then tends to
``0.5 * integral |theta_c - 1|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidStart, NonpositiveC, OutOfRange
from .necklace import NecklaceSpec, StateId, evolve, point_mass, stationary, tv_distance, tv_trace

THETA_TERM_CUTOFF = 1e-17
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _lattice_radius(c: float) -> int:
    """Smallest ``K`` with ``phi(K / sqrt(c)) / sqrt(c) < 1e-17``."""
    sc = math.sqrt(c)
    k = 1
    while math.exp(-0.5 * (k / sc) ** 2) / (_SQRT_2PI * sc) >= THETA_TERM_CUTOFF:
        k += 1
    return k


def theta(c: float, x, terms: int | None = None):
    """Density at time ``c`` of Brownian motion on the circle of unit circumference.

    Evaluated as the lattice sum ``sum_n phi((n + x)/sqrt(c)) / sqrt(c)`` over
    ``|n| <= K`` after reducing ``x`` mod 1. ``terms`` overrides ``K``.
    """
    if not c > 0:
        raise NonpositiveC(f"c must be positive, got {c!r}")
    x = np.asarray(x, dtype=float)
    u = np.mod(x, 1.0)
    k = _lattice_radius(c) if terms is None else int(terms)
    lattice = np.arange(-k, k + 1, dtype=float)
    z = (u[..., None] + lattice) / math.sqrt(c)
    out = np.exp(-0.5 * z * z).sum(axis=-1) / (_SQRT_2PI * math.sqrt(c))
    return float(out) if out.ndim == 0 else out


def time_scale_value(n: int, m: int, mu: float, variance: float, c: float = 1.0) -> float:
    """Unrounded ``c (n + (mu-1) m)^3 / (sigma^2 m)``."""
    return c * (n + (mu - 1.0) * m) ** 3 / (variance * m)


def time_scale(n: int, m: int, mu: float, variance: float, c: float) -> int:
    """Step count for rescaled time ``c``, rounded half up."""
    if not 1 <= m <= n:
        raise OutOfRange("need 1 <= m <= n")
    if not variance > 0 or not c > 0:
        raise OutOfRange("need positive variance and c")
    return int(math.floor(time_scale_value(n, m, mu, variance, c) + 0.5))


def spec_time_scale(spec: NecklaceSpec, c: float) -> int:
    return time_scale(spec.n, spec.m, spec.bead.mu, spec.bead.variance, c)


def infer_c(spec: NecklaceSpec, t: int) -> float:
    return t / time_scale_value(spec.n, spec.m, spec.bead.mu, spec.bead.variance)


def fixed_fraction_coefficient(k: float, mu: float, variance: float) -> float:
    """Coefficient of ``n^2`` in the time scale when ``m = floor(k n)``."""
    return (k * mu - k + 1.0) ** 3 / (variance * k)


def hold_coefficient(p: float, k: float) -> float:
    """``(q + p k)^3 / (p q k)``: the fixed-fraction coefficient for the simple bead."""
    q = 1.0 - p
    return (q + p * k) ** 3 / (p * q * k)


def optimal_hold(k: float) -> float:
    """Hold probability minimizing :func:`hold_coefficient` for bead fraction ``k``."""
    if not 0 < k <= 1:
        raise OutOfRange(f"k must lie in (0, 1], got {k!r}")
    if k == 1:
        return 0.5
    return (-k + math.sqrt(k * k - k + 1.0)) / (1.0 - k)


def abscissa(spec: NecklaceSpec, t: int) -> np.ndarray:
    """``(t - i - (mu-1) R_i) / (n + (mu-1) m)`` for every state, by its position ``i``."""
    i = spec.positions
    shift = i + (spec.bead.mu - 1.0) * spec.R[i]
    return (t - shift) / spec.scale_denominator


def check_start(spec: NecklaceSpec, start: StateId) -> StateId:
    start = StateId(*start)
    spec.index(start)
    if start == StateId(0, 0):
        return start
    if start.position == spec.n - 1 and spec.r[spec.n - 1]:
        return start
    raise InvalidStart(f"{start} is neither s0 nor in a bead at position n-1")


@dataclass
class LLTPrediction:
    t: int
    c: float
    abscissa: np.ndarray
    predicted: np.ndarray
    exact: np.ndarray | None = None

    @property
    def max_abs_error(self) -> float:
        return float(np.max(np.abs(self.exact - self.predicted)))

    def scaled_error(self, n: int) -> float:
        return n * self.max_abs_error


def llt_predict(
    spec: NecklaceSpec, t: int, start: StateId = StateId(0, 0), with_exact: bool = True
) -> LLTPrediction:
    """Local-limit prediction ``pi_n(s) theta_c(x_s)`` with ``c`` inferred from ``t``."""
    start = check_start(spec, start)
    c = infer_c(spec, t)
    x = abscissa(spec, t)
    pred = stationary(spec) * theta(c, x)
    exact = evolve(spec.operator, point_mass(spec, start), t) if with_exact else None
    return LLTPrediction(t=t, c=c, abscissa=x, predicted=pred, exact=exact)


def tv_limit(c: float, tol: float = 1e-8, start_cells: int = 64, max_cells: int = 1 << 22) -> float:
    """``0.5 * integral_0^1 |theta_c(x) - 1| dx`` by composite midpoint, doubling to ``tol``."""
    if not c > 0:
        raise NonpositiveC(f"c must be positive, got {c!r}")

    def midpoint(cells):
        x = (np.arange(cells) + 0.5) / cells
        return 0.5 * float(np.mean(np.abs(theta(c, x) - 1.0)))

    cells = start_cells
    prev = midpoint(cells)
    while cells < max_cells:
        cells *= 2
        cur = midpoint(cells)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    return prev


def figure_profile(
    spec: NecklaceSpec, t: int, start: StateId = StateId(0, 0), mode: str = "normalized"
) -> tuple[np.ndarray, np.ndarray]:
    """Profile points ``(x, y)`` of ``P^t(start, .)``.

    ``raw``: ``x`` is the state index. ``rearranged``: ``x`` is the fractional
    part of the abscissa. ``normalized``: as rearranged with ``y`` divided by
    the stationary probability.
    """
    start = check_start(spec, start)
    exact = evolve(spec.operator, point_mass(spec, start), t)
    if mode == "raw":
        return np.arange(spec.size, dtype=float), exact
    x = np.mod(abscissa(spec, t), 1.0)
    if mode == "rearranged":
        return x, exact
    if mode == "normalized":
        return x, exact / stationary(spec)
    raise ValueError(f"unknown profile mode {mode!r}")


def profile_deviation(spec: NecklaceSpec, t: int, start: StateId = StateId(0, 0)) -> float:
    """``max |y - theta_c(x)|`` over the normalized profile, ``c`` inferred from ``t``."""
    x, y = figure_profile(spec, t, start, "normalized")
    return float(np.max(np.abs(y - theta(infer_c(spec, t), x))))


@dataclass
class TVPoint:
    c: float
    t: int
    tv_exact: float
    tv_limit: float

    @property
    def diff(self) -> float:
        return abs(self.tv_exact - self.tv_limit)


def tv_curve(spec: NecklaceSpec, cs, start: StateId = StateId(0, 0)) -> list[TVPoint]:
    """Exact TV at ``t = time_scale(c)`` paired with the limit value, for each ``c``.

    Times are visited in increasing order so one evolution serves the whole grid.
    """
    start = check_start(spec, start)
    pi = stationary(spec)
    cs = list(cs)
    ts = [spec_time_scale(spec, c) for c in cs]
    order = sorted(range(len(cs)), key=lambda j: ts[j])
    x = point_mass(spec, start)
    now = 0
    results: dict[int, TVPoint] = {}
    for j in order:
        x = evolve(spec.operator, x, ts[j] - now, raw=True)
        now = ts[j]
        results[j] = TVPoint(c=cs[j], t=ts[j], tv_exact=tv_distance(x, pi), tv_limit=tv_limit(cs[j]))
    return [results[j] for j in range(len(cs))]


def tv_series(spec: NecklaceSpec, steps: int, start: StateId = StateId(0, 0)) -> np.ndarray:
    """Exact TV to stationarity at every ``t = 0..steps``."""
    return tv_trace(spec.operator, point_mass(spec, start), stationary(spec), steps)
