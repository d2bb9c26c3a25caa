"""Beads: small absorbing chains that are strung into necklaces.

A bead on states ``0..b`` has entrance ``0`` and a single absorbing exit ``b``.
This module validates bead input and derives the quantities the rest of the
package consumes: the first-passage-time pmf from entrance to exit, its mean
and variance, the stationary distribution of the closure (the bead with an
added ``b -> 0`` transition), and the taboo sums ``sum_a B^a(0, k)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from .exceptions import (
    DegenerateVariance,
    ExtraAbsorbing,
    HorizonExceeded,
    NotStochastic,
    SpanViolation,
    Unreachable,
)

DEFAULT_EPS_TAIL = 1e-14
DEFAULT_MAX_HORIZON = 10**6
ROW_SUM_TOL = 1e-12
SPAN_POINTS = 64


@dataclass(frozen=True, eq=False)
class BeadSpec:
    """Validated bead.

    ``matrix`` is the full ``(b+1, b+1)`` transition matrix; row ``b`` is the
    absorbing row ``e_b``. Use :func:`validate_bead` to construct one.
    """

    matrix: np.ndarray

    @property
    def b(self) -> int:
        return self.matrix.shape[0] - 1

    @property
    def transient(self) -> np.ndarray:
        """Substochastic block on states ``0..b-1``."""
        return self.matrix[:-1, :-1]

    @property
    def exit_column(self) -> np.ndarray:
        """One-step probabilities into ``b`` from states ``0..b-1``."""
        return self.matrix[:-1, -1]

    def rows(self) -> list[list[float]]:
        return self.matrix[:-1].tolist()

    def to_json(self) -> dict:
        return {"rows": self.rows()}


@dataclass(frozen=True, eq=False)
class FirstPassagePMF:
    """Truncated pmf of the entrance-to-exit passage time.

    ``values[t - 1]`` is ``f(t) = Pr[X = t]`` for ``t = 1..horizon``.
    """

    values: np.ndarray
    eps_tail: float
    mean: float
    variance: float
    n0: int
    alpha: float

    @property
    def horizon(self) -> int:
        return len(self.values)

    def padded(self, length: int) -> np.ndarray:
        """``f`` as an array indexed by ``t = 0..length-1`` (``f(0) = 0``)."""
        out = np.zeros(length)
        k = min(length - 1, self.horizon)
        out[1 : k + 1] = self.values[:k]
        return out

    def support(self, limit: int | None = None) -> np.ndarray:
        t = np.flatnonzero(self.values > 0) + 1
        return t if limit is None else t[:limit]


@dataclass(frozen=True, eq=False)
class BeadAnalysis:
    spec: BeadSpec
    pmf: FirstPassagePMF
    pi: np.ndarray
    taboo: np.ndarray

    @property
    def b(self) -> int:
        return self.spec.b

    @property
    def mu(self) -> float:
        return self.pmf.mean

    @property
    def variance(self) -> float:
        return self.pmf.variance


def _spectral_radius(q: np.ndarray) -> float:
    if q.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(q))))


def _reachable(adj: np.ndarray, source: int) -> np.ndarray:
    order = breadth_first_order(csr_matrix(adj), source, directed=True, return_predecessors=False)
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[order] = True
    return seen


def _passage_pmf(matrix: np.ndarray, eps_tail: float, max_horizon: int):
    """Return ``(f, survival)`` with ``survival[t] = Pr[X > t]``."""
    q = matrix[:-1, :-1]
    exit_col = matrix[:-1, -1]
    v = np.zeros(q.shape[0])
    v[0] = 1.0
    f = []
    survival = [1.0]
    while survival[-1] > eps_tail:
        if len(f) >= max_horizon:
            raise HorizonExceeded(
                f"first-passage mass not within {eps_tail:g} of 1 after {max_horizon} steps"
            )
        f.append(float(v @ exit_col))
        v = v @ q
        survival.append(float(v.sum()))
    return np.array(f), np.array(survival)


def _span(support: np.ndarray) -> int:
    if len(support) < 2:
        return 0
    return reduce(math.gcd, (int(d) for d in np.diff(support)))


def validate_bead(rows: Sequence[Sequence[float]]) -> BeadSpec:
    """Validate raw bead rows and return a :class:`BeadSpec`.

    Parameters
    ----------
    rows : array_like
        Either ``b`` rows of length ``b + 1`` (states ``0..b-1``; the exit row
        is implied) or a square ``(b+1, b+1)`` matrix whose last row is all
        zeros or the absorbing row ``e_b``.

    Raises
    ------
    NotStochastic, ExtraAbsorbing, Unreachable, SpanViolation
        Naming the violated invariant.
    """
    a = np.array(rows, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1:
        raise NotStochastic(f"bead rows must form a 2-d array, got shape {a.shape}")
    if a.shape[0] == a.shape[1]:
        last = a[-1]
        absorbing = np.zeros_like(last)
        absorbing[-1] = 1.0
        if not (np.all(last == 0) or np.allclose(last, absorbing, rtol=0, atol=ROW_SUM_TOL)):
            raise NotStochastic("exit row must be zero or absorbing")
        a = a[:-1]
    if a.shape[1] != a.shape[0] + 1:
        raise NotStochastic(f"expected b rows of length b+1, got shape {a.shape}")
    b = a.shape[0]
    if not np.all(np.isfinite(a)) or np.any(a < 0) or np.any(a > 1):
        raise NotStochastic("transition probabilities must lie in [0, 1]")
    sums = a.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if bad.size:
        raise NotStochastic(f"row {bad[0]} sums to {sums[bad[0]]!r}")

    matrix = np.zeros((b + 1, b + 1))
    matrix[:b] = a
    matrix[b, b] = 1.0

    off = matrix[:b].copy()
    off[np.arange(b), np.arange(b)] = 0.0
    stuck = np.flatnonzero(off.sum(axis=1) == 0)
    if stuck.size:
        raise ExtraAbsorbing(f"state {stuck[0]} is absorbing; only state {b} may be")

    adj = (matrix > 0).astype(float)
    forward = _reachable(adj, 0)
    backward = _reachable(adj.T, b)
    off_path = np.flatnonzero(~(forward & backward))
    if off_path.size:
        raise Unreachable(f"state {off_path[0]} does not lie on a path from 0 to {b}")

    f, _ = _passage_pmf(matrix, DEFAULT_EPS_TAIL, DEFAULT_MAX_HORIZON)
    support = np.flatnonzero(f > 0)[:SPAN_POINTS] + 1
    span = _span(support)
    if span != 1:
        if span == 0:
            raise SpanViolation(f"first-passage time is deterministic (support {support.tolist()})")
        raise SpanViolation(f"first-passage support has span {span}, need 1")

    matrix.setflags(write=False)
    return BeadSpec(matrix)


def simple_bead(p: float) -> BeadSpec:
    """Two-state bead: hold at the entrance with probability ``p``, exit otherwise."""
    return validate_bead([[p, 1.0 - p]])


def bead_from_json(doc) -> BeadSpec:
    """Parse ``{"rows": [...]}`` (a dict, a JSON string, or a file-like object)."""
    if hasattr(doc, "read"):
        doc = json.load(doc)
    elif isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    if not isinstance(doc, dict) or "rows" not in doc:
        raise NotStochastic('bead JSON must be an object with a "rows" key')
    return validate_bead(doc["rows"])


def closure(bead: BeadSpec) -> np.ndarray:
    """Transition matrix of the closure: ``b -> 0`` with probability one."""
    m = np.array(bead.matrix)
    m[-1] = 0.0
    m[-1, 0] = 1.0
    return m


def fpt_moments(pmf: FirstPassagePMF | np.ndarray) -> tuple[float, float]:
    """Mean and variance of a pmf given as ``f(1), f(2), ...``."""
    values = pmf.values if isinstance(pmf, FirstPassagePMF) else np.asarray(pmf, dtype=float)
    t = np.arange(1, len(values) + 1, dtype=float)
    mu = float(t @ values)
    var = float((t * t) @ values - mu * mu)
    if var <= 1e-12 * max(1.0, mu * mu):
        raise DegenerateVariance(f"variance {var!r} is not positive")
    return mu, var


def first_passage_pmf(
    bead: BeadSpec,
    eps_tail: float = DEFAULT_EPS_TAIL,
    max_horizon: int = DEFAULT_MAX_HORIZON,
) -> FirstPassagePMF:
    """First-passage pmf from ``0`` to ``b``, truncated once survival mass <= ``eps_tail``.

    Also fits tail parameters ``(n0, alpha)`` with ``Pr[X > t] < alpha**t``
    for ``n0 < t <= horizon``.
    """
    if not 0 < eps_tail <= 1e-10:
        raise ValueError("eps_tail must lie in (0, 1e-10]")
    f, survival = _passage_pmf(bead.matrix, eps_tail, max_horizon)
    mu, var = fpt_moments(f)

    rho = _spectral_radius(bead.transient)
    alpha = 0.5 * (1.0 + rho) if rho > 0 else 0.5
    t = np.arange(len(survival))
    with np.errstate(under="ignore"):
        violated = np.flatnonzero(survival[1:] >= alpha ** t[1:]) + 1
    n0 = int(violated[-1]) if violated.size else 0

    f.setflags(write=False)
    return FirstPassagePMF(values=f, eps_tail=eps_tail, mean=mu, variance=var, n0=n0, alpha=alpha)


def closure_stationary(bead: BeadSpec) -> np.ndarray:
    """Stationary distribution of the closure by direct linear solve."""
    c = closure(bead)
    size = c.shape[0]
    a = c.T - np.eye(size)
    a[-1] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    return np.linalg.solve(a, rhs)


def taboo_sums(
    bead: BeadSpec,
    eps: float = DEFAULT_EPS_TAIL,
    max_horizon: int = DEFAULT_MAX_HORIZON,
) -> np.ndarray:
    """Expected visits ``G(k) = sum_a B^a(0, k)`` to each ``k < b`` before absorption.

    The series stops once the geometric tail bound ``survival / (1 - rho)``
    on the neglected terms drops below ``eps``.
    """
    q = bead.transient
    rho = _spectral_radius(q)
    scale = 1.0 / (1.0 - rho)
    v = np.zeros(q.shape[0])
    v[0] = 1.0
    g = np.zeros_like(v)
    for _ in range(max_horizon):
        g += v
        v = v @ q
        if v.sum() * scale < eps:
            return g
    raise HorizonExceeded(f"taboo sums did not converge within {max_horizon} steps")


def analyze_bead(bead: BeadSpec, eps_tail: float = DEFAULT_EPS_TAIL) -> BeadAnalysis:
    pmf = first_passage_pmf(bead, eps_tail)
    return BeadAnalysis(
        spec=bead,
        pmf=pmf,
        pi=closure_stationary(bead),
        taboo=taboo_sums(bead, eps_tail),
    )


def bead_powers(bead: BeadSpec, steps: int) -> np.ndarray:
    """``out[a] = Q^a`` for ``a = 0..steps``, ``Q`` the transient block (exit removed)."""
    q = bead.transient
    out = np.empty((steps + 1,) + q.shape)
    out[0] = np.eye(q.shape[0])
    for a in range(1, steps + 1):
        out[a] = out[a - 1] @ q
    return out


def first_hit_weights(bead: BeadSpec, start: int, steps: int) -> np.ndarray:
    """``w[a] = Pr[first arrival at b is at time a | start]`` for ``a = 0..steps``."""
    q = bead.transient
    exit_col = bead.exit_column
    w = np.zeros(steps + 1)
    v = np.zeros(q.shape[0])
    v[start] = 1.0
    for a in range(1, steps + 1):
        w[a] = v @ exit_col
        v = v @ q
    return w
