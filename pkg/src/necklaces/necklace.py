"""Necklace chains built from a bead and an indicator vector.

Link states ``s_0..s_{n-1}`` sit on a directed cycle. Position ``i`` carries a
copy of the bead when ``r[i] == 1`` (entrance ``s_i``, exit ``s_{i+1}``) and a
deterministic link edge otherwise. Indices wrap mod ``n``.

States are indexed canonically by position: the link state ``s_i`` first, then
the bead interiors ``s_{i,1}..s_{i,b-1}`` when ``r[i] == 1``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from . import kernels
from .bead import BeadAnalysis, analyze_bead, bead_from_json
from .exceptions import DimensionMismatch, NecklaceError, NoBeads, UnknownPattern


class StateId(NamedTuple):
    """``StateId(i, 0)`` is the link state ``s_i``; ``StateId(i, k)``, ``k >= 1``, a bead interior."""

    position: int
    k: int = 0

    @property
    def is_link(self) -> bool:
        return self.k == 0

    def __str__(self) -> str:
        return f"s{self.position}" if self.k == 0 else f"s{self.position}:{self.k}"


def parse_state(text: str) -> StateId:
    """Parse ``"s0"``, ``"0"``, ``"19:1"`` or ``"s19:1"``."""
    t = text.strip().lstrip("s")
    for sep in (":", ","):
        if sep in t:
            i, k = t.split(sep)
            return StateId(int(i), int(k))
    return StateId(int(t), 0)


@dataclass(frozen=True, eq=False)
class NecklaceSpec:
    bead: BeadAnalysis
    r: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.r)

    @property
    def m(self) -> int:
        return sum(self.r)

    @property
    def b(self) -> int:
        return self.bead.b

    @cached_property
    def R(self) -> np.ndarray:
        """Prefix sums ``R_i = r_0 + ... + r_{i-1}`` for ``i = 0..n``."""
        out = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(self.r, out=out[1:])
        return out

    @property
    def size(self) -> int:
        return self.n + self.m * (self.b - 1)

    @property
    def scale_denominator(self) -> float:
        """``n + (mu - 1) m``: the effective cycle length in steps."""
        return self.n + (self.bead.mu - 1.0) * self.m

    @cached_property
    def offsets(self) -> np.ndarray:
        """Canonical index of each link state ``s_i``."""
        return np.arange(self.n) + (self.b - 1) * self.R[:-1]

    def index(self, state: StateId) -> int:
        i, k = state
        if not 0 <= i < self.n:
            raise NecklaceError(f"position {i} outside 0..{self.n - 1}")
        if k == 0:
            return int(self.offsets[i])
        if not self.r[i] or not 0 < k < self.b:
            raise NecklaceError(f"{state} is not a state of this necklace")
        return int(self.offsets[i]) + k

    @cached_property
    def states(self) -> tuple[StateId, ...]:
        out = []
        for i in range(self.n):
            out.append(StateId(i, 0))
            if self.r[i]:
                out.extend(StateId(i, k) for k in range(1, self.b))
        return tuple(out)

    @cached_property
    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.states])

    @cached_property
    def interior_index(self) -> np.ndarray:
        return np.array([s.k for s in self.states])

    @cached_property
    def in_bead(self) -> np.ndarray:
        """Mask of states that belong to a bead (link states at bead positions included)."""
        r = np.asarray(self.r, dtype=bool)
        return r[self.positions]

    @cached_property
    def operator(self) -> csr_matrix:
        return _build_operator(self)

    def to_json(self) -> dict:
        return {"bead": self.bead.spec.to_json(), "r": list(self.r)}


def _build_operator(spec: NecklaceSpec) -> csr_matrix:
    b = spec.b
    bm = spec.bead.spec.matrix
    rows, cols, vals = [], [], []
    for i in range(spec.n):
        src = int(spec.offsets[i])
        nxt = int(spec.offsets[(i + 1) % spec.n])
        if not spec.r[i]:
            rows.append(src)
            cols.append(nxt)
            vals.append(1.0)
            continue
        for k in range(b):
            for l in np.flatnonzero(bm[k] > 0):
                rows.append(src + k)
                cols.append(nxt if l == b else src + int(l))
                vals.append(bm[k, l])
    size = spec.size
    op = coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()
    op.sum_duplicates()
    op.sort_indices()
    return op


def build_necklace(bead: BeadAnalysis, r: Sequence[int]) -> tuple[NecklaceSpec, csr_matrix]:
    """Necklace with bead ``bead`` and indicator ``r``; returns the spec and its operator."""
    r = tuple(int(x) for x in r)
    if len(r) < 1:
        raise NecklaceError("indicator vector must have at least one entry")
    if any(x not in (0, 1) for x in r):
        raise NecklaceError("indicator entries must be 0 or 1")
    if sum(r) == 0:
        raise NoBeads("a necklace without beads is periodic")
    spec = NecklaceSpec(bead=bead, r=r)
    return spec, spec.operator


def indicator_gallery(name: str, n: int, m: int | None = None) -> tuple[int, ...]:
    """Named indicator patterns.

    ``alternating``: beads at even positions; ``block``: beads at ``i < n/2``;
    ``all``: every position; ``fixed-count``: beads at the first ``m`` positions.
    """
    if n < 1:
        raise NecklaceError("n must be positive")
    if name == "alternating":
        return tuple(int(i % 2 == 0) for i in range(n))
    if name == "block":
        return tuple(int(2 * i < n) for i in range(n))
    if name == "all":
        return (1,) * n
    if name in ("fixed-count", "fixed_count"):
        if m is None or not 1 <= m <= n:
            raise NecklaceError("fixed-count needs 1 <= m <= n")
        return tuple(int(i < m) for i in range(n))
    raise UnknownPattern(f"unknown indicator pattern {name!r}")


def necklace_from_json(doc, bead_resolver=None) -> NecklaceSpec:
    """Parse ``{"bead": ..., "r": [...]}`` or ``{"bead": ..., "pattern": ..., "n": ...}``.

    ``bead_resolver`` maps the ``bead`` value to a :class:`BeadAnalysis`
    (default: parse it as bead JSON).
    """
    if hasattr(doc, "read"):
        doc = json.load(doc)
    elif isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    bead = bead_resolver(doc["bead"]) if bead_resolver else analyze_bead(bead_from_json(doc["bead"]))
    if "r" in doc:
        r = doc["r"]
    elif "pattern" in doc:
        r = indicator_gallery(doc["pattern"], int(doc["n"]), doc.get("m"))
    else:
        raise NecklaceError('necklace JSON needs "r" or "pattern"')
    return build_necklace(bead, r)[0]


def stationary(spec: NecklaceSpec) -> np.ndarray:
    """Closed-form stationary distribution.

    Bead states ``s_{i,k}`` get ``(mu+1) pi(k) / (n + (mu-1) m)`` with ``pi``
    the closure's stationary law; link states without a bead get
    ``1 / (n + (mu-1) m)``.
    """
    bead = spec.bead
    weight = np.where(
        spec.in_bead,
        (bead.mu + 1.0) * bead.pi[spec.interior_index],
        1.0,
    )
    return weight / spec.scale_denominator


def stationary_solve(op) -> np.ndarray:
    """Stationary vector of a row-stochastic operator by dense linear solve."""
    p = op.toarray() if hasattr(op, "toarray") else np.asarray(op, dtype=float)
    size = p.shape[0]
    a = p.T - np.eye(size)
    a[-1] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    return np.linalg.solve(a, rhs)


def point_mass(spec: NecklaceSpec, state: StateId | int = StateId(0, 0)) -> np.ndarray:
    x = np.zeros(spec.size)
    x[state if isinstance(state, (int, np.integer)) else spec.index(state)] = 1.0
    return x


def clean(x: np.ndarray) -> np.ndarray:
    """Clamp rounding negatives to zero and renormalize."""
    x = np.maximum(x, 0.0)
    return x / x.sum()


def evolve(op, start: np.ndarray, t: int, raw: bool = False) -> np.ndarray:
    """``start P^t`` by ``t`` sparse row-vector steps.

    The result is cleaned (see :func:`clean`) unless ``raw`` is set.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = kernels.evolve(op, start, t)
    return x if raw else clean(x)


def tv_trace(op, start: np.ndarray, target: np.ndarray, steps: int) -> np.ndarray:
    """``TV(start P^s, target)`` for ``s = 0..steps``."""
    return kernels.evolve_tv_trace(op, start, target, steps)[1]


def tv_distance(d1, d2) -> float:
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    if d1.shape != d2.shape:
        raise DimensionMismatch(f"distributions of shape {d1.shape} and {d2.shape}")
    return 0.5 * float(np.abs(d1 - d2).sum())


def distribution_csv(spec: NecklaceSpec, dist: np.ndarray, extra: dict | None = None) -> str:
    """CSV with columns ``state_id, position, kind, k, probability`` (+ ``extra`` columns)."""
    extra = extra or {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["state_id", "position", "kind", "k", "probability", *extra])
    for idx, s in enumerate(spec.states):
        w.writerow(
            [
                str(s),
                s.position,
                "link" if s.is_link else "interior",
                s.k,
                f"{dist[idx]:.17g}",
                *(f"{col[idx]:.17g}" for col in extra.values()),
            ]
        )
    return buf.getvalue()
