"""Higher-order transitions of a necklace from convolution powers of the passage pmf.

With ``X_1, X_2, ...`` i.i.d. copies of the bead passage time and
``S_J = X_1 + ... + X_J``, a walk started at ``s_0`` arrives at link ``s_i``
after ``j`` full loops exactly when ``S_{mj+R_i} + (n-m)j + (i-R_i) = t``.
Bead states are reached from the last arrival at their bead's entrance
through the taboo probabilities ``B^a(0, k)``, and a walk started inside the
bead at position ``n-1`` first has to leave it through ``s_0``.

Everything here is computed without touching the necklace operator, so it
serves as an independent check on :func:`necklaces.necklace.evolve`.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from . import kernels
from .bead import FirstPassagePMF, bead_powers, first_hit_weights
from .exceptions import InvalidStart, NecklaceError
from .necklace import NecklaceSpec, StateId

TRIM = 1e-300


def _as_values(f) -> np.ndarray:
    return f.values if isinstance(f, FirstPassagePMF) else np.asarray(f, dtype=float)


def sum_pmf(f, j: int, length: int | None = None) -> np.ndarray:
    """pmf of ``S_j``, indexed by value (``out[s] = Pr[S_j = s]``).

    ``f`` is a :class:`FirstPassagePMF` or the sequence ``f(1), f(2), ...``.
    Without ``length`` the full support ``0..j*horizon`` is returned. Entries
    below 1e-300 are dropped from the working window during powering.
    """
    if j < 0:
        raise ValueError("j must be nonnegative")
    values = _as_values(f)
    full = j * len(values) + 1
    length = full if length is None else length
    out = np.zeros(length)
    lo, win = _power_window(values, j)
    if lo < length:
        k = min(len(win), length - lo)
        out[lo : lo + k] = win[:k]
    return out


def _trim(lo: int, w: np.ndarray) -> tuple[int, np.ndarray]:
    keep = np.flatnonzero(w > TRIM)
    if keep.size == 0:
        return lo, w[:0]
    return lo + int(keep[0]), w[keep[0] : keep[-1] + 1]


def _power_window(values: np.ndarray, j: int) -> tuple[int, np.ndarray]:
    """``(offset, window)`` of the ``j``-fold convolution power of ``f`` (support starts at 1)."""
    result = (0, np.ones(1))
    base = _trim(1, values)
    while j:
        if j & 1:
            result = (result[0] + base[0], np.convolve(result[1], base[1]))
            result = _trim(*result)
        j >>= 1
        if j:
            base = _trim(2 * base[0], np.convolve(base[1], base[1]))
    return result


class SumPMFTable:
    """Convolution powers ``S_0, S_1, ...`` truncated to values ``0..length-1``.

    Truncation is exact for the values kept, since each ``X_i >= 1``.
    Powers are built incrementally and cached.
    """

    def __init__(self, f, length: int):
        self.length = int(length)
        values = _as_values(f)
        self.f = np.zeros(self.length)
        k = min(self.length - 1, len(values))
        self.f[1 : k + 1] = values[:k]
        s0 = np.zeros(self.length)
        s0[0] = 1.0
        self._cache = [s0]

    def __getitem__(self, j: int) -> np.ndarray:
        while len(self._cache) <= j:
            self._cache.append(self._next(self._cache[-1]))
        return self._cache[j]

    def _next(self, prev: np.ndarray) -> np.ndarray:
        return kernels.convolve_truncated(prev, self.f, self.length)

    def stream(self, j_max: int):
        """Yield ``(j, S_j)`` for ``j = 0..j_max`` without caching."""
        cur = self._cache[0]
        for j in range(j_max + 1):
            yield j, cur
            if j < j_max:
                cur = self._next(cur)


class TransitionFormulas:
    """Exact ``P^tau(start, s)`` for ``tau = 0..t_max`` and every state ``s``.

    Valid starts are ``s_0`` and the states of the bead at position ``n-1``.
    """

    def __init__(self, spec: NecklaceSpec, t_max: int):
        if t_max < 0:
            raise ValueError("t_max must be nonnegative")
        self.spec = spec
        self.t_max = int(t_max)
        self.length = self.t_max + 1

    @cached_property
    def bead_powers(self) -> np.ndarray:
        return bead_powers(self.spec.bead.spec, self.t_max)

    @cached_property
    def arrivals(self) -> np.ndarray:
        """``arrivals[i, tau]``: probability of entering ``s_i`` from position ``i-1`` at ``tau``.

        Row 0 includes the start itself at ``tau = 0`` (the ``j = 0`` term).
        """
        spec, L = self.spec, self.length
        n, m = spec.n, spec.m
        R = spec.R[:-1]
        by_prefix = [np.flatnonzero(R == rho) for rho in range(m + 1)]
        out = np.zeros((n, L))
        table = SumPMFTable(spec.bead.pmf, L)
        # sums S_J with J > t_max vanish on 0..t_max
        j_cap = min(self.t_max, m * (self.t_max // n) + m)
        for J, s_J in table.stream(j_cap):
            for j in range(max(0, (J - m + m - 1) // m), J // m + 1):
                rho = J - m * j
                if not 0 <= rho <= m:
                    continue
                for i in by_prefix[rho]:
                    shift = int(i) - rho + (n - m) * j
                    if shift < L:
                        out[i, shift:] += s_J[: L - shift]
        return out

    def link(self, i: int) -> np.ndarray:
        """Arrival series at ``s_i``; equals ``P^tau(s_0, s_i)`` when ``r_i = 0``."""
        return self.arrivals[i]

    def bead_state(self, i: int, k: int) -> np.ndarray:
        """``P^tau(s_0, s_{i,k})`` for a bead at position ``i`` and ``0 <= k < b``."""
        spec = self.spec
        if not spec.r[i]:
            raise NecklaceError(f"no bead at position {i}")
        taboo = self.bead_powers[:, 0, k]
        entering = self.arrivals[i]
        if i == 0:
            entering = entering.copy()
            entering[0] -= 1.0
        out = kernels.convolve_truncated(taboo, entering, self.length)
        if i == 0:
            out += taboo
        return out

    @cached_property
    def from_s0(self) -> np.ndarray:
        """``table[tau, idx] = P^tau(s_0, state idx)``."""
        spec = self.spec
        table = np.zeros((self.length, spec.size))
        for i in range(spec.n):
            base = int(spec.offsets[i])
            if not spec.r[i]:
                table[:, base] = self.link(i)
                continue
            for k in range(spec.b):
                table[:, base + k] = self.bead_state(i, k)
        return table

    def from_last_bead(self, l: int) -> np.ndarray:
        """``table[tau, idx] = P^tau(s_{n-1,l}, state idx)``."""
        spec = self.spec
        last = spec.n - 1
        if not spec.r[last] or not 0 <= l < spec.b:
            raise InvalidStart(f"s{last},{l} is not in a bead at position n-1")
        w = first_hit_weights(spec.bead.spec, l, self.t_max)
        s0 = self.from_s0
        table = np.empty_like(s0)
        for idx in range(spec.size):
            table[:, idx] = kernels.convolve_truncated(w, s0[:, idx], self.length)
        base = int(spec.offsets[last])
        table[:, base : base + spec.b] += self.bead_powers[:, l, :]
        return table

    def table(self, start: StateId = StateId(0, 0)) -> np.ndarray:
        start = StateId(*start)
        if start == StateId(0, 0):
            return self.from_s0
        if start.position == self.spec.n - 1:
            return self.from_last_bead(start.k)
        raise InvalidStart(f"{start} is neither s0 nor in the bead at position n-1")


def allowed_starts(spec: NecklaceSpec) -> list[StateId]:
    """``s_0`` plus every state of the bead at position ``n-1`` (if there is one)."""
    starts = [StateId(0, 0)]
    last = spec.n - 1
    if spec.r[last]:
        starts += [StateId(last, k) for k in range(spec.b) if StateId(last, k) != StateId(0, 0)]
    return starts


def hot_link(spec: NecklaceSpec, t: int, i: int) -> float:
    """``sum_j Pr[S_{mj+R_i} = t - i + R_i - (n-m) j]``."""
    return float(TransitionFormulas(spec, t).link(i)[t])


def hot_bead_state(spec: NecklaceSpec, t: int, i: int, k: int) -> float:
    """``P^t(s_0, s_{i,k})`` for a state in the bead at position ``i``."""
    return float(TransitionFormulas(spec, t).bead_state(i, k)[t])


def hot_from_bead_state(spec: NecklaceSpec, t: int, l: int, target: StateId) -> float:
    """``P^t(s_{n-1,l}, target)``."""
    return float(TransitionFormulas(spec, t).from_last_bead(l)[t, spec.index(StateId(*target))])


def hot_table(spec: NecklaceSpec, t_max: int, start: StateId = StateId(0, 0)) -> np.ndarray:
    return TransitionFormulas(spec, t_max).table(start)
