"""Convergence bounds through reversibilization.

For a chain ``P`` with stationary law ``pi`` this module provides the time
reversal, the multiplicative symmetrization ``M(P) = P P_rev``, its second
eigenvalue and Fill's bound, the comparison of second
eigenvalues, moderate-growth certificates and the Nash-inequality bound. It
also builds the two-parameter example family ``P_n``, ``P_n^{n-1}``,
``K_n = M(P_n^{n-1})`` and the lazy path walk used for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .bead import analyze_bead, simple_bead, validate_bead
from .exceptions import (
    Disconnected,
    InvalidPath,
    NotReversible,
    NotStationary,
    SupportViolation,
    ZeroMassState,
)
from .limit import time_scale_value, tv_limit
from .necklace import NecklaceSpec, build_necklace, stationary

STATIONARY_TOL = 1e-10
REVERSIBLE_TOL = 1e-10
GROWTH_RTOL = 1e-12


def _dense(p) -> np.ndarray:
    return p.toarray() if hasattr(p, "toarray") else np.asarray(p, dtype=float)


@dataclass(frozen=True, eq=False)
class ReversibleOperator:
    matrix: np.ndarray
    pi: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def edges(self) -> np.ndarray:
        """Off-diagonal support as an adjacency mask."""
        adj = self.matrix > 0
        np.fill_diagonal(adj, False)
        return adj


def _check_pair(p: np.ndarray, pi: np.ndarray) -> None:
    if np.any(pi <= 0):
        raise ZeroMassState(f"state {int(np.argmin(pi))} has zero stationary mass")
    resid = np.max(np.abs(pi @ p - pi))
    if resid >= STATIONARY_TOL:
        raise NotStationary(f"pi P - pi has residual {resid:.3g}")


def reverse(p, pi) -> np.ndarray:
    """Time reversal ``P_rev(x, y) = pi(y) P(y, x) / pi(x)``."""
    p = _dense(p)
    pi = np.asarray(pi, dtype=float)
    _check_pair(p, pi)
    return (p.T * pi[None, :]) / pi[:, None]


def mult_symmetrization(p, pi) -> ReversibleOperator:
    """``M(P) = P P_rev``, reversible with respect to ``pi``."""
    p = _dense(p)
    pi = np.asarray(pi, dtype=float)
    m = p @ reverse(p, pi)
    flow = pi[:, None] * m
    if np.max(np.abs(flow - flow.T)) >= REVERSIBLE_TOL:
        raise NotReversible("symmetrization failed detailed balance")
    return ReversibleOperator(m, pi)


def is_connected(adj: np.ndarray) -> bool:
    count, _ = connected_components(csr_matrix(adj), directed=False)
    return count == 1


def second_eigenvalue(k: ReversibleOperator) -> float:
    """Second largest eigenvalue of a reversible operator.

    A disconnected underlying graph gives 1 without an eigen-solve.
    """
    mat, pi = k.matrix, k.pi
    flow = pi[:, None] * mat
    if np.max(np.abs(flow - flow.T)) >= REVERSIBLE_TOL:
        raise NotReversible("operator does not satisfy detailed balance")
    if k.size == 1:
        return 0.0
    if not is_connected(k.edges()):
        return 1.0
    root = np.sqrt(pi)
    sym = root[:, None] * mat / root[None, :]
    vals = np.linalg.eigvalsh(0.5 * (sym + sym.T))
    return float(vals[-2])


def fill_bound(pi, x0: int, beta1: float, t, clamp: bool = True):
    """``beta1^(t/2) / (2 sqrt(pi(x0)))``, clamped to ``[0, 1]`` by default."""
    raw = np.asarray(beta1, dtype=float) ** (np.asarray(t, dtype=float) / 2.0) / (2.0 * math.sqrt(pi[x0]))
    out = np.clip(raw, 0.0, 1.0) if clamp else raw
    return float(out) if np.ndim(out) == 0 else out


def comparison_bound(k: ReversibleOperator, k_ref: ReversibleOperator, beta1_ref: float | None = None) -> float:
    """Upper bound on ``beta1(k)`` by comparison with ``k_ref`` on the same states.

    ``1 - min(pi_ref/pi) * min_{x != y, K(x,y) > 0} (pi K)/(pi_ref K_ref) * (1 - beta1(k_ref))``.
    """
    support = k.edges()
    if np.any(support & ~(k_ref.matrix > 0)):
        raise SupportViolation("an edge of K is missing from the comparison chain")
    if beta1_ref is None:
        beta1_ref = second_eigenvalue(k_ref)
    ratio_pi = float(np.min(k_ref.pi / k.pi))
    flow = (k.pi[:, None] * k.matrix)[support]
    flow_ref = (k_ref.pi[:, None] * k_ref.matrix)[support]
    ratio_edge = float(np.min(flow / flow_ref))
    return 1.0 - ratio_pi * ratio_edge * (1.0 - beta1_ref)


@dataclass
class GrowthCertificate:
    A: float
    d: float
    gamma: int
    distances: np.ndarray
    volumes: np.ndarray  # volumes[x, r] = pi(B(x, r)), r = 0..gamma
    passed: bool
    witness: tuple[int, int]
    margin: float  # min over (x, r) of V(x, r) * A * (gamma / (r+1))^d

    def to_json(self) -> dict:
        return {
            "A": self.A,
            "d": self.d,
            "gamma": self.gamma,
            "passed": self.passed,
            "witness": {"x": self.witness[0], "r": self.witness[1]},
            "margin": self.margin,
        }


def graph_distances(adj: np.ndarray) -> np.ndarray:
    dist = shortest_path(csr_matrix(adj.astype(float)), method="D", directed=False, unweighted=True)
    if np.isinf(dist).any():
        raise Disconnected("edge set does not connect the state space")
    return dist.astype(np.int64)


def moderate_growth(adj, pi, A: float, d: float) -> GrowthCertificate:
    """Check ``V(x, r) >= (1/A) ((r+1)/gamma)^d`` for every ``x`` and ``0 <= r <= gamma``.

    ``adj`` is an adjacency mask (or a :class:`ReversibleOperator`, whose
    off-diagonal support is used). Equality cases pass up to a relative
    1e-12 rounding allowance.
    """
    if isinstance(adj, ReversibleOperator):
        adj = adj.edges()
    adj = np.asarray(adj, dtype=bool)
    pi = np.asarray(pi, dtype=float)
    dist = graph_distances(adj)
    gamma = int(dist.max())
    radii = np.arange(gamma + 1)
    vol = np.stack([(pi[None, :] * (dist <= r)).sum(axis=1) for r in radii], axis=1)
    denom = gamma if gamma > 0 else 1
    score = vol * A * (denom / (radii + 1.0))[None, :] ** d
    x, r = np.unravel_index(int(np.argmin(score)), score.shape)
    margin = float(score[x, r])
    return GrowthCertificate(
        A=A,
        d=d,
        gamma=gamma,
        distances=dist,
        volumes=vol,
        passed=margin >= 1.0 - GROWTH_RTOL,
        witness=(int(x), int(r)),
        margin=margin,
    )


def geodesic_paths(adj: np.ndarray, dist: np.ndarray) -> dict[tuple[int, int], tuple[int, ...]]:
    """Lexicographically smallest shortest path for every ordered pair ``z != w``."""
    size = adj.shape[0]
    nbrs = [np.flatnonzero(adj[v]) for v in range(size)]
    paths = {}
    for z in range(size):
        for w in range(size):
            if z == w:
                continue
            path = [z]
            v = z
            while v != w:
                v = int(next(u for u in nbrs[v] if dist[u, w] == dist[v, w] - 1))
                path.append(v)
            paths[(z, w)] = tuple(path)
    return paths


@dataclass
class NashConstants:
    a: float
    a1: float
    gamma: int
    A: float
    d: float
    paths: dict = field(repr=False)
    argmax: tuple[int, int, int]  # (x, y, r)

    def to_json(self) -> dict:
        return {"a": self.a, "a1": self.a1, "gamma": self.gamma, "argmax": list(self.argmax)}


def nash_a1(A: float, d: float) -> float:
    return math.sqrt(math.e * (1.0 + d) * A) * (4.0 * (2.0 + d)) ** (d / 4.0)


def nash_constants(k: ReversibleOperator, growth: GrowthCertificate, paths=None) -> NashConstants:
    """Path-congestion constant ``a`` and ``a1`` for the Nash bound.

    ``a`` is the maximum over directed edges ``(x, y)`` and ``1 <= r <= gamma`` of
    ``2 / (r^2 pi(x) K(x, y)) * sum |path| pi(z) pi(w) / V(z, r)``, the sum
    running over paths that traverse ``x -> y`` and join points at distance
    ``<= r``. Paths default to :func:`geodesic_paths`.
    """
    adj = k.edges()
    dist = growth.distances
    if paths is None:
        paths = geodesic_paths(adj, dist)
    pi = k.pi
    size = k.size
    edge_ids = -np.ones((size, size), dtype=np.int64)
    ex, ey = np.nonzero(adj)
    edge_ids[ex, ey] = np.arange(len(ex))

    inc_edge, inc_z, inc_w, inc_len = [], [], [], []
    for z in range(size):
        for w in range(size):
            if z == w:
                continue
            path = paths.get((z, w))
            if path is None or path[0] != z or path[-1] != w:
                raise InvalidPath(f"no valid path supplied for ({z}, {w})")
            for u, v in zip(path[:-1], path[1:]):
                if edge_ids[u, v] < 0:
                    raise InvalidPath(f"path for ({z}, {w}) uses non-edge ({u}, {v})")
                inc_edge.append(edge_ids[u, v])
                inc_z.append(z)
                inc_w.append(w)
                inc_len.append(len(path) - 1)
    inc_edge = np.array(inc_edge, dtype=np.int64)
    inc_z = np.array(inc_z, dtype=np.int64)
    inc_w = np.array(inc_w, dtype=np.int64)
    inc_len = np.array(inc_len, dtype=float)
    inc_d = dist[inc_z, inc_w]
    weight = inc_len * pi[inc_z] * pi[inc_w]
    edge_flow = pi[ex] * k.matrix[ex, ey]

    best, argmax = 0.0, (-1, -1, -1)
    for r in range(1, growth.gamma + 1):
        mask = inc_d <= r
        acc = np.zeros(len(ex))
        np.add.at(acc, inc_edge[mask], weight[mask] / growth.volumes[inc_z[mask], r])
        vals = 2.0 * acc / (r * r * edge_flow)
        e = int(np.argmax(vals))
        if vals[e] > best:
            best, argmax = float(vals[e]), (int(ex[e]), int(ey[e]), r)
    return NashConstants(
        a=best,
        a1=nash_a1(growth.A, growth.d),
        gamma=growth.gamma,
        A=growth.A,
        d=growth.d,
        paths=paths,
        argmax=argmax,
    )


@dataclass
class NashBound:
    t: int
    raw: float
    m: float

    @property
    def bound(self) -> float:
        return min(1.0, self.raw)

    def to_json(self) -> dict:
        return {"t": self.t, "m": self.m, "bound": self.bound, "raw_bound": self.raw}


def nash_bound(consts: NashConstants, m: float = 0.0) -> NashBound:
    """``0.5 a1 exp(-m / (a gamma^2))`` at ``t = ceil(a gamma^2 + m) + 1``."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    scale = consts.a * consts.gamma**2
    return NashBound(t=int(math.ceil(scale + m)) + 1, raw=0.5 * consts.a1 * math.exp(-m / scale), m=m)


def nash_coefficient(p: float) -> float:
    """Closed-form upper bound ``(1-pq)^2 / (q min(q^2, pq))`` on ``a`` for ``K_n``."""
    q = 1.0 - p
    return (1.0 - p * q) ** 2 / (q * min(q * q, p * q))


def llt_c_for(eps: float, lo: float = 1e-4, hi: float = 100.0, iters: int = 200) -> float:
    """Rescaled time ``c`` with ``tv_limit(c) = eps`` (bisection in ``log c``)."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    a, b = math.log(lo), math.log(hi)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if tv_limit(math.exp(mid)) < eps:
            b = mid
        else:
            a = mid
        if b - a < 1e-13:
            break
    return math.exp(b)


def steps_needed(method: str, eps: float, n: int, p: float) -> int:
    """Steps of ``P_n^{n-1}`` after which the chosen method certifies TV below ``eps``.

    ``llt``: smallest integer ``t > c (n-p)^3 / (p q (n-1))`` with
    ``tv_limit(c) = eps``. ``nash``: smallest integer exceeding
    ``(1-pq)^2/(q min(q^2,pq)) (1 + log(48 e^2)/4 + log(1/q)/2 - log eps) (n-1)^2 + 1``.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    q = 1.0 - p
    if method == "llt":
        bead = analyze_bead(simple_bead(p))
        scale = time_scale_value(n, n - 1, bead.mu, bead.variance)
        return int(math.floor(llt_c_for(eps) * scale)) + 1
    if method == "nash":
        lead = 1.0 + 0.25 * math.log(48.0 * math.e**2) + 0.5 * math.log(1.0 / q) - math.log(eps)
        return int(math.floor(nash_coefficient(p) * lead * (n - 1) ** 2 + 1.0)) + 1
    raise ValueError(f"unknown method {method!r}")


# -- the example family ---------------------------------------------------


def one_bead_matrix(n: int, p: float) -> np.ndarray:
    """``P_n``: the cycle ``n-1 -> n-2 -> ... -> 1``, with ``1 -> 0`` (prob q) or ``1 -> n-1`` (prob p), and ``0 -> n-1``."""
    q = 1.0 - p
    m = np.zeros((n, n))
    m[0, n - 1] = 1.0
    m[1, 0] = q
    m[1, n - 1] += p
    for k in range(2, n):
        m[k, k - 1] = 1.0
    return m


def power_matrix(n: int, p: float) -> np.ndarray:
    q = 1.0 - p
    m = np.zeros((n, n))
    m[0, 1] = 1.0
    for i in range(1, n - 1):
        m[i, i] = p
        m[i, i + 1] = q
    m[n - 1, 0] = q
    m[n - 1, n - 1] = p
    return m


def k_matrix(n: int, p: float) -> np.ndarray:
    q = 1.0 - p
    m = np.zeros((n, n))
    m[0, 0], m[0, 1] = q, p
    for i in range(1, n - 1):
        m[i, i - 1] = p * q
        m[i, i] = p * p + q * q
        m[i, i + 1] = p * q
    m[n - 1, n - 2] = p * q
    m[n - 1, n - 1] = 1.0 - p * q
    return m


def lazy_path(n: int) -> np.ndarray:
    m = np.zeros((n, n))
    m[0, 0] = m[0, 1] = 0.5
    for i in range(1, n - 1):
        m[i, i - 1], m[i, i], m[i, i + 1] = 0.25, 0.5, 0.25
    m[n - 1, n - 2] = m[n - 1, n - 1] = 0.5
    return m


def lazy_path_pi(n: int) -> np.ndarray:
    pi = np.full(n, 1.0 / (n - 1))
    pi[0] = pi[-1] = 1.0 / (2 * n - 2)
    return pi


@dataclass
class ExampleChains:
    n: int
    p: float
    P: np.ndarray
    P_power: np.ndarray
    K: ReversibleOperator
    K_tilde: ReversibleOperator
    pi_P: np.ndarray
    pi_power: np.ndarray
    P_necklace: NecklaceSpec
    power_necklace: NecklaceSpec
    P_order: np.ndarray  # P_order[j] = label in P of the necklace's canonical state j

    @property
    def M_P(self) -> ReversibleOperator:
        return mult_symmetrization(self.P, self.pi_P)


def build_example_chains(n: int, p: float) -> ExampleChains:
    """Build ``P_n``, ``P_n^{n-1}``, ``K_n`` and the lazy path walk, with stationary laws.

    ``P_n`` is assembled as a one-bead necklace on ``n-1`` link states and
    relabeled so that state 0 is the bead interior; ``P_n^{n-1}`` is its matrix power.
    Both are checked against the explicit closed-form matrices.
    """
    if n < 3 or not 0 < p < 1:
        raise ValueError("need n >= 3 and 0 < p < 1")
    q = 1.0 - p
    bead = analyze_bead(validate_bead([[0.0, q, p], [0.0, 0.0, 1.0]]))
    p_spec, _ = build_necklace(bead, (1,) + (0,) * (n - 2))
    order = np.array([1, 0] + list(range(n - 1, 1, -1)))
    perm = np.empty(n, dtype=np.int64)
    perm[order] = np.arange(n)
    p_canon = p_spec.operator.toarray()
    P = p_canon[np.ix_(perm, perm)]
    # both chains spend q/(n-p) at state 0 and 1/(n-p) elsewhere; the closed
    # form avoids the ~1e-14 bias that truncated passage moments put into the
    # necklace formula, which would otherwise show up as a floor in exact TV
    exact_pi = np.full(n, 1.0 / (n - p))
    exact_pi[0] = q / (n - p)
    pi_P = exact_pi
    if np.max(np.abs(stationary(p_spec)[perm] - pi_P)) >= 1e-12:
        raise AssertionError("necklace stationary law disagrees with the closed form for P_n")
    if not np.allclose(P, one_bead_matrix(n, p), rtol=0, atol=1e-15):
        raise AssertionError("necklace assembly disagrees with the closed-form P_n")

    P_power = np.linalg.matrix_power(P, n - 1)
    if not np.allclose(P_power, power_matrix(n, p), rtol=0, atol=1e-12):
        raise AssertionError("P_n^(n-1) disagrees with the closed-form matrix")
    power_spec, _ = build_necklace(analyze_bead(simple_bead(p)), (0,) + (1,) * (n - 1))
    pi_power = exact_pi.copy()
    if np.max(np.abs(stationary(power_spec) - pi_power)) >= 1e-12:
        raise AssertionError("necklace stationary law disagrees with the closed form for P_n^(n-1)")

    K = mult_symmetrization(P_power, pi_power)
    K_tilde = ReversibleOperator(lazy_path(n), lazy_path_pi(n))
    return ExampleChains(
        n=n,
        p=p,
        P=P,
        P_power=P_power,
        K=K,
        K_tilde=K_tilde,
        pi_P=pi_P,
        pi_power=pi_power,
        P_necklace=p_spec,
        power_necklace=power_spec,
        P_order=order,
    )


def exact_tv_matrix(P, pi, x0: int, steps: int) -> np.ndarray:
    """``TV(P^t(x0, .), pi)`` for ``t = 0..steps`` (dense, small chains)."""
    from . import kernels

    x = np.zeros(len(pi))
    x[x0] = 1.0
    return kernels.evolve_tv_trace(csr_matrix(_dense(P)), x, pi, steps)[1]


def bound_report(n: int, p: float, eps: float = 0.25, fill_times=None, nash_ms=None) -> dict:
    """Every quantity of the comparison for the example family, as plain JSON data."""
    ch = build_example_chains(n, p)
    pi = ch.pi_power
    beta_mp = second_eigenvalue(ch.M_P)
    beta_k = second_eigenvalue(ch.K)
    beta_kt = second_eigenvalue(ch.K_tilde)
    comp = comparison_bound(ch.K, ch.K_tilde, beta_kt)
    A = 1.0 / (1.0 - p) + 1.0 / (n - 1)
    growth = moderate_growth(ch.K, pi, A, 1.0)
    consts = nash_constants(ch.K, growth)
    scale = consts.a * consts.gamma**2
    nash_ms = list(nash_ms) if nash_ms is not None else [0.0, scale, 3.0 * scale]
    nash = [nash_bound(consts, m) for m in nash_ms]

    x0 = int(np.argmin(pi))
    if fill_times is None:
        fill_times = sorted({int(t) for t in np.linspace(0, 20 * n * n, 21)})
    horizon = max([max(fill_times)] + [b.t for b in nash])
    needed = {meth: steps_needed(meth, eps, n, p) for meth in ("llt", "nash")}
    horizon = max(horizon, *needed.values())
    tv_all = np.array([exact_tv_matrix(ch.P_power, pi, x, horizon) for x in range(n)])
    tv = tv_all.max(axis=0)

    return {
        "n": n,
        "p": p,
        "beta1": {
            "M(P_n)": beta_mp,
            "M(P_n)_disconnected": not is_connected(ch.M_P.edges()),
            "K_n": beta_k,
            "K_tilde": beta_kt,
            "K_tilde_closed_form": 0.5 + 0.5 * math.cos(math.pi / (n - 1)),
        },
        "fill_curve": [[t, fill_bound(pi, x0, beta_k, t), float(tv_all[x0, t])] for t in fill_times],
        "fill_start": x0,
        "comparison_bound": comp,
        "growth": growth.to_json(),
        "nash": {
            **consts.to_json(),
            "a_closed_form_bound": nash_coefficient(p),
            "bounds": [{**b.to_json(), "tv_exact": float(tv[b.t])} for b in nash],
        },
        "steps_needed": {
            "eps": eps,
            **{meth: {"t": t, "tv_exact": float(tv[t])} for meth, t in needed.items()},
        },
    }
