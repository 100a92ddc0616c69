"""Continuous-time simple random walk on a connected graph.

The generator has off-diagonal rates 1/deg(x) toward each neighbour and -1 on
the diagonal, so the uniformized jump kernel is exactly the discrete simple
random walk kernel P and e^{tQ} is the Poisson(t) mixture of powers of P.
Transient distributions are therefore computed by truncated Poisson mixing
(numerically stable for all t), and time is advanced across large spans by
composing uniformized kernels through the semigroup identity
e^{(s+u)Q} = e^{sQ} e^{uQ}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.special import gammaln

from .errors import CapacityError, DomainError, NonConvergenceError, PercmixError
from .percolation import ClusterGraph

TV_THRESHOLD = math.exp(-1.0)

# Full pairwise mixing needs the complete |V| x |V| kernel matrix in memory.
PAIRWISE_CAP = 5000
MATRIX_HARD_CAP = 12000

DEFAULT_POISSON_TOL = 1e-10


class Chain:
    """Reversible walk data on a connected graph.

    The stationary law is degree-proportional and the directed edge measure
    pi(x) Q_{x,y} equals 1/(2|E|) for every directed edge, which makes
    reversibility an exact integer identity.
    """

    def __init__(self, graph: ClusterGraph):
        m = graph.num_vertices
        if m < 2:
            raise DomainError("chain needs at least 2 vertices")
        self.graph = graph
        self.m = m
        self.degrees = graph.degrees
        self.total_degree = int(self.degrees.sum())
        self.pi = self.degrees / self.total_degree
        inv_deg = 1.0 / self.degrees
        # P[x, y] = 1/deg(x) for x ~ y; zero diagonal.
        self.kernel = sparse.csr_matrix(graph.adjacency.multiply(inv_deg[:, None]))
        self.kernel_t = sparse.csr_matrix(self.kernel.T)

    @property
    def pi_min(self) -> float:
        return float(self.degrees.min()) / self.total_degree

    @property
    def edge_measure(self) -> float:
        """q(x, y) for any directed edge: 1 / (2|E|)."""
        return 1.0 / self.total_degree

    @property
    def box(self):
        return self.graph.box

    def generator_dense(self) -> np.ndarray:
        q = self.kernel.toarray()
        np.fill_diagonal(q, -1.0)
        return q


def build_chain(graph: ClusterGraph) -> Chain:
    """Validate connectivity and wrap a graph as a walk chain."""
    ncomp, _ = csgraph.connected_components(graph.adjacency, directed=False)
    if ncomp != 1:
        raise DomainError("graph is not connected")
    return Chain(graph)


def tv_distance(mu: np.ndarray, nu: np.ndarray) -> float:
    """Total-variation distance, half the L1 distance between the vectors."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise DomainError(f"distribution supports differ: {mu.shape} vs {nu.shape}")
    return min(1.0, 0.5 * float(np.abs(mu - nu).sum()))


def _poisson_weights(t: float, tol: float) -> np.ndarray:
    """Poisson(t) pmf values w_0..w_K with tail mass below tol."""
    if t < 0:
        raise DomainError("time must be nonnegative")
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    if t == 0.0:
        return np.ones(1)
    k_hi = int(t + 12.0 * math.sqrt(t) + 40.0)
    while True:
        k = np.arange(k_hi + 1)
        logw = k * math.log(t) - t - gammaln(k + 1)
        w = np.exp(logw)
        if 1.0 - w.sum() < tol:
            break
        k_hi = int(k_hi * 1.5) + 10
    cum = np.cumsum(w)
    cut = int(np.searchsorted(cum, 1.0 - tol)) + 1
    return w[:cut]


def transient_distribution(chain: Chain, start: np.ndarray, t: float,
                           tol: float = DEFAULT_POISSON_TOL) -> np.ndarray:
    """Distribution of the walk at time t from a start distribution.

    Truncated Poisson mixture of kernel powers, renormalized to sum to one.
    ``t = 0`` returns the start distribution exactly.
    """
    start = np.asarray(start, dtype=float)
    if start.shape != (chain.m,):
        raise DomainError("start distribution has the wrong length")
    if t == 0.0:
        return start.copy()
    w = _poisson_weights(t, tol)
    vec = start.copy()
    out = w[0] * vec
    pt = chain.kernel_t
    for wk in w[1:]:
        vec = pt @ vec
        out += wk * vec
    return out / out.sum()


def _kernel_matrix(chain: Chain, t: float, tol: float) -> np.ndarray:
    """Dense matrix whose row x is the time-t distribution started at x."""
    if chain.m > MATRIX_HARD_CAP:
        raise CapacityError(
            f"kernel matrix for {chain.m} vertices exceeds the memory cap"
        )
    w = _poisson_weights(t, tol)
    # Work with the transpose so every step is a fast csr @ dense product.
    acc = np.eye(chain.m) * w[0]
    cur = np.eye(chain.m)
    pt = chain.kernel_t
    for wk in w[1:]:
        cur = pt @ cur
        acc += wk * cur
    mat = np.ascontiguousarray(acc.T)
    mat /= mat.sum(axis=1, keepdims=True)
    return mat


def _compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = a @ b
    out /= out.sum(axis=1, keepdims=True)
    return out


class _KernelCache:
    """Uniformized kernels at dyadically related times.

    Small times are swept directly; larger ones split as e^{tQ} =
    (e^{tQ/2})^2. Bisection repeatedly halves its step, so the dyadic family
    gets heavy reuse. Entries are evicted largest-time-first under a byte
    budget (halved times are the ones bisection asks for next).
    """

    def __init__(self, chain: Chain, tol: float, atom_max: float = 48.0,
                 byte_budget: float = 1.2e9):
        self.chain = chain
        self.tol = tol
        self.atom_max = atom_max
        self.max_entries = max(3, int(byte_budget / (8 * chain.m**2 + 1)))
        self.memo = {}

    def get(self, t: float) -> np.ndarray:
        if t in self.memo:
            return self.memo[t]
        if t <= self.atom_max:
            mat = _kernel_matrix(self.chain, t, self.tol)
        else:
            half = self.get(t / 2.0)
            mat = _compose(half, half)
        while len(self.memo) >= self.max_entries:
            del self.memo[max(self.memo)]
        self.memo[t] = mat
        return mat


def _stationarity_distance(mat: np.ndarray, pi: np.ndarray) -> float:
    return min(1.0, 0.5 * float(np.abs(mat - pi).sum(axis=1).max()))


def _pairwise_sup_distance(mat: np.ndarray, pi: np.ndarray,
                           chunk: int = 2048) -> float:
    """Exact sup over start pairs of the TV distance between rows.

    Small matrices get a direct scan. Otherwise two rigorous prunings close
    in on the maximizing pair: rows whose distance to stationarity r_i is too
    small to beat the incumbent (via TV_ij <= r_i + r_j) are dropped, and the
    survivors' pairwise chi-square-type distances (one Gram product of the
    1/sqrt(pi)-weighted deviations; TV_ij <= chi_ij / 2 by Cauchy-Schwarz
    with weights pi) order the remaining pairs so the scan stops as soon as
    the bound falls below the best exact value. Every discard is certified by
    a bound, so the result is the exact maximum.
    """
    m = mat.shape[0]
    dev = mat - pi
    if m <= 256:
        best = 0.0
        for i in range(m - 1):
            diff = 0.5 * np.abs(dev[i + 1:] - dev[i]).sum(axis=1).max()
            best = max(best, float(diff))
        return min(1.0, best)

    r = 0.5 * np.abs(dev).sum(axis=1)
    top = np.argsort(-r, kind="stable")[:2]
    best = 0.5 * float(np.abs(dev[top[0]] - dev[top[1]]).sum())
    rmax = float(r[top[0]])

    keep = np.nonzero(r > best - rmax - 1e-12)[0]
    if keep.size < 2:
        return min(1.0, best)
    w = dev[keep] / np.sqrt(pi)
    sq = (w * w).sum(axis=1)
    gram = w @ w.T
    iu, ju = np.triu_indices(keep.size, k=1)
    chi = np.sqrt(np.maximum(sq[iu] + sq[ju] - 2.0 * gram[iu, ju], 0.0))
    bound = 0.5 * chi * (1.0 + 1e-9) + 1e-12
    np.minimum(bound, r[keep][iu] + r[keep][ju], out=bound)

    alive = np.nonzero(bound > best)[0]
    if alive.size == 0:
        return min(1.0, best)
    order = alive[np.argsort(-bound[alive], kind="stable")]
    kept_dev = dev[keep]
    for lo in range(0, order.size, chunk):
        idx = order[lo:lo + chunk]
        if bound[idx[0]] <= best:
            break
        idx = idx[bound[idx] > best]
        if idx.size == 0:
            continue
        tv = 0.5 * np.abs(kept_dev[iu[idx]] - kept_dev[ju[idx]]).sum(axis=1)
        cand = float(tv.max())
        if cand > best:
            best = cand
    return min(1.0, best)


@dataclass
class MixingResult:
    """Bracketed total-variation mixing time.

    ``t_lo``/``t_hi`` bracket the first crossing of the e^{-1} threshold with
    d(t_lo) above and d(t_hi) at or below it; ``tau1`` is the bracket midpoint.
    """

    tau1: float
    t_lo: float
    t_hi: float
    d_lo: float
    d_hi: float
    mode: str
    resolution: float
    poisson_tol: float
    trace: list = field(default_factory=list)  # (t, d) pairs in time order

    def check_monotone(self, slack: float = 1e-8) -> None:
        for (t0, d0), (t1, d1) in zip(self.trace, self.trace[1:]):
            if t1 > t0 and d1 > d0 + slack:
                raise PercmixError(
                    f"distance trace is not non-increasing: d({t0})={d0} vs d({t1})={d1}"
                )


def _relaxation_time_dense(chain: Chain) -> float:
    """Relaxation time from a dense symmetric eigensolve (internal hint)."""
    inv_sqrt = 1.0 / np.sqrt(chain.degrees)
    s = chain.graph.adjacency.multiply(inv_sqrt[:, None]).multiply(inv_sqrt[None, :])
    s = s.toarray()
    np.fill_diagonal(s, -1.0)
    lam = np.linalg.eigvalsh(s)
    return float(-1.0 / lam[-2])


def mixing_time(chain: Chain, resolution: float | None = None, mode: str = "pairwise",
                tol: float = DEFAULT_POISSON_TOL, tau2_hint: float | None = None,
                t_max: float | None = None) -> MixingResult:
    """Mixing time of the walk by bisection on the monotone distance profile.

    ``pairwise`` mode uses the worst-case distance over start pairs (the
    defining profile); ``stationarity`` uses the worst single start against
    the stationary law, which brackets the pairwise profile within a factor
    of two. ``auto`` selects pairwise up to its memory cap.

    Probe kernels are assembled from uniformized atoms: small times are swept
    directly, larger ones squared up dyadically, and bisection steps multiply
    the lower-bracket kernel by uniformized increments. Since the mixing time
    is never below the relaxation time, the search starts its bracket at the
    relaxation time (supplied as ``tau2_hint`` or computed on the spot for
    mid-size chains) and only verifies that endpoint if bisection ever pins
    the crossing against it.
    """
    if mode == "auto":
        mode = "pairwise" if chain.m <= PAIRWISE_CAP else "stationarity"
    if mode == "pairwise" and chain.m > PAIRWISE_CAP:
        raise CapacityError(
            f"pairwise mode holds all {chain.m} transient vectors; cap is "
            f"{PAIRWISE_CAP} - use stationarity mode above it"
        )
    if mode not in ("pairwise", "stationarity"):
        raise DomainError(f"unknown mixing mode {mode!r}")
    # tau2_hint: None = compute one when worthwhile; <= 0 = forced doubling search
    if tau2_hint is None and 256 < chain.m <= PAIRWISE_CAP:
        tau2_hint = _relaxation_time_dense(chain)
    if tau2_hint is not None and tau2_hint <= 0.0:
        tau2_hint = None
    if resolution is None:
        resolution = max(1e-3, 1e-3 * tau2_hint) if tau2_hint else 1e-3
    if resolution <= 0:
        raise DomainError("resolution must be positive")
    if t_max is None:
        t_max = 100.0 * chain.m**2

    pi = chain.pi
    if mode == "pairwise":
        dist_of = lambda mat: _pairwise_sup_distance(mat, pi)
    else:
        dist_of = lambda mat: _stationarity_distance(mat, pi)

    thr = TV_THRESHOLD
    trace = {}

    def evaluate(mat, t):
        d = dist_of(mat)
        trace[t] = d
        return d

    cache = _KernelCache(chain, tol)

    if tau2_hint is not None:
        # crossing is at or above the relaxation time; verify lazily
        t_lo, d_lo = float(tau2_hint), None
        t_hi = d_hi = None
        t = 2.0 * t_lo
        while True:
            if t > t_max:
                raise NonConvergenceError(
                    f"distance still above e^-1 at t={t / 2:.3g} (cap {t_max:.3g})",
                    best=t / 2, residual=trace.get(t / 2),
                )
            d = evaluate(cache.get(t), t)
            if d <= thr:
                t_hi, d_hi = t, d
                break
            t_lo, d_lo = t, d
            t *= 2.0
        mat_lo = cache.get(t_lo)
    else:
        t0 = max(resolution / 2.0, 0.5)
        d0 = evaluate(cache.get(t0), t0)
        while d0 <= thr:
            if t0 <= resolution:
                # already mixed within one resolution step of zero
                d_zero = 1.0 if mode == "pairwise" else 1.0 - chain.pi_min
                result = MixingResult(t0 / 2, 0.0, t0, d_zero, d0, mode,
                                      resolution, tol, sorted(trace.items()))
                result.check_monotone()
                return result
            t0 /= 4.0
            d0 = evaluate(cache.get(t0), t0)
        t_lo, d_lo = t0, d0
        while True:
            t_next = 2.0 * t_lo
            if t_next > t_max:
                raise NonConvergenceError(
                    f"distance still {d_lo:.4f} above e^-1 at t={t_lo:.3g} "
                    f"(cap {t_max:.3g})",
                    best=t_lo, residual=d_lo,
                )
            d_next = evaluate(cache.get(t_next), t_next)
            if d_next <= thr:
                t_hi, d_hi = t_next, d_next
                break
            t_lo, d_lo = t_next, d_next
        mat_lo = cache.get(t_lo)

    # bisection: exact dyadic halving keeps increments in one kernel family
    width = t_hi - t_lo
    while width > resolution:
        delta = width / 2.0
        cand = _compose(mat_lo, cache.get(delta))
        t_mid = t_lo + delta
        d_mid = evaluate(cand, t_mid)
        if d_mid > thr:
            t_lo, mat_lo, d_lo = t_mid, cand, d_mid
        else:
            t_hi, d_hi = t_mid, d_mid
        width = delta

    if d_lo is None:
        # bisection never confirmed the lower endpoint: verify the hint
        d_lo = evaluate(cache.get(t_lo), t_lo)
        if d_lo <= thr:
            # hint overshot the true crossing; redo with a plain doubling search
            return mixing_time(chain, resolution=resolution, mode=mode, tol=tol,
                               tau2_hint=0.0, t_max=t_max)

    result = MixingResult(
        tau1=(t_lo + t_hi) / 2.0, t_lo=t_lo, t_hi=t_hi, d_lo=d_lo, d_hi=d_hi,
        mode=mode, resolution=resolution, poisson_tol=tol,
        trace=sorted(trace.items()),
    )
    result.check_monotone()
    return result


def distance_profile(chain: Chain, times, mode: str = "pairwise",
                     tol: float = DEFAULT_POISSON_TOL) -> list:
    """d(t) evaluated on an explicit time grid (diagnostic helper)."""
    pi = chain.pi
    out = []
    for t in times:
        mat = _kernel_matrix(chain, float(t), tol)
        if mode == "pairwise":
            out.append((float(t), _pairwise_sup_distance(mat, pi)))
        else:
            out.append((float(t), _stationarity_distance(mat, pi)))
    return out
