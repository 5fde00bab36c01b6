"""Graph-directed self-similar systems: pressure matrices, natural exponent, Markov measure.

Convention: an edge e from v to u carries a similarity F_e and the attractor
family satisfies K_v = union over edges e leaving v of F_e(K_u).
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (BadRatio, BudgetExceeded, DimensionMismatch, NonConvergence, NotRegular,
                     NotStronglyConnected, Reducible, ValidationError, enumeration_budget)
from .pwl_core import REL_SLACK, CPLIFS, FloatMaps, invariant_interval, level_cylinders, word_from_index

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GDIFS:
    """Directed multigraph on vertices 0..q-1 with one similarity x -> r x + t per edge."""

    q: int
    src: np.ndarray
    dst: np.ndarray
    r: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        src = np.asarray(self.src, dtype=np.int64).ravel()
        dst = np.asarray(self.dst, dtype=np.int64).ravel()
        r = np.asarray(self.r, dtype=float).ravel()
        t = np.asarray(self.t, dtype=float).ravel()
        if not (len(src) == len(dst) == len(r) == len(t)):
            raise DimensionMismatch("edge arrays must have equal length")
        if self.q < 1:
            raise ValidationError("a GDIFS needs at least one vertex")
        if len(src) and (src.min() < 0 or dst.min() < 0 or src.max() >= self.q or dst.max() >= self.q):
            raise ValidationError(f"edge endpoint outside 0..{self.q - 1}")
        for name, arr in (("src", src), ("dst", dst), ("r", r), ("t", t)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_edges(cls, q: int, edges, validate: bool = True) -> "GDIFS":
        """Build from ``(source, target, r, t)`` tuples with 0-based vertices."""
        edges = list(edges)
        arr = np.array([[float(x) for x in e] for e in edges]).reshape(len(edges), 4)
        g = cls(q, arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2], arr[:, 3])
        if validate:
            validate_gdifs(g)
        return g

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def edges(self):
        for e in range(self.n_edges):
            yield int(self.src[e]), int(self.dst[e]), float(self.r[e]), float(self.t[e])

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.q)

    @property
    def rho_max(self) -> float:
        return float(np.abs(self.r).max())

    def adjacency_counts(self) -> np.ndarray:
        return pressure_matrix(self, 0.0)


def validate_gdifs(g: GDIFS) -> bool:
    """Raise unless every ratio lies in (-1, 1) minus 0 and the graph is strongly connected."""
    if g.n_edges == 0:
        raise NotStronglyConnected("graph has no edges")
    bad = np.nonzero((g.r == 0) | (np.abs(g.r) >= 1) | ~np.isfinite(g.r))[0]
    if len(bad):
        e = int(bad[0])
        raise BadRatio(f"edge {e} has ratio {g.r[e]}, outside (-1, 1) minus 0")
    if not np.all(np.isfinite(g.t)):
        raise ValidationError("edge translations must be finite")
    if not _strongly_connected(g.q, g.src, g.dst):
        raise NotStronglyConnected("graph is not strongly connected")
    return True


def _strongly_connected(q, src, dst) -> bool:
    if q == 1:
        return len(src) > 0
    A = csr_matrix((np.ones(len(src)), (src, dst)), shape=(q, q))
    n, _ = connected_components(A, directed=True, connection="strong")
    return n == 1


# --- associated system ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PsiTable:
    """Linearity-piece words attached to the edges of an associated GDIFS.

    ``pieces[v, u, p]`` is the 1-based piece index of map ``vertices[v][p]`` used
    along edge (v, u); the corresponding alphabet letter is ``(vertices[v][p], pieces[v, u, p])``.
    """

    N: int
    m: int
    vertices: Tuple[Tuple[int, ...], ...]
    pieces: np.ndarray
    ratio: np.ndarray

    def word(self, v: int, u: int) -> Tuple[Tuple[int, int], ...]:
        return tuple((k, int(i)) for k, i in zip(self.vertices[v], self.pieces[v, u]))


def associate_gdifs(sys: CPLIFS, N: int, budget=None) -> Tuple[GDIFS, PsiTable]:
    """Full-graph GDIFS on level-N words: edge (v, u) carries f_v restricted to I_u."""
    if N < 1:
        raise ValidationError("N must be at least 1")
    cap = enumeration_budget() if budget is None else budget
    m = sys.m
    q = m ** N
    if q * q > cap:
        raise BudgetExceeded(f"associated graph has {q * q} edges, budget is {cap}")
    I = invariant_interval(sys)
    lo_u, hi_u = level_cylinders(sys, N, I, budget=cap)
    fm = FloatMaps(sys)
    vertices = tuple(word_from_index(v, N, m) for v in range(q))
    pieces = np.zeros((q, q, N), dtype=np.int16)
    R = np.empty((q, q))
    T = np.empty((q, q))
    for v, word in enumerate(vertices):
        lo, hi = lo_u.copy(), hi_u.copy()
        r_acc, t_acc = np.ones(q), np.zeros(q)
        for p in range(N - 1, -1, -1):
            k = word[p] - 1
            i_lo = np.searchsorted(fm.bps[k], lo, side="right")
            slack = REL_SLACK * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
            hit = np.zeros(q, dtype=bool)
            for b in fm.bps[k]:
                hit |= (lo - slack <= b) & (b <= hi + slack)
            if np.any(hit):
                u = int(np.nonzero(hit)[0][0])
                raise NotRegular(f"image of I_{vertices[u]} under the tail of {word} meets a "
                                 f"breakpoint of map {k + 1}; system is not regular of order {N}")
            slope, trans = fm.slopes[k][i_lo], fm.trans[k][i_lo]
            pieces[v, :, p] = i_lo + 1
            r_acc, t_acc = slope * r_acc, slope * t_acc + trans
            a, b = slope * lo + trans, slope * hi + trans
            lo, hi = np.minimum(a, b), np.maximum(a, b)
        R[v], T[v] = r_acc, t_acc
    src = np.repeat(np.arange(q), q)
    dst = np.tile(np.arange(q), q)
    g = GDIFS(q, src, dst, R.ravel(), T.ravel())
    return g, PsiTable(N, m, vertices, pieces, R)


# --- spectral quantities -------------------------------------------------------------------

def pressure_matrix(g: GDIFS, s: float) -> np.ndarray:
    """C^(s): entry (i, j) sums |r_e|^s over edges from i to j."""
    if s < 0:
        raise ValidationError("s must be non-negative")
    w = np.abs(g.r) ** s
    flat = np.bincount(g.src * g.q + g.dst, weights=w, minlength=g.q * g.q)
    return flat.reshape(g.q, g.q)


def is_irreducible(M: np.ndarray) -> bool:
    M = np.asarray(M)
    src, dst = np.nonzero(M > 0)
    return _strongly_connected(M.shape[0], src, dst)


def spectral_radius(M, tol: float = 1e-14, max_iter: int = 100_000, check: bool = True,
                    x0: Optional[np.ndarray] = None) -> Tuple[float, np.ndarray]:
    """Perron root and positive right eigenvector (sum 1) of an irreducible non-negative matrix.

    Power iteration on M + I, which is primitive whenever M is irreducible.  The
    Collatz-Wielandt quotients bracket the root; iteration stops once the
    bracket is narrower than ``tol`` relative to the root.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch("spectral_radius needs a square matrix")
    if np.any(M < 0):
        raise ValidationError("matrix has negative entries")
    if check and not is_irreducible(M):
        raise Reducible("matrix is reducible")
    x = _perron_guess(M) if x0 is None else np.asarray(x0, dtype=float).copy()
    x /= x.sum()
    best_gap, stall = math.inf, 0
    for _ in range(max_iter):
        y = M @ x
        quot = y / x
        lo, hi = quot.min(), quot.max()
        lam = 0.5 * (lo + hi)
        gap = hi - lo
        x = (y + x)
        x /= x.sum()
        if gap <= tol * max(lam, 1e-300):
            return float(lam), x
        if gap < best_gap * 0.999:
            best_gap, stall = gap, 0
        else:
            stall += 1
            if stall > 200:
                break
    if best_gap <= 1e-9 * max(lam, 1e-300):
        log.warning("power iteration stalled with relative bracket %.3g", best_gap / lam)
        return float(lam), x
    raise NonConvergence(f"power iteration did not converge (bracket {best_gap:.3g})")


def _perron_guess(M):
    n = M.shape[0]
    if n > 512:
        return np.ones(n)
    w, V = np.linalg.eig(M)
    x = np.abs(np.real(V[:, int(np.argmax(np.real(w)))]))
    if not np.all(np.isfinite(x)) or x.sum() == 0:
        return np.ones(n)
    return x + 1e-3 * x.max() + 1e-300


def natural_exponent(g: GDIFS, tol: float = 1e-13) -> float:
    """The unique s with spectral radius of C^(s) equal to 1, by bisection."""
    rho0, _ = spectral_radius(pressure_matrix(g, 0.0))
    if rho0 <= 1 + 1e-12:
        log.warning("spectral radius at s=0 is 1 (single cycle): natural exponent is 0, degenerate")
        return 0.0
    lo, hi = 0.0, 1.0
    while spectral_radius(pressure_matrix(g, hi))[0] >= 1:
        lo, hi = hi, 2 * hi
        if hi > 1e6:
            raise NonConvergence("could not bracket the natural exponent")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if spectral_radius(pressure_matrix(g, mid))[0] > 1:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pressure_curve(g: GDIFS, grid) -> np.ndarray:
    return np.array([spectral_radius(pressure_matrix(g, s))[0] for s in grid])


# --- Markov measure ------------------------------------------------------------------------

@dataclass
class MarkovMeasure:
    alpha: float
    lam: float
    u: np.ndarray
    v: np.ndarray
    P: np.ndarray
    p: np.ndarray
    edge_prob: np.ndarray

    def chain_measure(self, g: GDIFS, path) -> float:
        """Measure of the cylinder of an edge path, by direct product of probabilities."""
        path = list(path)
        if not path:
            return 1.0
        value = self.p[g.src[path[0]]]
        for a, b in zip(path, path[1:]):
            if g.dst[a] != g.src[b]:
                raise ValidationError(f"edges {a} and {b} are not consecutive")
        for e in path:
            value *= self.edge_prob[e]
        return float(value)


def markov_measure(g: GDIFS, alpha: float = None) -> MarkovMeasure:
    """Markov measure built from the Perron eigenvectors of C^(alpha).

    Probabilities live on edges, P_e = |r_e|^alpha v_{t(e)} / (lam v_{s(e)}), so
    parallel edges are kept apart; ``P`` sums them per vertex pair.
    """
    if alpha is None:
        alpha = natural_exponent(g)
    if alpha <= 0:
        raise ValidationError("Markov construction needs a positive natural exponent")
    C = pressure_matrix(g, alpha)
    if not is_irreducible(C):
        raise Reducible("C^(alpha) is reducible")
    lam, v = spectral_radius(C, check=False)
    lam_u, u = spectral_radius(C.T, check=False)
    v = v / v.sum()
    u = u / np.dot(u, v)
    w = np.abs(g.r) ** alpha
    edge_prob = w * v[g.dst] / (lam * v[g.src])
    P = np.bincount(g.src * g.q + g.dst, weights=edge_prob, minlength=g.q * g.q).reshape(g.q, g.q)
    # renormalise away the last ulp of drift so rows sum to 1
    rows = np.bincount(g.src, weights=edge_prob, minlength=g.q)
    edge_prob = edge_prob / rows[g.src]
    P = P / rows[:, None]
    p = u * v
    p = p / p.sum()
    return MarkovMeasure(alpha, 0.5 * (lam + lam_u), u, v, P, p, edge_prob)


def entropy_lyapunov(mm: MarkovMeasure, g: GDIFS) -> Tuple[float, float]:
    """Entropy h and Lyapunov exponent chi of the edge Markov measure."""
    flow = mm.p[g.src] * mm.edge_prob
    h = -float(np.sum(flow * np.log(mm.edge_prob)))
    chi = -float(np.sum(flow * np.log(np.abs(g.r))))
    return h, chi


def _edge_sampler(g: GDIFS, weights=None):
    order = np.argsort(g.src, kind="stable")
    deg = np.bincount(g.src, minlength=g.q)
    start = np.concatenate([[0], np.cumsum(deg)[:-1]])
    cum = None
    if weights is not None:
        w = np.asarray(weights)[order]
        cum = [np.cumsum(w[start[v]:start[v] + deg[v]]) for v in range(g.q)]
    return order, deg, start, cum


def monte_carlo_entropy(mm: MarkovMeasure, g: GDIFS, n: int = 10_000, seed: int = 0,
                        batches: int = 50) -> Tuple[float, float]:
    """Ergodic average of -log P_e along one sampled chain, with a batch-means standard error."""
    rng = np.random.default_rng(seed)
    order, deg, start, cum = _edge_sampler(g, mm.edge_prob)
    vertex = int(rng.choice(g.q, p=mm.p))
    U = rng.random(n)
    terms = np.empty(n)
    for k in range(n):
        c = cum[vertex]
        j = min(int(np.searchsorted(c, U[k] * c[-1], side="right")), len(c) - 1)
        e = order[start[vertex] + j]
        terms[k] = -math.log(mm.edge_prob[e])
        vertex = int(g.dst[e])
    est = float(terms.mean())
    size = n // batches
    means = terms[: size * batches].reshape(batches, size).mean(axis=1)
    se = float(means.std(ddof=1) / math.sqrt(batches))
    return est, max(se, 1e-12)


# --- sandwich bound ------------------------------------------------------------------------

def sandwich_constants(mm: MarkovMeasure, g: GDIFS = None) -> Tuple[float, float]:
    """Bounds for cylinder measure over |ratio|^alpha.

    An edge path from a to b has ratio exactly u_a v_b; a letter-word cylinder of an
    associated system sums such terms over the free final vertex, hence at most u_a.
    """
    return float(mm.u.min() * mm.v.min()), float(mm.u.max())


def edge_paths(g: GDIFS, length: int):
    """All edge paths of the given length, as tuples of edge indices."""
    out_edges = [np.nonzero(g.src == v)[0].tolist() for v in range(g.q)]
    paths = [(e,) for e in range(g.n_edges)]
    for _ in range(length - 1):
        paths = [p + (e,) for p in paths for e in out_edges[g.dst[p[-1]]]]
    return paths


@dataclass
class SandwichCheck:
    c1: float
    c2: float
    min_ratio: float
    max_ratio: float
    checked: int
    ok: bool


def sandwich_check(mm: MarkovMeasure, g: GDIFS, depth: int = 6, psi: PsiTable = None,
                   budget=None) -> SandwichCheck:
    """Enumerate every edge path up to ``depth`` and compare measure with |ratio|^alpha.

    With a :class:`PsiTable` the cylinders are letter words: paths sharing the
    same sequence of piece words are pooled before comparing.
    """
    cap = enumeration_budget() if budget is None else budget
    c1, c2 = sandwich_constants(mm, g)
    lo, hi, count = math.inf, -math.inf, 0
    for n in range(1, depth + 1):
        if g.n_edges * g.out_degree().max() ** (n - 1) > cap:
            raise BudgetExceeded(f"edge paths of length {n} exceed the budget {cap}")
        pooled = {}
        for path in edge_paths(g, n):
            mu = mm.chain_measure(g, path)
            ratio = float(np.prod(np.abs(g.r[list(path)])))
            if psi is None:
                key = path
            else:
                key = tuple(psi.word(int(g.src[e]), int(g.dst[e])) for e in path)
            acc = pooled.setdefault(key, [0.0, ratio])
            acc[0] += mu
        for mu, ratio in pooled.values():
            value = mu / ratio ** mm.alpha
            lo, hi = min(lo, value), max(hi, value)
            count += 1
    slack = 1e-9
    ok = c1 * (1 - slack) <= lo and hi <= c2 * (1 + slack)
    return SandwichCheck(c1, c2, lo, hi, count, ok)


# --- sampling ------------------------------------------------------------------------------

def sample_gdifs_attractor(g: GDIFS, n: int, seed: int = 0, burnin: int = 64,
                           x0: float = 0.0) -> np.ndarray:
    """Points F_{e_1} o ... o F_{e_burnin}(x0) along uniformly random edge paths."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = np.random.default_rng(seed)
    order, deg, start, _ = _edge_sampler(g)
    vertex = rng.integers(0, g.q, size=n)
    path = np.empty((burnin, n), dtype=np.int64)
    for k in range(burnin):
        j = np.floor(rng.random(n) * deg[vertex]).astype(np.int64)
        e = order[start[vertex] + j]
        path[k] = e
        vertex = g.dst[e]
    x = np.full(n, float(x0))
    for k in range(burnin - 1, -1, -1):
        e = path[k]
        x = g.r[e] * x + g.t[e]
    return x


def gdifs_summary(g: GDIFS, depth: int = 6, seed: int = 0, mc_steps: int = 10_000,
                  budget=None) -> dict:
    """Natural exponent, Markov measure, entropy and the sandwich check in one dictionary."""
    alpha = natural_exponent(g)
    out = {"vertexCount": g.q, "edgeCount": g.n_edges, "alpha": alpha}
    if alpha <= 0:
        out["degenerate"] = True
        return out
    mm = markov_measure(g, alpha)
    h, chi = entropy_lyapunov(mm, g)
    est, se = monte_carlo_entropy(mm, g, mc_steps, seed)
    out.update(P=mm.P.tolist(), p=mm.p.tolist(), u=mm.u.tolist(), v=mm.v.tolist(),
               h=h, chi=chi, h_over_chi=h / chi, mc_entropy=est, mc_se=se)
    try:
        sc = sandwich_check(mm, g, depth, budget=budget)
        out["sandwich"] = {"c1": sc.c1, "c2": sc.c2, "min": sc.min_ratio, "max": sc.max_ratio,
                           "checked": sc.checked, "ok": sc.ok, "depth": depth}
    except BudgetExceeded as exc:
        out["sandwich"] = {"skipped": str(exc)}
    return out
