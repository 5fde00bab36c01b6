"""Natural dimension by pressure sums and by the graph-directed route; Moran covers and box counts."""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import BudgetExceeded, NoRoot, NotRegular, ValidationError, enumeration_budget
from .pwl_core import CPLIFS, FloatMaps, Interval, check_small, invariant_interval

log = logging.getLogger(__name__)


def similarity_dimension(ratios: Sequence[float]) -> float:
    """Root of sum |r_k|^s = 1; zero for a single map."""
    rs = np.abs(np.asarray([float(r) for r in ratios]))
    if len(rs) == 0 or np.any((rs <= 0) | (rs >= 1)):
        raise ValidationError("ratios must lie in (0, 1) in absolute value")
    if len(rs) == 1:
        return 0.0
    g = lambda s: float(np.sum(rs ** s)) - 1.0
    hi = 1.0
    while g(hi) > 0:
        hi *= 2
    return brentq(g, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def s_star(ratios: Sequence[float]) -> float:
    """Exponent with sum rho_k^s = 1 for per-map contraction ratios summing below one."""
    rs = [abs(float(r)) for r in ratios]
    if sum(rs) >= 1:
        raise NoRoot(f"ratios sum to {sum(rs)}, so no root lies in (0, 1)")
    return similarity_dimension(rs)


# --- pressure ------------------------------------------------------------------------------

@dataclass
class PressureEstimate:
    s: float
    per_depth: List[Tuple[int, float]]
    extrapolated: float


def cylinder_lengths(sys: CPLIFS, depth: int, I: Interval = None, normalize: bool = True,
                     budget=None) -> List[np.ndarray]:
    """Lengths of all cylinders at levels 1..depth (index 0 holds level 1)."""
    cap = enumeration_budget() if budget is None else budget
    if sys.m ** depth > cap:
        raise BudgetExceeded(f"{sys.m}^{depth} cylinders exceed the budget of {cap}")
    if I is None:
        I = invariant_interval(sys)
    fm = FloatMaps(sys)
    lo, hi = np.array([float(I.lo)]), np.array([float(I.hi)])
    scale = float(I.length) if normalize and I.length > 0 else 1.0
    out = []
    for _ in range(depth):
        parts = [fm.image(k, lo, hi) for k in range(sys.m)]
        lo = np.concatenate([p[0] for p in parts])
        hi = np.concatenate([p[1] for p in parts])
        out.append((hi - lo) / scale)
    return out


def _log_sum(lengths: np.ndarray, s: float) -> float:
    with np.errstate(divide="ignore"):
        return float(np.log(np.sum(lengths ** s)))


def pressure_direct(sys: CPLIFS, s: float, depth: int, I: Interval = None, budget=None,
                    lengths=None) -> PressureEstimate:
    """(1/n) log S_n(s) for n = 1..depth, plus the successive-difference estimate of the limit."""
    if depth < 2:
        raise ValidationError("depth must be at least 2")
    if lengths is None:
        lengths = cylinder_lengths(sys, depth, I, budget=budget)
    logs = [_log_sum(L, s) for L in lengths[:depth]]
    per_depth = [(n + 1, logs[n] / (n + 1)) for n in range(depth)]
    return PressureEstimate(s, per_depth, logs[depth - 1] - logs[depth - 2])


def direct_root(sys: CPLIFS, depth: int = 12, tol: float = 1e-10, I: Interval = None,
                budget=None) -> Tuple[float, List[str]]:
    """Bisection for the zero of the extrapolated pressure; returns the root and any notes."""
    if I is None:
        I = invariant_interval(sys)
    notes = []
    if I.length == 0:
        return 0.0, ["invariant interval is a point"]
    lengths = cylinder_lengths(sys, depth, I, budget=budget)
    P = lambda s: _log_sum(lengths[-1], s) - _log_sum(lengths[-2], s)
    lo, hi = 0.0, 1.0
    p_lo, p_hi = P(lo), P(hi)
    while p_hi > 0:
        lo, p_lo = hi, p_hi
        hi *= 2
        p_hi = P(hi)
        if hi > 1e3:
            raise ValidationError("pressure does not become negative")
    if p_lo < 0:
        return 0.0, ["pressure already negative at s=0"]
    monotone = True
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        p_mid = P(mid)
        if not (p_lo >= p_mid >= p_hi):
            monotone = False
        if p_mid > 0:
            lo, p_lo = mid, p_mid
        else:
            hi, p_hi = mid, p_mid
    if not monotone:
        notes.append("extrapolated pressure was not monotone during bisection")
        log.warning(notes[-1])
    return 0.5 * (lo + hi), notes


# --- natural dimension ---------------------------------------------------------------------

@dataclass
class DimensionReport:
    sF: float
    method: str
    sF_direct: Optional[float] = None
    alpha: Optional[float] = None
    order: Optional[int] = None
    box_estimate: Optional[float] = None
    notes: List[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"sF": self.sF, "method": self.method, "sF_direct": self.sF_direct,
                "alpha": self.alpha, "order": self.order, "boxEstimate": self.box_estimate,
                "notes": list(self.notes)}


def natural_dimension(sys, method: str = "both", depth: int = 12, tol: float = 1e-10,
                      max_order: int = None, budget=None) -> DimensionReport:
    """Natural dimension of a CPLIFS (or natural exponent of a GDIFS).

    ``method`` is ``direct`` (root of the pressure estimated from cylinder sums),
    ``spectral`` (natural exponent of the associated graph-directed system, needs
    regularity) or ``both``.
    """
    from .gdifs import GDIFS, associate_gdifs, natural_exponent
    from .regularity import regularity_order

    if isinstance(sys, GDIFS):
        a = natural_exponent(sys)
        return DimensionReport(a, "spectral", alpha=a)
    if method not in ("direct", "spectral", "both"):
        raise ValidationError(f"unknown method {method!r}")
    report = DimensionReport(float("nan"), method)
    if not check_small(sys).small:
        report.notes.append("system is not small")
    I = invariant_interval(sys)
    if method in ("direct", "both"):
        report.sF_direct, notes = direct_root(sys, depth, tol, I, budget)
        report.notes.extend(notes)
        report.sF = report.sF_direct
    if method in ("spectral", "both"):
        reg = regularity_order(sys, max_order=max_order, require_small=False, budget=budget)
        if not reg.regular:
            if method == "spectral":
                raise NotRegular(f"spectral method needs a regular system ({reg.status})")
            report.notes.append(f"spectral method skipped: system is {reg.status}")
        else:
            g, _ = associate_gdifs(sys, reg.order, budget=budget)
            report.order = reg.order
            report.alpha = natural_exponent(g)
            report.sF = report.alpha
    return report


# --- Moran covers --------------------------------------------------------------------------

@dataclass
class MoranCover:
    r: float
    words: List[Tuple[int, ...]]

    @property
    def count(self) -> int:
        return len(self.words)


def moran_cover(ratios: Sequence, r, budget=None) -> MoranCover:
    """Words w (1-based letters) with rho_w <= r < rho of w without its last letter."""
    cap = enumeration_budget() if budget is None else budget
    if not 0 < r < 1:
        raise ValidationError("r must lie in (0, 1)")
    ratios = [abs(x) for x in ratios]
    if not ratios or any(not 0 < x < 1 for x in ratios):
        raise ValidationError("ratios must lie in (0, 1)")
    m = len(ratios)
    words = []
    stack = [((k + 1,), ratios[k]) for k in reversed(range(m))]
    while stack:
        w, rho = stack.pop()
        if rho <= r:
            words.append(w)
            if len(words) > cap:
                raise BudgetExceeded(f"Moran cover exceeds the budget of {cap} words")
        else:
            stack.extend((w + (k + 1,), rho * ratios[k]) for k in reversed(range(m)))
    return MoranCover(r, words)


def cover_bounds(ratios: Sequence, r) -> Tuple[float, float]:
    """Lower and upper bounds on the size of a Moran cover at scale r."""
    s = s_star(ratios)
    rho_min = min(abs(float(x)) for x in ratios)
    r = float(r)
    return r ** -s, 1.0 / (rho_min ** s * r ** s)


def is_prefix_free(words) -> bool:
    ws = sorted(words)
    return all(b[:len(a)] != a for a, b in zip(ws, ws[1:]))


def is_exhaustive(words, m: int) -> bool:
    """A prefix-free set is exhaustive exactly when sum of m^-|w| equals one."""
    depth = max(len(w) for w in words)
    return sum(m ** (depth - len(w)) for w in words) == m ** depth


# --- box counting --------------------------------------------------------------------------

def cover_cylinders(sys: CPLIFS, words, I: Interval) -> Tuple[np.ndarray, np.ndarray]:
    """Float cylinders f_w(I) for a list of words, vectorised per word length."""
    fm = FloatMaps(sys)
    lo_out, hi_out = [], []
    by_len = {}
    for w in words:
        by_len.setdefault(len(w), []).append(w)
    for n, group in sorted(by_len.items()):
        W = np.array(group, dtype=np.int64) - 1
        lo = np.full(len(group), float(I.lo))
        hi = np.full(len(group), float(I.hi))
        for p in range(n - 1, -1, -1):
            for k in range(sys.m):
                mask = W[:, p] == k
                if mask.any():
                    lo[mask], hi[mask] = fm.image(k, lo[mask], hi[mask])
        lo_out.append(lo)
        hi_out.append(hi)
    return np.concatenate(lo_out), np.concatenate(hi_out)


def mesh_count(lo: np.ndarray, hi: np.ndarray, r: float, slack: float = 1e-9) -> int:
    """Number of half-open cells [j r, (j+1) r) meeting the union of [lo, hi]."""
    a, b = lo / r, hi / r
    first = np.floor(a + slack)
    last = np.ceil(b - slack) - 1
    last = np.maximum(last, first)
    order = np.argsort(first, kind="stable")
    first, last = first[order], last[order]
    count, cur_lo, cur_hi = 0, None, None
    for f, l in zip(first, last):
        if cur_hi is None or f > cur_hi:
            if cur_hi is not None:
                count += int(cur_hi - cur_lo + 1)
            cur_lo, cur_hi = f, l
        else:
            cur_hi = max(cur_hi, l)
    if cur_hi is not None:
        count += int(cur_hi - cur_lo + 1)
    return count


@dataclass
class BoxEstimate:
    estimate: float
    residual: float
    scales: List[float]
    counts: List[int]


def box_dimension_estimate(sys: CPLIFS, r_grid: Sequence[float], budget=None) -> BoxEstimate:
    """Least-squares slope of log N(r) against log(1/r) over the given scales."""
    r_grid = [float(r) for r in r_grid]
    if len(r_grid) < 4:
        raise ValidationError("box counting needs at least 4 scales")
    if any(b >= a for a, b in zip(r_grid, r_grid[1:])) or r_grid[-1] <= 0:
        raise ValidationError("scales must be positive and strictly decreasing")
    I = invariant_interval(sys)
    length = float(I.length)
    ratios = [float(x) for x in sys.rho_per_map]
    counts = []
    for r in r_grid:
        if length == 0:
            counts.append(1)
            continue
        rel = r / length
        if rel >= 1:
            lo, hi = np.array([float(I.lo)]), np.array([float(I.hi)])
        else:
            cover = moran_cover(ratios, rel, budget=budget)
            lo, hi = cover_cylinders(sys, cover.words, I)
        counts.append(mesh_count(lo, hi, r))
    x = np.log(1 / np.array(r_grid))
    y = np.log(np.array(counts, dtype=float))
    coeff, res, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(math.sqrt(res[0] / len(x))) if len(res) else 0.0
    return BoxEstimate(float(coeff[0]), residual, r_grid, counts)


# --- sampling ------------------------------------------------------------------------------

def sample_attractor(sys: CPLIFS, n: int, seed: int = 0, burnin: int = 64) -> np.ndarray:
    """Chaos-game points f_{w_1} o ... o f_{w_burnin}(lo of I) for uniform random words."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = np.random.default_rng(seed)
    I = invariant_interval(sys)
    fm = FloatMaps(sys)
    W = rng.integers(0, sys.m, size=(burnin, n))
    x = np.full(n, float(I.lo))
    for step in range(burnin - 1, -1, -1):
        for k in range(sys.m):
            mask = W[step] == k
            if mask.any():
                x[mask] = fm.eval(k, x[mask])
    return x


def _nearest(sorted_pts: np.ndarray, pts: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(sorted_pts, pts)
    left = sorted_pts[np.clip(idx - 1, 0, len(sorted_pts) - 1)]
    right = sorted_pts[np.clip(idx, 0, len(sorted_pts) - 1)]
    return np.minimum(np.abs(pts - left), np.abs(pts - right))


def hausdorff_distance(A, B) -> float:
    A, B = np.sort(np.asarray(A, dtype=float)), np.sort(np.asarray(B, dtype=float))
    return float(max(_nearest(B, A).max(), _nearest(A, B).max()))


def nearest_neighbor_gap(A) -> float:
    """Largest distance from a sample point to its nearest other sample point."""
    A = np.sort(np.asarray(A, dtype=float))
    if len(A) < 2:
        return 0.0
    d = np.diff(A)
    nn = np.minimum(np.concatenate([[np.inf], d]), np.concatenate([d, [np.inf]]))
    return float(nn.max())
