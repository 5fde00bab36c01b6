"""Self-similar systems generated by a CPLIFS, the translation correspondence, and ESC scans."""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import List, Optional, Tuple

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch, ValidationError, enumeration_budget
from .pwl_core import CPLIFS, PiecewiseLinearMap

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimilarityMap:
    r: float
    t: float

    def __post_init__(self):
        if self.r == 0 or not -1 < self.r < 1:
            raise ValidationError(f"similarity ratio {self.r} not in (-1, 1) minus {{0}}")

    def __call__(self, x):
        return self.r * x + self.t

    def compose(self, other: "SimilarityMap") -> "SimilarityMap":
        """self o other."""
        return SimilarityMap(self.r * other.r, self.r * other.t + self.t)

    def fixed_point(self):
        return self.t / (1 - self.r)


@dataclass(frozen=True)
class SelfSimilarIFS:
    maps: Tuple[SimilarityMap, ...]
    labels: Optional[Tuple[Tuple[int, int], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if not self.maps:
            raise ValidationError("a self-similar IFS needs at least one map")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(tuple(l) for l in self.labels))
            if len(self.labels) != len(self.maps):
                raise DimensionMismatch("one label per map required")

    def __len__(self):
        return len(self.maps)

    @property
    def ratios(self):
        return tuple(s.r for s in self.maps)

    @property
    def translations(self):
        return tuple(s.t for s in self.maps)

    def similarity_dimension(self):
        from .dimension import similarity_dimension

        return similarity_dimension([abs(float(r)) for r in self.ratios])


def generate_selfsimilar(sys: CPLIFS) -> SelfSimilarIFS:
    """The similarities S_{k,i} that agree with f_k on its i-th interval of linearity."""
    maps, labels = [], []
    for k, f in enumerate(sys):
        for i, (r, t) in enumerate(zip(f.slopes, f.translations)):
            maps.append(SimilarityMap(r, t))
            labels.append((k + 1, i + 1))
    return SelfSimilarIFS(tuple(maps), tuple(labels))


def phi_rho(breakpoints, tau, rho, type_vector) -> Tuple:
    """Translation vector of the generated self-similar IFS for parameters (b, tau) at fixed rho."""
    type_vector = tuple(type_vector)
    L, m = sum(type_vector), len(type_vector)
    if len(breakpoints) != L:
        raise DimensionMismatch(f"expected {L} breakpoints for type {type_vector}, got {len(breakpoints)}")
    if len(tau) != m:
        raise DimensionMismatch(f"expected {m} translations, got {len(tau)}")
    if len(rho) != L + m:
        raise DimensionMismatch(f"expected {L + m} slopes, got {len(rho)}")
    sys = CPLIFS.from_params(breakpoints, tau, rho, type_vector)
    return tuple(generate_selfsimilar(sys).translations)


def phi_rho_inverse(translations, rho, type_vector):
    """Recover (b, tau) from the generated translations; inverse of :func:`phi_rho`."""
    type_vector = tuple(type_vector)
    L, m = sum(type_vector), len(type_vector)
    if len(translations) != L + m or len(rho) != L + m:
        raise DimensionMismatch(f"expected {L + m} translations and slopes for type {type_vector}")
    bps, taus, p = [], [], 0
    for l in type_vector:
        t = translations[p:p + l + 1]
        r = rho[p:p + l + 1]
        b_k = [(t[i + 1] - t[i]) / (r[i] - r[i + 1]) for i in range(l)]
        f = PiecewiseLinearMap(tuple(b_k), tuple(r), 0 * t[0])
        i0 = f.piece_index(0)
        taus.append(t[i0])
        bps.extend(b_k)
        p += l + 1
    return tuple(bps), tuple(taus)


@dataclass
class ESCReport:
    per_level: List[Tuple[int, object, int]] = field(default_factory=list)
    zero_witnesses: List[Tuple[int, Tuple[int, ...], Tuple[int, ...]]] = field(default_factory=list)
    fitted_c: Optional[float] = None
    skipped_levels: List[int] = field(default_factory=list)
    mode: str = "float"

    def min_distance(self, n):
        for level, d, _ in self.per_level:
            if level == n:
                return d
        raise KeyError(n)


def _compose_level_exact(ss: SelfSimilarIFS, n):
    # f_w = f_{w1} o ... o f_{wn}: r_w = prod r, t_w = sum_k t_{w_k} r_{w|k-1}
    out = []
    for word in product(range(len(ss)), repeat=n):
        r, t = 1, 0
        for k in word:
            s = ss.maps[k]
            t = t + r * s.t
            r = r * s.r
        out.append((word, r, t))
    return out


def _level_float(ratios, trans, n):
    r = np.ones(1)
    t = np.zeros(1)
    for _ in range(n):
        # append a letter on the right: t_{w k} = t_w + r_w t_k
        r_new = (r[:, None] * ratios[None, :]).ravel()
        t_new = (t[:, None] + r[:, None] * trans[None, :]).ravel()
        r, t = r_new, t_new
    return r, t


def _word(index, n, M):
    letters = []
    for _ in range(n):
        index, rem = divmod(index, M)
        letters.append(rem + 1)
    return tuple(reversed(letters))


def esc_scan(ss: SelfSimilarIFS, max_level: int, mode: str = "float", budget=None,
             max_witnesses: int = 10) -> ESCReport:
    """Minimum translation distance between distinct equal-ratio compositions, per level."""
    if max_level < 1:
        raise ValidationError("max_level must be at least 1")
    if mode not in ("float", "rational"):
        raise ValidationError(f"unknown mode {mode!r}")
    cap = enumeration_budget() if budget is None else budget
    M = len(ss)
    report = ESCReport(mode=mode)
    if mode == "rational":
        exact = SelfSimilarIFS(tuple(SimilarityMap(Fraction(s.r), Fraction(s.t)) for s in ss.maps))
    for n in range(1, max_level + 1):
        if M ** n > cap:
            log.warning("ESC level %d skipped: %d words exceed budget %d", n, M ** n, cap)
            report.skipped_levels.append(n)
            continue
        if mode == "rational":
            dmin, pairs, witnesses = _scan_level_exact(exact, n, max_witnesses)
        else:
            dmin, pairs, witnesses = _scan_level_float(ss, n, max_witnesses)
        report.per_level.append((n, dmin, pairs))
        report.zero_witnesses.extend(witnesses)
    if not report.per_level:
        raise BudgetExceeded(f"no ESC level fits in the budget of {cap} words")
    report.fitted_c = _fit_c(report.per_level)
    return report


def _scan_level_exact(ss, n, max_witnesses):
    buckets = defaultdict(list)
    for word, r, t in _compose_level_exact(ss, n):
        buckets[r].append((t, word))
    dmin, pairs, witnesses = None, 0, []
    for items in buckets.values():
        if len(items) < 2:
            continue
        pairs += len(items) * (len(items) - 1) // 2
        items.sort()
        for (t1, w1), (t2, w2) in zip(items, items[1:]):
            d = t2 - t1
            if dmin is None or d < dmin:
                dmin = d
            if d == 0 and len(witnesses) < max_witnesses:
                witnesses.append((n, tuple(k + 1 for k in w1), tuple(k + 1 for k in w2)))
    return (float("inf") if dmin is None else dmin), pairs, witnesses


def _scan_level_float(ss, n, max_witnesses, rel_tol=1e-12):
    M = len(ss)
    ratios = np.array([float(r) for r in ss.ratios])
    trans = np.array([float(t) for t in ss.translations])
    r, t = _level_float(ratios, trans, n)
    order = np.lexsort((t, r))
    r, t = r[order], t[order]
    # consecutive ratios within rel_tol share a bucket
    new_bucket = np.empty(len(r), dtype=bool)
    new_bucket[0] = True
    new_bucket[1:] = np.abs(np.diff(r)) > rel_tol * np.maximum(np.abs(r[1:]), np.abs(r[:-1]))
    bucket_id = np.cumsum(new_bucket)
    sizes = np.bincount(bucket_id)
    pairs = int(np.sum(sizes * (sizes - 1) // 2))
    if pairs == 0:
        return float("inf"), 0, []
    # within a float-merged bucket the t values are no longer sorted globally; resort
    order2 = np.lexsort((t, bucket_id))
    t_sorted, b_sorted, idx_sorted = t[order2], bucket_id[order2], order[order2]
    same = b_sorted[1:] == b_sorted[:-1]
    gaps = np.diff(t_sorted)[same]
    dmin = float(gaps.min())
    witnesses = []
    zero_at = np.nonzero(same & (np.diff(t_sorted) == 0))[0]
    for j in zero_at[:max_witnesses]:
        witnesses.append((n, _word(int(idx_sorted[j]), n, M), _word(int(idx_sorted[j + 1]), n, M)))
    return dmin, pairs, witnesses


def _fit_c(per_level):
    pts = [(n, float(d)) for n, d, _ in per_level if 0 < float(d) < float("inf")]
    if len(pts) < 2:
        return None
    ns = np.array([p[0] for p in pts], dtype=float)
    logs = np.log([p[1] for p in pts])
    slope, _ = np.polyfit(ns, logs, 1)
    return float(np.exp(slope))
