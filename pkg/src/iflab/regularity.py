"""Regularity detection, bounded-distortion constants and approximate attractor membership."""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import BudgetExceeded, NotSmall, ValidationError, enumeration_budget
from .pwl_core import (CPLIFS, Interval, check_small, containment_slack, cylinder,
                       invariant_interval)

REGULAR = "Regular"
IRREGULAR = "Irregular"
UNDETERMINED = "Undetermined"


@dataclass
class Membership:
    """Outcome of :func:`point_in_attractor`.

    ``inside`` is False only when no cylinder at ``depth_reached`` comes within
    ``tol`` of the point, which is an exact certificate of non-membership.
    """

    inside: bool
    resolution: Optional[float]
    depth_reached: int
    word: Optional[Tuple[int, ...]] = None

    def __bool__(self):
        return self.inside


@dataclass
class RegularityResult:
    status: str
    order: Optional[int] = None
    witness: Optional[dict] = None
    max_order_tried: int = 0
    breakpoint_verdicts: List[dict] = field(default_factory=list)
    offending_counts: List[int] = field(default_factory=list)

    @property
    def regular(self) -> bool:
        return self.status == REGULAR


@dataclass(frozen=True)
class BDPConstants:
    C1: float
    C2: float
    N: int


def default_max_order(m: int, cap: int = 4096) -> int:
    if m <= 1:
        return 12
    return max(1, int(math.floor(math.log(cap) / math.log(m) + 1e-9)))


def _contains_any(J: Interval, points) -> bool:
    for b in points:
        if J.contains(b, containment_slack(J.lo, J.hi, b)):
            return True
    return False


def offending_words(sys: CPLIFS, n: int, I: Interval, candidates=None) -> List[Tuple[int, ...]]:
    """Level-``n`` words whose (closed) cylinder contains a breakpoint of any map.

    ``candidates`` restricts the search to extensions of the given level-(n-1)
    words; a breakpoint-free cylinder never regains a breakpoint when refined.
    """
    bps = sys.breakpoint_vector
    if candidates is None:
        from itertools import product
        words = product(range(1, sys.m + 1), repeat=n)
    else:
        words = (w + (j,) for w in candidates for j in range(1, sys.m + 1))
    return [w for w in words if _contains_any(cylinder(sys, w, I), bps)]


def point_in_attractor(sys: CPLIFS, x, depth: int, tol=0.0, I: Interval = None,
                       budget=None) -> Membership:
    """Is ``x`` within ``tol`` of some level-``depth`` cylinder?

    Works backwards: Y_0 is the tol-ball around x inside I, and Y_k collects the
    points of I that some map sends into Y_{k-1}.  Y_k is non-empty exactly when
    a level-k cylinder meets the ball.
    """
    if depth < 1:
        raise ValidationError("depth must be at least 1")
    if I is None:
        I = invariant_interval(sys)
    cap = enumeration_budget() if budget is None else budget
    lo_I, hi_I = float(I.lo), float(I.hi)
    x = float(x)
    s = containment_slack(lo_I, hi_I, x)
    ball = (max(x - tol, lo_I - s), min(x + tol, hi_I + s))
    if ball[0] > ball[1]:
        return Membership(False, None, 0)
    levels = [[ball]]
    pieces = [[(float(r), float(t), f.piece_bounds(i))
               for i, (r, t) in enumerate(zip(f.slopes, f.translations))] for f in sys]
    for k in range(1, depth + 1):
        nxt = []
        for lo, hi in levels[-1]:
            for map_pieces in pieces:
                for r, t, (p_lo, p_hi) in map_pieces:
                    a, b = (lo - t) / r, (hi - t) / r
                    if a > b:
                        a, b = b, a
                    a = max(a, lo_I - s, -math.inf if p_lo is None else float(p_lo) - s)
                    b = min(b, hi_I + s, math.inf if p_hi is None else float(p_hi) + s)
                    if a <= b:
                        nxt.append((a, b))
        merged = _merge(nxt, s)
        if not merged:
            return Membership(False, None, k)
        if len(merged) > cap:
            raise BudgetExceeded(f"membership search holds {len(merged)} intervals at depth {k}")
        levels.append(merged)
    resolution = tol + float(sys.rho_max) ** depth * (hi_I - lo_I)
    return Membership(True, resolution, depth, _reconstruct_word(sys, levels, s))


def _merge(intervals, slack):
    if not intervals:
        return []
    intervals.sort()
    out = [list(intervals[0])]
    for a, b in intervals[1:]:
        if a <= out[-1][1] + slack:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [tuple(iv) for iv in out]


def _reconstruct_word(sys, levels, slack):
    lo, hi = levels[-1][0]
    y = 0.5 * (lo + hi)
    letters = []
    for k in range(len(levels) - 1, 0, -1):
        target = levels[k - 1]
        best = None
        for j, f in enumerate(sys):
            z = float(f(y))
            dist = min(max(a - z, 0.0, z - b) for a, b in target)
            if best is None or dist < best[0]:
                best = (dist, j, z)
            if dist <= slack:
                break
        letters.append(best[1] + 1)
        y = best[2]
    return tuple(reversed(letters))


def fixed_point_coincidences(sys: CPLIFS):
    """Breakpoints equal to the fixed point of their own map (certified irregularity)."""
    hits = []
    for k, f in enumerate(sys):
        p = f.fixed_point()
        for i, b in enumerate(f.breakpoints):
            if abs(p - b) <= containment_slack(p, b):
                hits.append((k + 1, i + 1))
    return hits


def regularity_order(sys: CPLIFS, max_order: int = None, probe_depth: int = 40,
                     membership_tol: float = 1e-9, require_small: bool = True,
                     budget=None) -> RegularityResult:
    """Smallest N for which no level-N cylinder contains a breakpoint."""
    if require_small and not check_small(sys).small:
        raise NotSmall("regularity is defined for small systems only")
    if max_order is None:
        max_order = default_max_order(sys.m)
    if max_order < 1:
        raise ValidationError("max_order must be at least 1")
    cap = enumeration_budget() if budget is None else budget
    I = invariant_interval(sys)
    result = RegularityResult(UNDETERMINED, max_order_tried=0)
    if sys.L == 0:
        result.status, result.order, result.max_order_tried = REGULAR, 1, 1
        result.offending_counts = [0]
        return result

    offending = None
    for n in range(1, max_order + 1):
        n_candidates = sys.m ** n if offending is None else len(offending) * sys.m
        if n_candidates > cap:
            raise BudgetExceeded(f"{n_candidates} cylinders at level {n} exceed the budget {cap}")
        offending = offending_words(sys, n, I, offending)
        result.offending_counts.append(len(offending))
        result.max_order_tried = n
        if not offending:
            result.status, result.order = REGULAR, n
            break

    coincide = set(fixed_point_coincidences(sys))
    for (k, i), b in zip(sys.breakpoint_ids(), sys.breakpoint_vector):
        verdict = {"breakpoint": (k, i), "value": b, "certified": (k, i) in coincide}
        mem = point_in_attractor(sys, b, probe_depth, I=I, budget=cap)
        verdict.update(in_attractor=mem.inside, resolution=mem.resolution,
                       depth=mem.depth_reached, word=mem.word)
        result.breakpoint_verdicts.append(verdict)

    if result.status == REGULAR:
        return result
    for v in result.breakpoint_verdicts:
        if v["certified"] or (v["in_attractor"] and v["resolution"] < membership_tol):
            result.status = IRREGULAR
            result.witness = {"breakpoint": v["breakpoint"], "value": v["value"],
                              "word": v["word"], "certified": v["certified"]}
            break
    return result


def bdp_constants(sys: CPLIFS, N: int) -> BDPConstants:
    if N < 1:
        raise ValidationError("N must be at least 1")
    rmin, rmax = sys.rho_min, sys.rho_max
    return BDPConstants(rmin ** N / rmax, rmax / rmin ** N, N)


def bdp_check(sys: CPLIFS, N: int, samples: int = 10_000, seed: int = 0, I: Interval = None):
    """Sample derivative ratios |f_w'(x)| / |f_w'(y)| for random words of length N..3N.

    Returns ``(checked, violations, constants)``.
    """
    if I is None:
        I = invariant_interval(sys)
    c = bdp_constants(sys, N)
    rng = np.random.default_rng(seed)
    checked = violations = 0
    for _ in range(samples):
        n = int(rng.integers(N, 3 * N + 1))
        word = tuple(int(k) for k in rng.integers(1, sys.m + 1, size=n))
        x, y = rng.uniform(float(I.lo), float(I.hi), size=2) if I.length > 0 else (I.lo, I.lo)
        dx, dy = sys.derivative(word, float(x)), sys.derivative(word, float(y))
        if dx is None or dy is None:
            continue
        checked += 1
        ratio = abs(dx) / abs(dy)
        if not c.C1 * (1 - 1e-12) <= ratio <= c.C2 * (1 + 1e-12):
            violations += 1
    return checked, violations, c
