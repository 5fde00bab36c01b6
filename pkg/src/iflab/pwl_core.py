"""Continuous piecewise-linear contractions of the line and the systems they form.

Scalar operations are written against plain Python numbers so that they work
unchanged on ``fractions.Fraction`` inputs (exact mode). The vectorised helpers
at the bottom of the module always work in binary floating point.
"""

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence, Tuple

import numpy as np

from .errors import NonConvergence, ValidationError

#: relative slack used for closed containment tests in floating point
REL_SLACK = 1e-12


def is_exact(*values) -> bool:
    return all(isinstance(v, Rational) for v in values)


def containment_slack(*values) -> float:
    """Absolute slack for comparing float quantities of the given magnitudes."""
    if is_exact(*values):
        return 0
    return REL_SLACK * max([1.0] + [abs(float(v)) for v in values])


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValidationError(f"interval with lo > hi: [{self.lo}, {self.hi}]")

    @property
    def length(self):
        return self.hi - self.lo

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    def contains(self, x, slack=0) -> bool:
        return self.lo - slack <= x <= self.hi + slack

    def contains_interval(self, other: "Interval", slack=0) -> bool:
        return self.lo - slack <= other.lo and other.hi <= self.hi + slack

    def hull(self, *others: "Interval") -> "Interval":
        lo = min([self.lo] + [o.lo for o in others])
        hi = max([self.hi] + [o.hi for o in others])
        return Interval(lo, hi)

    def __iter__(self):
        yield self.lo
        yield self.hi


@dataclass(frozen=True)
class PiecewiseLinearMap:
    """A continuous piecewise-linear contraction given by breakpoints, slopes and f(0).

    Piece ``i`` (0-based) is the open interval between ``breakpoints[i-1]`` and
    ``breakpoints[i]``; the first and last pieces are half lines.
    """

    breakpoints: Tuple = ()
    slopes: Tuple = (0.5,)
    tau: float = 0.0
    translations: Tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bps = tuple(self.breakpoints)
        slopes = tuple(self.slopes)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "slopes", slopes)
        if len(slopes) != len(bps) + 1:
            raise ValidationError(
                f"need len(slopes) == len(breakpoints) + 1, got {len(slopes)} and {len(bps)}")
        for a, b in zip(bps, bps[1:]):
            if not a < b:
                raise ValidationError(f"breakpoints must be strictly increasing: {bps}")
        for r in slopes:
            if r == 0 or not -1 < r < 1:
                raise ValidationError(f"slope {r} not in (-1, 1) minus {{0}}")
        for i, (a, b) in enumerate(zip(slopes, slopes[1:])):
            if a == b:
                raise ValidationError(
                    f"adjacent slopes {i + 1} and {i + 2} are equal ({a}); "
                    "adjacent pieces must have distinct slopes")
        object.__setattr__(self, "translations", _propagate_translations(bps, slopes, self.tau))

    @classmethod
    def similarity(cls, r, t) -> "PiecewiseLinearMap":
        return cls((), (r,), t)

    @property
    def n_breakpoints(self) -> int:
        return len(self.breakpoints)

    @property
    def rho(self):
        """Largest absolute slope."""
        return max(abs(r) for r in self.slopes)

    @property
    def injective(self) -> bool:
        return all(r > 0 for r in self.slopes) or all(r < 0 for r in self.slopes)

    def piece_index(self, x) -> int:
        return bisect_right(self.breakpoints, x)

    def piece_bounds(self, i):
        """Endpoints of piece ``i``; ``None`` marks an infinite end."""
        lo = self.breakpoints[i - 1] if i > 0 else None
        hi = self.breakpoints[i] if i < len(self.breakpoints) else None
        return lo, hi

    def __call__(self, x):
        i = self.piece_index(x)
        return self.slopes[i] * x + self.translations[i]

    def derivative(self, x):
        """Slope at ``x``; ``None`` at a breakpoint."""
        if x in self.breakpoints:
            return None
        return self.slopes[self.piece_index(x)]

    def fixed_point(self):
        """The unique fixed point of the contraction."""
        best, best_violation = None, None
        for i, (r, t) in enumerate(zip(self.slopes, self.translations)):
            x = t / (1 - r)
            lo, hi = self.piece_bounds(i)
            violation = max(0, (lo - x) if lo is not None else 0, (x - hi) if hi is not None else 0)
            if violation == 0:
                return x
            if best_violation is None or violation < best_violation:
                best, best_violation = x, violation
        return best

    def with_params(self, breakpoints=None, tau=None) -> "PiecewiseLinearMap":
        return PiecewiseLinearMap(
            self.breakpoints if breakpoints is None else tuple(breakpoints),
            self.slopes,
            self.tau if tau is None else tau,
        )


def _propagate_translations(bps, slopes, tau):
    # continuity at b_i: slopes[i]*b + t[i] == slopes[i+1]*b + t[i+1]
    n = len(slopes)
    t = [None] * n
    i0 = bisect_right(bps, 0) if bps else 0
    if i0 > 0 and bps[i0 - 1] == 0:
        i0 -= 1
    t[i0] = tau
    for i in range(i0, n - 1):
        t[i + 1] = t[i] + bps[i] * (slopes[i] - slopes[i + 1])
    for i in range(i0, 0, -1):
        t[i - 1] = t[i] - bps[i - 1] * (slopes[i - 1] - slopes[i])
    return tuple(t)


def eval_map(f: PiecewiseLinearMap, x):
    return f(x)


def image_interval(f: PiecewiseLinearMap, J: Interval) -> Interval:
    """Exact image of ``J`` under ``f``: hull of the endpoint and interior-breakpoint values."""
    values = [f(J.lo), f(J.hi)]
    values.extend(f(b) for b in f.breakpoints if J.lo < b < J.hi)
    return Interval(min(values), max(values))


@dataclass(frozen=True)
class SmallnessReport:
    sum_rho: float
    per_map_injective: Tuple[bool, ...]
    per_map_bound: Tuple[Tuple[float, float], ...]
    small: bool


class CPLIFS:
    """An ordered, immutable tuple of piecewise-linear contractions."""

    def __init__(self, maps: Sequence[PiecewiseLinearMap]):
        maps = tuple(maps)
        if not maps:
            raise ValidationError("a CPLIFS needs at least one map")
        for k, f in enumerate(maps):
            if not isinstance(f, PiecewiseLinearMap):
                raise ValidationError(f"map {k + 1} is not a PiecewiseLinearMap")
        self._maps = maps

    @classmethod
    def from_params(cls, breakpoints, tau, rho, type_vector) -> "CPLIFS":
        """Build from the flat parameter vectors (b, tau, rho) of a given type."""
        type_vector = tuple(int(l) for l in type_vector)
        L, m = sum(type_vector), len(type_vector)
        if len(breakpoints) != L or len(tau) != m or len(rho) != L + m:
            raise ValidationError(
                f"parameter lengths ({len(breakpoints)}, {len(tau)}, {len(rho)}) "
                f"do not match type {type_vector}")
        maps, pb, pr = [], 0, 0
        for k, l in enumerate(type_vector):
            maps.append(PiecewiseLinearMap(
                tuple(breakpoints[pb:pb + l]), tuple(rho[pr:pr + l + 1]), tau[k]))
            pb += l
            pr += l + 1
        return cls(maps)

    @property
    def maps(self) -> Tuple[PiecewiseLinearMap, ...]:
        return self._maps

    @property
    def m(self) -> int:
        return len(self._maps)

    def __len__(self):
        return len(self._maps)

    def __getitem__(self, k):
        return self._maps[k]

    def __iter__(self):
        return iter(self._maps)

    def __eq__(self, other):
        return isinstance(other, CPLIFS) and self._maps == other._maps

    def __hash__(self):
        return hash(self._maps)

    def __repr__(self):
        return f"CPLIFS({list(self._maps)!r})"

    @property
    def type_vector(self) -> Tuple[int, ...]:
        return tuple(f.n_breakpoints for f in self._maps)

    @property
    def L(self) -> int:
        return sum(self.type_vector)

    @property
    def rho_per_map(self):
        return tuple(f.rho for f in self._maps)

    @property
    def rho_max(self):
        return max(self.rho_per_map)

    @property
    def rho_min(self):
        return min(abs(r) for f in self._maps for r in f.slopes)

    @property
    def breakpoint_vector(self):
        return tuple(b for f in self._maps for b in f.breakpoints)

    @property
    def tau_vector(self):
        return tuple(f.tau for f in self._maps)

    @property
    def rho_vector(self):
        return tuple(r for f in self._maps for r in f.slopes)

    def breakpoint_ids(self):
        """``(k, i)`` pairs (1-based) in the block order of the breakpoint vector."""
        return [(k + 1, i + 1) for k, f in enumerate(self._maps) for i in range(f.n_breakpoints)]

    def compose(self, word, x):
        """Evaluate f_{w1} o ... o f_{wn} at x (letters are 1-based)."""
        for k in reversed(word):
            x = self._maps[k - 1](x)
        return x

    def derivative(self, word, x):
        """Chain-rule derivative of the composition; ``None`` if some factor hits a breakpoint."""
        d = 1
        for k in reversed(word):
            f = self._maps[k - 1]
            s = f.derivative(x)
            if s is None:
                return None
            d *= s
            x = f(x)
        return d

    def is_exact(self) -> bool:
        return all(is_exact(*f.breakpoints, *f.slopes, f.tau) for f in self._maps)

    def to_float(self) -> "CPLIFS":
        return CPLIFS([
            PiecewiseLinearMap(tuple(float(b) for b in f.breakpoints),
                               tuple(float(r) for r in f.slopes), float(f.tau))
            for f in self._maps])


def check_words(sys: CPLIFS, word) -> Tuple[int, ...]:
    word = tuple(int(k) for k in word)
    for k in word:
        if not 1 <= k <= sys.m:
            raise ValidationError(f"letter {k} outside [1, {sys.m}]")
    return word


def invariant_interval(sys: CPLIFS, tol=1e-12, max_iter=10_000) -> Interval:
    """Smallest compact interval mapped into itself by every map.

    Grows the hull of the maps' fixed points by repeatedly adding the images
    until the growth falls below ``tol``.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    fixed = [f.fixed_point() for f in sys]
    J = Interval(min(fixed), max(fixed))
    for _ in range(max_iter):
        nxt = J.hull(*(image_interval(f, J) for f in sys))
        growth = (J.lo - nxt.lo) + (nxt.hi - J.hi)
        J = nxt
        if growth <= tol * max(1, abs(float(J.lo)), abs(float(J.hi))):
            return J
    raise NonConvergence(f"invariant interval did not converge in {max_iter} iterations")


def cylinder(sys: CPLIFS, word, I: Interval) -> Interval:
    """f_{w1} o ... o f_{wn}(I); the empty word gives I back."""
    word = check_words(sys, word)
    J = I
    for k in reversed(word):
        J = image_interval(sys[k - 1], J)
    return J


def check_small(sys: CPLIFS) -> SmallnessReport:
    rhos = sys.rho_per_map
    rho_max = sys.rho_max
    sum_rho = sum(rhos)
    injective = tuple(f.injective for f in sys)
    bounds = []
    ok = sum_rho < 1
    for rho_k, inj in zip(rhos, injective):
        required = Fraction(1, 2) if inj else (1 - rho_max) / 2
        if not is_exact(rho_max):
            required = float(required)
        bounds.append((required, rho_k))
        ok = ok and rho_k < required
    return SmallnessReport(sum_rho, injective, tuple(bounds), bool(ok))


# ---------------------------------------------------------------------------
# vectorised float helpers


class FloatMaps:
    """Float arrays describing each map, for numpy evaluation over many points."""

    def __init__(self, sys: CPLIFS):
        self.bps = [np.asarray([float(b) for b in f.breakpoints], dtype=float) for f in sys]
        self.slopes = [np.asarray([float(r) for r in f.slopes], dtype=float) for f in sys]
        self.trans = [np.asarray([float(t) for t in f.translations], dtype=float) for f in sys]

    def eval(self, k, x):
        """Evaluate map ``k`` (0-based) at an array of points."""
        i = np.searchsorted(self.bps[k], x, side="right")
        return self.slopes[k][i] * x + self.trans[k][i]

    def image(self, k, lo, hi):
        a = self.eval(k, lo)
        b = self.eval(k, hi)
        new_lo = np.minimum(a, b)
        new_hi = np.maximum(a, b)
        for b_ in self.bps[k]:
            inside = (lo < b_) & (b_ < hi)
            if inside.any():
                v = self.eval(k, np.asarray(b_))
                new_lo = np.where(inside, np.minimum(new_lo, v), new_lo)
                new_hi = np.where(inside, np.maximum(new_hi, v), new_hi)
        return new_lo, new_hi


def level_cylinders(sys: CPLIFS, n: int, I: Interval, budget=None):
    """All level-``n`` cylinders as float arrays ``(lo, hi)`` in lexicographic word order."""
    from .errors import BudgetExceeded, enumeration_budget

    cap = enumeration_budget() if budget is None else budget
    if sys.m ** n > cap:
        raise BudgetExceeded(f"{sys.m}^{n} cylinders exceed the budget of {cap}")
    fm = FloatMaps(sys)
    lo = np.array([float(I.lo)])
    hi = np.array([float(I.hi)])
    for _ in range(n):
        parts = [fm.image(k, lo, hi) for k in range(sys.m)]
        lo = np.concatenate([p[0] for p in parts])
        hi = np.concatenate([p[1] for p in parts])
    return lo, hi


def word_from_index(index: int, n: int, m: int) -> Tuple[int, ...]:
    """Inverse of the lexicographic enumeration used by :func:`level_cylinders`."""
    letters = []
    for _ in range(n):
        index, r = divmod(index, m)
        letters.append(r + 1)
    return tuple(reversed(letters))
