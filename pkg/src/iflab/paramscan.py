"""Two-dimensional regularity scans over (breakpoint, translation) slices, and derivative checks."""

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from .errors import BadAxis, BudgetExceeded, ValidationError, enumeration_budget
from .pwl_core import CPLIFS, PiecewiseLinearMap, check_small, invariant_interval
from .regularity import IRREGULAR, UNDETERMINED, point_in_attractor, regularity_order

_AXIS = re.compile(r"^(?:b(\d+)\.(\d+)|tau(\d+))$")


@dataclass(frozen=True)
class Axis:
    """A scalar parameter: breakpoint ``b{k}.{i}`` or translation ``tau{k}`` (1-based)."""

    kind: str
    k: int
    i: int = 0

    @property
    def name(self) -> str:
        return f"b{self.k}.{self.i}" if self.kind == "b" else f"tau{self.k}"


def parse_axis(name: str, sys: CPLIFS) -> Axis:
    match = _AXIS.match(name.strip())
    if not match:
        raise BadAxis(f"axis {name!r} is neither b<k>.<i> nor tau<k>")
    if match.group(3) is not None:
        axis = Axis("tau", int(match.group(3)))
    else:
        axis = Axis("b", int(match.group(1)), int(match.group(2)))
    if not 1 <= axis.k <= sys.m:
        raise BadAxis(f"axis {name!r}: system has {sys.m} maps")
    if axis.kind == "b" and not 1 <= axis.i <= sys[axis.k - 1].n_breakpoints:
        raise BadAxis(f"axis {name!r}: map {axis.k} has {sys[axis.k - 1].n_breakpoints} breakpoints")
    return axis


def get_param(sys: CPLIFS, axis: Axis):
    f = sys[axis.k - 1]
    return f.tau if axis.kind == "tau" else f.breakpoints[axis.i - 1]


def set_params(sys: CPLIFS, values) -> CPLIFS:
    """Copy of ``sys`` with ``{Axis: value}`` substituted; may raise ValidationError."""
    maps = list(sys.maps)
    for axis, value in values.items():
        f = maps[axis.k - 1]
        if axis.kind == "tau":
            maps[axis.k - 1] = f.with_params(tau=value)
        else:
            bps = list(f.breakpoints)
            bps[axis.i - 1] = value
            maps[axis.k - 1] = f.with_params(breakpoints=bps)
    return CPLIFS(maps)


def lipschitz_bound(sys: CPLIFS, axis: Axis) -> float:
    """Bound on how fast attractor points move, relative to the breakpoint, per unit of the axis."""
    rmax = float(sys.rho_max)
    if axis.kind == "tau":
        return 1.0 / (1.0 - rmax)
    s = sys[axis.k - 1].slopes
    return 1.0 + abs(float(s[axis.i - 1]) - float(s[axis.i])) / (1.0 - rmax)


# --- scans ---------------------------------------------------------------------------------

@dataclass
class ScanResult:
    axis1: str
    axis2: str
    range1: Tuple[float, float]
    range2: Tuple[float, float]
    grid: List[List[str]]
    irregular_fraction: float
    undetermined_count: int
    mesh_counts: List[Tuple[float, int]]
    witnesses: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.grid)

    def centers(self):
        G = self.size
        h1 = (self.range1[1] - self.range1[0]) / G
        h2 = (self.range2[1] - self.range2[0]) / G
        return (self.range1[0] + (np.arange(G) + 0.5) * h1,
                self.range2[0] + (np.arange(G) + 0.5) * h2)

    def flags(self, value: str = IRREGULAR) -> np.ndarray:
        return np.array([[c == value for c in row] for row in self.grid], dtype=bool)


def _cell_verdict(sys: CPLIFS, axes, margin: float, max_order: int, probe_depth: int, budget):
    if not check_small(sys).small:
        return UNDETERMINED, None
    I = invariant_interval(sys)
    for axis in axes:
        if axis.kind != "b":
            continue
        b = sys[axis.k - 1].breakpoints[axis.i - 1]
        mem = point_in_attractor(sys, b, probe_depth, tol=margin, I=I, budget=budget)
        if mem.inside:
            return IRREGULAR, {"breakpoint": (axis.k, axis.i), "tol": margin,
                               "resolution": mem.resolution, "word": mem.word}
    res = regularity_order(sys, max_order=max_order, probe_depth=probe_depth, budget=budget)
    if res.status == IRREGULAR:
        return IRREGULAR, res.witness
    return res.status, None


def scan_regularity(template: CPLIFS, axis1: str = "b1.1", axis2: str = "tau1",
                    range1=(0.0, 1.0), range2=None, grid_size: int = 64, max_order: int = 8,
                    probe_depth: int = 40, budget=None) -> ScanResult:
    """Regularity verdict at the centre of each cell of a grid_size x grid_size slice.

    A cell is flagged irregular when a breakpoint lies within a margin of the
    attractor at the centre, the margin covering how far breakpoint and attractor
    can drift apart inside the cell.  Rows follow axis1, columns axis2.
    """
    if grid_size < 8:
        raise ValidationError("grid_size must be at least 8")
    a1, a2 = parse_axis(axis1, template), parse_axis(axis2, template)
    if a1 == a2:
        raise BadAxis("the two axes must differ")
    range2 = range1 if range2 is None else range2
    range1, range2 = tuple(map(float, range1)), tuple(map(float, range2))
    if not (range1[0] < range1[1] and range2[0] < range2[1]):
        raise ValidationError("ranges must be increasing")
    cap = enumeration_budget() if budget is None else budget
    G = grid_size
    h1 = (range1[1] - range1[0]) / G
    h2 = (range2[1] - range2[0]) / G
    c1 = range1[0] + (np.arange(G) + 0.5) * h1
    c2 = range2[0] + (np.arange(G) + 0.5) * h2
    margin = 0.5 * (h1 * lipschitz_bound(template, a1) + h2 * lipschitz_bound(template, a2))
    grid, witnesses = [], {}
    for i in range(G):
        row = []
        for j in range(G):
            try:
                sys = set_params(template, {a1: float(c1[i]), a2: float(c2[j])})
                verdict, witness = _cell_verdict(sys, (a1, a2), margin, max_order, probe_depth, cap)
            except (ValidationError, BudgetExceeded):
                verdict, witness = UNDETERMINED, None
            if witness is not None:
                witnesses[(i, j)] = witness
            row.append(verdict)
        grid.append(row)
    flags = np.array([[c == IRREGULAR for c in row] for row in grid])
    undetermined = int(sum(c == UNDETERMINED for row in grid for c in row))
    decided = G * G - undetermined
    fraction = float(flags.sum() / decided) if decided else 0.0
    mesh = []
    for factor in (1, 2, 4):
        n = G // factor
        blocks = flags[:n * factor, :n * factor].reshape(n, factor, n, factor).any(axis=(1, 3))
        mesh.append((factor * max(h1, h2), int(blocks.sum())))
    return ScanResult(a1.name, a2.name, range1, range2, grid, fraction, undetermined, mesh, witnesses)


def scan_to_csv(scan: ScanResult) -> str:
    x1, x2 = scan.centers()
    lines = [f"i,j,{scan.axis1},{scan.axis2},flag"]
    for i, row in enumerate(scan.grid):
        for j, flag in enumerate(row):
            lines.append(f"{i},{j},{float(x1[i])!r},{float(x2[j])!r},{flag}")
    return "\n".join(lines) + "\n"


# --- derivative bounds ---------------------------------------------------------------------

@dataclass
class DerivativeCheck:
    word: Tuple[int, ...]
    parameter: str
    slope: Optional[Fraction]
    bound: float
    gamma: float
    passed: bool
    skipped: bool = False
    reason: str = ""


def gamma(rho_max) -> float:
    """Sum of rho_max^k over k >= 1."""
    rho_max = float(rho_max)
    return rho_max / (1 - rho_max)


def _exact(sys: CPLIFS) -> CPLIFS:
    return CPLIFS([PiecewiseLinearMap(tuple(Fraction(b) for b in f.breakpoints),
                                      tuple(Fraction(r) for r in f.slopes), Fraction(f.tau))
                   for f in sys])


def derivative_bounds_check(template: CPLIFS, word, parameter: str, x, h=1e-6) -> DerivativeCheck:
    """Finite-difference slope of f_word(x) in one parameter, in exact rational arithmetic.

    Left and right differences that disagree reveal a kink; such points are skipped.
    Breakpoint slopes are compared with max(gamma, |rho_q - rho_{q+1}| / (1 - rho_max))
    and translation slopes with 2.
    """
    word = tuple(int(k) for k in word)
    rmax = float(template.rho_max)
    g = gamma(rmax)
    if template.L == 0 and parameter.startswith("b"):
        return DerivativeCheck(word, parameter, None, g, g, True, True, "no breakpoint parameters")
    axis = parse_axis(parameter, template)
    if axis.kind == "tau":
        bound = 2.0
    else:
        s = template[axis.k - 1].slopes
        bound = max(g, abs(float(s[axis.i - 1]) - float(s[axis.i])) / (1 - rmax))
    h = Fraction(h)
    if h <= 0:
        raise ValidationError("h must be positive")
    exact = _exact(template)
    x = Fraction(x)
    theta = Fraction(get_param(exact, axis))
    try:
        vals = [set_params(exact, {axis: theta + d}).compose(word, x) for d in (-h, 0, h)]
    except ValidationError as exc:
        return DerivativeCheck(word, axis.name, None, bound, g, True, True, f"perturbation invalid: {exc}")
    left, right = (vals[1] - vals[0]) / h, (vals[2] - vals[1]) / h
    if left != right:
        return DerivativeCheck(word, axis.name, None, bound, g, True, True, "not differentiable here")
    slope = (vals[2] - vals[0]) / (2 * h)
    return DerivativeCheck(word, axis.name, slope, bound, g, abs(float(slope)) < bound + 10 * float(h))
