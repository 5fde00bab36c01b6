"""Reference systems used throughout the tests, the docs and the CLI examples."""

from fractions import Fraction

import numpy as np

from .pwl_core import CPLIFS, PiecewiseLinearMap


def cantor(exact=False) -> CPLIFS:
    """Middle-thirds Cantor set: x/3 and x/3 + 2/3."""
    third = Fraction(1, 3) if exact else 1 / 3
    two_thirds = Fraction(2, 3) if exact else 2 / 3
    return CPLIFS([PiecewiseLinearMap.similarity(third, 0 * third),
                   PiecewiseLinearMap.similarity(third, two_thirds)])


def triangle() -> CPLIFS:
    """A tent map (peak at 0.5) next to a similarity; regular of order 1."""
    return CPLIFS([PiecewiseLinearMap((0.5,), (0.3, -0.3), 0.1),
                   PiecewiseLinearMap.similarity(0.3, 0.65)])


def injective() -> CPLIFS:
    """Two injective maps with slopes 0.35/0.2 and 0.3; regular of order 1."""
    return CPLIFS([PiecewiseLinearMap((0.5,), (0.35, 0.2), 0.0),
                   PiecewiseLinearMap.similarity(0.3, 0.7)])


def tent(b=0.5, tau=None, rho=0.3) -> CPLIFS:
    """Single tent map; by default its breakpoint is the fixed point of the first piece."""
    if tau is None:
        tau = b * (1 - rho)
    return CPLIFS([PiecewiseLinearMap((b,), (rho, -rho), tau)])


def mauldin_williams():
    """Two-vertex graph-directed system: 1->1 (1/2), 1->2 (1/4), 2->1 (1/3)."""
    from .gdifs import GDIFS

    return GDIFS.from_edges(2, [(0, 0, 0.5, 0.0), (0, 1, 0.25, 0.5), (1, 0, 1 / 3, 0.0)])


def random_small_similarity(rng, m=None):
    """Random similarity system whose absolute ratios sum to less than one."""
    if m is None:
        m = int(rng.integers(2, 5))
    while True:
        weights = rng.dirichlet(np.ones(m))
        total = rng.uniform(0.3, 0.95)
        ratios = weights * total
        if ratios.min() > 0.02:
            break
    signs = rng.choice([-1.0, 1.0], size=m)
    shifts = rng.uniform(0, 1, size=m)
    return CPLIFS([PiecewiseLinearMap.similarity(float(s * r), float(t))
                   for s, r, t in zip(signs, ratios, shifts)])

