"""Acceptance criteria 1-11, each at its stated tolerance.

Run under pytest (one PASS/FAIL line per criterion is printed even with output
capture on) or directly with ``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from iflab import fixtures
from iflab.cli import main as cli_main
from iflab.dimension import (box_dimension_estimate, cover_bounds, hausdorff_distance,
                             is_exhaustive, is_prefix_free, moran_cover, natural_dimension,
                             nearest_neighbor_gap, sample_attractor)
from iflab.gdifs import (associate_gdifs, entropy_lyapunov, markov_measure,
                         monte_carlo_entropy, natural_exponent, sample_gdifs_attractor,
                         sandwich_check)
from iflab.generated import SelfSimilarIFS, SimilarityMap, esc_scan, generate_selfsimilar
from iflab.paramscan import derivative_bounds_check, scan_regularity
from iflab.pwl_core import CPLIFS, PiecewiseLinearMap, invariant_interval
from iflab.regularity import bdp_check, regularity_order

LOG23 = math.log(2) / math.log(3)
CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def order_two():
    return CPLIFS([PiecewiseLinearMap((0.2,), (0.3, 0.2), 0.0), PiecewiseLinearMap.similarity(0.3, 0.7)])


REGULAR_FIXTURES = {"cantor": fixtures.cantor, "triangle": fixtures.triangle,
                    "injective": fixtures.injective, "order-two": order_two}


def criterion_1():
    import json
    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "r.json"
        start = time.perf_counter()
        code = cli_main(["dim", str(CONFIGS / "cantor.json"), "--depth", "14", "--json", str(out)])
        elapsed = time.perf_counter() - start
        res = json.loads(out.read_text())["results"]
    e_spec = abs(res["alpha"] - LOG23)
    e_dir = abs(res["sF_direct"] - LOG23)
    ok = code == 0 and e_spec <= 1e-9 and e_dir <= 1e-6 and elapsed < 1.0
    return ok, f"spectral err {e_spec:.1e}, direct err {e_dir:.1e}, {elapsed:.2f}s"


def criterion_2():
    start = time.perf_counter()
    parts, ok = [], True
    for name in ("triangle", "injective"):
        sys_ = REGULAR_FIXTURES[name]()
        assert regularity_order(sys_).regular
        rep = natural_dimension(sys_, "both", depth=12)
        gap = abs(rep.sF_direct - rep.alpha)
        ok &= gap <= 1e-3
        parts.append(f"{name} |direct-alpha|={gap:.1e}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30
    return ok, ", ".join(parts) + f", {elapsed:.2f}s"


def _markov_systems():
    yield "cantor N=1", associate_gdifs(fixtures.cantor(), 1)[0]
    yield "cantor N=2", associate_gdifs(fixtures.cantor(), 2)[0]
    tri = fixtures.triangle()
    yield "triangle", associate_gdifs(tri, regularity_order(tri).order)[0]
    yield "mauldin-williams", fixtures.mauldin_williams()


def criterion_3():
    ok, worst, mc = True, 0.0, []
    for name, g in _markov_systems():
        a = natural_exponent(g)
        mm = markov_measure(g, a)
        h, chi = entropy_lyapunov(mm, g)
        err = abs(h / chi - a)
        worst = max(worst, err)
        ok &= err <= 1e-10
        est, se = monte_carlo_entropy(mm, g, 10_000, seed=11)
        ok &= abs(est - h) <= 3 * se
        mc.append(f"{abs(est - h) / se:.2f}se")
    return ok, f"max |h/chi-alpha| {worst:.1e}; MC deviations {', '.join(mc)}"


def criterion_4():
    g = fixtures.mauldin_williams()
    mm = markov_measure(g)
    sc = sandwich_check(mm, g, depth=6)
    return sc.ok, (f"{sc.checked} chains, ratios in [{sc.min_ratio:.4f}, {sc.max_ratio:.4f}] "
                   f"within [{sc.c1:.4f}, {sc.c2:.4f}]")


def criterion_5():
    rng = np.random.default_rng(2024)
    ok, covers, biggest = True, 0, 0
    for _ in range(10):
        sys_ = fixtures.random_small_similarity(rng)
        ratios = [float(f.rho) for f in sys_]
        rmax = max(ratios)
        for r in np.exp(rng.uniform(math.log(1e-4), math.log(rmax), 100)):
            cover = moran_cover(ratios, float(r))
            lo, hi = cover_bounds(ratios, float(r))
            ok &= lo <= cover.count < hi
            ok &= is_prefix_free(cover.words) and is_exhaustive(cover.words, len(ratios))
            covers += 1
            biggest = max(biggest, cover.count)
    return ok, f"{covers} covers checked, largest {biggest} words"


def criterion_6():
    ok, parts = True, []
    for name, make in REGULAR_FIXTURES.items():
        sys_ = make()
        N = regularity_order(sys_).order
        checked, bad, c = bdp_check(sys_, N, samples=10_000, seed=6)
        ok &= bad == 0 and checked > 0
        parts.append(f"{name} N={N} {bad}/{checked}")
    return ok, "violations " + ", ".join(parts)


def criterion_7():
    ok, parts = True, []
    cantor = box_dimension_estimate(fixtures.cantor(), [3.0 ** -k for k in range(4, 10)])
    ok &= abs(cantor.estimate - 0.6309) <= 0.05
    parts.append(f"cantor {cantor.estimate:.4f}")
    for name, make in list(REGULAR_FIXTURES.items()) + [("tent", fixtures.tent)]:
        sys_ = make()
        sF = natural_dimension(sys_, "direct").sF_direct
        L = float(invariant_interval(sys_).length) or 1.0
        est = box_dimension_estimate(sys_, [L * 2.0 ** -k for k in range(4, 13)]).estimate
        ok &= est <= min(1, sF) + 0.05
        parts.append(f"{name} {est:.3f}<=min(1,{sF:.3f})+0.05")
    return ok, ", ".join(parts)


def criterion_8():
    ok, parts = True, []
    for name, make in REGULAR_FIXTURES.items():
        sys_ = make()
        N = regularity_order(sys_).order
        g, _ = associate_gdifs(sys_, N)
        I = invariant_interval(sys_)
        A = sample_attractor(sys_, 10_000, seed=8)
        B = sample_gdifs_attractor(g, 10_000, seed=9, x0=float(I.lo))
        gap = max(nearest_neighbor_gap(A), nearest_neighbor_gap(B))
        bound = 2 * (float(sys_.rho_max) ** 64 * float(I.length) + gap)
        d = hausdorff_distance(A, B)
        ok &= d < bound
        parts.append(f"{name} {d:.2e}<{bound:.2e}")
    return ok, ", ".join(parts)


def criterion_9():
    rng = np.random.default_rng(99)
    ok, parts = True, []
    for name, make in list(REGULAR_FIXTURES.items()) + [("tent", fixtures.tent)]:
        sys_ = make()
        if not float(sys_.rho_max) < 0.5:
            continue
        params = [f"b{k}.{i}" for k, i in sys_.breakpoint_ids()] + [f"tau{k}" for k in range(1, sys_.m + 1)]
        I = invariant_interval(sys_)
        checked = skipped = 0
        for _ in range(1000):
            n = int(rng.integers(1, 9))
            word = tuple(int(k) for k in rng.integers(1, sys_.m + 1, n))
            param = params[int(rng.integers(len(params)))]
            x = float(rng.uniform(float(I.lo), float(I.hi))) if I.length > 0 else float(I.lo)
            chk = derivative_bounds_check(sys_, word, param, x, h=1e-7)
            ok &= chk.passed
            skipped += chk.skipped
            checked += not chk.skipped
        for k in range(1, sys_.m + 1):
            chk = derivative_bounds_check(sys_, (k,), f"tau{k}", float(I.lo))
            ok &= chk.slope == 1
        parts.append(f"{name} {checked} checked/{skipped} skipped")
    return ok, ", ".join(parts)


def criterion_10():
    G, rho = 128, 0.3
    scan = scan_regularity(fixtures.tent(), "b1.1", "tau1", (0, 1), grid_size=G)
    flags = scan.flags()
    h = 1 / G
    missed = 0
    for i in range(G):
        for j in range(G):
            b0, b1, t0, t1 = i * h, (i + 1) * h, j * h, (j + 1) * h
            if (1 - rho) * b0 <= t1 and (1 - rho) * b1 >= t0 and not flags[i, j]:
                missed += 1
    length = math.hypot(1, 1 - rho)
    bound = 3 * length * h
    ok = missed == 0 and scan.irregular_fraction <= bound
    return ok, f"missed {missed} crossed cells, fraction {scan.irregular_fraction:.4f} <= {bound:.4f}"


def criterion_11():
    rep = esc_scan(generate_selfsimilar(fixtures.cantor(exact=True)), 8, mode="rational")
    exact = all(rep.min_distance(n) == Fraction(2, 3 ** n) for n in range(1, 9))
    dup = esc_scan(SelfSimilarIFS((SimilarityMap(0.5, 0), SimilarityMap(0.5, 0))), 2, mode="rational")
    witness = any(n == 1 for n, _, _ in dup.zero_witnesses) and dup.min_distance(1) == 0
    return exact and witness, f"exact distances {exact}, duplicate witness {dup.zero_witnesses[:1]}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


def _line(n, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"


@pytest.mark.parametrize("n", range(1, 12))
def test_criterion(n, capsys):
    ok, detail = CRITERIA[n - 1]()
    with capsys.disabled():
        print("\n" + _line(n, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for n, crit in enumerate(CRITERIA, 1):
        ok, detail = crit()
        failures += not ok
        print(_line(n, ok, detail))
    sys.exit(1 if failures else 0)
