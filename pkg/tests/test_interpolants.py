from __future__ import annotations

import numpy as np
import pytest

from conftest import bisection_root
from isomarch.interpolants import (
    WENO_GAMMAS,
    CrossingSolution,
    DegenerateEdgeError,
    EdgeStencil,
    Method,
    NoCrossingError,
    TricubicCell,
    TrilinearCell,
    cubic_basis_weights,
    cubic_crossing,
    cubic_real_roots,
    divided_difference,
    linear_crossing,
    solve_crossing,
    weno_crossing,
    weno_smoothness,
)

RNG = np.random.default_rng(20260308)


def test_linear_crossing_basic():
    sol = linear_crossing(0.0, 1.0, 0.25)
    assert sol.alpha == pytest.approx(0.25)
    assert sol.valid and sol.method is Method.LINEAR


def test_linear_crossing_clips_and_rejects():
    assert linear_crossing(0.0, 1.0, 1.0).alpha == 1.0
    with pytest.raises(NoCrossingError):
        linear_crossing(0.2, 0.9, 0.1)
    with pytest.raises(DegenerateEdgeError):
        linear_crossing(0.5, 0.5, 0.5)


def test_linear_crossing_random_sweep_matches_algebra():
    for _ in range(200):
        f0, f1 = sorted(RNG.uniform(-2, 2, size=2))
        if f1 - f0 < 1e-9:
            continue
        k = RNG.uniform(f0, f1)
        sol = linear_crossing(f0, f1, k)
        assert sol.alpha == pytest.approx((k - f0) / (f1 - f0), abs=1e-15)


def _cubic_samples(coeffs, ts):
    return [float(np.polyval(coeffs[::-1], t)) for t in ts]


def test_cubic_crossing_exact_on_cubics():
    # the 4-point interpolant reproduces cubics exactly, so the solved
    # crossing must match a bisection root of the polynomial itself
    for _ in range(60):
        coeffs = RNG.uniform(-1, 1, size=4)
        vals = _cubic_samples(coeffs, [-1.0, 0.0, 1.0, 2.0])
        f0, f1 = vals[1], vals[2]
        if (f0 - 0.0) * (f1 - 0.0) >= 0:
            continue
        k = 0.0
        sol = cubic_crossing(EdgeStencil(tuple(vals), 1.0), k)
        root = bisection_root(lambda t: float(np.polyval(coeffs[::-1], t)), 0.0, 1.0)
        assert sol.alpha == pytest.approx(root, abs=1e-9)
        assert sol.valid


def test_cubic_crossing_falls_back_when_no_window_root():
    # values straddle k linearly but the quartic-free cubic may wiggle; with a
    # flat stencil the interpolant is linear and must agree with the linear rule
    sol = cubic_crossing(EdgeStencil((0.0, 0.0, 1.0, 1.0), 1.0), 0.5)
    assert 0.0 <= sol.alpha <= 1.0


def test_median_root_rule_picks_lower_median():
    # craft a cubic with three roots inside (0,1): roots at .2, .5, .8
    r = np.array([0.2, 0.5, 0.8])
    coeffs = np.poly(r)[::-1]  # ascending
    vals = _cubic_samples(coeffs[::-1][::-1], [-1.0, 0.0, 1.0, 2.0])
    vals = [float(np.polyval(np.poly(r), t)) for t in [-1.0, 0.0, 1.0, 2.0]]
    sol = cubic_crossing(EdgeStencil(tuple(vals), 1.0), 0.0)
    assert sol.alpha == pytest.approx(0.5, abs=1e-9)


def test_cubic_real_roots_against_numpy():
    for _ in range(120):
        c = RNG.uniform(-2, 2, size=4)
        if abs(c[3]) < 1e-3:
            c[3] = 1.0
        mine = sorted(cubic_real_roots(*c))
        ref = sorted(
            float(r.real) for r in np.roots(c[::-1]) if abs(r.imag) < 1e-8
        )
        assert len(mine) == len(ref)
        for a, b in zip(mine, ref):
            assert a == pytest.approx(b, abs=1e-7)


def test_divided_difference_on_quadratic():
    pts = [(0.0, 0.0), (1.0, 1.0), (2.0, 4.0)]
    assert divided_difference(pts) == pytest.approx(1.0)  # f[x0,x1,x2] = a2


def test_weno_crossing_matches_bisection_on_smooth_data():
    fn = lambda t: np.sin(0.8 * t + 0.3)  # noqa: E731
    checked = 0
    for k in np.linspace(0.31, 0.46, 7):
        errs = []
        for h in (0.25, 0.125):
            vals = [fn(h * (i - 2)) for i in range(5)]
            if (vals[2] - k) * (vals[3] - k) >= 0:
                break
            sol, _ = weno_crossing(vals, h, float(k))
            root_t = bisection_root(lambda t: fn(h * t) - k, 0.0, 1.0)
            assert sol.valid
            assert sol.alpha == pytest.approx(root_t, abs=5e-4)
            errs.append(abs(sol.alpha - root_t))
        if len(errs) == 2 and errs[0] > 1e-12:
            # halving h must shrink the parametric error at least 8x
            assert errs[1] < errs[0] / 8
            checked += 1
    assert checked >= 3


def test_weno_diagnostics_on_linear_data():
    vals = [1.0, 2.0, 3.0, 4.0, 5.0]
    sol, diag = weno_crossing(vals, 1.0, 3.5)
    assert sol.alpha == pytest.approx(0.5, abs=1e-12)
    # equal smoothness on linear data -> the published ideal weights exactly
    assert diag.weights == pytest.approx(WENO_GAMMAS, abs=1e-10)
    assert diag.betas[0] == diag.betas[1] == diag.betas[2]


def test_weno_weights_partition_of_unity_sweep():
    total = 0
    for _ in range(2000):
        vals = RNG.uniform(-3, 3, size=5)
        if (vals[2] - 0.0) * (vals[3] - 0.0) >= 0:
            continue
        _, diag = weno_crossing(list(vals), 1.0, 0.0)
        w = np.asarray(diag.weights)
        assert np.all(w >= 0)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        total += 1
    assert total > 400


def test_weno_smoothness_equal_on_linear_unequal_on_kinks():
    lin = weno_smoothness([0.0, 1.0, 2.0, 3.0, 4.0])
    assert lin[0] == lin[1] == lin[2]
    # a kink at the left end must raise the left substencil's indicator only
    kinked = weno_smoothness([5.0, 1.0, 2.0, 3.0, 4.0])
    assert kinked[0] > kinked[2]
    assert kinked[2] == lin[2]


def test_solve_crossing_dispatch():
    vals = [0.0, 1.0, 2.0, 3.0, 4.0]
    for method in Method:
        sol = solve_crossing(method, vals, 1.0, 2.5)
        assert isinstance(sol, CrossingSolution)
        assert sol.alpha == pytest.approx(0.5, abs=1e-12)
        assert sol.method is method


def test_cubic_basis_weights_cardinal():
    # exact Kronecker behavior at the lattice nodes
    for i, t in enumerate([-1.0, 0.0, 1.0, 2.0]):
        w = cubic_basis_weights(t)
        expected = np.zeros(4)
        expected[i] = 1.0
        assert np.array_equal(w, expected)


def test_tricubic_reproduces_trilinear_field():
    # a trilinear polynomial lies in the tricubic space: interpolation is exact
    coords = np.arange(-1.0, 3.0)
    xx, yy, zz = np.meshgrid(coords, coords, coords, indexing="ij")
    fn = lambda x, y, z: 2.0 + x - 0.5 * y + 0.25 * z + 0.1 * x * y * z  # noqa: E731
    cell = TricubicCell(fn(xx, yy, zz))
    for _ in range(50):
        u, v, w = RNG.uniform(0, 1, size=3)
        assert cell.eval(u, v, w) == pytest.approx(fn(u, v, w), abs=1e-12)


def test_tricubic_lattice_matches_eval():
    rng = np.random.default_rng(5)
    cell = TricubicCell(rng.normal(size=(4, 4, 4)))
    s = 4
    lat = cell.lattice(s)
    for i in range(s + 1):
        for j in range(s + 1):
            for kk in range(s + 1):
                assert lat[i, j, kk] == pytest.approx(
                    cell.eval(i / s, j / s, kk / s), abs=1e-12
                )


def test_tricubic_line_coeffs_match_eval():
    rng = np.random.default_rng(11)
    cell = TricubicCell(rng.normal(size=(4, 4, 4)))
    coeffs = cell.line_coeffs(0, 0.3, 0.7)  # x varies; y=0.3, z=0.7
    for t in np.linspace(0, 1, 9):
        direct = cell.eval(t, 0.3, 0.7)
        poly = float(np.polyval(coeffs[::-1], t))
        assert poly == pytest.approx(direct, abs=1e-12)


def test_trilinear_cell_matches_manual_blend():
    rng = np.random.default_rng(3)
    corners = rng.normal(size=(2, 2, 2))
    cell = TrilinearCell(corners)
    for _ in range(20):
        u, v, w = RNG.uniform(0, 1, size=3)
        manual = 0.0
        for i in range(2):
            for j in range(2):
                for kk in range(2):
                    wt = ((1 - u, u)[i]) * ((1 - v, v)[j]) * ((1 - w, w)[kk])
                    manual += wt * corners[i, j, kk]
        assert cell.eval(u, v, w) == pytest.approx(manual, abs=1e-13)


def test_crossing_orders_on_dyadic_refinement():
    # compact convergence check; the acceptance suite fits full slopes
    fn = np.sin
    errs = {m: [] for m in Method}
    hs = [0.4, 0.2, 0.1]
    k = 0.42
    root = bisection_root(lambda x: fn(x) - k, 0.0, 1.0)
    for h in hs:
        base = root - 0.37 * h  # place the crossing mid-edge, not on a node
        for m in Method:
            vals = [fn(base + (i - 2) * h) for i in range(5)]
            sol = solve_crossing(m, vals, h, k)
            x_hat = base + sol.alpha * h
            errs[m].append(abs(x_hat - root))
    for m, seq in errs.items():
        assert seq[0] > seq[-1], f"{m} did not converge"
    # linear halves the error per level at best quadratically
    assert errs[Method.LINEAR][-1] < errs[Method.LINEAR][0] / 4
    assert errs[Method.WENO][-1] < errs[Method.CUBIC][0]
