"""Acceptance criteria, one PASS/FAIL line each.

Oracle values are frozen below; each was computed independently of the
package (mpmath for gamma-function constants, closed-form multipliers for
the multiplier side).
"""

from __future__ import annotations

import math
import time

import mpmath
import numpy as np
import pytest

from conftest import band_limited
from fraclap import descend_ladder, make_params
from fraclap import extension as ext
from fraclap.fracparams import ladder_defect
from fraclap.jets.geometry import WarpedModel, compute_E, solve_constant_scalar, einstein_closed_form
from fraclap.jets.scatter import (E_at_special, ScatterSeries, curved_dtn, curved_dtn_iterated,
                                  general_boundary_dtn, special_defining_function)
from fraclap.jets.series import GradedSeries
from fraclap.spectral import (GridFunction, frac_laplacian_composed, frac_laplacian_singular,
                              frac_laplacian_spectral)

# frozen oracles
TWO_POW_2_5 = 5.656854249492381      # 2^2.5
C1A1_AT_1_25 = -1.25                 # 2 gamma (2 - 2 gamma) at gamma = 5/4
D_HALF = -1.0                        # 4^(1/2) Gamma(1/2) / Gamma(-1/2)

RESULTS: list[str] = []


def report(criterion: int, *parts) -> bool:
    """Print one line for a criterion; each part is ``(label, value, tol[, passed])``."""
    ok, shown = True, []
    for label, value, tol, *flag in parts:
        passed = bool(value <= tol) if not flag else bool(flag[0])
        ok &= passed
        shown.append(f"{label} value={value:.3e} tol={tol:.1e}")
    line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: " + "; ".join(shown)
    RESULTS.append(line)
    print(line)
    return ok


def test_frozen_oracles():
    assert float(mpmath.mpf(2) ** 2.5) == pytest.approx(TWO_POW_2_5, rel=1e-15)
    d = lambda g: mpmath.mpf(4) ** g * mpmath.gamma(g) / mpmath.gamma(-g)
    g = mpmath.mpf(5) / 4
    assert float(d(g) / d(g - 1)) == pytest.approx(C1A1_AT_1_25, rel=1e-15)
    assert float(d(mpmath.mpf(1) / 2)) == pytest.approx(D_HALF, rel=1e-15)


def test_criterion_1_extension_equivalence():
    start = time.perf_counter()
    f = GridFunction.from_function(lambda x: np.cos(x) + np.cos(2 * x) + np.cos(3 * x), 32, 2 * np.pi)
    worst_err, worst_order = 0.0, math.inf
    for g in (0.1, 0.25, 0.4):
        params = make_params(1, g)
        estimates = {}
        for N in (1024, 2048, 4096):
            sol = ext.solve_extension(f, params, nodes=N)
            estimates[N] = {k: sol.multiplier(k) for k in (1, 2, 3)}
            if N == 4096:
                exact = frac_laplacian_spectral(f, g).values
                assert np.max(np.abs(sol.output.values - exact)) <= 1e-3 * np.max(np.abs(exact))
        for k in (1, 2, 3):
            e1, e2, e3 = (estimates[N][k] for N in (1024, 2048, 4096))
            worst_err = max(worst_err, abs(abs(e3) - k ** (2 * g)) / k ** (2 * g))
            worst_order = min(worst_order, math.log2(abs(e1 - e2) / abs(e2 - e3)))
    elapsed = time.perf_counter() - start
    assert report(1, ("rel err at N=4096", worst_err, 1e-3),
                  ("min observed order", worst_order, 1.0, worst_order >= 1.0),
                  ("runtime s", elapsed, 30.0))


def test_criterion_2_iterated_formula():
    params = make_params(3, 1.25)
    worst, stated_best = 0.0, math.inf
    for k in (1.0, 2.0):
        prof = ext.solve_mode(k, params, ext.GradedMesh.for_mode(k, params, 8192))
        exact = k**2.5
        if k == 2.0:
            assert exact == pytest.approx(TWO_POW_2_5, rel=1e-15)
        worst = max(worst, abs(ext.dtn_iterated_extract(prof).p_gamma_value - exact) / exact)
        stated = ext.dtn_iterated_extract(prof, convention="stated").p_gamma_value
        stated_best = min(stated_best, abs(stated - exact) / exact)
    assert report(2, ("iterated rel err, A_m includes gamma", worst, 1e-2),
                  ("stated A_m convention misses by", stated_best, 1e-2, stated_best > 1e-2))


def test_criterion_3_downshift():
    pm, pm1 = make_params(3, 1.25), make_params(3, 0.25)
    mesh = ext.GradedMesh(20.0, 8192, ext.default_grading(pm1))
    rep = ext.check_downshift(ext.solve_mode(1.0, pm, mesh), ext.solve_mode(1.0, pm1, mesh))
    worst = max(rep.first_order, rep.second_order)
    assert report(3, ("downshift residual max", worst, 1e-4))


def test_criterion_4_ladder_constants():
    rng = np.random.default_rng(4)
    worst = 0.0
    for m in (1, 2):
        for g in m + rng.uniform(0.01, 0.99, size=50):
            worst = max(worst, ladder_defect(make_params(7, g)))
    p = make_params(7, 1.25)
    spot = abs(p.c_m * p.A_m - C1A1_AT_1_25)
    assert report(4, ("c_m A_m = d_g/d_g0 over 100 samples", worst, 1e-10),
                  ("c_1 A_1 spot value at 1.25", spot, 1e-12))


def test_criterion_5_composition():
    rng = np.random.default_rng(5)
    worst = 0.0
    for gamma, n in ((1.3, 3), (2.6, 6), (1.75, 4)):
        for sizes in ((128,), (32, 32), (16, 16, 16)):
            f = band_limited(rng, sizes, (2 * np.pi,) * len(sizes), kmax=5)
            a = frac_laplacian_composed(f, make_params(n, gamma)).values
            b = frac_laplacian_spectral(f, gamma).values
            worst = max(worst, np.max(np.abs(a - b)) / np.max(np.abs(b)))
    assert report(5, ("composed vs spectral", worst, 1e-12))


def test_criterion_6_singular_integral():
    f = GridFunction.from_function(lambda x: np.exp(-((x - np.pi) / 0.5) ** 2), 512, 2 * np.pi)
    ref = frac_laplacian_spectral(f, 0.5).values
    est = frac_laplacian_singular(f, 0.5, image_radius=64).values
    err = float(np.linalg.norm(est - ref) / np.linalg.norm(ref))
    assert report(6, ("singular integral L2 rel err", err, 1e-2))


def _criterion_7_checks(rng):
    checks = {}
    tol = 1e-12

    def track(name, value):
        checks[name] = max(checks.get(name, 0.0), float(value))

    for g in (0.3, 0.4):
        n = 3
        params = make_params(n, g)
        hyp = WarpedModel.hyperbolic(n, g)
        for form in ("Error", "E1"):
            track(f"E=0 hyperbolic {form}", compute_E(hyp, GradedSeries.variable(g), params, form).scale())
        for _ in range(5):
            model = WarpedModel.from_coefficients(n, g, [1, 0, rng.uniform(-1, 1), 0, rng.uniform(-1, 1)], 6.0)
            E = compute_E(model, GradedSeries.variable(g, 7.0), params, "Error", "einstein")
            track("E closed form", (E - einstein_closed_form(model, params)).scale())
            S = ScatterSeries.random(params, rng)
            rho = special_defining_function(S, params)
            track("rho* coefficient", abs(rho.coefficient_at(1 + 2 * g) - S.h_tilde / (n - params.s)))
            cs = solve_constant_scalar(0.0, params, 8, resonant=rng.uniform(-1, 1))
            solved = ScatterSeries.from_model(cs, params, *rng.uniform(-1, 1, 3), trunc=5.0)
            track("E(rho*) = 0", E_at_special(cs, solved, params).scale())
            r = curved_dtn(S, params)
            track("curved limit", abs(r.limit - 2 * g * (S.h - S.f * S.h_tilde)))
            track("curved P = d h", r.defect)
            one = curved_dtn(ScatterSeries(params, S.Ft, S.Ht, S.Ft, S.Ht), params)
            track("P 1 = Q", abs(one.p_gamma_f - one.q_gamma))

    model = WarpedModel.from_coefficients(2, 0.5, [1.0, 0.0, 0.1], 6.0)
    E = compute_E(model, GradedSeries.variable(0.5, 7.0), make_params(2, 0.5), "Error", "einstein")
    track("lim E/y^a = -0.2", abs(E.mul_monomial(-2.0).limit_at_zero() + 0.2))

    for n, g in ((3, 1.25), (7, 2.5)):
        params = make_params(n, g)
        for _ in range(5):
            r = curved_dtn_iterated(ScatterSeries.random(params, rng), params)
            track(f"Lim identity m={params.m}", max(abs(r.lim - r.expected_lim), r.defect))
        h = rng.uniform(-1, 1)
        track(f"relation-1 m={params.m}", abs(descend_ladder(params, h) - params.A_m * params.c_m * h))

    n, psi0 = 3, 0.2
    p = make_params(n, 0.3)
    S = ScatterSeries.random(p, rng)
    r = general_boundary_dtn(S, psi0, p)
    track("trichotomy gamma<1/2", abs(r.limit - 2 * 0.3 * S.h))
    p = make_params(n, 0.5)
    S = ScatterSeries.random(p, rng)
    r = general_boundary_dtn(S, psi0, p)
    track("d_1/2 = -1", abs(r.d_gamma - D_HALF))
    track("trichotomy gamma=1/2", abs(r.limit - (S.h + (n - 1) / 2 * psi0 * S.f)))
    p = make_params(n, 0.75)
    S = ScatterSeries.random(p, rng)
    r = general_boundary_dtn(S, psi0, p)
    track("divergence detected gamma=0.75", 0.0 if not r.limit_exists else 1.0)
    track("divergent coefficient", abs(r.divergent_coefficient + (p.s - p.n) * psi0 * S.f))
    return checks, tol


def test_criterion_7_jets_identities():
    checks, tol = _criterion_7_checks(np.random.default_rng(7))
    worst_name = max(checks, key=checks.get)
    ok = report(7, (f"{len(checks)} identities, worst '{worst_name}'", checks[worst_name], tol))
    assert ok, {k: v for k, v in checks.items() if v > tol}


def test_criterion_8_dilation():
    rng = np.random.default_rng(8)
    N = 256
    worst = 0.0
    for lam in (2, 4):
        for g in (0.3, 0.8, 1.6):
            f = band_limited(rng, (N,), kmax=N // (2 * lam) - 2)
            # f_lam(x) = f(lam x) samples f at the grid indices lam*j mod N
            idx = (lam * np.arange(N)) % N
            f_lam = f.with_values(f.values[idx])
            lhs = frac_laplacian_spectral(f_lam, g).values
            rhs = lam ** (2 * g) * frac_laplacian_spectral(f, g).values[idx]
            worst = max(worst, np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))
    assert report(8, ("dilation covariance", worst, 1e-10))
