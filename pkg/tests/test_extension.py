from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import kv

from conftest import band_limited
from fraclap import make_params
from fraclap import extension as ext
from fraclap.spectral import GridFunction, frac_laplacian_spectral


def bessel_profile(y, k, g):
    """Decaying solution of the mode equation with U(0) = 1."""
    t = k * np.asarray(y, dtype=float)
    return 2 ** (1 - g) / math.gamma(g) * t**g * kv(g, t)


def test_bessel_oracle_solves_the_mode_equation():
    k, g = 2.0, 0.25
    a = 1 - 2 * g
    y = np.linspace(0.2, 3.0, 2001)
    h = y[1] - y[0]
    U = bessel_profile(y, k, g)
    mid = 0.5 * (y[1:] + y[:-1])
    flux = mid**a * np.diff(U) / h
    lhs = np.diff(flux) / h
    rhs = y[1:-1] ** a * k**2 * U[1:-1]
    assert np.max(np.abs(lhs - rhs)) < 1e-5
    assert bessel_profile(1e-12, k, g) == pytest.approx(1.0, abs=1e-5)


def test_mesh_contract():
    mesh = ext.GradedMesh(8.0, 64, 3.0)
    y = mesh.nodes
    assert y[0] == 0 and y[-1] == 8.0 and np.all(np.diff(y) > 0)
    for bad in (dict(Y=-1.0, N=64), dict(Y=1.0, N=8), dict(Y=1.0, N=64, p=0.5)):
        with pytest.raises(ValueError):
            ext.GradedMesh(**bad)


def test_zero_frequency_is_constant():
    params = make_params(2, 0.3)
    prof = ext.solve_mode(0.0, params, ext.GradedMesh(8.0, 64))
    assert np.all(prof.values == 1.0)
    assert ext.dtn_extract(prof).p_gamma_value == 0.0


def test_half_gives_exponential():
    params = make_params(2, 0.5)
    prof = ext.solve_mode(1.0, params, ext.GradedMesh(20.0, 4096, 2.0))
    assert np.max(np.abs(prof.values - np.exp(-prof.y))) <= 1e-6


def test_bessel_profile():
    params = make_params(2, 0.25)
    mesh = ext.GradedMesh.for_mode(2.0, params, 4096, far_field=20.0)
    prof = ext.solve_mode(2.0, params, mesh)
    y = prof.y[1:]
    assert np.max(np.abs(prof.values[1:] - bessel_profile(y, 2.0, 0.25))) <= 1e-5


def test_short_far_field_warns():
    params = make_params(2, 0.3)
    with pytest.warns(RuntimeWarning, match="far-field"):
        ext.solve_mode(1.0, params, ext.GradedMesh(2.0, 256))


@pytest.mark.parametrize("k", [1.0, 2.0, 3.0])
def test_profile_positive_and_decreasing(k):
    params = make_params(2, 0.4)
    prof = ext.solve_mode(k, params, ext.GradedMesh.for_mode(k, params, 1024))
    assert np.all(prof.values[:-1] > 0)
    assert np.all(np.diff(prof.values) < 0)


@pytest.mark.parametrize("g, k", [(0.5, 1.0), (0.25, 2.0), (0.1, 3.0)])
def test_direct_extraction(g, k):
    params = make_params(2, g)
    prof = ext.solve_mode(k, params, ext.GradedMesh.for_mode(k, params, 4096))
    r = ext.dtn_extract(prof)
    assert r.p_gamma_value == pytest.approx(k ** (2 * g), rel=1e-3)
    assert r.p_gamma_value == pytest.approx(params.d_gamma / (2 * g) * r.limit_value, rel=1e-14)
    assert r.sign == 1


def test_direct_path_rejects_large_gamma():
    params = make_params(3, 1.25)
    prof = ext.solve_mode(1.0, params, ext.GradedMesh.for_mode(1.0, params, 256))
    with pytest.raises(ValueError):
        ext.dtn_extract(prof)


def test_iterated_extraction_and_arbiter():
    params = make_params(3, 1.25)
    prof = ext.solve_mode(2.0, params, ext.GradedMesh.for_mode(2.0, params, 8192))
    proof = ext.dtn_iterated_extract(prof)
    stated = ext.dtn_iterated_extract(prof, convention="stated")
    assert proof.p_gamma_value == pytest.approx(5.656854, rel=1e-2)
    assert abs(stated.p_gamma_value - 5.656854) / 5.656854 > 1e-2


def test_iterated_zero_frequency_and_guards():
    params = make_params(3, 1.25)
    prof = ext.solve_mode(0.0, params, ext.GradedMesh(8.0, 64))
    assert ext.dtn_iterated_extract(prof).p_gamma_value == 0.0
    low = ext.solve_mode(0.0, make_params(3, 0.25), ext.GradedMesh(8.0, 64))
    with pytest.raises(ValueError):
        ext.dtn_iterated_extract(low)
    with pytest.raises(Exception):
        make_params(3, 1.5 + 1e-9)


def test_higher_ladder():
    params = make_params(7, 2.5)
    prof = ext.solve_mode(1.5, params, ext.GradedMesh.for_mode(1.5, params, 8192))
    assert ext.extract(prof).p_gamma_value == pytest.approx(1.5**5, rel=1e-3)


def test_downshift():
    pm, pm1 = make_params(3, 1.25), make_params(3, 0.25)
    mesh = ext.GradedMesh(20.0, 8192, ext.default_grading(pm1))
    rep = ext.check_downshift(ext.solve_mode(1.0, pm, mesh), ext.solve_mode(1.0, pm1, mesh))
    assert rep.first_order <= 1e-4
    assert rep.second_order <= 1e-4
    assert rep.ladder_corrected <= 1e-3
    # the step without the (1 + a_m) factor is off by a factor -1/(1 + a_m) = 2
    assert rep.ladder_stated == pytest.approx(3.0, rel=1e-3)


def test_downshift_guards():
    pm, pm1 = make_params(3, 1.25), make_params(3, 0.25)
    m1, m2 = ext.GradedMesh(8.0, 64), ext.GradedMesh(8.0, 128)
    zero = ext.check_downshift(ext.solve_mode(0.0, pm, m1), ext.solve_mode(0.0, pm1, m1))
    assert (zero.first_order, zero.second_order) == (0.0, 0.0)
    with pytest.raises(ValueError):
        ext.check_downshift(ext.solve_mode(1.0, pm, m1), ext.solve_mode(1.0, pm1, m2))


def test_constant_datum_maps_to_zero():
    f = GridFunction(np.ones(32), (2 * np.pi,))
    assert np.max(np.abs(ext.apply_p_gamma(f, make_params(1, 0.3)).values)) < 1e-14


def test_cosine_datum():
    f = GridFunction.from_function(lambda x: np.cos(3 * x), 64, 2 * np.pi)
    out = ext.apply_p_gamma(f, make_params(1, 0.4)).values
    assert np.max(np.abs(out - 2.40822 * f.values)) <= 1e-3 * 2.40822


def test_band_limited_matches_spectral(rng):
    f = band_limited(rng, (32, 32), (2 * np.pi, 2 * np.pi), kmax=3)
    params = make_params(2, 0.3)
    est = ext.apply_p_gamma(f, params, nodes=2048).values
    ref = frac_laplacian_spectral(f, 0.3).values
    assert np.linalg.norm(est - ref) / np.linalg.norm(ref) <= 1e-3


@settings(max_examples=10, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_extraction_is_linear(alpha, beta):
    rng = np.random.default_rng(5)
    f1, f2 = band_limited(rng, (32,), kmax=4), band_limited(rng, (32,), kmax=4)
    params = make_params(1, 0.3)
    P = lambda f: ext.apply_p_gamma(f, params, nodes=512).values
    lhs = P(alpha * f1 + beta * f2)
    rhs = alpha * P(f1) + beta * P(f2)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(rhs)))


def narrow_bump(points=512, width=0.15):
    return GridFunction.from_function(lambda x: np.exp(-((x - np.pi) / width) ** 2),
                                      points, 2 * np.pi)


def test_poisson_kernel_agrees():
    rep = ext.poisson_kernel_compare(narrow_bump(), 0.5, 0.1)
    assert rep.discrepancy <= 1e-2


def test_poisson_kernel_has_unit_mass():
    from scipy.integrate import quad
    for g in (0.25, 0.5, 0.75):
        mass, _ = quad(lambda x: ext.poisson_kernel(np.array(x), 0.3, g), -np.inf, np.inf)
        assert mass == pytest.approx(1.0, rel=1e-8)


def test_poisson_trivial_cases():
    zero = GridFunction(np.zeros(64), (2 * np.pi,))
    rep = ext.poisson_kernel_compare(zero, 0.5, 0.1)
    assert np.all(rep.synthesis == 0) and np.all(rep.quadrature == 0)
    mean_free = GridFunction.from_function(
        lambda x: np.exp(-((x - np.pi) / 0.3) ** 2) * np.sin(3 * (x - np.pi)), 256, 2 * np.pi)
    near = ext.poisson_kernel_compare(mean_free, 0.5, 0.1)
    far = ext.poisson_kernel_compare(mean_free, 0.5, 8.0)
    scale = np.max(np.abs(near.synthesis))
    assert np.max(np.abs(far.synthesis)) < 1e-3 * scale
    assert np.max(np.abs(far.quadrature)) < 1e-3 * scale


def test_poisson_rejects_edge_support():
    f = GridFunction.from_function(lambda x: np.exp(-(x / 0.3) ** 2), 256, 2 * np.pi)
    with pytest.raises(ValueError):
        ext.poisson_kernel_compare(f, 0.5, 0.1)


def test_convergence_csv_is_versioned():
    rows = ext.convergence_study(make_params(2, 0.25), 1.0, (256, 512, 1024))
    text = ext.convergence_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "# fraclap-convergence v1"
    assert lines[1] == ",".join(ext.CONVERGENCE_COLUMNS)
    assert len(lines) == 5
    assert rows[-1].observed_order >= 1
