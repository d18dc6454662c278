"""Scattering expansions and the curved Dirichlet-to-Neumann identities.

A solution of ``-Lap_+ u - s(n-s) u = 0`` expands as
``u = y^(n-s) (F + y^(2 gamma) H)`` with ``F(0) = f`` and ``H(0) = h``; the
companion ``v`` with datum 1 has coefficients ``Ft, Ht`` and ``Ht(0) = h~``.
Then ``P_gamma f = d_gamma h`` and ``Q_gamma = d_gamma h~``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fraclap.fracparams import FracParams, d_gamma
from fraclap.jets.geometry import WarpedModel, compute_E, defining_relations
from fraclap.jets.series import (EXP_TOL, DivergentLimit, GradedSeries, TruncationError,
                                 invert_defining)


def default_trunc(params: FracParams) -> float:
    return 4.0 + 4.0 * params.gamma


def _y2g(g: float) -> GradedSeries:
    return GradedSeries.monomial(g, 1.0, 0, 1)


@dataclass(frozen=True, eq=False)
class ScatterSeries:
    params: FracParams
    F: GradedSeries
    H: GradedSeries
    Ft: GradedSeries
    Ht: GradedSeries

    def __post_init__(self):
        if abs(self.Ft.coefficient_at(0.0) - 1.0) > 1e-14:
            raise ValueError("companion datum must be 1")

    @property
    def f(self) -> float:
        return self.F.coefficient_at(0.0)

    @property
    def h(self) -> float:
        return self.H.coefficient_at(0.0)

    @property
    def h_tilde(self) -> float:
        return self.Ht.coefficient_at(0.0)

    def U(self) -> GradedSeries:
        """``y^(s-n) u = F + y^(2 gamma) H``."""
        return self.F + self.H * _y2g(self.params.gamma)

    def V(self) -> GradedSeries:
        return self.Ft + self.Ht * _y2g(self.params.gamma)

    def u(self) -> GradedSeries:
        return self.U().mul_monomial(self.params.n - self.params.s)

    def v(self) -> GradedSeries:
        return self.V().mul_monomial(self.params.n - self.params.s)

    @classmethod
    def random(cls, params: FracParams, rng: np.random.Generator, trunc: float | None = None, *,
               f: float | None = None, h: float | None = None, h_tilde: float | None = None,
               even: bool = True) -> "ScatterSeries":
        """Blocks with coefficients drawn uniformly from [-1, 1]."""
        g = params.gamma
        T = default_trunc(params) if trunc is None else trunc
        step = 2 if even else 1

        def block(lead, limit):
            terms = {(0, 0): rng.uniform(-1, 1) if lead is None else lead}
            for p in range(step, int(math.ceil(limit)) + 1, step):
                terms[(p, 0)] = rng.uniform(-1, 1)
            return GradedSeries(g, terms, limit)

        return cls(params, block(f, T), block(h, T - 2 * g), block(1.0, T), block(h_tilde, T - 2 * g))

    @classmethod
    def from_model(cls, model: WarpedModel, params: FracParams, f: float, h: float,
                   h_tilde: float, trunc: float | None = None) -> "ScatterSeries":
        T = default_trunc(params) if trunc is None else trunc
        F, H = solve_eigen_series(model, params, f, h, T)
        Ft, Ht = solve_eigen_series(model, params, 1.0, h_tilde, T)
        return cls(params, F, H, Ft, Ht)


def eigen_residual(model: WarpedModel, params: FracParams, U: GradedSeries) -> GradedSeries:
    """``Lap_+ u + s(n-s) u`` for ``u = y^(n-s) U``."""
    u = U.mul_monomial(params.n - params.s)
    return model.laplacian_plus(u) + u * (params.s * (params.n - params.s))


def solve_eigen_series(model: WarpedModel, params: FracParams, f: float, h: float,
                       trunc: float) -> tuple[GradedSeries, GradedSeries]:
    """Frobenius solve for ``F, H`` given the free data ``f`` and ``h``.

    A term ``y^e`` of ``U`` enters the residual at ``y^(n-s+e)`` with factor
    ``P = e (e - 2 gamma)``; the coefficient is ``-residual / P``.  Where ``P``
    vanishes the coefficient is free (the ``h`` slot) and the residual must be
    zero, otherwise a logarithmic term would be required.
    """
    g, n, s = params.gamma, params.n, params.s
    keys = [(p, 0) for p in range(1, int(math.ceil(trunc)) + 1) if p < trunc - EXP_TOL]
    keys += [(p, 1) for p in range(1, int(math.ceil(trunc)) + 1) if p + 2 * g < trunc - EXP_TOL]
    keys.sort(key=lambda k: (k[0] + 2 * g * k[1], -k[1]))
    F = {(0, 0): float(f)}
    H = {(0, 0): float(h)}

    def build():
        Fs = GradedSeries(g, F, trunc)
        Hs = GradedSeries(g, H, trunc - 2 * g)
        return Fs, Hs

    seen = [0.0, 2 * g]
    for key in keys:
        e = key[0] + 2 * g * key[1]
        if any(abs(e - x) <= EXP_TOL for x in seen):
            continue
        seen.append(e)
        Fs, Hs = build()
        U = Fs + Hs * _y2g(g)
        res = eigen_residual(model, params, U).coefficient_at(n - s + e)
        P = e * (e - 2 * g)
        if abs(P) < 1e-12:
            if abs(res) > 1e-10:
                raise ArithmeticError(f"resonance at y^{e:g} with residual {res:.3g}: log term needed")
            continue
        target = F if key[1] == 0 else H
        target[(key[0], 0)] = -res / P
    return build()


# -- special defining function ------------------------------------------------------


def special_defining_function(scatter: ScatterSeries, params: FracParams) -> GradedSeries:
    """``rho* = v^(1/(n-s))`` as a series in y."""
    V = scatter.V()
    if abs(V.coefficient_at(0.0) - 1.0) > 1e-14:
        raise ValueError("companion v must have datum 1")
    return V.real_power(1.0 / (params.n - params.s)).mul_monomial(1.0)


@dataclass(frozen=True, eq=False)
class GStarFactors:
    normal: GradedSeries       # coefficient of (d rho*)^2, as a series in rho*
    tangential: GradedSeries   # coefficient of g_flat, as a series in rho*


def g_star_factors(rho_star: GradedSeries, model: WarpedModel) -> GStarFactors:
    """``g* = (rho*)^2 g+`` written as ``N (d rho*)^2 + T g_flat``."""
    Y = invert_defining(rho_star)                      # y as a series in rho*
    ratio = Y.mul_monomial(-1.0).reframed(0.0).reciprocal()   # rho*/y
    dY = Y.derivative().reframed(0.0)
    w = model.w.substitute(Y.mul_monomial(-1.0))
    normal = ratio * ratio * dY * dY
    tangential = ratio * ratio * w * w
    return GStarFactors(normal.reframed(0.0), tangential.reframed(0.0))


def E_at_special(model: WarpedModel, scatter: ScatterSeries, params: FracParams) -> GradedSeries:
    return compute_E(model, special_defining_function(scatter, params), params, "E1")


# -- Dirichlet-to-Neumann identities ------------------------------------------------


@dataclass(frozen=True)
class CurvedDtn:
    limit: float              # lim y^a dU/dy
    limit_rho_star: float     # lim (rho*)^a dU/d rho*
    expected_limit: float     # 2 gamma (h - f h~)
    p_gamma_f: float          # d_gamma/(2 gamma) limit + f Q
    q_gamma: float            # d_gamma h~
    d_gamma_h: float

    @property
    def defect(self) -> float:
        return abs(self.p_gamma_f - self.d_gamma_h)


def _quotient(scatter: ScatterSeries) -> GradedSeries:
    return scatter.U() * scatter.V().reciprocal()


def curved_dtn(scatter: ScatterSeries, params: FracParams) -> CurvedDtn:
    g = params.gamma
    if not 0 < g < 1:
        raise ValueError(f"gamma={g} is not in (0, 1); use curved_dtn_iterated")
    U = _quotient(scatter)
    lim = U.derivative().mul_monomial(params.a).limit_at_zero()
    rho_star = special_defining_function(scatter, params)
    Y = invert_defining(rho_star)
    U_star = U.substitute(Y.mul_monomial(-1.0))
    lim_star = U_star.derivative().mul_monomial(params.a).limit_at_zero()
    Q = params.d_gamma * scatter.h_tilde
    P = params.d_gamma / (2 * g) * lim_star + scatter.f * Q
    return CurvedDtn(lim, lim_star, 2 * g * (scatter.h - scatter.f * scatter.h_tilde), P, Q,
                     params.d_gamma * scatter.h)


@dataclass(frozen=True)
class IteratedCurvedDtn:
    lim: float
    lim_rho_star: float
    expected_lim: float       # 2 gamma0 A_m (h - h~ f)
    p_gamma_f: float
    q_gamma: float
    d_gamma_h: float

    @property
    def defect(self) -> float:
        return abs(self.p_gamma_f - self.d_gamma_h)


def _iterated(series: GradedSeries, params: FracParams) -> float:
    out = series
    for _ in range(params.m):
        out = out.B()
    return out.derivative().mul_monomial(params.a0).limit_at_zero()


def curved_dtn_iterated(scatter: ScatterSeries, params: FracParams) -> IteratedCurvedDtn:
    if params.m < 1:
        raise ValueError("m = 0: use curved_dtn")
    odd = [name for name in ("F", "H", "Ft", "Ht") if not getattr(scatter, name).q0_terms_even()]
    if odd:
        raise ValueError(f"blocks {', '.join(odd)} carry odd powers of y; B^m needs even blocks")
    U = _quotient(scatter)
    lim = _iterated(U, params)
    rho_star = special_defining_function(scatter, params)
    U_star = U.substitute(invert_defining(rho_star).mul_monomial(-1.0))
    lim_star = _iterated(U_star, params)
    A = params.A_m
    Q = params.d_gamma * scatter.h_tilde
    P = params.d_gamma / (2 * params.gamma0) / A * lim + scatter.f * Q
    expected = 2 * params.gamma0 * A * (scatter.h - scatter.h_tilde * scatter.f)
    return IteratedCurvedDtn(lim, lim_star, expected, P, Q, params.d_gamma * scatter.h)


# -- boundary with mean curvature -----------------------------------------------


@dataclass(frozen=True)
class GeneralDtn:
    case: str                        # "subcritical", "critical" or "supercritical"
    limit_exists: bool
    limit: float | None              # lim y^a dU/dy when it exists
    limit_rho: float | None          # same limit in the geodesic variable rho
    h_term: float                    # 2 gamma h
    psi_term: float                  # -(s-n) Psi0 f, coefficient of y^a
    divergent_coefficient: float | None
    p_gamma: float | None            # boundary formula as printed
    p_scattering: float              # d_gamma h
    d_gamma: float


def general_boundary_dtn(scatter: ScatterSeries, Psi0: float, params: FracParams,
                         alpha: float = 0.0) -> GeneralDtn:
    """``U = hat_rho^(s-n) u`` with ``hat_rho = y (1 - Psi0 y + O(y^2))``.

    ``y^a dU/dy = -(s-n) Psi0 f y^a + 2 gamma h + o(1)``: the limit exists for
    ``gamma < 1/2``; at ``gamma = 1/2`` the two terms merge; above 1/2 it exists
    only when ``Psi0 = 0``.
    """
    g, n, s, a = params.gamma, params.n, params.s, params.a
    if not 0 < g < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {g}")
    hat = GradedSeries(g, {(1, 0): 1.0, (2, 0): -float(Psi0)}, 3.0)
    U = (hat.real_power(s - n) * scatter.u()).reframed(0.0)
    flux = U.derivative().mul_monomial(a)
    f, h = scatter.f, scatter.h
    psi_term = -(s - n) * Psi0 * f
    h_term = 2 * g * h
    dg = d_gamma(g)

    model = WarpedModel.from_coefficients(n, g, [1.0, float(Psi0)], 2.0)
    rho_y = defining_relations(model, params, alpha).rho_of_y
    U_rho = U.substitute(invert_defining(rho_y).mul_monomial(-1.0))
    flux_rho = U_rho.derivative().mul_monomial(a)

    if abs(g - 0.5) < 1e-12:
        case = "critical"
        lim = flux.limit_at_zero()
        lim_rho = flux_rho.limit_at_zero()
        # printed boundary formula: lim dU/drho + ((n-1)/2) Psi0 f
        p = lim_rho + (n - 1) / 2 * Psi0 * f
        return GeneralDtn(case, True, lim, lim_rho, h_term, psi_term, None, p, dg * h, dg)
    case = "subcritical" if g < 0.5 else "supercritical"
    try:
        lim = flux.limit_at_zero()
        lim_rho = flux_rho.limit_at_zero()
    except DivergentLimit as exc:
        coef = math.fsum(c for e, c in exc.terms if abs(e - a) <= EXP_TOL)
        return GeneralDtn(case, False, None, None, h_term, psi_term, coef, None, dg * h, dg)
    p = dg / (2 * g) * lim_rho
    return GeneralDtn(case, True, lim, lim_rho, h_term, psi_term, None, p, dg * h, dg)


__all__ = [
    "ScatterSeries", "solve_eigen_series", "eigen_residual", "special_defining_function",
    "g_star_factors", "E_at_special", "curved_dtn", "curved_dtn_iterated", "general_boundary_dtn",
    "CurvedDtn", "IteratedCurvedDtn", "GeneralDtn", "GStarFactors", "TruncationError",
]
