"""Warped-product models ``g+ = y^-2 (dy^2 + w(y)^2 g_flat)`` and the lower-order term E.

All geometric quantities act on functions of the normal variable only, so
they reduce to operations on graded series:

    Psi       = 2n w'/w
    Lap_bar f = f'' + (Psi/2) f'
    R_bar     = -2n w''/w - n(n-1) (w'/w)^2
    Lap_+ f   = y^2 f'' + y^2 (Psi/2) f' - (n-1) y f'
    R_+       = y^2 R_bar + n y Psi - n(n+1)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from fraclap.fracparams import FracParams
from fraclap.jets.series import GradedSeries, TruncationError, invert_defining

MAX_ORDER = 40


@dataclass(frozen=True, eq=False)
class WarpedModel:
    n: int
    w: GradedSeries

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if abs(self.w.shift) > 0 or abs(self.w.coefficient(0, 0) - 1.0) > 1e-14:
            raise ValueError("w must have constant term 1")

    @classmethod
    def from_coefficients(cls, n: int, gamma: float, coeffs, trunc: float = math.inf):
        """``w = sum coeffs[i] y^i + O(y^trunc)`` with ``coeffs[0] = 1``."""
        return cls(n, GradedSeries.polynomial(gamma, coeffs, trunc))

    @classmethod
    def hyperbolic(cls, n: int, gamma: float) -> "WarpedModel":
        return cls(n, GradedSeries.constant(gamma, 1.0))

    @property
    def gamma(self) -> float:
        return self.w.gamma

    @property
    def is_even(self) -> bool:
        return self.w.q0_terms_even()

    @property
    def log_derivative(self) -> GradedSeries:
        return self.w.derivative() * self.w.reciprocal()

    @property
    def psi(self) -> GradedSeries:
        return self.log_derivative * (2.0 * self.n)

    @property
    def rbar(self) -> GradedSeries:
        n = self.n
        ld = self.log_derivative
        return (self.w.derivative().derivative() * self.w.reciprocal()) * (-2.0 * n) \
            - (ld * ld) * (n * (n - 1.0))

    def laplacian_bar(self, phi: GradedSeries) -> GradedSeries:
        d = phi.derivative()
        return d.derivative() + self.psi * d * 0.5

    def laplacian_plus(self, phi: GradedSeries) -> GradedSeries:
        d = phi.derivative()
        return (d.derivative() + self.psi * d * 0.5).mul_monomial(2.0) \
            - d.mul_monomial(1.0) * (self.n - 1.0)

    def scalar_curvature_plus(self) -> GradedSeries:
        n = self.n
        return self.rbar.mul_monomial(2.0) + self.psi.mul_monomial(1.0) * float(n) \
            - n * (n + 1.0)

    def scalar_residual(self) -> GradedSeries:
        """``R_+ + n(n+1)``; zero for constant scalar curvature."""
        return self.scalar_curvature_plus() + self.n * (self.n + 1.0)


def einstein_rbar(model: WarpedModel) -> GradedSeries:
    """``R_bar`` forced by ``R_+ = -n(n+1)``: ``-n Psi / y``."""
    return model.psi.mul_monomial(-1.0) * (-float(model.n))


def compute_E(model: WarpedModel, rho: GradedSeries, params: FracParams, form: str = "Error",
              rbar: str = "model") -> GradedSeries:
    """``E(rho) * rho^(2-a)`` as a series in y.

    ``form="Error"`` evaluates ``-Lap_G(rho^(a/2)) rho^(a/2) + (gamma^2 - 1/4) rho^(a-2)
    + (n-1)/(4n) R_G rho^a`` for ``G = rho^2 g+``; ``form="E1"`` evaluates
    ``-Lap_+(rho^((n-1+a)/2)) rho^((-n-3+a)/2) - (n^2/4 - gamma^2) rho^(a-2)``.
    ``rbar="einstein"`` replaces ``R_bar`` by ``-n Psi / y`` in the first form.
    """
    if abs(rho.leading_exponent - 1.0) > 1e-9:
        raise ValueError("rho must vanish to first order in y")
    n, g, a = model.n, params.gamma, params.a
    if form == "E1":
        phi = rho.real_power((n - 1 + a) / 2)
        E = -(model.laplacian_plus(phi) * rho.real_power((-n - 3 + a) / 2)) \
            - rho.real_power(a - 2) * (n * n / 4 - g * g)
    elif form == "Error":
        if rbar == "model":
            R = model.rbar
        elif rbar == "einstein":
            R = einstein_rbar(model)
        else:
            raise ValueError(f"unknown rbar option {rbar!r}")
        r = rho.mul_monomial(-1.0).reframed(0.0)       # rho / y, a unit
        rinv2 = r.real_power(-2.0)
        dw = r.derivative() * r.reciprocal()            # omega' for omega = log r
        lap_omega = dw.derivative() + model.psi * dw * 0.5
        phi = rho.real_power(a / 2)
        dphi = phi.derivative()
        lap_G = rinv2 * (model.laplacian_bar(phi) + dw * dphi * (n - 1.0))
        R_G = rinv2 * (R - lap_omega * (2.0 * n) - dw * dw * (n * (n - 1.0)))
        E = -(lap_G * phi) + rho.real_power(a - 2) * (g * g - 0.25) \
            + R_G * rho.real_power(a) * ((n - 1.0) / (4.0 * n))
    else:
        raise ValueError(f"unknown form {form!r}; use 'Error' or 'E1'")
    out = E * rho.real_power(2 - a)
    if out.trunc <= 1e-9:
        raise TruncationError("truncation too short to see the leading coefficient of E")
    return out.reframed(0.0)


def einstein_closed_form(model: WarpedModel, params: FracParams, coefficient: str = "derived"):
    """``c Psi y^(a-1)`` normalised by ``y^(2-a)``, i.e. ``c Psi y``.

    ``"derived"`` uses ``c = -(n-1+a)/4``; ``"printed"`` uses ``(-n+1+a)/4``.
    The two agree only at ``a = 0``.
    """
    n, a = model.n, params.a
    if coefficient == "derived":
        c = -(n - 1 + a) / 4
    elif coefficient == "printed":
        c = (-n + 1 + a) / 4
    else:
        raise ValueError(f"unknown coefficient choice {coefficient!r}")
    return (model.psi * c).mul_monomial(1.0)


def solve_constant_scalar(w2: float, params: FracParams, order: int,
                          resonant: float = 0.0) -> WarpedModel:
    """Even ``w = 1 + w2 y^2 + ...`` with ``R_+ + n(n+1) = O(y^(order+1))``.

    The ``y^2k`` coefficient enters the residual at order 2k with factor
    ``4nk(n + 1 - 2k)``; it is solved for whenever that factor is nonzero.  At
    ``2k = n + 1`` the coefficient is free and set to ``resonant``.  For
    ``n >= 2`` the ``y^2`` coefficient is therefore forced to zero.
    """
    n = params.n
    if not 0 <= order <= MAX_ORDER:
        raise TruncationError(f"order must lie in [0, {MAX_ORDER}], got {order}")
    g = params.gamma
    T = order + 1
    coeffs = {0: 1.0}

    def residual(cs):
        w = GradedSeries(g, {(p, 0): c for p, c in cs.items()}, T)
        return WarpedModel(n, w).scalar_residual()

    for k in range(1, order // 2 + 1):
        factor = 4.0 * n * k * (n + 1 - 2 * k)
        if k == 1:
            trial = dict(coeffs)
            trial[2] = float(w2)
            r = residual(trial).coefficient_at(2.0)
            if abs(r) > 1e-12 * max(1.0, abs(w2)):
                raise ValueError(f"for n={n} the y^2 coefficient is forced to 0; "
                                 f"w2={w2} leaves residual {r:.3g} at order 2")
            coeffs = trial
            continue
        base = dict(coeffs)
        base[2 * k] = 0.0
        r0 = residual(base).coefficient_at(2.0 * k)
        if factor == 0.0:
            if abs(r0) > 1e-12:
                raise ValueError(f"resonant order {2 * k} has residual {r0:.3g}; log terms needed")
            base[2 * k] = float(resonant)
        else:
            base[2 * k] = -r0 / factor
        coeffs = base
    w = GradedSeries(g, {(p, 0): c for p, c in coeffs.items()}, T)
    model = WarpedModel(n, w)
    res = model.scalar_residual()
    worst = max((abs(c) for _, c in res.grouped()), default=0.0)
    if worst > 1e-10:
        raise ArithmeticError(f"constant scalar curvature residual {worst:.3g} after solve")
    return model


# -- non-geodesic compactifications -------------------------------------------


def mean_curvature(model: WarpedModel) -> float:
    """``Psi0 = (1/2n) trace(g_bar^(1))`` for ``g_bar = drho^2 + wbar(rho)^2 g_flat``."""
    trace = model.n * (model.w * model.w).coefficient_at(1.0)
    psi0 = trace / (2.0 * model.n)
    check = model.psi.coefficient_at(0.0) / (2.0 * model.n)
    if abs(psi0 - check) > 1e-12 * max(1.0, abs(psi0)):
        raise ArithmeticError("trace and Psi(0) disagree")
    return psi0


@dataclass(frozen=True, eq=False)
class DefiningRelations:
    psi0: float
    hat_rho: GradedSeries           # hat rho as a series in y
    rho_of_hat: GradedSeries        # rho as a series in hat rho
    rho_of_y: GradedSeries          # rho as a series in y


def defining_relations(model: WarpedModel, params: FracParams,
                       alpha: float | GradedSeries = 0.0) -> DefiningRelations:
    """Expansions ``hat rho(y)``, ``rho(hat rho)`` and ``rho(y)`` to relative order one."""
    g = params.gamma
    psi0 = mean_curvature(model)
    hat_rho = GradedSeries(g, {(1, 0): 1.0, (2, 0): -psi0}, 3.0)
    if not isinstance(alpha, GradedSeries):
        alpha = GradedSeries.constant(g, float(alpha))
    # 1 / hat_rho^2 = (1 + rho alpha) / rho^2, log terms of order rho^n dropped
    unit = (alpha.mul_monomial(1.0) + 1.0).truncate(2.0)
    hat_of_rho = unit.real_power(-0.5).mul_monomial(1.0)
    rho_of_hat = invert_defining(hat_of_rho)
    rho_of_y = rho_of_hat.substitute(hat_rho.mul_monomial(-1.0))
    return DefiningRelations(psi0, hat_rho, rho_of_hat, rho_of_y)
