"""Constants and exponent ladders for P_gamma.

``gamma = m + gamma0`` with ``m = floor(gamma)`` and ``gamma0`` in (0, 1).  The
ladder ``gamma_j = gamma - (m - j)``, ``j = 0..m``, steps the weight exponent
``a_j = 1 - 2 gamma_j`` down by two per rung.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from numbers import Integral


class ParameterError(ValueError):
    """Inadmissible (n, gamma) pair."""


@dataclass(frozen=True)
class LadderStep:
    gamma: float
    s: float
    a: float


def d_gamma(gamma: float) -> float:
    """Scattering normalisation ``2^(2 gamma) Gamma(gamma) / Gamma(-gamma)``."""
    return 4.0**gamma * math.gamma(gamma) / math.gamma(-gamma)


def _product(values) -> float:
    out = 1.0
    for v in values:
        out *= v
    return out


@dataclass(frozen=True)
class FracParams:
    n: int
    gamma: float
    m: int
    gamma0: float
    s: float
    a: float
    a0: float
    d_gamma: float
    A_m: float
    A_m_stated: float
    c_m: float
    ladder: tuple[LadderStep, ...] = field(repr=False)

    @property
    def d_gamma0(self) -> float:
        return d_gamma(self.gamma0)

    def A(self, convention: str = "proof") -> float:
        """Ladder product ``A_m``.

        ``"proof"`` is ``2^m gamma_m ... gamma_1`` (includes gamma itself);
        ``"stated"`` is ``2^m (gamma-1) ... (gamma-m+1)``.
        """
        if convention == "proof":
            return self.A_m
        if convention == "stated":
            return self.A_m_stated
        raise ValueError(f"unknown A_m convention {convention!r}")


def make_params(n: int, gamma: float) -> FracParams:
    if isinstance(n, bool) or not isinstance(n, Integral):
        raise ParameterError(f"boundary dimension must be an integer, got {n!r}")
    n = int(n)
    if n <= 0:
        raise ParameterError(f"boundary dimension must be positive, got n={n}")
    gamma = float(gamma)
    if not math.isfinite(gamma) or gamma <= 0.0:
        raise ParameterError(f"gamma must be positive, got gamma={gamma!r}")
    if gamma >= n / 2:
        raise ParameterError(f"gamma must be below n/2 = {n / 2}, got gamma={gamma!r}")
    if gamma.is_integer():
        raise ParameterError(f"gamma must not be an integer, got gamma={gamma!r}")

    m = int(math.floor(gamma))
    gamma0 = gamma - m
    ladder = tuple(
        LadderStep(gamma=g, s=n / 2 + g, a=1.0 - 2.0 * g)
        for g in (gamma - (m - j) for j in range(m + 1))
    )
    A_m = 2.0**m * _product(step.gamma for step in ladder[1:])
    A_m_stated = 2.0**m * _product(gamma - i for i in range(1, m))
    c_m = _product(step.a + 1.0 for step in ladder[1:])
    return FracParams(
        n=n,
        gamma=gamma,
        m=m,
        gamma0=gamma0,
        s=n / 2 + gamma,
        a=1.0 - 2.0 * gamma,
        a0=1.0 - 2.0 * gamma0,
        d_gamma=d_gamma(gamma),
        A_m=A_m,
        A_m_stated=A_m_stated,
        c_m=c_m,
        ladder=ladder,
    )


def gamma_ladder(params: FracParams) -> tuple[LadderStep, ...]:
    return params.ladder


def ladder_defect(params: FracParams) -> float:
    """Relative defect of ``c_m A_m = d_gamma / d_gamma0``."""
    lhs = params.c_m * params.A_m
    rhs = params.d_gamma / params.d_gamma0
    return abs(lhs - rhs) / abs(rhs)


def descend_ladder(params: FracParams, h_m: float, step: str = "corrected") -> float:
    """Walk ``h_m`` down to ``h_0`` one rung at a time.

    ``"corrected"`` uses ``h_{j-1} = 2 gamma_j (1 + a_j) h_j``, which follows
    from comparing the ``y^(2 gamma_j - 2)`` coefficients of the downshift
    relation; ``"stated"`` drops the ``(1 + a_j)`` factor.  Only the corrected
    walk reproduces ``A_m c_m h_m = h_0``.
    """
    if step not in ("corrected", "stated"):
        raise ValueError(f"unknown step {step!r}")
    h = float(h_m)
    for rung in reversed(params.ladder[1:]):
        factor = 2 * rung.gamma
        if step == "corrected":
            factor *= 1 + rung.a
        h *= factor
    return h
