"""Truncated formal series in y with exponents ``shift + p + 2 gamma q``.

Terms are keyed on the integer pair (p, q), never on the real exponent, so
``y^(2 gamma q)`` and ``y^p`` stay distinct even when 2 gamma is rational.
``trunc`` is the order of the remainder: the series stands for
``sum c y^e + O(y^trunc)``, so only exponents strictly below ``trunc`` are known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Real

EXP_TOL = 1e-9


class TruncationError(ValueError):
    """Requested information lies beyond the known truncation order."""


class DivergentLimit(ArithmeticError):
    """Series has nonzero terms with negative exponent."""

    def __init__(self, terms):
        self.terms = terms
        desc = ", ".join(f"{c:.6g}*y^{e:.6g}" for e, c in terms)
        super().__init__(f"limit y->0 diverges: {desc}")


def _binom(alpha: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= (alpha - i) / (i + 1)
    return out


@dataclass(frozen=True, eq=False)
class GradedSeries:
    gamma: float
    terms: dict
    trunc: float
    shift: float = 0.0

    def __post_init__(self):
        g, s, T = float(self.gamma), float(self.shift), float(self.trunc)
        clean = {}
        for (p, q), c in dict(self.terms).items():
            c = float(c)
            if c != 0.0 and s + p + 2 * g * q < T - EXP_TOL:
                clean[(int(p), int(q))] = c
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "shift", s)
        object.__setattr__(self, "trunc", T)
        object.__setattr__(self, "terms", clean)

    # -- construction ---------------------------------------------------------

    @classmethod
    def monomial(cls, gamma, coef=1.0, p=0, q=0, trunc=math.inf, shift=0.0):
        return cls(gamma, {(p, q): coef}, trunc, shift)

    @classmethod
    def constant(cls, gamma, value, trunc=math.inf):
        return cls(gamma, {(0, 0): value}, trunc)

    @classmethod
    def variable(cls, gamma, trunc=math.inf):
        """The series ``y`` itself."""
        return cls(gamma, {(1, 0): 1.0}, trunc)

    @classmethod
    def polynomial(cls, gamma, coeffs, trunc=math.inf):
        """``sum_i coeffs[i] y^i``."""
        return cls(gamma, {(i, 0): c for i, c in enumerate(coeffs)}, trunc)

    def like(self, terms, trunc=None, shift=None) -> "GradedSeries":
        return GradedSeries(self.gamma, terms, self.trunc if trunc is None else trunc,
                            self.shift if shift is None else shift)

    # -- inspection -----------------------------------------------------------

    def exponent(self, key) -> float:
        p, q = key
        return self.shift + p + 2 * self.gamma * q

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda kv: (self.exponent(kv[0]), kv[0][1]))

    @property
    def leading_exponent(self) -> float:
        """Lowest exponent carrying a stored term, or ``trunc`` for an empty series."""
        if not self.terms:
            return self.trunc
        return min(min(self.exponent(k) for k in self.terms), self.trunc)

    def coefficient(self, p: int, q: int = 0) -> float:
        """Coefficient of the key (p, q) in this series' own frame."""
        if self.exponent((p, q)) >= self.trunc - EXP_TOL:
            raise TruncationError(f"key {(p, q)} lies beyond truncation {self.trunc}")
        return self.terms.get((p, q), 0.0)

    def coefficient_at(self, exponent: float) -> float:
        """Sum of all terms whose exponent equals ``exponent``."""
        if exponent >= self.trunc - EXP_TOL:
            raise TruncationError(f"exponent {exponent} lies beyond truncation {self.trunc}")
        return math.fsum(c for k, c in self.terms.items()
                         if abs(self.exponent(k) - exponent) <= EXP_TOL)

    def grouped(self):
        """``[(exponent, summed coefficient)]`` sorted by exponent."""
        groups: list[list] = []
        for key, c in self.sorted_items():
            e = self.exponent(key)
            if groups and abs(groups[-1][0] - e) <= EXP_TOL:
                groups[-1][1].append(c)
            else:
                groups.append([e, [c]])
        return [(e, math.fsum(cs)) for e, cs in groups]

    def scale(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def __call__(self, y: float) -> float:
        return math.fsum(c * y ** self.exponent(k) for k, c in self.terms.items())

    # -- frames ---------------------------------------------------------------

    def _offset_key(self, delta: float):
        """(dp, dq) with ``dp + 2 gamma dq == delta``, smallest |dq| first."""
        for dq in sorted(range(-12, 13), key=lambda v: (abs(v), v < 0)):
            dp = round(delta - 2 * self.gamma * dq)
            if abs(delta - dp - 2 * self.gamma * dq) <= EXP_TOL:
                return dp, dq
        raise ValueError(f"shift difference {delta} is not of the form p + 2*gamma*q")

    def _rekeyed(self, other: "GradedSeries") -> dict:
        if abs(other.gamma - self.gamma) > 1e-15:
            raise ValueError(f"grading mismatch: gamma={self.gamma} vs {other.gamma}")
        dp, dq = self._offset_key(other.shift - self.shift)
        return {(p + dp, q + dq): c for (p, q), c in other.terms.items()}

    def _key_for(self, exponent: float):
        return self._offset_key(exponent - self.shift)

    def reframed(self, shift: float = 0.0) -> "GradedSeries":
        """Same series with keys expressed relative to ``shift``."""
        dp, dq = self._offset_key(self.shift - shift)
        return self.shifted_keys(dp, dq, shift)

    def truncate(self, trunc: float) -> "GradedSeries":
        return self.like(self.terms, min(trunc, self.trunc))

    # -- arithmetic -----------------------------------------------------------

    def _coerce(self, other) -> "GradedSeries":
        if isinstance(other, GradedSeries):
            return other
        if isinstance(other, Real):
            return GradedSeries.constant(self.gamma, float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if isinstance(other, GradedSeries) and not other.terms:
            return self.truncate(other.trunc)
        terms = dict(self.terms)
        for k, c in self._rekeyed(other).items():
            terms[k] = terms.get(k, 0.0) + c
        return self.like(terms, min(self.trunc, other.trunc))

    __radd__ = __add__

    def __neg__(self):
        return self.like({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Real):
            return self.like({k: c * other for k, c in self.terms.items()})
        if not isinstance(other, GradedSeries):
            return NotImplemented
        if abs(other.gamma - self.gamma) > 1e-15:
            raise ValueError(f"grading mismatch: gamma={self.gamma} vs {other.gamma}")
        trunc = min(self.trunc + other.leading_exponent, other.trunc + self.leading_exponent)
        shift = self.shift + other.shift
        terms: dict = {}
        for (p1, q1), c1 in self.terms.items():
            for (p2, q2), c2 in other.terms.items():
                key = (p1 + p2, q1 + q2)
                if shift + key[0] + 2 * self.gamma * key[1] < trunc - EXP_TOL:
                    terms[key] = terms.get(key, 0.0) + c1 * c2
        return GradedSeries(self.gamma, terms, trunc, shift)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Real):
            return self * (1.0 / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        if isinstance(k, int) and k >= 0:
            out = GradedSeries.constant(self.gamma, 1.0)
            for _ in range(k):
                out = out * self
            return out
        return self.real_power(k)

    def mul_monomial(self, exponent: float) -> "GradedSeries":
        """Multiply by ``y^exponent`` (any real exponent)."""
        return self.like(self.terms, self.trunc + exponent, self.shift + exponent)

    # -- calculus -------------------------------------------------------------

    def derivative(self) -> "GradedSeries":
        terms = {k: c * self.exponent(k) for k, c in self.terms.items()
                 if abs(self.exponent(k)) > EXP_TOL}
        return self.like(terms, self.trunc - 1, self.shift - 1)

    def B(self) -> "GradedSeries":
        """``y^-1 d/dy``."""
        return self.derivative().mul_monomial(-1.0)

    def shifted_keys(self, dp: int, dq: int, shift: float) -> "GradedSeries":
        """Same series with keys moved by (dp, dq) into the frame ``shift``."""
        delta = self.shift - shift - dp - 2 * self.gamma * dq
        if abs(delta) > EXP_TOL:
            raise ValueError("key offset does not match the frame change")
        return GradedSeries(self.gamma, {(p + dp, q + dq): c for (p, q), c in self.terms.items()},
                            self.trunc, shift)

    def real_power(self, alpha: float, rtol: float = 1e-13) -> "GradedSeries":
        """``S^alpha`` via ``c0^alpha y^(alpha e0) (1 + X)^alpha``.

        The leading monomial is the lowest exponent group whose summed
        coefficient survives cancellation; lower groups must cancel to round-off.
        """
        floor = rtol * max(self.scale(), 1e-300)
        groups = self.grouped()
        live = [(e, c) for e, c in groups if abs(c) > floor]
        if not live:
            raise ValueError("cannot raise a zero (to truncation) series to a power")
        e0, c0 = live[0]
        if e0 >= self.trunc - EXP_TOL:
            raise TruncationError("leading term is not resolved by the truncation")
        if c0 < 0 and not float(alpha).is_integer():
            raise ValueError(f"negative leading coefficient {c0} under non-integer power {alpha}")
        lead_key = min((k for k in self.terms if abs(self.exponent(k) - e0) <= EXP_TOL),
                       key=lambda k: (abs(k[1]), k))
        p0, q0 = lead_key
        rest = {(p - p0, q - q0): c / c0 for (p, q), c in self.terms.items()
                if self.exponent((p, q)) > e0 + EXP_TOL}
        X = GradedSeries(self.gamma, rest, self.trunc - e0, 0.0)
        out = GradedSeries.constant(self.gamma, 1.0, X.trunc)
        if X.terms:
            if math.isinf(X.trunc):
                raise TruncationError("non-monomial power of an untruncated series is infinite")
            lead = X.leading_exponent
            power = GradedSeries.constant(self.gamma, 1.0)
            for k in range(1, int(math.ceil(X.trunc / lead - EXP_TOL))):
                power = power * X
                out = out + power * _binom(alpha, k)
        sign = (-1.0) ** int(alpha) if c0 < 0 else 1.0
        out = out * (sign * abs(c0) ** alpha)
        return out.mul_monomial(alpha * e0)

    def reciprocal(self) -> "GradedSeries":
        return self.real_power(-1.0)

    def substitute(self, inner: "GradedSeries") -> "GradedSeries":
        """Rewrite ``S(y)`` in a new variable r with ``y = r * inner(r)``."""
        if abs(inner.leading_exponent) > EXP_TOL:
            raise ValueError("inner factor must be a unit series (leading exponent 0)")
        inner = inner.reframed(0.0)
        out = GradedSeries(self.gamma, {}, self.trunc, self.shift)
        for (p, q), c in self.terms.items():
            e = self.exponent((p, q))
            piece = inner.real_power(e)  # frame shift 0
            out = out + GradedSeries(
                self.gamma,
                {(pp + p, qq + q): cc * c for (pp, qq), cc in piece.terms.items()},
                piece.trunc + e, self.shift)
        return out

    # -- limits ---------------------------------------------------------------

    def singular_terms(self, rtol: float = 1e-12):
        """Grouped terms with negative exponent that do not cancel."""
        floor = rtol * max(self.scale(), 1.0)
        return [(e, c) for e, c in self.grouped() if e < -EXP_TOL and abs(c) > floor]

    def limit_at_zero(self, rtol: float = 1e-12) -> float:
        if self.trunc <= EXP_TOL:
            raise TruncationError(f"remainder O(y^{self.trunc:g}) swallows the constant term")
        bad = self.singular_terms(rtol)
        if bad:
            raise DivergentLimit(bad)
        return self.coefficient_at(0.0)

    def q0_terms_even(self) -> bool:
        """True when every q = 0 term sits at an even integer exponent."""
        for (p, q) in self.terms:
            if q == 0:
                e = self.exponent((p, q))
                if abs(e - round(e)) > EXP_TOL or round(e) % 2:
                    return False
        return True

    def allclose(self, other: "GradedSeries", atol: float = 1e-12) -> bool:
        diff = self - other
        return all(abs(c) <= atol for _, c in diff.grouped())

    # -- output ---------------------------------------------------------------

    def _exp_label(self, key) -> str:
        p, q = key
        parts = []
        if self.shift:
            parts.append(f"{self.shift:g}")
        if p or not (q or self.shift):
            parts.append(str(p))
        if q:
            parts.append("2γ" if q == 1 else f"{q}·2γ")
        return "+".join(parts).replace("+-", "-")

    def __str__(self) -> str:
        if not self.terms:
            body = "0"
        else:
            body = " + ".join(f"{c:.12g} · y^{{{self._exp_label(k)}}}"
                              for k, c in self.sorted_items())
        tail = "" if math.isinf(self.trunc) else f" + O(y^{self.trunc:.6g})"
        return body + tail

    __repr__ = __str__

    def to_csv(self) -> str:
        lines = [f"# graded-series gamma={self.gamma!r} shift={self.shift!r} trunc={self.trunc!r}",
                 "p,q,exponent,coefficient"]
        for (p, q), c in self.sorted_items():
            lines.append(f"{p},{q},{self.exponent((p, q))!r},{c!r}")
        return "\n".join(lines) + "\n"


def invert_defining(rho: GradedSeries, max_iter: int = 64) -> GradedSeries:
    """Given ``rho = y u(y)`` return ``y`` as a series in rho, ``y = rho v(rho)``."""
    if abs(rho.leading_exponent - 1.0) > EXP_TOL:
        raise ValueError("defining function must vanish to first order")
    u = rho.mul_monomial(-1.0).reframed(0.0)
    v = GradedSeries.constant(rho.gamma, 1.0 / u.coefficient_at(0.0), u.trunc)
    for _ in range(max_iter):
        nxt = u.substitute(v).reciprocal()
        if nxt.allclose(v, atol=1e-15 * max(v.scale(), 1.0)) and nxt.trunc == v.trunc:
            break
        v = nxt
    else:
        raise RuntimeError("series inversion did not stabilise")
    return v.mul_monomial(1.0)
