"""Per-mode solver for the degenerate extension problem.

On the flat half-space a Fourier mode ``f = e^{i xi.x}`` extends as
``U(x, y) = U_k(y) e^{i xi.x}`` with ``k = |xi|`` and

    (y^a U_k')' = y^a k^2 U_k,    U_k(0) = 1,    U_k -> 0 as y -> oo.

Near the boundary ``U_k = sum_j b_2j y^2j + h y^(2 gamma) + ...`` and the
operator is read off from ``h``.  The ODE is discretised in conservative form on
a graded mesh; the solver works with the remainder ``V = U - sum_{j<=m} b_2j y^2j``
so that the fit for ``h`` is not swamped by the known even part.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import solve_banded

from fraclap.fracparams import FracParams, make_params
from fraclap.jets.series import GradedSeries
from fraclap.spectral import GridFunction, SpectralField, dft, idft


class SolverError(RuntimeError):
    """The discrete mode problem could not be solved."""


class ExtractionError(RuntimeError):
    """The boundary-layer fit is unreliable."""


def default_grading(params: FracParams) -> float:
    return max(2.0, 1.0 / params.gamma0)


@dataclass(frozen=True)
class GradedMesh:
    """Nodes ``y_j = Y (j/N)^p``, ``j = 0..N``."""

    Y: float
    N: int
    p: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.Y) and self.Y > 0):
            raise ValueError(f"Y must be positive, got {self.Y}")
        if int(self.N) != self.N or self.N < 16:
            raise ValueError(f"N must be an integer >= 16, got {self.N}")
        if not (math.isfinite(self.p) and self.p >= 1):
            raise ValueError(f"grading exponent must be >= 1, got {self.p}")
        object.__setattr__(self, "N", int(self.N))
        y = self.nodes
        if not np.all(np.diff(y) > 0):
            raise ValueError("mesh nodes are not strictly increasing (grading too strong for N)")

    @cached_property
    def nodes(self) -> np.ndarray:
        y = self.Y * (np.arange(self.N + 1) / self.N) ** self.p
        y[-1] = self.Y
        y.setflags(write=False)
        return y

    @classmethod
    def for_mode(cls, kmag: float, params: FracParams, N: int = 4096,
                 far_field: float = 8.0, p: float | None = None) -> "GradedMesh":
        Y = far_field / kmag if kmag > 0 else far_field
        return cls(Y, N, default_grading(params) if p is None else p)


@dataclass(frozen=True, eq=False)
class ModeProfile:
    kmag: float
    params: FracParams
    mesh: GradedMesh
    values: np.ndarray       # U at every node, values[0] = 1
    remainder: np.ndarray    # U minus its even polynomial part
    even_coeffs: tuple[float, ...]

    @property
    def y(self) -> np.ndarray:
        return self.mesh.nodes

    def at(self, y0: float) -> float:
        return float(np.interp(y0, self.y, self.values))


@dataclass(frozen=True)
class DtnResult:
    h_estimate: float
    limit_value: float
    p_gamma_value: float
    error_estimate: float
    sign: int = 1
    iterated: bool = False
    convention: str = "proof"


def even_coefficients(kmag: float, a: float, m: int) -> tuple[float, ...]:
    """``b_0 .. b_2m`` from ``b_2j = k^2 b_2j-2 / (2j (2j - 1 + a))``."""
    b = [1.0]
    for j in range(1, m + 1):
        b.append(kmag**2 * b[-1] / ((2 * j) * (2 * j - 1 + a)))
    return tuple(b)


def _dual_cell_integrals(y: np.ndarray, power: float) -> np.ndarray:
    # exact integral of t^power over the dual cell of each node
    mid = 0.5 * (y[1:] + y[:-1])
    edges = np.concatenate([[0.0], mid, [y[-1]]])
    with np.errstate(divide="ignore", invalid="ignore"):
        return (edges[1:] ** (power + 1) - edges[:-1] ** (power + 1)) / (power + 1)


def solve_mode(kmag: float, params: FracParams, mesh: GradedMesh) -> ModeProfile:
    """Finite-volume solve of ``(y^a U')' = y^a k^2 U`` with ``U(0) = 1``, ``U(Y) = 0``.

    The edge conductance ``e / (y_{j+1}^e - y_j^e)`` with ``e = 1 - a`` is the
    exact flux for the two homogeneous solutions 1 and ``y^(1-a)``, so the
    boundary layer is captured without dividing by ``y`` at a node.
    """
    kmag = float(kmag)
    if not (math.isfinite(kmag) and kmag >= 0):
        raise ValueError(f"kmag must be non-negative, got {kmag}")
    y = mesh.nodes
    N = mesh.N
    a, m = params.a, params.m
    if kmag == 0.0:
        ones = np.ones(N + 1)
        return ModeProfile(0.0, params, mesh, ones, np.zeros(N + 1), (1.0,) + (0.0,) * m)
    if kmag * mesh.Y < 8 - 1e-9:
        warnings.warn(f"kmag*Y = {kmag * mesh.Y:.3g} < 8; far-field truncation is significant",
                      RuntimeWarning, stacklevel=2)

    e = 1.0 - a
    cond = e / (y[1:] ** e - y[:-1] ** e)
    mass = _dual_cell_integrals(y, a)
    b = even_coefficients(kmag, a, m)
    P = sum(bj * y ** (2 * j) for j, bj in enumerate(b))
    # continuum residual of the even part, integrated over dual cells
    source = -kmag**2 * b[m] * _dual_cell_integrals(y, a + 2 * m)

    ab = np.zeros((3, N - 1))
    ab[0, 1:] = -cond[1:N - 1]
    ab[1] = cond[:-1] + cond[1:] + kmag**2 * mass[1:N]
    ab[2, :-1] = -cond[1:N - 1]
    rhs = source[1:N].copy()
    VN = -P[-1]
    rhs[-1] += cond[-1] * VN
    if not (np.all(np.isfinite(ab)) and np.all(ab[1] > 0)):
        raise SolverError("tridiagonal system is singular or non-finite; check mesh and grading")
    try:
        inner = solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"tridiagonal solve failed: {exc}") from exc
    V = np.zeros(N + 1)
    V[1:N] = inner
    V[N] = VN
    U = P + V
    if not np.all(np.isfinite(U)):
        raise SolverError("mode solution is not finite")
    return ModeProfile(kmag, params, mesh, U, V, b)


# -- boundary-layer fit ---------------------------------------------------------


def _fit_basis(params: FracParams) -> list[tuple[int, int]]:
    # keys (p, q) of y^(p + 2 gamma q) fitted to the remainder V
    m = params.m
    keys = [(0, 1), (2 * m + 2, 0)]
    if abs(2 * params.gamma0 - 2) < 0.2 or m > 0:
        keys.append((2, 1))
    return keys


def _fit_remainder(profile: ModeProfile, q: int) -> tuple[dict, float]:
    N = profile.mesh.N
    if q < 4 or q > N // 4:
        raise ExtractionError(f"fit window q={q} must lie in [4, N/4] for N={N}")
    g = profile.params.gamma
    keys = _fit_basis(profile.params)
    y = profile.y[1:q + 1]
    A = np.stack([y ** (p + 2 * g * qq) for p, qq in keys], axis=1)
    scale = np.max(np.abs(A), axis=0)
    As = A / scale
    if np.linalg.cond(As) > 1e10:
        raise ExtractionError("boundary-layer fit is ill-conditioned; nodes too coarse near y=0")
    target = profile.remainder[1:q + 1]
    coef, *_ = np.linalg.lstsq(As, target, rcond=None)
    coef = coef / scale
    resid = target - A @ coef
    rel_resid = float(np.linalg.norm(resid) / max(np.linalg.norm(target), 1e-300))
    return dict(zip(keys, coef)), rel_resid


def _richardson(profile: ModeProfile, q: int, rtol: float):
    fit1, r1 = _fit_remainder(profile, q)
    fit2, r2 = _fit_remainder(profile, 2 * q)
    h1, h2 = fit1[(0, 1)], fit2[(0, 1)]
    spread = abs(h1 - h2) / max(abs(h2), 1e-300)
    if spread > rtol:
        raise ExtractionError(f"h estimates at q={q} and q={2 * q} disagree by {spread:.2e}")
    return fit1, spread + max(r1, r2)


def dtn_extract(profile: ModeProfile, q: int = 12, rtol: float = 1e-2) -> DtnResult:
    """``lim y^a U'`` from a fit of the boundary layer; ``P = d_gamma/(2 gamma) lim``."""
    params = profile.params
    if not -1 < params.a < 1:
        raise ValueError(f"a = {params.a} lies outside (-1, 1); use dtn_iterated_extract")
    if profile.kmag == 0:
        return DtnResult(0.0, 0.0, 0.0, 0.0)
    fit, err = _richardson(profile, q, rtol)
    h = fit[(0, 1)]
    limit = 2 * params.gamma * h
    P = params.d_gamma / (2 * params.gamma) * limit
    return DtnResult(h, limit, P, err, sign=1)


def fitted_series(profile: ModeProfile, q: int = 12) -> GradedSeries:
    """Even part plus fitted boundary layer as a graded series in ``y``."""
    fit, _ = _fit_remainder(profile, q)
    terms = {(2 * j, 0): bj for j, bj in enumerate(profile.even_coeffs)}
    for key, c in fit.items():
        terms[key] = terms.get(key, 0.0) + c
    return GradedSeries(profile.params.gamma, terms, math.inf)


def _iterated_limit(series: GradedSeries, params: FracParams) -> float:
    out = series
    for _ in range(params.m):
        out = out.B()
    return out.derivative().mul_monomial(params.a0).limit_at_zero()


def dtn_iterated_extract(profile: ModeProfile, q: int = 12, convention: str = "proof",
                         rtol: float = 1e-2) -> DtnResult:
    """Apply ``B = y^-1 d/dy`` m times to the fitted expansion, then ``y^a0 d/dy``.

    The limit is ``2 gamma0 A_m h``; ``P = d_gamma / (2 gamma0 A_m) Lim``.
    """
    params = profile.params
    if params.m == 0:
        raise ValueError("m = 0: use dtn_extract")
    A = params.A(convention)
    if profile.kmag == 0:
        return DtnResult(0.0, 0.0, 0.0, 0.0, iterated=True, convention=convention)
    lims = []
    for qq in (q, 2 * q):
        lims.append(_iterated_limit(fitted_series(profile, qq), params))
    spread = abs(lims[0] - lims[1]) / max(abs(lims[1]), 1e-300)
    if spread > rtol:
        raise ExtractionError(f"iterated limits at q={q} and q={2 * q} disagree by {spread:.2e}")
    lim = lims[0]
    h = lim / (2 * params.gamma0 * A)
    P = params.d_gamma / (2 * params.gamma0 * A) * lim
    return DtnResult(h, lim, P, spread, sign=1, iterated=True, convention=convention)


def extract(profile: ModeProfile, q: int = 12) -> DtnResult:
    if profile.params.m == 0:
        return dtn_extract(profile, q)
    return dtn_iterated_extract(profile, q)


# -- downshift between adjacent rungs -------------------------------------------


@dataclass(frozen=True)
class DownshiftReport:
    first_order: float      # max |f_{m-1} U_{m-1} - (1 + a_m) y^-1 U_m'|
    second_order: float     # max |(U_m'' - k^2 U_m) + a_m/(1 + a_m) f_{m-1} U_{m-1}|
    ladder_stated: float    # relative defect of 2 gamma_m h_m = h_{m-1}
    ladder_corrected: float  # relative defect of 2 gamma_m (1 + a_m) h_m = h_{m-1}


def _nonuniform_derivatives(y: np.ndarray, u: np.ndarray):
    hm = y[1:-1] - y[:-2]
    hp = y[2:] - y[1:-1]
    d1 = (-hp / (hm * (hm + hp)) * u[:-2] + (hp - hm) / (hm * hp) * u[1:-1]
          + hm / (hp * (hm + hp)) * u[2:])
    d2 = 2 * (u[:-2] / (hm * (hm + hp)) - u[1:-1] / (hm * hp) + u[2:] / (hp * (hm + hp)))
    return d1, d2


def check_downshift(profile_m: ModeProfile, profile_m1: ModeProfile, q: int = 12) -> DownshiftReport:
    """Compare ``U_{m-1}`` with ``(1 + a_m) y^-1 dU_m/dy`` on interior nodes.

    Per mode the lower rung carries datum ``f_{m-1} = -Delta f = k^2``, so the
    unit-datum profile ``profile_m1`` is scaled by ``k^2``.
    """
    if profile_m.mesh != profile_m1.mesh:
        raise ValueError(f"mesh mismatch: {profile_m.mesh} vs {profile_m1.mesh}")
    if profile_m.kmag != profile_m1.kmag:
        raise ValueError("profiles solved at different frequencies")
    pm, pm1 = profile_m.params, profile_m1.params
    if pm.n != pm1.n or abs(pm.gamma - 1 - pm1.gamma) > 1e-12:
        raise ValueError("profile_m1 must be solved at gamma - 1 with the same n")
    k2 = profile_m.kmag**2
    if k2 == 0:
        return DownshiftReport(0.0, 0.0, 0.0, 0.0)
    y = profile_m.y
    a_m = pm.a
    # the even part is differentiated exactly; only the remainder is differenced
    d1, d2 = _nonuniform_derivatives(y, profile_m.remainder)
    yi = y[1:-1]
    for j, bj in enumerate(profile_m.even_coeffs[1:], start=1):
        d1 = d1 + 2 * j * bj * yi ** (2 * j - 1)
        d2 = d2 + 2 * j * (2 * j - 1) * bj * yi ** (2 * j - 2)
    lower = k2 * profile_m1.values[1:-1]
    first = np.max(np.abs(lower - (1 + a_m) * d1 / y[1:-1]))
    lap = d2 - k2 * profile_m.values[1:-1]
    second = np.max(np.abs(lap + a_m / (1 + a_m) * lower))
    h_m = extract(profile_m, q).h_estimate
    h_lower = k2 * extract(profile_m1, q).h_estimate
    stated = abs(2 * pm.gamma * h_m - h_lower) / abs(h_lower)
    corrected = abs(2 * pm.gamma * (1 + a_m) * h_m - h_lower) / abs(h_lower)
    return DownshiftReport(float(first), float(second), stated, corrected)


# -- assembly on a periodic box -------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExtensionSolution:
    output: GridFunction
    modes: dict = field(repr=False)   # |xi| -> DtnResult

    def multiplier(self, kmag: float) -> float:
        return self.modes[round(float(kmag), 12)].p_gamma_value


def solve_extension(f: GridFunction, params: FracParams, mesh: GradedMesh | None = None, *,
                    nodes: int = 4096, far_field: float = 8.0, grading: float | None = None,
                    q: int = 12) -> ExtensionSolution:
    """Solve one mode problem per distinct ``|xi|`` and synthesise ``P_gamma f``."""
    F = dft(f)
    xi = np.round(F.xi_norm(), 12)
    modes: dict[float, DtnResult] = {}
    for k in np.unique(xi):
        k = float(k)
        if k == 0.0:
            modes[k] = DtnResult(0.0, 0.0, 0.0, 0.0)
            continue
        mk = mesh if mesh is not None else GradedMesh.for_mode(k, params, nodes, far_field, grading)
        modes[k] = extract(solve_mode(k, params, mk), q)
    symbol = np.vectorize(lambda k: modes[float(k)].p_gamma_value)(xi)
    out = idft(SpectralField(F.coefficients * symbol, F.period))
    return ExtensionSolution(out, modes)


def apply_p_gamma(f: GridFunction, params: FracParams, mesh: GradedMesh | None = None,
                  **kwargs) -> GridFunction:
    return solve_extension(f, params, mesh, **kwargs).output


# -- Poisson kernel cross-check -------------------------------------------------


def poisson_kernel(x: np.ndarray, y0: float, gamma: float) -> np.ndarray:
    c = math.gamma((1 + 2 * gamma) / 2) / (math.sqrt(math.pi) * math.gamma(gamma))
    return c * y0 ** (2 * gamma) / (x**2 + y0**2) ** ((1 + 2 * gamma) / 2)


@dataclass(frozen=True, eq=False)
class PoissonReport:
    y0: float
    synthesis: np.ndarray
    quadrature: np.ndarray
    discrepancy: float


def _mode_value(kmag: float, params: FracParams, y0: float, nodes: int) -> float:
    # pick Y so that y0 is exactly a mesh node
    p = default_grading(params)
    Ymin = max(8.0 / kmag, 4.0 * y0)
    j0 = max(1, int(nodes * (y0 / Ymin) ** (1 / p)))
    Y = y0 * (nodes / j0) ** p
    mesh = GradedMesh(Y, nodes, p)
    return float(solve_mode(kmag, params, mesh).values[j0])


def poisson_kernel_compare(f: GridFunction, gamma: float, y0: float, *, nodes: int = 4096,
                           image_radius: int = 64, margin: float = 0.05) -> PoissonReport:
    """``U(., y0)`` by mode synthesis and by quadrature against the Poisson kernel."""
    if f.dims != 1:
        raise ValueError("Poisson-kernel comparison is implemented for n = 1 only")
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if y0 <= 0:
        raise ValueError(f"y0 must be positive, got {y0}")
    v = f.values
    N, L = f.sizes[0], f.period[0]
    edge = max(1, int(margin * N))
    peak = float(np.max(np.abs(v)))
    if peak > 0 and max(np.max(np.abs(v[:edge])), np.max(np.abs(v[-edge:]))) > 1e-8 * peak:
        raise ValueError("support of f reaches the box edge")
    params = make_params(max(1, math.ceil(2 * gamma + 1e-9)), gamma)

    F = dft(f)
    xi = np.round(F.xi_norm(), 12)
    values = {0.0: 1.0}
    for k in np.unique(xi):
        if k > 0:
            values[float(k)] = _mode_value(float(k), params, y0, nodes)
    symbol = np.vectorize(lambda k: values[float(k)])(xi)
    synthesis = idft(SpectralField(F.coefficients * symbol, F.period)).values

    h = L / N
    offsets = np.arange(N) * h
    images = np.arange(-image_radius, image_radius + 1) * L
    kper = poisson_kernel(offsets[None, :] + images[:, None], y0, gamma).sum(axis=0)
    quad = np.real(np.fft.ifft(np.fft.fft(v) * np.fft.fft(kper))) * h
    # far images: kernel ~ c y0^2g |t|^(-1-2g), integrated beyond the image window
    R = (image_radius + 0.5) * L
    c = math.gamma((1 + 2 * gamma) / 2) / (math.sqrt(math.pi) * math.gamma(gamma))
    quad += v.mean() * 2 * c * y0 ** (2 * gamma) / (2 * gamma * R ** (2 * gamma))

    scale = np.linalg.norm(synthesis)
    disc = 0.0 if scale == 0 else float(np.linalg.norm(synthesis - quad) / scale)
    return PoissonReport(y0, synthesis, quad, disc)


# -- convergence reports --------------------------------------------------------

CONVERGENCE_COLUMNS = ("gamma", "n", "kmag", "N", "Y", "p", "estimate", "exact", "rel_err",
                       "observed_order")


@dataclass(frozen=True)
class ConvergenceRow:
    gamma: float
    n: int
    kmag: float
    N: int
    Y: float
    p: float
    estimate: float
    exact: float
    rel_err: float
    observed_order: float


def convergence_study(params: FracParams, kmag: float, Ns=(1024, 2048, 4096),
                      far_field: float = 8.0, p: float | None = None,
                      q: int = 12) -> list[ConvergenceRow]:
    """Refinement sweep; the order at row i is ``log2 |e_{i-2} - e_{i-1}| / |e_{i-1} - e_i|``.

    The order is measured by self-convergence because the error against the
    exact symbol floors at the far-field truncation ``exp(-2 k Y)``.
    """
    exact = kmag ** (2 * params.gamma)
    rows, est = [], []
    for N in Ns:
        mesh = GradedMesh.for_mode(kmag, params, N, far_field, p)
        r = extract(solve_mode(kmag, params, mesh), q)
        est.append(r.p_gamma_value)
        order = math.nan
        if len(est) >= 3:
            d1, d2 = abs(est[-3] - est[-2]), abs(est[-2] - est[-1])
            order = math.log2(d1 / d2) if d1 > 0 and d2 > 0 else math.inf
        rows.append(ConvergenceRow(params.gamma, params.n, kmag, N, mesh.Y, mesh.p, r.p_gamma_value,
                                   exact, abs(abs(r.p_gamma_value) - exact) / exact, order))
    return rows


def _g17(x) -> str:
    return f"{x:.17g}" if isinstance(x, float) else str(x)


def convergence_csv(rows) -> str:
    out = io.StringIO()
    out.write("# fraclap-convergence v1\n")
    out.write(",".join(CONVERGENCE_COLUMNS) + "\n")
    for r in rows:
        out.write(",".join(_g17(getattr(r, c)) for c in CONVERGENCE_COLUMNS) + "\n")
    return out.getvalue()
