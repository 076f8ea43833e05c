"""Model definitions for size-structured growth-fragmentation dynamics.

A model couples four coefficient functions on the size axis (growth rate
``r``, fragmentation rate ``a``, daughter-distribution kernel ``b`` and
renewal weight ``beta``) with the exponent ``m`` of the weighted space
in which densities are measured, ``||f||_m = int (1+x^m)|f(x)| dx``.

Two renewal-boundary conventions are supported.  Under ``flux`` the influx
of mass at size zero equals the weighted population integral,
``lim_{x->0+} r(x) u(x) = <beta, u>``; under ``value`` the boundary trace
itself is prescribed, ``u(0) = <beta, u>``.  The conversion is a factor
``r(0)``: machinery that works in the flux convention multiplies a
value-convention ``beta`` by ``r(0)`` (see :func:`boundary_weight_flux`).

This module also provides the grid container used everywhere downstream,
the antiderivatives of ``1/r`` and ``a/r`` that drive the transport
resolvent, the kernel moment functionals, and the assumption validator.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import integrate, optimize

from .errors import (
    DivergentNormError,
    InvalidInputError,
    InvalidModelError,
)

__all__ = [
    "Constant",
    "Linear",
    "Power",
    "Tabulated",
    "CoefficientSpec",
    "UniformBinary",
    "PowerLaw",
    "InverseEpsilon",
    "ShrinkingBinary",
    "TabulatedKernel",
    "KernelSpec",
    "ModelDefinition",
    "GridFunction",
    "RQFunctions",
    "AssumptionReport",
    "compute_RQ",
    "xm_norm",
    "l1_norm",
    "dual_norm_beta",
    "kernel_moment",
    "kernel_defect",
    "kernel_density",
    "kernel_atoms",
    "is_atomic_kernel",
    "daughter_count_bound",
    "validate_assumptions",
    "boundary_weight_flux",
    "scale_coefficient",
    "linear_growth_bound",
    "polynomial_growth_pair",
    "coefficient_is_zero",
    "quad_weights",
    "pairing",
    "grid_eval",
    "midpoint_grid",
    "grid_from_callable",
    "model_from_config",
    "load_model",
    "coefficient_from_config",
    "kernel_from_config",
]


def _match(x, values):
    """Return a python float for scalar input, the array otherwise."""
    return values if np.ndim(x) else float(values)


# ---------------------------------------------------------------------------
# coefficient functions


@dataclass(frozen=True)
class Constant:
    """Coefficient with constant value ``c >= 0``."""

    c: float

    def __post_init__(self):
        if not np.isfinite(self.c) or self.c < 0:
            raise InvalidModelError(f"constant coefficient must be finite and >= 0, got {self.c}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return _match(x, np.full(x.shape, float(self.c)))


@dataclass(frozen=True)
class Linear:
    """Coefficient ``c0 + c1*x`` with nonnegative c0, c1."""

    c0: float
    c1: float

    def __post_init__(self):
        if self.c0 < 0 or self.c1 < 0:
            raise InvalidModelError("linear coefficient needs c0, c1 >= 0")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return _match(x, self.c0 + self.c1 * x)


@dataclass(frozen=True)
class Power:
    """Coefficient ``c0*(1 + x**p)`` with c0 >= 0 and p >= 0."""

    c0: float
    p: float

    def __post_init__(self):
        if self.c0 < 0 or self.p < 0:
            raise InvalidModelError("power coefficient needs c0 >= 0 and p >= 0")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return _match(x, self.c0 * (1.0 + np.power(x, self.p)))


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear coefficient through ``(nodes, values)``.

    Values extend as constants beyond the tabulated range (tabulate a
    trailing zero for compactly supported coefficients).
    """

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or nodes.shape != values.shape:
            raise InvalidModelError("tabulated coefficient needs matching 1-D nodes/values, >= 2 points")
        if np.any(np.diff(nodes) <= 0) or nodes[0] < 0:
            raise InvalidModelError("tabulated nodes must be strictly increasing and nonnegative")
        if np.any(values < 0):
            raise InvalidModelError("tabulated values must be nonnegative")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return _match(x, np.interp(x, self.nodes, self.values))


CoefficientSpec = Union[Constant, Linear, Power, Tabulated]


def coefficient_is_zero(spec: CoefficientSpec) -> bool:
    if isinstance(spec, Constant):
        return spec.c == 0.0
    if isinstance(spec, Linear):
        return spec.c0 == 0.0 and spec.c1 == 0.0
    if isinstance(spec, Power):
        return spec.c0 == 0.0
    return bool(np.all(spec.values == 0.0))


def scale_coefficient(spec: CoefficientSpec, factor: float) -> CoefficientSpec:
    """Return the coefficient multiplied by a nonnegative scalar."""
    if factor < 0:
        raise InvalidInputError("scale factor must be nonnegative")
    if isinstance(spec, Constant):
        return Constant(spec.c * factor)
    if isinstance(spec, Linear):
        return Linear(spec.c0 * factor, spec.c1 * factor)
    if isinstance(spec, Power):
        return Power(spec.c0 * factor, spec.p)
    return Tabulated(spec.nodes, spec.values * factor)


def _as_affine(spec: CoefficientSpec):
    """Coefficients expressible as c0 + c1*x, or None."""
    if isinstance(spec, Constant):
        return spec.c, 0.0
    if isinstance(spec, Linear):
        return spec.c0, spec.c1
    if isinstance(spec, Power):
        if spec.p == 0.0:
            return 2.0 * spec.c0, 0.0
        if spec.p == 1.0:
            return spec.c0, spec.c0
    return None


def _sup_ratio(fn: Callable, denom: Callable, x_hi: float = 1e6) -> float:
    """Supremum of fn(x)/denom(x) on [0, x_hi] by scan plus local refinement."""
    grid = np.concatenate(([0.0], np.geomspace(1e-8, x_hi, 3000)))
    ratios = np.asarray(fn(grid)) / np.asarray(denom(grid))
    i = int(np.argmax(ratios))
    best = float(ratios[i])
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(
            lambda x: -float(fn(x) / denom(x)), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12},
        )
        best = max(best, float(-res.fun))
    return best


def linear_growth_bound(spec: CoefficientSpec) -> float:
    """Smallest r0 with value(x) <= r0*(1+x) for all x >= 0."""
    if isinstance(spec, Constant):
        return spec.c
    if isinstance(spec, Linear):
        return max(spec.c0, spec.c1)
    if isinstance(spec, Power):
        if spec.p > 1.0:
            raise DivergentNormError("coefficient grows faster than linearly; no linear bound")
        return _sup_ratio(spec, lambda x: 1.0 + np.asarray(x, dtype=float))
    return float(np.max(spec.values / (1.0 + spec.nodes)))


def polynomial_growth_pair(spec: CoefficientSpec) -> tuple[float, float]:
    """Smallest (a0, p) with value(x) <= a0*(1+x**p), p the natural exponent."""
    if isinstance(spec, Constant):
        return spec.c / 2.0, 0.0
    if isinstance(spec, Linear):
        if spec.c1 == 0.0:
            return spec.c0 / 2.0, 0.0
        return max(spec.c0, spec.c1), 1.0
    if isinstance(spec, Power):
        return spec.c0, spec.p
    return float(np.max(spec.values)) / 2.0, 0.0


# ---------------------------------------------------------------------------
# fragmentation kernels


@dataclass(frozen=True)
class UniformBinary:
    """Binary splitting with uniformly distributed daughter size: b(x,y)=2/y."""


@dataclass(frozen=True)
class PowerLaw:
    """Daughter density b(x,y) = (nu+2) x^nu / y^(nu+1) on 0<x<y, nu > -1."""

    nu: float

    def __post_init__(self):
        if self.nu <= -1:
            raise InvalidModelError("power-law kernel requires nu > -1")


@dataclass(frozen=True)
class InverseEpsilon:
    """Size-dependent split fraction eps(y) = min(1/2, scale/y)."""

    scale: float = 1.0

    def __post_init__(self):
        if self.scale <= 0:
            raise InvalidModelError("inverse epsilon needs scale > 0")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            return _match(y, np.minimum(0.5, self.scale / y))


@dataclass(frozen=True)
class ShrinkingBinary:
    """Two daughter atoms at eps(y)*y and (1-eps(y))*y.

    ``eps`` is either a constant in (0, 1/2] or an :class:`InverseEpsilon`.
    """

    eps: Union[float, InverseEpsilon] = 0.25

    def __post_init__(self):
        if isinstance(self.eps, float) and not 0.0 < self.eps <= 0.5:
            raise InvalidModelError("constant split fraction must lie in (0, 1/2]")

    def eps_at(self, y):
        if isinstance(self.eps, InverseEpsilon):
            return self.eps(y)
        return _match(y, np.full(np.shape(y), float(self.eps)))


@dataclass(frozen=True)
class TabulatedKernel:
    """Self-similar kernel b(x,y) = h(x/y)/y with h tabulated on ratios in (0,1).

    ``h`` is linearly interpolated between the tabulated ratios and zero
    outside their range.  The kernel is conservative iff int rho*h(rho) drho = 1.
    """

    ratios: np.ndarray
    densities: np.ndarray

    def __post_init__(self):
        ratios = np.asarray(self.ratios, dtype=float)
        dens = np.asarray(self.densities, dtype=float)
        if ratios.ndim != 1 or ratios.size < 2 or ratios.shape != dens.shape:
            raise InvalidModelError("tabulated kernel needs matching 1-D ratios/densities, >= 2 points")
        if np.any(np.diff(ratios) <= 0) or ratios[0] < 0 or ratios[-1] > 1:
            raise InvalidModelError("kernel ratios must be strictly increasing within [0,1]")
        if np.any(dens < 0):
            raise InvalidModelError("kernel densities must be nonnegative")
        object.__setattr__(self, "ratios", ratios)
        object.__setattr__(self, "densities", dens)

    def shape_fn(self, rho):
        rho = np.asarray(rho, dtype=float)
        return _match(rho, np.interp(rho, self.ratios, self.densities, left=0.0, right=0.0))


KernelSpec = Union[UniformBinary, PowerLaw, ShrinkingBinary, TabulatedKernel]


def is_atomic_kernel(kernel: KernelSpec) -> bool:
    return isinstance(kernel, ShrinkingBinary)


def _ratio_moment(kernel: TabulatedKernel, m: float) -> float:
    # int_0^1 rho^m h(rho) drho with h piecewise linear: per-panel Gauss rule
    nodes, g = np.polynomial.legendre.leggauss(8)
    lo = kernel.ratios[:-1]
    hi = kernel.ratios[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = mid[:, None] + half[:, None] * nodes[None, :]
    vals = np.power(pts, m) * kernel.shape_fn(pts)
    return float(np.sum(half[:, None] * g[None, :] * vals))


def kernel_moment(kernel: KernelSpec, m: float, y):
    """m-th daughter moment n_m(y) = int_0^y x^m b(x,y) dx."""
    if m < 0:
        raise InvalidInputError("moment order must be nonnegative")
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr <= 0):
        raise InvalidInputError("parent size must be positive")
    if isinstance(kernel, UniformBinary):
        out = 2.0 * np.power(y_arr, m) / (m + 1.0)
    elif isinstance(kernel, PowerLaw):
        out = (kernel.nu + 2.0) * np.power(y_arr, m) / (m + kernel.nu + 1.0)
    elif isinstance(kernel, ShrinkingBinary):
        eps = np.asarray(kernel.eps_at(y_arr), dtype=float)
        out = np.power(y_arr, m) * (np.power(eps, m) + np.power(1.0 - eps, m))
    elif isinstance(kernel, TabulatedKernel):
        out = np.power(y_arr, m) * _ratio_moment(kernel, m)
    else:
        raise InvalidModelError(f"unknown kernel {kernel!r}")
    return _match(y, out)


def kernel_defect(kernel: KernelSpec, m: float, y):
    """Moment defect N_m(y) = y^m - n_m(y)."""
    y_arr = np.asarray(y, dtype=float)
    return _match(y, np.power(y_arr, m) - np.asarray(kernel_moment(kernel, m, y_arr)))


def kernel_density(kernel: KernelSpec, x, y):
    """Pointwise daughter density b(x, y); zero for x >= y.

    Atomic kernels have no density; use :func:`kernel_atoms` for those.
    """
    if is_atomic_kernel(kernel):
        raise InvalidInputError("atomic kernel has no pointwise density")
    x_arr, y_arr = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    inside = (x_arr < y_arr) & (y_arr > 0) & (x_arr >= 0)
    safe_y = np.where(y_arr > 0, y_arr, 1.0)
    if isinstance(kernel, UniformBinary):
        out = np.where(inside, 2.0 / safe_y, 0.0)
    elif isinstance(kernel, PowerLaw):
        nu = kernel.nu
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = (nu + 2.0) * np.power(x_arr, nu) / np.power(safe_y, nu + 1.0)
        out = np.where(inside, vals, 0.0)
    else:
        rho = np.where(inside, x_arr / safe_y, 0.0)
        out = np.where(inside, np.asarray(kernel.shape_fn(rho)) / safe_y, 0.0)
    return _match(x if np.ndim(x) >= np.ndim(y) else y, out)


def kernel_atoms(kernel: KernelSpec, y: float) -> list[tuple[float, float]]:
    """Daughter point masses [(location, count-weight), ...] of an atomic kernel."""
    if not is_atomic_kernel(kernel):
        raise InvalidInputError("kernel is not atomic")
    eps = float(kernel.eps_at(float(y)))
    return [(eps * y, 1.0), ((1.0 - eps) * y, 1.0)]


def daughter_count_bound(kernel: KernelSpec) -> tuple[float, float]:
    """Smallest (b0, l) with n_0(y) <= b0*(1+y^l); l = 0 for all built-in kernels."""
    if isinstance(kernel, UniformBinary) or isinstance(kernel, ShrinkingBinary):
        return 1.0, 0.0
    if isinstance(kernel, PowerLaw):
        return (kernel.nu + 2.0) / (2.0 * (kernel.nu + 1.0)), 0.0
    return _ratio_moment(kernel, 0.0) / 2.0, 0.0


# ---------------------------------------------------------------------------
# grids and weighted norms


@dataclass
class GridFunction:
    """Density samples on a strictly increasing size grid.

    ``m`` is the weight exponent of the ambient space; quadrature over the
    grid uses the composite trapezoid rule with zero extension beyond the
    last node.
    """

    nodes: np.ndarray
    values: np.ndarray
    m: float = 2.0

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise InvalidInputError("grid needs at least two nodes")
        if nodes.shape != values.shape:
            raise InvalidInputError("nodes and values must have matching shape")
        if np.any(np.diff(nodes) <= 0) or nodes[0] < 0:
            raise InvalidInputError("grid nodes must be strictly increasing and nonnegative")
        self.nodes = nodes
        self.values = values

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.nodes, np.asarray(values, dtype=float), self.m)

    def __call__(self, x):
        """Linear interpolation; zero beyond the last node, constant below the first."""
        x_arr = np.asarray(x, dtype=float)
        out = np.interp(x_arr, self.nodes, self.values, left=self.values[0], right=0.0)
        return _match(x, out)


def quad_weights(nodes: np.ndarray) -> np.ndarray:
    """Quadrature weights integrating grid samples over [0, nodes[-1]].

    Composite trapezoid between nodes; the leading panel [0, nodes[0]] is
    closed with a rectangle carrying the first value (matching the constant
    left extension used when evaluating a :class:`GridFunction`).
    """
    nodes = np.asarray(nodes, dtype=float)
    w = np.zeros_like(nodes)
    d = np.diff(nodes)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    w[0] += nodes[0]
    return w


def xm_norm(f: GridFunction, m: float | None = None) -> float:
    """Weighted norm int (1+x^m)|f(x)| dx over the grid (zero tail)."""
    mm = f.m if m is None else m
    w = quad_weights(f.nodes)
    return float(np.sum(w * (1.0 + np.power(f.nodes, mm)) * np.abs(f.values)))


def l1_norm(f: GridFunction) -> float:
    """Plain integral of |f| over the grid."""
    return float(np.sum(quad_weights(f.nodes) * np.abs(f.values)))


def pairing(g, f: GridFunction) -> float:
    """Duality pairing int g(x) f(x) dx; g is a callable or a sample array."""
    g_vals = np.asarray(g(f.nodes), dtype=float) if callable(g) else np.asarray(g, dtype=float)
    return float(np.sum(quad_weights(f.nodes) * g_vals * f.values))


def grid_eval(fn: Callable, nodes: np.ndarray) -> np.ndarray:
    return np.asarray(fn(np.asarray(nodes, dtype=float)), dtype=float)


def midpoint_grid(x_max: float, n_cells: int) -> np.ndarray:
    """Cell-midpoint nodes of a uniform mesh on (0, x_max]."""
    if n_cells < 2 or x_max <= 0:
        raise InvalidInputError("need x_max > 0 and at least two cells")
    dx = x_max / n_cells
    return dx * (np.arange(n_cells) + 0.5)


def grid_from_callable(fn: Callable, nodes: np.ndarray, m: float = 2.0) -> GridFunction:
    return GridFunction(np.asarray(nodes, dtype=float), grid_eval(fn, nodes), m)


# ---------------------------------------------------------------------------
# model definition


_BC_CONVENTIONS = ("flux", "value")


@dataclass(frozen=True)
class ModelDefinition:
    """Complete problem definition; immutable after construction."""

    r: CoefficientSpec
    a: CoefficientSpec
    kernel: KernelSpec
    beta: CoefficientSpec
    m: float = 2.0
    bc_convention: str = "flux"
    x_max: float = 50.0
    support: object = None

    def __post_init__(self):
        if not self.m > 1.0:
            raise InvalidModelError(f"weight exponent must exceed 1, got {self.m}")
        if self.bc_convention not in _BC_CONVENTIONS:
            raise InvalidModelError(f"bc_convention must be one of {_BC_CONVENTIONS}")
        if self.x_max <= 0:
            raise InvalidModelError("x_max must be positive")
        probe = np.concatenate(([0.0, self.x_max * 1e-9], np.linspace(1e-6, self.x_max, 257)))
        r_vals = np.asarray(self.r(probe))
        if np.any(r_vals <= 0):
            # growth must not vanish anywhere, the origin included: the renewal
            # influx enters through the boundary flux r(0) u(0)
            raise InvalidModelError("growth coefficient r must be strictly positive on [0, x_max]")


def boundary_weight_flux(model: ModelDefinition) -> CoefficientSpec:
    """Renewal weight in the flux convention (lim r*u = <beta, u>)."""
    if model.bc_convention == "flux":
        return model.beta
    r0 = float(model.r(0.0))
    return scale_coefficient(model.beta, r0)


# ---------------------------------------------------------------------------
# antiderivatives of 1/r and a/r


@dataclass(frozen=True)
class RQFunctions:
    """Antiderivatives R(x) = int_0^x ds/r(s) and Q(x) = int_0^x a(s)/r(s) ds."""

    R: Callable
    Q: Callable
    M_Q: float


class _CumulativeIntegral:
    """Adaptive cumulative antiderivative F(x) = int_0^x g, cached at visited knots."""

    def __init__(self, integrand: Callable, tol: float):
        self._g = integrand
        self._tol = tol
        self._knots = [0.0]
        self._vals = [0.0]

    def _value_at(self, x: float) -> float:
        i = bisect.bisect_right(self._knots, x) - 1
        x0, f0 = self._knots[i], self._vals[i]
        if x == x0:
            return f0
        inc, _ = integrate.quad(self._g, x0, x, epsabs=self._tol, epsrel=1e-12, limit=200)
        val = f0 + inc
        bisect.insort(self._knots, x)
        self._vals.insert(self._knots.index(x), val)
        if len(self._knots) > 200000:
            del self._knots[1:-1:2], self._vals[1:-1:2]
        return val

    def __call__(self, x):
        if np.ndim(x) == 0:
            return self._value_at(float(x))
        xs = np.asarray(x, dtype=float)
        out = np.empty(xs.shape)
        flat = xs.ravel()
        res = out.ravel()
        for j in np.argsort(flat):
            res[j] = self._value_at(float(flat[j]))
        return out


def compute_RQ(model: ModelDefinition, tol: float = 1e-10) -> RQFunctions:
    """Antiderivative pair for the transport part.

    Analytic closed forms are used whenever r and a are (equivalent to)
    affine functions; otherwise the integrals are evaluated by adaptive
    quadrature accumulated along visited points.

    Parameters
    ----------
    model : ModelDefinition
        Supplies r and a; r must be strictly positive on (0, x_max].
    tol : float
        Absolute tolerance of the adaptive fallback.
    """
    r_spec, a_spec = model.r, model.a
    r_aff = _as_affine(r_spec)

    if r_aff is not None:
        b0, b1 = r_aff
        if b0 <= 0:
            raise InvalidModelError("growth coefficient must be positive at the origin")
        if b1 == 0.0:
            R = lambda x: np.asarray(x, dtype=float) / b0
        else:
            R = lambda x: np.log1p(b1 * np.asarray(x, dtype=float) / b0) / b1
    else:
        R = _CumulativeIntegral(lambda s: 1.0 / float(r_spec(s)), tol)

    a_aff = _as_affine(a_spec)
    Q = None
    if coefficient_is_zero(a_spec):
        Q = lambda x: np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
        m_q = 0.0
    elif a_aff is not None and r_aff is not None:
        a0, a1 = a_aff
        b0, b1 = r_aff
        if b1 == 0.0:
            Q = lambda x: (a0 * np.asarray(x, dtype=float) + 0.5 * a1 * np.asarray(x, dtype=float) ** 2) / b0
        else:
            # (a0 + a1 x)/(b0 + b1 x) = a1/b1 + (a0 b1 - a1 b0)/b1 / (b0 + b1 x)
            lead = a1 / b1
            rem = (a0 * b1 - a1 * b0) / (b1 * b1)
            Q = lambda x: lead * np.asarray(x, dtype=float) + rem * np.log1p(
                b1 * np.asarray(x, dtype=float) / b0
            )
        m_q = math.inf
    elif isinstance(a_spec, Power) and r_aff is not None and r_aff[1] == 0.0:
        c0, p = a_spec.c0, a_spec.p
        b0 = r_aff[0]
        Q = lambda x: c0 * (
            np.asarray(x, dtype=float) + np.power(np.asarray(x, dtype=float), p + 1.0) / (p + 1.0)
        ) / b0
        m_q = math.inf
    if Q is None:
        Q = _CumulativeIntegral(lambda s: float(a_spec(s)) / float(r_spec(s)), tol)
        if isinstance(a_spec, Tabulated) and a_spec.values[-1] == 0.0:
            m_q = float(Q(a_spec.nodes[-1]))
        else:
            m_q = math.inf
    return RQFunctions(R=R, Q=Q, M_Q=m_q)


# ---------------------------------------------------------------------------
# dual norm of the renewal weight


def dual_norm_beta(beta: CoefficientSpec, m: float) -> float:
    """Supremum of beta(x)/(1+x^m) over x >= 0.

    Raises
    ------
    DivergentNormError
        When beta grows at least like x^m (the supremum is infinite).
    """
    if m <= 0:
        raise InvalidInputError("weight exponent must be positive")
    if coefficient_is_zero(beta):
        return 0.0
    weight = lambda x: 1.0 + np.power(np.asarray(x, dtype=float), m)
    if isinstance(beta, Constant):
        return beta.c
    if isinstance(beta, Linear):
        if m < 1.0 and beta.c1 > 0:
            raise DivergentNormError("linear renewal weight diverges against sublinear weight")
        if m == 1.0:
            return max(beta.c0, beta.c1)
        return _sup_ratio(beta, weight)
    if isinstance(beta, Power):
        if beta.p > m:
            raise DivergentNormError("renewal weight grows faster than the space weight")
        if beta.p == m:
            return beta.c0
        return _sup_ratio(beta, weight)
    # tabulated: refine each panel; constant right-extension decays against x^m
    nodes = beta.nodes
    fine = np.unique(np.concatenate([np.linspace(nodes[i], nodes[i + 1], 33) for i in range(nodes.size - 1)]))
    vals = np.asarray(beta(fine)) / np.asarray(weight(fine))
    return float(np.max(vals))


# ---------------------------------------------------------------------------
# assumption validator


@dataclass
class AssumptionReport:
    """Empirical checks of the standing kernel/coefficient assumptions."""

    m: float
    y_horizon: float
    mass_conservation_max_rel: float
    conservative: bool
    b0_fitted: float
    l_fitted: float
    n0_bound_ok: bool
    liminf_estimate: float
    liminf_pass: bool
    c_m_fitted: float
    c_m_pass: bool

    @property
    def all_pass(self) -> bool:
        return bool(self.conservative and self.n0_bound_ok and self.liminf_pass and self.c_m_pass)

    def lines(self) -> list[str]:
        return [
            f"mass_conservation_max_rel={self.mass_conservation_max_rel:.6e}",
            f"conservative={'pass' if self.conservative else 'fail'}",
            f"daughter_count_bound_b0={self.b0_fitted:.6g}",
            f"daughter_count_bound_l={self.l_fitted:.6g}",
            f"daughter_count_bound={'pass' if self.n0_bound_ok else 'fail'}",
            f"moment_defect_liminf={self.liminf_estimate:.6e}",
            f"moment_defect_liminf={'pass' if self.liminf_pass else 'fail'}",
            f"moment_fraction_c_m={self.c_m_fitted:.6g}",
            f"moment_fraction={'pass' if self.c_m_pass else 'fail'}",
        ]


def validate_assumptions(
    model: ModelDefinition,
    y_horizon: float = 1e4,
    liminf_threshold: float = 1e-3,
    mass_tol: float = 1e-9,
) -> AssumptionReport:
    """Sample the kernel functionals and report which assumptions hold.

    Checks, all empirical over a log-spaced sample of parent sizes:
    conservation |n_1(y) - y| <= tol*y; the fitted daughter-count bound
    n_0(y) <= b0*(1+y^l); the lower limit of N_m(y)/y^m over the top decade
    of the horizon (must exceed ``liminf_threshold`` to pass); and the
    fitted moment fraction c_m = sup n_m(y)/y^m (must stay below 1).
    """
    if y_horizon <= 0:
        raise InvalidInputError("y_horizon must be positive")
    kernel, m = model.kernel, model.m
    y_all = np.geomspace(y_horizon * 1e-4, y_horizon, 400)
    n1 = np.asarray(kernel_moment(kernel, 1.0, y_all))
    mass_rel = float(np.max(np.abs(n1 - y_all) / y_all))
    conservative = mass_rel <= mass_tol

    n0 = np.asarray(kernel_moment(kernel, 0.0, y_all))
    top = y_all >= y_horizon / 10.0
    # daughter-count growth exponent from a log-log fit over the top decade
    slope = np.polyfit(np.log(y_all[top]), np.log(np.maximum(n0[top], 1e-300)), 1)[0]
    l_fit = float(slope) if slope > 1e-6 else 0.0
    b0_fit = float(np.max(n0[top] / (1.0 + np.power(y_all[top], l_fit))))
    n0_ok = bool(np.all(n0 <= b0_fit * (1.0 + np.power(y_all, l_fit)) * 1.05 + 1e-12))

    ratio_defect = np.asarray(kernel_defect(kernel, m, y_all[top])) / np.power(y_all[top], m)
    liminf_est = float(np.min(ratio_defect))
    ratio_moment = np.asarray(kernel_moment(kernel, m, y_all[top])) / np.power(y_all[top], m)
    c_m_fit = float(np.max(ratio_moment))

    return AssumptionReport(
        m=m,
        y_horizon=y_horizon,
        mass_conservation_max_rel=mass_rel,
        conservative=conservative,
        b0_fitted=b0_fit,
        l_fitted=l_fit,
        n0_bound_ok=n0_ok,
        liminf_estimate=liminf_est,
        liminf_pass=liminf_est > liminf_threshold,
        c_m_fitted=c_m_fit,
        c_m_pass=c_m_fit < 1.0,
    )


# ---------------------------------------------------------------------------
# configuration loading


def coefficient_from_config(obj) -> CoefficientSpec:
    """Build a coefficient from its JSON object form (or a bare number)."""
    if isinstance(obj, (int, float)):
        return Constant(float(obj))
    if not isinstance(obj, dict) or "type" not in obj:
        raise InvalidModelError(f"coefficient config must be a number or an object with 'type': {obj!r}")
    kind = obj["type"]
    try:
        if kind == "constant":
            return Constant(float(obj["c"]))
        if kind == "linear":
            return Linear(float(obj.get("c0", 0.0)), float(obj.get("c1", 0.0)))
        if kind == "power":
            return Power(float(obj["c0"]), float(obj["p"]))
        if kind == "tabulated":
            return Tabulated(np.asarray(obj["nodes"], dtype=float), np.asarray(obj["values"], dtype=float))
    except KeyError as exc:
        raise InvalidModelError(f"coefficient config missing key {exc} in {obj!r}") from exc
    raise InvalidModelError(f"unknown coefficient type {kind!r}")


def kernel_from_config(obj) -> KernelSpec:
    if not isinstance(obj, dict) or "type" not in obj:
        raise InvalidModelError(f"kernel config must be an object with 'type': {obj!r}")
    kind = obj["type"]
    if kind == "uniform_binary":
        return UniformBinary()
    if kind == "power_law":
        return PowerLaw(float(obj["nu"]))
    if kind == "shrinking_binary":
        eps = obj.get("eps", 0.25)
        if isinstance(eps, dict):
            if eps.get("type") != "inverse":
                raise InvalidModelError(f"unknown split-fraction form {eps!r}")
            eps = InverseEpsilon(float(eps.get("scale", 1.0)))
        else:
            eps = float(eps)
        return ShrinkingBinary(eps)
    if kind == "tabulated":
        return TabulatedKernel(np.asarray(obj["ratios"], dtype=float), np.asarray(obj["densities"], dtype=float))
    raise InvalidModelError(f"unknown kernel type {kind!r}")


def model_from_config(cfg: dict) -> ModelDefinition:
    """Assemble a ModelDefinition from a parsed configuration mapping."""
    try:
        r = coefficient_from_config(cfg["r"])
        a = coefficient_from_config(cfg["a"])
        kernel = kernel_from_config(cfg["kernel"])
        beta = coefficient_from_config(cfg["beta"])
        m = float(cfg["m"])
    except KeyError as exc:
        raise InvalidModelError(f"model config missing key {exc}") from exc
    support = None
    if cfg.get("support") is not None:
        from .irreducibility import support_model_from_config

        support = support_model_from_config(cfg["support"])
    return ModelDefinition(
        r=r,
        a=a,
        kernel=kernel,
        beta=beta,
        m=m,
        bc_convention=cfg.get("bc_convention", "flux"),
        x_max=float(cfg.get("x_max", 50.0)),
        support=support,
    )


def load_model(path) -> ModelDefinition:
    """Read a model definition from a UTF-8 JSON document."""
    with open(path, encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidModelError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise InvalidModelError(f"{path}: top-level config must be an object")
    return model_from_config(cfg)
