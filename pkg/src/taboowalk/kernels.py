"""Torus-integral kernels: p(t;x,y), G_lambda(x,y), rho_d(x), K_d(lambda;r).

All four are Fourier integrals over [-pi, pi]^d built from the walk's
characteristic exponent phi.  Smooth integrands (the heat kernel p, the
d = 1 potential kernel, the Lemma-5 identity) go through the periodic
midpoint rule with grid doubling.  Green's functions and the d >= 2
potential kernel are singular or sharply peaked at theta = 0 and are
integrated over dyadic shells that telescope toward the origin, with an
analytic estimate and error bound for the remaining core box.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gamma as _gamma_fn
from typing import Sequence

import numpy as np

from .errors import DivergentGreenFunction, NotConverged
from .model import WalkModel, as_vec, char_exponent_grid, spectral_scalars
from .quadrature import (
    ABS_FLOOR,
    box_midpoint_sum,
    refine_torus_mean,
    romberg_ladder,
    shell_max_levels,
    shell_points,
)

_MAX_SHELLS = 62
_SHELL_N0 = 16


@lru_cache(maxsize=96)
def _shell_phi(model: WalkModel, s: float, n: int) -> np.ndarray:
    out = char_exponent_grid(model, shell_points(s, model.d, n))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=96)
def _shell_cos(r: tuple, s: float, d: int, n: int) -> np.ndarray:
    out = np.cos(shell_points(s, d, n) @ np.asarray(r, dtype=float))
    out.setflags(write=False)
    return out


def _shell_sum(model, s: float, n: int, values_fn, fallback_f) -> float:
    """One midpoint shell sum, using cached grid/phi/cos arrays when small.

    values_fn(s, n) -> integrand values on the cached shell grid;
    fallback_f(points) recomputes everything for grids too large to cache.
    """
    d = model.d
    if shell_points(s, d, n) is None:
        return box_midpoint_sum(fallback_f, s, d, n, exclude_inner_half=True)
    h = 2.0 * s / n
    return float(np.sum(values_fn(s, n))) * h**d


@dataclass(frozen=True)
class QuadratureConfig:
    """Grid resolution and tolerance for the torus quadratures."""

    points_per_axis: int = 256
    refinement_limit: int = 4
    rel_tol: float = 1e-8

    def __post_init__(self):
        if self.points_per_axis < 16 or self.points_per_axis % 2:
            raise ValueError("points_per_axis must be even and >= 16")
        if self.refinement_limit < 0:
            raise ValueError("refinement_limit must be >= 0")
        if not self.rel_tol > 0.0:
            raise ValueError("rel_tol must be > 0")


@dataclass(frozen=True)
class KernelValue:
    value: float
    est_error: float

    def __float__(self) -> float:
        return self.value


def default_config(d: int) -> QuadratureConfig:
    if d <= 2:
        return QuadratureConfig(points_per_axis=256, refinement_limit=4, rel_tol=1e-8)
    if d == 3:
        return QuadratureConfig(points_per_axis=64, refinement_limit=4, rel_tol=1e-6)
    return QuadratureConfig(points_per_axis=32, refinement_limit=4, rel_tol=1e-6)


def _cfg(model_d: int, cfg: QuadratureConfig | None) -> QuadratureConfig:
    return cfg if cfg is not None else default_config(model_d)


def canonical_diff(x: Sequence[int], y: Sequence[int], d: int) -> tuple[int, ...]:
    """y - x up to sign, canonicalized so r and -r map to the same tuple.

    All kernels are even in the displacement, so collapsing the sign makes
    symmetry relations exact (identical integrand, identical float result)
    and doubles cache hits.
    """
    xv = as_vec(x, d)
    yv = as_vec(y, d)
    r = tuple(b - a for a, b in zip(xv, yv))
    neg = tuple(-c for c in r)
    return max(r, neg)


def _not_converged(name, value, err):
    raise NotConverged(
        f"{name} refinement limit reached: value={value!r} est_error={err:.3e}",
        value=value,
        est_error=err,
    )


# ---------------------------------------------------------------------------
# transition probability p(t; x, y)
# ---------------------------------------------------------------------------

def transition_probability(
    model: WalkModel,
    t: float,
    x: Sequence[int],
    y: Sequence[int],
    cfg: QuadratureConfig | None = None,
) -> KernelValue:
    """p(t;x,y) = (2 pi)^-d * integral of exp(phi(theta) t) cos(theta, y-x).

    The imaginary part vanishes by symmetry and is never computed.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    cfg = _cfg(model.d, cfg)
    r = canonical_diff(x, y, model.d)
    rv = np.asarray(r, dtype=float)

    def f(pts):
        return np.exp(char_exponent_grid(model, pts) * t) * np.cos(pts @ rv)

    val, err, ok = refine_torus_mean(
        f, model.d, cfg.points_per_axis, cfg.refinement_limit, cfg.rel_tol
    )
    if not ok:
        _not_converged("transition_probability", val, err)
    return KernelValue(value=min(1.0, max(0.0, val)), est_error=err)


# ---------------------------------------------------------------------------
# Green's function G_lambda(x, y) and K_d
# ---------------------------------------------------------------------------

def _shell_integral(
    model, values_fn, fallback_f, rel_tol, core_value_fn, core_bound_fn, scale_hint=0.0
):
    """Sum dyadic-shell quadratures of the integrand toward theta = 0.

    core_value_fn(half_width) and core_bound_fn(half_width) supply the
    analytic estimate for the remaining central box and a bound on its
    error; shelling stops once that bound is negligible at rel_tol.
    Returns (raw integral, error estimate, scale, refined), where scale
    tracks the largest running total (seeded by scale_hint): for
    oscillatory numerators the value may be exponentially smaller than the
    mass actually integrated, and accuracy is only meaningful relative to
    that mass.  ``refined`` is False when some shell or the final core
    bound hit its refinement cap before meeting its tolerance.
    """
    d = model.d
    total = 0.0
    err = 0.0
    scale = float(scale_hint)
    refined = True
    for m in range(_MAX_SHELLS + 1):
        s = np.pi * 2.0**-m
        tol_abs = 0.05 * rel_tol * max(abs(total), scale, ABS_FLOOR)
        v, e, conv = romberg_ladder(
            lambda n: _shell_sum(model, s, n, values_fn, fallback_f),
            tol_abs,
            _SHELL_N0,
            shell_max_levels(d),
            tol_rel=0.05 * rel_tol,
        )
        total += v
        err += e
        refined &= conv
        scale = max(scale, abs(total))
        half = s / 2.0
        core_bound = core_bound_fn(half)
        if core_bound <= 0.02 * rel_tol * max(scale, ABS_FLOOR):
            total += core_value_fn(half)
            err += core_bound
            scale = max(scale, abs(total))
            break
        if m == _MAX_SHELLS:
            refined = False
            total += core_value_fn(half)
            err += core_bound
            scale = max(scale, abs(total))
    return total, err, scale, refined


@lru_cache(maxsize=4096)
def _green_cached(model: WalkModel, lam: float, r: tuple, cfg: QuadratureConfig) -> KernelValue:
    d = model.d
    rv = np.asarray(r, dtype=float)
    rnorm = float(np.linalg.norm(rv))
    sc = spectral_scalars(model)
    eig = np.linalg.eigvalsh(sc.hessian)
    sig_min, sig_max = float(eig[0]), float(eig[-1])

    def f(pts):
        return np.cos(pts @ rv) / (lam - char_exponent_grid(model, pts))

    def values(s, n):
        return _shell_cos(r, s, d, n) / (lam - _shell_phi(model, s, n))

    if lam > 0.0:
        def core_value(half):
            return (2.0 * half) ** d / lam

        def core_bound(half):
            rad2 = d * half * half
            return ((2.0 * half) ** d / lam) * (
                0.5 * sig_max * rad2 / lam + 0.5 * rnorm**2 * rad2
            )
    else:
        omega = 2.0 * np.pi ** (d / 2.0) / _gamma_fn(d / 2.0)

        def core_value(half):
            return 0.0

        def core_bound(half):
            rad = half * np.sqrt(d)
            return (2.0 / sig_min) * omega * rad ** (d - 2) / (d - 2)

    norm = (2.0 * np.pi) ** d
    # the unsigned integrand mass is the r = 0 value; seeding the scale with
    # it keeps oscillatory displacements from over-refining the outer shells
    hint = 0.0
    if any(r):
        hint = _green_cached(model, lam, (0,) * d, cfg).value * norm
    total, err, scale, refined = _shell_integral(
        model, values, f, cfg.rel_tol, core_value, core_bound, scale_hint=hint
    )
    value, err = total / norm, err / norm
    if not refined and err > max(cfg.rel_tol * scale / norm, ABS_FLOOR):
        _not_converged("green_function", value, err)
    return KernelValue(value=value, est_error=err)


def green_function(
    model: WalkModel,
    lam: float,
    x: Sequence[int],
    y: Sequence[int],
    cfg: QuadratureConfig | None = None,
) -> KernelValue:
    """G_lambda(x,y) = (2 pi)^-d * integral of cos(theta, y-x) / (lambda - phi).

    lambda = 0 (the Green's function proper) is finite only for d >= 3;
    requesting it in d <= 2 raises DivergentGreenFunction.
    """
    if lam < 0.0:
        raise ValueError("lambda must be >= 0")
    if lam == 0.0 and model.d <= 2:
        raise DivergentGreenFunction(
            f"G_0 diverges for d = {model.d} (recurrent walk)"
        )
    cfg = _cfg(model.d, cfg)
    r = canonical_diff(x, y, model.d)
    return _green_cached(model, float(lam), r, cfg)


def k_kernel(
    model: WalkModel,
    lam: float,
    r: Sequence[int],
    cfg: QuadratureConfig | None = None,
) -> float:
    """K_d(lambda; r) = (G_0(0,r) - G_lambda(0,r)) / lambda, d >= 3."""
    if model.d <= 2:
        raise DivergentGreenFunction(f"K_d requires d >= 3, got d = {model.d}")
    if not lam > 0.0:
        raise ValueError("lambda must be > 0")
    zero = (0,) * model.d
    g0 = green_function(model, 0.0, zero, r, cfg).value
    gl = green_function(model, lam, zero, r, cfg).value
    return (g0 - gl) / lam


# ---------------------------------------------------------------------------
# potential kernel rho_d(x)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def _rho_cached(model: WalkModel, r: tuple, cfg: QuadratureConfig) -> float:
    a = model.total_rate
    rv = np.asarray(r, dtype=float)

    def f(pts):
        return a * (np.cos(pts @ rv) - 1.0) / char_exponent_grid(model, pts)

    def values(s, n):
        return a * (_shell_cos(r, s, model.d, n) - 1.0) / _shell_phi(model, s, n)

    if model.d == 1:
        # ratio of analytic functions with matching double zeros: smooth
        # and periodic, so the plain midpoint rule is spectrally accurate
        val, err, ok = refine_torus_mean(
            f, 1, cfg.points_per_axis, cfg.refinement_limit, cfg.rel_tol
        )
        if not ok:
            _not_converged("rho", val, err)
        return val

    sc = spectral_scalars(model)
    sig_min = float(np.linalg.eigvalsh(sc.hessian)[0])
    rnorm2 = float(rv @ rv)

    def core_value(half):
        return 0.0

    def core_bound(half):
        # |1 - cos(x.theta)| / (-phi) <= a |x|^2 / sig_min near 0
        return (2.0 * half) ** model.d * a * rnorm2 / sig_min

    total, err, scale, refined = _shell_integral(
        model, values, f, cfg.rel_tol, core_value, core_bound
    )
    norm = (2.0 * np.pi) ** model.d
    value, err = total / norm, err / norm
    if not refined and err > max(cfg.rel_tol * scale / norm, ABS_FLOOR):
        _not_converged("rho", value, err)
    return value


def rho(model: WalkModel, x: Sequence[int], cfg: QuadratureConfig | None = None) -> float:
    """Potential-kernel value rho_d(x); rho_d(0) = 1 by definition.

    For x != 0 this is a (2 pi)^-d integral of a (cos(x,theta) - 1)/phi(theta);
    the integrand has a finite limit at theta = 0 which the midpoint grids
    never sample.
    """
    r = as_vec(x, model.d)
    if not any(r):
        return 1.0
    cfg = _cfg(model.d, cfg)
    neg = tuple(-c for c in r)
    return _rho_cached(model, max(r, neg), cfg)


# ---------------------------------------------------------------------------
# Lemma-5 trigonometric identity
# ---------------------------------------------------------------------------

def trig_identity_check(x: int, cfg: QuadratureConfig | None = None) -> float:
    """Quadrature of integral over [-pi,pi] of (1 - cos(x theta))/(1 - cos theta).

    The exact value is 2 pi x; the integrand is the degree-(x-1) Fejer-type
    trigonometric polynomial, so the periodic midpoint rule is exact up to
    rounding once the grid exceeds the degree.
    """
    if not isinstance(x, (int, np.integer)) or x < 1:
        raise ValueError("x must be a positive integer")
    cfg = cfg if cfg is not None else default_config(1)

    def f(pts):
        th = pts[:, 0]
        return (np.sin(x * th / 2.0) / np.sin(th / 2.0)) ** 2

    n0 = max(cfg.points_per_axis, 2 * (int(x) + 1))
    val, err, ok = refine_torus_mean(f, 1, n0, cfg.refinement_limit, cfg.rel_tol)
    if not ok:
        _not_converged("trig_identity_check", val, err)
    return val * 2.0 * np.pi
