"""Closed-form limits and tail-asymptotic constants for (taboo) hitting times.

Everything here is a finite arithmetic combination of the potential kernel
rho_d, the spectral scalar gamma_d, and (for d >= 3) Green's-function values;
the nearest-neighbor walk on Z is dispatched to its exact piecewise forms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InvalidQuery
from .kernels import QuadratureConfig, green_function, rho
from .model import Vec, WalkModel, as_vec, is_simple_1d, spectral_scalars


class TailOrder(enum.Enum):
    INVERSE_SQRT_T = "t^-1/2"
    INVERSE_LOG_T = "1/ln t"
    INVERSE_POW_T = "t^-(d/2-1)"
    EXPONENTIAL = "exponential"
    ZERO = "zero"


class Variant(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class TailAsymptotic:
    """Leading term of H(infinity) - H(t) as t -> infinity.

    ``constant`` multiplies the order (1/sqrt(t), 1/ln t, or t^-(d/2-1));
    it is 0 for the EXPONENTIAL and ZERO orders.  EXPONENTIAL carries a
    usable lower bound on the decay rate in ``rate_bound`` (the paper only
    proves existence of some positive rate), and INVERSE_POW_T records the
    exponent d/2 - 1.
    """

    order: TailOrder
    constant: float
    exponent: float | None = None
    rate_bound: float | None = None

    def deficit_at(self, t: float) -> float:
        """Evaluate the leading tail term at time t (bound 0 for EXPONENTIAL)."""
        if self.order is TailOrder.INVERSE_SQRT_T:
            return self.constant / np.sqrt(t)
        if self.order is TailOrder.INVERSE_LOG_T:
            return self.constant / np.log(t)
        if self.order is TailOrder.INVERSE_POW_T:
            return self.constant / t**self.exponent
        return 0.0


@dataclass(frozen=True)
class LimitValue:
    value: float
    variant: Variant
    atom_at_zero: float = 0.0


@dataclass(frozen=True)
class TabooQuery:
    """Start x, target y, taboo z (y != z, equal dimensions)."""

    x: Vec
    y: Vec
    z: Vec

    def __init__(self, x: Sequence[int], y: Sequence[int], z: Sequence[int]):
        try:
            xv, yv, zv = as_vec(x), as_vec(y), as_vec(z)
        except ValueError as exc:
            raise InvalidQuery(str(exc)) from exc
        if not len(xv) == len(yv) == len(zv):
            raise InvalidQuery(f"mixed dimensions in query ({xv}, {yv}, {zv})")
        if yv == zv:
            raise InvalidQuery("target y must differ from taboo z")
        object.__setattr__(self, "x", xv)
        object.__setattr__(self, "y", yv)
        object.__setattr__(self, "z", zv)

    @property
    def d(self) -> int:
        return len(self.x)

    @cached_property
    def rel_x(self) -> Vec:
        return tuple(a - b for a, b in zip(self.x, self.z))

    @cached_property
    def rel_y(self) -> Vec:
        return tuple(a - b for a, b in zip(self.y, self.z))

    def swapped(self) -> "TabooQuery":
        """Same start, target and taboo exchanged."""
        return TabooQuery(self.x, self.z, self.y)


def _check_dims(model: WalkModel, q: TabooQuery) -> None:
    if q.d != model.d:
        raise InvalidQuery(f"query dimension {q.d} != model dimension {model.d}")


# ---------------------------------------------------------------------------
# plain hitting times (Lemma-1 package)
# ---------------------------------------------------------------------------

def hitting_limit(
    model: WalkModel,
    x: Sequence[int],
    y: Sequence[int],
    cfg: QuadratureConfig | None = None,
) -> float:
    """P(tau_y < infinity | start x): 1 in d <= 2, Green's ratio in d >= 3."""
    xv, yv = as_vec(x, model.d), as_vec(y, model.d)
    if model.d <= 2:
        return 1.0
    zero = (0,) * model.d
    g00 = green_function(model, 0.0, zero, zero, cfg).value
    if xv == yv:
        return 1.0 - 1.0 / (model.a * g00)
    return green_function(model, 0.0, xv, yv, cfg).value / g00


def hitting_tail(
    model: WalkModel,
    x: Sequence[int],
    y: Sequence[int],
    cfg: QuadratureConfig | None = None,
) -> TailAsymptotic:
    """Leading term of H_{x,y}(infinity) - H_{x,y}(t)."""
    xv, yv = as_vec(x, model.d), as_vec(y, model.d)
    a = model.a
    gamma = spectral_scalars(model).gamma_d
    r = tuple(b - c for b, c in zip(yv, xv))
    rho_r = rho(model, r, cfg)
    if model.d == 1:
        return TailAsymptotic(TailOrder.INVERSE_SQRT_T, rho_r / (a * gamma * np.pi))
    if model.d == 2:
        return TailAsymptotic(TailOrder.INVERSE_LOG_T, rho_r / (a * gamma))
    zero = (0,) * model.d
    g00 = green_function(model, 0.0, zero, zero, cfg).value
    const = 2.0 * gamma * rho_r / (a * (model.d - 2) * g00**2)
    return TailAsymptotic(TailOrder.INVERSE_POW_T, const, exponent=model.d / 2.0 - 1.0)


# ---------------------------------------------------------------------------
# taboo limits (Theorems 1 and 2)
# ---------------------------------------------------------------------------

def _simple_taboo_limit(X: int, Y: int) -> float:
    """Exact piecewise limit for the nearest-neighbor walk, z shifted to 0."""
    if X == 0:
        return 1.0 / (2.0 * abs(Y))
    if X == Y:
        return 1.0 - 1.0 / (2.0 * abs(Y))
    if (X > 0) != (Y > 0):
        return 0.0  # taboo strictly between start and target
    if abs(X) < abs(Y):
        return X / Y  # start strictly between taboo and target
    return 1.0  # target strictly between taboo and start


def taboo_limit(
    model: WalkModel,
    q: TabooQuery,
    cfg: QuadratureConfig | None = None,
) -> float:
    """H_{x,y,z}(infinity).

    Nearest-neighbor walk on Z: exact rational dispatch.  Otherwise the
    rho-ratio formula in d <= 2 and the Green's-weighted version in d >= 3,
    with rho_d(0) = 1 covering x = z and x = y without special cases.
    """
    _check_dims(model, q)
    X, Y = q.rel_x, q.rel_y
    if is_simple_1d(model):
        return _simple_taboo_limit(X[0], Y[0])
    rho_x = rho(model, X, cfg)
    rho_y = rho(model, Y, cfg)
    r_yx = tuple(b - a for a, b in zip(X, Y))
    rho_yx = rho(model, r_yx, cfg)
    if model.d <= 2:
        return (rho_x + rho_y - rho_yx) / (2.0 * rho_y)
    zero = (0,) * model.d
    g00 = green_function(model, 0.0, zero, zero, cfg).value
    gyz = green_function(model, 0.0, q.y, q.z, cfg).value
    num = g00 * rho_y - g00 * rho_yx + gyz * rho_x
    return num / (rho_y * (g00 + gyz))


# ---------------------------------------------------------------------------
# taboo tails (Theorem 1 constants C_d, Theorem 2 piecewise)
# ---------------------------------------------------------------------------

def c1_constant(model: WalkModel, X: Vec, Y: Vec, cfg=None) -> float:
    x, y = X[0], Y[0]
    a = model.a
    g1 = spectral_scalars(model).gamma_d
    r_yx = rho(model, (y - x,), cfg)
    r_x = rho(model, X, cfg)
    r_y = rho(model, Y, cfg)
    return (
        (r_yx + r_x - r_y) / (4.0 * a * np.pi * g1)
        + a * np.pi * y * y * g1**3 * (r_yx - r_x - r_y) / r_y**2
        + 2.0 * a * np.pi * x * y * g1**3 / r_y
    )


def c2_constant(model: WalkModel, X: Vec, Y: Vec, cfg=None) -> float:
    a = model.a
    g2 = spectral_scalars(model).gamma_d
    r_yx = rho(model, tuple(b - a_ for a_, b in zip(X, Y)), cfg)
    return (r_yx + rho(model, X, cfg) - rho(model, Y, cfg)) / (4.0 * a * g2)


def cd_constant(model: WalkModel, X: Vec, Y: Vec, cfg=None) -> float:
    a = model.a
    d = model.d
    gd = spectral_scalars(model).gamma_d
    zero = (0,) * d
    g00 = green_function(model, 0.0, zero, zero, cfg).value
    g0y = green_function(model, 0.0, zero, Y, cfg).value
    r_yx = rho(model, tuple(b - a_ for a_, b in zip(X, Y)), cfg)
    num = 2.0 * gd * (r_yx + rho(model, X, cfg) - rho(model, Y, cfg))
    return num / (a * (d - 2) * (g00 + g0y) ** 2)


def _strip_rate_bound(model: WalkModel, width: int) -> float:
    """Gambler's-ruin decay-rate bound a (1 - cos(pi/width)) for the
    nearest-neighbor walk confined to a strip of that width (embedded-chain
    spectral radius cos(pi/width) thinned by the Poisson clock)."""
    return model.a * (1.0 - np.cos(np.pi / width))


def taboo_tail(
    model: WalkModel,
    q: TabooQuery,
    cfg: QuadratureConfig | None = None,
) -> TailAsymptotic:
    """Order and constant of H_{x,y,z}(infinity) - H_{x,y,z}(t)."""
    _check_dims(model, q)
    X, Y = q.rel_x, q.rel_y
    if is_simple_1d(model):
        x, y = X[0], Y[0]
        a = model.a
        if x != 0 and x != y and (x > 0) != (y > 0):
            return TailAsymptotic(TailOrder.ZERO, 0.0)
        if x == y:
            return TailAsymptotic(
                TailOrder.INVERSE_SQRT_T, 1.0 / np.sqrt(2.0 * a * np.pi)
            )
        if x != 0 and abs(x) > abs(y):
            const = np.sqrt(2.0) * abs(y - x) / np.sqrt(a * np.pi)
            return TailAsymptotic(TailOrder.INVERSE_SQRT_T, const)
        # x = z, or x strictly between taboo and target: exponential decay
        return TailAsymptotic(
            TailOrder.EXPONENTIAL,
            0.0,
            rate_bound=_strip_rate_bound(model, abs(y)),
        )
    if model.d == 1:
        return TailAsymptotic(TailOrder.INVERSE_SQRT_T, c1_constant(model, X, Y, cfg))
    if model.d == 2:
        return TailAsymptotic(TailOrder.INVERSE_LOG_T, c2_constant(model, X, Y, cfg))
    return TailAsymptotic(
        TailOrder.INVERSE_POW_T,
        cd_constant(model, X, Y, cfg),
        exponent=model.d / 2.0 - 1.0,
    )


# ---------------------------------------------------------------------------
# minus variants (clock started at the first jump; Theorem 3)
# ---------------------------------------------------------------------------

def taboo_limit_minus(
    model: WalkModel,
    q: TabooQuery,
    cfg: QuadratureConfig | None = None,
) -> LimitValue:
    """H^-_{x,y,z}(infinity) equals the plus limit; the distribution has an
    atom a(y-x)/a at zero when the direct jump x -> y exists."""
    _check_dims(model, q)
    atom = 0.0
    if q.x != q.y:
        diff = tuple(b - a for a, b in zip(q.x, q.y))
        atom = model.rate(diff) / model.a
    return LimitValue(
        value=taboo_limit(model, q, cfg), variant=Variant.MINUS, atom_at_zero=atom
    )


def taboo_tail_minus(
    model: WalkModel,
    q: TabooQuery,
    cfg: QuadratureConfig | None = None,
) -> TailAsymptotic:
    """Identical to taboo_tail: the tail asymptotics survive the clock shift."""
    return taboo_tail(model, q, cfg)
