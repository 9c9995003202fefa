"""Time-domain c.d.f. curves and Laplace-domain evaluators.

The hitting-time c.d.f. solves a first-kind Volterra equation whose kernel
is the return probability p(t; y, y); since p(0; y, y) = 1 the product-
midpoint time-stepping is well conditioned without regularization.  The
taboo c.d.f.s solve the two-equation convolution system tying H_{x,y,z}
and H_{x,z,y} to the four plain hitting curves.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ExtrapolationUnstable, InvalidQuery, StepTooCoarse
from .kernels import (
    QuadratureConfig,
    canonical_diff,
    default_config,
    green_function,
)
from .limits import TabooQuery, TailAsymptotic, TailOrder, Variant, hitting_limit, taboo_limit
from .model import WalkModel, as_vec, char_exponent_grid, is_simple_1d
from .quadrature import ABS_FLOOR, _axis_offsets, _chunk_rows


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k * step, k = 0..n_steps."""

    step: float
    n_steps: int

    def __post_init__(self):
        if not self.step > 0.0:
            raise ValueError("step must be > 0")
        if self.n_steps < 2:
            raise ValueError("n_steps must be >= 2")

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.step

    @property
    def horizon(self) -> float:
        return self.n_steps * self.step


@dataclass(frozen=True, eq=False)
class CdfCurve:
    """Sampled improper c.d.f. with its limit value.

    ``residual`` carries the max defect of the defining convolution identity
    for curves produced by taboo_cdf; ``warnings`` collects non-fatal
    diagnostics when a solve runs with strict=False.
    """

    grid: TimeGrid
    values: np.ndarray
    limit: float
    variant: Variant = Variant.PLUS
    residual: float | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.values) != self.grid.n_steps + 1:
            raise ValueError("values length must be n_steps + 1")

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def at(self, t: float) -> float:
        """Linear interpolation on the grid."""
        return float(np.interp(t, self.times, self.values))


# ---------------------------------------------------------------------------
# transition-probability curves (precomputed once per displacement and grid)
# ---------------------------------------------------------------------------

def _p_values_at(model: WalkModel, r: tuple, times: np.ndarray, n: int) -> np.ndarray:
    """Midpoint estimate of p(t; 0, r) on a vector of times, n points/axis."""
    d = model.d
    rv = np.asarray(r, dtype=float)
    ax = _axis_offsets(n) * np.pi
    out = np.zeros(len(times))
    step = _chunk_rows(n, d)
    t_block = max(1, (1 << 22) // max(1, step * n ** (d - 1)))
    for i0 in range(0, n, step):
        cols = [ax[i0 : min(n, i0 + step)]] + [ax] * (d - 1)
        mesh = np.meshgrid(*cols, indexing="ij")
        pts = np.stack([g.reshape(-1) for g in mesh], axis=-1)
        ph = char_exponent_grid(model, pts)
        w = np.cos(pts @ rv)
        for j0 in range(0, len(times), t_block):
            tt = times[j0 : j0 + t_block]
            out[j0 : j0 + t_block] += w @ np.exp(np.outer(ph, tt))
    return out / n**d


def _p_curve(model: WalkModel, r: tuple, times: np.ndarray, cfg: QuadratureConfig) -> np.ndarray:
    """p(t; 0, r) on the given times, refined on probe points until rel_tol."""
    probe_idx = np.unique(np.linspace(0, len(times) - 1, 8).astype(int))
    n = cfg.points_per_axis
    vals = _p_values_at(model, r, times, n)
    for _ in range(cfg.refinement_limit):
        probe = _p_values_at(model, r, times[probe_idx], 2 * n)
        if np.max(np.abs(probe - vals[probe_idx])) <= max(cfg.rel_tol, ABS_FLOOR):
            break
        n *= 2
        vals = _p_values_at(model, r, times, n)
    return np.clip(vals, 0.0, 1.0)


@lru_cache(maxsize=256)
def _kernel_and_rhs(model: WalkModel, r: tuple, grid: TimeGrid, cfg: QuadratureConfig):
    """Half-grid return-probability kernel and the rhs curve for displacement r.

    Returns (K, rhs) with K[m] = p((m + 1/2) h; 0, 0) and
    rhs[k] = p(t_{k+1}; 0, r) (minus the no-jump term when r = 0).
    """
    h = grid.step
    half_times = (np.arange(grid.n_steps) + 0.5) * h
    full_times = grid.times[1:]
    zero = (0,) * model.d
    kern = _p_curve(model, zero, half_times, cfg)
    if not any(r):
        rhs = _p_curve(model, zero, full_times, cfg) - np.exp(-model.a * full_times)
    else:
        rhs = _p_curve(model, r, full_times, cfg)
    return kern, rhs


def _solve_first_kind(kern: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Increments dH from sum_{j<=k} kern[k-j] dH_j = rhs[k] (unit-ish diagonal)."""
    n = len(rhs)
    dh = np.empty(n)
    for k in range(n):
        acc = rhs[k] - (kern[1 : k + 1][::-1] @ dh[:k] if k else 0.0)
        dh[k] = acc / kern[0]
    return dh


def hitting_cdf(
    model: WalkModel,
    x: Sequence[int],
    y: Sequence[int],
    grid: TimeGrid,
    cfg: QuadratureConfig | None = None,
    strict: bool = True,
) -> CdfCurve:
    """H_{x,y}(t) on the grid by product-midpoint Volterra time-stepping.

    Depends on x, y only through y - x up to sign, which the implementation
    canonicalizes, so the Lemma-level shift/reflection identities hold
    exactly.  Recommended step <= 0.1/a.
    """
    cfg = _cfg(model, cfg)
    r = canonical_diff(x, y, model.d)
    kern, rhs = _kernel_and_rhs(model, r, grid, cfg)
    warnings = _check_kernel_diagonal(kern, strict)
    dh = _solve_first_kind(kern, rhs)
    values = np.concatenate([[0.0], np.cumsum(dh)])
    return CdfCurve(
        grid=grid,
        values=values,
        limit=hitting_limit(model, x, y, cfg),
        warnings=warnings,
    )


def _cfg(model: WalkModel, cfg: QuadratureConfig | None) -> QuadratureConfig:
    return cfg if cfg is not None else default_config(model.d)


def _check_kernel_diagonal(kern: np.ndarray, strict: bool) -> tuple[str, ...]:
    dev = abs(kern[0] - 1.0)
    if dev > 0.1:
        msg = f"kernel diagonal p(h/2;y,y) = {kern[0]:.4f} deviates from 1 by {dev:.3f}"
        if strict:
            raise StepTooCoarse(msg)
        return ("step_too_coarse: " + msg,)
    return ()


def _midpoint_kernel(curve_vals: np.ndarray) -> np.ndarray:
    """Curve values at half-grid points by adjacent averaging."""
    return 0.5 * (curve_vals[:-1] + curve_vals[1:])


def taboo_cdf(
    model: WalkModel,
    q: TabooQuery,
    grid: TimeGrid,
    cfg: QuadratureConfig | None = None,
    strict: bool = True,
) -> tuple[CdfCurve, CdfCurve]:
    """(H_{x,y,z}, H_{x,z,y}) solved jointly from the convolution system

        H_{x,y} = H_{x,y,z} + H_{x,z,y} * H_{z,y}
        H_{x,z} = H_{x,z,y} + H_{x,y,z} * H_{y,z}

    with the four plain hitting curves as inputs on the same grid.  The
    residual of both identities is recomputed and attached to the curves.
    """
    if q.d != model.d:
        raise InvalidQuery(f"query dimension {q.d} != model dimension {model.d}")
    cfg = _cfg(model, cfg)
    h_xy = hitting_cdf(model, q.x, q.y, grid, cfg, strict)
    h_xz = hitting_cdf(model, q.x, q.z, grid, cfg, strict)
    h_zy = hitting_cdf(model, q.z, q.y, grid, cfg, strict)
    h_yz = hitting_cdf(model, q.y, q.z, grid, cfg, strict)
    warnings = tuple(
        dict.fromkeys(h_xy.warnings + h_xz.warnings + h_zy.warnings + h_yz.warnings)
    )

    n = grid.n_steps
    k_zy = _midpoint_kernel(h_zy.values)
    k_yz = _midpoint_kernel(h_yz.values)
    rhs1 = h_xy.values[1:]
    rhs2 = h_xz.values[1:]
    da = np.empty(n)
    db = np.empty(n)
    det = 1.0 - k_zy[0] * k_yz[0]
    for k in range(n):
        conv1 = k_zy[1 : k + 1][::-1] @ db[:k] if k else 0.0
        conv2 = k_yz[1 : k + 1][::-1] @ da[:k] if k else 0.0
        r1 = rhs1[k] - da[:k].sum() - conv1
        r2 = rhs2[k] - db[:k].sum() - conv2
        da[k] = (r1 - k_zy[0] * r2) / det
        db[k] = (r2 - k_yz[0] * r1) / det
    vals_a = np.concatenate([[0.0], np.cumsum(da)])
    vals_b = np.concatenate([[0.0], np.cumsum(db)])

    # defect of the two defining identities under the same discretization
    res = 0.0
    for vals, dother, kern, rhs in (
        (vals_a, db, k_zy, rhs1),
        (vals_b, da, k_yz, rhs2),
    ):
        conv = np.array(
            [kern[: k + 1][::-1] @ dother[: k + 1] for k in range(n)]
        )
        res = max(res, float(np.max(np.abs(vals[1:] + conv - rhs))))

    cur_a = CdfCurve(
        grid=grid,
        values=vals_a,
        limit=taboo_limit(model, q, cfg),
        residual=res,
        warnings=warnings,
    )
    cur_b = CdfCurve(
        grid=grid,
        values=vals_b,
        limit=taboo_limit(model, q.swapped(), cfg),
        residual=res,
        warnings=warnings,
    )
    return cur_a, cur_b


# ---------------------------------------------------------------------------
# Laplace-domain evaluators
# ---------------------------------------------------------------------------

def laplace_hitting(
    model: WalkModel,
    x: Sequence[int],
    y: Sequence[int],
    lam: float,
    cfg: QuadratureConfig | None = None,
) -> float:
    """Laplace-Stieltjes transform of H_{x,y}: closed form via G_lambda."""
    if not lam > 0.0:
        raise ValueError("lambda must be > 0")
    xv, yv = as_vec(x, model.d), as_vec(y, model.d)
    zero = (0,) * model.d
    g00 = green_function(model, lam, zero, zero, cfg).value
    if xv == yv:
        return 1.0 - 1.0 / ((lam + model.a) * g00)
    return green_function(model, lam, xv, yv, cfg).value / g00


def laplace_taboo(
    model: WalkModel,
    q: TabooQuery,
    lam: float,
    cfg: QuadratureConfig | None = None,
) -> float:
    """Laplace-Stieltjes transform of H_{x,y,z} from the linear system."""
    if q.d != model.d:
        raise InvalidQuery(f"query dimension {q.d} != model dimension {model.d}")
    h_xy = laplace_hitting(model, q.x, q.y, lam, cfg)
    h_xz = laplace_hitting(model, q.x, q.z, lam, cfg)
    h_zy = laplace_hitting(model, q.z, q.y, lam, cfg)
    h_yz = laplace_hitting(model, q.y, q.z, lam, cfg)
    return (h_xy - h_xz * h_zy) / (1.0 - h_zy * h_yz)


# ---------------------------------------------------------------------------
# tail-constant extraction from the lambda -> 0 ladder
# ---------------------------------------------------------------------------

_LADDER_KS = range(8, 17)


def tail_extract(
    model: WalkModel,
    q: TabooQuery,
    cfg: QuadratureConfig | None = None,
) -> TailAsymptotic:
    """Estimate the Theorem-1 tail constant from the Laplace deficit transform.

    Evaluates F(lambda) = (H(inf) - LS[H](lambda)) / lambda on the geometric
    ladder lambda_k = a 2^-k, k = 8..16, and removes the known leading
    lambda-order: sqrt(lambda) F / sqrt(pi) -> C_1 in d = 1 and
    -lambda ln(lambda) F -> C_2 in d = 2.  The constant is the intercept of
    a two-term fit (next-order correction sqrt(lambda), resp. 1/ln lambda).
    Only non-simple walks in d <= 2 are supported; d >= 3 would require
    higher Laplace derivatives.
    """
    if q.d != model.d:
        raise InvalidQuery(f"query dimension {q.d} != model dimension {model.d}")
    if is_simple_1d(model):
        raise InvalidQuery("tail_extract requires a non-simple walk")
    if model.d > 2:
        raise InvalidQuery("tail_extract supports d <= 2 only")
    cfg = _cfg(model, cfg)
    limit = taboo_limit(model, q, cfg)
    lams = model.a * 2.0 ** -np.array(list(_LADDER_KS), dtype=float)
    f_vals = np.array(
        [(limit - laplace_taboo(model, q, lam, cfg)) / lam for lam in lams]
    )
    if model.d == 1:
        raw = np.sqrt(lams) * f_vals / np.sqrt(np.pi)
        regressor = np.sqrt(lams)
        order = TailOrder.INVERSE_SQRT_T
    else:
        raw = -lams * np.log(lams) * f_vals
        regressor = 1.0 / np.log(lams)
        order = TailOrder.INVERSE_LOG_T

    def intercept(m):
        a_mat = np.stack([np.ones(m), regressor[:m]], axis=1)
        coef, *_ = np.linalg.lstsq(a_mat, raw[:m], rcond=None)
        return coef[0]

    fits = np.array([intercept(m) for m in range(5, len(raw) + 1)])
    steps = np.abs(np.diff(fits)) / np.maximum(np.abs(fits[:-1]), ABS_FLOOR)
    if np.max(steps) > 0.10:
        raise ExtrapolationUnstable(
            f"ladder estimates moved by {np.max(steps):.1%} between fits",
            estimates=fits.tolist(),
        )
    return TailAsymptotic(order=order, constant=float(fits[-1]))


# ---------------------------------------------------------------------------
# minus-variant curves
# ---------------------------------------------------------------------------

def minus_from_plus(curve: CdfCurve, model: WalkModel, strict: bool = True) -> CdfCurve:
    """Deconvolve the first holding time: H^-(t) = H(t) + H'(t)/a.

    H' uses centered differences (one-sided at the ends).  The limit is
    unchanged; the value at t = 0 recovers the atom a(x,y)/a.
    """
    if curve.variant is not Variant.PLUS:
        raise ValueError("minus_from_plus expects a plus-variant curve")
    h = curve.grid.step
    deriv = np.gradient(curve.values, h)
    values = curve.values + deriv / model.a
    warnings = curve.warnings
    if len(values) >= 3:
        noise = float(np.max(np.abs(np.diff(values, 2))))
        if noise > 0.01 * max(curve.limit, 1e-12):
            msg = f"second-difference noise {noise:.3e} exceeds 1% of the limit"
            if strict:
                raise StepTooCoarse(msg)
            warnings = warnings + ("step_too_coarse: " + msg,)
    return CdfCurve(
        grid=curve.grid,
        values=values,
        limit=curve.limit,
        variant=Variant.MINUS,
        residual=curve.residual,
        warnings=warnings,
    )
