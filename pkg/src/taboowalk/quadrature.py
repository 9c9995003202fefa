"""Midpoint quadrature primitives on the torus and on dyadic boxes.

Two building blocks:

* a plain tensor-product midpoint rule on [-pi, pi]^d (spectrally accurate
  for smooth periodic integrands; the midpoint offsets never sample 0), and
* midpoint sums over dyadic shells [-s, s]^d minus [-s/2, s/2]^d with
  Richardson extrapolation, used to resolve kernels that are singular or
  sharply peaked at the origin.

Evaluation is chunked along the first axis with a fixed partition and
accumulated with numpy's pairwise summation, so results are bit-identical
from run to run.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

# Soak up rounding noise when an integrand is essentially zero.
ABS_FLOOR = 1e-13

_CHUNK_POINTS = 1 << 20


def _axis_offsets(n: int) -> np.ndarray:
    """Midpoint offsets in (-1, 1): -1 + (i + 1/2) * 2/n, i = 0..n-1."""
    return -1.0 + (np.arange(n) + 0.5) * (2.0 / n)


def _outer_flags(n: int) -> np.ndarray:
    """Per-axis flag |offset| > 1/2, computed in exact integer arithmetic."""
    return np.abs(2 * np.arange(n) + 1 - n) * 2 > n


def _chunk_rows(n: int, d: int) -> int:
    rows = max(1, _CHUNK_POINTS // max(1, n ** (d - 1)))
    return min(rows, n)


def box_midpoint_sum(
    f: Callable[[np.ndarray], np.ndarray],
    s: float,
    d: int,
    n: int,
    exclude_inner_half: bool = False,
) -> float:
    """h^d * sum of f over the midpoint grid of [-s, s]^d.

    With ``exclude_inner_half`` the inner box [-s/2, s/2]^d is skipped;
    n must be divisible by 4 so the inner boundary falls on cell edges.
    """
    if exclude_inner_half and n % 4:
        raise ValueError("n must be divisible by 4 for shell sums")
    ax = _axis_offsets(n) * s
    out = _outer_flags(n)
    h = 2.0 * s / n
    step = _chunk_rows(n, d)
    chunk_sums = []
    for i0 in range(0, n, step):
        i1 = min(n, i0 + step)
        cols = [ax[i0:i1]] + [ax] * (d - 1)
        mesh = np.meshgrid(*cols, indexing="ij")
        pts = np.stack([g.reshape(-1) for g in mesh], axis=-1)
        if exclude_inner_half:
            flags = [out[i0:i1]] + [out] * (d - 1)
            fmesh = np.meshgrid(*flags, indexing="ij")
            mask = np.zeros(fmesh[0].shape, dtype=bool)
            for fm in fmesh:
                mask |= fm
            pts = pts[mask.reshape(-1)]
        if pts.shape[0]:
            chunk_sums.append(np.sum(f(pts)))
    if not chunk_sums:
        return 0.0
    return float(np.sum(np.array(chunk_sums))) * h**d


def torus_mean(f: Callable[[np.ndarray], np.ndarray], d: int, n: int) -> float:
    """Midpoint estimate of (2 pi)^-d * integral of f over [-pi, pi]^d."""
    return box_midpoint_sum(f, np.pi, d, n) / (2.0 * np.pi) ** d


def refine_torus_mean(
    f: Callable[[np.ndarray], np.ndarray],
    d: int,
    n0: int,
    refinement_limit: int,
    rel_tol: float,
) -> tuple[float, float, bool]:
    """Double the grid until successive estimates agree to rel_tol.

    Returns (value, est_error, converged).
    """
    val = torus_mean(f, d, n0)
    err = np.inf
    for k in range(1, refinement_limit + 1):
        new = torus_mean(f, d, n0 * 2**k)
        err = abs(new - val)
        val = new
        if err <= max(rel_tol * abs(val), ABS_FLOOR):
            return val, err, True
    return val, err, err <= max(rel_tol * abs(val), ABS_FLOOR)


def romberg_ladder(
    sum_at: Callable[[int], float],
    tol_abs: float,
    n0: int,
    max_levels: int,
    tol_rel: float = 0.0,
) -> tuple[float, float, bool]:
    """Richardson-extrapolate midpoint sums sum_at(n) over n = n0 * 2^k.

    Doubles the resolution until the extrapolated correction drops below
    max(tol_abs, tol_rel * |value|) or the level cap is hit; the relative
    floor keeps the ladder from over-refining before a caller has any
    scale information.  Returns (value, est_error, converged).
    """
    v_prev = sum_at(n0)
    v_cur = sum_at(2 * n0)
    r_prev = (4.0 * v_cur - v_prev) / 3.0
    best = r_prev
    err = abs(v_cur - v_prev)
    if err <= max(tol_abs, tol_rel * abs(best)):
        return best, err, True
    converged = False
    for lev in range(2, max_levels):
        v_next = sum_at(n0 * 2**lev)
        r_cur = (4.0 * v_next - v_cur) / 3.0
        best = (16.0 * r_cur - r_prev) / 15.0
        err = abs(best - r_cur) + 0.1 * abs(r_cur - r_prev)
        v_cur = v_next
        r_prev = r_cur
        if err <= max(tol_abs, tol_rel * abs(best)):
            converged = True
            break
    return best, err, converged


def shell_max_levels(d: int) -> int:
    return {1: 9, 2: 7, 3: 5}.get(d, 3)


def shell_romberg(
    f: Callable[[np.ndarray], np.ndarray],
    s: float,
    d: int,
    tol_abs: float,
    n0: int = 16,
    max_levels: int | None = None,
) -> tuple[float, float]:
    """Adaptive midpoint + Richardson on the shell [-s,s]^d \\ [-s/2,s/2]^d."""
    if max_levels is None:
        max_levels = shell_max_levels(d)
    best, err, _ = romberg_ladder(
        lambda n: box_midpoint_sum(f, s, d, n, exclude_inner_half=True),
        tol_abs,
        n0,
        max_levels,
    )
    return best, err


# Shell grids small enough to keep around; larger ones are rebuilt chunked.
_SHELL_CACHE_MAX_POINTS = 1 << 21


def shell_points(s: float, d: int, n: int) -> np.ndarray | None:
    """Masked midpoint points of the shell, or None when too large to hold."""
    if n**d > _SHELL_CACHE_MAX_POINTS:
        return None
    return _shell_points_cached(float(s), d, n)


@lru_cache(maxsize=64)
def _shell_points_cached(s: float, d: int, n: int) -> np.ndarray:
    ax = _axis_offsets(n) * s
    out = _outer_flags(n)
    mesh = np.meshgrid(*([ax] * d), indexing="ij")
    pts = np.stack([g.reshape(-1) for g in mesh], axis=-1)
    fmesh = np.meshgrid(*([out] * d), indexing="ij")
    mask = np.zeros(fmesh[0].shape, dtype=bool)
    for fm in fmesh:
        mask |= fm
    pts = pts[mask.reshape(-1)]
    pts.setflags(write=False)
    return pts
