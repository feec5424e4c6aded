"""Convex hull membership and the partial-stepping step length search."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionError, SteppingStallError

HULL_TOL = 1e-8
ANCHORS = ("paper", "mean")


def _as_points(points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.ndim != 2 or len(points) == 0:
        raise ValueError("need at least one sample point")
    return points


def in_convex_hull(point, points, tol: float = HULL_TOL) -> bool:
    """True iff ``point`` is a convex combination of the rows of ``points``.

    Decided by LP feasibility of ``lambda >= 0, sum(lambda) = 1,
    points.T @ lambda = point`` after an affine rescaling of the coordinates,
    which leaves membership unchanged.
    """
    points = np.unique(_as_points(points), axis=0)
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if point.shape != (points.shape[1],):
        raise DimensionError(f"point has shape {point.shape}, points have {points.shape[1]} columns")
    if np.any(np.all(points == point, axis=1)):
        return True
    center = points.mean(axis=0)
    scale = np.abs(points - center).max(axis=0)
    scale[scale == 0] = 1.0
    p = (points - center) / scale
    q = (point - center) / scale
    if np.any(q < p.min(axis=0) - tol) or np.any(q > p.max(axis=0) + tol):
        return False
    a_eq = np.vstack([p.T, np.ones(len(p))])
    b_eq = np.append(q, 1.0)
    res = linprog(np.zeros(len(p)), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "presolve": True})
    if res.status != 0:
        return False
    return bool(np.max(np.abs(a_eq @ res.x - b_eq)) <= tol)


def margin_point(gamma: float, g_obs, mean, anchor: str = "paper") -> np.ndarray:
    """Point tested for admissibility of step length ``gamma``.

    ``paper``: ``1.05 g G + (1 - 1.05 g) zeta_hat(g)`` with the pseudo-observation
    ``zeta_hat(g) = g G + (1 - g) mean``.  ``mean``: the same with ``mean`` in
    place of ``zeta_hat``.
    """
    g_obs = np.asarray(g_obs, dtype=float)
    mean = np.asarray(mean, dtype=float)
    if anchor == "paper":
        base = gamma * g_obs + (1.0 - gamma) * mean
    elif anchor == "mean":
        base = mean
    else:
        raise ValueError(f"anchor must be one of {ANCHORS}")
    return 1.05 * gamma * g_obs + (1.0 - 1.05 * gamma) * base


def convex_hull_gamma(g_obs, points, mean=None, *, anchor: str = "paper",
                      gamma_min: float = 1e-3, tol: float = 1e-3, prescan: int = 20) -> float:
    """Largest step ``gamma`` in ``(0, 1]`` whose margin point lies in the hull.

    Admissibility is assumed monotone in ``gamma``.  A coarse scan over
    ``i / prescan`` brackets the boundary, then bisection narrows it to
    ``tol``; the admissible end of the bracket is returned.
    """
    points = _as_points(points)
    g_obs = np.atleast_1d(np.asarray(g_obs, dtype=float))
    if g_obs.shape != (points.shape[1],):
        raise DimensionError("g_obs does not match the sample dimension")
    mean = points.mean(axis=0) if mean is None else np.atleast_1d(np.asarray(mean, dtype=float))

    def ok(gamma):
        return in_convex_hull(margin_point(gamma, g_obs, mean, anchor), points)

    if ok(1.0):
        return 1.0
    lo = hi = None
    for i in range(prescan - 1, 0, -1):
        gamma = i / prescan
        if ok(gamma):
            lo, hi = gamma, (i + 1) / prescan
            break
    if lo is None:
        if not ok(gamma_min):
            raise SteppingStallError(f"no admissible step length >= {gamma_min}")
        lo, hi = gamma_min, 1.0 / prescan
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo
