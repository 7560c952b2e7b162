"""Handover-region boundaries, lengths and plane/altitude aggregates.

For fixed ``(y, h)`` the activation probability is a function of ``x``; the
handover region is the x-interval on which it lies in ``[0.1, 0.9]``. The
boundary solver works on a whole vector of y-rows at once.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import criteria
from .channel import comm_rate_bps
from .scenario import Scenario, distances

LEVEL_LO = 0.1
LEVEL_HI = 0.9
PRESCAN_POINTS = 201
FALLBACK_STEP = 1.0
RESIDUAL_TOL = 1e-6
_BISECT_ITERS = 60


class Criterion(str, enum.Enum):
    RSRP = "rsrp"
    DIST = "dist"
    JOINT = "joint"

    @classmethod
    def parse(cls, value: "str | Criterion") -> "Criterion":
        if isinstance(value, cls):
            return value
        value = str(value).lower()
        if value in ("sensing", "distance"):
            return cls.DIST
        return cls(value)


class SolverStatus(str, enum.Enum):
    BISECTION = "bisection"
    GRID_FALLBACK = "grid-fallback"
    UNBOUNDED = "unbounded"


_STATUS_RANK = {SolverStatus.BISECTION: 0, SolverStatus.GRID_FALLBACK: 1, SolverStatus.UNBOUNDED: 2}


class RegionError(RuntimeError):
    pass


def probability(s: Scenario, criterion, x, y, h_av):
    """Activation probability of ``criterion`` at ``(x, y, h_av)`` (broadcasting)."""
    c = Criterion.parse(criterion)
    d_s, d_t = distances(s, x, y, h_av)
    if c is Criterion.RSRP:
        return criteria.p_ho_rsrp(s, d_s, d_t, h_av)
    pd = criteria.p_ho_dist(s, d_s, d_t)
    if c is Criterion.DIST:
        return pd
    return criteria.p_ho_joint(criteria.p_ho_rsrp(s, d_s, d_t, h_av), pd)


def solve_boundaries(
    s: Scenario,
    criterion,
    ys,
    h_av: float,
    level: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``P(x) = level`` on ``[-x_BS, x_BS]`` for every y in ``ys``.

    Returns ``(x, status)``; ``x`` is NaN where the level is not reached
    inside the interval. Rows whose pre-scan is not monotone fall back to the
    first upward crossing on a 1 m grid.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    xb = s.bs_half_spacing
    f = lambda x, yy: probability(s, criterion, x, yy, h_av)  # noqa: E731

    scan_x = np.linspace(-xb, xb, PRESCAN_POINTS)
    scan = f(scan_x[None, :], ys[:, None])
    nonmono = np.any(np.diff(scan, axis=1) < -1e-12, axis=1)

    x_out = np.full(ys.shape, np.nan)
    status = np.empty(ys.shape, dtype=object)
    status[:] = [SolverStatus.UNBOUNDED] * ys.size

    mono = ~nonmono & (scan[:, 0] <= level) & (scan[:, -1] >= level)
    if np.any(mono):
        rows = np.flatnonzero(mono)
        # last scan index still below the level brackets the root
        idx = np.minimum(np.sum(scan[rows] < level, axis=1) - 1, PRESCAN_POINTS - 2)
        idx = np.maximum(idx, 0)
        lo, hi = scan_x[idx].copy(), scan_x[idx + 1].copy()
        yr = ys[rows]
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            below = f(mid, yr) < level
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        x_out[rows] = 0.5 * (lo + hi)
        status[rows] = SolverStatus.BISECTION

    for r in np.flatnonzero(nonmono):
        fine_x = np.arange(-xb, xb + 0.5 * FALLBACK_STEP, FALLBACK_STEP)
        p = f(fine_x, ys[r])
        up = np.flatnonzero((p[:-1] < level) & (p[1:] >= level))
        if up.size:
            i = up[0]
            t = (level - p[i]) / (p[i + 1] - p[i])
            x_out[r] = fine_x[i] + t * FALLBACK_STEP
            status[r] = SolverStatus.GRID_FALLBACK
    return x_out, status


def solve_boundary(s: Scenario, criterion, y: float, h_av: float, level: float) -> tuple[float, SolverStatus]:
    x, status = solve_boundaries(s, criterion, [y], h_av, level)
    return float(x[0]), status[0]


@dataclass(frozen=True)
class HoRegion:
    criterion: Criterion
    y: float
    h_av: float
    x_lo: float
    x_hi: float
    solver_status: SolverStatus

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo


def _worse(a: SolverStatus, b: SolverStatus) -> SolverStatus:
    return a if _STATUS_RANK[a] >= _STATUS_RANK[b] else b


def region_for(s: Scenario, criterion, y: float, h_av: float) -> HoRegion:
    c = Criterion.parse(criterion)
    lo, st_lo = solve_boundary(s, c, y, h_av, LEVEL_LO)
    hi, st_hi = solve_boundary(s, c, y, h_av, LEVEL_HI)
    return HoRegion(c, float(y), float(h_av), lo, hi, _worse(st_lo, st_hi))


@dataclass(frozen=True)
class PlaneRegions:
    """Per-row regions of one criterion at one altitude."""

    criterion: Criterion
    h_av: float
    ys: np.ndarray
    x_lo: np.ndarray
    x_hi: np.ndarray
    status: np.ndarray

    @property
    def lengths(self) -> np.ndarray:
        return self.x_hi - self.x_lo

    @property
    def bounded(self) -> np.ndarray:
        return np.array([st is not SolverStatus.UNBOUNDED for st in self.status], dtype=bool)

    def rows(self) -> list[HoRegion]:
        return [
            HoRegion(self.criterion, float(y), self.h_av, float(lo), float(hi), st)
            for y, lo, hi, st in zip(self.ys, self.x_lo, self.x_hi, self.status)
        ]


def plane_regions(s: Scenario, criterion, h_av: float, ys=None) -> PlaneRegions:
    c = Criterion.parse(criterion)
    ys = s.y_grid() if ys is None else np.atleast_1d(np.asarray(ys, dtype=float))
    lo, st_lo = solve_boundaries(s, c, ys, h_av, LEVEL_LO)
    hi, st_hi = solve_boundaries(s, c, ys, h_av, LEVEL_HI)
    status = np.empty(ys.shape, dtype=object)
    status[:] = [_worse(a, b) for a, b in zip(st_lo, st_hi)]
    bad = np.array([st is SolverStatus.UNBOUNDED for st in status], dtype=bool)
    lo[bad] = np.nan
    hi[bad] = np.nan
    return PlaneRegions(c, float(h_av), ys, lo, hi, status)


def plane_union_region(s: Scenario, criterion, h_av: float, ys=None) -> tuple[float, float]:
    """Smallest lower and largest upper boundary over all bounded rows."""
    pr = plane_regions(s, criterion, h_av, ys)
    if not np.any(pr.bounded):
        raise RegionError(f"no bounded {pr.criterion.value} region at h = {h_av} m")
    return float(np.nanmin(pr.x_lo)), float(np.nanmax(pr.x_hi))


def avg_region_length(s: Scenario, criterion, h_av: float, ys=None) -> float:
    pr = plane_regions(s, criterion, h_av, ys)
    if not np.any(pr.bounded):
        raise RegionError(f"no bounded {pr.criterion.value} region at h = {h_av} m")
    return float(np.mean(pr.lengths[pr.bounded]))


def _map(fn: Callable, items: Iterable, workers: int) -> list:
    items = list(items)
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def altitude_lengths(
    s: Scenario,
    criteria_: Sequence = (Criterion.RSRP, Criterion.JOINT),
    ys=None,
    altitudes=None,
    workers: int = 1,
) -> dict[Criterion, np.ndarray]:
    """Plane-averaged region length per altitude for each criterion."""
    hs = list(s.altitudes if altitudes is None else altitudes)
    out = {}
    for c in map(Criterion.parse, criteria_):
        out[c] = np.array(_map(lambda h: avg_region_length(s, c, h, ys), hs, workers))
    return out


def reduction_3d(
    s: Scenario,
    ys=None,
    altitudes=None,
    criterion=Criterion.JOINT,
    baseline=Criterion.RSRP,
    order: str = "per-altitude",
    workers: int = 1,
) -> float:
    """Average relative shortening of the region length versus the baseline.

    ``order="per-altitude"`` averages ``1 - L_a(h) / L_base(h)`` over
    altitudes; ``order="grand-mean"`` uses the ratio of altitude-averaged
    lengths.
    """
    lengths = altitude_lengths(s, (criterion, baseline), ys, altitudes, workers)
    la, lb = lengths[Criterion.parse(criterion)], lengths[Criterion.parse(baseline)]
    if order == "per-altitude":
        return float(np.mean(1.0 - la / lb))
    if order == "grand-mean":
        return float(1.0 - la.mean() / lb.mean())
    raise ValueError(f"unknown averaging order {order!r}")


def _region_points(s: Scenario, baseline, xs, ys, hs):
    X, Y, H = np.meshgrid(xs, ys, hs, indexing="ij")
    pb = probability(s, baseline, X, Y, H)
    mask = (pb >= LEVEL_LO) & (pb <= LEVEL_HI)
    return X[mask], Y[mask], H[mask], pb[mask]


def activation_improvement(
    s: Scenario,
    criterion,
    baseline=Criterion.RSRP,
    gamma_override: float | None = None,
    mode: str = "ratio-of-means",
    xs=None,
    ys=None,
    altitudes=None,
) -> float:
    """Relative gain in activation probability over the baseline's 3D region.

    The region is every grid point (x, y, h) where the baseline probability
    lies in [0.1, 0.9]. ``mode`` is ``"ratio-of-means"`` (relative gain of
    the mean probability) or ``"mean-of-ratios"`` (mean of pointwise gains).
    """
    if gamma_override is not None:
        s = s.replace(gamma_override=float(gamma_override))
    xs = s.x_grid() if xs is None else np.asarray(xs, dtype=float)
    ys = s.y_grid() if ys is None else np.asarray(ys, dtype=float)
    hs = np.asarray(s.altitudes if altitudes is None else altitudes, dtype=float)
    x, y, h, pb = _region_points(s, baseline, xs, ys, hs)
    if pb.size == 0:
        raise RegionError("baseline region is empty on the evaluation grid")
    pa = probability(s, criterion, x, y, h)
    if mode == "ratio-of-means":
        return float((pa.mean() - pb.mean()) / pb.mean())
    if mode == "mean-of-ratios":
        return float(np.mean((pa - pb) / pb))
    raise ValueError(f"unknown improvement mode {mode!r}")


def rate_diff_map(s: Scenario, h_av: float, xs=None, ys=None) -> np.ndarray:
    """``R_eff(joint) - R_eff(rsrp)`` on the (x, y) grid, shape ``(len(xs), len(ys))``."""
    xs = s.x_grid() if xs is None else np.asarray(xs, dtype=float)
    ys = s.y_grid() if ys is None else np.asarray(ys, dtype=float)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    d_s, d_t = distances(s, X, Y, h_av)
    r_s, r_t = comm_rate_bps(s, d_s), comm_rate_bps(s, d_t)
    pr = criteria.p_ho_rsrp(s, d_s, d_t, h_av)
    pj = criteria.p_ho_joint(pr, criteria.p_ho_dist(s, d_s, d_t))
    return criteria.effective_rate(pj, r_s, r_t) - criteria.effective_rate(pr, r_s, r_t)
