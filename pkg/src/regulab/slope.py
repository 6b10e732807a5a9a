"""Primal descent-rate conditions for subregularity.

The merit function of a slice F_p is ``|v - ybar|`` plus the indicator of the
graph.  Its nonlocal slope at a graph point (x, y) is the supremum of
``(|y - ybar| - |v - ybar|) / d_gamma((u, v), (x, y))`` over admissible graph
points (u, v); the local slope is the same supremum restricted to shrinking
neighborhoods.  Subregularity at rate alpha is equivalent to the nonlocal
slope being at least alpha on the admissible scan set, and is implied by the
corresponding local-slope bound; both checkers below scan that set and report
certificates.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import InputError
from .mappings import (
    ClosedFormMap,
    PolyhedralGraphMap,
    RegularityQuery,
    SampledGraphMap,
    ScanGrids,
    SetValuedMap,
    condition_scan_points,
)
from .oracle import Certificate, _base_meta, _finish
from .sets import ConeRep, dist_to_region, gamma_dual_distance
from .spaces import GammaMetric, as_point, ball_mask, prod_dist

_LEVELS = 13
_LAST = 3


def merit_value(F: SetValuedMap, q: RegularityQuery, p, u, v,
                tol: float = 1e-9) -> float:
    """|v - ybar| on the graph of F_p, +inf off it."""
    u, v = as_point(u), as_point(v)
    if not F.in_graph(p, u, v, tol):
        return math.inf
    return float(np.linalg.norm(v - q.ybar_arr))


def _require_graph_point(F, p, x, y):
    if not F.in_graph(p, x, y, 1e-8):
        raise InputError("slope is only defined at points of the graph")


def _quotient(w, u, v, x, y, g: GammaMetric) -> float:
    """Stable difference quotient (|y-ybar| - |v-ybar|) / d_gamma.

    ``w = y - ybar``; the numerator is evaluated through the difference-of-
    squares identity to avoid cancellation when v is close to y.
    """
    d = prod_dist(u, v, x, y, g)
    if d <= 0:
        return -math.inf
    wv = v - (y - w)  # v - ybar
    nw, nv = np.linalg.norm(w), np.linalg.norm(wv)
    if nw + nv == 0:
        return 0.0
    num = (w @ w - wv @ wv) / (nw + nv)
    return float(num / d)


def _direction_candidates(F: SetValuedMap, q: RegularityQuery, p, x, y,
                          gamma: float) -> list[np.ndarray]:
    """Unit-scale descent directions in the product space.

    Directions with ``max(|d_x|, gamma |d_y|) <= 1``: the maximizer of the
    dual-distance support problem over each graph tangent cone at (x, y)
    (the first-order optimal direction), plus the direction toward the
    nearest solution point paired with the target.
    """
    g = GammaMetric(gamma)
    ybar = q.ybar_arr
    w = as_point(y) - ybar
    nw = np.linalg.norm(w)
    dirs: list[np.ndarray] = []
    qvec = np.concatenate([np.zeros(F.nx), -w / nw]) if nw > 0 else None

    cones: list[ConeRep] = []
    if isinstance(F, PolyhedralGraphMap):
        xy = np.concatenate([as_point(x), as_point(y)])
        for piece in F.graph_region(p).nonempty_pieces():
            if piece.contains(xy, 1e-8):
                act = piece.active_rows(xy)
                cones.append(ConeRep.make(
                    generators=piece.A[act] if act.size else None, dim=piece.dim))
    else:
        try:
            cone = F.normal_cone(p, x, y)
        except InputError:
            cone = None
        if cone is not None and not cone.empty:
            cones.append(cone)
    if qvec is not None:
        for cone in cones:
            _, u = gamma_dual_distance(qvec, cone, g, F.nx, with_direction=True)
            if u is not None and np.linalg.norm(u) > 1e-12:
                dirs.append(u)

    # direction toward the nearest solution point, paired with the target
    try:
        sd, upt = dist_to_region(as_point(x), F.solution_set(p, ybar))
    except InputError:
        sd, upt = math.inf, None
    if upt is not None and math.isfinite(sd):
        step = np.concatenate([upt - as_point(x), ybar - as_point(y)])
        s = max(np.linalg.norm(step[: F.nx]), gamma * np.linalg.norm(step[F.nx:]))
        if s > 0:
            dirs.append(step / s)
    return dirs


def _points_on_graph_along(F, p, x, y, d, ts) -> list[tuple[np.ndarray, np.ndarray]]:
    """Honest graph points near (x, y) stepping along direction ``d``."""
    x, y = as_point(x), as_point(y)
    nx = F.nx
    out = []
    for t in ts:
        u = x + t * d[:nx]
        v = y + t * d[nx:]
        if isinstance(F, ClosedFormMap):
            for val in F.values(p, u):
                out.append((u, val))
        elif isinstance(F, PolyhedralGraphMap):
            z = np.concatenate([u, v])
            if F.graph_region(p).contains(z, 1e-10):
                out.append((u, v))
            else:
                dz, zp = dist_to_region(z, F.graph_region(p))
                if zp is not None and dz <= abs(t):
                    out.append((zp[:nx], zp[nx:]))
        else:
            pass  # sampled graphs: only cloud points are honest
    return out


def _coordinate_probes(F, p, x, ts) -> list[tuple[np.ndarray, np.ndarray]]:
    """Closed-form maps: values at coordinate-perturbed base points."""
    if not isinstance(F, ClosedFormMap):
        return []
    x = as_point(x)
    out = []
    for i in range(F.nx):
        e = np.zeros(F.nx)
        e[i] = 1.0
        for t in ts:
            for sgn in (1.0, -1.0):
                u = x + sgn * t * e
                for val in F.values(p, u):
                    out.append((u, val))
    return out


def _step_schedule(nw: float, gamma: float) -> np.ndarray:
    """Shared radius schedule for honest short steps from a graph point."""
    r0 = min(1e-4, 1e-5 * nw * min(gamma, 1.0))
    return r0 * 2.0 ** (-np.arange(_LEVELS, dtype=float))


def _short_step_candidates(F, q, p, x, y, ts):
    """Honest graph points stepped from (x, y); used by both slope variants
    so the local value never exceeds the nonlocal one numerically."""
    cands: list[tuple[np.ndarray, np.ndarray]] = []
    for d in _direction_candidates(F, q, p, x, y, q.gamma):
        cands.extend(_points_on_graph_along(F, p, x, y, d, ts))
    cands.extend(_coordinate_probes(F, p, x, list(ts) +
                                    [t / (1 + q.gamma) for t in ts]))
    if isinstance(F, SampledGraphMap):
        nx = F.nx
        for row in F.graph_cloud(p):
            cands.append((row[:nx], row[nx:]))
    return cands


def nonlocal_slope(F: SetValuedMap, q: RegularityQuery, p, x, y,
                   grids: ScanGrids, x_radius: float | None = None) -> float:
    """Supremum of merit difference quotients over the admissible graph scan.

    Admissible competitors (u, v) lie on gph F_p with u in the open ball of
    radius ``x_radius`` (default delta + mu) around xbar and |v - ybar|
    strictly below alpha*mu.  The scan uses the graph sample plus the nearest
    solution point and short honest steps from (x, y), so the reported value
    is a certified lower bound of the supremum.
    """
    _require_graph_point(F, p, x, y)
    x, y = as_point(x), as_point(y)
    ybar = q.ybar_arr
    w = y - ybar
    nw = float(np.linalg.norm(w))
    if nw == 0:
        raise InputError("slope scan requires y != ybar")
    if x_radius is None:
        x_radius = q.delta + q.mu
    g = GammaMetric(q.gamma)
    cap = q.alpha * q.mu
    cap = cap - 1e-12 * cap if math.isfinite(cap) else math.inf

    best = 0.0

    def consider(u, v):
        nonlocal best
        u, v = as_point(u), as_point(v)
        if np.linalg.norm(u - q.xbar_arr) >= x_radius:
            return
        if np.linalg.norm(v - ybar) > cap:
            return
        r = _quotient(w, u, v, x, y, g)
        if r > best:
            best = r

    pts = F.graph_points(p, grids)
    if pts.shape[0]:
        nx = F.nx
        us, vs = pts[:, :nx], pts[:, nx:]
        ok = ball_mask(us, q.xbar_arr, x_radius)
        ok &= np.linalg.norm(vs - ybar[None, :], axis=1) <= cap
        dux = np.linalg.norm(us - x[None, :], axis=1)
        dvy = np.linalg.norm(vs - y[None, :], axis=1)
        d = np.maximum(dux, q.gamma * dvy)
        ok &= d > 0
        if ok.any():
            dyv = np.linalg.norm(vs[ok] - ybar[None, :], axis=1)
            best = max(best, float(np.max((nw - dyv) / d[ok])))

    # nearest solution point paired with the target
    try:
        sd, upt = dist_to_region(x, F.solution_set(p, ybar, grids))
    except InputError:
        upt = None
    if upt is not None:
        consider(upt, ybar)

    # the same short honest steps the local slope uses, plus coarser ones,
    # so the nonlocal value dominates the local one numerically
    ts = _step_schedule(nw, q.gamma)
    coarse = min(0.1 * nw, 0.1 * nw * q.gamma) * 2.0 ** (-np.arange(6, dtype=float))
    for u, v in _short_step_candidates(F, q, p, x, y,
                                       np.concatenate([coarse, ts])):
        consider(u, v)
    return best


def local_slope(F: SetValuedMap, q: RegularityQuery, p, x, y,
                grids: ScanGrids | None = None, r0: float | None = None) -> float:
    """Limit of merit difference quotients as competitors approach (x, y).

    Approximated on the geometric radius schedule ``r0 * 2^-k``, k = 0..12;
    the reported value is the maximum over the last three levels.  Competitors
    are honest graph points stepped along first-order optimal directions.
    """
    _require_graph_point(F, p, x, y)
    x, y = as_point(x), as_point(y)
    w = y - q.ybar_arr
    nw = float(np.linalg.norm(w))
    if nw == 0:
        raise InputError("slope scan requires y != ybar")
    g = GammaMetric(q.gamma)
    if r0 is None:
        radii = _step_schedule(nw, q.gamma)
    else:
        radii = r0 * 2.0 ** (-np.arange(_LEVELS, dtype=float))

    cands = _short_step_candidates(F, q, p, x, y, radii)
    scored = []
    for u, v in cands:
        dxy = prod_dist(u, v, x, y, g)
        if dxy > 0:
            scored.append((dxy, _quotient(w, u, v, x, y, g)))
    levels = []
    for r in radii:
        best = 0.0
        for dxy, val in scored:
            if dxy <= r * (1 + 1e-9) and val > best:
                best = val
        levels.append(best)
    return max(levels[-_LAST:])


def _condition_check(F, q, grids, mode, slope_fn, tol, local) -> Certificate:
    if mode not in ("sufficient", "necessary"):
        raise InputError(f"unknown mode {mode!r}")
    if mode == "necessary":
        q = dataclasses.replace(q, gamma=1.0 / q.alpha)
        x_radius = q.delta
        if local and not F.convex_graph:
            raise InputError(
                "the local-slope bound is necessary only for convex graphs"
            )
    else:
        x_radius = q.delta + q.mu
    margin = math.inf
    witness = None
    n = 0
    for sp in condition_scan_points(F, q, grids, x_radius):
        n += 1
        val = slope_fn(F, q, sp.p, sp.x, sp.y, grids)
        m = val - q.alpha
        if m < margin:
            margin = m
            if m < -tol:
                witness = {"p": sp.p, "x": sp.x, "y": sp.y, "value": val,
                           "inequality": "slope >= alpha"}
    if witness is None and margin < 0:
        margin = float(margin)
    meta = dict(_base_meta(q, grids), mode=mode, x_radius=x_radius,
                kind="local" if local else "nonlocal")
    return _finish(margin, witness, n, F.approximate, meta)


def check_nonlocal_slope_condition(F: SetValuedMap, q: RegularityQuery,
                                   grids: ScanGrids, mode: str = "sufficient",
                                   tol: float = 1e-7) -> Certificate:
    """Scan ``nonlocal_slope >= alpha`` over the admissible set.

    In sufficient mode (caller-chosen gamma, scan radius delta + mu) a HOLDS
    verdict certifies uniform subregularity at rate alpha; in necessary mode
    the scan runs at gamma = 1/alpha over the delta-ball and must hold
    whenever subregularity does.
    """

    def fn(F, q, p, x, y, grids):
        return nonlocal_slope(F, q, p, x, y, grids)

    return _condition_check(F, q, grids, mode, fn, tol, local=False)


def check_local_slope_condition(F: SetValuedMap, q: RegularityQuery,
                                grids: ScanGrids, mode: str = "sufficient",
                                tol: float = 1e-7) -> Certificate:
    """Scan ``local_slope >= alpha``; necessary mode requires convex graphs."""

    def fn(F, q, p, x, y, grids):
        return local_slope(F, q, p, x, y, grids)

    return _condition_check(F, q, grids, mode, fn, tol, local=True)
