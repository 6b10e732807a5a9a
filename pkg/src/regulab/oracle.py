"""Ground-truth scans for uniform metric subregularity.

Everything here works straight from the defining inequalities on finite
grids: the subregularity estimate ``alpha * d(x, G(p)) <= d(ybar, F(p, x))``
over the admissible scan set, its geometric ball-intersection counterpart,
and a bisection estimate of the best rate.  Other modules' condition checkers
are validated against these scans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .mappings import RegularityQuery, ScanGrids, SetValuedMap
from .spaces import ball_mask, make_grid


class Verdict(str, Enum):
    HOLDS = "HOLDS"
    VIOLATED = "VIOLATED"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class Certificate:
    """Outcome of a check: verdict, worst-case margin, and a re-checkable
    witness (present whenever the verdict is VIOLATED)."""

    verdict: Verdict
    margin: float = math.nan
    witness: dict | None = None
    scan_meta: dict = field(default_factory=dict)
    detail: str = ""

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS


def _base_meta(q: RegularityQuery, grids: ScanGrids) -> dict:
    meta = {
        "alpha": q.alpha,
        "delta": q.delta,
        "mu": q.mu,
        "eta": q.eta,
        "gamma": q.gamma,
        "grid_res": grids.x.resolution,
        "clamped": [n for n in ("delta", "mu", "eta")
                    if math.isinf(getattr(q, n))],
    }
    return meta


def _finish(margin, witness, n_scanned, approximate, meta, detail="") -> Certificate:
    meta = dict(meta, points_scanned=n_scanned, sampled=approximate)
    if n_scanned == 0:
        return Certificate(Verdict.INCONCLUSIVE, math.nan, None, meta,
                           detail or "no admissible scan points")
    if witness is not None:
        return Certificate(Verdict.VIOLATED, margin, witness, meta, detail)
    if approximate:
        return Certificate(Verdict.INCONCLUSIVE, margin, None, meta,
                           "no violation found on the sampled data")
    return Certificate(Verdict.HOLDS, margin, None, meta, detail)


def _strict_cap(cap: float) -> float:
    """Deterministic strict-inequality guard: scan residual <= cap*(1-1e-12)."""
    return cap - 1e-12 * cap if math.isfinite(cap) else math.inf


def check_subreg_uniform(F: SetValuedMap, q: RegularityQuery,
                         grids: ScanGrids) -> Certificate:
    """Scan the subregularity estimate over p and x in B_delta(xbar).

    HOLDS when ``residual - alpha * solution_distance >= 0`` at every grid
    point with residual strictly below alpha*mu; margin is the scan minimum
    of that difference, and the first (lexicographic) violating point is the
    witness.
    """
    xbar, ybar = q.xbar_arr, q.ybar_arr
    cap = _strict_cap(q.alpha * q.mu)
    xs_all = make_grid(grids.x)
    xs_all = xs_all[ball_mask(xs_all, xbar, q.delta)]
    margin = math.inf
    witness = None
    n_scanned = 0
    for p in F.param_points(q, grids):
        res = F.residual_vec(p, xs_all, ybar)
        mask = res <= cap
        if not mask.any():
            continue
        xs, res = xs_all[mask], res[mask]
        dist = F.solution_distance_vec(p, xs, ybar, grids)
        margins = res - q.alpha * dist
        n_scanned += xs.shape[0]
        i = int(np.argmin(margins))
        if margins[i] < margin:
            margin = float(margins[i])
            if margin < 0:
                witness = {
                    "p": p,
                    "x": xs[i].copy(),
                    "y": None,
                    "value": float(res[i] / dist[i]) if dist[i] > 0 else math.inf,
                    "inequality": "alpha*d(x, G(p)) <= d(ybar, F(p,x))",
                }
    if witness is not None and witness["value"] is not math.inf:
        witness["y"] = _nearest_value(F, witness["p"], witness["x"], ybar)
    return _finish(margin, witness, n_scanned, F.approximate,
                   _base_meta(q, grids))


def _nearest_value(F, p, x, ybar):
    """Point of F(p, x) nearest to ybar, for witness reporting."""
    try:
        vals = F.values(p, x)
    except Exception:
        return None
    if vals is None or len(vals) == 0:
        return None
    vals = np.atleast_2d(np.asarray(vals, dtype=float))
    return vals[int(np.argmin(np.linalg.norm(vals - ybar[None, :], axis=1)))]


def check_geometric(F: SetValuedMap, q: RegularityQuery, grids: ScanGrids,
                    n_rho: int = 64) -> Certificate:
    """Ball-intersection characterization of the subregularity estimate.

    For sampled radii rho in ]0, mu[ and every scanned (p, x) with residual
    strictly below alpha*rho, the solution set must meet the closed ball of
    radius rho around x.  The rho samples are a uniform ladder augmented, per
    scan point, with the critical radius residual/alpha so the scan cannot
    miss a violation that falls between ladder rungs.
    """
    xbar, ybar = q.xbar_arr, q.ybar_arr
    mu = q.mu if math.isfinite(q.mu) else _grid_diameter(grids)
    ladder = np.linspace(mu / (n_rho + 1), mu, n_rho, endpoint=False)
    xs_all = make_grid(grids.x)
    xs_all = xs_all[ball_mask(xs_all, xbar, q.delta)]
    margin = math.inf
    witness = None
    n_scanned = 0
    for p in F.param_points(q, grids):
        res = F.residual_vec(p, xs_all, ybar)
        mask = res <= _strict_cap(q.alpha * mu)
        if not mask.any():
            continue
        xs, res = xs_all[mask], res[mask]
        dist = F.solution_distance_vec(p, xs, ybar, grids)
        for x, r, d in zip(xs, res, dist):
            crit = r / q.alpha
            rhos = np.concatenate([ladder[ladder > crit / (1 - 1e-12)],
                                   [crit * (1 + 1e-9)] if crit * (1 + 1e-9) < mu else []])
            if rhos.size == 0:
                continue
            n_scanned += 1
            m = float(np.min(rhos - d))
            if m < margin:
                margin = m
                if m < 0:
                    rho_bad = float(rhos[int(np.argmin(rhos - d))])
                    witness = {
                        "p": p, "x": x.copy(), "y": None,
                        "value": rho_bad,
                        "inequality": "G(p) meets closed ball of radius rho around x",
                    }
    if witness is not None:
        witness["y"] = _nearest_value(F, witness["p"], witness["x"], ybar)
    return _finish(margin, witness, n_scanned, F.approximate,
                   dict(_base_meta(q, grids), n_rho=n_rho))


def _grid_diameter(grids: ScanGrids) -> float:
    return float(np.linalg.norm(grids.x.upper_arr - grids.x.lower_arr))


def estimate_modulus(F: SetValuedMap, xbar, ybar, delta, mu,
                     grids: ScanGrids, pbar=None, eta=math.inf,
                     iters: int = 40) -> float:
    """Best rate alpha for which the subregularity scan holds, by bisection.

    The admissible set couples to alpha through the residual filter, but the
    scan verdict is monotone in alpha, so bisection applies.  Returns +inf
    when every scan is vacuous (no admissible points at any tested rate).
    """

    def holds(alpha: float) -> bool:
        q = RegularityQuery(xbar=tuple(np.atleast_1d(xbar)),
                            ybar=tuple(np.atleast_1d(ybar)),
                            alpha=alpha, delta=delta, mu=mu,
                            pbar=None if pbar is None else tuple(np.atleast_1d(pbar)),
                            eta=eta)
        cert = check_subreg_uniform(F, q, grids)
        return cert.verdict is not Verdict.VIOLATED, cert

    lo, lo_cert = 0.0, None
    hi = 1.0
    ok, cert = holds(hi)
    doublings = 0
    while ok and doublings < 60:
        lo, lo_cert = hi, cert
        hi *= 2.0
        ok, cert = holds(hi)
        doublings += 1
    if doublings == 0:
        # shrink until the estimate holds (or give up near zero)
        for _ in range(60):
            hi /= 2.0
            ok, cert = holds(hi)
            if ok:
                lo, lo_cert = hi, cert
                break
        if lo == 0.0:
            return 0.0
        hi = lo * 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok, cert = holds(mid)
        if ok:
            lo, lo_cert = mid, cert
        else:
            hi = mid
    if lo_cert is not None and lo_cert.verdict is Verdict.INCONCLUSIVE \
            and lo_cert.scan_meta.get("points_scanned", 0) == 0:
        return math.inf
    return lo
