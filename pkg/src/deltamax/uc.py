"""Uniform-continuity evidence from the delta field.

The infimum of delta(., eps) over the domain decides uniform continuity:
it stays positive for every eps exactly when f is uniformly continuous.
Finitely many evaluations cannot prove either direction, so verdicts are
explicitly *evidence*: EvidenceNotUC requires a chain of witness pairs
whose mutual distances keep halving while their image distance stays
pinned at eps; EvidenceUC requires every stage infimum of an expanding /
refining window schedule to stabilize above a positive floor.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .delta import DEFAULT_CONFIG, SearchConfig, compute_delta, epsilon_bound
from .errors import DeltamaxError, InvalidDomain, WitnessesStagnated
from .model import (
    DomainSpec,
    FunctionSpec,
    Monotone1DFn,
    Point,
    RadialFn,
    Shape,
    array_evaluator,
    unwrap,
)
from .search import line_field

_WITNESS_FACTOR = 2.0 ** 0.25  # finer than the trace schedule: keeps the
#                                halving pairs at small coordinates, where
#                                |f| rounding stays far below tol_f
_PATIENCE = 24
_MAX_WITNESS_STAGES = 400


def _worker_count() -> int:
    raw = os.environ.get("DELTAMAX_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        return 1
    return max(1, min(cap, os.cpu_count() or 1))


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StageRecord:
    level: int
    window: DomainSpec
    resolution: int
    inf_delta: float            # inf over the stage grid; +inf if every point failed
    argmin: Point | None
    skipped: int = 0


@dataclass(frozen=True)
class InfTrace:
    eps: float
    records: tuple[StageRecord, ...]

    def floor(self) -> float:
        vals = [r.inf_delta for r in self.records if math.isfinite(r.inf_delta)]
        return min(vals) if vals else math.inf


@dataclass(frozen=True)
class WitnessPairs:
    """Pairs (x_n, y_n) with |f(x_n) - f(y_n)| = eps0 and distances that
    at least halve from one pair to the next."""

    pairs: tuple[tuple[Point, Point], ...]
    eps0: float
    distances: tuple[float, ...]

    def __post_init__(self):
        ds = self.distances
        if len(ds) != len(self.pairs):
            raise ValueError("one distance per pair required")
        for a, b in zip(ds, ds[1:]):
            if not b < a:
                raise ValueError("witness distances must strictly decrease")
            if b > 0.5 * a * (1.0 + 1e-9):
                raise ValueError("consecutive witness distances must halve")


class Verdict(Enum):
    EVIDENCE_UC = "evidence-uc"
    EVIDENCE_NOT_UC = "evidence-not-uc"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class UcVerdict:
    kind: Verdict
    eps_tested: tuple[float, ...]
    traces: tuple[InfTrace, ...]
    lower_bound: float | None = None
    witnesses: WitnessPairs | None = None
    reason: str | None = None

    def __post_init__(self):
        if self.kind is Verdict.EVIDENCE_UC:
            if self.witnesses is not None:
                raise ValueError("EvidenceUC cannot carry witness pairs")
            if not (self.lower_bound is not None and self.lower_bound > 0):
                raise ValueError("EvidenceUC needs a positive lower bound")
        if self.kind is Verdict.EVIDENCE_NOT_UC and self.witnesses is None:
            raise ValueError("EvidenceNotUC needs witness pairs")


# ---------------------------------------------------------------------------
# Window schedules
# ---------------------------------------------------------------------------

def _line_bounds(dom: DomainSpec) -> tuple[float, float, bool, bool]:
    if dom.is_radial:
        return dom.radius_interval()
    return dom.lo[0], dom.hi[0], dom.open_lo[0], dom.open_hi[0]


def _make_window(dom: DomainSpec, lo: float, hi: float) -> DomainSpec:
    if dom.is_radial:
        if dom.shape is Shape.BALL and lo == 0.0:
            return DomainSpec.ball(dom.center, hi, open_boundary=False, norm=dom.norm)
        return DomainSpec.annulus(dom.center, lo, hi, norm=dom.norm)
    return DomainSpec.interval(lo, hi, norm=dom.norm)


def default_schedule(dom: DomainSpec, stages: int = 21, resolution: int = 2048,
                     factor: float = 2.0, cfg: SearchConfig = DEFAULT_CONFIG
                     ) -> list[tuple[DomainSpec, int]]:
    """Window schedule for infimum scans.

    Bounded domains with closed boundaries are compact: the schedule just
    refines the resolution on the full window.  Unbounded extents expand
    geometrically ([0, 2^k]-style); open finite boundaries are approached
    geometrically instead, since that is where the infimum can escape.
    """
    if dom.dimension > 1 and not dom.is_radial:
        # Generic nD: refine the (truncated) full window.
        return [(dom, resolution) for _ in range(min(stages, 3))]

    lo, hi, open_lo, open_hi = _line_bounds(dom)
    lo_escape = math.isinf(lo) or open_lo
    hi_escape = math.isinf(hi) or open_hi
    radial = dom.is_radial

    if not lo_escape and not hi_escape:
        out = []
        res = max(64, resolution // 8)
        while res < resolution:
            out.append((_make_window(dom, lo, hi), res))
            res *= 2
        out.append((_make_window(dom, lo, hi), resolution))
        return out

    width = hi - lo if math.isfinite(hi - lo) else cfg.r0
    out = []
    for k in range(stages):
        g = factor ** k
        w_lo = lo
        w_hi = hi
        if lo_escape:
            base = hi if math.isfinite(hi) else (lo + cfg.r0 if math.isfinite(lo) else 0.0)
            if math.isinf(lo):
                w_lo = base - cfg.r0 * g
            else:
                w_lo = lo + min(width, cfg.r0) / g
        if hi_escape:
            base = lo if math.isfinite(lo) else 0.0
            if math.isinf(hi):
                w_hi = base + cfg.r0 * g
            else:
                w_hi = hi - min(width, cfg.r0) / g if open_hi else hi
        w_lo = max(w_lo, lo if not math.isinf(lo) else -cfg.r_max)
        w_hi = min(w_hi, hi if not math.isinf(hi) else cfg.r_max)
        if radial:
            w_lo = max(w_lo, 0.0)
        if not w_lo < w_hi:
            continue
        out.append((_make_window(dom, w_lo, w_hi), resolution))
    return out


# ---------------------------------------------------------------------------
# Field evaluation per stage
# ---------------------------------------------------------------------------

def _lift_radial(dom: DomainSpec, t: float) -> Point:
    coords = [0.0] * dom.dimension
    coords[0] = t
    return Point(tuple(coords))


def _stage_field(f: FunctionSpec, dom: DomainSpec, window: DomainSpec,
                 resolution: int, eps: float, cfg: SearchConfig):
    """Returns (points, values, witnesses, skipped) for one stage grid.

    1-d and radial functions use the vectorized line engine against the
    *full* domain (the crossing may fall outside the window); generic nD
    falls back to per-point ray estimates on a capped grid.
    """
    g = unwrap(f)
    if isinstance(g, RadialFn) and dom.is_radial and all(c == 0.0 for c in dom.center):
        lo, hi, open_lo, open_hi = dom.radius_interval()
        wlo, whi, _, _ = window.radius_interval()
        inner = unwrap(g.inner)
        if isinstance(inner, Monotone1DFn):
            lo = max(lo, inner.interval[0])
            hi = min(hi, inner.interval[1])
            open_lo = open_lo and lo == dom.r_in
            open_hi = open_hi and hi == dom.r_out
        ts = np.linspace(max(wlo, lo), min(whi, hi), resolution)
        keep = (ts > lo) if open_lo else (ts >= lo)
        keep &= (ts < hi) if open_hi else (ts <= hi)
        ts = ts[keep]
        f_arr = array_evaluator(inner)
        res = line_field(f_arr, ts, eps, lo, hi, open_lo, open_hi, cfg,
                         detect_points=min(1024, cfg.scan_points))
        pts = [_lift_radial(dom, t) for t in ts]
        wits = [None if math.isnan(v) else _lift_radial(dom, t + off)
                for t, off, v in zip(ts, res.witness_offset, res.values)]
        return pts, res.values, wits, int(np.count_nonzero(res.failed))

    if g.dimension == 1:
        lo, hi, open_lo, open_hi = _line_bounds(dom)
        wlo, whi, _, _ = _line_bounds(window)
        if isinstance(g, Monotone1DFn):
            lo = max(lo, g.interval[0])
            hi = min(hi, g.interval[1])
        ps = np.linspace(max(wlo, lo), min(whi, hi), resolution)
        keep = (ps > lo) if open_lo else (ps >= lo)
        keep &= (ps < hi) if open_hi else (ps <= hi)
        ps = ps[keep]
        f_arr = array_evaluator(g)
        res = line_field(f_arr, ps, eps, lo, hi, open_lo, open_hi, cfg,
                         detect_points=min(1024, cfg.scan_points))
        pts = [Point((p,)) for p in ps]
        wits = [None if math.isnan(v) else Point((p + off,))
                for p, off, v in zip(ps, res.witness_offset, res.values)]
        return pts, res.values, wits, int(np.count_nonzero(res.failed))

    # Generic nD estimator path; the grid is capped to stay desk-scale.
    per_axis = max(3, min(resolution, int(round(4096 ** (1.0 / dom.dimension)))))
    lo_arr, hi_arr = window.bounding_box(truncate=cfg.r_max)
    axes = [np.linspace(lo_arr[i], hi_arr[i], per_axis) for i in range(dom.dimension)]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([m.ravel() for m in mesh], axis=1)
    grid = grid[dom.contains_rows(grid)]

    def one(i: int):
        try:
            r = compute_delta(g, dom, Point(tuple(grid[i])), eps, cfg, directions=16)
            return r.value, r.witness
        except DeltamaxError:
            return math.nan, None

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(grid.shape[0])))
    else:
        results = [one(i) for i in range(grid.shape[0])]
    values = np.asarray([v for v, _ in results])
    wits = [w for _, w in results]
    pts = [Point(tuple(row)) for row in grid]
    return pts, values, wits, int(np.count_nonzero(np.isnan(values)))


def infimum_delta(f: FunctionSpec, dom: DomainSpec, eps: float,
                  schedule: list[tuple[DomainSpec, int]] | None = None,
                  cfg: SearchConfig = DEFAULT_CONFIG) -> InfTrace:
    """Coarse-to-fine grid infima of delta(., eps) over a window schedule.

    Per-point failures (empty sphere preimage) are skipped and counted,
    not fatal.
    """
    if schedule is None:
        schedule = default_schedule(dom, cfg=cfg)
    records = []
    for level, (window, resolution) in enumerate(schedule):
        pts, values, _wits, skipped = _stage_field(f, dom, window, resolution, eps, cfg)
        finite = np.isfinite(values)
        if np.any(finite):
            i = int(np.nanargmin(np.where(finite, values, np.inf)))
            rec = StageRecord(level, window, resolution, float(values[i]),
                              pts[i], skipped)
        else:
            rec = StageRecord(level, window, resolution, math.inf, None, skipped)
        records.append(rec)
    return InfTrace(eps=eps, records=tuple(records))


# ---------------------------------------------------------------------------
# Witness search
# ---------------------------------------------------------------------------

def witness_search(f: FunctionSpec, dom: DomainSpec, eps0: float,
                   count: int = 8, cfg: SearchConfig = DEFAULT_CONFIG,
                   resolution: int = 512) -> WitnessPairs:
    """Build `count` pairs (x_n, y_n) with |f(x_n) - f(y_n)| = eps0 and
    distances halving from pair to pair, by following the argmin of the
    delta field through a fine geometric window schedule.

    Raises WitnessesStagnated (with the partial pairs attached) when the
    distances stop halving -- the signal that feeds an EvidenceUC or
    Inconclusive verdict.
    """
    schedule = default_schedule(dom, stages=_MAX_WITNESS_STAGES,
                                resolution=resolution,
                                factor=_WITNESS_FACTOR, cfg=cfg)
    f_arr_dim = unwrap(f).dimension

    pairs: list[tuple[Point, Point]] = []
    dists: list[float] = []
    since_last = 0
    last_best = math.inf
    for window, res in schedule:
        pts, values, wits, _skipped = _stage_field(f, dom, window, res, eps0, cfg)
        finite = np.isfinite(values)
        if not np.any(finite):
            since_last += 1
            if since_last > _PATIENCE:
                break
            continue
        i = int(np.nanargmin(np.where(finite, values, np.inf)))
        v = float(values[i])
        x, y = pts[i], wits[i]
        if y is None:
            continue
        # Image-distance accuracy limit: float rounding of f at x scales
        # the achievable |h|, so the acceptance threshold is ulp-aware.
        fx = _scalar_f(f, x, dom)
        tol_eff = max(cfg.tol_f, 32.0 * math.ulp(abs(fx) + eps0))
        fy = _scalar_f(f, y, dom)
        if not abs(abs(fy - fx) - eps0) <= tol_eff:
            since_last += 1
            if since_last > _PATIENCE:
                break
            continue
        if not pairs or v <= 0.5 * dists[-1]:
            pairs.append((x, y))
            dists.append(v)
            since_last = 0
            if len(pairs) >= count:
                return WitnessPairs(tuple(pairs), eps0, tuple(dists))
        else:
            since_last += 1
            last_best = min(last_best, v)
            if since_last > _PATIENCE:
                break
    raise WitnessesStagnated(
        f"witness distances stopped halving after {len(pairs)} pair(s)",
        pairs=WitnessPairs(tuple(pairs), eps0, tuple(dists)) if pairs else None)


def _scalar_f(f: FunctionSpec, x: Point, dom: DomainSpec) -> float:
    g = unwrap(f)
    f_arr = array_evaluator(g, norm=dom.norm)
    arr = x.as_array()
    out = f_arr(arr if g.dimension == 1 and arr.size == 1 else arr.reshape(1, -1))
    return float(np.asarray(out).ravel()[0])


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

def _trace_is_stable(trace: InfTrace) -> bool:
    vals = [r.inf_delta for r in trace.records]
    if not vals or any(not math.isfinite(v) or v <= 0 for v in vals):
        return False
    q3 = vals[(3 * (len(vals) - 1)) // 4]
    return vals[-1] >= 0.5 * q3


def uc_verdict(f: FunctionSpec, dom: DomainSpec,
               eps_grid: list[float] | None = None,
               schedule: list[tuple[DomainSpec, int]] | None = None,
               cfg: SearchConfig = DEFAULT_CONFIG,
               count: int = 8) -> UcVerdict:
    """Three-way evidence verdict on uniform continuity of f over dom.

    EvidenceNotUC as soon as one eps yields a full chain of halving
    witness pairs; EvidenceUC when every eps has a stable positive
    infimum floor and no witness chain got anywhere; Inconclusive
    otherwise.  These are numerical evidence, not proof.
    """
    if eps_grid is None:
        beta = epsilon_bound(f, dom, cfg=cfg).beta
        eps_grid = [beta / 8.0, beta / 4.0, beta / 2.0]
    if not eps_grid:
        raise ValueError("eps_grid must be nonempty")

    traces: list[InfTrace] = []
    partial_max = 0
    for eps in eps_grid:
        try:
            witnesses = witness_search(f, dom, eps, count=count, cfg=cfg)
        except WitnessesStagnated as stalled:
            if stalled.pairs is not None:
                partial_max = max(partial_max, len(stalled.pairs.pairs))
            witnesses = None
        trace = infimum_delta(f, dom, eps, schedule=schedule, cfg=cfg)
        traces.append(trace)
        if witnesses is not None:
            return UcVerdict(kind=Verdict.EVIDENCE_NOT_UC,
                             eps_tested=tuple(eps_grid[:len(traces)]),
                             traces=tuple(traces), witnesses=witnesses)

    floors = [t.floor() for t in traces]
    stable = all(_trace_is_stable(t) for t in traces)
    if stable and all(fl > 0 and math.isfinite(fl) for fl in floors) and partial_max <= 2:
        return UcVerdict(kind=Verdict.EVIDENCE_UC, eps_tested=tuple(eps_grid),
                         traces=tuple(traces), lower_bound=min(floors))
    if partial_max > 2:
        reason = (f"witness distances halved {partial_max} time(s) but the "
                  f"chain of {count} needed for evidence did not complete")
    elif not stable:
        reason = "stage infima kept shrinking; no stable positive floor"
    else:
        reason = "no positive floor and no usable witness chain"
    return UcVerdict(kind=Verdict.INCONCLUSIVE, eps_tested=tuple(eps_grid),
                     traces=tuple(traces), reason=reason)
