"""Internal crossing-search engine.

Everything here works on h(t) = |f(x(t)) - f(p)| - eps along a half-line
of offsets t >= 0 from a base point.  The scan walks outward in doubling
windows, brackets the first sign change between consecutive valid
samples, refines the bracket with one fine rescan, and bisects.  All of
it is vectorized over a batch of base points ("columns"); the scalar
backends run a batch of size one.

Conventions: an evaluator maps (cols, ts) -> (f, valid) where ts has one
row per probe offset and one column per selected base point.  Samples
with valid=False (outside the domain) never form brackets; f = +/-inf is
treated as a definite |f - fp| >= eps exceedance, f = NaN as invalid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

SideEval = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]

_MAX_BISECT = 160
_TAIL_PROBES = 80


@dataclass
class SideResult:
    """Per-column outcome of scanning one side."""

    root: np.ndarray       # offset of the nearest crossing; NaN when none
    root_h: np.ndarray     # |h| achieved at the root
    clear: np.ndarray      # radius verified all-clear by sampling
    step: np.ndarray       # grid step backing `clear`
    searched: np.ndarray   # how far the side was scanned


def _h_of(f: np.ndarray, fp, eps: float) -> np.ndarray:
    # f is always a fresh buffer from an evaluator; reuse it.
    with np.errstate(invalid="ignore"):
        h = np.subtract(f, fp, out=f if f.base is None and f.flags.writeable else None)
        h = np.abs(h, out=h)
        h -= eps
    return h


def _first_crossing(ts, h, valid, carry_t, carry_h):
    """Locate the first valid h>=0 sample per column.

    Returns (found, blo_t, blo_h, bhi_t, bhi_h, new_carry_t, new_carry_h,
    prior_t) where the bracket lower end falls back to the carried last
    all-clear sample of earlier windows.
    """
    k, m = h.shape
    cols = np.arange(m)
    ge = valid & (h >= 0.0)
    found = ge.any(axis=0)
    first_ge = np.where(found, ge.argmax(axis=0), 0)

    rows = np.arange(k)[:, None]
    prior = valid & (rows < first_ge[None, :]) if found.any() else np.zeros_like(valid)
    # For columns without a crossing every valid sample counts as prior.
    prior = np.where(found[None, :], prior, valid)
    has_prior = prior.any(axis=0)
    last_prior = np.where(has_prior, k - 1 - prior[::-1].argmax(axis=0), 0)

    blo_t = np.where(has_prior, ts[last_prior, cols], carry_t)
    blo_h = np.where(has_prior, h[last_prior, cols], carry_h)
    bhi_t = np.where(found, ts[first_ge, cols], np.nan)
    bhi_h = np.where(found, h[first_ge, cols], np.nan)
    return found, blo_t, blo_h, bhi_t, bhi_h


def _bisect(eval_at, cols, fp, eps, lo, hi, lo_h, hi_h, pos_scale, cfg):
    """Shrink brackets [lo, hi] with h(lo) < 0 <= h(hi); returns the probe
    with the smallest |h| seen, which is the crossing location."""
    lo = lo.copy()
    hi = hi.copy()
    with np.errstate(invalid="ignore"):
        pick_hi = np.abs(hi_h) < np.abs(lo_h)
    best_t = np.where(pick_hi, hi, lo)
    best_h = np.where(pick_hi, np.abs(hi_h), np.abs(lo_h))
    tol = cfg.tol_x * np.maximum(1.0, pos_scale)
    for _ in range(_MAX_BISECT):
        width = hi - lo
        xulp = np.spacing(pos_scale + hi)
        act = (width > tol) | ((best_h > cfg.tol_f) & (width > 4.0 * xulp))
        if not act.any():
            break
        idx = np.flatnonzero(act)
        mid = 0.5 * (lo[idx] + hi[idx])
        f, valid = eval_at(cols[idx], mid[None, :])
        hm = _h_of(f[0], fp[idx], eps)
        # Out-of-domain or undefined midpoints push the root inward.
        hm = np.where(valid[0] & ~np.isnan(hm), hm, np.inf)
        finite = np.isfinite(hm)
        better = finite & (np.abs(hm) < best_h[idx])
        bidx = idx[better]
        best_t[bidx] = mid[better]
        best_h[bidx] = np.abs(hm[better])
        ge = hm >= 0.0
        hi[idx[ge]] = mid[ge]
        lo[idx[~ge]] = mid[~ge]
    return best_t, best_h


def scan_side(eval_at: SideEval, fp: np.ndarray, eps: float,
              extents: np.ndarray, r0: np.ndarray,
              pos_scale: np.ndarray, cfg,
              detect_points: int | None = None,
              refine_points: int = 256) -> SideResult:
    """Find the nearest crossing of h along one side for every column.

    detect_points controls the bracketing sweep resolution (defaults to
    cfg.scan_points); the fine rescan inside a found bracket keeps the
    cleared-radius quality independent of it.
    """
    n = fp.size
    root = np.full(n, np.nan)
    root_h = np.full(n, np.nan)
    clear = np.zeros(n)
    step = np.zeros(n)
    searched = np.zeros(n)

    cap = np.minimum(extents, cfg.r_max)
    alive = cap > 0.0
    carry_t = np.zeros(n)
    carry_h = np.full(n, -eps)
    wlo = np.zeros(n)
    whi = np.minimum(np.maximum(r0, 16.0 * np.spacing(pos_scale + 1.0)), cap)

    if detect_points is None:
        detect_points = cfg.scan_points
    frac = np.arange(1, detect_points + 1, dtype=float) / detect_points
    frac_fine = np.arange(1, refine_points + 1, dtype=float) / refine_points

    # Brackets accumulate here and are refined/bisected in one batch.
    br_cols: list[np.ndarray] = []
    br = {"lo": [], "lo_h": [], "hi": [], "hi_h": []}

    def stash(cols, blo, blo_h, bhi, bhi_h):
        br_cols.append(cols)
        br["lo"].append(blo)
        br["lo_h"].append(blo_h)
        br["hi"].append(bhi)
        br["hi_h"].append(bhi_h)

    tail_cols: list[int] = []

    rounds = 0
    while alive.any():
        rounds += 1
        if rounds > 96:  # doubling from 1e-12-ish to r_max stays far below this
            break
        cols = np.flatnonzero(alive)
        lo_c = wlo[cols]
        hi_c = np.minimum(whi[cols], cap[cols])
        ts = lo_c[None, :] + (hi_c - lo_c)[None, :] * frac[:, None]
        f, valid = eval_at(cols, ts)
        h = _h_of(f, fp[cols], eps)
        valid = valid & ~np.isnan(h)
        found, blo, blo_h, bhi, bhi_h = _first_crossing(
            ts, h, valid, carry_t[cols], carry_h[cols])

        searched[cols] = hi_c
        fcols = cols[found]
        if fcols.size:
            stash(fcols, blo[found], blo_h[found], bhi[found], bhi_h[found])
            clear[fcols] = blo[found]
            step[fcols] = (hi_c[found] - lo_c[found]) / detect_points
            alive[fcols] = False
        ncols = cols[~found]
        if ncols.size:
            carry_t[ncols] = blo[~found]
            carry_h[ncols] = blo_h[~found]
            clear[ncols] = hi_c[~found]
            step[ncols] = (hi_c[~found] - lo_c[~found]) / detect_points
            exhausted = hi_c[~found] >= cap[ncols]
            done = ncols[exhausted]
            if done.size:
                alive[done] = False
                for c in done:
                    if math.isfinite(extents[c]):
                        tail_cols.append(int(c))
            wlo[ncols] = hi_c[~found]
            whi[ncols] = 2.0 * np.maximum(hi_c[~found], 16.0 * np.spacing(pos_scale[ncols] + 1.0))

    # Geometric probes toward a finite boundary catch crossings that hide
    # between the last linear sample and the (possibly open) endpoint,
    # e.g. profiles diverging at a punctured origin.
    if tail_cols:
        cols = np.asarray(sorted(tail_cols), dtype=int)
        ext = extents[cols]
        gap = ext - carry_t[cols]
        j = np.arange(1, _TAIL_PROBES + 1, dtype=float)[:, None]
        ts = ext[None, :] - gap[None, :] * np.power(0.5, j)
        ts = np.maximum(ts, carry_t[cols][None, :])
        f, valid = eval_at(cols, ts)
        h = _h_of(f, fp[cols], eps)
        valid = valid & ~np.isnan(h) & (ts > carry_t[cols][None, :])
        found, blo, blo_h, bhi, bhi_h = _first_crossing(
            ts, h, valid, carry_t[cols], carry_h[cols])
        searched[cols] = ext
        fcols = cols[found]
        if fcols.size:
            stash(fcols, blo[found], blo_h[found], bhi[found], bhi_h[found])
            clear[fcols] = blo[found]
            step[fcols] = np.maximum(bhi[found] - blo[found], np.spacing(ext[found]))
        ncols = cols[~found]
        if ncols.size:
            clear[ncols] = np.maximum(clear[ncols], blo[~found])

    if br_cols:
        cols = np.concatenate(br_cols)
        blo = np.concatenate(br["lo"])
        blo_h = np.concatenate(br["lo_h"])
        bhi = np.concatenate(br["hi"])
        bhi_h = np.concatenate(br["hi_h"])

        # One fine rescan inside the bracket sharpens both the cleared
        # radius and, for coarse windows, the choice of nearest crossing.
        wide = (bhi - blo) > 4.0 * cfg.tol_x * np.maximum(1.0, pos_scale[cols])
        if wide.any():
            idx = np.flatnonzero(wide)
            ts = blo[idx][None, :] + (bhi - blo)[idx][None, :] * frac_fine[:, None]
            f, valid = eval_at(cols[idx], ts)
            h = _h_of(f, fp[cols[idx]], eps)
            valid = valid & ~np.isnan(h)
            found, rlo, rlo_h, rhi, rhi_h = _first_crossing(
                ts, h, valid, blo[idx], blo_h[idx])
            upd = idx[found]
            blo[upd] = rlo[found]
            blo_h[upd] = rlo_h[found]
            bhi[upd] = rhi[found]
            bhi_h[upd] = rhi_h[found]
            clear[cols[upd]] = rlo[found]
            step[cols[upd]] = rhi[found] - rlo[found]

        best_t, best_h = _bisect(eval_at, cols, fp[cols], eps, blo, bhi,
                                 blo_h, bhi_h, pos_scale[cols], cfg)
        root[cols] = best_t
        root_h[cols] = best_h
        clear[cols] = np.maximum(clear[cols], np.minimum(blo, best_t))

    return SideResult(root=root, root_h=root_h, clear=clear, step=step,
                      searched=searched)


@dataclass
class FieldResult:
    """Vectorized two-sided search outcome for a batch of base points."""

    values: np.ndarray          # NaN where the sphere preimage was not found
    witness_offset: np.ndarray  # signed offset of the achiever
    lower: np.ndarray           # sampled-clear certified lower bound
    root_h: np.ndarray          # |h| at the achiever
    one_sided: np.ndarray
    searched: np.ndarray
    failed: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.failed is None:
            self.failed = np.isnan(self.values)


def two_sided_scan(eval_pos: SideEval, eval_neg: SideEval, fp: np.ndarray,
                   eps: float, ext_pos, ext_neg, r0, pos_scale, cfg,
                   detect_points: int | None = None) -> FieldResult:
    """Combine the +t and -t side scans into delta values and witnesses.

    Ties between equally distant crossings resolve to the negative side
    (the left crossing), which keeps results deterministic.
    """
    side_p = scan_side(eval_pos, fp, eps, ext_pos, r0, pos_scale, cfg,
                       detect_points=detect_points)
    side_n = scan_side(eval_neg, fp, eps, ext_neg, r0, pos_scale, cfg,
                       detect_points=detect_points)

    rp, rn = side_p.root, side_n.root
    has_p, has_n = ~np.isnan(rp), ~np.isnan(rn)
    use_neg = has_n & (~has_p | (rn <= rp))
    values = np.where(use_neg, rn, rp)
    values[~(has_p | has_n)] = np.nan
    witness = np.where(use_neg, -rn, rp)
    root_h = np.where(use_neg, side_n.root_h, side_p.root_h)
    one_sided = has_p ^ has_n

    # A side without a crossing was cleared up to its searched radius (or
    # has no domain at all, which constrains nothing).
    clear_p = np.where(has_p, side_p.clear, np.where(ext_pos > 0, side_p.clear, np.inf))
    clear_n = np.where(has_n, side_n.clear, np.where(ext_neg > 0, side_n.clear, np.inf))
    step = np.maximum(side_p.step, side_n.step)
    lower = np.minimum(clear_p, clear_n) - step
    lower = np.minimum(lower, values)
    tol_eff = cfg.tol_x * np.maximum(1.0, pos_scale)
    bad = ~(lower > 0.0)
    lower[bad] = np.minimum(values[bad], tol_eff[bad])
    searched = np.maximum(side_p.searched, side_n.searched)
    return FieldResult(values=values, witness_offset=witness, lower=lower,
                       root_h=root_h, one_sided=one_sided, searched=searched)


def line_field(f_arr, ps: np.ndarray, eps: float, dom_lo: float, dom_hi: float,
               open_lo: bool, open_hi: bool, cfg, r0=None,
               chunk: int = 512, detect_points: int | None = None) -> FieldResult:
    """delta field of a scalar function along an interval domain.

    `f_arr` is a lenient vectorized evaluator; `ps` must lie inside
    [dom_lo, dom_hi].  Initial window radii come from a local derivative
    probe so that very large and very small deltas are both reached in a
    few doubling rounds.
    """
    ps = np.asarray(ps, dtype=float)
    n = ps.size
    out_values = np.empty(n)
    out_witness = np.empty(n)
    out_lower = np.empty(n)
    out_rooth = np.empty(n)
    out_onesided = np.empty(n, dtype=bool)
    out_searched = np.empty(n)

    fp_all = np.asarray(f_arr(ps), dtype=float)

    for start in range(0, n, chunk):
        sl = slice(start, min(start + chunk, n))
        p_c = ps[sl]
        fp = fp_all[sl]
        pos_scale = np.abs(p_c)

        check_lo = math.isfinite(dom_lo)
        check_hi = math.isfinite(dom_hi)

        def eval_side(sign):
            def eval_at(cols, ts):
                x = p_c[cols][None, :] + sign * ts
                f = np.asarray(f_arr(x.ravel()), dtype=float).reshape(x.shape)
                if not (check_lo or check_hi):
                    return f, np.ones(x.shape, dtype=bool)
                if check_lo:
                    valid = (x > dom_lo) if open_lo else (x >= dom_lo)
                    if check_hi:
                        valid &= (x < dom_hi) if open_hi else (x <= dom_hi)
                else:
                    valid = (x < dom_hi) if open_hi else (x <= dom_hi)
                return f, valid
            return eval_at

        ext_pos = np.maximum(dom_hi - p_c, 0.0)
        ext_neg = np.maximum(p_c - dom_lo, 0.0)
        if r0 is None:
            r0_c = _estimate_r0(f_arr, p_c, fp, eps, ext_pos, ext_neg, cfg)
        else:
            r0_c = np.broadcast_to(np.asarray(r0, dtype=float), p_c.shape).copy()

        bad_fp = ~np.isfinite(fp)
        res = two_sided_scan(
            eval_side(+1.0), eval_side(-1.0), np.where(bad_fp, 0.0, fp), eps,
            np.where(bad_fp, 0.0, ext_pos), np.where(bad_fp, 0.0, ext_neg),
            r0_c, pos_scale, cfg, detect_points=detect_points)
        res.values[bad_fp] = np.nan

        out_values[sl] = res.values
        out_witness[sl] = res.witness_offset
        out_lower[sl] = res.lower
        out_rooth[sl] = res.root_h
        out_onesided[sl] = res.one_sided
        out_searched[sl] = res.searched

    return FieldResult(values=out_values, witness_offset=out_witness,
                       lower=out_lower, root_h=out_rooth,
                       one_sided=out_onesided, searched=out_searched)


def _estimate_r0(f_arr, ps, fp, eps, ext_pos, ext_neg, cfg) -> np.ndarray:
    """Initial window radius ~ eps / |f'|, clamped to sane bounds."""
    s = 1e-6 * np.maximum(1.0, np.abs(ps))
    s = np.where(ext_pos >= s, s, -s)  # probe into the domain
    with np.errstate(all="ignore"):
        fs = np.asarray(f_arr(ps + s), dtype=float)
        slope = np.abs((fs - fp) / s)
        est = np.where((slope > 0) & np.isfinite(slope), 0.5 * eps / slope, cfg.r0)
    est = np.where(np.isfinite(est), est, cfg.r0)
    return np.clip(est, 1e3 * cfg.tol_x * np.maximum(1.0, np.abs(ps)), cfg.r_max)
