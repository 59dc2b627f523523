"""Greatest delta-epsilon numbers.

delta(p, eps) is the distance from p to the set of domain points whose
image is exactly eps away from f(p).  On the domains this package
accepts, that distance is the largest delta satisfying the epsilon-delta
continuity condition at p.  Four backends compute it:

* monotone   -- closed two-sided formula for strictly monotone 1-d
                functions, inverses by bracketed bisection;
* levelset1d -- outward scan + bisection on |f(x)-f(p)| - eps for any
                1-d function;
* radial     -- reduction of f(x) = g(||x||) to the 1-d problem at
                ||p||, exact on origin-centered balls/annuli;
* ray_nd     -- direction sweep estimator for generic functions in
                dimension >= 2; its value is only guaranteed to lie
                between the certified bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import (
    ConstantFunction,
    DimensionMismatch,
    DomainViolation,
    EmptySpherePreimage,
    InvalidDomain,
    NonFinite,
    OutOfRange,
)
from .model import (
    CatalogFn,
    DomainSpec,
    ExpressionFn,
    FunctionSpec,
    Monotone1DFn,
    NormTag,
    Point,
    RadialFn,
    Shape,
    array_evaluator,
    norm_of,
    unwrap,
)
from .search import line_field, scan_side


@dataclass(frozen=True)
class SearchConfig:
    """Tolerances and truncation limits for the search backends.

    tol_x is an absolute point tolerance scaled internally by
    max(1, |p|); tol_f bounds ||f(witness)-f(p)| - eps|; scan_points is
    the bracketing resolution per doubling window; unbounded searches
    expand from r0 and give up at r_max.
    """

    tol_x: float = 1e-12
    tol_f: float = 1e-10
    scan_points: int = 4096
    r0: float = 1.0
    r_max: float = float(2 ** 20)

    def __post_init__(self):
        for name in ("tol_x", "tol_f", "r0", "r_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.scan_points < 16:
            raise ValueError("scan_points must be >= 16")

    def tol_x_at(self, p: float) -> float:
        return self.tol_x * max(1.0, abs(p))


DEFAULT_CONFIG = SearchConfig()


@dataclass(frozen=True)
class DeltaResult:
    """A computed delta with its achiever and sampled-certified bounds."""

    value: float
    witness: Point | None
    certified_lower: float
    certified_upper: float
    backend: str
    one_sided: bool = False
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (0.0 < self.certified_lower <= self.value <= self.certified_upper):
            raise ValueError(
                f"inconsistent bounds: 0 < {self.certified_lower} <= "
                f"{self.value} <= {self.certified_upper} violated")


@dataclass(frozen=True)
class EpsilonRange:
    """Sampled epsilon upper bound: delta(p, eps) is expected to be well
    defined for every domain point whenever 0 < eps < beta.

    beta is a heuristic (a quarter of 0.99x the sampled image spread),
    not a proven bound.
    """

    beta: float


# ---------------------------------------------------------------------------
# Monotone backend
# ---------------------------------------------------------------------------

def _mono_eval(g: Monotone1DFn):
    fn = g.fn

    def at(x: float) -> float:
        with np.errstate(all="ignore"):
            return float(np.asarray(fn(np.asarray([x], dtype=float)), dtype=float)[0])

    return at


def inverse_monotone(g: Monotone1DFn, y: float, cfg: SearchConfig = DEFAULT_CONFIG,
                     start: float | None = None) -> float:
    """x in g's interval with |g(x) - y| <= tol_f, by bracketed bisection.

    Raises OutOfRange when y is provably outside the range (a finite
    endpoint maps past y, or doubling expansion hits r_max with no sign
    change).
    """
    a, b = g.interval
    gat = _mono_eval(g)
    sgn = 1.0 if g.increasing else -1.0

    def sigma(x: float) -> float:
        v = gat(x)
        if math.isnan(v):
            raise NonFinite(f"g({x!r}) is undefined")
        return sgn * (v - y)

    # Establish lo with sigma <= 0 and hi with sigma >= 0.
    if start is None:
        start = 0.0
    start = min(max(start, a), b)
    lo = hi = None
    if math.isfinite(a):
        if sigma(a) > 0:
            raise OutOfRange(f"target {y!r} outside the range on [{a}, {b}]")
        lo = a
    if math.isfinite(b):
        if sigma(b) < 0:
            raise OutOfRange(f"target {y!r} outside the range on [{a}, {b}]")
        hi = b
    if lo is None or hi is None:
        s0 = sigma(start)
        if s0 == 0:
            return start
        if s0 < 0:
            lo = start
        else:
            hi = start
        if lo is None or hi is None:
            want_hi = hi is None
            radius = cfg.r0
            while radius <= cfg.r_max:
                probe = min(max(start + radius if want_hi else start - radius, a), b)
                sp = sigma(probe)
                if want_hi and sp >= 0:
                    hi = probe
                    break
                if not want_hi and sp <= 0:
                    lo = probe
                    break
                radius *= 2.0
            else:
                raise OutOfRange(
                    f"no bracket for target {y!r}: expansion hit r_max "
                    f"({cfg.r_max}) with no sign change")

    # Bisect; keep the probe with the smallest |g - y|.
    best_x, best_s = lo, abs(sigma(lo))
    s_hi = abs(sigma(hi))
    if s_hi < best_s:
        best_x, best_s = hi, s_hi
    for _ in range(200):
        width = hi - lo
        scale = max(1.0, abs(lo), abs(hi))
        if width <= cfg.tol_x * scale and (
                best_s <= cfg.tol_f or width <= 4 * math.ulp(scale)):
            break
        mid = 0.5 * (lo + hi)
        sm = sigma(mid)
        if abs(sm) < best_s:
            best_x, best_s = mid, abs(sm)
        if sm >= 0:
            hi = mid
        else:
            lo = mid
    return best_x


def delta_monotone_1d(g: Monotone1DFn, p: float, eps: float,
                      cfg: SearchConfig = DEFAULT_CONFIG) -> DeltaResult:
    """Two-sided closed formula: min over the inverse images of
    g(p) +/- eps; one-sided when exactly one of them is attained."""
    a, b = g.interval
    p = float(p)
    if not (a <= p <= b):
        raise DomainViolation(f"{p} outside the interval [{a}, {b}]")
    if not eps > 0:
        raise ValueError("eps must be positive")
    gat = _mono_eval(g)
    gp = gat(p)
    if not math.isfinite(gp):
        raise NonFinite(f"g({p!r}) = {gp!r}")

    crossings: list[float] = []
    for target in (gp - eps, gp + eps):
        try:
            crossings.append(inverse_monotone(g, target, cfg, start=p))
        except OutOfRange:
            continue
    if not crossings:
        raise EmptySpherePreimage(
            f"neither g(p)+eps nor g(p)-eps is attained on [{a}, {b}]: the "
            f"sphere preimage is empty (eps={eps} exceeds the reachable "
            "variation), so no greatest delta exists at this point",
            searched_radius=min(cfg.r_max, max(b - p, p - a)))

    one_sided = len(crossings) == 1
    dists = [abs(x - p) for x in crossings]
    # Min distance wins; on a tie the left crossing is the witness.
    order = sorted(range(len(crossings)), key=lambda i: (dists[i], crossings[i]))
    best = order[0]
    value = dists[best]
    tol_eff = cfg.tol_x_at(p)
    lower = value - tol_eff
    if lower <= 0:
        lower = 0.5 * value
    return DeltaResult(
        value=value,
        witness=Point((crossings[best],)),
        certified_lower=lower,
        certified_upper=value + tol_eff,
        backend="monotone",
        one_sided=one_sided,
        diagnostics={"g_p": gp},
    )


# ---------------------------------------------------------------------------
# 1-d level-set backend
# ---------------------------------------------------------------------------

def _line_domain(dom: DomainSpec) -> tuple[float, float, bool, bool]:
    if dom.dimension != 1:
        raise DimensionMismatch("expected a 1-d domain")
    if dom.shape in (Shape.INTERVAL, Shape.HALF_LINE, Shape.BOX):
        return dom.lo[0], dom.hi[0], dom.open_lo[0], dom.open_hi[0]
    # dim-1 ball: the interval around its center
    c = dom.center[0]
    return (c - dom.r_out, c + dom.r_out, dom.open_outer, dom.open_outer)


def delta_level_set_1d(f: FunctionSpec, dom: DomainSpec, p: float, eps: float,
                       cfg: SearchConfig = DEFAULT_CONFIG) -> DeltaResult:
    """Outward scan for the nearest solution of |f(x) - f(p)| = eps."""
    p = float(p)
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not dom.contains(p):
        raise DomainViolation(f"{p} is outside the domain {dom.describe()}")
    g = unwrap(f)
    if isinstance(g, RadialFn):
        g = g.inner  # 1-d section of a radial profile
    lo, hi, open_lo, open_hi = _line_domain(dom)
    f_arr = array_evaluator(g)
    res = line_field(f_arr, np.asarray([p]), eps, lo, hi, open_lo, open_hi, cfg)
    if math.isnan(res.values[0]):
        raise EmptySpherePreimage(
            f"no point with |f(x)-f({p})| = {eps} found within radius "
            f"{res.searched[0]}: the sphere preimage looks empty there, so "
            "the nonemptiness hypothesis behind delta(p, eps) fails",
            searched_radius=float(res.searched[0]))
    value = float(res.values[0])
    return DeltaResult(
        value=value,
        witness=Point((p + float(res.witness_offset[0]),)),
        certified_lower=float(res.lower[0]),
        certified_upper=value,
        backend="levelset1d",
        one_sided=bool(res.one_sided[0]),
        diagnostics={"achiever_h": float(res.root_h[0]),
                     "searched_radius": float(res.searched[0])},
    )


# ---------------------------------------------------------------------------
# Radial backend
# ---------------------------------------------------------------------------

def _radial_interval(f: RadialFn, dom: DomainSpec) -> tuple[float, float, bool, bool]:
    if not dom.is_radial:
        raise InvalidDomain(
            "the radial backend needs a ball/annulus domain, got "
            f"{dom.shape.value}")
    if any(c != 0.0 for c in dom.center):
        raise InvalidDomain("the radial backend needs an origin-centered domain")
    lo, hi, open_lo, open_hi = dom.radius_interval()
    inner = unwrap(f.inner)
    if isinstance(inner, Monotone1DFn):
        a, b = inner.interval
        if a > lo:
            lo, open_lo = a, False
        if b < hi:
            hi, open_hi = b, False
    return lo, hi, open_lo, open_hi


def _lift_witness(p: Point, t_p: float, t_witness: float, dim: int,
                  norm: NormTag) -> Point:
    if t_p == 0.0:
        coords = [0.0] * dim
        coords[0] = t_witness
        return Point(tuple(coords))
    scale = t_witness / t_p
    return Point(tuple(c * scale for c in p.coords))


def delta_radial(f: FunctionSpec, dom: DomainSpec, p, eps: float,
                 cfg: SearchConfig = DEFAULT_CONFIG) -> DeltaResult:
    """delta of the 1-d profile at ||p||, lifted along the ray through p.

    For origin-centered balls/annuli in a p-norm this equals the true
    distance to the sphere preimage, because dist(p, {||x|| = t}) is
    exactly | ||p|| - t |.
    """
    g = unwrap(f)
    if not isinstance(g, RadialFn):
        raise TypeError("delta_radial needs a radial function")
    pt = p if isinstance(p, Point) else Point(tuple(p) if np.ndim(p) else (float(p),))
    if pt.dim != g.dim:
        raise DimensionMismatch(f"expected dimension {g.dim}, got {pt.dim}")
    if not dom.contains(pt):
        raise DomainViolation(f"{pt.coords} is outside the domain {dom.describe()}")
    lo, hi, open_lo, open_hi = _radial_interval(g, dom)
    t = norm_of(dom.norm, pt.as_array())

    inner = unwrap(g.inner)
    if isinstance(inner, Monotone1DFn):
        eff = Monotone1DFn(fn=inner.fn, interval=(max(lo, inner.interval[0]),
                                                  min(hi, inner.interval[1])),
                           increasing=inner.increasing, label=inner.label)
        base = delta_monotone_1d(eff, t, eps, cfg)
    else:
        line = DomainSpec.interval(lo, hi, open_lo=open_lo, open_hi=open_hi)
        base = delta_level_set_1d(inner, line, t, eps, cfg)

    witness = None
    if base.witness is not None:
        witness = _lift_witness(pt, t, base.witness.coords[0], g.dim, dom.norm)
    return DeltaResult(
        value=base.value,
        witness=witness,
        certified_lower=base.certified_lower,
        certified_upper=base.certified_upper,
        backend="radial",
        one_sided=base.one_sided,
        diagnostics=dict(base.diagnostics, radius=t, inner_backend=base.backend),
    )


# ---------------------------------------------------------------------------
# nD ray estimator
# ---------------------------------------------------------------------------

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def direction_set(dim: int, count: int, norm: NormTag = NormTag.L2,
                  seed: int = 0) -> np.ndarray:
    """Deterministic unit directions (in `norm`); the +/- axes come
    first, then a seeded low-discrepancy fill."""
    axes = []
    for i in range(dim):
        for sign in (1.0, -1.0):
            v = np.zeros(dim)
            v[i] = sign
            axes.append(v)
    dirs = axes[:count]
    extra = count - len(dirs)
    if extra > 0:
        if dim == 2:
            offset = (seed % 997) / 997.0
            ks = np.arange(extra)
            theta = 2.0 * math.pi * ((ks * _GOLDEN + offset) % 1.0)
            more = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        else:
            rng = np.random.default_rng(seed)
            more = rng.standard_normal((extra, dim))
        dirs = dirs + list(more)
    out = np.asarray(dirs, dtype=float)
    norms = np.asarray([norm_of(norm, v) for v in out])
    return out / norms[:, None]


def delta_ray_nd(f: FunctionSpec, dom: DomainSpec, p, eps: float,
                 directions: int = 64, cfg: SearchConfig = DEFAULT_CONFIG,
                 seed: int = 0) -> DeltaResult:
    """Heuristic delta estimator for generic functions in dim >= 2.

    Runs the 1-d level-set search along each ray; the minimum crossing
    distance is an upper bound on the true delta (every crossing lies in
    the sphere preimage).  The certified lower bound comes from the grid
    oracle on the ball of that radius; only lower <= delta <= value is
    guaranteed.
    """
    g = unwrap(f)
    pt = p if isinstance(p, Point) else Point(tuple(p))
    if pt.dim < 2:
        raise DimensionMismatch("delta_ray_nd needs dimension >= 2")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not dom.contains(pt):
        raise DomainViolation(f"{pt.coords} is outside the domain {dom.describe()}")
    if directions < 1:
        raise ValueError("need at least one direction")

    f_arr = array_evaluator(g, norm=dom.norm)
    p_arr = pt.as_array()
    fp = f_arr(p_arr.reshape(1, -1))[0]
    if not np.isfinite(fp):
        raise NonFinite(f"f{pt.coords} = {fp!r}")
    dirs = direction_set(pt.dim, directions, dom.norm, seed)
    n = dirs.shape[0]

    def eval_at(cols, ts):
        x = p_arr[None, None, :] + ts[:, :, None] * dirs[cols][None, :, :]
        flat = x.reshape(-1, pt.dim)
        fv = f_arr(flat).reshape(ts.shape)
        valid = dom.contains_rows(flat).reshape(ts.shape)
        return fv, valid

    fp_cols = np.full(n, float(fp))
    scale = np.full(n, norm_of(dom.norm, p_arr))
    # Rays are clipped by the membership mask, so the extent is just the
    # truncation radius; zero-extent skipping happens via the mask too.
    side = scan_side(eval_at, fp_cols, eps, np.full(n, math.inf),
                     np.full(n, cfg.r0), scale, cfg)
    roots = side.root
    if np.all(np.isnan(roots)):
        raise EmptySpherePreimage(
            f"no ray crossing of |f - f(p)| = {eps} within radius "
            f"{float(np.max(side.searched))}; the sphere preimage looks "
            "empty, violating the nonemptiness hypothesis",
            searched_radius=float(np.max(side.searched)))
    value = float(np.nanmin(roots))
    tied = [int(i) for i in np.flatnonzero(roots == value)]
    best = min(tied, key=lambda i: tuple(p_arr + roots[i] * dirs[i]))
    witness = Point(tuple(p_arr + roots[best] * dirs[best]))

    from .oracle import GridSpec, grid_delta_bounds

    per_axis = int(max(9, min(65, round(cfg.scan_points ** (1.0 / pt.dim)))))
    h = 2.0 * value / (per_axis - 1)
    window = DomainSpec.box(p_arr - value, p_arr + value, norm=dom.norm)
    o_lower, _o_upper = grid_delta_bounds(g, dom, pt, eps,
                                          GridSpec(h=h, window=window))
    lower = min(o_lower, value)
    if lower <= 0:
        lower = min(value, cfg.tol_x_at(float(scale[0])))
    return DeltaResult(
        value=value,
        witness=witness,
        certified_lower=lower,
        certified_upper=value,
        backend="ray_nd",
        one_sided=False,
        diagnostics={"directions": n, "oracle_step": h,
                     "achiever_h": float(side.root_h[best])},
    )


# ---------------------------------------------------------------------------
# Membership predicate and epsilon range
# ---------------------------------------------------------------------------

def _grid_on_box(lo: np.ndarray, hi: np.ndarray, per_axis: int) -> np.ndarray:
    axes = [np.linspace(lo[i], hi[i], per_axis) for i in range(len(lo))]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def is_delta_epsilon_number(f: FunctionSpec, dom: DomainSpec, p, eps: float,
                            beta: float, samples: int = 4096) -> bool:
    """Sampled check that beta is a valid delta at p: no grid point of the
    open beta-ball (intersected with dom) moves f by eps or more.

    True is sampled evidence of membership in (0, delta(p, eps)]; False
    is an exact refutation (a concrete violator was found).
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    pt = p if isinstance(p, Point) else Point(tuple(p) if np.ndim(p) else (float(p),))
    if not dom.contains(pt):
        raise DomainViolation(f"{pt.coords} is outside the domain {dom.describe()}")
    g = unwrap(f)
    f_arr = array_evaluator(g, norm=dom.norm)
    p_arr = pt.as_array()
    fp = f_arr(p_arr.reshape(1, -1) if pt.dim > 1 else p_arr[:1])[0]
    if not np.isfinite(fp):
        raise NonFinite(f"f{pt.coords} = {fp!r}")

    per_axis = max(3, int(math.ceil(samples ** (1.0 / pt.dim))))
    grid = _grid_on_box(p_arr - beta, p_arr + beta, per_axis)
    from .model import norm_of_rows

    inside = norm_of_rows(dom.norm, grid - p_arr) < beta
    inside &= dom.contains_rows(grid)
    pts = grid[inside]
    if pts.size == 0:
        return True
    fv = f_arr(pts if pt.dim > 1 else pts[:, 0])
    with np.errstate(invalid="ignore"):
        viol = np.abs(fv - fp) >= eps
    return not bool(np.any(viol & ~np.isnan(fv)))


def epsilon_bound(f: FunctionSpec, dom: DomainSpec, samples: int = 4096,
                  cfg: SearchConfig = DEFAULT_CONFIG) -> EpsilonRange:
    """beta = 0.99 * (sampled image spread) / 4.

    Unbounded domains are sampled on their truncation window (radius
    r_max), which makes beta itself a sampled heuristic.
    """
    g = unwrap(f)
    lo, hi = dom.bounding_box(truncate=cfg.r_max)
    dim = dom.dimension
    per_axis = max(3, int(math.ceil(samples ** (1.0 / dim))))
    grid = _grid_on_box(lo, hi, per_axis)
    mask = dom.contains_rows(grid)
    pts = grid[mask]
    if pts.shape[0] < 2:
        raise ConstantFunction("domain sampling produced fewer than two points")
    f_arr = array_evaluator(g, norm=dom.norm)
    fv = f_arr(pts if dim > 1 else pts[:, 0])
    fv = fv[np.isfinite(fv)]
    if fv.size < 2:
        raise ConstantFunction("no finite samples to measure the image spread")
    spread = float(np.max(fv) - np.min(fv))
    if spread < cfg.tol_f:
        raise ConstantFunction(
            f"sampled image spread {spread!r} is below tol_f; the function "
            "looks constant and has no valid epsilon range")
    return EpsilonRange(beta=0.99 * spread / 4.0)


# ---------------------------------------------------------------------------
# Auto-routing front door
# ---------------------------------------------------------------------------

def compute_delta(f: FunctionSpec, dom: DomainSpec | None, p, eps: float,
                  cfg: SearchConfig = DEFAULT_CONFIG, directions: int = 64,
                  seed: int = 0) -> DeltaResult:
    """Dispatch to the right backend for (f, dom)."""
    g = unwrap(f)
    if dom is None:
        if isinstance(f, CatalogFn):
            from .catalog import catalog_lookup

            dom = catalog_lookup(f.name).domain
        else:
            dom = g.domain_hint()
    if dom is None:
        raise InvalidDomain("no domain given and the function has no natural one")

    if isinstance(g, RadialFn):
        if dom.is_radial and all(c == 0.0 for c in dom.center):
            return delta_radial(g, dom, p, eps, cfg)
        return delta_ray_nd(g, dom, p, eps, directions, cfg, seed)
    if isinstance(g, Monotone1DFn):
        lo, hi, _, _ = _line_domain(dom)
        a, b = g.interval
        eff = Monotone1DFn(fn=g.fn, interval=(max(a, lo), min(b, hi)),
                           increasing=g.increasing, label=g.label)
        p_val = p.coords[0] if isinstance(p, Point) else float(p)
        return delta_monotone_1d(eff, p_val, eps, cfg)
    dim = g.dimension
    if dim == 1:
        p_val = p.coords[0] if isinstance(p, Point) else float(p)
        return delta_level_set_1d(g, dom, p_val, eps, cfg)
    return delta_ray_nd(g, dom, p, eps, directions, cfg, seed)
