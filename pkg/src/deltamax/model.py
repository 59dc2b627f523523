"""Functions, domains and metrics.

Scalar-valued continuous functions on subsets of R^n.  Domains are
restricted to shapes whose metric balls (intersected with the domain)
stay path-connected: intervals, boxes, balls, annuli (dim >= 2) and
half-lines.  The codomain is R with |.| in this version; the norm tag is
kept on FunctionSpec so vector codomains can be added without an API
change.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import expr as expr_mod
from .errors import (
    DimensionMismatch,
    DomainViolation,
    InvalidDomain,
    NonFinite,
)

INF = math.inf


# ---------------------------------------------------------------------------
# Points and norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Point:
    """An immutable point of R^n (n >= 1, all coordinates finite)."""

    coords: tuple[float, ...]

    def __post_init__(self):
        if len(self.coords) < 1:
            raise InvalidDomain("a point needs at least one coordinate")
        coords = tuple(float(c) for c in self.coords)
        if not all(math.isfinite(c) for c in coords):
            raise NonFinite(f"point coordinates must be finite, got {coords}")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def of(cls, *coords: float) -> "Point":
        return cls(tuple(coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


class NormTag(enum.Enum):
    """p-norm selector; on R all three coincide with |.|."""

    L1 = "l1"
    L2 = "l2"
    LINF = "linf"


def _as_point(p) -> Point:
    if isinstance(p, Point):
        return p
    if isinstance(p, (int, float)):
        return Point((float(p),))
    return Point(tuple(p))


def norm_of(tag: NormTag, v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    if tag is NormTag.L1:
        return float(np.sum(np.abs(v)))
    if tag is NormTag.L2:
        return float(np.sqrt(np.sum(v * v)))
    return float(np.max(np.abs(v)))


def distance(n: NormTag, x, y) -> float:
    """p-norm of x - y; raises DimensionMismatch on unequal dimensions."""
    xp, yp = _as_point(x), _as_point(y)
    if xp.dim != yp.dim:
        raise DimensionMismatch(f"dimensions differ: {xp.dim} vs {yp.dim}")
    return norm_of(n, xp.as_array() - yp.as_array())


def norm_of_rows(tag: NormTag, arr: np.ndarray) -> np.ndarray:
    """Norms of the rows of an (n, d) array (or |.| of a 1-d array)."""
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        return np.abs(arr)
    if tag is NormTag.L1:
        return np.sum(np.abs(arr), axis=-1)
    if tag is NormTag.L2:
        return np.sqrt(np.sum(arr * arr, axis=-1))
    return np.max(np.abs(arr), axis=-1)


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------

class Shape(enum.Enum):
    INTERVAL = "interval"
    HALF_LINE = "half_line"
    BOX = "box"
    BALL = "ball"
    ANNULUS = "annulus"


_TINY = 1e-300


@dataclass(frozen=True)
class DomainSpec:
    """A connected subset of R^n with per-boundary openness flags.

    For BALL/ANNULUS the radius is measured in `norm`.  Unbounded extents
    use explicit inf sentinels.  A dim-1 annulus is rejected: its metric
    balls split into two components, which breaks the standing
    path-connectedness hypothesis.
    """

    shape: Shape
    dimension: int
    norm: NormTag = NormTag.L2
    # INTERVAL/HALF_LINE/BOX bounds (per axis); None for radial shapes
    lo: tuple[float, ...] | None = None
    hi: tuple[float, ...] | None = None
    open_lo: tuple[bool, ...] | None = None
    open_hi: tuple[bool, ...] | None = None
    # BALL/ANNULUS parameters; None for box-like shapes
    center: tuple[float, ...] | None = None
    r_in: float = 0.0
    r_out: float = INF
    open_inner: bool = False
    open_outer: bool = True  # balls/annuli default to open outer boundary

    # -- constructors --------------------------------------------------

    @classmethod
    def interval(cls, a: float, b: float, *, open_lo: bool = False,
                 open_hi: bool = False, norm: NormTag = NormTag.L2) -> "DomainSpec":
        shape = Shape.HALF_LINE if math.isinf(b) and not math.isinf(a) else Shape.INTERVAL
        return cls(shape, 1, norm, lo=(float(a),), hi=(float(b),),
                   open_lo=(open_lo,), open_hi=(open_hi or math.isinf(b),))

    @classmethod
    def half_line(cls, a: float, *, open_lo: bool = False,
                  norm: NormTag = NormTag.L2) -> "DomainSpec":
        return cls.interval(a, INF, open_lo=open_lo, norm=norm)

    @classmethod
    def box(cls, lo: Iterable[float], hi: Iterable[float], *,
            open_lo: Iterable[bool] | None = None,
            open_hi: Iterable[bool] | None = None,
            norm: NormTag = NormTag.L2) -> "DomainSpec":
        lo_t = tuple(float(v) for v in lo)
        hi_t = tuple(float(v) for v in hi)
        d = len(lo_t)
        ol = tuple(open_lo) if open_lo is not None else (False,) * d
        oh = tuple(open_hi) if open_hi is not None else (False,) * d
        return cls(Shape.BOX, d, norm, lo=lo_t, hi=hi_t, open_lo=ol, open_hi=oh)

    @classmethod
    def ball(cls, center: Iterable[float], radius: float, *,
             open_boundary: bool = True, norm: NormTag = NormTag.L2) -> "DomainSpec":
        c = tuple(float(v) for v in center)
        return cls(Shape.BALL, len(c), norm, center=c, r_in=0.0,
                   r_out=float(radius), open_inner=False,
                   open_outer=open_boundary or math.isinf(radius))

    @classmethod
    def annulus(cls, center: Iterable[float], r_in: float, r_out: float, *,
                open_inner: bool = False, open_outer: bool = False,
                norm: NormTag = NormTag.L2) -> "DomainSpec":
        c = tuple(float(v) for v in center)
        return cls(Shape.ANNULUS, len(c), norm, center=c, r_in=float(r_in),
                   r_out=float(r_out), open_inner=open_inner,
                   open_outer=open_outer or math.isinf(r_out))

    # -- validation -----------------------------------------------------

    def __post_init__(self):
        if self.dimension < 1:
            raise InvalidDomain("dimension must be >= 1")
        if self.shape in (Shape.INTERVAL, Shape.HALF_LINE, Shape.BOX):
            if self.lo is None or self.hi is None:
                raise InvalidDomain("box-like domain needs lo/hi bounds")
            if len(self.lo) != self.dimension or len(self.hi) != self.dimension:
                raise InvalidDomain("bounds do not match dimension")
            for a, b in zip(self.lo, self.hi):
                if not a < b:
                    raise InvalidDomain(f"empty interior: bounds [{a}, {b}]")
                if math.isnan(a) or math.isnan(b):
                    raise InvalidDomain("NaN bound")
            if self.shape is not Shape.BOX and self.dimension != 1:
                raise InvalidDomain("interval/half-line domains are 1-dimensional")
        elif self.shape in (Shape.BALL, Shape.ANNULUS):
            if self.center is None or len(self.center) != self.dimension:
                raise InvalidDomain("radial domain needs a center of matching dimension")
            if not (0.0 <= self.r_in < self.r_out):
                raise InvalidDomain(f"need 0 <= r_in < r_out, got [{self.r_in}, {self.r_out}]")
            if self.shape is Shape.ANNULUS and self.dimension == 1:
                raise InvalidDomain(
                    "dim-1 annulus rejected: its metric balls are not path-connected")
        else:  # pragma: no cover - enum is exhaustive
            raise InvalidDomain(f"unknown shape {self.shape}")

    # -- queries ----------------------------------------------------------

    @property
    def is_bounded(self) -> bool:
        if self.shape in (Shape.BALL, Shape.ANNULUS):
            return math.isfinite(self.r_out)
        return all(math.isfinite(v) for v in self.lo + self.hi)

    @property
    def is_radial(self) -> bool:
        return self.shape in (Shape.BALL, Shape.ANNULUS)

    def radius_interval(self) -> tuple[float, float, bool, bool]:
        """(lo, hi, open_lo, open_hi) of the radii covered by a radial domain."""
        if not self.is_radial:
            raise InvalidDomain(f"{self.shape.value} has no radius interval")
        return self.r_in, self.r_out, self.open_inner, self.open_outer

    def contains(self, p) -> bool:
        pt = _as_point(p)
        if pt.dim != self.dimension:
            return False
        return bool(self.contains_rows(pt.as_array().reshape(1, -1))[0])

    def contains_rows(self, arr: np.ndarray) -> np.ndarray:
        """Vectorized membership for an (n, d) array (or (n,) when d == 1)."""
        arr = np.asarray(arr, dtype=float)
        if self.dimension == 1 and arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if self.shape in (Shape.INTERVAL, Shape.HALF_LINE, Shape.BOX):
            ok = np.ones(arr.shape[0], dtype=bool)
            for ax in range(self.dimension):
                col = arr[:, ax]
                lo, hi = self.lo[ax], self.hi[ax]
                ok &= (col > lo) if self.open_lo[ax] else (col >= lo)
                ok &= (col < hi) if self.open_hi[ax] else (col <= hi)
            return ok
        radii = norm_of_rows(self.norm, arr - np.asarray(self.center))
        ok = (radii > self.r_in) if self.open_inner else (radii >= self.r_in)
        ok &= (radii < self.r_out) if self.open_outer else (radii <= self.r_out)
        return ok

    def bounding_box(self, truncate: float = INF) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned lo/hi arrays covering the domain, truncated for
        unbounded extents."""
        if self.shape in (Shape.INTERVAL, Shape.HALF_LINE, Shape.BOX):
            lo = np.asarray(self.lo, dtype=float)
            hi = np.asarray(self.hi, dtype=float)
        else:
            c = np.asarray(self.center, dtype=float)
            r = self.r_out
            lo, hi = c - r, c + r
        lo = np.maximum(lo, -truncate)
        hi = np.minimum(hi, truncate)
        return lo, hi

    def describe(self) -> str:
        """Flat `shape:param[:flags]` text (the CLI domain grammar)."""
        from .domaintext import format_domain  # local import: avoid cycle
        return format_domain(self)


# ---------------------------------------------------------------------------
# Function specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionSpec:
    """Base class; concrete variants below.

    All variants are immutable and evaluation is pure, so specs can be
    shared freely across threads.
    """

    codomain_metric: NormTag = field(default=NormTag.L2, kw_only=True)

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    def domain_hint(self) -> DomainSpec | None:
        """Natural domain when the spec carries one (catalog, monotone)."""
        return None


@dataclass(frozen=True)
class ExpressionFn(FunctionSpec):
    """Function defined by a parsed expression over x (1-d) or x1..xk."""

    ast: expr_mod.Ast
    source: str

    def __post_init__(self):
        names = expr_mod.free_vars(self.ast)
        if "r" in names and len(names) > 1:
            raise InvalidDomain("the radial variable r cannot be mixed with x-variables")
        if "x" in names and any(n.startswith("x") and n != "x" for n in names):
            raise InvalidDomain("mixing x with x1..x8 is ambiguous; use one style")

    @classmethod
    def parse(cls, source: str, **kw) -> "FunctionSpec":
        ast = expr_mod.parse_source(source)
        if "r" in expr_mod.free_vars(ast):
            inner = cls(ast=ast, source=source)
            return RadialFn(inner=inner, dim=kw.pop("dim", 2), **kw)
        kw.pop("dim", None)
        return cls(ast=ast, source=source, **kw)

    @property
    def dimension(self) -> int:
        names = expr_mod.free_vars(self.ast)
        if not names or names == {"x"}:
            return 1
        if "r" in names:
            return 1  # used as a radial profile g(r)
        return max(int(n[1:]) for n in names)

    def _env_scalar(self, x: Point) -> dict[str, float]:
        env = {"x": x.coords[0], "r": x.coords[0]}
        for i, c in enumerate(x.coords, start=1):
            env[f"x{i}"] = c
        return env


@dataclass(frozen=True)
class Monotone1DFn(FunctionSpec):
    """Strictly monotone scalar function on an interval.

    Only the forward evaluator is stored; inverses are always computed
    numerically so there is a single trusted code path.  `fn` must accept
    numpy arrays (set vectorized=False to wrap a scalar-only callable).
    """

    fn: Callable[[np.ndarray], np.ndarray]
    interval: tuple[float, float]
    increasing: bool
    label: str = ""
    vectorized: bool = True

    def __post_init__(self):
        a, b = self.interval
        if not a < b:
            raise InvalidDomain(f"degenerate interval [{a}, {b}]")
        if not self.vectorized:
            object.__setattr__(self, "fn", np.vectorize(self.fn, otypes=[float]))
            object.__setattr__(self, "vectorized", True)
        self._spot_check()

    def _spot_check(self, points: int = 64):
        a, b = self.interval
        lo = a if math.isfinite(a) else min(b - 8.0, 0.0) if math.isfinite(b) else -4.0
        hi = b if math.isfinite(b) else max(a + 8.0, 0.0) if math.isfinite(a) else 4.0
        xs = np.linspace(lo, hi, points)
        with np.errstate(all="ignore"):
            ys = np.asarray(self.fn(xs), dtype=float)
        ok = np.isfinite(ys)
        diffs = np.diff(ys[ok])
        if self.increasing and np.any(diffs <= 0):
            raise InvalidDomain(f"{self.label or 'function'} is not strictly increasing")
        if not self.increasing and np.any(diffs >= 0):
            raise InvalidDomain(f"{self.label or 'function'} is not strictly decreasing")

    @property
    def dimension(self) -> int:
        return 1

    def domain_hint(self) -> DomainSpec:
        return DomainSpec.interval(*self.interval)


@dataclass(frozen=True)
class RadialFn(FunctionSpec):
    """f(x) = g(||x||) with g a 1-d profile (Monotone1DFn or ExpressionFn in r)."""

    inner: FunctionSpec
    dim: int = 2

    def __post_init__(self):
        if isinstance(self.inner, RadialFn):
            raise InvalidDomain("radial wrapper cannot nest")
        if self.dim < 1:
            raise InvalidDomain("radial dimension must be >= 1")

    @property
    def dimension(self) -> int:
        return self.dim


@dataclass(frozen=True)
class CatalogFn(FunctionSpec):
    """A named catalog entry's function, resolved at lookup time."""

    name: str
    inner: FunctionSpec

    @property
    def dimension(self) -> int:
        return self.inner.dimension


def unwrap(f: FunctionSpec) -> FunctionSpec:
    """Strip catalog naming wrappers."""
    while isinstance(f, CatalogFn):
        f = f.inner
    return f


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def eval_fn(f: FunctionSpec, x, dom: DomainSpec | None = None) -> float:
    """Evaluate f at a point; strict about domain membership and finiteness."""
    pt = _as_point(x)
    g = unwrap(f)
    if dom is None:
        dom = g.domain_hint()
    if dom is not None and not dom.contains(pt):
        raise DomainViolation(f"{pt.coords} is outside the domain {dom.describe()}")
    if isinstance(g, ExpressionFn):
        value = expr_mod.eval_ast(g.ast, g._env_scalar(pt))
    elif isinstance(g, Monotone1DFn):
        a, b = g.interval
        t = pt.coords[0]
        if pt.dim != 1:
            raise DimensionMismatch("monotone-1d function takes scalar input")
        if not (a <= t <= b):
            raise DomainViolation(f"{t} outside interval [{a}, {b}]")
        value = float(np.asarray(g.fn(np.asarray([t])), dtype=float)[0])
    elif isinstance(g, RadialFn):
        if pt.dim != g.dim:
            raise DimensionMismatch(f"expected dimension {g.dim}, got {pt.dim}")
        radius = norm_of(dom.norm if dom is not None else NormTag.L2, pt.as_array())
        return eval_fn(g.inner, Point((radius,)))
    else:  # pragma: no cover
        raise TypeError(f"cannot evaluate {type(g).__name__}")
    if not math.isfinite(value):
        raise NonFinite(f"f{pt.coords} = {value!r}")
    return value


def array_evaluator(f: FunctionSpec, norm: NormTag = NormTag.L2) -> Callable[[np.ndarray], np.ndarray]:
    """Return a lenient vectorized evaluator.

    Input: (n,) array for 1-d functions, (n, d) rows otherwise.  Invalid
    points produce NaN (and genuine overflow produces inf), which the
    search layer interprets; it never raises on non-finite values.
    """
    g = unwrap(f)
    if isinstance(g, ExpressionFn):
        ast = g.ast

        def run(arr: np.ndarray) -> np.ndarray:
            arr = np.asarray(arr, dtype=float)
            if arr.ndim == 1:
                env = {"x": arr, "r": arr, "x1": arr}
            else:
                env = {f"x{i + 1}": arr[:, i] for i in range(arr.shape[1])}
                env["x"] = arr[:, 0]
            out = expr_mod.eval_ast_array(ast, env)
            return np.broadcast_to(out, arr.shape[:1]).astype(float, copy=False)

        return run
    if isinstance(g, Monotone1DFn):
        fn = g.fn

        def run(arr: np.ndarray) -> np.ndarray:
            arr = np.asarray(arr, dtype=float)
            with np.errstate(all="ignore"):
                out = np.asarray(fn(arr), dtype=float)
            return np.broadcast_to(out, arr.shape).astype(float, copy=False)

        return run
    if isinstance(g, RadialFn):
        inner_eval = array_evaluator(g.inner)

        def run(arr: np.ndarray) -> np.ndarray:
            arr = np.asarray(arr, dtype=float)
            radii = norm_of_rows(norm, arr)
            return inner_eval(radii)

        return run
    raise TypeError(f"cannot build evaluator for {type(g).__name__}")
