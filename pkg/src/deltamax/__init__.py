"""deltamax: greatest delta-epsilon numbers and uniform-continuity evidence.

For a continuous f and a point p, delta(p, eps) is the distance from p
to the set of points whose image sits exactly eps away from f(p) -- the
largest delta that works in the epsilon-delta continuity condition.
This package computes it, certifies it against a brute-force oracle, and
uses the resulting delta field to gather numerical evidence for or
against uniform continuity.
"""

from .catalog import (
    CatalogEntry,
    catalog_lookup,
    catalog_names,
    load_manifest,
    register,
    serialize_manifest,
)
from .delta import (
    DeltaResult,
    EpsilonRange,
    SearchConfig,
    compute_delta,
    delta_level_set_1d,
    delta_monotone_1d,
    delta_radial,
    delta_ray_nd,
    direction_set,
    epsilon_bound,
    inverse_monotone,
    is_delta_epsilon_number,
)
from .domaintext import format_domain, parse_domain
from .errors import (
    ConstantFunction,
    DeltamaxError,
    DimensionMismatch,
    DomainParseError,
    DomainViolation,
    EmptySpherePreimage,
    InvalidDomain,
    LexError,
    NonFinite,
    OutOfRange,
    ParseError,
    UnboundVariable,
    UnknownCatalogEntry,
    WindowTooSmall,
    WitnessesStagnated,
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
    distance,
    eval_fn,
)
from .oracle import GridSpec, brute_force_inf, grid_delta_bounds
from .uc import (
    InfTrace,
    StageRecord,
    UcVerdict,
    Verdict,
    WitnessPairs,
    default_schedule,
    infimum_delta,
    uc_verdict,
    witness_search,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
