"""Named function catalog.

Ships the worked examples (square, exp_norm, log_norm, identity) together
with their closed-form optimal deltas, which the generic backends must
reproduce; users can register further entries, and entries serialize to a
one-line-per-entry `name|expression|domain` manifest for the CLI.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Iterable

from .domaintext import format_domain, parse_domain
from .errors import DomainParseError, UnknownCatalogEntry
from .model import CatalogFn, DomainSpec, ExpressionFn, FunctionSpec, RadialFn


@dataclass(frozen=True)
class CatalogEntry:
    """A named function, its natural domain and (when known) its optimal
    delta in closed form.

    `closed_form_delta(p, eps)` takes the scalar position for 1-d entries
    and the radius ||p|| for radial entries.
    """

    name: str
    function: FunctionSpec
    source: str
    domain: DomainSpec
    closed_form_delta: Callable[[float, float], float] | None = None
    notes: str = ""

    def manifest_line(self) -> str:
        if "|" in self.name or "|" in self.source:
            raise ValueError("catalog names/expressions cannot contain '|'")
        return f"{self.name}|{self.source}|{format_domain(self.domain)}"


_LOCK = threading.Lock()
_REGISTRY: dict[str, CatalogEntry] = {}


def _make(name: str, source: str, domain: DomainSpec,
          closed_form: Callable[[float, float], float] | None,
          notes: str, dim: int = 1) -> CatalogEntry:
    fn = ExpressionFn.parse(source, dim=dim)
    return CatalogEntry(
        name=name,
        function=CatalogFn(name=name, inner=fn),
        source=source,
        domain=domain,
        closed_form_delta=closed_form,
        notes=notes,
    )


def _builtin_entries() -> list[CatalogEntry]:
    reals = DomainSpec.interval(-math.inf, math.inf)
    plane = DomainSpec.ball((0.0, 0.0), math.inf)
    punctured_plane = DomainSpec.annulus((0.0, 0.0), 0.0, math.inf, open_inner=True)
    return [
        _make("square", "x^2", reals,
              lambda p, eps: math.sqrt(p * p + eps) - abs(p),
              "x -> x^2 on R; optimal delta sqrt(p^2+eps)-|p|"),
        _make("identity", "x", reals,
              lambda p, eps: eps,
              "x -> x on R; optimal delta is eps itself"),
        _make("exp_norm", "exp(r)", plane,
              lambda t, eps: math.log(math.exp(t) + eps) - t,
              "x -> e^||x||; optimal delta ln(e^||p||+eps)-||p||", dim=2),
        _make("log_norm", "ln(r)", punctured_plane,
              lambda t, eps: t * (1.0 - math.exp(-eps)),
              "x -> ln||x|| off the origin; optimal delta ||p||(1-e^-eps)", dim=2),
    ]


def _ensure_builtins():
    if not _REGISTRY:
        for entry in _builtin_entries():
            _REGISTRY[entry.name] = entry


def catalog_lookup(name: str) -> CatalogEntry:
    with _LOCK:
        _ensure_builtins()
        try:
            return _REGISTRY[name]
        except KeyError:
            known = ", ".join(sorted(_REGISTRY))
            raise UnknownCatalogEntry(f"no catalog entry {name!r} (known: {known})") from None


def catalog_names() -> list[str]:
    with _LOCK:
        _ensure_builtins()
        return list(_REGISTRY)


def register(name: str, source: str, domain: DomainSpec,
             closed_form_delta: Callable[[float, float], float] | None = None,
             notes: str = "") -> CatalogEntry:
    """Register (or replace) a user entry and return it."""
    entry = _make(name, source, domain, closed_form_delta, notes,
                  dim=domain.dimension)
    with _LOCK:
        _ensure_builtins()
        _REGISTRY[name] = entry
    return entry


def serialize_manifest(entries: Iterable[CatalogEntry] | None = None) -> str:
    if entries is None:
        with _LOCK:
            _ensure_builtins()
            entries = list(_REGISTRY.values())
    return "\n".join(e.manifest_line() for e in entries) + "\n"


def load_manifest(text: str) -> list[CatalogEntry]:
    """Register every `name|expression|domain` line; returns the new entries."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        if len(fields) != 3:
            raise DomainParseError(f"manifest line {lineno}: expected name|expression|domain")
        name, source, domain_text = (f.strip() for f in fields)
        out.append(register(name, source, parse_domain(domain_text)))
    return out


def resolve_function(text: str, dim: int | None = None) -> tuple[FunctionSpec, DomainSpec | None]:
    """CLI helper: a catalog name resolves to its entry, anything else is
    parsed as an expression (returns no natural domain then)."""
    with _LOCK:
        _ensure_builtins()
        entry = _REGISTRY.get(text)
    if entry is not None:
        return entry.function, entry.domain
    fn = ExpressionFn.parse(text, dim=dim if dim else 2)
    if isinstance(fn, RadialFn) and dim:
        fn = RadialFn(inner=fn.inner, dim=dim)
    return fn, None
