"""Declaration types for component manifests and the directory-rights table."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple

from .errors import UnknownRightsToken

CAPABILITY_TYPES = (
    "directory",
    "event",
    "protocol",
    "resolver",
    "runner",
    "service",
    "storage",
)
# Only these carry rights and mount paths.
RIGHTED_TYPES = frozenset({"directory", "storage"})

BASE_RIGHTS = (
    "connect",
    "enumerate",
    "traverse",
    "read_bytes",
    "write_bytes",
    "execute_bytes",
    "get_attributes",
    "update_attributes",
    "modify_directory",
)

RightsSet = frozenset  # frozenset[str] drawn from BASE_RIGHTS

_R = frozenset({"connect", "enumerate", "traverse", "read_bytes", "get_attributes"})
_W = frozenset(
    {"connect", "enumerate", "traverse", "write_bytes", "update_attributes", "modify_directory"}
)
_X = frozenset({"connect", "enumerate", "traverse", "execute_bytes"})

RIGHTS_TOKENS = {
    "r*": _R,
    "w*": _W,
    "x*": _X,
    "rw*": _R | _W,
    "rx*": _R | _X,
}
ALL_RIGHTS = frozenset(BASE_RIGHTS)


def expand_rights(tokens: Iterable[str]) -> RightsSet:
    """Union of the expansions of ``tokens``; base right names expand to themselves.

    Passing an already-expanded set returns it unchanged.
    """
    if isinstance(tokens, str):
        raise TypeError("expand_rights takes a list of tokens, not a string")
    out: set[str] = set()
    for tok in tokens:
        if tok in RIGHTS_TOKENS:
            out |= RIGHTS_TOKENS[tok]
        elif tok in ALL_RIGHTS:
            out.add(tok)
        else:
            raise UnknownRightsToken(tok)
    return frozenset(out)


def rights_tokens(rights: Iterable[str]) -> list[str]:
    """Compact token list whose expansion is exactly ``rights``.

    Greedy over the token table (largest groups first), then leftover base
    rights in table order.
    """
    rights = frozenset(rights)
    chosen: list[str] = []
    covered: set[str] = set()
    for tok in ("rw*", "rx*", "r*", "w*", "x*"):
        exp = RIGHTS_TOKENS[tok]
        if exp <= rights and not exp <= covered:
            chosen.append(tok)
            covered |= exp
    chosen.extend(r for r in BASE_RIGHTS if r in rights and r not in covered)
    return chosen


@dataclass(frozen=True)
class ProgramBlock:
    runner: str
    binary: Optional[str] = None
    args: Tuple[str, ...] = ()


@dataclass(frozen=True)
class CapabilityDecl:
    cap_type: str
    name: str
    rights: Optional[RightsSet] = None
    path: Optional[str] = None
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class UseDecl:
    cap_type: str
    name: str
    rights: Optional[RightsSet] = None
    path: Optional[str] = None
    source: str = "parent"
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    kind = "use"


@dataclass(frozen=True)
class OfferDecl:
    cap_type: str
    name: str
    source: str
    targets: Tuple[str, ...]
    rights: Optional[RightsSet] = None
    path: Optional[str] = None
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    kind = "offer"


@dataclass(frozen=True)
class ExposeDecl:
    cap_type: str
    name: str
    source: str
    rights: Optional[RightsSet] = None
    path: Optional[str] = None
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    kind = "expose"


@dataclass(frozen=True)
class ChildDecl:
    name: str
    url: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class CollectionDecl:
    name: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ComponentManifest:
    program: Optional[ProgramBlock] = None
    includes: Tuple[str, ...] = ()
    capabilities: Tuple[CapabilityDecl, ...] = ()
    uses: Tuple[UseDecl, ...] = ()
    offers: Tuple[OfferDecl, ...] = ()
    exposes: Tuple[ExposeDecl, ...] = ()
    children: Tuple[ChildDecl, ...] = ()
    collections: Tuple[CollectionDecl, ...] = ()

    def child(self, name: str) -> Optional[ChildDecl]:
        return next((c for c in self.children if c.name == name), None)

    def collection(self, name: str) -> Optional[CollectionDecl]:
        return next((c for c in self.collections if c.name == name), None)
