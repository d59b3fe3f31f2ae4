from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Any

from .model import RIGHTED_TYPES, ComponentManifest


@dataclass(frozen=True)
class Diagnostic:
    code: str
    subject: str
    message: str
    decl: Any = None
    line: int = 0
    col: int = 0

    def render(self, path: str = "-") -> str:
        return f"{self.code} {path} {self.line}:{self.col} {self.message}"


def _diag(code: str, subject: str, message: str, decl: Any = None) -> Diagnostic:
    return Diagnostic(code, subject, message, decl, getattr(decl, "line", 0), getattr(decl, "col", 0))


def validate_manifest(m: ComponentManifest) -> list[Diagnostic]:
    """Check the cross-declaration invariants parsing alone cannot enforce.

    Returns an empty list for a well-formed manifest. Diagnostics come out in
    declaration order within each check.
    """
    out: list[Diagnostic] = []
    child_names = Counter(c.name for c in m.children)
    coll_names = Counter(c.name for c in m.collections)

    reported: set[str] = set()
    for c in m.children:
        if child_names[c.name] > 1 and c.name not in reported:
            reported.add(c.name)
            out.append(_diag("DuplicateChildName", c.name, f"child {c.name!r} declared more than once", c))
    for c in m.collections:
        if (coll_names[c.name] > 1 or c.name in child_names) and c.name not in reported:
            reported.add(c.name)
            out.append(
                _diag("DuplicateCollectionName", c.name, f"collection {c.name!r} clashes with another name", c)
            )

    seen_caps: set[tuple[str, str]] = set()
    for cap in m.capabilities:
        key = (cap.cap_type, cap.name)
        if key in seen_caps:
            out.append(_diag("DuplicateCapability", f"{cap.cap_type}/{cap.name}", "capability declared twice", cap))
        seen_caps.add(key)
        if cap.cap_type == "directory":
            if cap.rights is None:
                out.append(_diag("MissingRights", cap.name, "directory capability needs 'rights'", cap))
            if cap.path is None:
                out.append(_diag("MissingPath", cap.name, "directory capability needs 'path'", cap))

    for decl in (*m.capabilities, *m.uses, *m.offers, *m.exposes):
        if decl.rights is not None and decl.cap_type not in RIGHTED_TYPES:
            out.append(
                _diag("RightsNotAllowed", decl.name, f"'rights' is meaningless on a {decl.cap_type}", decl)
            )

    for decl in (*m.offers, *m.exposes):
        if decl.source.startswith("#") and decl.source[1:] not in child_names:
            out.append(
                _diag("UnresolvedSourceRef", decl.source, f"source {decl.source} is not a declared child", decl)
            )
    for offer in m.offers:
        for target in offer.targets:
            name = target[1:]
            if name not in child_names and name not in coll_names:
                out.append(
                    _diag("UnresolvedTargetRef", target, f"target {target} is not a child or collection", offer)
                )
            elif target == offer.source:
                out.append(_diag("OfferToSource", target, f"{target} offered its own capability back", offer))
    return out
