"""Capability routing by walking the instance tree.

A request starts at a ``use`` and travels up through ``offer`` declarations
until one names ``self`` or a child; from a child it travels down through
``expose`` declarations until one names ``self``. The matching key is
``(cap_type, name)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Any, Callable, NamedTuple, Optional, Sequence, Union

from ..manifest import RIGHTED_TYPES, CapabilityDecl, OfferDecl, RightsSet, UseDecl
from ..topology import ComponentInstance, ComponentInstanceTree, Moniker, MonikerLike, as_moniker


class Hop(NamedTuple):
    moniker: Moniker
    kind: str  # "use" | "offer" | "expose"
    decl: Any


@dataclass(frozen=True)
class RouteRequest:
    requester: Moniker
    cap_type: str
    name: str
    requested_rights: Optional[RightsSet] = None

    def __post_init__(self):
        object.__setattr__(self, "requester", as_moniker(self.requester))

    def __str__(self) -> str:
        return f"{self.requester} {self.cap_type}/{self.name}"


@dataclass(frozen=True)
class RouteDiagnostic:
    code: str
    at: Moniker
    kind: str
    message: str


@dataclass(frozen=True)
class RouteResult:
    provider: Moniker
    hops: tuple[Hop, ...]
    capability: CapabilityDecl
    effective_rights: Optional[RightsSet] = None
    diagnostics: tuple[RouteDiagnostic, ...] = field(default=(), compare=False)

    ok = True


class RouteError(Exception):
    """A request the component manager rejects. ``hops`` is the partial chain."""

    ok = False

    def __init__(self, at: Moniker, message: str, hops: Sequence[Hop] = ()):
        super().__init__(message)
        self.at = at
        self.hops = tuple(hops)

    @property
    def kind(self) -> str:
        return type(self).__name__

    def key(self) -> tuple:
        return (self.kind, self.at)


class NoUseDecl(RouteError):
    pass


class RouteBroken(RouteError):
    def __init__(self, at: Moniker, missing: str, hops: Sequence[Hop] = ()):
        super().__init__(at, f"route broken at {at}: no matching {missing}", hops)
        self.missing = missing

    def key(self) -> tuple:
        return (self.kind, self.at, self.missing)


class RouteBrokenAtRoot(RouteError):
    pass


class TypeMismatch(RouteError):
    pass


class NoCapabilityDecl(RouteError):
    pass


class RightsEscalation(RouteError):
    def __init__(self, at: Moniker, requested: RightsSet, effective: RightsSet, hops: Sequence[Hop] = ()):
        extra = ", ".join(sorted(requested - effective))
        super().__init__(at, f"requested rights exceed the route: {extra}", hops)
        self.requested = requested
        self.effective = effective


class NotACollectionMember(Exception):
    pass


Outcome = Union[RouteResult, RouteError]


def outcome_key(outcome: Outcome) -> tuple:
    """What two resolvers must agree on: success + provider, or error kind + location."""
    if isinstance(outcome, RouteResult):
        return ("ok", outcome.provider)
    return outcome.key()


def _match(decl, req: RouteRequest) -> bool:
    return decl.name == req.name and decl.cap_type == req.cap_type


def _pick(
    owner: ComponentInstance,
    decls: Sequence,
    kind: str,
    req: RouteRequest,
    applies: Callable[[Any], bool],
    hops: list[Hop],
    diags: list[RouteDiagnostic],
):
    found = [d for d in decls if _match(d, req) and applies(d)]
    if not found:
        if any(d.name == req.name and applies(d) for d in decls):
            raise TypeMismatch(
                owner.moniker, f"{owner.moniker}: {kind} {req.name!r} has a different type than {req.cap_type}", hops
            )
        if kind == "capability":
            raise NoCapabilityDecl(owner.moniker, f"{owner.moniker} declares no {req.cap_type} {req.name!r}", hops)
        raise RouteBroken(owner.moniker, kind, hops)
    if len(found) > 1:
        diags.append(
            RouteDiagnostic("MultipleMatches", owner.moniker, kind, f"{len(found)} {kind} decls match; first wins")
        )
    return found[0]


def _offered_to(child: ComponentInstance) -> Callable[[OfferDecl], bool]:
    refs = {"#" + child.name}
    if child.collection is not None:
        refs = {"#" + child.collection}
    return lambda offer: any(t in refs for t in offer.targets)


def _static_child(node: ComponentInstance, source: str) -> Optional[ComponentInstance]:
    child = node.children.get(source[1:])
    return child if child is not None and child.collection is None else None


def _use_decl(node: ComponentInstance, req: RouteRequest) -> UseDecl:
    use = next((u for u in node.manifest.uses if _match(u, req)), None)
    if use is None:
        raise NoUseDecl(node.moniker, f"{node.moniker} has no use of {req.cap_type}/{req.name}")
    return use


def effective_rights(req: RouteRequest, hops: Sequence[Hop], cap: CapabilityDecl) -> Optional[RightsSet]:
    if req.cap_type not in RIGHTED_TYPES:
        return None
    annotated = [h.decl.rights for h in hops if h.decl.rights is not None]
    if cap.rights is not None:
        annotated.append(cap.rights)
    if not annotated:
        return None
    return reduce(frozenset.intersection, annotated)


def resolve_route(tree: ComponentInstanceTree, req: RouteRequest) -> RouteResult:
    node = tree.get(req.requester)
    use = _use_decl(node, req)
    hops = [Hop(node.moniker, "use", use)]
    diags: list[RouteDiagnostic] = []

    # upward through offers
    current = node
    while True:
        parent = current.parent
        if parent is None:
            raise RouteBrokenAtRoot(current.moniker, f"{current.moniker} is the root; nothing to route from", hops)
        offer = _pick(parent, parent.manifest.offers, "offer", req, _offered_to(current), hops, diags)
        hops.append(Hop(parent.moniker, "offer", offer))
        if offer.source == "parent":
            current = parent
            continue
        if offer.source == "self":
            provider = parent
        else:
            provider = _static_child(parent, offer.source)
            if provider is None:
                raise RouteBroken(parent.moniker, "child", hops)
        break

    # downward through exposes
    if offer.source != "self":
        while True:
            expose = _pick(provider, provider.manifest.exposes, "expose", req, lambda e: True, hops, diags)
            hops.append(Hop(provider.moniker, "expose", expose))
            if expose.source == "self":
                break
            child = _static_child(provider, expose.source)
            if child is None:
                raise RouteBroken(provider.moniker, "child", hops)
            provider = child

    cap = _pick(provider, provider.manifest.capabilities, "capability", req, lambda c: True, hops, diags)
    eff = effective_rights(req, hops, cap)
    requested = req.requested_rights if req.requested_rights is not None else use.rights
    if requested is not None and eff is not None and not requested <= eff:
        raise RightsEscalation(node.moniker, frozenset(requested), eff, hops)
    return RouteResult(provider.moniker, tuple(hops), cap, eff, tuple(diags))


def route_all(tree: ComponentInstanceTree) -> list[tuple[RouteRequest, Outcome]]:
    """Resolve every use declaration in the tree, depth-first, manifest order."""
    out: list[tuple[RouteRequest, Outcome]] = []
    for inst in tree:
        for use in inst.manifest.uses:
            req = RouteRequest(inst.moniker, use.cap_type, use.name)
            try:
                out.append((req, resolve_route(tree, req)))
            except RouteError as exc:
                out.append((req, exc))
    return out


def collection_offers(tree: ComponentInstanceTree, m: MonikerLike) -> list[OfferDecl]:
    """Offers in the parent that reach ``m`` because they target its collection."""
    node = tree.get(m)
    if node.collection is None or node.parent is None:
        raise NotACollectionMember(f"{node.moniker} is not in a collection")
    ref = "#" + node.collection
    return [o for o in node.parent.manifest.offers if ref in o.targets]
