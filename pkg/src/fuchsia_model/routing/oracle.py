"""Exhaustive reference resolver used to cross-check :func:`resolve_route`.

Every declaration in the tree becomes a vertex. A pairwise relation says
whether one declaration may directly follow another in a route; all maximal
chains from the requester's ``use`` are enumerated. Among them the chain
with the smallest sequence of manifest indices is the canonical one, which
is the "first in manifest order wins" rule expressed without walking.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterator, NamedTuple, Optional

from ..manifest import RIGHTED_TYPES
from ..topology import ComponentInstance, ComponentInstanceTree
from .resolve import (
    Hop,
    NoCapabilityDecl,
    NoUseDecl,
    RightsEscalation,
    RouteBroken,
    RouteBrokenAtRoot,
    RouteError,
    RouteRequest,
    RouteResult,
    TypeMismatch,
)

MAX_INSTANCES = 12

_SECTIONS = (("use", "uses"), ("offer", "offers"), ("expose", "exposes"), ("capability", "capabilities"))


class Vertex(NamedTuple):
    inst: ComponentInstance
    kind: str
    index: int
    decl: object


class Chain(NamedTuple):
    vertices: tuple[Vertex, ...]
    error: Optional[RouteError]  # None when the chain ends at a capability decl

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(v.index for v in self.vertices)


def _vertices(tree: ComponentInstanceTree) -> list[Vertex]:
    out = []
    for inst in tree:
        for kind, attr in _SECTIONS:
            for i, decl in enumerate(getattr(inst.manifest, attr)):
                out.append(Vertex(inst, kind, i, decl))
    return out


def _ref(inst: ComponentInstance) -> str:
    return "#" + (inst.collection if inst.collection is not None else inst.moniker.leaf)


def _follows(a: Vertex, b: Vertex) -> bool:
    """Could ``b`` be the next declaration after ``a``, ignoring names and types?"""
    if a.kind == "capability":
        return False
    src = a.decl.source
    if src == "self":
        return b.kind == "capability" and b.inst is a.inst
    if src == "parent":
        return b.kind == "offer" and b.inst is a.inst.parent and _ref(a.inst) in b.decl.targets
    return (
        b.kind == "expose"
        and b.inst.parent is a.inst
        and b.inst.collection is None
        and b.inst.moniker.leaf == src[1:]
    )


def _dead_end(a: Vertex, near_miss: list[Vertex], tree_index: dict) -> RouteError:
    src = a.decl.source
    here = a.inst.moniker
    if src == "self":
        lookup_at = a.inst
    elif src == "parent":
        lookup_at = a.inst.parent
    else:
        lookup_at = tree_index.get((a.inst.moniker, src[1:]))
    if near_miss:
        return TypeMismatch(lookup_at.moniker, "type mismatch")
    if src == "self":
        return NoCapabilityDecl(here, "no capability decl")
    if src == "parent":
        if lookup_at is None:
            return RouteBrokenAtRoot(here, "at root")
        return RouteBroken(lookup_at.moniker, "offer")
    if lookup_at is None:
        return RouteBroken(here, "child")
    return RouteBroken(lookup_at.moniker, "expose")


def oracle_chains(tree: ComponentInstanceTree, req: RouteRequest) -> list[Chain]:
    """All maximal declaration chains for ``req``, sorted canonical-first."""
    instances = list(tree)
    if len(instances) > MAX_INSTANCES:
        raise ValueError(f"oracle limited to {MAX_INSTANCES} instances, tree has {len(instances)}")
    vertices = _vertices(tree)
    # static children only; dynamic ones are never sources of a route
    tree_index = {
        (i.parent.moniker, i.moniker.leaf): i for i in instances if i.parent is not None and i.collection is None
    }
    requester = next((i for i in instances if i.moniker == req.requester), None)
    if requester is None:
        raise NoUseDecl(req.requester, "no such instance")
    starts = [
        v for v in vertices
        if v.inst is requester and v.kind == "use" and v.decl.name == req.name and v.decl.cap_type == req.cap_type
    ]
    if not starts:
        raise NoUseDecl(req.requester, "no use decl")

    def extend(path: tuple[Vertex, ...]) -> Iterator[Chain]:
        last = path[-1]
        if last.kind == "capability":
            yield Chain(path, None)
            return
        named = [v for v in vertices if v.decl.name == req.name and _follows(last, v)]
        exact = [v for v in named if v.decl.cap_type == req.cap_type]
        if not exact:
            yield Chain(path, _dead_end(last, named, tree_index))
            return
        for nxt in exact:
            yield from extend(path + (nxt,))

    chains = list(extend((starts[0],)))
    chains.sort(key=lambda c: c.indices)
    return chains


def _rights_of(req: RouteRequest, chain: Chain):
    if req.cap_type not in RIGHTED_TYPES:
        return None
    sets = [v.decl.rights for v in chain.vertices if v.decl.rights is not None]
    return reduce(lambda x, y: x & y, sets) if sets else None


def oracle_resolve(tree: ComponentInstanceTree, req: RouteRequest) -> RouteResult:
    chain = oracle_chains(tree, req)[0]
    hops = tuple(Hop(v.inst.moniker, v.kind, v.decl) for v in chain.vertices if v.kind != "capability")
    if chain.error is not None:
        chain.error.hops = hops
        raise chain.error
    terminal = chain.vertices[-1]
    eff = _rights_of(req, chain)
    use = chain.vertices[0].decl
    wanted = req.requested_rights if req.requested_rights is not None else use.rights
    if wanted is not None and eff is not None and not wanted <= eff:
        raise RightsEscalation(req.requester, frozenset(wanted), eff, hops)
    return RouteResult(terminal.inst.moniker, hops, terminal.decl, eff)


def any_valid_chain(tree: ComponentInstanceTree, req: RouteRequest) -> bool:
    return any(c.error is None for c in oracle_chains(tree, req))
