"""Capability routing over a component instance tree."""

from .dot import export_dot
from .oracle import any_valid_chain, oracle_chains, oracle_resolve
from .resolve import (
    Hop,
    NoCapabilityDecl,
    NotACollectionMember,
    NoUseDecl,
    Outcome,
    RightsEscalation,
    RouteBroken,
    RouteBrokenAtRoot,
    RouteDiagnostic,
    RouteError,
    RouteRequest,
    RouteResult,
    TypeMismatch,
    collection_offers,
    effective_rights,
    outcome_key,
    resolve_route,
    route_all,
)

__all__ = [
    "Hop",
    "NoCapabilityDecl",
    "NotACollectionMember",
    "NoUseDecl",
    "Outcome",
    "RightsEscalation",
    "RouteBroken",
    "RouteBrokenAtRoot",
    "RouteDiagnostic",
    "RouteError",
    "RouteRequest",
    "RouteResult",
    "TypeMismatch",
    "any_valid_chain",
    "collection_offers",
    "effective_rights",
    "export_dot",
    "oracle_chains",
    "oracle_resolve",
    "outcome_key",
    "resolve_route",
    "route_all",
]
