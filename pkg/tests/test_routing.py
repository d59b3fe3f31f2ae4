import random
from pathlib import Path

import pytest

from fuchsia_model.manifest import (
    RIGHTS_TOKENS,
    CapabilityDecl,
    ChildDecl,
    CollectionDecl,
    ComponentManifest,
    ExposeDecl,
    OfferDecl,
    UseDecl,
    parse_manifest,
)
from fuchsia_model.routing import (
    NoCapabilityDecl,
    NotACollectionMember,
    NoUseDecl,
    RightsEscalation,
    RouteBroken,
    RouteBrokenAtRoot,
    RouteError,
    RouteRequest,
    TypeMismatch,
    any_valid_chain,
    collection_offers,
    export_dot,
    oracle_chains,
    oracle_resolve,
    outcome_key,
    resolve_route,
    route_all,
)
from fuchsia_model.topology import Moniker, build_tree, create_dynamic_child, transition
from fuchsia_model.workspace import load_workspace
from treegen import random_tree

DATA = Path(__file__).parent / "data"
M = Moniker.parse


def figure_tree():
    return load_workspace(DATA / "figure" / "workspace.json5").build_tree()


def tree_of(manifests: dict, root="x://h/p", root_name="P"):
    return build_tree(root, manifests.__getitem__, root_name=root_name)


def outcome(tree, req):
    try:
        return resolve_route(tree, req)
    except RouteError as exc:
        return exc


# --- the figure ---------------------------------------------------------------


def test_figure_route():
    tree = figure_tree()
    r = resolve_route(tree, RouteRequest("/A/C/E", "service", "S"))
    assert r.provider == M("/A/B/F")
    assert [(str(h.moniker), h.kind) for h in r.hops] == [
        ("/A/C/E", "use"),
        ("/A/C", "offer"),
        ("/A", "offer"),
        ("/A/B", "expose"),
        ("/A/B/F", "expose"),
    ]
    assert r.capability == CapabilityDecl("service", "S")
    assert r.effective_rights is None


def test_figure_agrees_with_oracle():
    tree = figure_tree()
    req = RouteRequest("/A/C/E", "service", "S")
    assert outcome_key(oracle_resolve(tree, req)) == ("ok", M("/A/B/F"))
    assert any_valid_chain(tree, req)


def test_figure_dot_has_four_numbered_route_edges():
    tree = figure_tree()
    dot = export_dot(tree, route_all(tree))
    dashed = [line for line in dot.splitlines() if "style=dashed" in line]
    assert dashed == [
        '  "/A/B/F" -> "/A/B" [style=dashed, color=blue, label="1", tooltip="service/S"];',
        '  "/A/B" -> "/A" [style=dashed, color=blue, label="2", tooltip="service/S"];',
        '  "/A" -> "/A/C" [style=dashed, color=blue, label="3", tooltip="service/S"];',
        '  "/A/C" -> "/A/C/E" [style=dashed, color=blue, label="4", tooltip="service/S"];',
    ]
    assert dot == export_dot(figure_tree(), route_all(figure_tree()))


def test_broken_route_dot_marks_the_break():
    manifests = {
        "x://h/p": ComponentManifest(children=(ChildDecl("c", "x://h/c"),)),
        "x://h/c": ComponentManifest(uses=(UseDecl("protocol", "p"),)),
    }
    tree = tree_of(manifests)
    dot = export_dot(tree, route_all(tree))
    assert '"/P" [color=red];' in dot


# --- listings -----------------------------------------------------------------


def listing_tree(provider_rights: str):
    cap = (DATA / "listings" / "listing1.cml").read_text().replace('"r*"', f'"{provider_rights}"')
    offer = (DATA / "listings" / "listing3.cml").read_text()
    parent = parse_manifest(cap)
    parent = ComponentManifest(
        capabilities=parent.capabilities,
        offers=parse_manifest(offer).offers,
        children=(ChildDecl("B", "x://h/b"),),
    )
    child = parse_manifest((DATA / "listings" / "listing2.cml").read_text())
    return tree_of({"x://h/p": parent, "x://h/b": child})


def test_listing_route_resolves_with_rw_provider():
    tree = listing_tree("rw*")
    r = resolve_route(tree, RouteRequest("/P/B", "directory", "data"))
    assert r.provider == M("/P")
    assert [h.kind for h in r.hops] == ["use", "offer"]
    assert r.capability.path == "/published-data"
    assert r.effective_rights == RIGHTS_TOKENS["rw*"]


def test_listings_verbatim_escalate():
    # read-only provider, read-write use
    tree = listing_tree("r*")
    with pytest.raises(RightsEscalation) as info:
        resolve_route(tree, RouteRequest("/P/B", "directory", "data"))
    assert info.value.effective == RIGHTS_TOKENS["r*"]
    assert info.value.at == M("/P/B")


def test_explicit_requested_rights_may_narrow():
    tree = listing_tree("r*")
    r = resolve_route(tree, RouteRequest("/P/B", "directory", "data", requested_rights=RIGHTS_TOKENS["r*"]))
    assert r.effective_rights == RIGHTS_TOKENS["r*"]


# --- error kinds ----------------------------------------------------------------


def chain(parent_offers=(), child_uses=(), parent_caps=(), child_exposes=(), child_caps=()):
    return tree_of(
        {
            "x://h/p": ComponentManifest(
                capabilities=tuple(parent_caps),
                offers=tuple(parent_offers),
                children=(ChildDecl("a", "x://h/a"), ChildDecl("b", "x://h/b")),
            ),
            "x://h/a": ComponentManifest(uses=tuple(child_uses)),
            "x://h/b": ComponentManifest(exposes=tuple(child_exposes), capabilities=tuple(child_caps)),
        }
    )


USE = UseDecl("protocol", "p")
REQ = RouteRequest("/P/a", "protocol", "p")


@pytest.mark.parametrize(
    "kwargs, kind, at",
    [
        (dict(), NoUseDecl, "/P/a"),
        (dict(child_uses=[USE]), RouteBroken, "/P"),
        (dict(child_uses=[USE], parent_offers=[OfferDecl("protocol", "p", "self", ("#a",))]), NoCapabilityDecl, "/P"),
        (
            dict(
                child_uses=[USE],
                parent_offers=[OfferDecl("protocol", "p", "self", ("#a",))],
                parent_caps=[CapabilityDecl("service", "p")],
            ),
            TypeMismatch,
            "/P",
        ),
        (dict(child_uses=[USE], parent_offers=[OfferDecl("protocol", "p", "#b", ("#a",))]), RouteBroken, "/P/b"),
        (dict(child_uses=[USE], parent_offers=[OfferDecl("protocol", "p", "#zz", ("#a",))]), RouteBroken, "/P"),
        (dict(child_uses=[USE], parent_offers=[OfferDecl("protocol", "p", "parent", ("#a",))]), RouteBrokenAtRoot, "/P"),
        (
            dict(
                child_uses=[USE],
                parent_offers=[OfferDecl("protocol", "p", "#b", ("#a",))],
                child_exposes=[ExposeDecl("protocol", "p", "self")],
            ),
            NoCapabilityDecl,
            "/P/b",
        ),
    ],
)
def test_error_kinds_and_locations(kwargs, kind, at):
    tree = chain(**kwargs)
    with pytest.raises(kind) as info:
        resolve_route(tree, REQ)
    assert info.value.at == M(at)
    with pytest.raises(kind) as oracle_info:
        oracle_resolve(tree, REQ)
    assert oracle_info.value.key() == info.value.key()


def test_missing_kind_on_route_broken():
    with pytest.raises(RouteBroken) as info:
        resolve_route(chain(child_uses=[USE]), REQ)
    assert info.value.missing == "offer"
    tree = chain(child_uses=[USE], parent_offers=[OfferDecl("protocol", "p", "#b", ("#a",))])
    with pytest.raises(RouteBroken) as info:
        resolve_route(tree, REQ)
    assert info.value.missing == "expose"


def test_use_at_root_is_broken_at_root():
    tree = tree_of({"x://h/p": ComponentManifest(uses=(USE,))})
    with pytest.raises(RouteBrokenAtRoot):
        resolve_route(tree, RouteRequest("/P", "protocol", "p"))


def test_first_match_wins_with_diagnostic():
    tree = chain(
        child_uses=[USE],
        parent_offers=[OfferDecl("protocol", "p", "self", ("#a",)), OfferDecl("protocol", "p", "#b", ("#a",))],
        parent_caps=[CapabilityDecl("protocol", "p")],
        child_exposes=[ExposeDecl("protocol", "p", "self")],
        child_caps=[CapabilityDecl("protocol", "p")],
    )
    r = resolve_route(tree, REQ)
    assert r.provider == M("/P")
    assert [d.code for d in r.diagnostics] == ["MultipleMatches"]
    assert outcome_key(oracle_resolve(tree, REQ)) == ("ok", M("/P"))
    assert len(oracle_chains(tree, REQ)) == 2


# --- collections --------------------------------------------------------------


def collection_tree():
    manifests = {
        "x://h/p": ComponentManifest(
            capabilities=(CapabilityDecl("protocol", "p"),),
            offers=(OfferDecl("protocol", "p", "self", ("#coll",)),),
            collections=(CollectionDecl("coll"),),
            children=(ChildDecl("s", "x://h/s"),),
        ),
        "x://h/m": ComponentManifest(uses=(USE,), exposes=(ExposeDecl("protocol", "p", "self"),)),
        "x://h/s": ComponentManifest(),
    }
    tree = tree_of(manifests)
    transition(tree, "/P", "start")
    create_dynamic_child(tree, "/P", "coll", ChildDecl("x", "x://h/m"))
    create_dynamic_child(tree, "/P", "coll", ChildDecl("y", "x://h/m"))
    return tree


def test_offers_to_a_collection_reach_every_member():
    tree = collection_tree()
    for member in ["/P/coll:x", "/P/coll:y"]:
        r = resolve_route(tree, RouteRequest(member, "protocol", "p"))
        assert r.provider == M("/P")
        assert collection_offers(tree, member) == [OfferDecl("protocol", "p", "self", ("#coll",))]
    with pytest.raises(NotACollectionMember):
        collection_offers(tree, "/P/s")


def test_collection_is_not_a_route_source():
    tree = collection_tree()
    parent = tree.get("/P")
    parent.manifest = ComponentManifest(
        offers=(OfferDecl("protocol", "p", "#coll", ("#s",)),),
        collections=parent.manifest.collections,
        children=parent.manifest.children,
    )
    tree.get("/P/s").manifest = ComponentManifest(uses=(USE,))
    req = RouteRequest("/P/s", "protocol", "p")
    with pytest.raises(RouteBroken) as info:
        resolve_route(tree, req)
    assert (info.value.at, info.value.missing) == (M("/P"), "child")
    assert outcome_key(_oracle(tree, req)) == info.value.key()


# --- invariants -----------------------------------------------------------------


def test_random_trees_agree_with_oracle():
    rng = random.Random(2024)
    cases = 0
    while cases < 300:
        g = random_tree(rng)
        for req in g.requests():
            assert outcome_key(outcome(g.tree, req)) == outcome_key(
                _oracle(g.tree, req)
            ), f"disagreement on {req}"
            cases += 1


def _oracle(tree, req):
    try:
        return oracle_resolve(tree, req)
    except RouteError as exc:
        return exc


def test_successful_route_implies_a_valid_chain_and_rights_bound():
    rng = random.Random(99)
    seen_ok = 0
    for _ in range(400):
        g = random_tree(rng)
        for req in g.requests():
            o = outcome(g.tree, req)
            if not o.ok:
                continue
            seen_ok += 1
            assert any_valid_chain(g.tree, req)
            # effective rights never exceed any annotation along the chain
            if o.effective_rights is not None:
                for h in o.hops:
                    if h.decl.rights is not None:
                        assert o.effective_rights <= h.decl.rights
                if o.capability.rights is not None:
                    assert o.effective_rights <= o.capability.rights
            # the chain is well formed: consecutive hops are parent/child or equal
            for a, b in zip(o.hops, o.hops[1:]):
                assert a.moniker.parent == b.moniker or b.moniker.parent == a.moniker
    assert seen_ok > 50


def test_unambiguous_trees_valid_iff_resolved():
    rng = random.Random(5)
    checked = 0
    for _ in range(400):
        g = random_tree(rng)
        for req in g.requests():
            if len(oracle_chains(g.tree, req)) != 1:
                continue
            o = outcome(g.tree, req)
            resolved = o.ok or isinstance(o, RightsEscalation)
            assert resolved == any_valid_chain(g.tree, req)
            checked += 1
    assert checked > 100


def test_route_all_covers_every_use_in_order():
    tree = figure_tree()
    results = route_all(tree)
    assert [(str(r.requester), r.cap_type, r.name) for r, _ in results] == [("/A/C/E", "service", "S")]
