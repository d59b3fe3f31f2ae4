from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuchsia_model.manifest import (
    ALL_RIGHTS,
    CAPABILITY_TYPES,
    RIGHTS_TOKENS,
    CapabilityDecl,
    ChildDecl,
    ComponentManifest,
    DuplicateChildName,
    ExposeDecl,
    IncludeCycle,
    IncludeNotFound,
    InvalidDecl,
    ManifestError,
    ManifestSyntaxError,
    OfferDecl,
    UnknownCapabilityType,
    UnknownRightsToken,
    UseDecl,
    dump_manifest,
    expand_rights,
    merge_includes,
    parse_manifest,
    rights_tokens,
    validate_manifest,
)
from fuchsia_model.manifest import syntax

LISTINGS = Path(__file__).parent / "data" / "listings"


def read(name: str) -> str:
    return (LISTINGS / name).read_text()


# --- syntax ---------------------------------------------------------------------


def test_relaxed_syntax_features():
    doc = syntax.loads(
        """
        // line comment
        { bare: 'single', "quoted": 0x1F, /* block */ list: [1, 2.5, -3,], n: null, t: true, }
        """
    )
    assert doc == {"bare": "single", "quoted": 31, "list": [1, 2.5, -3], "n": None, "t": True}


def test_positions_are_one_based():
    doc = syntax.loads('{\n  a: {\n    b: 1 } }')
    assert (doc.line, doc.col) == (1, 1)
    assert (doc["a"].line, doc["a"].col) == (2, 6)


@pytest.mark.parametrize(
    "text, line, col",
    [
        ("{ a: 1 ", 1, 8),
        ("{ a: 1, a: 2 }", 1, 9),
        ("{\n  a: @ }", 2, 6),
        ('{ a: "unterminated }', 1, 6),
    ],
)
def test_syntax_errors_carry_position(text, line, col):
    with pytest.raises(ManifestSyntaxError) as info:
        syntax.loads(text)
    assert (info.value.line, info.value.col) == (line, col)


def test_invalid_utf8_is_a_syntax_error():
    with pytest.raises(ManifestSyntaxError):
        syntax.loads(b'{ a: "\xff" }')


def test_nesting_limit():
    with pytest.raises(ManifestSyntaxError):
        syntax.loads("[" * 300 + "]" * 300)


json_values = st.recursive(
    st.none() | st.booleans() | st.integers(-(10**12), 10**12) | st.text(max_size=12),
    lambda children: st.lists(children, max_size=4)
    | st.dictionaries(st.text(min_size=1, max_size=8), children, max_size=4),
    max_leaves=20,
)


@given(json_values)
@settings(max_examples=200)
def test_dumps_then_loads_is_identity(value):
    assert syntax.loads(syntax.dumps(value)) == value


@given(st.binary(max_size=200))
@settings(max_examples=300)
def test_arbitrary_bytes_only_raise_manifest_errors(data):
    try:
        parse_manifest(data)
    except ManifestError:
        pass


@given(st.text(alphabet='{}[]:,"\'/*\n abc0x#-', max_size=80))
@settings(max_examples=300)
def test_structured_noise_only_raises_manifest_errors(text):
    try:
        parse_manifest(text)
    except ManifestError:
        pass


# --- rights ---------------------------------------------------------------------


def test_rights_expansion_table():
    assert expand_rights(["r*"]) == {"connect", "enumerate", "traverse", "read_bytes", "get_attributes"}
    assert expand_rights(["w*"]) == {
        "connect", "enumerate", "traverse", "write_bytes", "update_attributes", "modify_directory",
    }
    assert expand_rights(["x*"]) == {"connect", "enumerate", "traverse", "execute_bytes"}
    assert expand_rights(["rw*"]) == expand_rights(["r*", "w*"])
    assert expand_rights(["rx*"]) == expand_rights(["r*", "x*"])
    assert expand_rights(["read_bytes", "connect"]) == {"read_bytes", "connect"}


def test_unknown_rights_token():
    with pytest.raises(UnknownRightsToken):
        expand_rights(["q*"])
    with pytest.raises(UnknownRightsToken) as info:
        parse_manifest('{ use: [ { directory: "d", rights: ["r*", "rwx*"], path: "/d" } ] }')
    assert info.value.line == 1


@given(st.sets(st.sampled_from(sorted(ALL_RIGHTS))))
def test_rights_tokens_round_trip(rights):
    assert expand_rights(rights_tokens(frozenset(rights))) == rights


def test_rights_tokens_prefer_aliases():
    assert rights_tokens(RIGHTS_TOKENS["rw*"]) == ["rw*"]
    assert rights_tokens(RIGHTS_TOKENS["r*"] | {"execute_bytes"}) == ["rx*"]


# --- parse ----------------------------------------------------------------------


def test_listing1_directory_capability():
    m = parse_manifest(read("listing1.cml"))
    assert m.capabilities == (CapabilityDecl("directory", "data", RIGHTS_TOKENS["r*"], "/published-data"),)


def test_listing2_use():
    m = parse_manifest(read("listing2.cml"))
    assert m.uses == (UseDecl("directory", "data", RIGHTS_TOKENS["rw*"], "/data"),)


def test_listing3_offer_and_listing4_expose():
    offer = parse_manifest(read("listing3.cml")).offers
    assert offer == (OfferDecl("directory", "data", "self", ("#B",)),)
    expose = parse_manifest(read("listing4.cml")).exposes
    assert expose == (ExposeDecl("directory", "data", "#A"),)


def test_listing5_program_and_include():
    m = parse_manifest(read("listing5.cml"))
    assert m.program.runner == "elf"
    assert m.program.binary == "bin/hello_world"
    assert m.includes == ("syslog/client.shard.cml",)


def test_seven_capability_types():
    assert len(CAPABILITY_TYPES) == 7
    for t in CAPABILITY_TYPES:
        extra = ', path: "/x"' if t in ("directory", "storage") else ""
        rights = ', rights: ["rw*"]' if t in ("directory", "storage") else ""
        m = parse_manifest(f'{{ capabilities: [ {{ {t}: "x"{rights}{extra} }} ] }}')
        assert m.capabilities[0].cap_type == t


def test_unknown_capability_type():
    with pytest.raises(UnknownCapabilityType):
        parse_manifest('{ capabilities: [ { widget: "x" } ] }')


def test_duplicate_child_name_rejected():
    text = '{ children: [ { name: "a", url: "x://h/a" }, { name: "a", url: "x://h/b" } ] }'
    with pytest.raises(DuplicateChildName):
        parse_manifest(text)


@pytest.mark.parametrize(
    "text",
    [
        '{ use: [ { protocol: "p", from: "self" } ] }',
        '{ offer: [ { protocol: "p", from: "self", to: [ "B" ] } ] }',
        '{ offer: [ { protocol: "p", to: [ "#B" ] } ] }',
        '{ expose: [ { protocol: "p", from: "parent" } ] }',
        '{ use: [ { directory: "d", rights: ["r*"], path: "relative" } ] }',
        '{ bogus: [] }',
        '{ program: { runner: "" } }',
    ],
)
def test_invalid_decls(text):
    with pytest.raises(InvalidDecl):
        parse_manifest(text)


def test_list_valued_capability_names_expand():
    m = parse_manifest('{ use: [ { protocol: [ "a", "b" ] } ] }')
    assert [u.name for u in m.uses] == ["a", "b"]


# --- includes -------------------------------------------------------------------


def test_include_merge_puts_shards_first():
    shards = {"s.cml": '{ use: [ { protocol: "log" } ] }'}
    m = parse_manifest('{ include: [ "s.cml" ], use: [ { protocol: "own" } ] }', loader=shards.__getitem__)
    assert [u.name for u in m.uses] == ["log", "own"]


def test_include_not_found_and_cycle():
    with pytest.raises(IncludeNotFound):
        parse_manifest('{ include: [ "missing.cml" ] }', loader={}.__getitem__)
    shards = {"a.cml": '{ include: [ "b.cml" ] }', "b.cml": '{ include: [ "a.cml" ] }'}
    with pytest.raises(IncludeCycle):
        parse_manifest('{ include: [ "a.cml" ] }', loader=shards.__getitem__)


def test_merge_is_explicit():
    m = parse_manifest(read("listing5.cml"))
    merged = merge_includes(m, lambda p: (LISTINGS / p).read_text())
    assert [u.name for u in merged.uses] == ["fuchsia.logger.LogSink"]
    assert merged.program == m.program


# --- validate -------------------------------------------------------------------


def test_listing3_needs_child_b():
    m = parse_manifest(read("listing3.cml"))
    assert [d.code for d in validate_manifest(m)] == ["UnresolvedTargetRef"]
    stubbed = parse_manifest(read("stubbed/listing3.cml"))
    assert validate_manifest(stubbed) == []


def test_listing4_needs_child_a():
    m = parse_manifest(read("listing4.cml"))
    assert [d.code for d in validate_manifest(m)] == ["UnresolvedSourceRef"]
    assert validate_manifest(parse_manifest(read("stubbed/listing4.cml"))) == []


def test_validation_codes():
    m = ComponentManifest(
        capabilities=(
            CapabilityDecl("directory", "d"),
            CapabilityDecl("protocol", "p", rights=RIGHTS_TOKENS["r*"]),
            CapabilityDecl("protocol", "p"),
        ),
        offers=(OfferDecl("protocol", "p", "#k", ("#k",)),),
        children=(ChildDecl("k", "x://h/k"), ChildDecl("k", "x://h/k2")),
    )
    codes = sorted(d.code for d in validate_manifest(m))
    assert codes == sorted(
        ["MissingRights", "MissingPath", "RightsNotAllowed", "DuplicateCapability", "OfferToSource", "DuplicateChildName"]
    )


def test_diagnostic_rendering():
    m = parse_manifest((Path(__file__).parent / "data" / "bad" / "dangling.cml").read_text())
    (d,) = validate_manifest(m)
    assert d.render("f.cml") == "UnresolvedTargetRef f.cml 3:9 target #B is not a child or collection"


# --- round trip -----------------------------------------------------------------


@pytest.mark.parametrize("name", [f"listing{i}.cml" for i in range(1, 6)])
def test_round_trip_is_byte_stable(name):
    m = parse_manifest(read(name))
    text = dump_manifest(m)
    again = parse_manifest(text)
    assert again == m
    assert dump_manifest(again) == text
