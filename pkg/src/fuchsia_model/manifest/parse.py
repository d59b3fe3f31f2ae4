"""Turn manifest source text into :class:`ComponentManifest` values and back."""

from __future__ import annotations

import re
from dataclasses import replace
from typing import Any, Callable, Optional

from . import syntax
from .errors import (
    DuplicateChildName,
    IncludeCycle,
    IncludeNotFound,
    InvalidDecl,
    ManifestSyntaxError,
    UnknownCapabilityType,
    UnknownRightsToken,
)
from .model import (
    CAPABILITY_TYPES,
    CapabilityDecl,
    ChildDecl,
    CollectionDecl,
    ComponentManifest,
    ExposeDecl,
    OfferDecl,
    ProgramBlock,
    UseDecl,
    expand_rights,
    rights_tokens,
)

Loader = Callable[[str], str]

_TOP_KEYS = ("include", "program", "capabilities", "use", "offer", "expose", "children", "collections")
_NAME = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.\-]*\Z")
_REF = re.compile(r"#[A-Za-z0-9_][A-Za-z0-9_.\-]*\Z")


def _pos(node: Any) -> tuple[int, int]:
    return getattr(node, "line", 0), getattr(node, "col", 0)


def _invalid(node: Any, message: str) -> InvalidDecl:
    return InvalidDecl(message, *_pos(node))


def _expect(node: Any, kind: type, what: str, owner: Any) -> Any:
    if not isinstance(node, kind):
        raise InvalidDecl(f"{what} must be a {kind.__name__}", *_pos(node if hasattr(node, "line") else owner))
    return node


def _string(obj: syntax.Obj, key: str) -> str:
    value = obj[key]
    if not isinstance(value, str):
        line, col = obj.key_pos.get(key, _pos(obj))
        raise InvalidDecl(f"{key!r} must be a string", line, col)
    return value


def _string_list(obj: syntax.Obj, key: str) -> tuple[str, ...]:
    value = obj[key]
    if isinstance(value, str):
        return (value,)
    if isinstance(value, list) and all(isinstance(v, str) for v in value):
        return tuple(value)
    line, col = obj.key_pos.get(key, _pos(obj))
    raise InvalidDecl(f"{key!r} must be a string or list of strings", line, col)


def _rights(obj: syntax.Obj):
    if "rights" not in obj:
        return None
    tokens = _string_list(obj, "rights")
    try:
        return expand_rights(tokens)
    except UnknownRightsToken as exc:
        line, col = obj.key_pos["rights"]
        raise UnknownRightsToken(exc.token, line, col) from None


def _source(obj: syntax.Obj, allowed: tuple[str, ...], default: Optional[str]) -> str:
    if "from" not in obj:
        if default is None:
            raise _invalid(obj, "missing 'from'")
        return default
    src = _string(obj, "from")
    line, col = obj.key_pos["from"]
    if _REF.match(src):
        if "#child" not in allowed:
            raise InvalidDecl(f"'from: {src}' not supported here", line, col)
    elif src not in allowed:
        raise InvalidDecl(f"'from: {src}' not supported here", line, col)
    return src


def _path(obj: syntax.Obj) -> Optional[str]:
    if "path" not in obj:
        return None
    path = _string(obj, "path")
    if not path.startswith("/"):
        raise InvalidDecl("'path' must be absolute", *obj.key_pos["path"])
    return path


def _type_and_names(obj: syntax.Obj, extra_keys: frozenset) -> tuple[str, tuple[str, ...]]:
    found = [k for k in obj if k in CAPABILITY_TYPES]
    unknown = [k for k in obj if k not in CAPABILITY_TYPES and k not in extra_keys]
    if not found:
        what = unknown[0] if unknown else "nothing"
        raise UnknownCapabilityType(f"no capability type in declaration (found {what!r})", *_pos(obj))
    if len(found) > 1:
        raise _invalid(obj, f"declaration names several capability types: {', '.join(found)}")
    if unknown:
        raise InvalidDecl(f"unexpected key {unknown[0]!r}", *obj.key_pos[unknown[0]])
    cap_type = found[0]
    names = _string_list(obj, cap_type)
    for name in names:
        if not _NAME.match(name):
            raise InvalidDecl(f"bad capability name {name!r}", *obj.key_pos[cap_type])
    return cap_type, names


def _decls(node: Any, section: str, build) -> list:
    items = _expect(node, list, f"'{section}'", node)
    out = []
    for item in items:
        if not isinstance(item, dict):
            raise _invalid(item if hasattr(item, "line") else items, f"'{section}' entries must be objects")
        out.extend(build(item))
    return out


def _capability(obj):
    cap_type, names = _type_and_names(obj, frozenset({"rights", "path"}))
    rights, path = _rights(obj), _path(obj)
    return [CapabilityDecl(cap_type, n, rights, path, *_pos(obj)) for n in names]


def _use(obj):
    cap_type, names = _type_and_names(obj, frozenset({"rights", "path", "from"}))
    source = _source(obj, ("parent",), "parent")
    rights, path = _rights(obj), _path(obj)
    return [UseDecl(cap_type, n, rights, path, source, *_pos(obj)) for n in names]


def _offer(obj):
    cap_type, names = _type_and_names(obj, frozenset({"rights", "from", "to"}))
    source = _source(obj, ("parent", "self", "#child"), None)
    if "to" not in obj:
        raise _invalid(obj, "missing 'to'")
    targets = _string_list(obj, "to")
    for t in targets:
        if not _REF.match(t):
            raise InvalidDecl(f"offer target {t!r} must be '#name'", *obj.key_pos["to"])
    rights = _rights(obj)
    return [OfferDecl(cap_type, n, source, targets, rights, None, *_pos(obj)) for n in names]


def _expose(obj):
    cap_type, names = _type_and_names(obj, frozenset({"rights", "from"}))
    source = _source(obj, ("self", "#child"), None)
    rights = _rights(obj)
    return [ExposeDecl(cap_type, n, source, rights, None, *_pos(obj)) for n in names]


def _child(obj):
    unknown = [k for k in obj if k not in ("name", "url")]
    if unknown:
        raise InvalidDecl(f"unexpected key {unknown[0]!r}", *obj.key_pos[unknown[0]])
    for key in ("name", "url"):
        if key not in obj:
            raise _invalid(obj, f"child missing {key!r}")
    name = _string(obj, "name")
    if not _NAME.match(name):
        raise InvalidDecl(f"bad child name {name!r}", *obj.key_pos["name"])
    return [ChildDecl(name, _string(obj, "url"), *_pos(obj))]


def _collection(obj):
    unknown = [k for k in obj if k not in ("name", "durability")]
    if unknown:
        raise InvalidDecl(f"unexpected key {unknown[0]!r}", *obj.key_pos[unknown[0]])
    if "name" not in obj:
        raise _invalid(obj, "collection missing 'name'")
    name = _string(obj, "name")
    if not _NAME.match(name):
        raise InvalidDecl(f"bad collection name {name!r}", *obj.key_pos["name"])
    return [CollectionDecl(name, *_pos(obj))]


def _program(obj) -> ProgramBlock:
    if not isinstance(obj, dict):
        raise _invalid(obj, "'program' must be an object")
    unknown = [k for k in obj if k not in ("runner", "binary", "args")]
    if unknown:
        raise InvalidDecl(f"unexpected key {unknown[0]!r}", *obj.key_pos[unknown[0]])
    if "runner" not in obj or not _string(obj, "runner"):
        raise _invalid(obj, "program needs a nonempty 'runner'")
    binary = _string(obj, "binary") if "binary" in obj else None
    args = _string_list(obj, "args") if "args" in obj else ()
    return ProgramBlock(_string(obj, "runner"), binary, args)


def _from_tree(doc: Any) -> ComponentManifest:
    if not isinstance(doc, dict):
        line, col = _pos(doc) if hasattr(doc, "line") else (1, 1)
        raise ManifestSyntaxError("manifest must be an object", line or 1, col or 1)
    for key in doc:
        if key not in _TOP_KEYS:
            raise InvalidDecl(f"unknown top-level key {key!r}", *doc.key_pos[key])
    includes = _string_list(doc, "include") if "include" in doc else ()
    children = _decls(doc.get("children", []), "children", _child)
    seen: set[str] = set()
    for c in children:
        if c.name in seen:
            raise DuplicateChildName(f"duplicate child name {c.name!r}", c.line, c.col)
        seen.add(c.name)
    return ComponentManifest(
        program=_program(doc["program"]) if "program" in doc else None,
        includes=includes,
        capabilities=tuple(_decls(doc.get("capabilities", []), "capabilities", _capability)),
        uses=tuple(_decls(doc.get("use", []), "use", _use)),
        offers=tuple(_decls(doc.get("offer", []), "offer", _offer)),
        exposes=tuple(_decls(doc.get("expose", []), "expose", _expose)),
        children=tuple(children),
        collections=tuple(_decls(doc.get("collections", []), "collections", _collection)),
    )


def parse_manifest(text: str | bytes, loader: Optional[Loader] = None) -> ComponentManifest:
    """Parse manifest source. With ``loader``, ``include`` shards are merged in.

    Rights tokens come back expanded to base rights.
    """
    manifest = _from_tree(syntax.loads(text))
    if loader is not None:
        manifest = merge_includes(manifest, loader)
    return manifest


def merge_includes(m: ComponentManifest, loader: Loader) -> ComponentManifest:
    """Inline every include. Included sections come first; ``m``'s program wins."""
    return _merge(m, loader, ())


def _load(loader: Loader, path: str) -> str:
    try:
        text = loader(path)
    except (KeyError, LookupError, FileNotFoundError, OSError):
        raise IncludeNotFound(path) from None
    if text is None:
        raise IncludeNotFound(path)
    return text


def _merge(m: ComponentManifest, loader: Loader, stack: tuple[str, ...]) -> ComponentManifest:
    if not m.includes:
        return m
    parts = []
    for path in m.includes:
        if path in stack:
            raise IncludeCycle(stack[stack.index(path):] + (path,))
        shard = _from_tree(syntax.loads(_load(loader, path)))
        parts.append(_merge(shard, loader, stack + (path,)))
    program = m.program
    if program is None:
        program = next((p.program for p in parts if p.program is not None), None)
    merged = {"program": program, "includes": ()}
    for section in ("capabilities", "uses", "offers", "exposes", "children", "collections"):
        items = []
        for p in parts:
            items.extend(getattr(p, section))
        items.extend(getattr(m, section))
        merged[section] = tuple(items)
    return replace(m, **merged)


def _rights_doc(rights) -> dict:
    return {} if rights is None else {"rights": rights_tokens(rights)}


def manifest_to_doc(m: ComponentManifest) -> dict:
    doc: dict[str, Any] = {}
    if m.includes:
        doc["include"] = list(m.includes)
    if m.program is not None:
        prog: dict[str, Any] = {"runner": m.program.runner}
        if m.program.binary is not None:
            prog["binary"] = m.program.binary
        if m.program.args:
            prog["args"] = list(m.program.args)
        doc["program"] = prog
    if m.capabilities:
        doc["capabilities"] = [
            {c.cap_type: c.name, **_rights_doc(c.rights), **({"path": c.path} if c.path else {})}
            for c in m.capabilities
        ]
    if m.uses:
        doc["use"] = [
            {
                u.cap_type: u.name,
                **({} if u.source == "parent" else {"from": u.source}),
                **_rights_doc(u.rights),
                **({"path": u.path} if u.path else {}),
            }
            for u in m.uses
        ]
    if m.offers:
        doc["offer"] = [
            {o.cap_type: o.name, "from": o.source, "to": list(o.targets), **_rights_doc(o.rights)}
            for o in m.offers
        ]
    if m.exposes:
        doc["expose"] = [
            {e.cap_type: e.name, "from": e.source, **_rights_doc(e.rights)} for e in m.exposes
        ]
    if m.children:
        doc["children"] = [{"name": c.name, "url": c.url} for c in m.children]
    if m.collections:
        doc["collections"] = [{"name": c.name} for c in m.collections]
    return doc


def dump_manifest(m: ComponentManifest) -> str:
    """Canonical text form; ``parse_manifest(dump_manifest(m)) == m``."""
    return syntax.dumps(manifest_to_doc(m)) + "\n"
