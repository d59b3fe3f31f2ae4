"""Workspace configuration: maps component URLs to local manifest files.

A workspace file uses the same relaxed JSON syntax as manifests::

    {
        root: "fuchsia-pkg://example.com/a#meta/a.cml",
        root_name: "A",                      // optional
        components: {                        // explicit URL -> file
            "fuchsia-pkg://example.com/a#meta/a.cml": "a.cml",
        },
        manifest_roots: [ "pkgs" ],          // <root>/<package>/<fragment>
        include_roots: [ "shards" ],         // where `include` paths are looked up
        packages: [ "out/pkg" ],
    }

Relative paths are taken from the workspace file's directory and must exist
when the file is loaded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .manifest import ComponentManifest, ManifestError, parse_manifest
from .manifest import syntax
from .topology import ComponentInstanceTree, MalformedUrl, ResolveFailure, build_tree, parse_component_url

_KEYS = {"root", "root_name", "components", "manifest_roots", "include_roots", "packages"}


class ConfigError(Exception):
    pass


@dataclass
class WorkspaceConfig:
    path: Path
    root: str
    root_name: Optional[str] = None
    components: dict[str, Path] = field(default_factory=dict)
    manifest_roots: list[Path] = field(default_factory=list)
    include_roots: list[Path] = field(default_factory=list)
    packages: list[Path] = field(default_factory=list)

    def manifest_file(self, url: str) -> Path:
        if url in self.components:
            return self.components[url]
        parsed = parse_component_url(url)
        if parsed.package and parsed.fragment:
            for base in self.manifest_roots:
                candidate = base / parsed.package / parsed.fragment
                if candidate.is_file():
                    return candidate
        raise ResolveFailure(url)

    def load_include(self, rel: str) -> str:
        for base in self.include_roots:
            candidate = base / rel
            if candidate.is_file():
                return candidate.read_text(encoding="utf-8")
        raise FileNotFoundError(rel)

    def resolve(self, url: str) -> ComponentManifest:
        """Resolver for :func:`build_tree`; include shards are merged in."""
        file = self.manifest_file(url)
        try:
            text = file.read_bytes()
        except OSError:
            raise ResolveFailure(url) from None
        return parse_manifest(text, loader=self.load_include)

    def build_tree(self) -> ComponentInstanceTree:
        return build_tree(self.root, self.resolve, root_name=self.root_name)


def _str(doc: dict, key: str, required: bool = False) -> Optional[str]:
    v = doc.get(key)
    if v is None and not required:
        return None
    if not isinstance(v, str) or not v:
        raise ConfigError(f"`{key}` must be a non-empty string")
    return v


def _existing(base: Path, rel: object, what: str) -> Path:
    if not isinstance(rel, str) or not rel:
        raise ConfigError(f"{what} entries must be non-empty strings")
    p = (base / rel).resolve()
    if not p.exists():
        raise ConfigError(f"{what} path does not exist: {rel}")
    return p


def _dir_list(doc: dict, key: str, base: Path) -> list[Path]:
    raw = doc.get(key, [])
    if not isinstance(raw, list):
        raise ConfigError(f"`{key}` must be a list")
    return [_existing(base, r, key) for r in raw]


def load_workspace(path: Union[str, Path]) -> WorkspaceConfig:
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read workspace {path}: {exc.strerror or exc}") from None
    try:
        doc = syntax.loads(text)
    except ManifestError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    unknown = set(doc) - _KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {', '.join(sorted(unknown))}")
    base = path.resolve().parent
    root = _str(doc, "root", required=True)
    try:
        parse_component_url(root)
    except MalformedUrl as exc:
        raise ConfigError(f"bad root url: {exc}") from None
    components_doc = doc.get("components", {})
    if not isinstance(components_doc, dict):
        raise ConfigError("`components` must be an object")
    components = {url: _existing(base, rel, "components") for url, rel in components_doc.items()}
    include_roots = _dir_list(doc, "include_roots", base) or [base]
    return WorkspaceConfig(
        path=path,
        root=root,
        root_name=_str(doc, "root_name"),
        components=components,
        manifest_roots=_dir_list(doc, "manifest_roots", base),
        include_roots=include_roots,
        packages=_dir_list(doc, "packages", base),
    )
