"""Content-addressed packages: per-file Merkle roots recorded in ``meta/contents``.

Tree shape: 4096-byte blocks; leaf = SHA-256(0x00 || block); parent =
SHA-256(0x01 || left || right); an unpaired node at the end of a level moves
up unchanged. Empty content hashes as SHA-256(0x00). This is a fixed,
self-contained definition, not the on-device blob format.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Union

BLOCK_SIZE = 4096
META_DIR = "meta"
META_PACKAGE = "meta/package"
META_CONTENTS = "meta/contents"


class PackageError(Exception):
    pass


class InvalidPath(PackageError):
    pass


class DuplicatePath(PackageError):
    pass


class MetaCorrupt(PackageError):
    pass


def merkle_root(content: bytes) -> bytes:
    if not content:
        return hashlib.sha256(b"\x00").digest()
    level = [
        hashlib.sha256(b"\x00" + content[i : i + BLOCK_SIZE]).digest()
        for i in range(0, len(content), BLOCK_SIZE)
    ]
    while len(level) > 1:
        nxt = [hashlib.sha256(b"\x01" + level[i] + level[i + 1]).digest() for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def merkle_root_hex(content: bytes) -> str:
    return merkle_root(content).hex()


def check_path(path: str) -> str:
    if not path or path.startswith("/") or any(c in path for c in "\\\x00\n\r"):
        raise InvalidPath(f"bad package path {path!r}")
    segments = path.split("/")
    if any(s in ("", ".", "..") for s in segments):
        raise InvalidPath(f"bad package path {path!r}")
    if segments[0] == META_DIR:
        raise InvalidPath(f"{path!r} collides with the meta directory")
    return path


@dataclass(frozen=True)
class MetaArchive:
    package: bytes
    contents: bytes

    def files(self) -> dict[str, bytes]:
        return {META_PACKAGE: self.package, META_CONTENTS: self.contents}


@dataclass
class Package:
    name: str
    version: str
    contents: dict[str, str]  # path -> hex Merkle root, bytewise path order
    files: dict[str, bytes] = field(repr=False)


def _sorted_paths(paths: Iterable[str]) -> list[str]:
    return sorted(paths, key=lambda p: p.encode("utf-8"))


def build_package(
    name: str, version: str, files: Union[Mapping[str, bytes], Iterable[tuple[str, bytes]]]
) -> tuple[Package, MetaArchive]:
    pairs = files.items() if isinstance(files, Mapping) else files
    collected: dict[str, bytes] = {}
    for path, data in pairs:
        check_path(path)
        if path in collected:
            raise DuplicatePath(path)
        collected[path] = bytes(data)
    contents = {p: merkle_root_hex(collected[p]) for p in _sorted_paths(collected)}
    pkg = Package(name, version, contents, collected)
    return pkg, render_meta(pkg)


def render_meta(pkg: Package) -> MetaArchive:
    package_doc = json.dumps({"name": pkg.name, "version": pkg.version}, separators=(",", ":"), ensure_ascii=False)
    lines = "".join(f"{p}={pkg.contents[p]}\n" for p in _sorted_paths(pkg.contents))
    return MetaArchive(package_doc.encode("utf-8"), lines.encode("utf-8"))


def parse_meta(package: bytes, contents: bytes) -> tuple[str, str, dict[str, str]]:
    try:
        doc = json.loads(package.decode("utf-8"))
        name, version = doc["name"], doc["version"]
        if not isinstance(name, str) or not isinstance(version, str):
            raise TypeError
    except (UnicodeDecodeError, ValueError, KeyError, TypeError):
        raise MetaCorrupt("meta/package is not a name/version document") from None
    entries: dict[str, str] = {}
    try:
        text = contents.decode("utf-8")
    except UnicodeDecodeError:
        raise MetaCorrupt("meta/contents is not UTF-8") from None
    if text and not text.endswith("\n"):
        raise MetaCorrupt("meta/contents must end with a newline")
    for n, line in enumerate(text.splitlines(), start=1):
        path, sep, root = line.rpartition("=")
        if not sep or len(root) != 64 or any(c not in "0123456789abcdef" for c in root):
            raise MetaCorrupt(f"meta/contents line {n} is malformed")
        try:
            check_path(path)
        except InvalidPath:
            raise MetaCorrupt(f"meta/contents line {n} names a bad path") from None
        if path in entries:
            raise MetaCorrupt(f"meta/contents lists {path!r} twice")
        entries[path] = root
    return name, version, entries


@dataclass
class VerifyReport:
    name: str
    version: str
    mismatched: list[str] = field(default_factory=list)
    missing: list[str] = field(default_factory=list)
    extra: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.mismatched or self.missing or self.extra)

    def failures(self) -> list[tuple[str, str]]:
        """(kind, path) pairs in path order."""
        out = [("Mismatch", p) for p in self.mismatched]
        out += [("MissingFile", p) for p in self.missing]
        out += [("ExtraFile", p) for p in self.extra]
        return sorted(out, key=lambda kp: kp[1].encode("utf-8"))


def verify_files(meta: MetaArchive, files: Mapping[str, bytes]) -> VerifyReport:
    name, version, expected = parse_meta(meta.package, meta.contents)
    report = VerifyReport(name, version)
    for path in _sorted_paths(expected):
        if path not in files:
            report.missing.append(path)
        elif merkle_root_hex(files[path]) != expected[path]:
            report.mismatched.append(path)
    report.extra = [p for p in _sorted_paths(files) if p not in expected]
    return report


def scan_dir(root: Union[str, Path]) -> dict[str, bytes]:
    """Content files under ``root`` (everything outside ``meta/``), keyed by relative path."""
    root = Path(root)
    out: dict[str, bytes] = {}
    for dirpath, dirnames, filenames in os.walk(root):
        rel_dir = Path(dirpath).relative_to(root)
        if rel_dir == Path("."):
            dirnames[:] = [d for d in dirnames if d != META_DIR]
        dirnames.sort()
        for fn in sorted(filenames):
            rel = (rel_dir / fn).as_posix()
            out[rel] = (Path(dirpath) / fn).read_bytes()
    return out


def write_meta(root: Union[str, Path], meta: MetaArchive) -> None:
    root = Path(root)
    (root / META_DIR).mkdir(exist_ok=True)
    for rel, data in meta.files().items():
        (root / rel).write_bytes(data)


def build_package_dir(root: Union[str, Path], name: str, version: str) -> tuple[Package, MetaArchive]:
    pkg, meta = build_package(name, version, scan_dir(root))
    write_meta(root, meta)
    return pkg, meta


def verify_package(root: Union[str, Path]) -> VerifyReport:
    """Recompute every file's root under ``root`` and compare with ``meta/contents``."""
    root = Path(root)
    try:
        meta = MetaArchive((root / META_PACKAGE).read_bytes(), (root / META_CONTENTS).read_bytes())
    except FileNotFoundError as exc:
        raise MetaCorrupt(f"missing {exc.filename}") from None
    return verify_files(meta, scan_dir(root))
