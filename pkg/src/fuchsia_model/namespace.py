"""Per-component namespaces built from routed directory and storage capabilities.

There is no shared root: a component sees only what is mounted in its own
namespace, and any path with a ``..`` segment is refused before lookup.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union
from urllib.parse import quote

from .manifest import RIGHTED_TYPES, RIGHTS_TOKENS, RightsSet, rights_tokens
from .routing import Outcome, RouteRequest, RouteResult
from .topology import ComponentInstanceTree, Moniker, MonikerLike, as_moniker


class NamespaceError(Exception):
    code = "NamespaceError"


class DotDotRejected(NamespaceError):
    code = "DotDotRejected"


class NotFound(NamespaceError):
    code = "NotFound"


class AccessDenied(NamespaceError):
    code = "AccessDenied"


class InvalidPath(NamespaceError):
    code = "InvalidPath"


class NotADirectory(NamespaceError):
    code = "NotADirectory"


# --- in-memory directories ----------------------------------------------------


def _check_name(name: str) -> str:
    if not name or "/" in name or name in (".", ".."):
        raise InvalidPath(f"bad entry name {name!r}")
    return name


@dataclass(eq=False)
class VirtualFile:
    data: bytearray = field(default_factory=bytearray)


@dataclass(eq=False)
class VirtualDir:
    entries: dict = field(default_factory=dict)

    def lookup(self, name: str) -> Union["VirtualDir", VirtualFile]:
        try:
            return self.entries[name]
        except KeyError:
            raise NotFound(name) from None

    def mkdir(self, name: str) -> "VirtualDir":
        node = self.entries.get(_check_name(name))
        if node is None:
            node = self.entries[name] = VirtualDir()
        elif not isinstance(node, VirtualDir):
            raise NotADirectory(name)
        return node

    def put(self, relpath: str, data: bytes) -> VirtualFile:
        """Create or replace a file, making intermediate directories."""
        *dirs, leaf = relpath.split("/")
        node = self
        for d in dirs:
            node = node.mkdir(d)
        f = node.entries[_check_name(leaf)] = VirtualFile(bytearray(data))
        return f


class Vfs:
    """Backing directories, one per provider capability.

    Two mounts share state only when they resolve to the same provider
    capability; storage additionally gets one directory per requester.
    """

    def __init__(self):
        self._dirs: dict[tuple, VirtualDir] = {}

    def directory(self, provider: Moniker, cap_type: str, name: str, requester: Optional[Moniker] = None) -> VirtualDir:
        key = (provider, cap_type, name, requester)
        if key not in self._dirs:
            self._dirs[key] = VirtualDir()
        return self._dirs[key]


# --- namespaces -------------------------------------------------------------------


@dataclass(frozen=True)
class Mount:
    path: str
    provider: Moniker
    provider_subdir: str
    rights: RightsSet
    cap_type: str
    name: str
    root: VirtualDir = field(compare=False, repr=False)


@dataclass(frozen=True)
class Namespace:
    owner: Moniker
    mounts: dict = field(default_factory=dict)  # mount path -> Mount

    def render(self) -> str:
        lines = []
        for path in sorted(self.mounts):
            mount = self.mounts[path]
            lines.append(f"{path} -> {mount.provider} [{' '.join(rights_tokens(mount.rights))}]\n")
        return "".join(lines)


def _segments(path: str) -> list[str]:
    """Split an absolute path, refusing ``..`` and dropping empty and ``.`` segments."""
    if not isinstance(path, str) or not path.startswith("/"):
        raise InvalidPath(f"namespace paths are absolute: {path!r}")
    raw = path.split("/")
    if ".." in raw:
        raise DotDotRejected(f"'..' is not allowed: {path!r}")
    return [s for s in raw if s not in ("", ".")]


def normalize(path: str) -> str:
    return "/" + "/".join(_segments(path))


_DEFAULT_RIGHTS = {"storage": RIGHTS_TOKENS["rw*"]}


def build_namespace(
    tree: ComponentInstanceTree,
    m: MonikerLike,
    routes: Sequence[tuple[RouteRequest, Outcome]],
    vfs: Optional[Vfs] = None,
) -> Namespace:
    """Mount every resolved directory/storage use of ``m``; unresolved uses mount nothing."""
    m = as_moniker(m)
    inst = tree.get(m)
    vfs = vfs if vfs is not None else Vfs()
    mounts: dict[str, Mount] = {}
    for req, outcome in routes:
        if req.requester != m or not isinstance(outcome, RouteResult) or req.cap_type not in RIGHTED_TYPES:
            continue
        use = outcome.hops[0].decl
        path = normalize(use.path or f"/{use.name}")
        if path in mounts:
            continue
        cap = outcome.capability
        rights = outcome.effective_rights
        if rights is None:
            rights = _DEFAULT_RIGHTS.get(req.cap_type, frozenset())
        subdir = cap.path or f"/{cap.name}"
        requester = None
        if req.cap_type == "storage":
            requester = inst.moniker
            subdir = f"{subdir}/{quote(str(inst.moniker), safe='')}"
        root = vfs.directory(outcome.provider, cap.cap_type, cap.name, requester)
        mounts[path] = Mount(path, outcome.provider, subdir, frozenset(rights), req.cap_type, req.name, root)
    return Namespace(m, mounts)


def resolve_path(ns: Namespace, path: str) -> tuple[Mount, str]:
    """Longest mounted prefix of ``path`` and the remainder inside that mount."""
    segs = _segments(path)
    best: Optional[Mount] = None
    best_len = -1
    for mount in ns.mounts.values():
        msegs = _segments(mount.path)
        if len(msegs) > best_len and segs[: len(msegs)] == msegs:
            best, best_len = mount, len(msegs)
    if best is None:
        raise NotFound(f"nothing mounted at {path!r}")
    return best, "/".join(segs[best_len:])


@dataclass
class FileRef:
    path: str
    mount: Mount
    node: Union[VirtualDir, VirtualFile]
    rights: RightsSet

    def _need(self, right: str) -> None:
        if right not in self.rights:
            raise AccessDenied(f"{self.path} opened without {right}")

    def read(self) -> bytes:
        self._need("read_bytes")
        if not isinstance(self.node, VirtualFile):
            raise NotADirectory(f"{self.path} is a directory")
        return bytes(self.node.data)

    def write(self, data: bytes) -> int:
        self._need("write_bytes")
        if not isinstance(self.node, VirtualFile):
            raise NotADirectory(f"{self.path} is a directory")
        self.node.data[:] = data
        return len(data)

    def list(self) -> list[str]:
        self._need("enumerate")
        if not isinstance(self.node, VirtualDir):
            raise NotADirectory(f"{self.path} is not a directory")
        return sorted(self.node.entries)


def open(ns: Namespace, path: str, requested: Iterable[str], create: bool = False) -> FileRef:
    """Open ``path`` with ``requested`` rights, which must fit inside the mount's.

    ``create`` makes a missing final file and needs ``modify_directory``.
    """
    mount, remainder = resolve_path(ns, path)
    requested = frozenset(requested)
    if not requested <= mount.rights:
        extra = ", ".join(sorted(requested - mount.rights))
        raise AccessDenied(f"{path}: mount {mount.path} does not grant {extra}")
    node: Union[VirtualDir, VirtualFile] = mount.root
    parts = remainder.split("/") if remainder else []
    for i, part in enumerate(parts):
        if not isinstance(node, VirtualDir):
            raise NotADirectory(f"{path}: {'/'.join(parts[:i])} is a file")
        if part not in node.entries and create and i == len(parts) - 1:
            if "modify_directory" not in requested:
                raise AccessDenied(f"{path}: creating entries needs modify_directory")
            node.entries[part] = VirtualFile()
        node = node.lookup(part)
    return FileRef(normalize(path), mount, node, requested)
