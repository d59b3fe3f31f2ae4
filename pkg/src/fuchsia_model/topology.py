"""Component instance tree: monikers, URLs, static and dynamic children, lifecycle."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, Optional, Tuple, Union

from .manifest import ChildDecl, ComponentManifest

MAX_DEPTH = 64


class TopologyError(Exception):
    code = "TopologyError"


class MalformedUrl(TopologyError):
    code = "MalformedUrl"


class MalformedMoniker(TopologyError):
    code = "MalformedMoniker"


class ResolveFailure(TopologyError):
    code = "ResolveFailure"

    def __init__(self, url: str, reason: str = ""):
        super().__init__(f"cannot resolve {url}" + (f": {reason}" if reason else ""))
        self.url = url


class CycleDetected(TopologyError):
    code = "CycleDetected"


class NoSuchInstance(TopologyError):
    code = "NoSuchInstance"


class NoSuchCollection(TopologyError):
    code = "NoSuchCollection"


class DuplicateChildName(TopologyError):
    code = "DuplicateChildName"


class ParentNotStarted(TopologyError):
    code = "ParentNotStarted"


class IllegalTransition(TopologyError):
    code = "IllegalTransition"

    def __init__(self, state: "LifecycleState", event: str):
        super().__init__(f"cannot {event} an instance in state {state.value}")
        self.state = state
        self.event = event


# --- monikers ---------------------------------------------------------------

_SEGMENT = re.compile(r"(?:[A-Za-z0-9_][A-Za-z0-9_.\-]*:)?[A-Za-z0-9_][A-Za-z0-9_.\-]*\Z")


@dataclass(frozen=True, order=True)
class Moniker:
    segments: Tuple[str, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "Moniker":
        if not text.startswith("/"):
            raise MalformedMoniker(f"moniker must start with '/': {text!r}")
        if text == "/":
            return cls(())
        segs = tuple(text[1:].split("/"))
        for s in segs:
            if not _SEGMENT.match(s):
                raise MalformedMoniker(f"bad moniker segment {s!r} in {text!r}")
        return cls(segs)

    def __str__(self) -> str:
        return "/" + "/".join(self.segments)

    def child(self, name: str) -> "Moniker":
        return Moniker(self.segments + (name,))

    @property
    def parent(self) -> Optional["Moniker"]:
        return Moniker(self.segments[:-1]) if self.segments else None

    @property
    def leaf(self) -> str:
        return self.segments[-1] if self.segments else ""

    def is_within(self, other: "Moniker") -> bool:
        """True if ``self`` equals ``other`` or lies beneath it."""
        return self.segments[: len(other.segments)] == other.segments


MonikerLike = Union[Moniker, str]


def as_moniker(m: MonikerLike) -> Moniker:
    return m if isinstance(m, Moniker) else Moniker.parse(m)


# --- component URLs ---------------------------------------------------------

_URL = re.compile(r"(?P<scheme>[a-z][a-z0-9+.\-]*)://(?P<repo>[^/#\s]+)(?:/(?P<pkg>[^#\s]*))?(?:#(?P<frag>[^\s#]*))?\Z")


@dataclass(frozen=True)
class ComponentUrl:
    scheme: str
    repository: str
    package: str = ""
    fragment: Optional[str] = None

    def __str__(self) -> str:
        out = f"{self.scheme}://{self.repository}"
        if self.package:
            out += "/" + self.package
        if self.fragment is not None:
            out += "#" + self.fragment
        return out


def parse_component_url(s: str) -> ComponentUrl:
    m = _URL.match(s) if isinstance(s, str) else None
    if not m:
        raise MalformedUrl(f"malformed component URL {s!r}")
    url = ComponentUrl(m["scheme"], m["repo"], m["pkg"] or "", m["frag"])
    if url.scheme == "fuchsia-pkg" and not (url.package and url.fragment):
        raise MalformedUrl(f"fuchsia-pkg URL needs package and manifest fragment: {s!r}")
    return url


# --- lifecycle --------------------------------------------------------------


class LifecycleState(enum.Enum):
    CREATED = "Created"
    STARTED = "Started"
    STOPPED = "Stopped"
    DESTROYED = "Destroyed"
    PURGED = "Purged"


EVENTS = ("start", "stop", "destroy", "purge")

TRANSITIONS: Dict[Tuple[LifecycleState, str], LifecycleState] = {
    (LifecycleState.CREATED, "start"): LifecycleState.STARTED,
    (LifecycleState.STARTED, "stop"): LifecycleState.STOPPED,
    (LifecycleState.STOPPED, "start"): LifecycleState.STARTED,
    (LifecycleState.CREATED, "destroy"): LifecycleState.DESTROYED,
    (LifecycleState.STOPPED, "destroy"): LifecycleState.DESTROYED,
    (LifecycleState.DESTROYED, "purge"): LifecycleState.PURGED,
}


def next_state(state: LifecycleState, event: str) -> LifecycleState:
    try:
        return TRANSITIONS[(state, event)]
    except KeyError:
        raise IllegalTransition(state, event) from None


# --- the tree ---------------------------------------------------------------


@dataclass(eq=False)
class ComponentInstance:
    moniker: Moniker
    url: str
    manifest: ComponentManifest
    state: LifecycleState = LifecycleState.CREATED
    children: Dict[str, "ComponentInstance"] = field(default_factory=dict)
    parent: Optional["ComponentInstance"] = field(default=None, repr=False)
    collection: Optional[str] = None
    persisted: bool = False
    # Program-visible state; survives stop/start through the persisted record.
    storage: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        """Name this instance is known by in its parent (``coll:name`` for dynamic children)."""
        return self.moniker.leaf

    @property
    def child_name(self) -> str:
        """Bare child name without the collection prefix."""
        return self.name.split(":", 1)[-1]

    def walk(self) -> Iterator["ComponentInstance"]:
        yield self
        for c in self.children.values():
            yield from c.walk()


Resolver = Callable[[str], ComponentManifest]


class ComponentInstanceTree:
    """Runtime topology of one program. Mutated only through its methods."""

    def __init__(self, root: ComponentInstance, resolver: Optional[Resolver] = None):
        self.root = root
        self.resolver = resolver
        self.records: Dict[Moniker, dict] = {}  # persisted state snapshots
        # instances removed from the tree, kept for the purge step
        self.graveyard: Dict[Moniker, ComponentInstance] = {}

    def __iter__(self) -> Iterator[ComponentInstance]:
        return self.root.walk()

    def __len__(self) -> int:
        return sum(1 for _ in self)

    def find(self, m: MonikerLike) -> Optional[ComponentInstance]:
        m = as_moniker(m)
        root_segs = self.root.moniker.segments
        if m.segments[: len(root_segs)] != root_segs:
            return None
        node = self.root
        for seg in m.segments[len(root_segs):]:
            node = node.children.get(seg)
            if node is None:
                return None
        return node

    def get(self, m: MonikerLike) -> ComponentInstance:
        node = self.find(m)
        if node is None:
            raise NoSuchInstance(f"no instance {as_moniker(m)}")
        return node

    def monikers(self) -> list[Moniker]:
        return [i.moniker for i in self]

    def state_of(self, m: MonikerLike) -> LifecycleState:
        m = as_moniker(m)
        node = self.find(m)
        if node is not None:
            return node.state
        if m in self.graveyard:
            return self.graveyard[m].state
        raise NoSuchInstance(f"no instance {m}")

    def render(self) -> str:
        return "".join(f"{i.moniker} {i.state.value} {i.url}\n" for i in self)

    def check(self) -> None:
        """Assert structural well-formedness; used by tests after mutations."""
        for node in self:
            for name, child in node.children.items():
                assert child.parent is node, f"{child.moniker} parent pointer"
                assert child.moniker == node.moniker.child(name), f"{child.moniker} name"
                assert child.state not in (LifecycleState.DESTROYED, LifecycleState.PURGED)


def _instantiate(
    moniker: Moniker,
    url: str,
    resolver: Resolver,
    parent: Optional[ComponentInstance],
    ancestors: Tuple[str, ...],
    collection: Optional[str] = None,
) -> ComponentInstance:
    if url in ancestors:
        raise CycleDetected(f"{url} appears on its own ancestor chain at {moniker}")
    if len(ancestors) >= MAX_DEPTH:
        raise CycleDetected(f"tree deeper than {MAX_DEPTH} at {moniker}")
    parse_component_url(url)
    try:
        manifest = resolver(url)
    except (KeyError, LookupError, FileNotFoundError) as exc:
        raise ResolveFailure(url, str(exc)) from None
    if manifest is None:
        raise ResolveFailure(url)
    node = ComponentInstance(moniker, url, manifest, parent=parent, collection=collection)
    for decl in manifest.children:
        if decl.name in node.children:
            raise DuplicateChildName(f"duplicate child {decl.name!r} in {moniker}")
        node.children[decl.name] = _instantiate(
            moniker.child(decl.name), decl.url, resolver, node, ancestors + (url,)
        )
    return node


def build_tree(root_url: Union[str, ComponentUrl], resolver: Resolver, root_name: Optional[str] = None) -> ComponentInstanceTree:
    """Instantiate ``root_url`` and all static descendants, every node Created.

    Without ``root_name`` the root's moniker is ``/``; with it, ``/<root_name>``.
    """
    root_moniker = Moniker((root_name,)) if root_name else Moniker(())
    root = _instantiate(root_moniker, str(root_url), resolver, None, ())
    return ComponentInstanceTree(root, resolver)


def create_dynamic_child(tree: ComponentInstanceTree, parent: MonikerLike, collection: str, child: ChildDecl) -> Moniker:
    node = tree.get(parent)
    if node.manifest.collection(collection) is None:
        raise NoSuchCollection(f"{node.moniker} declares no collection {collection!r}")
    if node.state is not LifecycleState.STARTED:
        raise ParentNotStarted(f"{node.moniker} is {node.state.value}")
    name = f"{collection}:{child.name}"
    if name in node.children:
        raise DuplicateChildName(f"{name} already exists under {node.moniker}")
    moniker = node.moniker.child(name)
    ancestors = tuple(a.url for a in _ancestry(node))
    instance = _instantiate(moniker, child.url, tree.resolver, node, ancestors, collection)
    # a fresh instance replaces any purged/destroyed record under this name
    for stale in [m for m in tree.graveyard if m.is_within(moniker)]:
        del tree.graveyard[stale]
    node.children[name] = instance
    return moniker


def _ancestry(node: ComponentInstance) -> list[ComponentInstance]:
    chain = []
    while node is not None:
        chain.append(node)
        node = node.parent
    return chain[::-1]


def _post_order(node: ComponentInstance) -> Iterator[ComponentInstance]:
    for c in list(node.children.values()):
        yield from _post_order(c)
    yield node


def _stop(tree: ComponentInstanceTree, node: ComponentInstance) -> None:
    node.state = next_state(node.state, "stop")
    node.persisted = True
    tree.records[node.moniker] = dict(node.storage)


def transition(tree: ComponentInstanceTree, m: MonikerLike, event: str) -> LifecycleState:
    """Apply a lifecycle event to ``m``; returns the new state.

    ``stop`` and ``destroy`` act on descendants first, deepest first. Only
    running descendants are stopped; destroy removes the whole realm.
    """
    if event not in EVENTS:
        raise ValueError(f"unknown lifecycle event {event!r}")
    m = as_moniker(m)
    node = tree.find(m)
    if node is None:
        dead = tree.graveyard.get(m)
        if dead is None:
            raise NoSuchInstance(f"no instance {m}")
        dead.state = next_state(dead.state, event)
        # purge drops the realm's saved state too
        for gone in [k for k in tree.graveyard if k.is_within(m)]:
            tree.graveyard[gone].state = LifecycleState.PURGED
            tree.graveyard[gone].persisted = False
            tree.records.pop(gone, None)
        return dead.state

    target = next_state(node.state, event)
    if event == "start":
        if node.persisted:
            node.storage = dict(tree.records.get(node.moniker, {}))
        node.state = target
    elif event == "stop":
        for d in _post_order(node):
            if d is not node and d.state is LifecycleState.STARTED:
                _stop(tree, d)
        _stop(tree, node)
    elif event == "destroy":
        parent = node.parent
        if parent is None:
            raise TopologyError("the root instance cannot be destroyed")
        for d in _post_order(node):
            if d.state is LifecycleState.STARTED:
                _stop(tree, d)
            d.state = next_state(d.state, "destroy")
            d.children = {}
            tree.graveyard[d.moniker] = d
        del parent.children[node.name]
        node.parent = None
    else:  # purge on a live instance always fails
        raise IllegalTransition(node.state, event)
    return node.state


def realm_of(tree: ComponentInstanceTree, m: MonikerLike) -> set[Moniker]:
    return {i.moniker for i in tree.get(m).walk()}
