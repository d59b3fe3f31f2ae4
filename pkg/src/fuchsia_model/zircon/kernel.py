"""Deterministic in-memory kernel: objects, handles, rights, IPC and memory regions.

Handles are integers unique for the lifetime of a :class:`Kernel`. Every live
handle has exactly one owner: a process id or :data:`IN_TRANSIT` while it
sits inside a channel message. Objects are reclaimed when their last handle
closes, except child VMARs, which their parent region keeps alive.

Every public operation appends one line to :attr:`Kernel.trace`.
"""

from __future__ import annotations

import enum
import functools
import inspect
import os
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional, Union
from urllib.parse import quote, unquote

from .cprng import DEFAULT_RESEED_INTERVAL, CprngState, cprng_draw
from .errors import (
    AccessDenied,
    BadHandle,
    BadProcess,
    Full,
    InvalidArgs,
    NotOwner,
    OutOfRange,
    Overlap,
    PeerClosed,
    RightsEscalation,
    WouldBlock,
    WrongType,
    ZxError,
)
from .rights import (
    IPC_DEFAULT,
    MEMORY_RIGHTS,
    NO_RIGHTS,
    VMAR_BASE,
    VMO_DEFAULT,
    Right,
    format_rights,
    parse_rights,
    rights_subset,
)

IN_TRANSIT = "in-transit"
FIFO_ELEM_SIZES = (4, 8, 16, 32, 64)
FIFO_MAX_BYTES = 4096
MAX_MSG_HANDLES = 64
ADDRESS_SPACE_BASE = 0x1000_0000
ADDRESS_SPACE_SIZE = 1 << 36

Owner = Union[int, str]


class ObjKind(enum.Enum):
    PROCESS = "process"
    CHANNEL = "channel"
    SOCKET = "socket"
    FIFO = "fifo"
    VMO = "vmo"
    VMAR = "vmar"


@dataclass
class Handle:
    id: int
    object_id: int
    rights: Right
    owner: Owner
    endpoint: int = 0


@dataclass
class ChannelState:
    # queues[i] holds messages waiting to be read through endpoint i
    queues: tuple = field(default_factory=lambda: (deque(), deque()))


@dataclass
class SocketState:
    capacity: int
    buffers: tuple = field(default_factory=lambda: (bytearray(), bytearray()))


@dataclass
class FifoState:
    elem_size: int
    depth: int
    queues: tuple = field(default_factory=lambda: (deque(), deque()))


@dataclass
class VmoState:
    data: bytearray


@dataclass(eq=False)
class VmarState:
    base: int
    size: int
    rights: Right
    children: list = field(default_factory=list)
    parent: Optional["VmarState"] = field(default=None, repr=False)
    object_id: int = 0

    @property
    def end(self) -> int:
        return self.base + self.size


@dataclass
class ProcessState:
    name: str
    alive: bool = True
    handles: set = field(default_factory=set)
    root_vmar: int = 0


@dataclass
class KernelObject:
    id: int
    kind: ObjKind
    state: Any
    refcount: int = 0
    # live handles per endpoint, for the two-ended kinds
    endpoint_refs: list = field(default_factory=lambda: [0, 0])


# --- tracing -----------------------------------------------------------------

_BYTES_ARGS = {"data"}
_BYTES_LIST_ARGS = {"elements"}
_INT_LIST_ARGS = {"handles"}
_RIGHTS_ARGS = {"rights"}
_STR_ARGS = {"name"}


def _fmt(value: Any) -> str:
    if value is None:
        return "ok"
    if isinstance(value, Right):
        return format_rights(value)
    if isinstance(value, (bytes, bytearray)):
        return value.hex()
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return quote(value, safe="")
    if isinstance(value, tuple):
        return "(" + ",".join(_fmt(v) for v in value) + ")"
    if isinstance(value, list):
        return "[" + ",".join(_fmt(v) for v in value) + "]"
    return str(value)


def _fmt_arg(name: str, value: Any) -> str:
    if value is None:
        return f"{name}=-"
    return f"{name}={_fmt(value)}"


def _split_list(text: str) -> list[str]:
    inner = text[1:-1]
    return [p for p in inner.split(",")] if inner else []


def _decode_arg(name: str, text: str) -> Any:
    if text == "-":
        return None
    if name in _BYTES_ARGS:
        return bytes.fromhex(text)
    if name in _BYTES_LIST_ARGS:
        return [bytes.fromhex(p) for p in _split_list(text)]
    if name in _INT_LIST_ARGS:
        return [int(p) for p in _split_list(text)]
    if name in _RIGHTS_ARGS:
        return parse_rights(text)
    if name in _STR_ARGS:
        return unquote(text)
    return int(text)


def _traced(method: Callable) -> Callable:
    sig = inspect.signature(method)
    op = method.__name__

    @functools.wraps(method)
    def wrapper(self: "Kernel", *args, **kwargs):
        bound = sig.bind(self, *args, **kwargs)
        bound.apply_defaults()
        head = " ".join([str(len(self.trace)), op] + [_fmt_arg(k, v) for k, v in list(bound.arguments.items())[1:]])
        try:
            result = method(self, *args, **kwargs)
        except ZxError as exc:
            self.trace.append(f"{head} -> !{exc.kind}")
            raise
        self.trace.append(f"{head} -> {_fmt(result)}")
        return result

    wrapper.traced = True
    return wrapper


class Kernel:
    def __init__(
        self,
        cprng_key: Optional[bytes] = None,
        entropy: Optional[Callable[[int], bytes]] = None,
        reseed_interval: int = DEFAULT_RESEED_INTERVAL,
    ):
        self._next_id = 1
        self.objects: dict[int, KernelObject] = {}
        self.handles: dict[int, Handle] = {}
        self.processes: dict[int, ProcessState] = {}
        self.in_transit: set[int] = set()
        self.trace: list[str] = []
        cprng_kwargs: dict[str, Any] = {"reseed_interval": reseed_interval}
        if entropy is not None:
            cprng_kwargs["entropy"] = entropy
        if cprng_key is None:
            cprng_key = (entropy or os.urandom)(32)
        self.cprng = CprngState(key=cprng_key, **cprng_kwargs)

    # --- bookkeeping -------------------------------------------------------

    def _new_id(self) -> int:
        i = self._next_id
        self._next_id += 1
        return i

    def _new_object(self, kind: ObjKind, state: Any) -> KernelObject:
        obj = KernelObject(self._new_id(), kind, state)
        self.objects[obj.id] = obj
        return obj

    def _new_handle(self, obj: KernelObject, rights: Right, owner: Owner, endpoint: int = 0) -> int:
        h = Handle(self._new_id(), obj.id, rights, owner, endpoint)
        self.handles[h.id] = h
        obj.refcount += 1
        obj.endpoint_refs[endpoint] += 1
        self._attach(h.id, owner)
        return h.id

    def _attach(self, hid: int, owner: Owner) -> None:
        self.handles[hid].owner = owner
        if owner == IN_TRANSIT:
            self.in_transit.add(hid)
        else:
            self.processes[owner].handles.add(hid)

    def _detach(self, hid: int) -> None:
        owner = self.handles[hid].owner
        if owner == IN_TRANSIT:
            self.in_transit.discard(hid)
        else:
            self.processes[owner].handles.discard(hid)

    def _process(self, pid: int) -> ProcessState:
        proc = self.processes.get(pid)
        if proc is None or not proc.alive:
            raise BadProcess(f"no live process {pid}")
        return proc

    def _use(self, hid: int, right: Right = NO_RIGHTS, kind: Optional[ObjKind] = None) -> tuple[Handle, KernelObject]:
        h = self.handles.get(hid)
        if h is None or h.owner == IN_TRANSIT:
            raise BadHandle(f"handle {hid} is not usable")
        obj = self.objects[h.object_id]
        if kind is not None and obj.kind is not kind:
            raise WrongType(f"handle {hid} refers to a {obj.kind.value}, not a {kind.value}")
        if not rights_subset(right, h.rights):
            raise AccessDenied(f"handle {hid} lacks {format_rights(right & ~h.rights)}")
        return h, obj

    def _drop(self, hid: int) -> None:
        """Forget a handle and release its reference on the object."""
        self._detach(hid)
        h = self.handles.pop(hid)
        obj = self.objects[h.object_id]
        obj.refcount -= 1
        obj.endpoint_refs[h.endpoint] -= 1
        if obj.kind in (ObjKind.CHANNEL, ObjKind.SOCKET, ObjKind.FIFO) and obj.endpoint_refs[h.endpoint] == 0:
            self._endpoint_closed(obj, h.endpoint)
        if obj.refcount == 0 and obj.id in self.objects:
            self._maybe_reclaim(obj)

    def _endpoint_closed(self, obj: KernelObject, endpoint: int) -> None:
        if obj.kind is ObjKind.CHANNEL:
            # nobody can read these any more; release carried handles
            pending = obj.state.queues[endpoint]
            while pending:
                _, carried = pending.popleft()
                for hid in carried:
                    if hid in self.handles:
                        self._drop(hid)

    def _maybe_reclaim(self, obj: KernelObject) -> None:
        if obj.kind is ObjKind.VMAR:
            parent = obj.state.parent
            if parent is not None and parent.object_id in self.objects:
                return  # retained by the parent region
            self._reclaim_vmar(obj.state)
            return
        del self.objects[obj.id]

    def _reclaim_vmar(self, vmar: VmarState) -> None:
        self.objects.pop(vmar.object_id, None)
        if vmar.parent is not None and vmar in vmar.parent.children:
            vmar.parent.children.remove(vmar)
        for child in list(vmar.children):
            child_obj = self.objects.get(child.object_id)
            if child_obj is not None and child_obj.refcount == 0:
                self._reclaim_vmar(child)
            else:
                child.parent = None
        vmar.children = []

    def handle_info(self, hid: int) -> Handle:
        h = self.handles.get(hid)
        if h is None:
            raise BadHandle(f"handle {hid} is not live")
        return replace(h)

    def object_of(self, hid: int) -> KernelObject:
        return self.objects[self.handle_info(hid).object_id]

    # --- processes ---------------------------------------------------------

    @_traced
    def process_create(self, name: str = "") -> tuple[int, int]:
        """New process with a root VMAR spanning its address space; returns (pid, vmar handle)."""
        obj = self._new_object(ObjKind.PROCESS, ProcessState(name))
        self.processes[obj.id] = obj.state
        vmar = VmarState(ADDRESS_SPACE_BASE, ADDRESS_SPACE_SIZE, MEMORY_RIGHTS)
        vobj = self._new_object(ObjKind.VMAR, vmar)
        vmar.object_id = vobj.id
        hid = self._new_handle(vobj, VMAR_BASE | MEMORY_RIGHTS, obj.id)
        obj.state.root_vmar = vobj.id
        return obj.id, hid

    @_traced
    def process_exit(self, pid: int) -> None:
        proc = self._process(pid)
        for hid in sorted(proc.handles):
            if hid in self.handles:
                self._drop(hid)
        proc.alive = False

    # --- handles -----------------------------------------------------------

    @_traced
    def handle_duplicate(self, handle: int, rights: Optional[Right] = None) -> int:
        h, obj = self._use(handle, Right.DUPLICATE)
        if rights is None:
            rights = h.rights
        if not rights_subset(rights, h.rights):
            raise RightsEscalation(f"duplicate asks for {format_rights(rights & ~h.rights)}")
        return self._new_handle(obj, rights, h.owner, h.endpoint)

    @_traced
    def handle_close(self, handle: int) -> None:
        self._use(handle)
        self._drop(handle)

    # --- channels ----------------------------------------------------------

    @_traced
    def channel_create(self, pid: int, peer: Optional[int] = None) -> tuple[int, int]:
        """Endpoint 0 goes to ``pid``; endpoint 1 to ``peer`` if given (a bootstrap channel), else ``pid``."""
        self._process(pid)
        peer = pid if peer is None else peer
        self._process(peer)
        obj = self._new_object(ObjKind.CHANNEL, ChannelState())
        return self._new_handle(obj, IPC_DEFAULT, pid, 0), self._new_handle(obj, IPC_DEFAULT, peer, 1)

    @_traced
    def channel_write(self, handle: int, data: bytes, handles: Optional[list] = None) -> None:
        h, obj = self._use(handle, Right.WRITE, ObjKind.CHANNEL)
        carried = list(handles or ())
        if len(carried) > MAX_MSG_HANDLES:
            raise InvalidArgs(f"at most {MAX_MSG_HANDLES} handles per message")
        if len(set(carried)) != len(carried):
            raise InvalidArgs("handle listed twice")
        for hid in carried:
            if hid == handle:
                raise InvalidArgs("cannot send a channel handle through itself")
            t = self.handles.get(hid)
            if t is None or t.owner == IN_TRANSIT:
                raise BadHandle(f"handle {hid} is not usable")
            if t.owner != h.owner:
                raise NotOwner(f"handle {hid} belongs to another process")
            if not t.rights & Right.TRANSFER:
                raise AccessDenied(f"handle {hid} lacks transfer")
        peer = 1 - h.endpoint
        if obj.endpoint_refs[peer] == 0:
            raise PeerClosed("peer endpoint closed")
        for hid in carried:
            self._detach(hid)
            self._attach(hid, IN_TRANSIT)
        obj.state.queues[peer].append((bytes(data), carried))

    @_traced
    def channel_read(self, handle: int) -> tuple[bytes, list]:
        h, obj = self._use(handle, Right.READ, ObjKind.CHANNEL)
        queue = obj.state.queues[h.endpoint]
        if not queue:
            if obj.endpoint_refs[1 - h.endpoint] == 0:
                raise PeerClosed("peer endpoint closed")
            raise WouldBlock("no message")
        data, carried = queue.popleft()
        for hid in carried:
            self._detach(hid)
            self._attach(hid, h.owner)
        return data, list(carried)

    # --- sockets -----------------------------------------------------------

    @_traced
    def socket_create(self, pid: int, capacity: int) -> tuple[int, int]:
        self._process(pid)
        if capacity <= 0:
            raise InvalidArgs("capacity must be positive")
        obj = self._new_object(ObjKind.SOCKET, SocketState(capacity))
        return self._new_handle(obj, IPC_DEFAULT, pid, 0), self._new_handle(obj, IPC_DEFAULT, pid, 1)

    @_traced
    def socket_write(self, handle: int, data: bytes) -> int:
        h, obj = self._use(handle, Right.WRITE, ObjKind.SOCKET)
        peer = 1 - h.endpoint
        if obj.endpoint_refs[peer] == 0:
            raise PeerClosed("peer endpoint closed")
        buf = obj.state.buffers[peer]
        free = obj.state.capacity - len(buf)
        if data and free == 0:
            raise Full("socket buffer full")
        n = min(len(data), free)
        buf += data[:n]
        return n

    @_traced
    def socket_read(self, handle: int, count: int) -> bytes:
        h, obj = self._use(handle, Right.READ, ObjKind.SOCKET)
        buf = obj.state.buffers[h.endpoint]
        if not buf:
            if obj.endpoint_refs[1 - h.endpoint] == 0:
                raise PeerClosed("peer endpoint closed")
            raise WouldBlock("socket empty")
        out = bytes(buf[:count])
        del buf[:count]
        return out

    # --- fifos -------------------------------------------------------------

    @_traced
    def fifo_create(self, pid: int, elem_size: int, depth: int) -> tuple[int, int]:
        self._process(pid)
        if elem_size not in FIFO_ELEM_SIZES:
            raise InvalidArgs(f"element size must be one of {FIFO_ELEM_SIZES}")
        if depth <= 0 or elem_size * depth > FIFO_MAX_BYTES:
            raise InvalidArgs(f"elem_size * depth must be in 1..{FIFO_MAX_BYTES}")
        obj = self._new_object(ObjKind.FIFO, FifoState(elem_size, depth))
        return self._new_handle(obj, IPC_DEFAULT, pid, 0), self._new_handle(obj, IPC_DEFAULT, pid, 1)

    @_traced
    def fifo_write(self, handle: int, elements: list) -> int:
        h, obj = self._use(handle, Right.WRITE, ObjKind.FIFO)
        st = obj.state
        if any(len(e) != st.elem_size for e in elements):
            raise InvalidArgs(f"every element must be {st.elem_size} bytes")
        peer = 1 - h.endpoint
        if obj.endpoint_refs[peer] == 0:
            raise PeerClosed("peer endpoint closed")
        queue = st.queues[peer]
        free = st.depth - len(queue)
        if elements and free == 0:
            raise Full("fifo full")
        n = min(len(elements), free)
        queue.extend(bytes(e) for e in elements[:n])
        return n

    @_traced
    def fifo_read(self, handle: int, count: int) -> list:
        h, obj = self._use(handle, Right.READ, ObjKind.FIFO)
        queue = obj.state.queues[h.endpoint]
        if not queue:
            if obj.endpoint_refs[1 - h.endpoint] == 0:
                raise PeerClosed("peer endpoint closed")
            raise WouldBlock("fifo empty")
        return [queue.popleft() for _ in range(min(count, len(queue)))]

    # --- memory ------------------------------------------------------------

    @_traced
    def vmo_create(self, pid: int, size: int) -> int:
        self._process(pid)
        if size < 0:
            raise InvalidArgs("size must be non-negative")
        obj = self._new_object(ObjKind.VMO, VmoState(bytearray(size)))
        return self._new_handle(obj, VMO_DEFAULT, pid)

    @_traced
    def vmo_read(self, handle: int, offset: int, count: int) -> bytes:
        _, obj = self._use(handle, Right.READ, ObjKind.VMO)
        data = obj.state.data
        if offset < 0 or count < 0 or offset + count > len(data):
            raise OutOfRange(f"[{offset}, {offset + count}) outside VMO of {len(data)} bytes")
        return bytes(data[offset : offset + count])

    @_traced
    def vmo_write(self, handle: int, offset: int, data: bytes) -> None:
        _, obj = self._use(handle, Right.WRITE, ObjKind.VMO)
        store = obj.state.data
        if offset < 0 or offset + len(data) > len(store):
            raise OutOfRange(f"[{offset}, {offset + len(data)}) outside VMO of {len(store)} bytes")
        store[offset : offset + len(data)] = data

    @_traced
    def vmar_allocate(self, handle: int, offset: int, size: int, rights: Right) -> int:
        h, obj = self._use(handle, Right.MAP, ObjKind.VMAR)
        parent: VmarState = obj.state
        if not rights_subset(rights, MEMORY_RIGHTS):
            raise InvalidArgs("VMAR rights are drawn from read, write, execute")
        if not rights_subset(rights, parent.rights & h.rights):
            raise RightsEscalation(f"child asks for {format_rights(rights & ~(parent.rights & h.rights))}")
        if size <= 0 or offset < 0:
            raise InvalidArgs("size must be positive and offset non-negative")
        if offset + size > parent.size:
            raise OutOfRange(f"[{offset}, {offset + size}) outside parent of {parent.size} bytes")
        base = parent.base + offset
        for sib in parent.children:
            if base < sib.end and sib.base < base + size:
                raise Overlap(f"overlaps sibling at [{sib.base:#x}, {sib.end:#x})")
        child = VmarState(base, size, rights, parent=parent)
        cobj = self._new_object(ObjKind.VMAR, child)
        child.object_id = cobj.id
        parent.children.append(child)
        parent.children.sort(key=lambda v: v.base)
        return self._new_handle(cobj, (VMAR_BASE | rights) & (h.rights | rights), h.owner)

    def vmar_info(self, handle: int) -> VmarState:
        _, obj = self._use(handle, kind=ObjKind.VMAR)
        return obj.state

    # --- randomness --------------------------------------------------------

    @_traced
    def cprng_draw(self, count: int) -> bytes:
        return cprng_draw(self.cprng, count)

    # --- invariants --------------------------------------------------------

    def check(self) -> None:
        """Assert the global invariants; cheap enough to call after every step."""
        counts: dict[int, int] = {}
        owned: dict[int, Owner] = {}
        for pid, proc in self.processes.items():
            for hid in proc.handles:
                assert hid not in owned, f"handle {hid} owned twice"
                owned[hid] = pid
        for hid in self.in_transit:
            assert hid not in owned, f"handle {hid} both owned and in transit"
            owned[hid] = IN_TRANSIT
        assert set(owned) == set(self.handles), "owner tables disagree with the handle table"
        for hid, h in self.handles.items():
            assert owned[hid] == h.owner, f"handle {hid} owner mismatch"
            assert h.object_id in self.objects, f"handle {hid} points at a reclaimed object"
            counts[h.object_id] = counts.get(h.object_id, 0) + 1
        for oid, obj in self.objects.items():
            if obj.kind is ObjKind.PROCESS:
                continue
            assert obj.refcount == counts.get(oid, 0), f"object {oid} refcount"
            if obj.refcount == 0:
                assert obj.kind is ObjKind.VMAR and obj.state.parent is not None, f"object {oid} should be gone"
            if obj.kind is ObjKind.VMAR:
                _check_vmar(obj.state)


def _check_vmar(v: VmarState) -> None:
    prev_end = None
    for c in v.children:
        assert v.base <= c.base and c.end <= v.end, "child outside parent"
        assert rights_subset(c.rights, v.rights), "child rights exceed parent"
        assert prev_end is None or prev_end <= c.base, "siblings overlap"
        prev_end = c.end


def replay(lines: list[str], kernel: Kernel) -> Kernel:
    """Re-execute a trace on ``kernel`` and check each result matches."""
    for line in lines:
        head, _, expected = line.partition(" -> ")
        parts = head.split(" ")
        op, args = parts[1], parts[2:]
        kwargs = {}
        for a in args:
            k, _, v = a.partition("=")
            kwargs[k] = _decode_arg(k, v)
        method = getattr(kernel, op)
        if not getattr(method, "traced", False):
            raise ValueError(f"{op} is not a kernel operation")
        try:
            got = _fmt(method(**kwargs))
        except ZxError as exc:
            got = f"!{exc.kind}"
        if got != expected:
            raise AssertionError(f"replay diverged at {line!r}: got {got}")
    return kernel
