"""In-memory simulator of kernel objects, handles and rights."""

from .chacha20 import chacha20_block, keystream
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
from .kernel import IN_TRANSIT, Handle, Kernel, KernelObject, ObjKind, VmarState, replay
from .rights import (
    ALL_HANDLE_RIGHTS,
    HANDLE_RIGHTS,
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

__all__ = [name for name in dir() if not name.startswith("_")]
