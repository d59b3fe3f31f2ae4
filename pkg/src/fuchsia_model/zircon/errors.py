"""Status errors; ``status`` mirrors the kernel's status-code names."""


class ZxError(Exception):
    status = "ZX_ERR_INTERNAL"

    @property
    def kind(self) -> str:
        return type(self).__name__


class BadHandle(ZxError):
    status = "ZX_ERR_BAD_HANDLE"


class WrongType(ZxError):
    status = "ZX_ERR_WRONG_TYPE"


class AccessDenied(ZxError):
    status = "ZX_ERR_ACCESS_DENIED"


class RightsEscalation(ZxError):
    status = "ZX_ERR_INVALID_ARGS"


class InvalidArgs(ZxError):
    status = "ZX_ERR_INVALID_ARGS"


class NotOwner(ZxError):
    status = "ZX_ERR_ACCESS_DENIED"


class WouldBlock(ZxError):
    status = "ZX_ERR_SHOULD_WAIT"


class Full(ZxError):
    status = "ZX_ERR_SHOULD_WAIT"


class PeerClosed(ZxError):
    status = "ZX_ERR_PEER_CLOSED"


class OutOfRange(ZxError):
    status = "ZX_ERR_OUT_OF_RANGE"


class Overlap(ZxError):
    status = "ZX_ERR_NO_RESOURCES"


class BadProcess(ZxError):
    status = "ZX_ERR_BAD_STATE"
