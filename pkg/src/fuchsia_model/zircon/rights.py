from __future__ import annotations

import enum
from typing import Iterable


class Right(enum.Flag):
    DUPLICATE = enum.auto()
    TRANSFER = enum.auto()
    READ = enum.auto()
    WRITE = enum.auto()
    EXECUTE = enum.auto()
    MAP = enum.auto()
    GET_PROPERTY = enum.auto()
    SET_PROPERTY = enum.auto()
    SIGNAL = enum.auto()
    WAIT = enum.auto()
    INSPECT = enum.auto()
    DESTROY = enum.auto()


HANDLE_RIGHTS = tuple(Right)  # the twelve base rights
NO_RIGHTS = Right(0)
ALL_HANDLE_RIGHTS = Right(sum(r.value for r in HANDLE_RIGHTS))
MEMORY_RIGHTS = Right.READ | Right.WRITE | Right.EXECUTE

IPC_DEFAULT = (
    Right.DUPLICATE | Right.TRANSFER | Right.READ | Right.WRITE | Right.SIGNAL | Right.WAIT | Right.INSPECT
)
VMO_DEFAULT = IPC_DEFAULT | Right.MAP
VMAR_BASE = Right.DUPLICATE | Right.MAP | Right.INSPECT | Right.DESTROY


def rights_subset(a: Right, b: Right) -> bool:
    # compare int values; Flag.__invert__ is slow
    return a.value & ~b.value == 0


def rights_names(rights: Right) -> list[str]:
    return [r.name.lower() for r in HANDLE_RIGHTS if r & rights]


def format_rights(rights: Right) -> str:
    return "|".join(rights_names(rights)) or "none"


def parse_rights(text: str | Iterable[str]) -> Right:
    names = text.split("|") if isinstance(text, str) else list(text)
    out = NO_RIGHTS
    for name in names:
        if name in ("", "none"):
            continue
        out |= Right[name.upper()]
    return out
