"""Exceptions raised while reading manifests."""

from __future__ import annotations

from typing import Iterable


class ManifestError(Exception):
    """Base for manifest failures that stop parsing."""

    code = "ManifestError"

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col


class ManifestSyntaxError(ManifestError):
    code = "SyntaxError"

    def __init__(self, message: str, line: int, col: int):
        super().__init__(message, line, col)

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.message}"


class UnknownCapabilityType(ManifestError):
    code = "UnknownCapabilityType"


class UnknownRightsToken(ManifestError):
    code = "UnknownRightsToken"

    def __init__(self, token: str, line: int = 0, col: int = 0):
        super().__init__(f"unknown rights token {token!r}", line, col)
        self.token = token


class DuplicateChildName(ManifestError):
    code = "DuplicateChildName"


class InvalidDecl(ManifestError):
    """Well-formed syntax that does not describe a valid declaration."""

    code = "InvalidDecl"


class IncludeNotFound(ManifestError):
    code = "IncludeNotFound"

    def __init__(self, path: str):
        super().__init__(f"include {path!r} not found")
        self.path = path


class IncludeCycle(ManifestError):
    code = "IncludeCycle"

    def __init__(self, chain: Iterable[str]):
        self.chain = tuple(chain)
        super().__init__("include cycle: " + " -> ".join(self.chain))
