"""Reader and writer for the JSON5-flavoured manifest surface syntax.

Accepted beyond strict JSON: unquoted identifier keys, single-quoted
strings, trailing commas, ``//`` and ``/* */`` comments, hex integers and
a leading ``+`` on numbers. Objects come back as :class:`Obj` (a ``dict``
that remembers where it started) so later stages can report positions.
"""

from __future__ import annotations

import json
import re
from typing import Any

from .errors import ManifestSyntaxError

__all__ = ["Obj", "Arr", "ManifestSyntaxError", "loads", "dumps"]


class Obj(dict):
    """Parsed object. ``line``/``col`` are 1-based; key positions in ``key_pos``."""

    line = 0
    col = 0

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.key_pos: dict[str, tuple[int, int]] = {}


class Arr(list):
    line = 0
    col = 0


_IDENT_START = re.compile(r"[A-Za-z_$]")
_IDENT = re.compile(r"[A-Za-z0-9_$]*")
_NUMBER = re.compile(
    r"[+-]?(?:0[xX][0-9a-fA-F]+|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|Infinity|NaN)"
)
_ESCAPES = {
    '"': '"', "'": "'", "\\": "\\", "/": "/",
    "b": "\b", "f": "\f", "n": "\n", "r": "\r", "t": "\t", "v": "\v", "0": "\0",
}
_MAX_DEPTH = 256


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.depth = 0

    def where(self, pos: int | None = None) -> tuple[int, int]:
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def fail(self, message: str, pos: int | None = None):
        line, col = self.where(pos)
        raise ManifestSyntaxError(message, line, col)

    def skip_ws(self) -> None:
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r\n\ufeff\u00a0\u2028\u2029":
                self.pos += 1
            elif text.startswith("//", self.pos):
                end = text.find("\n", self.pos)
                self.pos = len(text) if end < 0 else end + 1
            elif text.startswith("/*", self.pos):
                end = text.find("*/", self.pos + 2)
                if end < 0:
                    self.fail("unterminated block comment")
                self.pos = end + 2
            else:
                return

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def value(self) -> Any:
        self.skip_ws()
        ch = self.peek()
        if ch == "{":
            return self.obj()
        if ch == "[":
            return self.arr()
        if not ch:
            self.fail("unexpected end of input")
        if ch in "\"'":
            return self.string()
        m = _NUMBER.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return _number(m.group())
        for word, val in (("true", True), ("false", False), ("null", None)):
            if self.text.startswith(word, self.pos) and not _IDENT.match(
                self.text, self.pos + len(word)
            ).group():
                self.pos += len(word)
                return val
        self.fail(f"unexpected character {ch!r}")

    def _enter(self) -> None:
        self.depth += 1
        if self.depth > _MAX_DEPTH:
            self.fail("nesting too deep")

    def obj(self) -> Obj:
        self._enter()
        out = Obj()
        out.line, out.col = self.where()
        self.pos += 1
        while True:
            self.skip_ws()
            if self.peek() == "}":
                self.pos += 1
                break
            key_at = self.pos
            key = self.key()
            if key in out:
                self.fail(f"duplicate key {key!r}", key_at)
            out.key_pos[key] = self.where(key_at)
            self.skip_ws()
            if self.peek() != ":":
                self.fail("expected ':'")
            self.pos += 1
            out[key] = self.value()
            self.skip_ws()
            ch = self.peek()
            if ch == ",":
                self.pos += 1
            elif ch == "}":
                self.pos += 1
                break
            else:
                self.fail("expected ',' or '}'")
        self.depth -= 1
        return out

    def arr(self) -> Arr:
        self._enter()
        out = Arr()
        out.line, out.col = self.where()
        self.pos += 1
        while True:
            self.skip_ws()
            if self.peek() == "]":
                self.pos += 1
                break
            out.append(self.value())
            self.skip_ws()
            ch = self.peek()
            if ch == ",":
                self.pos += 1
            elif ch == "]":
                self.pos += 1
                break
            else:
                self.fail("expected ',' or ']'")
        self.depth -= 1
        return out

    def key(self) -> str:
        ch = self.peek()
        if ch and ch in "\"'":
            return self.string()
        if ch and _IDENT_START.match(ch):
            m = _IDENT.match(self.text, self.pos)
            self.pos = m.end()
            return m.group()
        self.fail("expected object key")

    def string(self) -> str:
        quote = self.text[self.pos]
        start = self.pos
        self.pos += 1
        parts = []
        text = self.text
        while True:
            if self.pos >= len(text):
                self.fail("unterminated string", start)
            ch = text[self.pos]
            if ch == quote:
                self.pos += 1
                return "".join(parts)
            if ch == "\n":
                self.fail("newline in string")
            if ch == "\\":
                self.pos += 1
                esc = self.peek()
                if esc in _ESCAPES:
                    parts.append(_ESCAPES[esc])
                    self.pos += 1
                elif esc == "u":
                    digits = text[self.pos + 1 : self.pos + 5]
                    if not re.fullmatch(r"[0-9a-fA-F]{4}", digits):
                        self.fail("bad \\u escape")
                    code = int(digits, 16)
                    self.pos += 5
                    low = text[self.pos + 2 : self.pos + 6]
                    if 0xD800 <= code < 0xDC00 and text.startswith("\\u", self.pos) and re.fullmatch(
                        r"[dD][c-fC-F][0-9a-fA-F]{2}", low
                    ):
                        # surrogate pair
                        code = 0x10000 + ((code - 0xD800) << 10) + (int(low, 16) - 0xDC00)
                        self.pos += 6
                    parts.append(chr(code))
                elif esc == "\n":
                    self.pos += 1
                else:
                    self.fail(f"bad escape {esc!r}")
                continue
            parts.append(ch)
            self.pos += 1


def _number(tok: str) -> int | float:
    body = tok.lstrip("+-")
    sign = -1 if tok.startswith("-") else 1
    if body[:2] in ("0x", "0X"):
        return sign * int(body, 16)
    if body in ("Infinity", "NaN"):
        return sign * float(body.lower().replace("infinity", "inf"))
    if re.fullmatch(r"\d+", body):
        return sign * int(body)
    return sign * float(body)


def loads(text: str | bytes) -> Any:
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ManifestSyntaxError("input is not valid UTF-8", 1, exc.start + 1) from None
    reader = _Reader(text)
    value = reader.value()
    reader.skip_ws()
    if reader.pos != len(text):
        reader.fail("trailing content")
    return value


_BARE_KEY = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*\Z")


def dumps(value: Any, indent: int = 4, _level: int = 0) -> str:
    """Render in conventional manifest style: bare keys, trailing commas."""
    pad = " " * (indent * (_level + 1))
    close = " " * (indent * _level)
    if isinstance(value, dict):
        if not value:
            return "{}"
        lines = []
        for k, v in value.items():
            key = k if _BARE_KEY.match(k) else json.dumps(k)
            lines.append(f"{pad}{key}: {dumps(v, indent, _level + 1)},")
        return "{\n" + "\n".join(lines) + "\n" + close + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(isinstance(v, str) for v in value):
            return "[ " + ", ".join(json.dumps(v) for v in value) + " ]"
        lines = [f"{pad}{dumps(v, indent, _level + 1)}," for v in value]
        return "[\n" + "\n".join(lines) + "\n" + close + "]"
    return json.dumps(value, ensure_ascii=False)
