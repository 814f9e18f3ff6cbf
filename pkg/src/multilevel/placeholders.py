"""Shared ``${...}`` lexer for conversion patterns and action templates.

One grammar serves both: ``$$`` escapes a literal dollar, ``${inner}`` is a
hole whose inner text the caller interprets (kind-prefixed arguments in
patterns, dotted context paths in actions). A lone ``$`` is malformed, which
keeps serialize(parse(text)) an identity on well-formed texts.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BadPattern


@dataclass(frozen=True)
class Text:
    value: str


@dataclass(frozen=True)
class Hole:
    inner: str


Segment = Text | Hole


def scan(text: str) -> list[Segment]:
    segments: list[Segment] = []
    buf: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c != "$":
            buf.append(c)
            i += 1
            continue
        if i + 1 < n and text[i + 1] == "$":
            buf.append("$")
            i += 2
            continue
        if i + 1 < n and text[i + 1] == "{":
            end = text.find("}", i + 2)
            if end < 0:
                raise BadPattern(f"unterminated placeholder at offset {i}")
            if buf:
                segments.append(Text("".join(buf)))
                buf = []
            segments.append(Hole(text[i + 2:end]))
            i = end + 1
            continue
        raise BadPattern(f"lone '$' at offset {i}; use '$$' for a literal dollar")
    if buf:
        segments.append(Text("".join(buf)))
    return segments


def unscan(segments: list[Segment]) -> str:
    out: list[str] = []
    for seg in segments:
        if isinstance(seg, Text):
            out.append(seg.value.replace("$", "$$"))
        else:
            out.append("${" + seg.inner + "}")
    return "".join(out)


def resolve_path(context, path: str):
    """Look up a dotted path in a nested document; integer parts index lists.

    Raises KeyError with the failing path when any step is missing.
    """
    current = context
    for part in path.split("."):
        if isinstance(current, dict) and part in current:
            current = current[part]
        elif isinstance(current, list) and part.lstrip("-").isdigit():
            idx = int(part)
            if -len(current) <= idx < len(current):
                current = current[idx]
            else:
                raise KeyError(path)
        else:
            raise KeyError(path)
    return current


def substitute(text: str, context) -> str:
    """Fill every hole from the context document; total or failing.

    A hole that cannot be resolved raises KeyError before any output is
    produced, so no half-substituted text escapes.
    """
    import json

    out: list[str] = []
    for seg in scan(text):
        if isinstance(seg, Text):
            out.append(seg.value)
        else:
            value = resolve_path(context, seg.inner)
            if isinstance(value, (dict, list)):
                out.append(json.dumps(value, ensure_ascii=False, separators=(",", ":")))
            elif isinstance(value, bool):
                out.append("true" if value else "false")
            elif value is None:
                out.append("null")
            else:
                out.append(str(value))
    return "".join(out)
