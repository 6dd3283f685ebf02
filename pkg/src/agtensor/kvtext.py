"""Minimal ``key = value`` text format used for configs and descriptors.

One entry per line, ``#`` starts a comment, keys are dotted names.
Writers emit keys in a caller-supplied canonical order so the bytes of
a serialized object are a function of its content only.
"""

from __future__ import annotations

import hashlib


def parse(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def dump(items: list[tuple[str, str]]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in items)


def digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]
