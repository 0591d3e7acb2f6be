"""JSON Lines I/O with file-and-line error reporting."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator

from .util import CoopsightError


class JsonlError(CoopsightError):
    """Malformed input line; message carries file name and line number."""


def read_jsonl(path: str | Path) -> Iterator[dict]:
    """Yield one parsed object per non-empty line of `path`."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JsonlError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise JsonlError(f"{path}:{lineno}: expected a JSON object")
            yield obj


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> int:
    """Write rows as newline-terminated JSON lines; returns the row count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row))
            fh.write("\n")
            n += 1
    return n


def write_json(path: str | Path, obj: Any) -> None:
    """Write a single pretty-printed, newline-terminated JSON document."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def read_json(path: str | Path) -> Any:
    with Path(path).open("r", encoding="utf-8") as fh:
        return json.load(fh)
