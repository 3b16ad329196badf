"""Small file helpers shared by the readers and writers."""
from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping


def atomic_write_bytes(path, data: bytes) -> None:
    """Write ``data`` to ``path`` via a temp file in the same directory + rename.

    The target is either fully written or left untouched.
    """
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def comment_block(meta: Mapping[str, object] | None) -> str:
    """Render ``meta`` as ``# key=value`` lines (sorted, so output is stable)."""
    if not meta:
        return ""
    return "".join(f"# {k}={meta[k]}\n" for k in sorted(meta))


def data_lines(lines: Iterable[str]):
    """Yield ``(line_number, stripped_line)`` skipping blanks and ``#`` comments."""
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line
