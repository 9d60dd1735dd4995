"""Atomic file writes: temp file in the destination directory, then rename,
so no output path is ever left half-written."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path


def _umask_mode() -> int:
    # mkstemp always creates 0600; outputs should get the usual 0666 & ~umask
    mask = os.umask(0)
    os.umask(mask)
    return 0o666 & ~mask


def atomic_write_bytes(destination, payload: bytes) -> None:
    destination = Path(destination)
    fd, tmp = tempfile.mkstemp(dir=destination.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.chmod(tmp, _umask_mode())
        os.replace(tmp, destination)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(destination, text: str) -> None:
    atomic_write_bytes(destination, text.encode("utf-8"))
