"""Atomic, deterministic file emission (JSON, CSV, SVG move-into-place).

Writers stage content in a temp file next to the target and rename it in,
so an interrupted run never leaves partial outputs. All text is UTF-8
with LF line endings; floats are serialised with Python's shortest
round-trip repr, which downstream readers can recover exactly.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np


def atomic_write_text(path: str, content: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_json(path: str, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def format_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(format_cell(v) for v in row) for row in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")
