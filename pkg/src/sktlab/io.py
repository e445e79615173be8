"""Deterministic CSV output with provenance headers.

Every file starts with comment lines recording the artifact version, the
command that produced it and a hash of the effective configuration, so any
output can be traced back to its inputs.  Floats are written with 17
significant digits (round-trip exact for doubles), which is what makes
repeated runs bit-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Iterable, Mapping

VERSION = "0.1.0"


def config_hash(cfg: Mapping) -> str:
    """Stable short hash of a flat config mapping."""
    blob = json.dumps({k: cfg[k] for k in sorted(cfg)}, sort_keys=True,
                      separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def provenance_lines(command: str, cfg: Mapping) -> list[str]:
    return [
        f"# sktlab {VERSION}",
        f"# command: {command}",
        f"# config: {config_hash(cfg)}",
    ]


def write_csv(path: str, columns: Mapping[str, Iterable], command: str,
              cfg: Mapping, metadata: Mapping | None = None) -> None:
    """Write named columns as CSV with a provenance header.

    The file is written atomically (temp file + rename) so concurrent runs
    never observe partial output.
    """
    names = list(columns)
    cols = [list(columns[k]) for k in names]
    n = len(cols[0]) if cols else 0
    for name, c in zip(names, cols):
        if len(c) != n:
            raise ValueError(f"column {name!r} has length {len(c)}, expected {n}")
    lines = provenance_lines(command, cfg)
    if metadata:
        for k in sorted(metadata):
            lines.append(f"# {k}: {_fmt(metadata[k])}")
    lines.append(",".join(names))
    for i in range(n):
        lines.append(",".join(_fmt(c[i]) for c in cols))
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def write_metadata(path: str, command: str, cfg: Mapping,
                   metadata: Mapping) -> None:
    """Key = value sidecar with the same provenance header."""
    lines = provenance_lines(command, cfg)
    for k in sorted(metadata):
        lines.append(f"{k} = {_fmt(metadata[k])}")
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)
