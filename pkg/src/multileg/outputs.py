"""Deterministic CSV emission with reproducibility metadata.

Every output file starts with a ``#``-prefixed block carrying the package
version, the subcommand, any run-level extras, and the full resolved
configuration (one ``# [section] key = value`` line per schema key).  The
body is plain CSV.  Floats are written with ``repr`` — the shortest
round-tripping form — so identical runs produce byte-identical files.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig


def format_value(v) -> str:
    """Stable, round-tripping text form of a config or table value."""
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(format_value(x) for x in v)
    return str(v)


def meta_block(command: str, cfg: RunConfig, extras: dict | None = None,
               seed: int | None = None, jobs: int = 1) -> list[str]:
    """Metadata lines (without trailing newlines) for one output file."""
    lines = [f"# multileg {__version__}", f"# command = {command}",
             f"# jobs = {jobs}"]
    if seed is not None:
        lines.append(f"# seed = {seed}")
    for section, key, value in cfg.items():
        lines.append(f"# [{section}] {key} = {format_value(value)}")
    for key, value in (extras or {}).items():
        lines.append(f"# {key} = {format_value(value)}")
    return lines


def write_csv(path: str | Path, meta: list[str], columns: list[str],
              rows) -> Path:
    """Write a metadata block plus CSV table; returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = []
    out.extend(meta)
    out.append(",".join(columns))
    for row in rows:
        out.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(out) + "\n")
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[str], list[list[str]]]:
    """Split a written file back into (meta, columns, raw string rows)."""
    lines = Path(path).read_text().splitlines()
    meta = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    if not body:
        raise ValueError(f"no CSV body in {path}")
    return meta, body[0].split(","), [ln.split(",") for ln in body[1:]]
