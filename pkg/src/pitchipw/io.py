"""Flat-file persistence with an embedded provenance block.

Every artifact carries ``{tool, format_version, config_hash, seed, inputs}``.
JSON files hold it under the ``"metadata"`` key; CSV files carry it as a
single leading ``# meta: {...}`` comment line. Nothing time-dependent goes
into the block so identical reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

import pandas as pd

from . import __version__

FORMAT_VERSION = 1
_META_PREFIX = "# meta: "


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config: dict[str, Any]) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def make_metadata(config: dict[str, Any] | None = None, seed: int | None = None,
                  inputs: list[str | Path] | None = None) -> dict[str, Any]:
    config = config or {}
    return {
        "tool": "pitchipw",
        "tool_version": __version__,
        "format_version": FORMAT_VERSION,
        "config_hash": config_hash(config),
        "seed": seed,
        "inputs": {Path(p).name: file_sha256(p) for p in (inputs or [])},
    }


def write_json(path: str | Path, payload: dict[str, Any], metadata: dict[str, Any] | None = None) -> None:
    body = dict(payload)
    if metadata is not None:
        body["metadata"] = metadata
    Path(path).write_text(json.dumps(body, indent=2, sort_keys=False, allow_nan=True) + "\n")


def read_json(path: str | Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text())


def write_csv(path: str | Path, frame: pd.DataFrame, metadata: dict[str, Any] | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if metadata is not None:
            fh.write(_META_PREFIX + json.dumps(metadata, sort_keys=True) + "\n")
        frame.to_csv(fh, index=False, lineterminator="\n", float_format="%.17g")


def read_csv(path: str | Path, **kwargs) -> pd.DataFrame:
    """Read a CSV written by :func:`write_csv` (or any plain CSV)."""
    skip = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                skip += 1
            else:
                break
    return pd.read_csv(path, skiprows=skip, **kwargs)


def read_csv_metadata(path: str | Path) -> dict[str, Any] | None:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if first.startswith(_META_PREFIX):
        return json.loads(first[len(_META_PREFIX):])
    return None
