"""On-disk corpus layout: raw test-case files with JSON sidecars, crash records."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .campaign import CrashRecord
from .testcase import Origin, TestCase


def write_corpus(directory: str | Path, members: Iterable[TestCase]) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for tc in members:
        path = out / f"{tc.id}.bin"
        path.write_bytes(tc.data)
        (out / f"{tc.id}.json").write_text(json.dumps(tc.to_dict(), sort_keys=True, indent=2) + "\n",
                                           encoding="utf-8")
        written.append(path)
    return written


def read_corpus(directory: str | Path) -> list[TestCase]:
    """Load test cases; files without a sidecar become seeds.  Sorted by file name."""
    out = []
    for path in sorted(Path(directory).iterdir()):
        if path.suffix == ".json" or not path.is_file():
            continue
        data = path.read_bytes()
        side = path.with_suffix(".json")
        if side.exists():
            meta = json.loads(side.read_text(encoding="utf-8"))
            out.append(TestCase(data, Origin.from_dict(meta["origin"]), meta.get("tick", 0),
                                tuple(meta.get("new_edges", ()))))
        else:
            out.append(TestCase(data))
    return out


def write_crashes(directory: str | Path, crashes: Iterable[CrashRecord]) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, c in enumerate(crashes):
        path = out / f"crash-{i:03d}.json"
        path.write_text(json.dumps(c.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
        written.append(path)
    return written
