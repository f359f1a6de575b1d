"""Provenance manifest emitted alongside every output file."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .files import sha256_file, write_lines_atomic


@dataclass
class RunnerManifest:
    command: str
    backend_name: str
    backend_version: str
    seed: int | None = None
    beam_width: int | None = None
    num_captions: int | None = None
    embedding_dim: int | None = None
    checksums: dict[str, str] = field(default_factory=dict)
    skipped: list[dict] = field(default_factory=list)

    def add_file(self, path: str | Path) -> None:
        path = Path(path)
        self.checksums[path.name] = sha256_file(path)

    def skip(self, image_id: str, reason: str) -> None:
        self.skipped.append({"image_id": image_id, "reason": reason})

    def write(self, path: str | Path) -> None:
        payload = json.dumps(asdict(self), indent=2, sort_keys=True)
        write_lines_atomic(path, [payload])
