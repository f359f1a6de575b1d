"""Caption generation: one corpus of visual-description sentences per image."""

from __future__ import annotations

import json
import logging
from pathlib import Path

from . import RunnerError
from .backends import ImageRecord
from .files import image_readable, write_lines_atomic
from .manifest import RunnerManifest

logger = logging.getLogger(__name__)


def generate_captions(
    images: list[ImageRecord],
    caption_backend,
    beam_width: int,
    num_captions: int,
    out_path: str | Path,
    seed: int | None = None,
) -> RunnerManifest:
    """Write ``captions.jsonl`` plus a manifest with checksums and skip list.

    Exactly ``num_captions`` distinct captions per readable image;
    unreadable images are skipped and listed, never silently dropped.
    """
    if num_captions < 1:
        raise RunnerError(f"num_captions must be >= 1, got {num_captions}")
    if beam_width < 1:
        raise RunnerError(f"beam_width must be >= 1, got {beam_width}")
    out_path = Path(out_path)
    manifest = RunnerManifest(
        command="captions",
        backend_name=caption_backend.name,
        backend_version=caption_backend.version,
        seed=seed,
        beam_width=beam_width,
        num_captions=num_captions,
    )
    lines: list[str] = []
    for image in images:
        ok, reason = image_readable(image)
        if not ok:
            logger.warning("skipping %s: %s", image.image_id, reason)
            manifest.skip(image.image_id, reason)
            continue
        captions = caption_backend.captions(image, beam_width, num_captions)
        if len(captions) != num_captions or len(set(captions)) != num_captions:
            raise RunnerError(
                f"backend returned {len(captions)} captions "
                f"({len(set(captions))} distinct) for {image.image_id!r}; "
                f"need {num_captions} distinct"
            )
        lines.append(json.dumps({"image_id": image.image_id, "captions": captions}))
    if not lines:
        raise RunnerError("no image produced captions")
    write_lines_atomic(out_path, lines)
    manifest.add_file(out_path)
    manifest.write(out_path.parent / "manifest.json")
    return manifest
