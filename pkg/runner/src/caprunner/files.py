"""Input loading, atomic output writing, and checksums."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

from . import RunnerError
from .backends import ImageRecord
from .textkey import normalize_key


def load_images_manifest(path: str | Path) -> list[ImageRecord]:
    path = Path(path)
    if not path.is_file():
        raise RunnerError(f"images manifest not found: {path}")
    records: list[ImageRecord] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RunnerError(f"{path}:{line_no}: malformed JSON ({exc.msg})")
            image_id = obj.get("image_id")
            if not isinstance(image_id, str) or not image_id:
                raise RunnerError(f"{path}:{line_no}: bad image_id")
            if image_id in seen:
                raise RunnerError(f"{path}:{line_no}: duplicate image_id {image_id!r}")
            seen.add(image_id)
            records.append(
                ImageRecord(
                    image_id=image_id,
                    category=str(obj.get("category") or "product"),
                    image_path=obj.get("image_path"),
                )
            )
    if not records:
        raise RunnerError(f"{path}: no images")
    return records


def load_vocab(path: str | Path) -> list[str]:
    """Distinct normalized label keys from a labels.jsonl or plain text file."""
    path = Path(path)
    if not path.is_file():
        raise RunnerError(f"vocab file not found: {path}")
    keys: dict[str, None] = {}
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("{"):
                try:
                    label = json.loads(line).get("label")
                except json.JSONDecodeError as exc:
                    raise RunnerError(f"{path}:{line_no}: malformed JSON ({exc.msg})")
                if not isinstance(label, str):
                    raise RunnerError(f"{path}:{line_no}: missing label field")
            else:
                label = line
            key = normalize_key(label)
            if key:
                keys[key] = None
    if not keys:
        raise RunnerError(f"{path}: no usable vocabulary entries")
    return list(keys)


def image_readable(image: ImageRecord) -> tuple[bool, str]:
    """(ok, reason). Images without a path are fine for id-keyed backends."""
    if image.image_path is None:
        return True, ""
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(image.image_path) as img:
            img.verify()
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        return False, f"{type(exc).__name__}: {exc}"
    return True, ""


def write_lines_atomic(path: str | Path, lines: list[str]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
