import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cogscore import dataset, textnorm


def write_jsonl(path, objects):
    path = Path(path)
    path.write_text(
        "\n".join(json.dumps(o, ensure_ascii=False) for o in objects) + "\n",
        encoding="utf-8",
    )
    return path


def label_line(image_id, category, label, ratings, rater_ids=None):
    if rater_ids is None:
        rater_ids = [f"r{i}" for i in range(len(ratings))]
    return {
        "image_id": image_id,
        "category": category,
        "label": label,
        "ratings": ratings,
        "rater_ids": rater_ids,
    }


def make_labelset(rows):
    """Build a LabelSet from (image_id, category, label, ratings[, rater_ids]) tuples."""
    images = {}
    records = []
    for row in rows:
        image_id, category, label, ratings = row[:4]
        rater_ids = row[4] if len(row) > 4 else tuple(f"r{i}" for i in range(len(ratings)))
        images.setdefault(image_id, dataset.ImageStimulus(image_id, category))
        records.append(
            dataset.LabelRecord(
                image_id=image_id,
                raw_label=label,
                norm_label=textnorm.normalize(label),
                ratings=tuple(ratings),
                rater_ids=tuple(rater_ids),
            )
        )
    return dataset.LabelSet(images, records)


def write_embeddings(path, kind, vectors):
    lines = [{"kind": kind, "dim": len(next(iter(vectors.values())))}]
    lines.extend({"key": k, "vector": [float(x) for x in v]} for k, v in vectors.items())
    return write_jsonl(path, lines)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def pipeline_files(tmp_path):
    """Minimal full-coverage input set: 2 categories, 3 images, 7 records."""
    rows = [
        label_line("img1", "furniture", "chair", [1, 1, 2]),
        label_line("img1", "furniture", "mid-century", [3, 4, 4]),
        label_line("img1", "furniture", "soft", [2, 2, 3]),
        label_line("img2", "furniture", "chair", [0, 1, 1]),
        label_line("img2", "furniture", "comfort", [3, 3, 2]),
        label_line("img2", "furniture", "wood", [1, 2, 2]),
        label_line("img3", "decor", "vase", [1, 0, 1]),
        label_line("img3", "decor", "flowers", [2, 1, 2]),
        label_line("img3", "decor", "nostalgia", [4, 4, 3]),
    ]
    labels = write_jsonl(tmp_path / "labels.jsonl", rows)
    captions = write_jsonl(
        tmp_path / "captions.jsonl",
        [
            {"image_id": "img1", "captions": ["a chair in a room", "a soft chair", "mid century chair", "an empty room"]},
            {"image_id": "img2", "captions": ["a wooden chair", "a chair on white", "a chair"]},
            {"image_id": "img3", "captions": ["a blue vase", "a vase with flowers"]},
        ],
    )
    rng = np.random.default_rng(7)
    image_vecs = {f"img{i}": rng.normal(size=6) for i in (1, 2, 3)}
    text_keys = ["chair", "mid century", "soft", "comfort", "wood", "vase", "flowers", "nostalgia"]
    text_vecs = {k: rng.normal(size=6) for k in text_keys}
    emb_text = write_embeddings(tmp_path / "embeddings_text.jsonl", "text", text_vecs)
    emb_image = write_embeddings(tmp_path / "embeddings_image.jsonl", "image", image_vecs)
    lexicon = tmp_path / "lexicon.tsv"
    lexicon.write_text(
        "Word\tConc.M\n"
        "chair\t5.0\n"
        "century\t3.0\n"
        "mid\t2.5\n"
        "soft\t4.0\n"
        "comfort\t2.0\n"
        "wood\t4.9\n"
        "vase\t4.8\n"
        "flowers\t4.7\n",
        encoding="utf-8",
    )
    return {
        "labels": labels,
        "captions": captions,
        "embeddings_text": emb_text,
        "embeddings_image": emb_image,
        "lexicon": lexicon,
        "out": tmp_path / "out",
    }
