"""Command-line entry point: ``runner captions`` and ``runner embed``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import RunnerError, __version__
from .backends import make_backends
from .captions import generate_captions
from .embed import extract_embeddings
from .files import load_images_manifest, load_vocab

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="runner",
        description="Produce caption corpora and joint text/image embeddings "
        "as canonical files for the scoring toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"caprunner {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    captions = sub.add_parser("captions", help="generate per-image caption corpora")
    captions.add_argument("--images", required=True, help="images.jsonl manifest")
    captions.add_argument("--beams", type=int, default=5, help="beam width")
    captions.add_argument("--num", type=int, default=5, help="captions per image")
    captions.add_argument("--out", required=True, help="output captions.jsonl path")

    embed = sub.add_parser("embed", help="extract text and image embeddings")
    embed.add_argument("--vocab", required=True, help="labels.jsonl or one label per line")
    embed.add_argument("--images", required=True, help="images.jsonl manifest")
    embed.add_argument("--out-dir", required=True, help="output directory")
    embed.add_argument("--dim", type=int, default=32, help="dimension (toy backend only)")

    for p in (captions, embed):
        p.add_argument(
            "--backend",
            choices=("toy", "hf"),
            default="hf",
            help="'hf' uses pretrained captioner/encoder; 'toy' is the "
            "deterministic offline stub",
        )
        p.add_argument("--seed", type=int, default=0, help="seed (toy backend)")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        caption_backend, embedding_backend = make_backends(
            args.backend, seed=args.seed, dim=getattr(args, "dim", 32)
        )
        images = load_images_manifest(args.images)
        if args.command == "captions":
            manifest = generate_captions(
                images, caption_backend, args.beams, args.num, args.out, seed=args.seed
            )
            print(
                f"wrote {args.out}: {len(images) - len(manifest.skipped)} image(s), "
                f"{len(manifest.skipped)} skipped"
            )
        else:
            vocab = load_vocab(args.vocab)
            manifest = extract_embeddings(
                vocab, images, embedding_backend, args.out_dir, seed=args.seed
            )
            print(
                f"wrote embeddings under {args.out_dir}: {len(vocab)} text key(s), "
                f"{len(images) - len(manifest.skipped)} image(s), dim {manifest.embedding_dim}"
            )
        return 0
    except RunnerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        logger.exception("internal error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
