"""Command-line entry point: corpus jsonl in, SESM embeddings out."""

from __future__ import annotations

import argparse
import logging
import sys

from .export import DEFAULT_ENCODER, ExportConfig, export_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Encode a jsonl text corpus into a SESM embedding file "
                    "with a pretrained sentence encoder (mean pooling).")
    parser.add_argument("--corpus", required=True,
                        help="input corpus, one JSON object with a 'text' "
                             "field per line")
    parser.add_argument("--out", required=True,
                        help="output SESM embedding file")
    parser.add_argument("--encoder", default=DEFAULT_ENCODER,
                        help=f"encoder model id (default: {DEFAULT_ENCODER})")
    parser.add_argument("--batch", type=int, default=32,
                        help="encoding batch size (default: 32)")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = ExportConfig(corpus=args.corpus, out=args.out,
                              encoder=args.encoder, batch=args.batch)
        manifest = export_embeddings(config)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"embed-export: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {manifest['rows']} x {manifest['dim']} embeddings "
          f"to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
