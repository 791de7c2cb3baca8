"""Command line for the saliency extractor."""

from __future__ import annotations

import argparse
import sys

from .extract import ExtractionConfig, extract_dataset
from .model import ModelLoadError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attnflow")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract", help="emit sentence-level saliency records")
    p.add_argument("--model", required=True, help="tiny:<L>-<H>-<D>[-seed] or a HF model id")
    p.add_argument("--dataset", required=True, help="input JSONL of premise/question records")
    p.add_argument("--out", required=True, help="output JSONL of saliency records")
    p.add_argument("--layers", default="shallow,deep", help="comma-separated layer-set names")
    p.add_argument("--max-steps", type=int, default=8)
    p.add_argument("--max-new-tokens", type=int, default=64)
    p.add_argument("--device", default="cpu")
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = ExtractionConfig(
        model_id=args.model,
        layer_sets=tuple(name.strip() for name in args.layers.split(",") if name.strip()),
        max_steps=args.max_steps,
        max_new_tokens=args.max_new_tokens,
        device=args.device,
        seed=args.seed,
    )
    try:
        n = extract_dataset(args.dataset, args.out, config)
    except (ModelLoadError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {n} saliency records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
