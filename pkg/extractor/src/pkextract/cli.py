"""Command line for feature extraction and desk-scale fine-tuning."""

import argparse
import logging
import sys

from .extract import ExtractionJob, extract_features
from .finetune import SETTINGS, FinetuneConfig, finetune
from .models import ARCH_BLOCKS, ExtractorError


def build_parser():
    parser = argparse.ArgumentParser(prog="pkextract")
    sub = parser.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", help="dump activation blocks to a feature file")
    ex.add_argument("--images", required=True, help="image directory (private/ and "
                    "public/ subdirectories set labels when present)")
    ex.add_argument("--arch", required=True, choices=sorted(ARCH_BLOCKS))
    ex.add_argument("--out", required=True, help="output JSONL feature file")
    ex.add_argument("--blocks", nargs="*", default=None,
                    help="blocks to emit (default: all for the architecture)")
    ex.add_argument("--batch-size", type=int, default=8)
    ex.add_argument("--label", default="public", choices=("private", "public"),
                    help="label for images outside labeled subdirectories")
    ex.add_argument("--weights", default=None, help="local state-dict file; "
                    "random initialization is used when omitted")
    ex.add_argument("--tags-file", default=None,
                    help="JSON file mapping image id to user-tag list")
    ex.add_argument("--seed", type=int, default=0)

    ft = sub.add_parser("finetune", help="fine-tune for the two-class privacy task")
    ft.add_argument("--images", required=True)
    ft.add_argument("--arch", required=True, choices=sorted(ARCH_BLOCKS))
    ft.add_argument("--setting", default="fc", choices=SETTINGS)
    ft.add_argument("--out-scores", required=True, help="output id/label/score TSV")
    ft.add_argument("--epochs", type=int, default=3)
    ft.add_argument("--batch-size", type=int, default=16)
    ft.add_argument("--weights", default=None)
    ft.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "extract":
            job = ExtractionJob(
                image_dir=args.images, arch=args.arch, out_path=args.out,
                blocks=tuple(args.blocks) if args.blocks else (),
                batch_size=args.batch_size, default_label=args.label,
                weights=args.weights, tags_file=args.tags_file, seed=args.seed,
            )
            n = extract_features(job)
            print("wrote %d records to %s" % (n, args.out))
        else:
            config = FinetuneConfig(
                arch=args.arch, setting=args.setting, epochs=args.epochs,
                batch_size=args.batch_size, seed=args.seed, weights=args.weights,
            )
            _, rows = finetune(args.images, config, out_scores=args.out_scores)
            print("fine-tuned %s (%s); %d scores -> %s"
                  % (args.arch, args.setting, len(rows), args.out_scores))
    except (ExtractorError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
