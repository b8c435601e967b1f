"""Command-line masked-LM score export."""

from __future__ import annotations

import argparse
import sys

from .jobs import ExportJob, export_mlm_scores


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpsf-export",
        description=(
            "Run a masked language model over masked sentences and write"
            " a CPSF score file plus its vocabulary sidecar."
        ),
    )
    parser.add_argument(
        "--model", required=True, help="model directory or hub identifier"
    )
    parser.add_argument("--max-len", type=int, default=128)
    parser.add_argument(
        "--in",
        dest="in_path",
        required=True,
        metavar="FILE",
        help="input file: one 'mask_position<TAB>sentence' per line",
    )
    parser.add_argument("--out", required=True, help="output CPSF path")
    parser.add_argument("--batch-size", type=int, default=8)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(
            input_path=args.in_path,
            model=args.model,
            out_path=args.out,
            max_len=args.max_len,
            batch_size=args.batch_size,
        )
        summary = export_mlm_scores(job)
    except Exception as exc:  # noqa: BLE001 - single diagnostic line, exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1
    suffix = f" ({summary.skipped} skipped)" if summary.skipped else ""
    print(
        f"wrote {summary.rows_written} rows x {summary.n_labels} labels"
        f" to {args.out}{suffix}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
