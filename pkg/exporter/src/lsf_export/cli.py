"""Command line front end: CSV of utterances in, LSF1 features + manifest out.

Exit codes: 0 success, 2 usage problems (bad CSV, unknown model, bad flag),
1 runtime failures (model load, non-finite output).
"""

import argparse
import csv
import logging
import sys
from pathlib import Path

from .errors import ExportError, InputError
from .export import MODEL_REGISTRY, AudioItem, ExportJob, export

_COLUMNS = ("id", "path", "label", "session", "speaker")


def read_items(csv_path: Path) -> list[AudioItem]:
    """Audio list CSV -> items; relative audio paths resolve against the CSV's directory."""
    try:
        f = open(csv_path, newline="")
    except OSError as e:
        raise InputError(f"cannot read audio list: {e}") from None
    with f:
        reader = csv.DictReader(f)
        missing = set(_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise InputError(f"{csv_path}: missing columns {sorted(missing)}")
        items = []
        for lineno, row in enumerate(reader, 2):
            try:
                session = int(row["session"])
            except ValueError:
                raise InputError(f"{csv_path}:{lineno}: bad session {row['session']!r}") from None
            audio = Path(row["path"])
            if not audio.is_absolute():
                audio = csv_path.parent / audio
            items.append(AudioItem(row["id"].strip(), audio, row["label"], session, row["speaker"].strip()))
    if not items:
        raise InputError(f"{csv_path}: no data rows")
    return items


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lsf-export", description=__doc__.splitlines()[0])
    ap.add_argument("--csv", type=Path, required=True, help="utterance list (id,path,label,session,speaker)")
    ap.add_argument("--model", required=True,
                    help=f"one of {sorted(MODEL_REGISTRY)} or a local model directory")
    ap.add_argument("--out", type=Path, required=True, help="output directory")
    ap.add_argument("--device", default="cpu")
    ap.add_argument("--max-seconds", type=float, default=30.0,
                    help="skip utterances longer than this (whole-utterance inference only)")
    ap.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=None,
                    help="zero-mean unit-var input; default follows the model registry")
    return ap


def run(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        job = ExportJob(
            items=read_items(args.csv), model=args.model, out_dir=args.out,
            device=args.device, max_seconds=args.max_seconds, normalize=args.normalize,
        )
        manifest = export(job)
    except InputError as e:
        print(f"lsf-export: error: {e}", file=sys.stderr)
        return 2
    except ExportError as e:
        print(f"lsf-export: error: {e}", file=sys.stderr)
        return 1
    print(manifest)
    return 0


def main() -> None:
    sys.exit(run())
