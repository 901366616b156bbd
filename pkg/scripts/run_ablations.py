#!/usr/bin/env python3
"""Ablations on the synthetic benchmark: head count, then smoothing x dropout.

Single held-out session by default so the grids stay cheap; pass --full-cv for
the whole protocol.
"""

import argparse
import sys

from corrpool import SynthConfig, TrainConfig, generate_synth, sweep
from corrpool.cli import sweep_report


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fold", type=int, default=1, help="held-out session for the quick mode")
    ap.add_argument("--full-cv", action="store_true", help="run every fold per cell")
    ap.add_argument("--per-class", type=int, default=50)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    manifest, features = generate_synth(SynthConfig(n_per_class=args.per_class, seed=args.seed))
    fold = None if args.full_cv else args.fold
    base = TrainConfig(
        pooling="attcorr", dv=8, heads=4, dropout=0.25, label_smoothing=0.25,
        lr=1e-2, epochs=args.epochs, batch_size=32, seed=args.seed,
    )

    print("# attention head count")
    res = sweep(manifest, base, {"heads": [1, 4, 16, 32]},
                features=features, fold=fold, threads=args.threads)
    print(sweep_report(res))

    print()
    print("# label smoothing x channel dropout")
    grid = {"label_smoothing": [0.0, 0.25], "dropout": [0.0, 0.25]}
    res = sweep(manifest, base, grid, features=features, fold=fold, threads=args.threads)
    print(sweep_report(res))
    return 0


if __name__ == "__main__":
    sys.exit(main())
