"""Command-line front end for synthesis, training, CV, sweeps, and inspection.

Exit codes: 0 success; 2 usage problems (bad flag values, missing files,
infeasible configs, i.e. ConfigurationError) detected before real work; 1
runtime failures (corrupt inputs, divergence, undefined metrics). Errors
print one machine-parsable line to stderr:

    corrpool: error: <ErrorType>: <message>

Inputs are never mutated; all outputs go to the --out directory, including
config.resolved.json, a snapshot sufficient to reproduce the run (feed it
back via --config).
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import POOLING_METHODS, TrainConfig
from .data import SynthConfig, load_features, load_manifest, read_header, write_synth
from .errors import ConfigurationError, CorrPoolError
from .harness import (
    CVResult,
    SweepResult,
    confusion_matrix,
    cross_validate,
    predict_items,
    single_fold,
    sweep,
    unweighted_accuracy,
    write_confusions,
    write_cv_csv,
    write_json,
    write_sweep_csv,
)
from .head import load_params, save_params

# long-flag name -> TrainConfig field
_FLAG_KEYS = {
    "pooling": "pooling",
    "heads": "heads",
    "dropout": "dropout",
    "label_smoothing": "label_smoothing",
    "dv": "dv",
    "epsilon": "epsilon",
    "lr": "lr",
    "epochs": "epochs",
    "batch": "batch_size",
    "seed": "seed",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrpool", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("synth", help="generate the synthetic benchmark dataset")
    defaults = SynthConfig()
    p.add_argument("--classes", type=int, default=defaults.n_classes)
    p.add_argument("--per-class", type=int, default=defaults.n_per_class, help="utterances per class per session")
    p.add_argument("--sessions", type=int, default=defaults.n_sessions)
    p.add_argument("--t-min", type=int, default=defaults.t_min)
    p.add_argument("--t-max", type=int, default=defaults.t_max)
    p.add_argument("--d", type=int, default=defaults.d)
    p.add_argument("--layers", type=int, default=defaults.n_layers)
    p.add_argument("--segment-fraction", type=float, default=defaults.segment_fraction)
    p.add_argument("--rho", type=float, default=defaults.rho)
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.add_argument("--out", required=True)

    p = sub.add_parser("cv", help="leave-one-session-out cross-validation")
    _add_run_flags(p)
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("train", help="train on a single fold and save the parameters")
    _add_run_flags(p)
    p.add_argument("--fold", type=int, default=None, help="held-out session (default: first)")

    p = sub.add_parser("eval", help="score a manifest with saved parameters")
    p.add_argument("--manifest", required=True)
    p.add_argument("--params", required=True, help="params.npz written by train")
    p.add_argument("--out", default=None)

    p = sub.add_parser("sweep", help="grid sweep over config fields")
    _add_run_flags(p)
    p.add_argument("--grid", action="append", required=True, metavar="KEY=V1,V2,...",
                   help="sweep axis over a config field (repeatable)")
    p.add_argument("--fold", type=int, default=None, help="sweep on one held-out session instead of full CV")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("inspect", help="print feature-file headers")
    p.add_argument("paths", nargs="+")
    return parser


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None, help="JSON config file (TrainConfig keys); flags override it")
    p.add_argument("--pooling", choices=POOLING_METHODS, default=None)
    p.add_argument("--heads", type=int, default=None)
    p.add_argument("--dropout", type=float, default=None)
    p.add_argument("--label-smoothing", type=float, default=None)
    p.add_argument("--dv", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)


def resolve_config(args) -> TrainConfig:
    """Defaults, then the --config file, then explicit flags; validated last."""
    values = TrainConfig().asdict()
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigurationError(f"config file {path} not found")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"config file {path} is not valid JSON ({e.msg})") from None
        if "config" in loaded and isinstance(loaded["config"], dict):
            loaded = loaded["config"]  # accept a config.resolved.json snapshot
        unknown = set(loaded) - set(values)
        if unknown:
            raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
        values.update(loaded)
    for flag, key in _FLAG_KEYS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    return TrainConfig(**values).validate()


def _require_file(path_str: str, what: str) -> Path:
    path = Path(path_str)
    if not path.is_file():
        raise ConfigurationError(f"{what} {path} not found")
    return path


def _grid_from_args(entries: list[str]) -> dict[str, list]:
    defaults = TrainConfig().asdict()
    grid: dict[str, list] = {}
    for entry in entries:
        key, sep, raw = entry.partition("=")
        key = key.replace("-", "_")
        if not sep or not raw:
            raise ConfigurationError(f"grid axis {entry!r} must look like KEY=V1,V2,...")
        if key not in defaults:
            raise ConfigurationError(f"unknown grid axis {key!r}; valid keys: {sorted(defaults)}")
        if key in grid:
            raise ConfigurationError(f"grid axis {key!r} given twice")
        cast = type(defaults[key])
        try:
            grid[key] = [cast(v) for v in raw.split(",")]
        except ValueError:
            raise ConfigurationError(f"grid axis {key!r}: cannot parse {raw!r} as {cast.__name__}") from None
    return grid


def format_mean_std(mean: float, std: float) -> str:
    """Percent cell in the usual 'mean (std)' style, e.g. 70.00 (10.00)."""
    return f"{100.0 * mean:.2f} ({100.0 * std:.2f})"


def render_table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(header), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines)


def aggregate_table(results: list[CVResult]) -> str:
    rows = [[r.config["pooling"], format_mean_std(r.mean_ua, r.std_ua),
             format_mean_std(r.mean_accuracy, r.std_accuracy)] for r in results]
    return render_table(["pooling", "UA % (std)", "Acc % (std)"], rows)


def cv_report(result: CVResult) -> str:
    rows = [[str(f.session), f"{100 * f.ua:.2f}", f"{100 * f.accuracy:.2f}", str(f.best_epoch)]
            for f in result.folds]
    folds = render_table(["fold", "UA %", "Acc %", "best_epoch"], rows)
    return folds + "\n\n" + aggregate_table([result])


def sweep_report(result: SweepResult) -> str:
    rows = []
    for c in result.cells:
        coords = [str(c.coords[a]) for a in result.axes]
        if c.error is not None:
            rows.append(coords + ["error: " + c.error, ""])
        else:
            rows.append(coords + [format_mean_std(c.mean_ua, c.std_ua),
                                  format_mean_std(c.mean_accuracy, c.std_accuracy)])
    return render_table(result.axes + ["UA % (std)", "Acc % (std)"], rows)


def _resolved_snapshot(cmd: str, cfg: TrainConfig, **extra) -> dict:
    return {"command": cmd, "config": cfg.asdict(), **extra}


def _out_dir(args) -> Path | None:
    if getattr(args, "out", None) is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        n_classes=args.classes, n_per_class=args.per_class, n_sessions=args.sessions,
        t_min=args.t_min, t_max=args.t_max, d=args.d, n_layers=args.layers,
        segment_fraction=args.segment_fraction, rho=args.rho, seed=args.seed,
    ).validate()
    manifest = write_synth(cfg, args.out)
    print(f"wrote {len(manifest.records)} utterances to {args.out} "
          f"(classes: {', '.join(manifest.class_names)}; manifest.jsonl alongside)")
    return 0


def cmd_cv(args) -> int:
    cfg = resolve_config(args)
    manifest_path = _require_file(args.manifest, "manifest")
    out = _out_dir(args)
    manifest = load_manifest(manifest_path)
    result = cross_validate(manifest, cfg, threads=args.threads)
    print(cv_report(result))
    if out is not None:
        write_json(result.to_dict(), out / "results.json")
        write_cv_csv(result, out / "results.csv")
        write_confusions(result, manifest.class_names, out)
        write_json(_resolved_snapshot("cv", cfg, manifest=str(args.manifest), threads=args.threads),
                   out / "config.resolved.json")
    return 0


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    manifest_path = _require_file(args.manifest, "manifest")
    out = _out_dir(args)
    manifest = load_manifest(manifest_path)
    session = args.fold if args.fold is not None else manifest.sessions()[0]
    params, result = single_fold(manifest, cfg, session)
    print(f"fold {result.session}: UA {100 * result.ua:.2f} "
          f"Acc {100 * result.accuracy:.2f} (best epoch {result.best_epoch})")
    if out is not None:
        save_params(out / "params.npz", params, cfg)
        write_json({"config": cfg.asdict(), "folds": [result.to_dict()]}, out / "results.json")
        write_json(_resolved_snapshot("train", cfg, manifest=str(args.manifest), fold=session),
                   out / "config.resolved.json")
    return 0


def cmd_eval(args) -> int:
    manifest_path = _require_file(args.manifest, "manifest")
    params_path = _require_file(args.params, "parameter archive")
    out = _out_dir(args)
    params, cfg = load_params(params_path)
    manifest = load_manifest(manifest_path)
    features = load_features(manifest)
    items = [(features[r.id], manifest.label_index(r.label)) for r in manifest.records]
    preds = predict_items(items, params, cfg)
    labels = np.array([label for _, label in items])
    k = params.clf_b.shape[0]
    if labels.max() >= k:
        raise ConfigurationError(f"manifest has {labels.max() + 1} classes, parameters were trained for {k}")
    ua = unweighted_accuracy(preds, labels, k)
    acc = float(np.mean(preds == labels))
    conf = confusion_matrix(preds, labels, k)
    print(f"{len(items)} utterances: UA {100 * ua:.2f} Acc {100 * acc:.2f}")
    if out is not None:
        write_json({"config": cfg.asdict(), "n": len(items), "ua": ua, "accuracy": acc,
                    "confusion": conf.tolist()}, out / "results.json")
    return 0


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    grid = _grid_from_args(args.grid)
    manifest_path = _require_file(args.manifest, "manifest")
    out = _out_dir(args)
    manifest = load_manifest(manifest_path)
    result = sweep(manifest, cfg, grid, fold=args.fold, threads=args.threads)
    print(sweep_report(result))
    if out is not None:
        write_json(result.to_dict(), out / "results.json")
        write_sweep_csv(result, out / "results.csv")
        write_json(_resolved_snapshot("sweep", cfg, manifest=str(args.manifest),
                                      grid={k: list(v) for k, v in grid.items()},
                                      fold=args.fold, threads=args.threads),
                   out / "config.resolved.json")
    return 0


def cmd_inspect(args) -> int:
    for path_str in args.paths:
        path = _require_file(path_str, "feature file")
        n_layers, t, d = read_header(path)
        print(f"{path}: n_layers={n_layers} n_frames={t} dim={d} payload_bytes={4 * n_layers * t * d}")
    return 0


_HANDLERS = {
    "synth": cmd_synth,
    "cv": cmd_cv,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "inspect": cmd_inspect,
}


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _HANDLERS[args.cmd](args)
    except ConfigurationError as e:
        _report_error(e)
        return 2
    except (CorrPoolError, OSError) as e:
        _report_error(e)
        return 1


def _report_error(e: Exception) -> None:
    msg = " ".join(str(e).split())
    print(f"corrpool: error: {type(e).__name__}: {msg}", file=sys.stderr)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
