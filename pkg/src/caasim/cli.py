"""Command-line front end: generate / train / eval / stats / plot.

Every command writes a JSON run report beside its outputs with the command
echo, resolved configuration, wall-clock time, and result summary. Angles
on the command line are degrees; everything internal is radians.

Environment: CAA_THREADS overrides the generation worker count. The
``--deterministic`` training flag re-executes the process with BLAS thread
pools pinned to one thread so repeated runs produce identical weights.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _reexec_single_threaded(argv: list[str]) -> None:
    env = dict(os.environ)
    for var in _THREAD_VARS:
        env[var] = "1"
    env["CAASIM_PINNED"] = "1"
    os.execvpe(sys.executable, [sys.executable, "-m", "caasim.cli"] + argv, env)


MODE_NAMES = {"caa": "geometry", "feedline": "feedline", "traditional": "traditional"}


def _mode(name):
    from .fingerprint import PhaseMode
    return PhaseMode(MODE_NAMES[name])


def _workers(args) -> int:
    if getattr(args, "workers", None):
        return args.workers
    return int(os.environ.get("CAA_THREADS", "1"))


def write_report(path: Path, argv: list[str], config: dict, started: float,
                 results: dict) -> Path:
    report = {
        "command": argv,
        "config": config,
        "wall_clock_seconds": round(time.time() - started, 3),
        "results": results,
    }
    path.write_text(json.dumps(report, indent=2, default=str))
    return path


def cmd_generate(args, argv) -> int:
    from .channel import ChannelParams
    from .dataset import CorpusConfig, generate_corpus, write_corpus

    started = time.time()
    snr = math.inf if args.snr_db is None else args.snr_db
    config = CorpusConfig(
        num_devices=args.devices, sessions_per_device=args.sessions,
        n_samples=args.samples, mode=_mode(args.mode),
        channel=ChannelParams(snr_db=snr, walk_speed_mps=args.walk_speed),
        master_seed=args.seed)
    payload, manifest = generate_corpus(config, workers=_workers(args))
    bin_path, man_path = write_corpus(payload, manifest, args.out)
    report = write_report(
        bin_path.parent / (bin_path.stem + ".report.json"), argv,
        json.loads(manifest.to_json())["config"], started,
        {"corpus": str(bin_path), "manifest": str(man_path),
         "checksum": manifest.checksum, "records": manifest.record_count,
         "payload_bytes": manifest.payload_bytes})
    print(f"wrote {bin_path} ({manifest.record_count} sessions, "
          f"checksum {manifest.checksum}); report {report}")
    return 0


def cmd_train(args, argv) -> int:
    from .classifier import Cnn3Model, ModelSpec, TrainConfig, evaluate, save_model, train
    from .dataset import read_corpus, split_arrays
    from .plotting import save_history

    started = time.time()
    records, manifest = read_corpus(args.data)
    splits = split_arrays(records, manifest)
    spec = ModelSpec(num_classes=manifest.config.num_devices,
                     input_rows=manifest.config.n_samples)
    config = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                         learning_rate=args.lr, seed=args.seed)
    model = Cnn3Model.initialize(spec, seed=args.seed)
    best, history = train(model, splits["train"], splits["val"], config)
    out = Path(args.out)
    save_model(best, out)
    val_acc = evaluate(best, *splits["val"]).accuracy
    svg, csv_path = save_history(history, out.parent / (out.stem + "_history"))
    report = write_report(
        out.parent / (out.stem + ".report.json"), argv,
        {"data": str(args.data), "epochs": config.epochs, "batch_size": config.batch_size,
         "learning_rate": config.learning_rate, "seed": config.seed,
         "deterministic": bool(args.deterministic), "num_classes": spec.num_classes,
         "input_rows": spec.input_rows}, started,
        {"checkpoint": str(out), "best_epoch": history.best_epoch,
         "epochs_run": len(history.train_loss), "val_accuracy": val_acc,
         "stopped_early": history.stopped_early,
         "history_csv": str(csv_path), "history_svg": str(svg)})
    print(f"trained {len(history.train_loss)} epochs, best val accuracy {val_acc:.4f}; "
          f"checkpoint {out}; report {report}")
    return 0


def cmd_eval(args, argv) -> int:
    from .classifier import evaluate, load_model
    from .dataset import read_corpus, split_arrays
    from .plotting import save_confusion

    started = time.time()
    records, manifest = read_corpus(args.data)
    splits = split_arrays(records, manifest)
    model = load_model(args.checkpoint)
    if model.spec.num_classes != manifest.config.num_devices:
        raise ValueError(
            f"checkpoint expects {model.spec.num_classes} classes but corpus has "
            f"{manifest.config.num_devices} devices")
    x, y = splits[args.split]
    metrics = evaluate(model, x, y)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    svg, csv_path = save_confusion(metrics, out_dir / "confusion")
    report = write_report(
        out_dir / "eval.report.json", argv,
        {"data": str(args.data), "checkpoint": str(args.checkpoint), "split": args.split},
        started,
        {"accuracy": metrics.accuracy,
         "per_class_min": float(metrics.per_class_accuracy.min()),
         "confusion_csv": str(csv_path), "confusion_svg": str(svg)})
    print(f"{args.split} accuracy {metrics.accuracy:.4f}; confusion {csv_path}; "
          f"report {report}")
    return 0


def cmd_stats(args, argv) -> int:
    from .validate import run_suite

    started = time.time()
    results = run_suite(args.suite, seed=args.seed)
    for r in results:
        print(r.summary())
    out_dir = Path(args.out_dir) if args.out_dir else Path.cwd()
    out_dir.mkdir(parents=True, exist_ok=True)
    report = write_report(
        out_dir / f"stats_{args.suite}.report.json", argv,
        {"suite": args.suite, "seed": args.seed}, started,
        {"checks": [asdict(r) for r in results],
         "all_passed": all(r.passed for r in results)})
    print(f"report {report}")
    return 0 if all(r.passed for r in results) else 1


def cmd_plot(args, argv) -> int:
    from .fingerprint import RandomizationParams, synthesize_phase_field
    from .plotting import save_phase_histogram, save_phase_map

    started = time.time()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    mode = _mode(args.mode)
    params = RandomizationParams(master_seed=args.seed)
    field = synthesize_phase_field(params, args.antenna_id, mode)
    map_svg, map_csv = save_phase_map(
        field, out_dir / f"phase_map_antenna{args.antenna_id}_{mode.value}",
        resolution=args.grid_resolution)
    hist_svg, hist_csv = save_phase_histogram(
        args.seed, mode, out_dir / f"phase_histogram_{mode.value}",
        num_antennas=args.histogram_antennas)
    report = write_report(
        out_dir / "plot.report.json", argv,
        {"antenna_id": args.antenna_id, "mode": args.mode,
         "grid_resolution": args.grid_resolution, "seed": args.seed,
         "histogram_antennas": args.histogram_antennas}, started,
        {"phase_map_svg": str(map_svg), "phase_map_csv": str(map_csv),
         "histogram_svg": str(hist_svg), "histogram_csv": str(hist_csv)})
    print(f"wrote {map_svg}, {hist_svg}; report {report}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="caasim",
        description="Chaotic antenna array RF-fingerprint authentication simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate an authentication corpus")
    gen.add_argument("--devices", type=int, default=300)
    gen.add_argument("--sessions", type=int, default=100)
    gen.add_argument("--samples", type=int, default=1000)
    gen.add_argument("--mode", choices=sorted(MODE_NAMES), default="caa")
    gen.add_argument("--snr-db", type=float, default=20.0,
                     help="receiver SNR in dB (omit noise with --no-noise)")
    gen.add_argument("--no-noise", dest="snr_db", action="store_const", const=None,
                     help="disable receiver noise entirely")
    gen.add_argument("--walk-speed", type=float, default=1.0, help="m/s")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--workers", type=int, default=0,
                     help="session generation threads (default CAA_THREADS or 1)")
    gen.add_argument("--out", required=True, help="output base name or .caad path")
    gen.set_defaults(func=cmd_generate)

    tr = sub.add_parser("train", help="train the convolutional baseline")
    tr.add_argument("--data", required=True, help="corpus base name or .caad path")
    tr.add_argument("--out", default="cnn3.caaw", help="checkpoint path")
    tr.add_argument("--epochs", type=int, default=50)
    tr.add_argument("--batch-size", type=int, default=32)
    tr.add_argument("--lr", type=float, default=1e-3)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--deterministic", action="store_true",
                    help="pin BLAS threads for bit-identical reruns")
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a checkpoint on a corpus split")
    ev.add_argument("--data", required=True)
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--split", choices=("train", "val", "test"), default="test")
    ev.add_argument("--out-dir", default="eval_out")
    ev.set_defaults(func=cmd_eval)

    st = sub.add_parser("stats", help="run statistical validation suites")
    st.add_argument("--suite", default="all",
                    choices=("phase-uniformity", "channel-autocorr", "rayleigh-ks",
                             "snr", "drift", "all"))
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--out-dir", default=None)
    st.set_defaults(func=cmd_stats)

    pl = sub.add_parser("plot", help="render phase-field figures and CSVs")
    pl.add_argument("--antenna-id", type=int, default=0)
    pl.add_argument("--mode", choices=sorted(MODE_NAMES), default="caa")
    pl.add_argument("--grid-resolution", type=int, default=60)
    pl.add_argument("--histogram-antennas", type=int, default=1200)
    pl.add_argument("--seed", type=int, default=0)
    pl.add_argument("--out", default="plots")
    pl.set_defaults(func=cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if "--deterministic" in argv and not os.environ.get("CAASIM_PINNED"):
        _reexec_single_threaded(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
