"""Command-line interface: simulate, degrade, train, eval, export-maps.

Exit codes: 0 success, 2 configuration/argument error, 3 I/O error,
4 data-format error (corrupt or mismatched files).
"""

from __future__ import annotations

import argparse
import sys
from collections import Counter

from .classify import to_range_doppler
from .degrade import complex_to_channels
from .errors import ConfigError, DataFormatError
from .io import (
    load_checkpoint,
    load_dataset,
    load_run_config,
    run_config_keys,
    save_checkpoint,
    save_dataset,
    write_map_csv,
    write_metrics_csv,
    write_pgm,
)
from .simulate import RadarParams, default_gesture_templates, generate_dataset
from .tensor import Tensor, no_grad
from .training import (
    build_bundle,
    bundle_state_dict,
    degrade_record,
    evaluate,
    load_bundle_state,
    prepare_record,
    reconstruct,
    split_dataset,
    train_regime,
)


def _cmd_simulate(args: argparse.Namespace) -> int:
    templates = default_gesture_templates()
    if not 2 <= args.classes <= len(templates):
        raise ConfigError(f"--classes must be in [2, {len(templates)}], got {args.classes}")
    if args.per_class < 1:
        raise ConfigError(f"--per-class must be positive, got {args.per_class}")
    if args.seed < 0:
        raise ConfigError(f"--seed must be non-negative, got {args.seed}")
    radar = RadarParams(
        f_c=args.fc,
        prf=args.prf,
        m_pulses=args.m_pulses,
        n_fast=args.n_fast,
        k_frames=args.k_frames,
        r_min=args.r_min,
        r_max=args.r_max,
    )
    records = generate_dataset(
        templates[: args.classes], args.per_class, radar=radar, rng_seed=args.seed
    )
    save_dataset(args.out, records, num_classes=args.classes)
    histogram = Counter(label for _, label in records)
    parts = " ".join(f"{c}={histogram.get(c, 0)}" for c in range(args.classes))
    print(f"wrote {len(records)} records to {args.out} (classes: {parts})")
    return 0


def _cmd_degrade(args: argparse.Namespace) -> int:
    if args.seed < 0:
        raise ConfigError(f"--seed must be non-negative, got {args.seed}")
    records, header = load_dataset(args.infile)
    degraded = [
        (degrade_record(cube, i, args.ds, args.df, args.noise, args.seed), label)
        for i, (cube, label) in enumerate(records)
    ]
    dims = (header.k, header.m // args.ds, header.n // args.df)
    save_dataset(args.out, degraded, num_classes=header.num_classes, dims=dims)
    print(f"wrote {len(degraded)} records to {args.out} (cube {dims})")
    return 0


def _load_lr_records(path: str, hr_header, train_cfg, hr_records):
    lr_records, lr_header = load_dataset(path)
    want = (
        hr_header.k,
        hr_header.m // train_cfg.d_s,
        hr_header.n // train_cfg.d_f,
        hr_header.num_records,
    )
    got = (lr_header.k, lr_header.m, lr_header.n, lr_header.num_records)
    if got != want:
        raise ConfigError(
            f"LR dataset {path} has (K, M, N, records) = {got}, "
            f"expected {want} for factors ({train_cfg.d_s}, {train_cfg.d_f})"
        )
    if [label for _, label in lr_records] != [label for _, label in hr_records]:
        raise ConfigError(f"LR dataset {path} labels disagree with the HR dataset")
    return [cube for cube, _ in lr_records]


def _cmd_train(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    records, header = load_dataset(args.hr)
    lr_records = None
    if args.lr_data:
        lr_records = _load_lr_records(args.lr_data, header, config.train, records)
    result = train_regime(
        records, config.train, config.sr, config.classifier, lr_records=lr_records
    )
    save_checkpoint(args.out_ckpt, bundle_state_dict(result.bundle))
    write_metrics_csv(args.metrics_csv, result.history)
    final = result.history[-1]
    print(
        f"trained {config.train.regime} for {len(result.history)} epochs on "
        f"{len(result.train_indices)} records; final accuracy {final.accuracy:.4f}, "
        f"psnr {final.psnr:.2f}"
    )
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    records, _ = load_dataset(args.data)
    bundle = build_bundle(config.train, config.classifier, config.sr)
    load_bundle_state(bundle, load_checkpoint(args.ckpt))
    _, val_indices = split_dataset(len(records), config.train.rng_seed)
    total_epochs = config.train.epochs * (2 if config.train.regime == "frozen-sr" else 1)
    row = evaluate(bundle, records, config.train, indices=val_indices, epoch=total_epochs - 1)
    write_metrics_csv(args.metrics_csv, [row])
    print(
        f"evaluated {len(val_indices)} records: accuracy {row.accuracy:.4f}, "
        f"psnr {row.psnr:.2f}, ms_ssim {row.ms_ssim:.4f}"
    )
    return 0


def _cmd_export_maps(args: argparse.Namespace) -> int:
    records, _ = load_dataset(args.data)
    if not 0 <= args.record < len(records):
        raise ConfigError(f"--record {args.record} out of range for {len(records)} records")
    cube, label = records[args.record]
    if args.ckpt:
        if not args.config:
            raise ConfigError("--ckpt needs --config to shape the reconstruction network")
        config = load_run_config(args.config)
        train_cfg = config.train
        prepared = prepare_record(
            cube,
            label,
            args.record,
            train_cfg.d_s,
            train_cfg.d_f,
            train_cfg.noise_sigma_rel,
            train_cfg.rng_seed,
        )
        bundle = build_bundle(train_cfg, config.classifier, config.sr)
        load_bundle_state(bundle, load_checkpoint(args.ckpt))
        with no_grad():
            sr = reconstruct(bundle, prepared.lr, train_cfg.d_s, train_cfg.d_f)
            maps = to_range_doppler(sr).data
    else:
        with no_grad():
            maps = to_range_doppler(Tensor(complex_to_channels(cube))).data
    for k in range(maps.shape[0]):
        write_pgm(f"{args.out_prefix}_frame{k}.pgm", maps[k])
        write_map_csv(f"{args.out_prefix}_frame{k}.csv", maps[k])
    print(
        f"wrote {maps.shape[0]} frames of {maps.shape[1]}x{maps.shape[2]} maps "
        f"to {args.out_prefix}_frame*.pgm/.csv"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    radar = RadarParams()
    parser = argparse.ArgumentParser(
        prog="radargest",
        description="Pulse-radar gesture pipeline: simulation, degradation, "
        "super-resolution training, evaluation, and map export.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a labeled gesture dataset")
    p.add_argument("--classes", type=int, default=4, help="number of gesture classes")
    p.add_argument("--per-class", type=int, default=50, help="recordings per class")
    p.add_argument("--seed", type=int, default=0, help="dataset RNG seed")
    p.add_argument("--out", required=True, help="output dataset path")
    p.add_argument("--k-frames", type=int, default=radar.k_frames, help="frames per recording")
    p.add_argument("--m-pulses", type=int, default=radar.m_pulses, help="pulses per frame")
    p.add_argument("--n-fast", type=int, default=radar.n_fast, help="range samples per pulse")
    p.add_argument("--fc", type=float, default=radar.f_c, help="carrier frequency in Hz")
    p.add_argument("--prf", type=float, default=radar.prf, help="pulse repetition frequency in Hz")
    p.add_argument("--r-min", type=float, default=radar.r_min, help="sweep start range in m")
    p.add_argument("--r-max", type=float, default=radar.r_max, help="sweep end range in m")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("degrade", help="downsample and noise an existing dataset")
    p.add_argument("--in", dest="infile", required=True, help="input dataset path")
    p.add_argument("--out", required=True, help="output dataset path")
    p.add_argument("--ds", type=int, default=2, help="slow-time (pulse) factor")
    p.add_argument("--df", type=int, default=2, help="fast-time (range) factor")
    p.add_argument("--noise", type=float, default=0.01, help="relative noise sigma")
    p.add_argument("--seed", type=int, default=0, help="noise RNG seed")
    p.set_defaults(func=_cmd_degrade)

    config_help = "run configuration file; keys: " + ", ".join(run_config_keys())
    p = sub.add_parser("train", help="train a regime and write checkpoint + metrics")
    p.add_argument("--config", required=True, help=config_help)
    p.add_argument("--hr", required=True, help="full-resolution dataset path")
    p.add_argument("--lr-data", help="optional pre-degraded dataset for (d_s, d_f)")
    p.add_argument("--out-ckpt", required=True, help="output checkpoint path")
    p.add_argument("--metrics-csv", required=True, help="output per-epoch metrics CSV")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset's validation split")
    p.add_argument("--ckpt", required=True, help="checkpoint path")
    p.add_argument("--data", required=True, help="dataset path")
    p.add_argument("--config", required=True, help=config_help)
    p.add_argument("--metrics-csv", required=True, help="output single-row metrics CSV")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("export-maps", help="write range-Doppler maps as PGM + raw CSV")
    p.add_argument("--data", required=True, help="dataset path")
    p.add_argument("--record", type=int, default=0, help="record index to export")
    p.add_argument("--out-prefix", required=True, help="output path prefix")
    p.add_argument("--ckpt", help="optional checkpoint: export super-resolved maps")
    p.add_argument("--config", help="run configuration (required with --ckpt)")
    p.set_defaults(func=_cmd_export_maps)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
