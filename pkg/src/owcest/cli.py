"""Command-line entry points.

Subcommands cover the full workflow: corpus generation, correlation
estimation, network training and the three evaluation runs. Every command
takes --config (flat key-value file; defaults otherwise), --seed and --out,
and exits nonzero with a diagnostic on any error.

Typical pipeline:

    owcest gen-data  --class hds --count 100000 --out hds.owcd --seed 1
    owcest train     --data hds.owcd --out hds.owcw --seed 2
    owcest estimate-corr --count 100000 --out corr.owcw --seed 3
    owcest eval-nmse-snr --weights lds=l.owcw --weights mds=m.owcw \
        --weights hds=h.owcw --corr corr.owcw --trials 2000 --out nmse.csv
"""

import argparse
import sys

import numpy as np

from .channel import DelayClass, bulk_realizations
from .classical import estimate_correlations
from .config import ExperimentConfig, load_config
from .dataset import MIXED_TAG, generate_dataset, read_dataset
from .experiments import (
    BER_COLUMNS,
    NMSE_SNR_COLUMNS,
    NMSE_TIME_COLUMNS,
    run_ber_vs_snr,
    run_nmse_vs_snr,
    run_nmse_vs_time,
    write_csv,
)
from .modem import default_pattern
from .nn.train import train
from .selector import SelectorBank
from .serialization import (
    load_correlations,
    load_weights,
    save_correlations,
    save_weights,
)

_CLASS_BY_NAME = {
    "lds": DelayClass.LDS,
    "mds": DelayClass.MDS,
    "hds": DelayClass.HDS,
    "mixed": MIXED_TAG,
}


def _add_common(parser):
    parser.add_argument("--config", help="flat key-value configuration file")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--out", required=True, help="output path")


def _add_eval_args(parser):
    _add_common(parser)
    parser.add_argument("--trials", type=int, help="trials per grid point")
    parser.add_argument("--snr-min", type=float, help="lowest SNR in dB")
    parser.add_argument("--snr-max", type=float, help="highest SNR in dB")
    parser.add_argument("--snr-step", type=float, help="SNR grid step in dB")
    parser.add_argument(
        "--class",
        dest="delay_class",
        choices=sorted(_CLASS_BY_NAME),
        default="mixed",
        help="channel ensemble for the run",
    )
    parser.add_argument(
        "--weights",
        action="append",
        default=[],
        metavar="BRANCH=PATH",
        help="branch weights file, repeatable (lds=..., mds=..., hds=...)",
    )
    parser.add_argument("--corr", help="correlation set file (needed for mmse)")
    parser.add_argument(
        "--estimators", help="comma list from: ls, mmse, hds, adaptive, direct"
    )


def _experiment_config(cfg, args):
    exp = cfg.experiment
    grid = exp.snr_grid
    if args.snr_min is not None or args.snr_max is not None or args.snr_step is not None:
        lo = args.snr_min if args.snr_min is not None else grid[0]
        hi = args.snr_max if args.snr_max is not None else grid[-1]
        step = args.snr_step if args.snr_step is not None else 1.0
        if step <= 0 or hi < lo:
            raise ValueError("invalid SNR grid")
        grid = tuple(float(s) for s in np.arange(lo, hi + step / 2.0, step))
    return ExperimentConfig(
        snr_grid=grid,
        trials=args.trials if args.trials is not None else exp.trials,
        estimators=(
            tuple(s.strip() for s in args.estimators.split(","))
            if args.estimators
            else exp.estimators
        ),
        time_duration_s=exp.time_duration_s,
        class_dwell_s=exp.class_dwell_s,
        slots_per_second=exp.slots_per_second,
    )


def _load_bank(cfg, specs):
    if not specs:
        return None
    paths = {}
    for spec in specs:
        branch, _, path = spec.partition("=")
        branch = branch.strip().lower()
        if branch not in ("lds", "mds", "hds") or not path:
            raise ValueError(f"--weights expects BRANCH=PATH, got {spec!r}")
        paths[branch] = path
    missing = {"lds", "mds", "hds"} - set(paths)
    if missing:
        raise ValueError(f"missing weights for branches: {sorted(missing)}")
    return SelectorBank(
        lds=load_weights(paths["lds"]),
        mds=load_weights(paths["mds"]),
        hds=load_weights(paths["hds"]),
        lds_template=cfg.lds_template,
        hds_template=cfg.hds_template,
        l_cp=cfg.modem.l_cp,
    )


def _replace_experiment(cfg, exp):
    from dataclasses import replace

    return replace(cfg, experiment=exp)


def cmd_gen_data(args):
    cfg = load_config(args.config)
    snr_range = (
        args.snr_min if args.snr_min is not None else cfg.experiment.snr_grid[0],
        args.snr_max if args.snr_max is not None else cfg.experiment.snr_grid[-1],
    )
    generate_dataset(
        cfg.scenario,
        cfg.modem,
        _CLASS_BY_NAME[args.delay_class],
        args.count,
        snr_range,
        args.seed,
        path=args.out,
        lds=cfg.lds_template,
        hds=cfg.hds_template,
    )
    print(f"wrote {args.count} {args.delay_class} samples to {args.out}")
    return 0


def cmd_estimate_corr(args):
    cfg = load_config(args.config)
    realizations = bulk_realizations(cfg.scenario, args.seed, args.count)
    corr = estimate_correlations(
        realizations, default_pattern(cfg.modem), cfg.modem.n_f
    )
    save_correlations(args.out, corr)
    print(f"wrote correlation set ({args.count} realizations) to {args.out}")
    return 0


def cmd_train(args):
    cfg = load_config(args.config)
    ds = read_dataset(args.data)
    train_cfg = cfg.train
    if args.epochs is not None:
        from dataclasses import replace

        train_cfg = replace(train_cfg, epochs=args.epochs)
    if args.seed is not None:
        from dataclasses import replace

        train_cfg = replace(train_cfg, seed=args.seed)
    weights, history = train(
        ds.pilot_ls.astype(np.complex128),
        ds.true_h.astype(np.complex128),
        train_cfg,
    )
    save_weights(args.out, weights)
    print(
        f"trained on {len(ds)} {ds.class_name} samples for {train_cfg.epochs} epochs; "
        f"final train loss {history['train_loss'][-1]:.6f}, "
        f"val loss {history['val_loss'][-1]:.6f}; wrote {args.out}"
    )
    return 0


def _run_eval(args, runner, columns, **kw):
    cfg = load_config(args.config)
    cfg = _replace_experiment(cfg, _experiment_config(cfg, args))
    bank = _load_bank(cfg, args.weights)
    corr = load_correlations(args.corr) if args.corr else None
    rows = runner(cfg, args.seed, bank=bank, corr=corr, **kw)
    write_csv(args.out, columns, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_eval_nmse_snr(args):
    return _run_eval(
        args,
        run_nmse_vs_snr,
        NMSE_SNR_COLUMNS,
        delay_class=_CLASS_BY_NAME[args.delay_class],
    )


def cmd_eval_nmse_time(args):
    return _run_eval(args, run_nmse_vs_time, NMSE_TIME_COLUMNS)


def cmd_eval_ber(args):
    return _run_eval(
        args,
        run_ber_vs_snr,
        BER_COLUMNS,
        delay_class=_CLASS_BY_NAME[args.delay_class],
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="owcest",
        description="Indoor optical wireless DCO-OFDM channel estimation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a labeled training corpus")
    _add_common(p)
    p.add_argument("--count", type=int, required=True, help="samples to generate")
    p.add_argument(
        "--class",
        dest="delay_class",
        choices=sorted(_CLASS_BY_NAME),
        default="mixed",
    )
    p.add_argument("--snr-min", type=float, help="lower SNR draw bound in dB")
    p.add_argument("--snr-max", type=float, help="upper SNR draw bound in dB")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("estimate-corr", help="estimate ensemble correlations")
    _add_common(p)
    p.add_argument("--count", type=int, default=100_000, help="corpus realizations")
    p.set_defaults(func=cmd_estimate_corr)

    p = sub.add_parser("train", help="train one branch network from a corpus")
    _add_common(p)
    p.add_argument("--data", required=True, help="training corpus (.owcd)")
    p.add_argument("--epochs", type=int, help="override the configured epoch count")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval-nmse-snr", help="NMSE versus SNR experiment")
    _add_eval_args(p)
    p.set_defaults(func=cmd_eval_nmse_snr)

    p = sub.add_parser("eval-nmse-time", help="NMSE versus time experiment")
    _add_eval_args(p)
    p.set_defaults(func=cmd_eval_nmse_time)

    p = sub.add_parser("eval-ber", help="BER versus SNR experiment")
    _add_eval_args(p)
    p.set_defaults(func=cmd_eval_ber)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
