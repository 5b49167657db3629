"""Command line entry point ``qmle``.

Exit status: 0 on success, 1 on a configuration or input error, 2 when a
sweep disagrees with theory more often than the alarm rate.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import decomposition, flipflop, harness, stability
from .representation import RepTuple
from .thresholds import Field, Model, classify, thresholds

EXIT_OK, EXIT_CONFIG, EXIT_MISMATCH = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def default_seed() -> int:
    env = os.environ.get("QMLE_SEED")
    if env is None:
        return harness.DEFAULT_SEED
    try:
        return int(env, 0)
    except ValueError:
        raise harness.ConfigError(f"QMLE_SEED is not an integer: {env!r}") from None


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = json.dumps(v)
        else:
            out[key] = v
    return out


def emit(obj: dict, fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "csv":
        flat = _flatten(obj)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(flat), lineterminator="\n")
        writer.writeheader()
        writer.writerow(flat)
        out.write(buf.getvalue())
    else:
        out.write(json.dumps(obj, indent=2, default=_default) + "\n")


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _load_sample(path) -> RepTuple:
    try:
        with open(path) as fh:
            data = json.load(fh)
        return RepTuple.from_json_dict(data)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise harness.ConfigError(f"cannot read sample {path}: {exc}") from exc


def cmd_thresholds(args) -> int:
    emit(thresholds(args.model, args.p, args.q).to_dict(), args.format)
    return EXIT_OK


def cmd_classify(args) -> int:
    v = classify(args.model, args.p, args.q, args.m, args.field)
    emit({"model": Model(args.model).value, "p": args.p, "q": args.q, "m": args.m, "field": args.field, **v.to_dict()}, args.format)
    return EXIT_OK


def cmd_candec(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    if args.star:
        cd = decomposition.candec_star(args.p, args.q, args.m, seed, numeric=args.numeric)
    else:
        cd = decomposition.candec_kronecker(args.m, args.p, args.q, seed, numeric=args.numeric)
    emit({"m": args.m, "p": args.p, "q": args.q, "quiver": "star" if args.star else "kronecker", **cd.to_dict()}, args.format)
    return EXIT_OK


def cmd_stability(args) -> int:
    Y = _load_sample(args.input)
    if args.exact_star:
        verdict = stability.star_exact_stability(Y, rtol=args.tau_rank)
    else:
        seed = args.seed if args.seed is not None else default_seed()
        verdict = stability.lr_stability(Y, np.random.default_rng(seed), eps=args.eps, max_iter=args.max_iter)
    emit(verdict.to_dict(), args.format)
    return EXIT_OK


def cmd_mle(args) -> int:
    Y = _load_sample(args.input)
    seed = args.seed if args.seed is not None else default_seed()
    kw = dict(tol=args.tol, max_iter=args.max_iter, tau_stat=args.tau_stat)
    res = flipflop.flip_flop(Y, args.model, **kw)
    out = {"mle": res.to_dict()}
    if res.converged and args.starts >= 2:
        probe = flipflop.uniqueness_probe(Y, args.model, args.starts, seed, args.tau_unique, **kw)
        out["uniqueness"] = probe.to_dict()
    emit(out, args.format)
    return EXIT_OK


def _tolerances(args) -> dict:
    tol = {}
    for key in ("tol", "tau_stat", "tau_unique", "max_iter", "n_starts"):
        val = getattr(args, key, None)
        if val is not None:
            tol[key] = val
    return tol


def cmd_sweep(args) -> int:
    if args.config:
        cfg = harness.SweepConfig.from_file(args.config)
        if args.workers:
            cfg.workers = args.workers
        if args.diagnostics:
            cfg.diagnostics_path = args.diagnostics
    else:
        cfg = harness.SweepConfig(
            model=args.model,
            p_range=list(range(args.p_min, args.p_max + 1)),
            q_range=list(range(args.q_min, args.q_max + 1)),
            m_range=list(range(args.m_min, args.m_max + 1)),
            trials=args.trials,
            master_seed=args.seed if args.seed is not None else default_seed(),
            field=args.field,
            tolerances=_tolerances(args),
            alarm_rate=args.alarm_rate,
            workers=args.workers or 1,
            include_runtime=args.runtime,
            diagnostics_path=args.diagnostics,
        )
    report = harness.run_sweep(cfg)
    text = report.to_csv() if args.format == "csv" else report.to_json()
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"cannot write report: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        sys.stdout.write(text)
    return EXIT_MISMATCH if report.alarm(cfg.alarm_rate) else EXIT_OK


def cmd_dkh(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    report = harness.dkh_table(args.trials, seed, args.field, args.workers or 1)
    if args.format == "csv":
        sys.stdout.write(report.to_csv())
    elif args.format == "json":
        sys.stdout.write(report.to_json())
    else:
        print(harness.format_table(report))
    return EXIT_MISMATCH if report.alarm(args.alarm_rate) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qmle", description="Existence and uniqueness of Kronecker-structured MLEs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, formats=("json", "csv")):
        sp.add_argument("--format", choices=formats, default=formats[0])

    def dims(sp, m=True):
        sp.add_argument("--p", type=int, required=True)
        sp.add_argument("--q", type=int, required=True)
        if m:
            sp.add_argument("--m", type=int, required=True)

    model_kw = dict(choices=[m.value for m in Model], default=Model.MATRIX_NORMAL.value)
    field_kw = dict(choices=[f.value for f in Field])

    sp = sub.add_parser("thresholds", help="sample-size thresholds mlt_b, mlt_e, mlt_u")
    sp.add_argument("--model", **model_kw)
    dims(sp, m=False)
    common(sp)
    sp.set_defaults(func=cmd_thresholds)

    sp = sub.add_parser("classify", help="generic verdict for m samples")
    sp.add_argument("--model", **model_kw)
    sp.add_argument("--field", default="real", **field_kw)
    dims(sp)
    common(sp)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("candec", help="canonical decomposition of a dimension vector")
    dims(sp)
    sp.add_argument("--numeric", action="store_true", help="decompose random samples even when a formula applies")
    sp.add_argument("--star", action="store_true", help="star quiver instead of the Kronecker quiver")
    sp.add_argument("--seed", type=int)
    common(sp)
    sp.set_defaults(func=cmd_candec)

    sp = sub.add_parser("stability", help="stability verdict for a sample file")
    sp.add_argument("--input", required=True)
    sp.add_argument("--exact-star", action="store_true", help="proportional-covariance action, exact subset test")
    sp.add_argument("--tau-rank", type=float, default=stability.TAU_RANK)
    sp.add_argument("--eps", type=float, default=None, help="scaling stopping threshold")
    sp.add_argument("--max-iter", type=int, default=10_000)
    sp.add_argument("--seed", type=int)
    common(sp)
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("mle", help="flip-flop MLE for a sample file")
    sp.add_argument("--input", required=True)
    sp.add_argument("--model", **model_kw)
    sp.add_argument("--starts", type=int, default=10)
    sp.add_argument("--tol", type=float, default=flipflop.TOL)
    sp.add_argument("--tau-stat", type=float, default=flipflop.TAU_STAT)
    sp.add_argument("--tau-unique", type=float, default=flipflop.TAU_UNIQUE)
    sp.add_argument("--max-iter", type=int, default=flipflop.MAX_ITER)
    sp.add_argument("--seed", type=int)
    common(sp)
    sp.set_defaults(func=cmd_mle)

    sp = sub.add_parser("sweep", help="Monte Carlo comparison of theory and empirics")
    sp.add_argument("--config")
    sp.add_argument("--model", **model_kw)
    sp.add_argument("--field", default="complex", **field_kw)
    for name in ("p", "q", "m"):
        sp.add_argument(f"--{name}-min", type=int, default=1)
        sp.add_argument(f"--{name}-max", type=int, default=4)
    sp.add_argument("--trials", type=int, default=50)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.add_argument("--diagnostics", help="file receiving the samples that disagree with theory")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--alarm-rate", type=float, default=harness.ALARM_RATE)
    sp.add_argument("--runtime", action="store_true", help="include per-cell runtimes (breaks byte-identical reruns)")
    sp.add_argument("--tol", type=float)
    sp.add_argument("--tau-stat", type=float)
    sp.add_argument("--tau-unique", type=float)
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--n-starts", type=int)
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("dkh", help="the (5..8, 4) table with two samples")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--field", default="real", **field_kw)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--alarm-rate", type=float, default=harness.ALARM_RATE)
    common(sp, ("table", "json", "csv"))
    sp.set_defaults(func=cmd_dkh)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (harness.ConfigError, ValueError) as exc:
        print(f"qmle: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
