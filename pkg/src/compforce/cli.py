"""Command-line front end: ``compforce {run,sweep,compare,signal-dump,plot}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import plotting
from .config import (BENCHMARK_TEXT, METHODS, ConfigError, ExperimentConfig, config_dump,
                     config_load, parse_overrides)
from .harness import (convergence_step, run_experiment, seed_sweep, write_run_csv,
                      write_summary_csv)
from .reservoir import save_model
from .signals import mackey_glass

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3, 4
TABLE_COLUMNS = ["method", "train_mse", "predict_mse", "n_runs", "n_diverged"]

log = logging.getLogger("compforce")


def parse_seeds(text: str) -> list[int]:
    """``"1..10"`` (inclusive), ``"3,5,8"`` or a single integer."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    seeds = [int(s) for s in text.split(",") if s.strip()]
    if not seeds:
        raise argparse.ArgumentTypeError("seed list is empty")
    return seeds


def _seeds_arg(text):
    try:
        return parse_seeds(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def load_effective_config(args) -> ExperimentConfig:
    if args.config in (None, ""):
        text = ""
    elif args.config == "benchmark":
        text = BENCHMARK_TEXT
    else:
        text = Path(args.config).read_text(encoding="utf-8")
    cfg = config_load(text)
    cfg = cfg.replace(**parse_overrides(args.set or []))
    if getattr(args, "method", None):
        cfg = cfg.replace(method=args.method)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_effective(out: Path, cfg: ExperimentConfig, extra: str = "") -> None:
    (out / "effective_config.txt").write_text(config_dump(cfg) + extra, encoding="utf-8")


def _fmt_mse(v) -> str:
    return "n/a" if v is None else f"{v:.6g}"


def cmd_run(args) -> int:
    cfg = load_effective_config(args)
    out = _out_dir(args)
    _write_effective(out, cfg)
    rec = run_experiment(cfg, backend=args.backend)
    stem = f"{cfg.method}_{cfg.seed}"
    write_run_csv(rec, out / f"run_{stem}.csv")
    save_model(out / f"model_{stem}.npz", rec.model, rec.final_state)
    if rec.diverged:
        print(f"method={cfg.method} seed={cfg.seed} diverged at step {rec.diverged_at}")
        return EXIT_DIVERGED
    print(f"method={cfg.method} seed={cfg.seed} train_mse={_fmt_mse(rec.train_mse)} "
          f"predict_mse={_fmt_mse(rec.predict_mse)} converge_step={convergence_step(rec)}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_effective_config(args)
    out = _out_dir(args)
    _write_effective(out, cfg, f"# seeds = {args.seeds[0]}..{args.seeds[-1]}\n")
    res = seed_sweep(cfg, args.seeds, jobs=args.jobs, backend=args.backend)
    write_summary_csv(res.records, out / f"sweep_{cfg.method}.csv")
    st = res.stats[cfg.method]
    print(f"method={cfg.method} runs={st.n_runs} diverged={st.n_diverged}")
    print(f"  train_mse   median={st.train_median:.6g} min={st.train_min:.6g} "
          f"max={st.train_max:.6g}")
    print(f"  predict_mse median={st.predict_median:.6g} min={st.predict_min:.6g} "
          f"max={st.predict_max:.6g}")
    return EXIT_DIVERGED if st.n_diverged else EXIT_OK


def format_table(stats) -> str:
    head = f"{'method':<16}{'training MSE':>16}{'prediction MSE':>16}{'runs':>6}{'diverged':>10}"
    lines = [head, "-" * len(head)]
    for m in METHODS:
        if m in stats:
            s = stats[m]
            lines.append(f"{m:<16}{s.train_median:>16.6g}{s.predict_median:>16.6g}"
                         f"{s.n_runs:>6}{s.n_diverged:>10}")
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    cfg = load_effective_config(args)
    out = _out_dir(args)
    _write_effective(out, cfg, f"# seeds = {','.join(map(str, args.seeds))}\n")
    res = seed_sweep(cfg, args.seeds, methods=METHODS, jobs=args.jobs, backend=args.backend)
    write_summary_csv(res.records, out / "compare_summary.csv")
    with open(out / "compare_table.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for m in METHODS:
            s = res.stats[m]
            w.writerow([m, repr(s.train_median), repr(s.predict_median), s.n_runs, s.n_diverged])
    table = format_table(res.stats)
    (out / "compare_table.txt").write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    return EXIT_DIVERGED if any(s.n_diverged for s in res.stats.values()) else EXIT_OK


def cmd_signal_dump(args) -> int:
    cfg = load_effective_config(args)
    out = _out_dir(args)
    n = args.steps if args.steps is not None else cfg.train_steps + cfg.predict_steps
    f = mackey_glass(n, cfg.mgs_tau, cfg.mgs_init, skip=cfg.washout_steps)
    path = out / "signal.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "f"])
        for k, v in enumerate(f):
            w.writerow([k, repr(float(v))])
    print(f"wrote {n} values to {path}")
    return EXIT_OK


def _window_arg(text: str):
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be START:END, got {text!r}") from None


def cmd_plot(args) -> int:
    out = Path(args.output) if args.output else Path(args.input).with_suffix(f".{args.kind}.svg")
    out.parent.mkdir(parents=True, exist_ok=True)
    plotting.cmd_plot(args.kind, args.input, out, args.window)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compforce",
        description="FORCE-trained echo state networks on the Mackey-Glass series.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeds=False):
        p.add_argument("--config", help="config file path, or 'benchmark' for the pinned setting")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--out-dir", default="out")
        p.add_argument("--backend", choices=("auto", "numba", "numpy"), default="auto")
        if seeds:
            p.add_argument("--seeds", type=_seeds_arg, required=True,
                           help="seed list: N..M (inclusive) or comma-separated")
            p.add_argument("--jobs", type=int, default=1)
        else:
            p.add_argument("--seed", type=int)

    p = sub.add_parser("run", help="train and free-run one network")
    common(p)
    p.add_argument("--method", choices=METHODS)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="one method over many seeds")
    common(p, seeds=True)
    p.add_argument("--method", choices=METHODS)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="all three methods over many seeds")
    common(p, seeds=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("signal-dump", help="write the Mackey-Glass series as CSV")
    common(p)
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_signal_dump)

    p = sub.add_parser("plot", help="render an SVG from a run or compare CSV")
    p.add_argument("--kind", choices=plotting.KINDS, required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--window", type=_window_arg, metavar="START:END")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (plotting.PlotError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
