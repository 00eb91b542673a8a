"""Command-line front end.

Commands: ``run``, ``compare``, ``sweep``, ``check``, ``presets``. Exit codes
are 0 (success), 1 (configuration, usage or contract error, failed checks) and
2 (numeric abort). Output goes to ``--out``, defaulting to ``$RABIC_OUT_DIR``
or ``./rabic-out``.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .checks import run_checks
from .config import apply_overrides, load_config, load_raw, parse_config, preset_names, set_param
from .exceptions import NumericError, RabicError, SimulationDiverged
from .simulation import atomic_write_text, compare_runs, compute_metrics, run_scenario, write_report

OUT_ENV = "RABIC_OUT_DIR"
EXIT_OK, EXIT_ERROR, EXIT_NUMERIC = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; keep 2 reserved for numeric aborts
    def error(self, message):
        raise _UsageError(message)


def build_parser():
    p = _Parser(prog="rabic", description="Robust adaptive backstepping impedance control simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, multi=False):
        if multi:
            sp.add_argument("--config", action="append", required=True, metavar="PATH", help="scenario file or preset")
        else:
            sp.add_argument("--config", required=True, metavar="PATH", help="scenario file or preset")
        sp.add_argument("--out", metavar="DIR", help=f"output directory (default ${OUT_ENV} or ./rabic-out)")
        sp.add_argument("--controller", choices=("pd", "rabic"))
        sp.add_argument("--seed", type=int, metavar="N")
        sp.add_argument("--dt", type=float, metavar="SECONDS")

    common(sub.add_parser("run", help="run one scenario"))
    common(sub.add_parser("compare", help="run two scenarios (or PD vs RABIC on one) and compare"), multi=True)
    sw = sub.add_parser("sweep", help="run one scenario per parameter value")
    common(sw)
    sw.add_argument("--param", required=True, metavar="PATH", help="dotted config path, e.g. sim.seed")
    sw.add_argument("--values", required=True, metavar="CSVLIST", help="comma-separated values")
    ck = sub.add_parser("check", help="run the built-in invariant suite")
    ck.add_argument("--out", metavar="DIR")
    ck.add_argument("--seed", type=int, default=0, metavar="N")
    sub.add_parser("presets", help="list shipped presets")
    return p


def _out_dir(arg):
    return Path(arg or os.environ.get(OUT_ENV) or "rabic-out")


def _err(msg):
    print(f"rabic: {msg}", file=sys.stderr)


def _run_one(cfg, out, stem="log"):
    """Run and write ``<stem>.csv``; on divergence write the partial log and re-raise."""
    try:
        log = run_scenario(cfg)
    except SimulationDiverged as exc:
        if exc.log is not None:
            exc.log.to_csv(out / f"{stem}.csv")
        raise
    log.to_csv(out / f"{stem}.csv")
    return log


def cmd_run(args):
    cfg = load_config(args.config, controller=args.controller, seed=args.seed, dt=args.dt)
    out = _out_dir(args.out)
    log = _run_one(cfg, out)
    metrics = compute_metrics(log).as_dict()
    report = {"scenario": cfg.name, "controller": cfg.controller, "config_hash": cfg.config_hash, **metrics}
    write_report(report, out / "metrics")
    print(f"wrote {out / 'log.csv'} ({len(log)} rows)")
    return EXIT_OK


def cmd_compare(args):
    out = _out_dir(args.out)
    over = dict(seed=args.seed, dt=args.dt)
    if len(args.config) == 1:
        cfg_a = load_config(args.config[0], controller="rabic", **over)
        cfg_b = load_config(args.config[0], controller="pd", **over)
    elif len(args.config) == 2:
        cfg_a = load_config(args.config[0], controller=args.controller, **over)
        cfg_b = load_config(args.config[1], controller=args.controller, **over)
    else:
        raise _UsageError("compare takes one or two --config values")
    if cfg_a.geometry_hash != cfg_b.geometry_hash:
        raise RabicError("scenarios have different geometry; nothing to compare")
    log_a = _run_one(cfg_a, out, "log_a")
    log_b = _run_one(cfg_b, out, "log_b")
    report = compare_runs(log_a, log_b)
    write_report(report, out / "comparison")
    ratio = report["terminal_force_ratio"]
    print(f"terminal_force_ratio = {'n/a' if ratio is None else f'{ratio:.4g}'}")
    return EXIT_OK


def _parse_value(text):
    text = text.strip()
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _sweep_worker(job):
    raw, out = job
    try:
        log = _run_one(parse_config(raw), Path(out))
    except SimulationDiverged as exc:
        return {"status": "diverged", "message": str(exc)}
    return {"status": "ok", **compute_metrics(log).as_dict()}


def cmd_sweep(args):
    out = _out_dir(args.out)
    values = [_parse_value(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise _UsageError("--values is empty")
    base = apply_overrides(load_raw(args.config), controller=args.controller, seed=args.seed, dt=args.dt)
    jobs = []
    for i, v in enumerate(values):
        raw = set_param(base, args.param, v)
        parse_config(raw)  # fail fast, before any worker starts
        jobs.append((raw, str(out / f"run_{i:03d}")))
    workers = min(len(jobs), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_worker, jobs))
    else:
        rows = [_sweep_worker(j) for j in jobs]
    table = [{"index": i, args.param: v, **row} for i, (v, row) in enumerate(zip(values, rows))]
    keys = list(dict.fromkeys(k for row in table for k in row))
    lines = ["\t".join(keys)]
    for row in table:
        lines.append("\t".join(_fmt(row.get(k)) for k in keys))
    atomic_write_text(out / "sweep.tsv", "\n".join(lines) + "\n")
    atomic_write_text(out / "sweep.json", json.dumps(table, indent=2) + "\n")
    print("\n".join(lines))
    return EXIT_NUMERIC if any(r["status"] != "ok" for r in rows) else EXIT_OK


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def cmd_check(args, fault=None):
    results = run_checks(fault=fault, seed=args.seed)
    lines = []
    for r in results:
        lines.append(f"{'PASS' if r.ok else 'FAIL'} {r.name} ({r.seconds:.2f} s): {r.detail}")
    print("\n".join(lines))
    if args.out:
        atomic_write_text(Path(args.out) / "check.txt", "\n".join(lines) + "\n")
    return EXIT_OK if all(r.ok for r in results) else EXIT_ERROR


def cmd_presets(args):
    for name in preset_names():
        print(name)
    return EXIT_OK


_COMMANDS = {"run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep, "check": cmd_check, "presets": cmd_presets}


def main(argv=None, fault=None):
    """Entry point; returns the exit code. ``fault`` is forwarded to ``check`` for self-tests."""
    try:
        args = build_parser().parse_args(argv)
        if args.command == "check":
            return cmd_check(args, fault=fault)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        _err(f"usage: {exc}")
        return EXIT_ERROR
    except NumericError as exc:
        _err(f"numeric abort: {exc}")
        return EXIT_NUMERIC
    except RabicError as exc:
        _err(str(exc))
        return EXIT_ERROR
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
