"""Command-line harness: ingestion, synthetic data, backtests, comparisons, recovery study.

Subcommands::

    gpvol ingest-check FILE...
    gpvol synth --generator {sinvol,garch,gp} --n N --out FILE
    gpvol backtest --input FILE --strategy GpAbs/Matern32 --out DIR
    gpvol compare --input FILE... --strategies ... --out DIR
    gpvol recovery --out DIR

Every option can also come from a flat ``key = value`` config file given with
``--config``; command-line flags override it.  Exit codes: 0 success, 1
config or I/O error, 2 at least one run failed.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime
from pathlib import Path

import numpy as np

from .forecast import RollingConfig, Strategy, run_backtest
from .garch import GarchParams, GarchSpec
from .gp import FAMILIES, KernelSpec
from .metrics import METRICS
from .optim import SimplexConfig
from .returns import InvalidInput, PriceSeries
from .synth import (
    SinVol,
    prices_from_returns,
    random_hyperparameters,
    recovery_experiment,
    simulate_garch,
    simulate_gp_log_abs,
    simulate_sinvol,
)

log = logging.getLogger("gpvol")

SCHEMA_VERSION = "1.0"
WORKERS_ENV = "GPVOL_WORKERS"
UNDEFINED = "undefined"

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2


class ConfigError(Exception):
    pass


class ParseError(InvalidInput):
    pass


# ingestion


def _parse_time(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return datetime.fromisoformat(text.replace("Z", "+00:00"))


def ingest_csv(path) -> PriceSeries:
    """Read ``timestamp,price`` rows (optional header, LF or CRLF).

    ISO-8601 timestamps are replaced by their row position so that time is in
    integer step units; integer timestamps are kept as given.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    body = [(i + 1, row) for i, row in enumerate(rows) if row and any(c.strip() for c in row)]
    if not body:
        raise InvalidInput(f"{path}: empty file")
    first_line, first = body[0]
    try:
        float(first[1] if len(first) > 1 else "x")
    except ValueError:
        body = body[1:]  # header
    if not body:
        raise InvalidInput(f"{path}: no data rows")
    stamps, prices = [], []
    for line, row in body:
        if len(row) != 2:
            raise ParseError(f"{path}:{line}: expected 2 columns, got {len(row)}")
        try:
            t = _parse_time(row[0])
            p = float(row[1])
        except ValueError as err:
            raise ParseError(f"{path}:{line}: {err}") from None
        if not p > 0 or not np.isfinite(p):
            raise ParseError(f"{path}:{line}: price must be positive, got {row[1].strip()!r}")
        if stamps and not t > stamps[-1][1]:
            raise ParseError(f"{path}:{line}: timestamp {row[0].strip()!r} is not after the previous row")
        stamps.append((line, t))
        prices.append(p)
    if len(prices) < 2:
        raise InvalidInput(f"{path}: need at least 2 prices")
    if isinstance(stamps[0][1], int):
        times = [t for _, t in stamps]
        if not all(isinstance(t, int) for t in times):
            raise ParseError(f"{path}: mixed integer and ISO timestamps")
    else:
        times = list(range(len(prices)))
    return PriceSeries(np.array(prices), np.array(times))


def write_prices_csv(path, prices: PriceSeries):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "price"])
        for t, p in zip(prices.timestamps, prices.prices):
            w.writerow([int(t), repr(float(p))])


@dataclass(frozen=True)
class Segment:
    index: int
    prices: PriceSeries
    partial: bool


def split_quarters(p: PriceSeries, segment: int = 3140) -> list[Segment]:
    """Consecutive non-overlapping segments; a trailing remainder is kept and flagged."""
    n = len(p)
    if n < segment:
        log.warning("series of %d points is shorter than one segment (%d)", n, segment)
    out = []
    for k, start in enumerate(range(0, n, segment)):
        stop = min(start + segment, n)
        if stop - start < 2:
            log.warning("dropping trailing single point at %d", start)
            continue
        out.append(Segment(k, p.slice(start, stop), stop - start < segment))
    return out


# configuration


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple = ()
    strategies: tuple = ("GpAbs", "Garch")
    kernels: tuple = ("Matern32",)
    rolling: RollingConfig = RollingConfig()
    output: str = "out"
    formats: tuple = ("csv", "json")
    workers: int = 1

    def __post_init__(self):
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        if not self.formats or any(f not in ("csv", "json") for f in self.formats):
            raise ConfigError(f"formats must be a non-empty subset of csv,json; got {self.formats}")
        for k in self.kernels:
            if k not in FAMILIES:
                raise ConfigError(f"unknown kernel {k!r}")

    def expanded_strategies(self) -> list[Strategy]:
        """GP strategies without an explicit kernel are crossed with ``kernels``."""
        out = []
        for text in self.strategies:
            base = Strategy.parse(text)
            parts = text.split("/")
            explicit = any(p in FAMILIES for p in parts[1:])
            if base.is_gp and not explicit:
                out.extend(replace(base, kernel=k) for k in self.kernels)
            else:
                out.append(base)
        seen, uniq = set(), []
        for s in out:
            if s not in seen:
                seen.add(s)
                uniq.append(s)
        return uniq


_ROLLING_KEYS = {f.name for f in fields(RollingConfig)} - {"simplex"}
_SIMPLEX_KEYS = {f.name for f in fields(SimplexConfig)}


def _split_list(v: str) -> tuple:
    return tuple(x.strip() for x in v.split(",") if x.strip())


def _coerce(cls, key, value):
    typ = {f.name: f.type for f in fields(cls)}[key]
    if value in ("", "none", "None"):
        return None
    if "int" in str(typ):
        return int(value)
    if "float" in str(typ):
        return float(value)
    return value


def load_config_file(path) -> dict:
    """Parse a flat ``key = value`` file (``#`` comments) into a dict of strings."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        text = Path(path).read_text(encoding="utf-8")
        parser.read_string("[run]\n" + text)
    except (OSError, configparser.Error) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    return dict(parser["run"])


def build_run_config(values: dict) -> RunConfig:
    """RunConfig from string key/values (config file merged with CLI overrides)."""
    values = {k.replace("-", "_"): v for k, v in values.items() if v is not None}
    rolling_kw, simplex_kw, run_kw = {}, {}, {}
    try:
        for k, v in values.items():
            if k in _ROLLING_KEYS:
                rolling_kw[k] = _coerce(RollingConfig, k, v) if isinstance(v, str) else v
            elif k in _SIMPLEX_KEYS:
                simplex_kw[k] = _coerce(SimplexConfig, k, v) if isinstance(v, str) else v
            elif k in ("inputs", "strategies", "kernels", "formats"):
                run_kw[k] = _split_list(v) if isinstance(v, str) else tuple(v)
            elif k == "output":
                run_kw[k] = str(v)
            elif k == "workers":
                run_kw[k] = int(v)
            else:
                raise ConfigError(f"unknown config key {k!r}")
        if "prior_mean" in rolling_kw and rolling_kw["prior_mean"] is not None:
            rolling_kw["prior_mean"] = tuple(float(x) for x in _split_list(rolling_kw["prior_mean"]))
        rolling = RollingConfig(simplex=SimplexConfig(**simplex_kw), **rolling_kw)
        return RunConfig(rolling=rolling, **run_kw)
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from None


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer") from None


# orchestration


def _fmt6(x) -> str:
    if x is None:
        return UNDEFINED
    return f"{x:.6g}"


def _job(args):
    dataset, seg, strategy, rolling = args
    try:
        rep = run_backtest(seg.prices, strategy, rolling)
    except Exception as err:  # a failed run becomes a failed cell
        log.error("%s segment %d %s failed: %s", dataset, seg.index, strategy.name, err)
        return {"ok": False, "error": f"{type(err).__name__}: {err}"}
    return {"ok": True, "summary": rep.summary(), "records": [asdict(r) for r in rep.records]}


@dataclass
class ComparisonTable:
    dataset: str
    proxy: str
    aggregate: str
    rows: list = field(default_factory=list)  # dicts: strategy, metrics..., n_segments, n_failed

    def best(self) -> dict:
        """Per metric, the name of the minimizing strategy (ties go to the first row)."""
        out = {}
        for m in METRICS:
            vals = [(row[m], row["strategy"]) for row in self.rows if row.get(m) is not None and np.isfinite(row[m])]
            if vals:
                out[m] = min(vals, key=lambda v: v[0])[1]
        return out

    def to_csv(self) -> str:
        best = self.best()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["strategy", *METRICS, "n_segments", "n_failed", "best"])
        for row in self.rows:
            won = [m for m in METRICS if best.get(m) == row["strategy"]]
            cells = [_fmt6(row[m]) if row["n_segments"] else "failed" for m in METRICS]
            w.writerow([row["strategy"], *cells, row["n_segments"], row["n_failed"], ";".join(won)])
        return buf.getvalue()

    def to_markdown(self) -> str:
        best = self.best()
        lines = ["| strategy | " + " | ".join(METRICS) + " |", "|---" * (len(METRICS) + 1) + "|"]
        for row in self.rows:
            cells = []
            for m in METRICS:
                c = _fmt6(row[m]) if row["n_segments"] else "failed"
                cells.append(f"**{c}**" if best.get(m) == row["strategy"] else c)
            lines.append(f"| {row['strategy']} | " + " | ".join(cells) + " |")
        return "\n".join(lines)

    def as_dict(self) -> dict:
        return {"dataset": self.dataset, "proxy": self.proxy, "aggregate": self.aggregate, "rows": self.rows, "best": self.best()}


def _aggregate(results, strategies, dataset, proxy, how):
    table = ComparisonTable(dataset, proxy, how)
    agg = np.mean if how == "mean" else np.median
    for s in strategies:
        if s.proxy != proxy:
            continue
        runs = [r for (strat, r) in results if strat == s]
        ok = [r["summary"]["metrics"] for r in runs if r["ok"]]
        row = {"strategy": s.name, "n_segments": len(ok), "n_failed": sum(not r["ok"] for r in runs)}
        for m in METRICS:
            vals = [v[m] for v in ok if v[m] is not None]
            row[m] = float(agg(vals)) if vals else None
        table.rows.append(row)
    return table


def run_compare(cfg: RunConfig, datasets: dict | None = None):
    """Run every (dataset, segment, strategy) backtest and build the comparison tables.

    Returns ``(tables, runs, failed)`` where ``runs`` maps dataset name to a
    list of per-run dicts in deterministic order.
    """
    if datasets is None:
        datasets = {Path(p).stem: ingest_csv(p) for p in cfg.inputs}
    strategies = cfg.expanded_strategies()
    roll = cfg.rolling
    jobs, keys = [], []
    for name, prices in datasets.items():
        for seg in split_quarters(prices, roll.segment):
            if len(seg.prices) - 1 <= roll.train:
                log.warning("%s segment %d has %d points; too short to backtest, skipped", name, seg.index, len(seg.prices))
                continue
            for s in strategies:
                jobs.append((name, seg, s, roll))
                keys.append((name, seg.index, seg.partial, s))
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            outs = list(ex.map(_job, jobs))
    else:
        outs = [_job(j) for j in jobs]

    runs: dict = {name: [] for name in datasets}
    by_dataset: dict = {name: [] for name in datasets}
    for (name, idx, partial, s), out in zip(keys, outs):
        runs[name].append({"segment": idx, "partial": partial, "strategy": s.name, **out})
        by_dataset[name].append((s, out))
    tables = []
    for name in datasets:
        for proxy in ("abs", "squared"):
            if not any(s.proxy == proxy for s in strategies):
                continue
            for how in ("mean", "median"):
                tables.append(_aggregate(by_dataset[name], strategies, name, proxy, how))
    failed = sum(not o["ok"] for o in outs)
    return tables, runs, failed


def _steps_csv(runs_for_dataset, dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["dataset", "segment", "strategy", "t", "forecast", "low", "up", "realized", "return", "log_mean", "log_var", "flags"])
    for run in runs_for_dataset:
        if not run["ok"]:
            continue
        for rec in run["records"]:
            w.writerow([
                dataset, run["segment"], run["strategy"], rec["t"],
                *(repr(float(rec[k])) for k in ("forecast", "low", "up", "realized", "ret", "log_mean", "log_var")),
                ";".join(rec["flags"]),
            ])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    return _jsonable(d)


def write_compare_outputs(cfg: RunConfig, tables, runs, out_dir=None) -> list[Path]:
    out = Path(out_dir or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in cfg.formats:
        for t in tables:
            p = out / f"table_{t.dataset}_{t.proxy}_{t.aggregate}.csv"
            p.write_text(t.to_csv(), encoding="utf-8", newline="")
            written.append(p)
        for name, rs in runs.items():
            p = out / f"steps_{name}.csv"
            p.write_text(_steps_csv(rs, name), encoding="utf-8", newline="")
            written.append(p)
    if "json" in cfg.formats:
        report = {
            "schema_version": SCHEMA_VERSION,
            "config": config_dict(cfg),
            "tables": [t.as_dict() for t in tables],
            "runs": {name: [{k: v for k, v in r.items() if k != "records"} for r in rs] for name, rs in runs.items()},
        }
        p = out / "report.json"
        p.write_text(json.dumps(_jsonable(report), indent=2, sort_keys=False) + "\n", encoding="utf-8")
        written.append(p)
    return written


# subcommands


def _cmd_ingest_check(args) -> int:
    status = EXIT_OK
    for path in args.inputs:
        try:
            p = ingest_csv(path)
        except (OSError, InvalidInput) as err:
            print(f"{path}: ERROR {err}", file=sys.stderr)
            status = EXIT_CONFIG
            continue
        segs = split_quarters(p, args.segment)
        partial = sum(s.partial for s in segs)
        print(f"{path}: {len(p)} prices, {len(segs)} segment(s) of {args.segment} ({partial} partial)")
    return status


def _cmd_synth(args) -> int:
    n_returns = args.n - 1
    if args.generator == "sinvol":
        r, _ = simulate_sinvol(SinVol(args.amplitude, args.period, args.base), n_returns, args.seed)
    elif args.generator == "garch":
        spec = GarchSpec(args.variant)
        params = GarchParams(args.alpha0, [args.alpha], [args.beta], [args.gamma] if spec.r else [])
        r = simulate_garch(params, n_returns, args.seed, spec)
    else:
        spec = KernelSpec.from_natural(args.kernel, args.output_scale, args.length_scale, args.noise_std)
        r, _ = simulate_gp_log_abs(spec, n_returns, args.seed, mean=args.log_mean)
    write_prices_csv(args.out, prices_from_returns(r, args.p0))
    print(f"wrote {args.n} prices to {args.out}")
    return EXIT_OK


def _run_config_from_args(args, extra: dict) -> RunConfig:
    values = load_config_file(args.config) if args.config else {}
    for k, v in extra.items():
        if v is not None:
            values[k] = v
    if "workers" not in values:
        values["workers"] = str(default_workers())
    return build_run_config(values)


def _rolling_overrides(args) -> dict:
    keys = ("train", "window", "segment", "z", "floor", "seed", "restarts", "max_iter", "ftol", "xtol", "prior_std", "envelope_tail")
    return {k: (str(getattr(args, k)) if getattr(args, k) is not None else None) for k in keys}


def _cmd_compare(args) -> int:
    extra = _rolling_overrides(args)
    extra.update(
        inputs=",".join(args.inputs) if args.inputs else None,
        strategies=",".join(args.strategies) if args.strategies else None,
        kernels=",".join(args.kernels) if args.kernels else None,
        output=args.out,
        formats=args.formats,
        workers=str(args.workers) if args.workers else None,
    )
    cfg = _run_config_from_args(args, extra)
    if not cfg.inputs:
        raise ConfigError("no input files given")
    tables, runs, failed = run_compare(cfg)
    write_compare_outputs(cfg, tables, runs)
    for t in tables:
        if t.aggregate == "mean":
            print(f"\n{t.dataset} ({t.proxy} proxy, mean over segments)\n{t.to_markdown()}")
    return EXIT_FAILED if failed else EXIT_OK


def _cmd_backtest(args) -> int:
    args.inputs = [args.input]
    args.strategies = [args.strategy]
    args.kernels = None
    return _cmd_compare(args)


def _cmd_recovery(args) -> int:
    spec = (
        KernelSpec.from_natural(args.kernel, args.output_scale, args.length_scale, args.noise_std)
        if args.output_scale
        else random_hyperparameters(args.kernel, args.seed)
    )
    cfg = SimplexConfig(restarts=args.restarts, ftol=args.ftol, xtol=args.xtol, max_iter=args.max_iter, seed=args.seed)
    fractions = tuple(float(x) for x in _split_list(args.fractions))
    rep = recovery_experiment(spec, args.n_sets, args.n_points, fractions, cfg, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"schema_version": SCHEMA_VERSION, **_jsonable(rep.summary())}
    (out / "recovery.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["fraction", "set", "rmse", *[f"log_{k}" for k in spec.natural]])
    for f in rep.fractions:
        for k in range(args.n_sets):
            w.writerow([f, k, repr(float(rep.rmse[f][k])), *(repr(float(x)) for x in rep.recovered[f][k])])
    (out / "recovery.csv").write_text(buf.getvalue(), encoding="utf-8", newline="")
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _add_rolling_flags(p):
    g = p.add_argument_group("rolling forecast")
    g.add_argument("--train", type=int, help="training length in returns (default 100)")
    g.add_argument("--window", type=int, help="rolling window length (default 100)")
    g.add_argument("--segment", type=int, help="segment length in prices (default 3140)")
    g.add_argument("--z", type=float, help="interval multiplier (default 1.96)")
    g.add_argument("--floor", type=float, help="proxy floor (default: half the smallest non-zero |r| in training)")
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    g.add_argument("--envelope-tail", choices=("always", "rising"), help="newest-point envelope rule (default always)")
    g.add_argument("--prior-std", type=float, help="log-space prior sd for every hyperparameter (default 1.5)")
    g = p.add_argument_group("simplex")
    g.add_argument("--restarts", type=int, help="multi-start count for MAP (default 32)")
    g.add_argument("--max-iter", type=int, help="Nelder-Mead iteration cap (default 500)")
    g.add_argument("--ftol", type=float, help="function-value spread tolerance (default 1e-8)")
    g.add_argument("--xtol", type=float, help="simplex size tolerance (default 1e-4)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpvol", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-check", help="validate price CSV files")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--segment", type=int, default=3140)
    p.set_defaults(func=_cmd_ingest_check)

    p = sub.add_parser("synth", help="write a simulated price series as CSV")
    p.add_argument("--generator", choices=("sinvol", "garch", "gp"), default="sinvol")
    p.add_argument("--n", type=int, default=3140, help="number of prices (default 3140)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--p0", type=float, default=100.0, help="initial price (default 100)")
    p.add_argument("--amplitude", type=float, default=0.006, help="sinvol amplitude (default 0.006)")
    p.add_argument("--period", type=float, default=400.0, help="sinvol period (default 400)")
    p.add_argument("--base", type=float, default=0.01, help="sinvol base volatility (default 0.01)")
    p.add_argument("--variant", choices=("Vanilla", "EGarch", "Gjr"), default="Vanilla")
    p.add_argument("--alpha0", type=float, default=1e-6, help="GARCH alpha0 (default 1e-6)")
    p.add_argument("--alpha", type=float, default=0.10, help="GARCH alpha1 (default 0.10)")
    p.add_argument("--beta", type=float, default=0.85, help="GARCH beta1 (default 0.85)")
    p.add_argument("--gamma", type=float, default=0.05, help="GJR gamma1 (default 0.05)")
    p.add_argument("--kernel", choices=FAMILIES, default="Matern32")
    p.add_argument("--output-scale", type=float, default=0.5)
    p.add_argument("--length-scale", type=float, default=30.0)
    p.add_argument("--noise-std", type=float, default=1.0)
    p.add_argument("--log-mean", type=float, default=-6.0, help="mean of log|r| for gp (default -6)")
    p.set_defaults(func=_cmd_synth)

    for name, helptext in (("compare", "run the strategy comparison"), ("backtest", "backtest one strategy")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="flat key = value config file")
        if name == "compare":
            p.add_argument("--input", dest="inputs", action="append", help="price CSV (repeatable)")
            p.add_argument("--strategies", nargs="+", help="e.g. GpAbs GpCombinedEnvelope/Matern32/update Garch")
            p.add_argument("--kernels", nargs="+", choices=FAMILIES, help="kernels for GP strategies without one")
        else:
            p.add_argument("--input", required=True)
            p.add_argument("--strategy", required=True)
        p.add_argument("--out", help="output directory (default ./out)")
        p.add_argument("--formats", help="comma list of csv,json (default both)")
        p.add_argument("--workers", type=int, help=f"parallel jobs (default ${WORKERS_ENV} or 1)")
        _add_rolling_flags(p)
        p.set_defaults(func=_cmd_compare if name == "compare" else _cmd_backtest)

    p = sub.add_parser("recovery", help="hyperparameter-recovery study on GP draws")
    p.add_argument("--out", required=True)
    p.add_argument("--kernel", choices=FAMILIES, default="SE")
    p.add_argument("--n-sets", type=int, default=100)
    p.add_argument("--n-points", type=int, default=1000)
    p.add_argument("--fractions", default="0.05,0.2,0.5,0.95")
    p.add_argument("--output-scale", type=float, help="true output scale (default: random)")
    p.add_argument("--length-scale", type=float, default=25.0)
    p.add_argument("--noise-std", type=float, default=0.1)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--ftol", type=float, default=1e-4)
    p.add_argument("--xtol", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_recovery)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError, InvalidInput) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
