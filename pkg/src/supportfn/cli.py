"""Command-line front end: ``supportfn verify`` and ``supportfn curve``."""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import analysis
from .config import ConfigError, RunConfig, load_config, parse_density, parse_grid, parse_poly
from .errors import SupportFnError
from .model import Weight
from .report import fmt_float, render
from .verify import CHECKS, Scenario, any_failed, ratio_parts, run_catalog, support_bound

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SEED_ENV = "SUPPORTFN_SEED"
CURVE_COLUMNS = ("ratio", "bound", "G", "h", "phi")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="supportfn", description="Verification catalog and plot data for support-function bounds.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="run the verification catalog and write a record report")
    v.add_argument("--config", help="YAML run configuration")
    v.add_argument("--checks", help=f"comma-separated subset of: {','.join(CHECKS)}")
    v.add_argument("--scenario", action="append", help="keep scenarios whose id contains this text (repeatable)")
    v.add_argument("--alpha", help="radial weight exponent(s), comma-separated")
    v.add_argument("--f", dest="f", action="append", help="polynomial F, e.g. '1+z' (repeatable)")
    v.add_argument("--c", dest="c", action="append", help="density spec, e.g. constant:1 (repeatable)")
    v.add_argument("--t", help="t grid: start:stop:step, a comma list, or one value")
    v.add_argument("--seed", type=int)
    v.add_argument("--samples", type=int, help="Monte-Carlo budget")
    v.add_argument("--tolerance", type=float, help="closed-form relative tolerance")
    v.add_argument("--jobs", type=int, help="worker processes for scenarios")
    v.add_argument("--out", help="output path (default stdout)")
    v.add_argument("--format", choices=("csv", "jsonl"))
    v.add_argument("--timing", action="store_true", help="record wall-clock time per row")

    c = sub.add_parser("curve", help="emit plot data for one radial scenario")
    c.add_argument("--alpha", type=float, default=1.0)
    c.add_argument("--f", dest="f", default="1")
    c.add_argument("--c", dest="c", default="constant:1")
    c.add_argument("--t", default="0.1:5:0.1")
    c.add_argument("--column", action="append",
                   help=f"columns among {','.join(CURVE_COLUMNS)} (comma-separated or repeated)")
    c.add_argument("--out")
    return p


def _csv_list(values):
    out = []
    for v in values or ():
        out.extend(x.strip() for x in v.split(",") if x.strip())
    return out


def _seed(cli_seed, cfg_seed):
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return cfg_seed


def resolve_verify(args) -> RunConfig:
    """Config file, then the seed variable, then flags; later sources win."""
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as e:
            raise ConfigError(str(e), args.config) from None
        cfg = load_config(text, args.config)
    else:
        cfg = RunConfig()
    cat = cfg.catalog
    kw = {"seed": _seed(args.seed, cat.seed)}
    if args.samples is not None:
        if args.samples < 1000:
            raise ConfigError("must be at least 1000", "--samples")
        kw["samples"] = args.samples
    if args.t is not None:
        try:
            kw["t_grid"] = parse_grid(args.t)
        except ValueError as e:
            raise ConfigError(str(e), "--t") from None
    if args.checks is not None:
        checks = tuple(_csv_list([args.checks]))
        bad = [x for x in checks if x not in CHECKS]
        if bad or not checks:
            raise ConfigError(f"unknown check(s) {bad}" if bad else "empty list", "--checks")
        kw["checks"] = checks
    if args.scenario:
        kw["scenario_filter"] = tuple(args.scenario)
    if args.tolerance is not None:
        kw["tolerances"] = replace(cat.tolerances, closed_rel=args.tolerance)
    if args.jobs is not None:
        kw["jobs"] = max(1, args.jobs)
    narrowed = False
    if args.alpha is not None:
        try:
            kw["alphas"] = tuple(float(a) for a in _csv_list([args.alpha]))
            for a in kw["alphas"]:
                Weight.radial(a)
        except (ValueError, SupportFnError) as e:
            raise ConfigError(str(e), "--alpha") from None
        narrowed = True
    if args.f:
        try:
            kw["polys"] = tuple((f, parse_poly(f).coeffs) for f in args.f)
        except ValueError as e:
            raise ConfigError(str(e), "--f") from None
        narrowed = True
    if args.c:
        cuts = tuple(parse_density(x, "--c") for x in _csv_list(args.c))
        kw["cutoffs"] = kw["ode_cutoffs"] = cuts
        narrowed = True
    if narrowed:
        kw["two_pole"] = False
    out = cfg.output
    out = replace(out, path=args.out or out.path, format=args.format or _infer_format(args.out) or out.format,
                  timing=args.timing or out.timing)
    return RunConfig(replace(cat, **kw), out)


def _infer_format(path):
    if path and path.endswith((".jsonl", ".ndjson")):
        return "jsonl"
    return None


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    tmp = Path(path).with_name(Path(path).name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def cmd_verify(args) -> int:
    try:
        cfg = resolve_verify(args)
        records = run_catalog(cfg.catalog)
    except ConfigError as e:
        print(f"supportfn: configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SupportFnError as e:
        print(f"supportfn: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _write(render(records, cfg.output.format, cfg.output.timing), cfg.output.path)
    except OSError as e:
        print(f"supportfn: cannot write report: {e}", file=sys.stderr)
        return EXIT_USAGE
    n_fail = sum(r.status == "fail" for r in records)
    if cfg.output.path is not None:
        print(f"{len(records)} records, {n_fail} failed -> {cfg.output.path}", file=sys.stderr)
    return EXIT_FAIL if any_failed(records) else EXIT_OK


def curve_table(alpha, F, c, ts, columns):
    """Rows ``(t, *columns)``; ``phi`` adds the pair ``r = h(t)``, ``G(h^{-1}(r))``."""
    w = Weight.radial(alpha)
    s = Scenario("curve", w, F, c, tuple(ts))
    cols = {}
    if "ratio" in columns:
        cols["ratio"] = [ratio_parts(s, t)[2] for t in ts]
    if "bound" in columns:
        cols["bound"] = [support_bound(t) for t in ts]
    need_h = "h" in columns or "phi" in columns
    H = analysis.HFunction(c) if need_h else None
    if "G" in columns:
        cols["G"] = list(analysis.radial_g_grid(w, F, c, ts))
    if "h" in columns:
        cols["h"] = [H.h(t) for t in ts]
    if "phi" in columns:
        r = [H.h(t) for t in ts]
        cols["r"] = r
        cols["phi"] = list(analysis.radial_g_grid(w, F, c, [H.inv(x) for x in r]))
    header = ["t"] + list(cols)
    rows = [[t] + [cols[k][i] for k in cols] for i, t in enumerate(ts)]
    return header, rows


def cmd_curve(args) -> int:
    try:
        columns = _csv_list(args.column) or ["ratio", "bound"]
        bad = [x for x in columns if x not in CURVE_COLUMNS]
        if bad:
            raise ConfigError(f"unknown column(s) {bad}", "--column")
        try:
            ts = parse_grid(args.t)
        except ValueError as e:
            raise ConfigError(str(e), "--t") from None
        if any(not t > 0 for t in ts):
            raise ConfigError("levels must be positive", "--t")
        try:
            F = parse_poly(args.f)
        except ValueError as e:
            raise ConfigError(str(e), "--f") from None
        c = parse_density(args.c, "--c")
        try:
            header, rows = curve_table(args.alpha, F, c, ts, columns)
        except (ValueError, SupportFnError) as e:
            raise ConfigError(str(e)) from None
    except ConfigError as e:
        print(f"supportfn: configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([fmt_float(x) for x in row])
    try:
        _write(buf.getvalue(), args.out)
    except OSError as e:
        print(f"supportfn: cannot write output: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        return cmd_verify(args)
    return cmd_curve(args)


if __name__ == "__main__":
    sys.exit(main())
