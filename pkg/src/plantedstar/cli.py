"""Command-line front door.

Subcommands wrap the samplers, test statistics, and experiment harness;
tables go to stdout or --out as CSV/JSON, progress goes to stderr, and
sweep/recovery runs can emit an SVG curve of the estimate with its
analytic target.  Exit codes: 0 success, 1 runtime failure, 2 usage.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import __version__
from .graphmodels import (
    DegreeVector,
    ModelParams,
    read_degrees_csv,
    sample_null_degrees,
    sample_null_edges,
    sample_planted,
    write_degrees_csv,
    write_edges_csv,
)
from .harness import (
    RunConfig,
    RunRecord,
    derive_rng,
    persist,
    record_to_csv,
    run_experiment,
)
from .lrt import decide_lr, decide_max_degree
from .numerics import normal_upper_tail

RESULTS_DIR_VAR = "PLANTEDSTAR_RESULTS_DIR"

_EPILOG = (
    f"If the environment variable {RESULTS_DIR_VAR} is set, output paths "
    "given without a directory component are placed in that directory."
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plantedstar",
        description="Planted k-star detection experiments in G(n, m).",
        epilog=_EPILOG,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, *, gamma=False, c=False, reps=False, model_m=False):
        p.add_argument("--config", help="flat KEY=VALUE file; flags override it")
        p.add_argument("--n", type=int, help="vertex count")
        if model_m:
            p.add_argument("--m", type=int, help="edge count")
        p.add_argument("--k", type=int, help="star size")
        p.add_argument("--alpha", type=float, help="threshold exponent (default 2)")
        if gamma:
            p.add_argument("--gamma", help="comma-separated window coordinates")
        if c:
            p.add_argument("--c", help="comma-separated coarse window coordinates")
        if reps:
            p.add_argument("--reps", type=int, help="replicates per grid point (default 2000)")
            p.add_argument("--seed", type=int, help="master seed (default 0)")
            p.add_argument("--threads", type=int, help="worker count, 0 = auto (default 0)")
            p.add_argument(
                "--store-replicates",
                action="store_true",
                help="keep per-replicate metrics in the record",
            )
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
        p.add_argument("--svg", help="also write an SVG curve (sweep/recovery)")

    p = sub.add_parser("sample", help="draw one graph and emit it as CSV", epilog=_EPILOG)
    p.add_argument("--config", help="flat KEY=VALUE file; flags override it")
    p.add_argument("--n", type=int, help="vertex count")
    p.add_argument("--m", type=int, help="edge count")
    p.add_argument("--k", type=int, help="star size (with --planted)")
    p.add_argument("--planted", action="store_true", help="sample the planted model")
    p.add_argument(
        "--degrees-only",
        action="store_true",
        help="emit the degree vector instead of the edge list",
    )
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("lr", help="likelihood-ratio test of a degree file", epilog=_EPILOG)
    p.add_argument("--config", help="flat KEY=VALUE file; flags override it")
    p.add_argument("--degrees", help="single-column CSV with header 'degree'")
    p.add_argument("--n", type=int, help="vertex count")
    p.add_argument("--m", type=int, help="edge count")
    p.add_argument("--k", type=int, help="star size")
    p.add_argument("--alpha", type=float, help="threshold exponent (default 2)")

    p = sub.add_parser("test", help="max-degree threshold test", epilog=_EPILOG)
    p.add_argument("--config", help="flat KEY=VALUE file; flags override it")
    p.add_argument("--null", action="store_true", help="sample one null graph to test")
    p.add_argument("--degrees", help="single-column CSV with header 'degree'")
    p.add_argument("--n", type=int, help="vertex count")
    p.add_argument("--m", type=int, help="edge count")
    p.add_argument("--alpha", type=float, help="threshold exponent (default 2)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")

    p = sub.add_parser(
        "sweep", help="TV / rejection-rate sweep over the gamma grid", epilog=_EPILOG
    )
    common(p, gamma=True, reps=True, model_m=True)

    p = sub.add_parser(
        "null-phase", help="null likelihood-ratio quantiles over a c grid", epilog=_EPILOG
    )
    common(p, c=True, reps=True)

    p = sub.add_parser(
        "agreement", help="symmetric-difference rate of the two tests", epilog=_EPILOG
    )
    common(p, gamma=True, reps=True, model_m=True)

    p = sub.add_parser(
        "recovery", help="hub-recovery frequency over the gamma grid", epilog=_EPILOG
    )
    common(p, gamma=True, reps=True, model_m=True)

    p = sub.add_parser(
        "rem", help="random-energy-model fluctuation quantiles over a c grid",
        epilog=_EPILOG,
    )
    p.add_argument("--config", help="flat KEY=VALUE file; flags override it")
    p.add_argument("--n", type=int, help="number of energy levels")
    p.add_argument("--c", help="comma-separated coarse window coordinates")
    p.add_argument("--reps", type=int, help="replicates per grid point (default 2000)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--threads", type=int, help="worker count, 0 = auto (default 0)")
    p.add_argument("--store-replicates", action="store_true")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="output format")

    p = sub.add_parser("enumerate", help="exact small-instance oracle", epilog=_EPILOG)
    p.add_argument("--config", help="flat KEY=VALUE file; flags override it")
    p.add_argument("--n", type=int, help="vertex count (<= 6)")
    p.add_argument("--m", type=int, help="edge count")
    p.add_argument("--k", type=int, help="star size")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="output format")

    return parser


class UsageError(Exception):
    pass


def _read_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {line!r}")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


class _Options:
    """Flag values merged over config-file values merged over defaults."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._file = {}
        if self._args.get("config"):
            self._file = _read_config_file(self._args["config"])

    def get(self, key: str, cast, default=None, required=False):
        value = self._args.get(key)
        if value is None or value is False:
            raw = self._file.get(key)
            if raw is not None:
                value = cast(raw) if cast is not bool else raw.lower() in ("1", "true", "yes")
        if value is None or value is False:
            value = default
        if required and value is None:
            raise UsageError(f"missing required flag --{key.replace('_', '-')}")
        return value


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise UsageError(f"unparsable number list {text!r}") from exc


def _output_path(path: str | None) -> str | None:
    if path is None:
        return None
    results_dir = os.environ.get(RESULTS_DIR_VAR)
    if results_dir and os.path.basename(path) == path:
        return os.path.join(results_dir, path)
    return path


def _emit_record(record: RunRecord, opts: _Options) -> None:
    out = _output_path(opts.get("out", str))
    fmt = opts.get("format", str)
    if fmt is None:
        fmt = "json" if out and out.endswith(".json") else "csv"
    if out is None:
        if fmt == "json":
            import json

            from .harness import record_to_dict

            json.dump(record_to_dict(record), sys.stdout, indent=1)
            sys.stdout.write("\n")
        else:
            record_to_csv(record, sys.stdout)
        return
    if fmt == "json":
        persist(record, out)
    else:
        with open(out, "w") as fh:
            record_to_csv(record, fh)
    print(f"wrote {out}", file=sys.stderr)


# --- SVG curve emission -------------------------------------------------------


def _svg_curve(points, target_fn, path, title, ylabel) -> None:
    """Estimate +- 2 stderr as markers with error bars, analytic target as a
    smooth overlay.  points: list of (x, estimate, stderr)."""
    width, height = 640, 420
    lm, rm, tm, bm = 70, 20, 40, 50
    xs = [p[0] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    y_lo, y_hi = 0.0, 1.0
    for _, est, se in points:
        y_lo = min(y_lo, est - 2 * se)
        y_hi = max(y_hi, est + 2 * se)

    def sx(x):
        return lm + (x - x_lo) / (x_hi - x_lo) * (width - lm - rm)

    def sy(y):
        return height - bm - (y - y_lo) / (y_hi - y_lo) * (height - tm - bm)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="15">{title}</text>',
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">grid value</text>',
        f'<text x="16" y="{height / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {height / 2})">{ylabel}</text>',
        f'<line x1="{lm}" y1="{sy(y_lo)}" x2="{lm}" y2="{sy(y_hi)}" stroke="black"/>',
        f'<line x1="{lm}" y1="{sy(y_lo)}" x2="{width - rm}" y2="{sy(y_lo)}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        yv = y_lo + frac * (y_hi - y_lo)
        parts.append(
            f'<text x="{lm - 8}" y="{sy(yv) + 4}" text-anchor="end" font-size="10">{yv:.2f}</text>'
        )
        xv = x_lo + frac * (x_hi - x_lo)
        parts.append(
            f'<text x="{sx(xv)}" y="{height - bm + 16}" text-anchor="middle" font-size="10">{xv:.2f}</text>'
        )
    n_target = 100
    target_pts = []
    for i in range(n_target + 1):
        x = x_lo + i * (x_hi - x_lo) / n_target
        target_pts.append(f"{sx(x):.2f},{sy(target_fn(x)):.2f}")
    parts.append(
        f'<polyline points="{" ".join(target_pts)}" fill="none" stroke="gray" '
        'stroke-dasharray="6,3" stroke-width="1.5"/>'
    )
    est_pts = " ".join(f"{sx(x):.2f},{sy(e):.2f}" for x, e, _ in points)
    parts.append(
        f'<polyline points="{est_pts}" fill="none" stroke="steelblue" stroke-width="1.5"/>'
    )
    for x, est, se in points:
        parts.append(
            f'<line x1="{sx(x):.2f}" y1="{sy(est - 2 * se):.2f}" '
            f'x2="{sx(x):.2f}" y2="{sy(est + 2 * se):.2f}" stroke="steelblue"/>'
        )
        parts.append(
            f'<circle cx="{sx(x):.2f}" cy="{sy(est):.2f}" r="3" fill="steelblue"/>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def _maybe_emit_svg(record: RunRecord, opts: _Options, metric: str, title: str) -> None:
    svg = _output_path(opts.get("svg", str))
    if svg is None:
        return
    points = [
        (p.grid_value, p.metrics[metric].estimate, p.metrics[metric].stderr)
        for p in record.per_point
    ]
    _svg_curve(
        points,
        lambda g: normal_upper_tail(g / math.sqrt(2.0)),
        svg,
        title,
        metric,
    )
    print(f"wrote {svg}", file=sys.stderr)


# --- subcommand handlers --------------------------------------------------------


def _open_out(opts: _Options):
    out = _output_path(opts.get("out", str))
    if out is None:
        return sys.stdout, False
    return open(out, "w"), True


def _cmd_sample(opts: _Options) -> int:
    n = opts.get("n", int, required=True)
    m = opts.get("m", int, required=True)
    seed = opts.get("seed", int, 0)
    planted = opts.get("planted", bool, False)
    degrees_only = opts.get("degrees_only", bool, False)
    rng = derive_rng(seed, 0, 0, 0, 0)
    fh, close = _open_out(opts)
    try:
        if planted:
            k = opts.get("k", int, required=True)
            params = ModelParams(n=n, m=m, k=k)
            s = sample_planted(params, rng)
            print(f"hub={s.hub}", file=sys.stderr)
            write_degrees_csv(s.degrees, fh)
        elif degrees_only:
            params = ModelParams(n=n, m=m, k=1)
            write_degrees_csv(sample_null_degrees(params, rng), fh)
        else:
            params = ModelParams(n=n, m=m, k=1)
            write_edges_csv(sample_null_edges(params, rng), fh)
    finally:
        if close:
            fh.close()
    return 0


def _load_degree_vector(opts: _Options, n: int, m: int) -> DegreeVector:
    path = opts.get("degrees", str, required=True)
    with open(path) as fh:
        degrees = read_degrees_csv(fh)
    if degrees.size != n:
        raise ValueError(f"degree file has {degrees.size} rows, expected n={n}")
    return DegreeVector(degrees, m)


def _cmd_lr(opts: _Options) -> int:
    n = opts.get("n", int, required=True)
    m = opts.get("m", int, required=True)
    k = opts.get("k", int, required=True)
    alpha = opts.get("alpha", float, 2.0)
    params = ModelParams(n=n, m=m, k=k, alpha=alpha)
    deg = _load_degree_vector(opts, n, m)
    outcome = decide_lr(deg, params)
    print(f"log_lr={outcome.statistic!r}")
    print(f"a_n={outcome.auxiliary['a_n']!r}")
    print(f"decision={outcome.decision}")
    return 0


def _cmd_test(opts: _Options) -> int:
    n = opts.get("n", int, required=True)
    m = opts.get("m", int, required=True)
    alpha = opts.get("alpha", float, 2.0)
    params = ModelParams(n=n, m=m, k=1, alpha=alpha)
    if opts.get("null", bool, False):
        seed = opts.get("seed", int, 0)
        deg = sample_null_degrees(params, derive_rng(seed, 0, 0, 0, 0))
    else:
        deg = _load_degree_vector(opts, n, m)
    outcome = decide_max_degree(deg, params)
    print(f"t_star={outcome.threshold!r}")
    print(f"max_degree={outcome.statistic!r}")
    print(f"decision={outcome.decision}")
    return 0


def _detect_config(opts: _Options, experiment: str) -> RunConfig:
    n = opts.get("n", int, required=True)
    k = opts.get("k", int, required=True)
    alpha = opts.get("alpha", float, 2.0)
    reps = opts.get("reps", int, 2000)
    seed = opts.get("seed", int, 0)
    threads = opts.get("threads", int, 0)
    store = opts.get("store_replicates", bool, False)
    gamma_text = opts.get("gamma", str)
    m = opts.get("m", int)
    if gamma_text is not None and m is not None:
        raise UsageError("give either --gamma or --m, not both")
    if gamma_text is not None:
        grid = _float_list(gamma_text)
        model = ModelParams.from_gamma(n, k, grid[0], alpha=alpha)
        return RunConfig(
            model=model, replicates=reps, seed=seed, experiment=experiment,
            grid=grid, grid_name="gamma", threads=threads, store_replicates=store,
        )
    if m is None:
        raise UsageError("missing required flag --gamma (or --m)")
    model = ModelParams(n=n, m=m, k=k, alpha=alpha)
    return RunConfig(
        model=model, replicates=reps, seed=seed, experiment=experiment,
        grid=None, threads=threads, store_replicates=store,
    )


def _cmd_detect(opts: _Options, experiment: str, svg_metric, svg_title: str) -> int:
    cfg = _detect_config(opts, experiment)
    print(
        f"running {experiment}: n={cfg.model.n} k={cfg.model.k} "
        f"points={len(cfg.grid) if cfg.grid else 1} reps={cfg.replicates}/side",
        file=sys.stderr,
    )
    record = run_experiment(cfg)
    print(f"finished in {record.wall_time:.1f}s", file=sys.stderr)
    _emit_record(record, opts)
    if svg_metric is not None:
        _maybe_emit_svg(record, opts, svg_metric, svg_title)
    return 0


def _cmd_null_phase(opts: _Options) -> int:
    n = opts.get("n", int, required=True)
    k = opts.get("k", int, required=True)
    alpha = opts.get("alpha", float, 2.0)
    reps = opts.get("reps", int, 2000)
    seed = opts.get("seed", int, 0)
    threads = opts.get("threads", int, 0)
    store = opts.get("store_replicates", bool, False)
    c_text = opts.get("c", str, required=True)
    grid = _float_list(c_text)
    model = ModelParams.from_c(n, k, grid[0], alpha=alpha)
    cfg = RunConfig(
        model=model, replicates=reps, seed=seed, experiment="null_phase",
        grid=grid, grid_name="c", threads=threads, store_replicates=store,
    )
    print(
        f"running null_phase: n={n} k={k} points={len(grid)} reps={reps}",
        file=sys.stderr,
    )
    record = run_experiment(cfg)
    print(f"finished in {record.wall_time:.1f}s", file=sys.stderr)
    _emit_record(record, opts)
    return 0


def _cmd_rem(opts: _Options) -> int:
    n = opts.get("n", int, required=True)
    reps = opts.get("reps", int, 2000)
    seed = opts.get("seed", int, 0)
    threads = opts.get("threads", int, 0)
    store = opts.get("store_replicates", bool, False)
    c_text = opts.get("c", str, required=True)
    grid = _float_list(c_text)
    if n < 2:
        raise ValueError(f"--n must be >= 2, got {n}")
    model = ModelParams(n=n, m=1, k=1)
    cfg = RunConfig(
        model=model, replicates=reps, seed=seed, experiment="rem_phase",
        grid=grid, grid_name="c", threads=threads, store_replicates=store,
    )
    print(f"running rem_phase: n={n} points={len(grid)} reps={reps}", file=sys.stderr)
    record = run_experiment(cfg)
    print(f"finished in {record.wall_time:.1f}s", file=sys.stderr)
    _emit_record(record, opts)
    return 0


def _cmd_enumerate(opts: _Options) -> int:
    n = opts.get("n", int, required=True)
    m = opts.get("m", int, required=True)
    k = opts.get("k", int, required=True)
    model = ModelParams(n=n, m=m, k=k)
    cfg = RunConfig(model=model, replicates=1, seed=0, experiment="enumerate")
    record = run_experiment(cfg)
    _emit_record(record, opts)
    return 0


def dispatch(args: argparse.Namespace) -> int:
    opts = _Options(args)
    sub = args.subcommand
    if sub == "sample":
        return _cmd_sample(opts)
    if sub == "lr":
        return _cmd_lr(opts)
    if sub == "test":
        return _cmd_test(opts)
    if sub == "sweep":
        return _cmd_detect(opts, "tv_sweep", "tv_lr", "total variation vs window coordinate")
    if sub == "agreement":
        return _cmd_detect(opts, "agreement", None, "")
    if sub == "recovery":
        return _cmd_detect(opts, "recovery", "recovery", "hub recovery vs window coordinate")
    if sub == "null-phase":
        return _cmd_null_phase(opts)
    if sub == "rem":
        return _cmd_rem(opts)
    if sub == "enumerate":
        return _cmd_enumerate(opts)
    raise UsageError(f"unknown subcommand {sub!r}")


_LIST_FLAGS = ("--gamma", "--c")


def _merge_list_flags(argv: list) -> list:
    """Join ``--gamma -1,0,1`` into ``--gamma=-1,0,1`` so argparse does not
    mistake a leading negative number for an option."""
    merged = []
    skip = False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        if tok in _LIST_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            merged.append(f"{tok}={argv[i + 1]}")
            skip = True
        else:
            merged.append(tok)
    return merged


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_merge_list_flags(list(argv)))
    try:
        return dispatch(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - single CLI error boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
