"""Seeded Monte Carlo experiments and exact small-instance oracles.

Replicate streams are derived by a fixed splitting rule so that results
are independent of worker count: replicate r of grid point g on side s
(0 = null, 1 = planted) of an experiment with tag e uses
``Generator(PCG64(SeedSequence([seed, e, g, s, r])))``.  Aggregation is a
deterministic reduction in replicate order.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import __version__
from .graphmodels import (
    ModelParams,
    decode_pair,
    gamma_from_m,
    m_from_c,
    m_from_gamma,
    sample_null_degrees,
    sample_planted,
)
from .hypergeom import CapacityError
from .lrt import decide_lr, decide_max_degree, hub_estimate, log_lr_exact, log_lr_rem_form
from .numerics import normal_upper_tail
from .rem import RemParams, rem_normalized

SCHEMA_VERSION = "v1"

EXPERIMENTS = (
    "tv_sweep",
    "null_phase",
    "agreement",
    "recovery",
    "rem_phase",
    "enumerate",
)

# experiments sharing a tag share replicate streams for identical configs
_STREAM_TAGS = {
    "tv_sweep": 1,
    "agreement": 1,
    "recovery": 1,
    "null_phase": 2,
    "rem_phase": 3,
}

QUANTILE_LEVELS = (0.10, 0.25, 0.50, 0.75, 0.90)


class SchemaVersionError(ValueError):
    """Raised when loading a record written under an unknown schema."""


@dataclass(frozen=True)
class RunConfig:
    """One experiment request: model template, replicate count per grid
    point (and per side, for two-sided experiments), master seed, grid of
    window coordinates, and worker count (0 = auto)."""

    model: ModelParams
    replicates: int
    seed: int
    experiment: str
    grid: tuple | None = None
    grid_name: str = "gamma"
    threads: int = 0
    store_replicates: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if self.grid_name not in ("gamma", "c", "m"):
            raise ValueError(f"unknown grid_name {self.grid_name!r}")
        if self.grid is not None:
            object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
            if len(self.grid) == 0:
                raise ValueError("grid must be nonempty when provided")
        elif self.experiment == "rem_phase":
            raise ValueError("rem_phase requires a grid of c values")
        if self.threads < 0:
            raise ValueError("threads must be >= 0")


@dataclass(frozen=True)
class MetricEstimate:
    estimate: float
    stderr: float
    n_replicates: int


@dataclass(frozen=True)
class PointResult:
    grid_value: float
    m: int
    metrics: dict
    flags: tuple = ()
    replicate_metrics: dict | None = None


@dataclass(frozen=True)
class RunRecord:
    config: RunConfig
    per_point: list
    wall_time: float
    tool_version: str
    schema: str = SCHEMA_VERSION


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Stream for (seed, *keys) under the declared splitting rule."""
    entropy = [seed & 0xFFFFFFFFFFFFFFFF] + [int(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def _resolve_threads(threads: int) -> int:
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def _in_regime(n: int, k: int) -> bool:
    return math.log(n) ** 2 < k and k * k < n


def _point_model(
    base: ModelParams, grid_name: str, value: float
) -> tuple[ModelParams, tuple]:
    flags = []
    if grid_name == "gamma":
        m, clamped = m_from_gamma(base.n, base.k, value)
        params = ModelParams(
            n=base.n, m=m, k=base.k, alpha=base.alpha, gamma=value, clamped=clamped
        )
    elif grid_name == "c":
        m, clamped = m_from_c(base.n, base.k, value)
        params = ModelParams(
            n=base.n, m=m, k=base.k, alpha=base.alpha, c=value, clamped=clamped
        )
    else:
        m = int(value)
        clamped = False
        params = ModelParams(n=base.n, m=m, k=base.k, alpha=base.alpha)
    if clamped:
        flags.append("m_clamped")
    if not _in_regime(base.n, base.k):
        flags.append("out_of_regime")
    return params, tuple(flags)


def _grid_or_explicit(cfg: RunConfig) -> tuple[tuple, str]:
    """Grid values and effective grid name; a missing grid means a single
    explicit point at the template model's own m."""
    if cfg.grid is not None:
        return cfg.grid, cfg.grid_name
    return (float(cfg.model.m),), "m"


def _chunk_ranges(total: int, n_chunks: int):
    size = max(1, math.ceil(total / n_chunks))
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]


def _parallel_chunks(fn, tasks: list, threads: int) -> list:
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(threads, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


# --- detection-style experiments (tv_sweep / agreement / recovery) ----------


def _detect_chunk(task) -> tuple:
    (model_fields, seed, tag, point_idx, side, rep_lo, rep_hi) = task
    params = ModelParams(**model_fields)
    n_rep = rep_hi - rep_lo
    lr = np.zeros(n_rep, dtype=bool)
    md = np.zeros(n_rep, dtype=bool)
    rec = np.zeros(n_rep, dtype=bool)
    for i, r in enumerate(range(rep_lo, rep_hi)):
        rng = derive_rng(seed, tag, point_idx, side, r)
        if side == 0:
            deg = sample_null_degrees(params, rng)
        else:
            sample = sample_planted(params, rng)
            deg = sample.degrees
            rec[i] = hub_estimate(deg) == sample.hub
        lr[i] = decide_lr(deg, params).decision == "planted"
        md[i] = decide_max_degree(deg, params).decision == "planted"
    return lr, md, rec


def _proportion(values: np.ndarray) -> MetricEstimate:
    n = values.size
    p = float(values.mean())
    return MetricEstimate(p, math.sqrt(p * (1.0 - p) / n), n)


def _difference(a: MetricEstimate, b: MetricEstimate) -> MetricEstimate:
    return MetricEstimate(
        a.estimate - b.estimate,
        math.hypot(a.stderr, b.stderr),
        min(a.n_replicates, b.n_replicates),
    )


def _run_detect(cfg: RunConfig, experiment: str) -> RunRecord:
    t_start = time.perf_counter()
    grid, grid_name = _grid_or_explicit(cfg)
    threads = _resolve_threads(cfg.threads)
    tag = _STREAM_TAGS[experiment]
    per_point = []
    for point_idx, value in enumerate(grid):
        params, flags = _point_model(cfg.model, grid_name, value)
        model_fields = _model_dict(params)
        tasks = []
        for side in (0, 1):
            for lo, hi in _chunk_ranges(cfg.replicates, threads * 4):
                tasks.append((model_fields, cfg.seed, tag, point_idx, side, lo, hi))
        results = _parallel_chunks(_detect_chunk, tasks, threads)
        n_side = len(results) // 2
        null_res = results[:n_side]
        plant_res = results[n_side:]
        lr0 = np.concatenate([r[0] for r in null_res])
        md0 = np.concatenate([r[1] for r in null_res])
        lr1 = np.concatenate([r[0] for r in plant_res])
        md1 = np.concatenate([r[1] for r in plant_res])
        rec1 = np.concatenate([r[2] for r in plant_res])
        gamma = params.gamma
        if gamma is None:
            gamma = gamma_from_m(params.n, params.k, params.m)
        target = normal_upper_tail(gamma / math.sqrt(2.0))
        p0_lr, p1_lr = _proportion(lr0), _proportion(lr1)
        p0_md, p1_md = _proportion(md0), _proportion(md1)
        metrics = {
            "p0_reject_lr": p0_lr,
            "p1_reject_lr": p1_lr,
            "tv_lr": _difference(p1_lr, p0_lr),
            "p0_reject_md": p0_md,
            "p1_reject_md": p1_md,
            "tv_md": _difference(p1_md, p0_md),
            "tv_target": MetricEstimate(target, 0.0, cfg.replicates),
            "recovery": _proportion(rec1),
            "disagree_p0": _proportion(lr0 != md0),
            "disagree_p1": _proportion(lr1 != md1),
        }
        replicate_metrics = None
        if cfg.store_replicates:
            replicate_metrics = {
                "p0_reject_lr": lr0.astype(int).tolist(),
                "p0_reject_md": md0.astype(int).tolist(),
                "p1_reject_lr": lr1.astype(int).tolist(),
                "p1_reject_md": md1.astype(int).tolist(),
                "recovery": rec1.astype(int).tolist(),
            }
        per_point.append(
            PointResult(
                grid_value=float(value),
                m=params.m,
                metrics=metrics,
                flags=flags,
                replicate_metrics=replicate_metrics,
            )
        )
    return RunRecord(
        config=cfg,
        per_point=per_point,
        wall_time=time.perf_counter() - t_start,
        tool_version=__version__,
    )


def run_tv_sweep(cfg: RunConfig) -> RunRecord:
    """Estimate both tests' rejection rates, the resulting total variation
    estimates, hub recovery, and test agreement at every grid point."""
    return _run_detect(cfg, "tv_sweep")


def run_agreement(cfg: RunConfig) -> RunRecord:
    """Symmetric-difference frequency of the two tests under each model."""
    return _run_detect(cfg, "agreement")


def run_recovery(cfg: RunConfig) -> RunRecord:
    """Hub-recovery frequency with the analytic target column."""
    return _run_detect(cfg, "recovery")


# --- null-phase diagnostics --------------------------------------------------


def _null_phase_chunk(task) -> tuple:
    (model_fields, seed, tag, point_idx, rep_lo, rep_hi) = task
    params = ModelParams(**model_fields)
    n_rep = rep_hi - rep_lo
    log_lam = np.empty(n_rep)
    log_rem = np.empty(n_rep)
    for i, r in enumerate(range(rep_lo, rep_hi)):
        rng = derive_rng(seed, tag, point_idx, 0, r)
        deg = sample_null_degrees(params, rng)
        log_lam[i] = log_lr_exact(deg, params)
        log_rem[i] = log_lr_rem_form(deg, params)[0]
    return log_lam, log_rem


def _quantile_metric(values: np.ndarray, q: float) -> MetricEstimate:
    """Empirical quantile with an order-statistic standard error (half the
    width of the +-1 standard deviation rank band)."""
    n = values.size
    s = np.sort(values)
    est = float(np.quantile(s, q))
    half_band = math.sqrt(n * q * (1.0 - q))
    lo = int(np.clip(math.floor(q * n - half_band), 0, n - 1))
    hi = int(np.clip(math.ceil(q * n + half_band), 0, n - 1))
    return MetricEstimate(est, float((s[hi] - s[lo]) / 2.0), n)


def _linear_from_log(log_values: np.ndarray) -> np.ndarray:
    with np.errstate(under="ignore"):
        return np.exp(log_values)


def run_null_phase(cfg: RunConfig) -> RunRecord:
    """Quantiles of the likelihood ratio (exact and REM form) under the
    null at each grid point.  Linear-scale columns map underflow to 0;
    log-scale columns are always included."""
    t_start = time.perf_counter()
    grid, grid_name = _grid_or_explicit(cfg)
    threads = _resolve_threads(cfg.threads)
    tag = _STREAM_TAGS["null_phase"]
    per_point = []
    for point_idx, value in enumerate(grid):
        params, flags = _point_model(cfg.model, grid_name, value)
        model_fields = _model_dict(params)
        tasks = [
            (model_fields, cfg.seed, tag, point_idx, lo, hi)
            for lo, hi in _chunk_ranges(cfg.replicates, threads * 4)
        ]
        results = _parallel_chunks(_null_phase_chunk, tasks, threads)
        log_lam = np.concatenate([r[0] for r in results])
        log_rem = np.concatenate([r[1] for r in results])
        metrics = {}
        for name, logs in (("lambda", log_lam), ("rem", log_rem)):
            lin = _linear_from_log(logs)
            for q in QUANTILE_LEVELS:
                metrics[f"{name}_q{int(q * 100)}"] = _quantile_metric(lin, q)
                metrics[f"log_{name}_q{int(q * 100)}"] = _quantile_metric(logs, q)
        replicate_metrics = None
        if cfg.store_replicates:
            replicate_metrics = {
                "log_lambda": log_lam.tolist(),
                "log_rem": log_rem.tolist(),
            }
        per_point.append(
            PointResult(
                grid_value=float(value),
                m=params.m,
                metrics=metrics,
                flags=flags,
                replicate_metrics=replicate_metrics,
            )
        )
    return RunRecord(
        config=cfg,
        per_point=per_point,
        wall_time=time.perf_counter() - t_start,
        tool_version=__version__,
    )


# --- REM phase ----------------------------------------------------------------


def _rem_chunk(task) -> np.ndarray:
    (n_energies, c, seed, tag, point_idx, rep_lo, rep_hi) = task
    params = RemParams.from_c(n_energies, c)
    out = np.empty(rep_hi - rep_lo)
    for i, r in enumerate(range(rep_lo, rep_hi)):
        rng = derive_rng(seed, tag, point_idx, 0, r)
        out[i] = rem_normalized(params, rng)
    return out


def run_rem_phase(cfg: RunConfig) -> RunRecord:
    """Quantiles of Z / E[Z] per grid value of c (model.n = energy count)."""
    t_start = time.perf_counter()
    if cfg.grid is None:
        raise ValueError("rem_phase requires a grid of c values")
    threads = _resolve_threads(cfg.threads)
    tag = _STREAM_TAGS["rem_phase"]
    per_point = []
    for point_idx, c in enumerate(cfg.grid):
        tasks = [
            (cfg.model.n, c, cfg.seed, tag, point_idx, lo, hi)
            for lo, hi in _chunk_ranges(cfg.replicates, threads * 4)
        ]
        results = _parallel_chunks(_rem_chunk, tasks, threads)
        z = np.concatenate(results)
        metrics = {
            f"z_q{int(q * 100)}": _quantile_metric(z, q) for q in QUANTILE_LEVELS
        }
        replicate_metrics = {"z": z.tolist()} if cfg.store_replicates else None
        per_point.append(
            PointResult(
                grid_value=float(c),
                m=cfg.model.m,
                metrics=metrics,
                flags=(),
                replicate_metrics=replicate_metrics,
            )
        )
    return RunRecord(
        config=cfg,
        per_point=per_point,
        wall_time=time.perf_counter() - t_start,
        tool_version=__version__,
    )


# --- exact enumeration oracle --------------------------------------------------


@dataclass(frozen=True)
class EnumerationResult:
    """Exact small-instance quantities: total variation in both forms,
    the null mean of the likelihood ratio, and the per-graph ratio table
    (indexed like itertools.combinations of pair codes)."""

    tv: float
    tv_ordered: float
    e0_lambda: float
    lr_table: list
    n_graphs: int


def exact_enumeration(n: int, m: int, k: int) -> EnumerationResult:
    """Iterate every m-edge graph on n vertices; compute the planted and
    null probabilities of each in exact rational arithmetic."""
    if n > 6:
        raise CapacityError(f"enumeration supports n <= 6, got {n}")
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    N = n * (n - 1) // 2
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    if not k <= m <= N:
        raise ValueError(f"m must be in [{k}, {N}], got {m}")
    n_graphs = math.comb(N, m)
    if n_graphs > 10**6:
        raise CapacityError(f"C({N},{m}) = {n_graphs} exceeds enumeration capacity")
    pairs = [decode_pair(code) for code in range(N)]
    star_counts = [math.comb(d, k) for d in range(n)]
    denom1 = n * math.comb(n - 1, k) * math.comb(N - k, m - k)
    p0 = Fraction(1, n_graphs)

    tv = Fraction(0)
    e0 = Fraction(0)
    p0_reject = Fraction(0)
    p1_reject = Fraction(0)
    total_p1 = Fraction(0)
    lr_table = []
    for combo in itertools.combinations(range(N), m):
        degrees = [0] * n
        for code in combo:
            u, v = pairs[code]
            degrees[u] += 1
            degrees[v] += 1
        p1 = Fraction(sum(star_counts[d] for d in degrees), denom1)
        lam = p1 / p0
        total_p1 += p1
        lr_table.append(float(lam))
        if p1 > p0:
            tv += p1 - p0
        if lam >= 1:
            p0_reject += p0
            p1_reject += p1
        e0 += p0 * lam
    if total_p1 != 1:
        raise AssertionError(f"planted probabilities sum to {total_p1}, not 1")
    tv_ordered = p1_reject - p0_reject
    return EnumerationResult(
        tv=float(tv),
        tv_ordered=float(tv_ordered),
        e0_lambda=float(e0),
        lr_table=lr_table,
        n_graphs=n_graphs,
    )


def run_enumerate(cfg: RunConfig) -> RunRecord:
    """Exact enumeration wrapped as a single-point record."""
    t_start = time.perf_counter()
    model = cfg.model
    res = exact_enumeration(model.n, model.m, model.k)
    metrics = {
        "tv": MetricEstimate(res.tv, 0.0, 1),
        "tv_ordered": MetricEstimate(res.tv_ordered, 0.0, 1),
        "e0_lambda": MetricEstimate(res.e0_lambda, 0.0, 1),
        "n_graphs": MetricEstimate(float(res.n_graphs), 0.0, 1),
    }
    point = PointResult(
        grid_value=float(model.m), m=model.m, metrics=metrics, flags=()
    )
    return RunRecord(
        config=cfg,
        per_point=[point],
        wall_time=time.perf_counter() - t_start,
        tool_version=__version__,
    )


def run_experiment(cfg: RunConfig) -> RunRecord:
    runner = {
        "tv_sweep": run_tv_sweep,
        "null_phase": run_null_phase,
        "agreement": run_agreement,
        "recovery": run_recovery,
        "rem_phase": run_rem_phase,
        "enumerate": run_enumerate,
    }[cfg.experiment]
    return runner(cfg)


# --- persistence ----------------------------------------------------------------


def _model_dict(model: ModelParams) -> dict:
    return {
        "n": model.n,
        "m": model.m,
        "k": model.k,
        "alpha": model.alpha,
        "gamma": model.gamma,
        "c": model.c,
        "clamped": model.clamped,
    }


def _config_dict(cfg: RunConfig) -> dict:
    return {
        "model": cfg.model,
        "replicates": cfg.replicates,
        "seed": cfg.seed,
        "experiment": cfg.experiment,
        "grid": cfg.grid,
        "grid_name": cfg.grid_name,
        "threads": cfg.threads,
        "store_replicates": cfg.store_replicates,
    }


def record_to_dict(record: RunRecord) -> dict:
    cfg = _config_dict(record.config)
    cfg["model"] = _model_dict(record.config.model)
    cfg["grid"] = list(record.config.grid) if record.config.grid is not None else None
    return {
        "schema": record.schema,
        "config": cfg,
        "per_point": [
            {
                "grid_value": p.grid_value,
                "m": p.m,
                "metrics": {
                    name: {
                        "estimate": est.estimate,
                        "stderr": est.stderr,
                        "n_replicates": est.n_replicates,
                    }
                    for name, est in p.metrics.items()
                },
                "flags": list(p.flags),
                "replicate_metrics": p.replicate_metrics,
            }
            for p in record.per_point
        ],
        "wall_time": record.wall_time,
        "tool_version": record.tool_version,
    }


def record_from_dict(data: dict) -> RunRecord:
    schema = data.get("schema")
    if schema != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"unknown schema version {schema!r}; this build reads {SCHEMA_VERSION!r}"
        )
    cfg_data = dict(data["config"])
    model = ModelParams(**cfg_data.pop("model"))
    grid = cfg_data.pop("grid")
    cfg = RunConfig(
        model=model,
        grid=tuple(grid) if grid is not None else None,
        **cfg_data,
    )
    per_point = [
        PointResult(
            grid_value=p["grid_value"],
            m=p["m"],
            metrics={
                name: MetricEstimate(**est) for name, est in p["metrics"].items()
            },
            flags=tuple(p["flags"]),
            replicate_metrics=p["replicate_metrics"],
        )
        for p in data["per_point"]
    ]
    return RunRecord(
        config=cfg,
        per_point=per_point,
        wall_time=data["wall_time"],
        tool_version=data["tool_version"],
        schema=schema,
    )


def persist(record: RunRecord, path) -> None:
    """Write a record as schema-versioned JSON."""
    with open(path, "w") as fh:
        json.dump(record_to_dict(record), fh, indent=1)
        fh.write("\n")


def load(path) -> RunRecord:
    """Read a record written by persist; rejects unknown schema versions."""
    with open(path) as fh:
        return record_from_dict(json.load(fh))


CSV_COLUMNS = (
    "experiment",
    "n",
    "m",
    "k",
    "alpha",
    "grid_name",
    "grid_value",
    "metric",
    "estimate",
    "stderr",
    "replicates",
    "seed",
)


def record_to_csv(record: RunRecord, fileobj) -> None:
    """One row per grid point and metric, in the documented column order."""
    cfg = record.config
    grid_name = cfg.grid_name if cfg.grid is not None else "m"
    fileobj.write(",".join(CSV_COLUMNS) + "\n")
    for point in record.per_point:
        for name in sorted(point.metrics):
            est = point.metrics[name]
            row = (
                cfg.experiment,
                str(cfg.model.n),
                str(point.m),
                str(cfg.model.k),
                repr(cfg.model.alpha),
                grid_name,
                repr(point.grid_value),
                name,
                repr(est.estimate),
                repr(est.stderr),
                str(est.n_replicates),
                str(cfg.seed),
            )
            fileobj.write(",".join(row) + "\n")
