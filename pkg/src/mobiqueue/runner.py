"""Reproducible experiment execution: jobs, result directories and CSV tables."""

from concurrent.futures import ProcessPoolExecutor
import csv
import logging
import math
import os
from pathlib import Path
import platform
import time

import numpy as np
from scipy import stats

from . import __version__
from .config import emit_config
from .estimators import batch_means, empirical_cdf, growth_rate

log = logging.getLogger(__name__)

AXIS_FIELDS = {"velocity": "velocity", "model": "model", "rate": "rate", "load": "load"}
SUMMARY_COLUMNS = ("point", "replication", "model", "velocity", "rate", "load",
                   "metric", "value", "ci_lo", "ci_hi")
TRACE_ROWS = 10000


def point_configs(config):
    """Expand the sweep of ``config`` into ``(label, config)`` pairs."""
    pts = config.sweep.points() or [{}]
    out = []
    for i, p in enumerate(pts):
        c = config.with_values(**{AXIS_FIELDS[k]: v for k, v in p.items()})
        out.append((f"p{i:03d}", c))
    return out


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _row(label, rep, c, metric, value, lo=math.nan, hi=math.nan):
    return (label, rep, c.model, c.velocity, c.rate, c.load, metric, value, lo, hi)


def _bm_rows(label, rep, c, metric, series, n_batches=30):
    if series.size < 2 * n_batches:
        m = float(series.mean()) if series.size else math.nan
        return [_row(label, rep, c, metric, m)]
    est = batch_means(series, n_batches)
    return [_row(label, rep, c, metric, est.mean, est.ci_low, est.ci_high)]


def _single_job(label, rep, c, run_dir):
    from .simulate import run_single_queue, resolve_rate

    run = run_single_queue(c, rep)
    w0 = run.warmup
    stem = f"{label}_r{rep:02d}"
    stride = max(1, math.ceil(c.horizon / TRACE_ROWS))
    idx = np.arange(0, c.horizon, stride)
    _write_csv(run_dir / f"{stem}_trajectory.csv", ("slot", "W", "A", "V"),
               zip(idx, run.workload[idx + 1], run.arrivals[idx], run.service[idx]))
    d = run.delays()
    _write_csv(run_dir / f"{stem}_delays.csv", ("packet_id", "arrival_slot", "departure_slot", "delay"),
               zip(d.packet_id, d.arrival_slot, d.departure_slot, d.delay))
    rows = []
    steady = run.workload[w0 + 1:]
    if c.mode == "static":
        g = growth_rate(run.workload[w0:], 1.0)
        rows.append(_row(label, rep, c, "workload_slope", g.slope, g.slope - g.ci_halfwidth, g.slope + g.ci_halfwidth))
    rows += _bm_rows(label, rep, c, "mean_workload", steady)
    rows += _bm_rows(label, rep, c, "mean_service_rate", run.service[w0:] / c.slot)
    keep = d.arrival_slot >= w0
    delays = d.delay[keep]
    if delays.size:
        rows.append(_row(label, rep, c, "mean_delay", float(delays.mean())))
        rows.append(_row(label, rep, c, "delay_p99", float(np.quantile(delays, 0.99))))
        xs, cdf = empirical_cdf(delays).steps()
    rows.append(_row(label, rep, c, "censored_packets", d.censored))
    rows.append(_row(label, rep, c, "arrival_rate", resolve_rate(c)))
    tag = (label, rep, c.model, c.velocity)
    cdf_rows = [(*tag, x, y) for x, y in zip(xs, cdf)] if delays.size else []
    trace = [(*tag, s, run.workload[s + 1]) for s in idx]
    return {"summary": rows, "delay_cdf": cdf_rows, "trajectories": trace}


def _interacting_job(label, rep, c, run_dir):
    from .simulate import run_interacting

    run = run_interacting(c, rep)
    w0 = run.warmup
    stem = f"{label}_r{rep:02d}"
    stride = max(1, math.ceil(c.horizon / TRACE_ROWS))
    idx = np.arange(0, c.horizon, stride)
    _write_csv(run_dir / f"{stem}_queues.csv", ("slot", "queue_id", "W"),
               ((s, q, run.workloads[s + 1, q]) for s in idx for q in range(run.workloads.shape[1])))
    rows = _bm_rows(label, rep, c, "mean_queue_length", run.mean_workload[w0 + 1:])
    rows += _bm_rows(label, rep, c, "tagged_mean_workload", run.tagged_workload[w0 + 1:])
    rows += _bm_rows(label, rep, c, "mean_service_rate", run.service[w0:].mean(axis=1) / c.slot)
    tag = (label, rep, c.model, c.velocity)
    trace = [(*tag, s, run.mean_workload[s + 1]) for s in idx]
    return {"summary": rows, "delay_cdf": [], "trajectories": trace}


def _job(args):
    label, rep, c, run_dir = args
    if c.mode == "interacting":
        return _interacting_job(label, rep, c, Path(run_dir))
    return _single_job(label, rep, c, Path(run_dir))


def _aggregate(rows, n_reps):
    if n_reps < 2:
        return []
    groups = {}
    for r in rows:
        groups.setdefault((r[0], r[6]), []).append(r)
    out = []
    t = stats.t.ppf(0.975, n_reps - 1)
    for (label, metric), rs in sorted(groups.items()):
        vals = np.array([float(r[7]) for r in rs])
        m = float(vals.mean())
        h = float(t * vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
        out.append((label, "all", *rs[0][2:6], metric, m, m - h, m + h))
    return out


def _heavy_traffic_rows(points):
    from .analytics import SystemParams, heavy_traffic_workload

    rows = []
    for label, c in points:
        if c.policy != "indicator" or c.load <= 0 or c.model == "static" or c.signal_fading != "rayleigh":
            continue
        ht = heavy_traffic_workload(SystemParams.from_config(c), c.mobility)
        rows.append(_row(label, "analytic", c, "heavy_traffic_workload", ht.mean_workload))
        rows.append(_row(label, "analytic", c, "heavy_traffic_cs2", ht.cs2))
    return rows


def run(config, out_dir, workers=1):
    """Run every (sweep point, replication) job of ``config``.

    Writes ``config.ini``, ``runs/*.csv``, ``summary.csv`` and ``run.log``
    under ``out_dir`` and returns its path. Summary rows are sorted, so the
    table does not depend on ``workers``.
    """
    out = Path(out_dir)
    run_dir = out / "runs"
    run_dir.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(emit_config(config), encoding="utf-8")
    points = point_configs(config)
    jobs = [(label, rep, c, str(run_dir)) for label, c in points for rep in range(config.replications)]
    t0 = time.perf_counter()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    rows = sorted((r for res in results for r in res["summary"]), key=lambda r: (r[0], str(r[1]), r[6]))
    tag = ("point", "replication", "model", "velocity")
    for name, cols in (("delay_cdf", ("delay", "cdf")), ("trajectories", ("slot", "W"))):
        extra = [r for res in results for r in res[name]]
        if extra:
            _write_csv(out / f"{name}.csv", tag + cols, extra)
    rows += _aggregate(rows, config.replications)
    if config.mode == "single":
        rows += _heavy_traffic_rows(points)
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, rows)
    _write_log(out, config, workers, len(jobs), time.perf_counter() - t0)
    return out


def _write_log(out, config, workers, n_jobs, elapsed):
    import numba
    import scipy

    lines = [
        f"mobiqueue {__version__}",
        f"python {platform.python_version()} numpy {np.__version__} scipy {scipy.__version__} numba {numba.__version__}",
        f"seed {config.seed}",
        f"jobs {n_jobs} workers {workers}",
        f"elapsed_seconds {elapsed:.3f}",
    ]
    (out / "run.log").write_text("\n".join(lines) + "\n", encoding="utf-8")


ANALYZE_COLUMNS = ("quantity", "model", "velocity", "rate", "load", "lag", "value", "abs_error_estimate")


def analyze(config, out_dir):
    """Evaluate the analytic quantities at every sweep point; writes ``analysis.csv``."""
    from .analytics import (QuadratureSpec, SystemParams, arena_spec, conditional_gain,
                            corr_coefficient, heavy_traffic_workload, joint_level_crossing,
                            mean_service_rate_empirical, mean_service_rate_shannon,
                            prob_level_crossing, prob_unstable_static)
    from .mobility import MobilityKernel

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(emit_config(config), encoding="utf-8")
    t0 = time.perf_counter()
    rows = []
    spec = QuadratureSpec(seed=config.seed)
    for _, c in point_configs(config):
        p = SystemParams.from_config(c)
        tag = (c.model, c.velocity, c.rate, c.load, c.lag)
        add = lambda name, res: rows.append((name, *tag, res[0], res[1]))
        kernel = MobilityKernel(c.mobility, c.lag)
        rayleigh = c.signal_fading == "rayleigh"
        if rayleigh:
            add("prob_level_crossing", prob_level_crossing(p, spec))
            add("prob_level_crossing_arena", prob_level_crossing(p, arena_spec(c)))
            add("joint_level_crossing", joint_level_crossing(p, kernel, spec))
            add("conditional_gain", conditional_gain(p, kernel, spec))
            if c.rate > 0 and c.load == 0:
                add("prob_unstable_static", prob_unstable_static(p, spec))
        add("corr_coefficient", corr_coefficient(kernel, p.path_loss, c.interferer_fade.second_moment, spec))
        est = mean_service_rate_empirical(c)
        add("mean_service_rate_empirical", (est.mean, est.ci_halfwidth))
        if c.path_loss == "power" and c.noise == 0 and rayleigh:
            add("mean_service_rate_shannon_nats", mean_service_rate_shannon(c.intensity, c.link_distance, c.exponent))
        if c.policy == "indicator" and rayleigh and (c.load > 0 or c.rate > 0) and c.model != "static":
            ht = heavy_traffic_workload(p, c.mobility, spec=spec)
            add("heavy_traffic_workload", (ht.mean_workload, math.nan))
            add("heavy_traffic_cs2", (ht.cs2, math.nan))
    _write_csv(out / "analysis.csv", ANALYZE_COLUMNS, rows)
    _write_log(out, config, 1, len(rows), time.perf_counter() - t0)
    return out
