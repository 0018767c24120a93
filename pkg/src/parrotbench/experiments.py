"""Benchmark orchestration: context-length sweeps, power-law fits, and
long-horizon invariant checks.

A sweep cell is one (system, context length, seed, method) combination: a
seed-keyed window of a long normalized trajectory supplies the context and
the ground-truth continuation, every dimension is forecast independently,
and per-dimension metrics are averaged within the cell.  The whole grid is a
pure function of the configuration and master seed; cells are independent
and keyed, so collection order never matters.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from . import forecasters, metrics
from .dynsys import SystemSpec, TimeSeries, add_gaussian_noise, sample_trajectories
from .forecasters import EmbedParams, KernelParams
from .metrics import MetricReport
from .systems import get_system

__all__ = [
    "SweepResult",
    "PowerLawFit",
    "ScalingRow",
    "run_sweep",
    "fit_power_law",
    "scaling_study",
    "invariant_convergence",
    "noise_sweep",
    "granularity_sweep",
    "summarize",
    "results_to_csv_rows",
    "write_results_csv",
    "write_manifest",
    "config_hash",
]

DEFAULT_METRICS = ("smape_1lt", "vpt", "mae_1lt", "mse_1lt", "kl")

WINDOW_SLACK = 2000  # extra trajectory points beyond max(L) + horizon


@dataclass
class SweepResult:
    """One benchmark cell: forecasts of a single windowed task."""

    system: str
    L: int
    seed: int
    method: str
    one_step_error: float
    nn_distance: float | None
    metrics: list[MetricReport] = field(default_factory=list)

    def metric_value(self, name: str) -> float:
        for m in self.metrics:
            if m.metric == name:
                return m.value
        raise KeyError(f"metric {name!r} not recorded for this cell")


@dataclass
class PowerLawFit:
    """Least-squares fit of log(value) against log(L)."""

    alpha: float
    intercept: float
    r_squared: float
    n_points: int


@dataclass
class ScalingRow:
    system: str
    alpha_e: float
    alpha_ell: float
    r2_e: float
    r2_ell: float
    d_cor: float


def _cell_rng(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, *key]))


def _forecaster(method: str, p: EmbedParams) -> Callable[[np.ndarray], forecasters.ForecastResult]:
    """Resolve a method name to a context -> ForecastResult callable."""
    if method == "parrot":
        return lambda c: forecasters.parrot_forecast(c, p)
    if method == "mean":
        return lambda c: forecasters.mean_baseline(c, p.horizon)
    if method == "naive":
        return lambda c: forecasters.naive_baseline(c, p.horizon)
    if method == "knn":
        kp = KernelParams(kind="gaussian", bandwidth=1.0)
        return lambda c: forecasters.knn_forecast(c, p, k=p.embed_dim + 1, kp=kp)
    if method == "smap":
        return lambda c: forecasters.smap_forecast(c, p, theta=2.0)
    if method == "nw":
        kp = KernelParams(kind="gaussian", bandwidth=0.5)
        return lambda c: forecasters.nw_forecast(c, p, kp)
    raise ValueError(f"unknown forecasting method {method!r}")


def _evaluate_metrics(
    names: Sequence[str],
    truth: np.ndarray,
    pred: np.ndarray,
    ppl: float,
    cell_seed: int,
) -> list[tuple[str, float]]:
    out = []
    for name in names:
        if name == "smape_1lt":
            v = metrics.smape_at_lyapunov_time(truth, pred, ppl)
        elif name == "vpt":
            v = metrics.valid_prediction_time(truth, pred, ppl)
        elif name == "mae_1lt":
            n = max(1, min(int(round(ppl)), truth.size))
            v = metrics.mae(truth[:n], pred[:n])
        elif name == "mse_1lt":
            n = max(1, min(int(round(ppl)), truth.size))
            v = metrics.mse(truth[:n], pred[:n])
        elif name == "kl":
            v = metrics.kl_attractor(
                truth[:, None], pred[:, None], seed=cell_seed
            ).value
        elif name == "smape":
            v = metrics.smape(truth, pred)
        elif name == "mae":
            v = metrics.mae(truth, pred)
        elif name == "mse":
            v = metrics.mse(truth, pred)
        elif name == "hellinger":
            _, s_true = metrics.welch_psd(truth)
            _, s_pred = metrics.welch_psd(pred)
            v = metrics.hellinger_psd(s_true, s_pred)
        elif name == "dcor_pred":
            v = metrics.correlation_dimension(metrics.delay_embed(pred, 3, 3)).value
        elif name == "dcor_true":
            v = metrics.correlation_dimension(metrics.delay_embed(truth, 3, 3)).value
        else:
            raise ValueError(f"unknown metric {name!r}")
        out.append((name, v))
    return out


def _resolve_seeds(seeds: int | Sequence[int]) -> list[int]:
    if isinstance(seeds, int):
        return list(range(seeds))
    return list(seeds)


def _resolve_system(system: str | SystemSpec) -> SystemSpec:
    return system if isinstance(system, SystemSpec) else get_system(system)


def run_sweep(
    systems: Sequence[str | SystemSpec],
    methods: Sequence[str],
    context_lengths: Sequence[int],
    seeds: int | Sequence[int],
    embed_dim: int = 5,
    horizon: int = 300,
    points_per_lyapunov: float = 30.0,
    noise_level: float = 0.0,
    master_seed: int = 0,
    metric_names: Sequence[str] = DEFAULT_METRICS,
    traj_points: int | None = None,
) -> list[SweepResult]:
    """Run the full benchmark grid and return one record per cell.

    For every (system, L, seed): a length-``traj_points`` trajectory is
    sampled (all seeds integrated in one batch), optionally perturbed by
    observation noise, and a seed-keyed random window of ``L + horizon``
    points is split into context and ground truth.  Each method forecasts
    every dimension independently; per-dimension metrics are averaged into
    the cell record.  Identical arguments always produce identical results.
    """
    seed_list = _resolve_seeds(seeds)
    specs = [_resolve_system(s) for s in systems]
    p = EmbedParams(embed_dim=embed_dim, horizon=horizon)

    max_L = max(context_lengths)
    n_traj = traj_points if traj_points is not None else max_L + horizon + WINDOW_SLACK

    problems = []
    for L in context_lengths:
        if L < p.min_context():
            problems.append(
                f"L={L} < minimum context {p.min_context()} for embed_dim={embed_dim}"
            )
        if L + horizon > n_traj:
            problems.append(
                f"L={L} + horizon={horizon} exceeds trajectory length {n_traj}"
            )
    if problems:
        raise ValueError("infeasible sweep cells:\n  " + "\n  ".join(problems))

    results: list[SweepResult] = []
    for sys_idx, spec in enumerate(specs):
        trajs = sample_trajectories(spec, points_per_lyapunov, n_traj, seed_list)
        for seed, ts in zip(seed_list, trajs):
            if noise_level > 0:
                noise_seed = int(
                    _cell_rng(master_seed, sys_idx, seed, 1).integers(2**31)
                )
                ts = add_gaussian_noise(ts, noise_level, noise_seed)
            for L in context_lengths:
                rng = _cell_rng(master_seed, sys_idx, seed, L)
                start = int(rng.integers(0, n_traj - (L + horizon) + 1))
                cell_seed = int(rng.integers(2**31))
                window = ts.values[start : start + L + horizon]
                for method in methods:
                    fc = _forecaster(method, p)
                    one_step, nn_dist, per_metric = [], [], {}
                    for d in range(ts.dim):
                        context = window[:L, d]
                        truth = window[L:, d]
                        res = fc(context)
                        one_step.append(metrics.smape(truth[:1], res.prediction[:1]))
                        if res.match_distance is not None:
                            nn_dist.append(res.match_distance)
                        for name, v in _evaluate_metrics(
                            metric_names, truth, res.prediction,
                            points_per_lyapunov, cell_seed,
                        ):
                            per_metric.setdefault(name, []).append(v)
                    results.append(
                        SweepResult(
                            system=spec.name,
                            L=L,
                            seed=seed,
                            method=method,
                            one_step_error=float(np.mean(one_step)),
                            nn_distance=(
                                float(np.mean(nn_dist)) if nn_dist else None
                            ),
                            metrics=[
                                MetricReport(
                                    metric=name,
                                    value=float(np.mean(vals)),
                                    horizon=horizon / points_per_lyapunov,
                                    settings={"per_dim_mean": True},
                                )
                                for name, vals in per_metric.items()
                            ],
                        )
                    )
    return results


def fit_power_law(pairs: Iterable[tuple[float, float]]) -> PowerLawFit:
    """Fit value ~ L**(-alpha) by ordinary least squares in log-log space."""
    pts = [(float(L), float(v)) for L, v in pairs]
    Ls = sorted({L for L, _ in pts})
    if len(Ls) < 4:
        raise ValueError(f"need >= 4 distinct context lengths, got {len(Ls)}")
    if any(v <= 0 for _, v in pts):
        raise ValueError("all values must be positive for a log-log fit")
    x = np.log([L for L, _ in pts])
    y = np.log([v for _, v in pts])
    fit = stats.linregress(x, y)
    r2 = float(fit.rvalue**2) if np.std(y) > 0 else 1.0
    return PowerLawFit(
        alpha=float(-fit.slope),
        intercept=float(fit.intercept),
        r_squared=r2,
        n_points=len(pts),
    )


def scaling_study(
    systems: Sequence[str | SystemSpec],
    context_lengths: Sequence[int],
    seeds: int | Sequence[int],
    embed_dim: int = 10,
    points_per_lyapunov: float = 30.0,
    master_seed: int = 0,
    dcor_points: int = 100_000,
) -> tuple[list[ScalingRow], float, list[SweepResult]]:
    """Fit per-system scaling exponents and relate them to attractor dimension.

    For each system the mean one-step error and mean nearest-motif distance
    per context length are fit to power laws, and the correlation dimension
    is estimated from a long trajectory.  Returns the per-system rows, the
    Spearman rank correlation between the error exponent and the inverse
    correlation dimension, and the raw sweep records.
    """
    if len(set(context_lengths)) < 4:
        raise ValueError("need >= 4 distinct context lengths")
    results = run_sweep(
        systems,
        methods=["parrot"],
        context_lengths=context_lengths,
        seeds=seeds,
        embed_dim=embed_dim,
        horizon=1,
        points_per_lyapunov=points_per_lyapunov,
        master_seed=master_seed,
        metric_names=(),
    )
    rows: list[ScalingRow] = []
    for system in systems:
        spec = _resolve_system(system)
        cells = [r for r in results if r.system == spec.name]
        e_pairs, ell_pairs = [], []
        for L in context_lengths:
            at_L = [r for r in cells if r.L == L]
            e_pairs.append((L, float(np.mean([r.one_step_error for r in at_L]))))
            ell_pairs.append((L, float(np.mean([r.nn_distance for r in at_L]))))
        fit_e = fit_power_law(e_pairs)
        fit_ell = fit_power_law(ell_pairs)
        traj = sample_trajectories(
            spec, points_per_lyapunov, dcor_points, [master_seed]
        )[0]
        d_cor = metrics.correlation_dimension(traj.values).value
        rows.append(
            ScalingRow(
                system=spec.name,
                alpha_e=fit_e.alpha,
                alpha_ell=fit_ell.alpha,
                r2_e=fit_e.r_squared,
                r2_ell=fit_ell.r_squared,
                d_cor=d_cor,
            )
        )
    alphas = [r.alpha_e for r in rows]
    inv_dims = [1.0 / r.d_cor for r in rows]
    spearman = float(stats.spearmanr(alphas, inv_dims).statistic)
    return rows, spearman, results


def invariant_convergence(
    system: str | SystemSpec,
    context_lengths: Sequence[int],
    horizon: int = 10_000,
    seeds: int | Sequence[int] = 10,
    embed_dim: int = 5,
    points_per_lyapunov: float = 30.0,
    master_seed: int = 0,
    psd_tail: int = 5000,
) -> list[dict]:
    """Check how long-rollout invariants improve with context length.

    For each context length and seed, a motif-copying rollout of ``horizon``
    points is compared with the true continuation on three invariants: the
    Hellinger distance between Welch power spectra of the trailing
    ``psd_tail`` points, the absolute error in correlation dimension of the
    delay-embedded series, and the absolute error in the estimated largest
    Lyapunov exponent.  Per-dimension values are averaged, and the rows
    report the median over seeds for each context length.
    """
    spec = _resolve_system(system)
    if horizon < psd_tail:
        raise ValueError(f"horizon must be >= {psd_tail}")
    seed_list = _resolve_seeds(seeds)
    max_L = max(context_lengths)
    n_traj = max_L + horizon + WINDOW_SLACK
    p_tmpl = dict(embed_dim=embed_dim)

    trajs = sample_trajectories(spec, points_per_lyapunov, n_traj, seed_list)
    rows = []
    per_seed: dict[int, dict[int, tuple[float, float, float]]] = {}
    for seed, ts in zip(seed_list, trajs):
        per_seed[seed] = {}
        for L in context_lengths:
            rng = _cell_rng(master_seed, 0, seed, L)
            start = int(rng.integers(0, n_traj - (L + horizon) + 1))
            window = ts.values[start : start + L + horizon]
            hells, dcor_errs, lyap_errs = [], [], []
            for d in range(ts.dim):
                context = window[:L, d]
                truth = window[L:, d]
                res = forecasters.parrot_forecast(
                    context, EmbedParams(horizon=horizon, **p_tmpl)
                )
                pred = res.prediction
                period = L - res.match_end
                if horizon > period:  # structural check: rollout is periodic
                    assert np.array_equal(pred[period:], pred[:-period])

                _, s_true = metrics.welch_psd(truth[-psd_tail:])
                _, s_pred = metrics.welch_psd(pred[-psd_tail:])
                hells.append(metrics.hellinger_psd(s_true, s_pred))

                emb_t = metrics.delay_embed(truth, 3, 3)
                emb_p = metrics.delay_embed(pred, 3, 3)
                d_t = metrics.correlation_dimension(emb_t).value
                d_p = metrics.correlation_dimension(emb_p).value
                dcor_errs.append(abs(d_p - d_t))

                l_t = metrics.lyapunov_rosenstein(
                    truth, points_per_lyapunov=points_per_lyapunov
                ).value
                l_p = metrics.lyapunov_rosenstein(
                    pred, points_per_lyapunov=points_per_lyapunov
                ).value
                lyap_errs.append(abs(l_p - l_t))
            per_seed[seed][L] = (
                float(np.mean(hells)),
                float(np.mean(dcor_errs)),
                float(np.mean(lyap_errs)),
            )
    for L in context_lengths:
        triples = [per_seed[s][L] for s in seed_list]
        rows.append(
            {
                "L": L,
                "hellinger_psd": float(np.median([t[0] for t in triples])),
                "d_cor_error": float(np.median([t[1] for t in triples])),
                "lyapunov_error": float(np.median([t[2] for t in triples])),
            }
        )
    return rows


def _sweep_table(
    results: list[SweepResult], dcor_truth: dict[str, float] | None = None
) -> dict:
    """Aggregate a sweep into the noise/granularity table schema."""
    by_method: dict[str, dict] = {}
    for method in sorted({r.method for r in results}):
        cells = [r for r in results if r.method == method]
        def col(name):
            return np.array([c.metric_value(name) for c in cells])
        entry = {
            "vpt_mean": float(col("vpt").mean()),
            "vpt_std": float(col("vpt").std()),
            "mae_1lt_mean": float(col("mae_1lt").mean()),
            "mae_1lt_std": float(col("mae_1lt").std()),
            "mse_1lt_mean": float(col("mse_1lt").mean()),
            "mse_1lt_std": float(col("mse_1lt").std()),
            "kl_mean": float(col("kl").mean()),
            "kl_std": float(col("kl").std()),
        }
        if dcor_truth is not None:
            pred_med, true_vals = [], []
            for system in sorted({c.system for c in cells}):
                sys_cells = [c for c in cells if c.system == system]
                pred_med.append(
                    float(np.median([c.metric_value("dcor_pred") for c in sys_cells]))
                )
                true_vals.append(dcor_truth[system])
            if len(true_vals) >= 3:
                entry["dcor_spearman"] = float(
                    stats.spearmanr(pred_med, true_vals).statistic
                )
        by_method[method] = entry
    return by_method


def noise_sweep(
    systems: Sequence[str | SystemSpec],
    levels: Sequence[float] = (1e-3, 1e-2, 1e-1),
    methods: Sequence[str] = ("parrot",),
    context_length: int = 512,
    seeds: int | Sequence[int] = 20,
    embed_dim: int = 5,
    horizon: int = 300,
    points_per_lyapunov: float = 30.0,
    master_seed: int = 0,
    with_dcor: bool = False,
    dcor_truth: dict[str, float] | None = None,
) -> dict[float, dict]:
    """Repeat the benchmark at several observation-noise levels.

    The same master seed is used at every level, so windows and noise fields
    are paired across levels and only the noise magnitude differs.  Returns
    ``{level: {method: table}}`` with the VPT / MAE / MSE / KL summary (and a
    fractal-dimension rank correlation when requested).
    """
    names = list(DEFAULT_METRICS) + (["dcor_pred"] if with_dcor else [])
    out = {}
    for level in levels:
        results = run_sweep(
            systems,
            methods=methods,
            context_lengths=[context_length],
            seeds=seeds,
            embed_dim=embed_dim,
            horizon=horizon,
            points_per_lyapunov=points_per_lyapunov,
            noise_level=level,
            master_seed=master_seed,
            metric_names=names,
        )
        out[level] = _sweep_table(results, dcor_truth if with_dcor else None)
    return out


def granularity_sweep(
    systems: Sequence[str | SystemSpec],
    granularities: Sequence[float] = (10.0, 30.0, 50.0),
    methods: Sequence[str] = ("parrot",),
    context_length: int = 512,
    seeds: int | Sequence[int] = 20,
    embed_dim: int = 5,
    horizon: int = 300,
    master_seed: int = 0,
) -> dict[float, dict]:
    """Repeat the benchmark at several sampling granularities (points per
    Lyapunov time)."""
    out = {}
    for ppl in granularities:
        results = run_sweep(
            systems,
            methods=methods,
            context_lengths=[context_length],
            seeds=seeds,
            embed_dim=embed_dim,
            horizon=horizon,
            points_per_lyapunov=ppl,
            master_seed=master_seed,
        )
        out[ppl] = _sweep_table(results)
    return out


def summarize(
    results: list[SweepResult], metric: str
) -> dict[tuple[str, int, str], dict[str, float]]:
    """Mean and median of a metric per (system, L, method) across seeds."""
    out: dict[tuple[str, int, str], dict[str, float]] = {}
    keys = sorted({(r.system, r.L, r.method) for r in results})
    for key in keys:
        vals = np.array(
            [
                r.metric_value(metric) if metric != "one_step_error" else r.one_step_error
                for r in results
                if (r.system, r.L, r.method) == key
            ]
        )
        out[key] = {"mean": float(vals.mean()), "median": float(np.median(vals))}
    return out


def results_to_csv_rows(results: list[SweepResult]) -> list[str]:
    """Flatten sweep records to CSV lines, one row per cell-metric, sorted."""
    rows = []
    for r in results:
        rows.append(
            f"{r.system},{r.L},{r.seed},{r.method},one_step_smape,"
            f"{r.one_step_error:.17g}"
        )
        if r.nn_distance is not None:
            rows.append(
                f"{r.system},{r.L},{r.seed},{r.method},nn_distance,"
                f"{r.nn_distance:.17g}"
            )
        for m in r.metrics:
            rows.append(
                f"{r.system},{r.L},{r.seed},{r.method},{m.metric},{m.value:.17g}"
            )
    return sorted(rows)


def write_results_csv(results: list[SweepResult], path: str | Path) -> Path:
    from .dynsys import _atomic_write_text

    path = Path(path)
    header = "system,L,seed,method,metric,value"
    _atomic_write_text(
        path, "\n".join([header] + results_to_csv_rows(results)) + "\n"
    )
    return path


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def write_manifest(config: dict, path: str | Path) -> Path:
    """Write the fully resolved run configuration plus its hash."""
    from .dynsys import _atomic_write_text

    path = Path(path)
    manifest = {"config": config, "config_hash": config_hash(config)}
    _atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
