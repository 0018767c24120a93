"""Command-line benchmark driver.

Subcommands: ``simulate`` (trajectory CSV + metadata), ``forecast`` (per-
dimension forecasts from a trajectory CSV, with an overlay figure),
``evaluate`` (metrics between truth and prediction), and the experiment
drivers ``sweep``, ``scaling``, and ``invariants`` (results CSV + manifest +
summary figure).  A JSON config file passed via ``--config`` overrides any
flags; every run writes a manifest with the fully resolved configuration and
its hash.  Exit codes: 0 success, 2 usage or validation error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments, forecasters, metrics, plots
from .dynsys import (
    IntegrationDivergedError,
    TimeSeries,
    _atomic_write_text,
    add_gaussian_noise,
    read_trajectory_csv,
    sample_trajectory,
    write_trajectory_csv,
)
from .forecasters import EmbedParams, KernelParams
from .systems import get_system, list_systems

OUT_ROOT_ENV = "PARROTBENCH_OUT"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_FMT = "%.17g"


class UsageError(Exception):
    pass


def _out_dir(args) -> Path:
    root = args.out or os.environ.get(OUT_ROOT_ENV) or "."
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _apply_config(args: argparse.Namespace) -> dict:
    """Merge flag values with the config file (config wins) and return the
    fully resolved configuration."""
    config = {k: v for k, v in vars(args).items() if k not in ("func", "config")}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            overrides = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {path} is not valid JSON: {exc}")
        unknown = set(overrides) - set(config)
        if unknown:
            raise UsageError(
                f"config file {path} has unknown keys: {sorted(unknown)}"
            )
        config.update(overrides)
        for key, value in overrides.items():
            setattr(args, key, value)
    config["out"] = str(_out_dir(args))
    return config


def _positive(value: float, name: str) -> None:
    if value <= 0:
        raise UsageError(f"--{name} must be positive, got {value}")


def cmd_simulate(args) -> int:
    config = _apply_config(args)
    _positive(args.ppl, "ppl")
    _positive(args.n, "n")
    try:
        spec = get_system(args.system)
    except KeyError as exc:
        raise UsageError(str(exc))
    ts = sample_trajectory(spec, args.ppl, args.n, args.seed)
    if args.noise > 0:
        ts = add_gaussian_noise(ts, args.noise, args.seed)
    out = _out_dir(args)
    path = out / f"{spec.name}.csv"
    write_trajectory_csv(
        ts, path, system=spec.name, lle=spec.reference_lle, seed=args.seed
    )
    experiments.write_manifest(config, out / "manifest.json")
    print(f"wrote {path} ({ts.n_points} samples, {ts.dim} dimensions)")
    return EXIT_OK


def _forecast_result(context: np.ndarray, args):
    p = EmbedParams(embed_dim=args.embed_dim, horizon=args.horizon)
    method = args.method
    if method == "parrot":
        return forecasters.parrot_forecast(context, p)
    if method == "knn":
        return forecasters.knn_forecast(
            context, p, k=args.k, kp=KernelParams(bandwidth=args.bandwidth)
        )
    if method == "smap":
        return forecasters.smap_forecast(context, p, theta=args.theta)
    if method == "nw":
        return forecasters.nw_forecast(
            context, p, KernelParams(bandwidth=args.bandwidth)
        )
    if method == "mean":
        return forecasters.mean_baseline(context, args.horizon)
    if method == "naive":
        return forecasters.naive_baseline(context, args.horizon)
    raise UsageError(f"unknown method {args.method!r}")


def cmd_forecast(args) -> int:
    config = _apply_config(args)
    path = Path(args.input)
    if not path.exists():
        raise UsageError(f"input file not found: {path}")
    try:
        ts, _meta = read_trajectory_csv(path)
    except ValueError as exc:
        raise UsageError(f"malformed CSV: {exc}")

    n = ts.n_points
    H = args.horizon
    with_truth = args.with_truth
    L = args.context_length or (n - H if with_truth else n)
    if with_truth and L + H > n:
        raise UsageError(
            f"--context-length {L} + --horizon {H} exceeds the {n} input rows"
        )
    if not with_truth and L > n:
        raise UsageError(f"--context-length {L} exceeds the {n} input rows")

    start = n - H - L if with_truth else n - L
    out = _out_dir(args)
    lines = ["t,dim,truth,pred"]
    overlay_args = None
    for d in range(ts.dim):
        context = ts.values[start : start + L, d]
        truth = ts.values[start + L : start + L + H, d] if with_truth else None
        res = _forecast_result(context, args)
        for i in range(H):
            t_val = start + L + i
            truth_s = _FMT % truth[i] if truth is not None else ""
            lines.append(f"{t_val},{d},{truth_s},{_FMT % res.prediction[i]}")
        if d == 0:
            overlay_args = (context, res.prediction, truth, res.match_end)
    fc_path = out / "forecast.csv"
    _atomic_write_text(fc_path, "\n".join(lines) + "\n")
    experiments.write_manifest(config, out / "manifest.json")

    if not args.no_plot and overlay_args is not None:
        context, pred, truth, match_end = overlay_args
        plots.forecast_overlay(
            context,
            pred,
            truth,
            out / "forecast.svg",
            match_end=match_end if args.method == "parrot" else None,
            embed_dim=args.embed_dim,
            title=f"{args.method} forecast of {path.stem} (dim 0)",
        )
    print(f"wrote {fc_path}")
    return EXIT_OK


def _read_forecast_csv(path: Path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header != ["t", "dim", "truth", "pred"]:
            raise UsageError(f"{path}: expected header t,dim,truth,pred")
        by_dim: dict[int, list[tuple[float, float]]] = {}
        for lineno, line in enumerate(fh, start=2):
            parts = line.strip().split(",")
            if len(parts) != 4:
                raise UsageError(f"{path}:{lineno}: expected 4 columns")
            if parts[2] == "":
                raise UsageError(
                    f"{path}:{lineno}: no truth column; evaluation needs "
                    "a forecast produced with --with-truth"
                )
            by_dim.setdefault(int(parts[1]), []).append(
                (float(parts[2]), float(parts[3]))
            )
    return by_dim


def cmd_evaluate(args) -> int:
    config = _apply_config(args)
    path = Path(args.forecast)
    if not path.exists():
        raise UsageError(f"forecast file not found: {path}")
    by_dim = _read_forecast_csv(path)
    wanted = [m.strip() for m in args.metrics.split(",") if m.strip()]
    out = _out_dir(args)

    reports = []
    for name in wanted:
        per_dim = []
        for d, pairs in sorted(by_dim.items()):
            truth = np.array([p[0] for p in pairs])
            pred = np.array([p[1] for p in pairs])
            if name == "smape":
                per_dim.append(metrics.smape(truth, pred))
            elif name == "mse":
                per_dim.append(metrics.mse(truth, pred))
            elif name == "mae":
                per_dim.append(metrics.mae(truth, pred))
            elif name == "smape_1lt":
                per_dim.append(
                    metrics.smape_at_lyapunov_time(truth, pred, args.ppl)
                )
            elif name == "vpt":
                per_dim.append(
                    metrics.valid_prediction_time(truth, pred, args.ppl)
                )
            elif name == "kl":
                per_dim.append(
                    metrics.kl_attractor(
                        truth[:, None], pred[:, None], seed=args.seed
                    ).value
                )
            elif name == "hellinger":
                _, s_t = metrics.welch_psd(truth)
                _, s_p = metrics.welch_psd(pred)
                per_dim.append(metrics.hellinger_psd(s_t, s_p))
            else:
                raise UsageError(f"unknown metric {name!r}")
        reports.append(
            metrics.MetricReport(
                metric=name,
                value=float(np.mean(per_dim)),
                settings={"per_dim_mean": True, "n_dims": len(by_dim)},
            )
        )

    json_path = out / "metrics.json"
    _atomic_write_text(
        json_path,
        json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n",
    )
    csv_path = out / "metrics.csv"
    rows = ["metric,value"] + [f"{r.metric},{_FMT % r.value}" for r in reports]
    _atomic_write_text(csv_path, "\n".join(rows) + "\n")
    experiments.write_manifest(config, out / "manifest.json")
    for r in reports:
        print(f"{r.metric}: {r.value:.6g}")
    return EXIT_OK


def _parse_systems(value: str) -> list[str]:
    names = [s.strip() for s in value.split(",") if s.strip()]
    if not names:
        raise UsageError("no systems given")
    if names == ["all"]:
        return list_systems()
    for name in names:
        try:
            get_system(name)
        except KeyError as exc:
            raise UsageError(str(exc))
    return names


def cmd_sweep(args) -> int:
    config = _apply_config(args)
    systems = _parse_systems(args.systems)
    lengths = [int(x) for x in str(args.context_lengths).split(",")]
    methods = [m.strip() for m in args.methods.split(",")]
    try:
        results = experiments.run_sweep(
            systems,
            methods=methods,
            context_lengths=lengths,
            seeds=args.seeds,
            embed_dim=args.embed_dim,
            horizon=args.horizon,
            points_per_lyapunov=args.ppl,
            noise_level=args.noise,
            master_seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    out = _out_dir(args)
    experiments.write_results_csv(results, out / "results.csv")
    config["master_seed"] = args.seed
    experiments.write_manifest(config, out / "manifest.json")
    medians = experiments.summarize(results, "smape_1lt")
    plots.sweep_figure(
        medians, "median sMAPE at 1 Lyapunov time", out / "summary.svg"
    )
    print(f"wrote {out / 'results.csv'} ({len(results)} cells)")
    return EXIT_OK


def cmd_scaling(args) -> int:
    config = _apply_config(args)
    systems = _parse_systems(args.systems)
    lengths = [int(x) for x in str(args.context_lengths).split(",")]
    try:
        rows, spearman, results = experiments.scaling_study(
            systems,
            context_lengths=lengths,
            seeds=args.seeds,
            embed_dim=args.embed_dim,
            points_per_lyapunov=args.ppl,
            master_seed=args.seed,
            dcor_points=args.dcor_points,
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    out = _out_dir(args)
    experiments.write_results_csv(results, out / "results.csv")

    lines = ["system,alpha_e,alpha_ell,r2_e,r2_ell,d_cor"]
    for r in rows:
        lines.append(
            f"{r.system},{r.alpha_e:.6g},{r.alpha_ell:.6g},"
            f"{r.r2_e:.6g},{r.r2_ell:.6g},{r.d_cor:.6g}"
        )
    lines.append(f"# spearman(alpha_e. 1/d_cor) = {spearman:.6g}")
    _atomic_write_text(out / "scaling.csv", "\n".join(lines) + "\n")
    experiments.write_manifest(config, out / "manifest.json")

    per_system_pairs, fits = {}, {}
    for row in rows:
        cells = [c for c in results if c.system == row.system]
        pairs = []
        for L in lengths:
            at_L = [c.one_step_error for c in cells if c.L == L]
            pairs.append((L, float(np.mean(at_L))))
        per_system_pairs[row.system] = pairs
        fits[row.system] = experiments.fit_power_law(pairs)
    plots.scaling_figure(per_system_pairs, fits, rows, out / "scaling.svg")
    print(f"spearman(alpha, 1/d_cor) = {spearman:.3f} over {len(rows)} systems")
    return EXIT_OK


def cmd_invariants(args) -> int:
    config = _apply_config(args)
    try:
        spec = get_system(args.system)
    except KeyError as exc:
        raise UsageError(str(exc))
    lengths = [int(x) for x in str(args.context_lengths).split(",")]
    try:
        rows = experiments.invariant_convergence(
            spec,
            context_lengths=lengths,
            horizon=args.horizon,
            seeds=args.seeds,
            embed_dim=args.embed_dim,
            points_per_lyapunov=args.ppl,
            master_seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    out = _out_dir(args)
    lines = ["L,hellinger_psd,d_cor_error,lyapunov_error"]
    for r in rows:
        lines.append(
            f"{r['L']},{_FMT % r['hellinger_psd']},{_FMT % r['d_cor_error']},"
            f"{_FMT % r['lyapunov_error']}"
        )
    _atomic_write_text(out / "invariants.csv", "\n".join(lines) + "\n")
    experiments.write_manifest(config, out / "manifest.json")
    plots.invariant_figure(rows, out / "invariants.svg")
    print(f"wrote {out / 'invariants.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parrotbench",
        description="Forecast chaotic systems by motif matching and benchmark it.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output directory "
                       f"(default: ${OUT_ROOT_ENV} or the current directory)")
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("--config", default=None,
                       help="JSON config file; its values override flags")

    p = sub.add_parser("simulate", help="integrate a built-in system to CSV")
    p.add_argument("--system", required=True)
    p.add_argument("--n", type=int, default=100_000, help="number of samples")
    p.add_argument("--ppl", type=float, default=30.0,
                   help="points per Lyapunov time")
    p.add_argument("--noise", type=float, default=0.0,
                   help="observation noise std in z-scored units")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("forecast", help="forecast a trajectory CSV")
    p.add_argument("--input", required=True, help="trajectory CSV")
    p.add_argument("--method", default="parrot",
                   choices=["parrot", "knn", "smap", "nw", "mean", "naive"])
    p.add_argument("--context-length", type=int, default=None, dest="context_length")
    p.add_argument("--embed-dim", type=int, default=5, dest="embed_dim")
    p.add_argument("--horizon", type=int, default=300)
    p.add_argument("--with-truth", action="store_true", dest="with_truth",
                   help="reserve the last horizon rows as ground truth")
    p.add_argument("--k", type=int, default=6, help="neighbors for knn")
    p.add_argument("--theta", type=float, default=2.0, help="smap weighting")
    p.add_argument("--bandwidth", type=float, default=0.5,
                   help="kernel bandwidth for knn/nw")
    p.add_argument("--no-plot", action="store_true", dest="no_plot")
    common(p)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("evaluate", help="compute metrics for a forecast CSV")
    p.add_argument("--forecast", required=True,
                   help="forecast CSV with truth and pred columns")
    p.add_argument("--metrics", default="smape,mse,mae,smape_1lt,vpt",
                   help="comma-separated metric names")
    p.add_argument("--ppl", type=float, default=30.0)
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="run the benchmark grid")
    p.add_argument("--systems", default="all",
                   help="comma-separated system names, or 'all'")
    p.add_argument("--methods", default="parrot,mean,naive")
    p.add_argument("--context-lengths", default="200,512,2000",
                   dest="context_lengths")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--embed-dim", type=int, default=5, dest="embed_dim")
    p.add_argument("--horizon", type=int, default=300)
    p.add_argument("--ppl", type=float, default=30.0)
    p.add_argument("--noise", type=float, default=0.0)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("scaling", help="fit error-vs-context power laws")
    p.add_argument("--systems", default="all")
    p.add_argument("--context-lengths", default="200,500,1000,2000,5000,10000",
                   dest="context_lengths")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--embed-dim", type=int, default=10, dest="embed_dim")
    p.add_argument("--ppl", type=float, default=30.0)
    p.add_argument("--dcor-points", type=int, default=100_000, dest="dcor_points")
    common(p)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("invariants",
                       help="long-rollout invariant convergence for one system")
    p.add_argument("--system", default="lorenz")
    p.add_argument("--context-lengths", default="100,500,3000",
                   dest="context_lengths")
    p.add_argument("--horizon", type=int, default=10_000)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--embed-dim", type=int, default=5, dest="embed_dim")
    p.add_argument("--ppl", type=float, default=30.0)
    common(p)
    p.set_defaults(func=cmd_invariants)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IntegrationDivergedError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
