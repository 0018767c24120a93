import numpy as np
import pytest

from parrotbench import experiments
from parrotbench.experiments import (
    fit_power_law,
    granularity_sweep,
    invariant_convergence,
    noise_sweep,
    results_to_csv_rows,
    run_sweep,
    scaling_study,
    summarize,
)


class TestFitPowerLaw:
    def test_exact_power_law(self):
        Ls = [100, 300, 1000, 3000]
        fit = fit_power_law([(L, 100.0 * L**-0.5) for L in Ls])
        assert fit.alpha == pytest.approx(0.5, abs=1e-9)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
        assert fit.n_points == 4

    def test_constant_values(self):
        fit = fit_power_law([(L, 2.0) for L in (10, 100, 1000, 10000)])
        assert fit.alpha == pytest.approx(0.0, abs=1e-12)

    def test_too_few_lengths(self):
        with pytest.raises(ValueError, match="4 distinct"):
            fit_power_law([(10, 1.0), (100, 0.5), (1000, 0.2)])

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            fit_power_law([(10, 1.0), (100, 0.0), (1000, 0.2), (10000, 0.1)])


class TestRunSweep:
    def test_determinism(self):
        kwargs = dict(
            systems=["lorenz"],
            methods=["parrot", "mean"],
            context_lengths=[200],
            seeds=2,
            horizon=60,
            master_seed=11,
        )
        a = results_to_csv_rows(run_sweep(**kwargs))
        b = results_to_csv_rows(run_sweep(**kwargs))
        assert a == b

    def test_infeasible_cells_rejected_before_compute(self):
        with pytest.raises(ValueError, match="infeasible"):
            run_sweep(
                ["lorenz"], ["parrot"], context_lengths=[10], seeds=1,
                embed_dim=5, horizon=60,
            )
        with pytest.raises(ValueError, match="exceeds trajectory length"):
            run_sweep(
                ["lorenz"], ["parrot"], context_lengths=[500], seeds=1,
                horizon=600, traj_points=1000,
            )

    def test_zero_noise_matches_noiseless_run(self):
        kwargs = dict(
            systems=["rossler"], methods=["parrot"], context_lengths=[150],
            seeds=2, horizon=40, master_seed=3,
        )
        plain = results_to_csv_rows(run_sweep(**kwargs))
        zero = results_to_csv_rows(run_sweep(noise_level=0.0, **kwargs))
        assert plain == zero

    def test_parrot_beats_mean_baseline_on_lorenz(self):
        results = run_sweep(
            ["lorenz"], ["parrot", "mean"], context_lengths=[512], seeds=8,
            horizon=300, master_seed=0,
        )
        med = summarize(results, "smape_1lt")
        assert (
            med[("lorenz", 512, "parrot")]["median"]
            < med[("lorenz", 512, "mean")]["median"]
        )

    def test_nn_distance_present_for_parrot_only(self):
        results = run_sweep(
            ["lorenz"], ["parrot", "mean"], context_lengths=[200], seeds=1,
            horizon=30,
        )
        by_method = {r.method: r for r in results}
        assert by_method["parrot"].nn_distance is not None
        assert by_method["mean"].nn_distance is None

    def test_csv_rows_sorted_and_complete(self):
        results = run_sweep(
            ["lorenz"], ["parrot"], context_lengths=[200], seeds=2, horizon=30,
            metric_names=("vpt",),
        )
        rows = results_to_csv_rows(results)
        assert rows == sorted(rows)
        # one_step + nn_distance + vpt per cell
        assert len(rows) == 3 * len(results)


class TestScalingStudy:
    def test_small_study_shape(self):
        rows, spearman, results = scaling_study(
            ["lorenz"],
            context_lengths=[100, 200, 400, 800],
            seeds=4,
            embed_dim=5,
            dcor_points=20_000,
        )
        assert len(rows) == 1
        row = rows[0]
        assert row.system == "lorenz"
        assert 0 < row.alpha_e < 2
        assert 0 < row.alpha_ell < 2
        assert 1.5 < row.d_cor < 2.5
        assert np.isnan(spearman)  # undefined for a single system

    def test_needs_four_lengths(self):
        with pytest.raises(ValueError, match="4 distinct"):
            scaling_study(["lorenz"], context_lengths=[100, 200], seeds=2)


class TestInvariantConvergence:
    def test_lorenz_small(self):
        rows = invariant_convergence(
            "lorenz", context_lengths=[100, 400], horizon=5000, seeds=2,
        )
        assert [r["L"] for r in rows] == [100, 400]
        for r in rows:
            assert 0 <= r["hellinger_psd"] <= 1
            assert r["d_cor_error"] >= 0
            assert r["lyapunov_error"] >= 0

    def test_truth_against_itself_is_near_zero(self, lorenz_long):
        from parrotbench import metrics

        x = lorenz_long.column(0)[:6000]
        _, s = metrics.welch_psd(x[-5000:])
        assert metrics.hellinger_psd(s, s) == 0
        emb = metrics.delay_embed(x, 3, 3)
        assert (
            abs(
                metrics.correlation_dimension(emb).value
                - metrics.correlation_dimension(emb).value
            )
            == 0
        )
        a = metrics.lyapunov_rosenstein(x, points_per_lyapunov=30).value
        b = metrics.lyapunov_rosenstein(x, points_per_lyapunov=30).value
        assert a == b


class TestLevelSweeps:
    def test_noise_tables_have_schema(self):
        tables = noise_sweep(
            ["lorenz"], levels=(1e-3, 1e-1), context_length=200, seeds=2,
            horizon=60,
        )
        assert set(tables) == {1e-3, 1e-1}
        entry = tables[1e-3]["parrot"]
        for key in ("vpt_mean", "vpt_std", "mae_1lt_mean", "mse_1lt_mean", "kl_mean"):
            assert key in entry

    def test_granularity_tables(self):
        tables = granularity_sweep(
            ["lorenz"], granularities=(10.0, 50.0), context_length=200,
            seeds=2, horizon=60,
        )
        assert set(tables) == {10.0, 50.0}
        assert "parrot" in tables[10.0]


class TestManifest:
    def test_hash_stable_under_key_order(self):
        a = experiments.config_hash({"a": 1, "b": [1, 2]})
        b = experiments.config_hash({"b": [1, 2], "a": 1})
        assert a == b
        assert a != experiments.config_hash({"a": 2, "b": [1, 2]})

    def test_write_manifest(self, tmp_path):
        import json

        path = experiments.write_manifest({"x": 1}, tmp_path / "manifest.json")
        data = json.loads(path.read_text())
        assert data["config"] == {"x": 1}
        assert data["config_hash"] == experiments.config_hash({"x": 1})
