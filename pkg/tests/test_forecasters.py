import numpy as np
import pytest

from parrotbench.forecasters import (
    EmbedParams,
    KernelParams,
    knn_forecast,
    markov_parrot,
    mean_baseline,
    mean_pairwise_motif_distance,
    naive_baseline,
    nw_forecast,
    parrot_forecast,
    simplex_projection,
    smap_forecast,
)

from oracles import (
    brute_force_parrot,
    nw_gaussian_oracle,
    simplex_oracle,
    smap_oracle,
    tiled_continuations,
)

TOY = np.array([0, 1, 2, 3, 4, 0, 1, 2, 3, 4], dtype=float)


def random_context(rng, min_len=50, max_len=2000):
    L = int(rng.integers(min_len, max_len + 1))
    return rng.standard_normal(L)


class TestParrot:
    def test_periodic_context(self):
        res = parrot_forecast([0, 1, 0, 1, 0, 1, 0, 1], EmbedParams(2, 3, 2))
        assert list(res.prediction) == [0, 1, 0]
        assert res.match_end == 2  # earliest tie wins
        assert res.match_distance == 0

    def test_constant_context(self):
        res = parrot_forecast(np.full(64, 2.5), EmbedParams(5, 300))
        assert np.all(res.prediction == 2.5)
        assert res.match_distance == 0
        assert len(res.prediction) == 300

    def test_matches_brute_force_on_lorenz(self, lorenz_series):
        x = lorenz_series.column(0)[:512]
        res = parrot_forecast(x, EmbedParams(5, 300))
        pred, end, dist = brute_force_parrot(x, 5, 300)
        assert np.array_equal(res.prediction, pred)
        assert res.match_end == end
        assert res.match_distance == pytest.approx(dist, rel=1e-12)

    def test_matches_brute_force_randomized(self, rng):
        for _ in range(40):
            c = random_context(rng, 50, 600)
            D = int(rng.integers(1, 21))
            p = EmbedParams(D, 37)
            if len(c) < p.min_context():
                continue
            res = parrot_forecast(c, p)
            pred, end, _ = brute_force_parrot(c, D, 37)
            assert np.array_equal(res.prediction, pred)
            assert res.match_end == end

    def test_verbatim_tiling(self, rng):
        c = rng.standard_normal(300)
        p = EmbedParams(4, 500)
        res = parrot_forecast(c, p)
        L, s = len(c), res.match_end
        period = L - s
        for i in range(p.horizon):
            assert res.prediction[i] == c[s + (i % period)]  # bit-equal copies

    def test_exclusion_keeps_match_away_from_query(self, rng):
        for _ in range(30):
            c = random_context(rng, 60, 400)
            D = int(rng.integers(1, 10))
            excl = int(rng.integers(0, 12))
            p = EmbedParams(D, 5, excl)
            if len(c) < p.min_context():
                continue
            res = parrot_forecast(c, p)
            assert res.match_end <= len(c) - D - excl

    def test_translation_equivariance(self, rng):
        for _ in range(10):
            c = random_context(rng, 80, 300)
            p = EmbedParams(3, 40)
            base = parrot_forecast(c, p)
            shifted = parrot_forecast(c + 7.25, p)
            assert shifted.match_end == base.match_end
            assert np.array_equal(shifted.prediction, base.prediction + 7.25)

    def test_short_context_error_names_minimum(self):
        with pytest.raises(ValueError, match="at least 15"):
            parrot_forecast(np.arange(10.0), EmbedParams(5, 10))

    def test_nan_rejected(self):
        c = np.ones(50)
        c[10] = np.nan
        with pytest.raises(ValueError, match="NaN"):
            parrot_forecast(c, EmbedParams(2, 5))


class TestKnn:
    def test_k1_equals_parrot(self, rng):
        for _ in range(10):
            c = random_context(rng, 60, 500)
            p = EmbedParams(5, 40)
            a = parrot_forecast(c, p)
            b = knn_forecast(c, p, 1, KernelParams(bandwidth=1.0))
            assert np.array_equal(a.prediction, b.prediction)
            assert a.match_end == b.match_end

    def test_all_neighbors_wide_bandwidth_is_global_mean(self, rng):
        c = random_context(rng, 60, 200)
        p = EmbedParams(3, 20)
        n_adm = len(c) - 2 * 3 - 3 + 1
        res = knn_forecast(c, p, n_adm, KernelParams(bandwidth=1e9))
        conts = np.array(tiled_continuations(c, 3, 20))
        np.testing.assert_allclose(res.prediction, conts.mean(axis=0), atol=1e-9)

    def test_two_exact_matches_average(self):
        c = np.array([0, 1, 0, 1, 0, 1, 0, 1, 0, 1], dtype=float)
        res = knn_forecast(c, EmbedParams(2, 1), 2, KernelParams(bandwidth=1.0))
        # motifs ending at 2 and 4 match exactly; both continue with 0
        assert res.prediction[0] == 0.0
        assert res.match_distance == 0.0

    def test_k_out_of_range(self, rng):
        c = random_context(rng, 60, 100)
        with pytest.raises(ValueError, match="admissible"):
            knn_forecast(c, EmbedParams(2, 5), 10_000, KernelParams(bandwidth=1.0))


class TestSimplex:
    def test_constant_context(self):
        assert simplex_projection(np.full(40, 3.25), 3) == 3.25

    def test_periodic_exact(self):
        c = np.array([0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2], dtype=float)
        # D=1: next value after the final 2 is exactly 0
        assert simplex_projection(c, 1) == 0.0

    def test_matches_oracle_on_lorenz(self, lorenz_series):
        x = lorenz_series.column(0)[:512]
        assert simplex_projection(x, 3) == pytest.approx(
            simplex_oracle(x, 3), abs=1e-9
        )
        # frozen from the oracle on this fixed trajectory
        assert simplex_projection(x, 3) == pytest.approx(0.4700510943254662, abs=1e-9)


class TestSmap:
    def test_theta_zero_is_global_mean(self, rng):
        c = random_context(rng, 60, 200)
        p = EmbedParams(3, 10)
        res = smap_forecast(c, p, theta=0.0)
        conts = np.array(tiled_continuations(c, 3, 10))
        np.testing.assert_allclose(res.prediction, conts.mean(axis=0), atol=1e-12)

    def test_large_theta_concentrates_on_best_match(self, lorenz_series):
        x = lorenz_series.column(0)[:400]
        p = EmbedParams(5, 30)
        a = smap_forecast(x, p, theta=1e6)
        b = parrot_forecast(x, p)
        np.testing.assert_allclose(a.prediction, b.prediction, atol=1e-6)

    def test_toy_matches_hand_computation(self):
        res = smap_forecast(TOY, EmbedParams(2, 1), theta=1.0)
        assert res.prediction[0] == pytest.approx(
            smap_oracle(TOY, 2, 1, 1.0)[0], abs=1e-12
        )
        assert res.prediction[0] == pytest.approx(1.66196578554613, abs=1e-12)

    def test_identical_motifs_fall_back_to_uniform(self):
        c = np.full(30, 1.5)
        res = smap_forecast(c, EmbedParams(2, 4), theta=2.0)
        assert np.all(res.prediction == 1.5)
        assert "uniform" in res.note


class TestNadarayaWatson:
    def test_tiny_bandwidth_recovers_copying(self, rng):
        for _ in range(10):
            c = random_context(rng, 80, 400)
            p = EmbedParams(4, 25)
            a = nw_forecast(c, p, KernelParams(bandwidth=1e-9))
            b = parrot_forecast(c, p)
            assert np.abs(a.prediction - b.prediction).max() < 1e-6

    def test_huge_bandwidth_recovers_global_mean(self, rng):
        c = random_context(rng, 80, 400)
        p = EmbedParams(4, 25)
        res = nw_forecast(c, p, KernelParams(bandwidth=1e9))
        conts = np.array(tiled_continuations(c, 4, 25))
        assert np.abs(res.prediction - conts.mean(axis=0)).max() < 1e-9

    def test_toy_matches_hand_computation(self):
        res = nw_forecast(TOY, EmbedParams(2, 1), KernelParams(bandwidth=0.5))
        assert res.prediction[0] == pytest.approx(
            nw_gaussian_oracle(TOY, 2, 1, 0.5)[0], abs=1e-12
        )
        assert res.prediction[0] == pytest.approx(0.0719451634309098, abs=1e-12)

    def test_weights_entropy_reported(self, rng):
        c = random_context(rng, 80, 200)
        res = nw_forecast(c, EmbedParams(3, 5), KernelParams(bandwidth=1e9))
        n_adm = len(c) - 2 * 3 - 3 + 1
        assert res.weights_entropy == pytest.approx(np.log(n_adm), rel=1e-6)


class TestBaselines:
    def test_definitions(self):
        m = mean_baseline([1, 2, 3], 2)
        n = naive_baseline([1, 2, 3], 2)
        assert list(m.prediction) == [2, 2]
        assert list(n.prediction) == [3, 3]

    def test_normalized_context_mean_is_zero(self, lorenz_series):
        res = mean_baseline(lorenz_series.column(0), 5)
        np.testing.assert_allclose(res.prediction, 0, atol=1e-9)

    def test_constant_context(self):
        c = np.full(10, -1.5)
        assert np.all(mean_baseline(c, 4).prediction == -1.5)
        assert np.all(naive_baseline(c, 4).prediction == -1.5)


class TestMarkov:
    def test_deterministic_alternation(self):
        mf = markov_parrot([0, 1, 0, 1, 0, 1, 0], 1, 1, alpha=0.0, vocab=2)
        assert mf.probs == {(1,): 1.0}
        assert mf.mle == (1,)
        # and conditioning on the other token
        mf2 = markov_parrot([1, 0, 1, 0, 1, 0, 1], 1, 1, alpha=0.0, vocab=2)
        assert mf2.probs == {(0,): 1.0}

    def test_counts_by_hand(self):
        # windows starting with token 0: 0->1 twice, 0->2 once
        mf = markov_parrot([0, 1, 0, 2, 0, 1, 0], 1, 1, alpha=0.0, vocab=3)
        assert mf.probs[(1,)] == pytest.approx(2 / 3)
        assert mf.probs[(2,)] == pytest.approx(1 / 3)
        assert mf.mle == (1,)

    def test_add_one_smoothing(self):
        mf = markov_parrot([0, 1, 0, 2, 0, 1, 0], 1, 1, alpha=1.0, vocab=3)
        assert mf.probs[(1,)] == pytest.approx(3 / 6)
        assert mf.probs[(2,)] == pytest.approx(2 / 6)
        assert mf.probs[(0,)] == pytest.approx(1 / 6)

    def test_unseen_prefix(self):
        tokens = [0, 0, 0, 0, 1]  # query prefix (1,) never appears as a window key
        with pytest.raises(ValueError, match="unstable|undefined|never observed"):
            markov_parrot(tokens, 1, 1, alpha=0.0, vocab=2)
        mf = markov_parrot(tokens, 1, 1, alpha=0.5, vocab=2)
        assert mf.probs == {(0,): 0.5, (1,): 0.5}

    def test_multistep_distribution(self):
        mf = markov_parrot([0, 1, 2, 0, 1, 2, 0, 1, 2, 0], 1, 2, alpha=0.0, vocab=3)
        # after 0 the continuation is always (1, 2)
        assert mf.probs == {(1, 2): 1.0}
        assert mf.mle == (1, 2)

    def test_normalization_property(self, rng):
        for _ in range(25):
            vocab = int(rng.integers(2, 6))
            L = int(rng.integers(10, 60))
            toks = rng.integers(0, vocab, L).tolist()
            D = int(rng.integers(1, 4))
            H = int(rng.integers(1, 4))
            alpha = float(rng.choice([0.0, 0.5, 1.0]))
            if L < D + H:
                continue
            try:
                mf = markov_parrot(toks, D, H, alpha=alpha, vocab=vocab)
            except ValueError:
                continue
            if mf.probs:
                assert abs(sum(mf.probs.values()) - 1.0) < 1e-12

    def test_mle_tie_breaks_lexicographically(self):
        # 0->1 and 0->2 both appear once
        mf = markov_parrot([0, 1, 0, 2, 0], 1, 1, alpha=0.0, vocab=3)
        assert mf.mle == (1,)

    def test_validation(self):
        with pytest.raises(ValueError):
            markov_parrot([0, 5], 1, 1, alpha=0.0, vocab=2)
        with pytest.raises(ValueError):
            markov_parrot([0, 1], 1, 2, alpha=0.0, vocab=2)


class TestEmbedParams:
    def test_default_exclusion_matches_embed_dim(self):
        assert EmbedParams(7, 10).exclusion == 7

    def test_validation(self):
        with pytest.raises(ValueError):
            EmbedParams(0, 10)
        with pytest.raises(ValueError):
            EmbedParams(3, 0)
        with pytest.raises(ValueError):
            EmbedParams(3, 10, -1)
        with pytest.raises(ValueError):
            KernelParams(kind="nope")
        with pytest.raises(ValueError):
            KernelParams(bandwidth=0.0)


class TestPairwiseDistance:
    def test_small_case_by_hand(self):
        # windows of [0, 1, 2] with D=2: [0,1] and [1,2], distance sqrt(2)
        assert mean_pairwise_motif_distance([0, 1, 2], 2) == pytest.approx(
            np.sqrt(2.0)
        )
