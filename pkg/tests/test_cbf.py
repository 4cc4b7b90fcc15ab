import numpy as np
import pytest

from communityrec import cbf, corpus
from communityrec.similarity import SimilarityMatrix


def sim_from(values):
    arr = np.asarray(values, dtype=np.float64)
    return SimilarityMatrix(arr.shape[0], arr, [f"c{j}" for j in range(arr.shape[0])])


def cbf_loop_oracle(ratings, sim):
    """Per-cell weighted average, straight from the definition."""
    out = np.zeros((ratings.m, ratings.n))
    by_user = {}
    for (i, j), v in ratings.entries.items():
        by_user.setdefault(i, []).append((j, v))
    for i in range(ratings.m):
        observed = by_user.get(i, [])
        mean = sum(v for _, v in observed) / len(observed)
        for j in range(ratings.n):
            den = sum(sim.values[k, j] for k, _ in observed)
            if den == 0.0:
                out[i, j] = mean
            else:
                out[i, j] = sum(v * sim.values[k, j] for k, v in observed) / den
    return out


class TestPredictCbf:
    def test_worked_example(self):
        # A row [5,1,0]; similarity column for item 3 is [0.2,0.4,1.0]
        ratings = corpus.RatingMatrix(1, 3, {(0, 0): 5, (0, 1): 1})
        sim = sim_from([
            [1.0, 0.3, 0.2],
            [0.3, 1.0, 0.4],
            [0.2, 0.4, 1.0],
        ])
        scores = cbf.predict_cbf(ratings, sim)
        assert scores.values[0, 2] == pytest.approx((5 * 0.2 + 1 * 0.4) / (0.2 + 0.4), abs=1e-9)
        assert scores.values[0, 2] == pytest.approx(7.0 / 3.0, abs=1e-9)
        assert scores.model_tag == "cbf"

    def test_all_fives_stay_five(self):
        rng = np.random.default_rng(0)
        entries = {(i, j): 5 for i in range(4) for j in range(5) if rng.random() < 0.6}
        for i in range(4):
            entries.setdefault((i, 0), 5)
        ratings = corpus.RatingMatrix(4, 5, entries)
        mat = rng.random((5, 5))
        sym = np.minimum(1.0, (mat + mat.T) / 2.0)
        np.fill_diagonal(sym, 1.0)
        scores = cbf.predict_cbf(ratings, sim_from(sym))
        assert np.all(scores.values == 5.0)

    def test_identity_similarity_falls_back_to_mean(self, caplog):
        ratings = corpus.RatingMatrix(1, 3, {(0, 0): 5, (0, 1): 1})
        with caplog.at_level("INFO"):
            scores = cbf.predict_cbf(ratings, sim_from(np.eye(3)))
        assert scores.values[0, 2] == 3.0  # mean of 5 and 1
        assert "fall" in caplog.text or "mean" in caplog.text

    def test_user_with_no_entries_is_error(self):
        ratings = corpus.RatingMatrix(2, 2, {(0, 0): 5})
        with pytest.raises(ValueError, match="no observed"):
            cbf.predict_cbf(ratings, sim_from(np.eye(2)))

    def test_dimension_mismatch(self):
        ratings = corpus.RatingMatrix(1, 3, {(0, 0): 5})
        with pytest.raises(ValueError):
            cbf.predict_cbf(ratings, sim_from(np.eye(2)))

    def _random_instance(self, rng, m_max=50, n_max=10):
        m = int(rng.integers(1, m_max + 1))
        n = int(rng.integers(2, n_max + 1))
        entries = {}
        for i in range(m):
            js = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
            for j in js:
                entries[(i, int(j))] = int(rng.choice([5, 1]))
        ratings = corpus.RatingMatrix(m, n, entries)
        base = rng.random((n, n))
        sym = (base + base.T) / 2.0
        sym[rng.random((n, n)) < 0.3] = 0.0
        sym = np.minimum(1.0, (sym + sym.T) / 2.0)
        np.fill_diagonal(sym, 1.0)
        return ratings, sim_from(sym)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            ratings, sim = self._random_instance(rng)
            scores = cbf.predict_cbf(ratings, sim)
            oracle = cbf_loop_oracle(ratings, sim)
            assert np.max(np.abs(scores.values - oracle)) < 1e-9

    def test_scores_within_observed_hull(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            ratings, sim = self._random_instance(rng)
            scores = cbf.predict_cbf(ratings, sim)
            dense = ratings.to_dense()
            mask = ratings.observed_mask()
            for i in range(ratings.m):
                vals = dense[i][mask[i]]
                assert scores.values[i].min() >= vals.min()
                assert scores.values[i].max() <= vals.max()


class TestScoreMatrix:
    def test_tag_validated(self):
        with pytest.raises(ValueError, match="model_tag"):
            cbf.ScoreMatrix(1, 1, np.zeros((1, 1)), "bogus")

    def test_shape_validated(self):
        with pytest.raises(ValueError):
            cbf.ScoreMatrix(2, 2, np.zeros((1, 1)), "cbf")

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            cbf.ScoreMatrix(1, 1, np.array([[np.inf]]), "cbf")
