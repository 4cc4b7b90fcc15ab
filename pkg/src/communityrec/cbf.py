"""Content-based filtering scores.

The predicted affinity of user i for community j is the similarity-weighted
average of the user's observed ratings:

    score[i, j] = sum_k A[i, k] * C[k, j] / sum_{k observed} C[k, j]

computed in matrix form as (A @ C) / (I @ C) with I the observed-cell
indicator.  Cells whose denominator is zero (the target community has no
similarity mass on the user's observed communities) fall back to the user's
mean observed rating; the count is logged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .corpus import RatingMatrix
from .similarity import SimilarityMatrix

logger = logging.getLogger(__name__)

MODEL_TAGS = ("cbf", "mf", "hybrid", "random")


@dataclass
class ScoreMatrix:
    m: int
    n: int
    values: np.ndarray
    model_tag: str

    def __post_init__(self):
        if self.values.shape != (self.m, self.n):
            raise ValueError(f"score matrix must be {self.m}x{self.n}, got {self.values.shape}")
        if self.model_tag not in MODEL_TAGS:
            raise ValueError(f"model_tag must be one of {MODEL_TAGS}, got {self.model_tag!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("score matrix has non-finite values")


def predict_cbf(ratings: RatingMatrix, sim: SimilarityMatrix) -> ScoreMatrix:
    """Similarity-weighted average of each user's observed ratings.

    Every user must have at least one observed entry.  Scores always lie
    within the user's observed rating range (weights are convex); values are
    clipped to that range so float drift cannot leak outside it.
    """
    if ratings.n != sim.n:
        raise ValueError(f"rating matrix has {ratings.n} communities, similarity has {sim.n}")
    dense = ratings.to_dense()
    observed = dense != 0.0
    rowless = np.flatnonzero(~observed.any(axis=1))
    if rowless.size:
        raise ValueError(f"users with no observed entries: {rowless.tolist()[:10]}")

    weight_mass = observed.astype(np.float64) @ sim.values
    weighted = dense @ sim.values
    counts = observed.sum(axis=1)
    row_mean = dense.sum(axis=1) / counts

    scores = np.tile(row_mean[:, None], (1, ratings.n))
    np.divide(weighted, weight_mass, out=scores, where=weight_mass > 0.0)

    n_fallback = int((weight_mass <= 0.0).sum())
    if n_fallback:
        logger.info(
            "predict_cbf: %d cells have zero similarity mass; using the user's mean rating",
            n_fallback,
        )

    # convexity guard: keep float drift inside the observed rating hull
    row_min = np.where(observed, dense, np.inf).min(axis=1)
    row_max = np.where(observed, dense, -np.inf).max(axis=1)
    np.clip(scores, row_min[:, None], row_max[:, None], out=scores)
    return ScoreMatrix(ratings.m, ratings.n, scores, "cbf")
