"""Linear blend of the CBF and MF score matrices.

    hybrid = beta * cbf + (1 - beta) * mf

The endpoints are exact: beta=0 reproduces the MF scores bit for bit and
beta=1 the CBF scores.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .cbf import ScoreMatrix
from .corpus import InteractionDataset
from .evaluation import EvalReport, evaluate
from .splits import SplitSpec


@dataclass
class BetaPoint:
    beta: float
    report: EvalReport


def blend(cbf_scores: ScoreMatrix, mf_scores: ScoreMatrix, beta: float) -> ScoreMatrix:
    if not (0.0 <= beta <= 1.0):
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    if (cbf_scores.m, cbf_scores.n) != (mf_scores.m, mf_scores.n):
        raise ValueError(
            f"score shapes disagree: {cbf_scores.m}x{cbf_scores.n} vs {mf_scores.m}x{mf_scores.n}"
        )
    if beta == 0.0:
        values = mf_scores.values.copy()
    elif beta == 1.0:
        values = cbf_scores.values.copy()
    else:
        values = beta * cbf_scores.values + (1.0 - beta) * mf_scores.values
    return ScoreMatrix(cbf_scores.m, cbf_scores.n, values, "hybrid")


def sweep_beta(
    cbf_scores: ScoreMatrix,
    mf_scores: ScoreMatrix,
    split: SplitSpec,
    ds: InteractionDataset,
    ks: list[int],
    grid: list[float],
) -> tuple[list[BetaPoint], BetaPoint]:
    """Evaluate the blend at every beta in ``grid``; also return the MRR argmax.

    The grid must be non-empty, sorted ascending, and within [0, 1].  Ties on
    MRR go to the smallest beta.
    """
    if not grid:
        raise ValueError("beta grid must be non-empty")
    if any(not (0.0 <= b <= 1.0) for b in grid):
        raise ValueError("beta grid values must be in [0, 1]")
    if sorted(grid) != list(grid):
        raise ValueError("beta grid must be sorted ascending")
    points = [BetaPoint(b, evaluate(blend(cbf_scores, mf_scores, b), split, ds, ks)) for b in grid]
    best = max(points, key=lambda pt: pt.report.mrr)  # max() keeps the first, i.e. smallest beta
    return points, best


def save_curve(points: list[BetaPoint], ks: list[int], path: str | Path) -> None:
    """CSV of the sweep: beta, mrr, recall@K columns."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta", "mrr"] + [f"recall@{k}" for k in ks])
        for pt in points:
            writer.writerow(
                [repr(float(pt.beta)), repr(pt.report.mrr)] + [repr(pt.report.recall_at[k]) for k in ks]
            )
