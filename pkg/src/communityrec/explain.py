"""Human-readable accounts of why a score is what it is.

* ``explain_cbf`` decomposes one CBF cell into per-community contributions
  (the user's rating times the normalized similarity weight); the rows sum to
  the score.
* ``item_bias_report`` relates each community's learned MF item bias to its
  post count -- popular communities should carry larger biases.
* ``top_k_table`` renders a model's top-ranked candidates for one user with
  the held-out community marked, and tables from different models can be laid
  side by side.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .cbf import ScoreMatrix
from .corpus import InteractionDataset, RatingMatrix
from .evaluation import candidate_set
from .mf import MfModel
from .similarity import SimilarityMatrix
from .splits import SplitSpec

logger = logging.getLogger(__name__)


@dataclass
class Contribution:
    community_id: str
    rating: float
    similarity: float
    weight: float
    contribution: float


@dataclass
class TruncationSummary:
    n_omitted: int
    weight: float
    contribution: float


@dataclass
class CbfExplanation:
    user: int
    community_id: str
    score: float
    fallback: bool
    rows: list[Contribution]
    truncated: TruncationSummary | None = None


def explain_cbf(
    ratings: RatingMatrix,
    sim: SimilarityMatrix,
    user: int,
    community: int,
    top: int | None = None,
) -> CbfExplanation:
    """Decompose score[user, community] into per-observed-community terms.

    Each observed community k contributes weight * rating with
    weight = C[k, j] / sum_k' C[k', j]; the weights are convex, and the
    contributions sum to the CBF score.  When the denominator is zero the
    explanation is the fallback (user's mean rating) with no rows.  ``top``
    keeps only the heaviest rows and folds the rest into a remainder line.
    """
    if ratings.n != sim.n:
        raise ValueError(f"rating matrix has {ratings.n} communities, similarity has {sim.n}")
    if not (0 <= user < ratings.m):
        raise ValueError(f"user index {user} out of range for {ratings.m} users")
    if not (0 <= community < ratings.n):
        raise ValueError(f"community index {community} out of range for {ratings.n} communities")
    if top is not None and top < 1:
        raise ValueError(f"top must be >= 1, got {top}")

    observed = sorted((j, v) for (i, j), v in ratings.entries.items() if i == user)
    if not observed:
        raise ValueError(f"user {user} has no observed entries")
    target_id = sim.ids[community]

    denom = float(sum(sim.values[k, community] for k, _ in observed))
    if denom == 0.0:
        mean = float(np.mean([v for _, v in observed]))
        return CbfExplanation(user, target_id, mean, True, [])

    rows = []
    for k, v in observed:
        s = float(sim.values[k, community])
        w = s / denom
        rows.append(Contribution(sim.ids[k], float(v), s, w, w * float(v)))
    score = float(sum(r.contribution for r in rows))
    order = sorted(range(len(rows)), key=lambda idx: (-rows[idx].weight, idx))
    rows = [rows[idx] for idx in order]

    truncated = None
    if top is not None and top < len(rows):
        omitted = rows[top:]
        truncated = TruncationSummary(
            n_omitted=len(omitted),
            weight=float(sum(r.weight for r in omitted)),
            contribution=float(sum(r.contribution for r in omitted)),
        )
        rows = rows[:top]
    return CbfExplanation(user, target_id, score, False, rows, truncated)


def explanation_to_dict(exp: CbfExplanation) -> dict:
    out = {
        "user": exp.user,
        "community_id": exp.community_id,
        "score": exp.score,
        "fallback": exp.fallback,
        "rows": [
            {
                "community_id": r.community_id,
                "rating": r.rating,
                "similarity": r.similarity,
                "weight": r.weight,
                "contribution": r.contribution,
            }
            for r in exp.rows
        ],
    }
    if exp.truncated is not None:
        out["truncated"] = {
            "n_omitted": exp.truncated.n_omitted,
            "weight": exp.truncated.weight,
            "contribution": exp.truncated.contribution,
        }
    return out


def format_explanation(exp: CbfExplanation) -> str:
    lines = [f"cbf score for user {exp.user} -> {exp.community_id}: {exp.score:.4f}"]
    if exp.fallback:
        lines.append("  no similarity mass on observed communities; score is the user's mean rating")
        return "\n".join(lines)
    lines.append(f"  {'community':<20} {'rating':>6} {'sim':>8} {'weight':>8} {'contrib':>8}")
    for r in exp.rows:
        lines.append(
            f"  {r.community_id:<20} {r.rating:>6.1f} {r.similarity:>8.4f} {r.weight:>8.4f} {r.contribution:>8.4f}"
        )
    if exp.truncated is not None:
        t = exp.truncated
        lines.append(
            f"  (+{t.n_omitted} more{'':<12} {'':>6} {'':>8} {t.weight:>8.4f} {t.contribution:>8.4f})"
        )
    return "\n".join(lines)


@dataclass
class ItemBiasRow:
    community_id: str
    post_count: int
    item_bias: float


@dataclass
class ItemBiasReport:
    rows: list[ItemBiasRow]
    pearson: float


def item_bias_report(model: MfModel, ds: InteractionDataset) -> ItemBiasReport:
    """Per-community post count next to the learned item bias, plus Pearson r.

    When either column has zero variance the correlation is reported as 0.0
    (np.corrcoef would produce nan there).
    """
    if ds.n < 2:
        raise ValueError("need at least 2 communities to correlate")
    if model.b_item.shape != (ds.n,):
        raise ValueError(f"model has {model.b_item.shape[0]} item biases, dataset has {ds.n} communities")
    counts = np.zeros(ds.n, dtype=np.int64)
    for p in ds.posts:
        counts[ds.community_pos[p.community_id]] += 1
    biases = model.b_item
    if counts.std() == 0.0 or biases.std() == 0.0:
        pearson = 0.0
    else:
        pearson = float(np.corrcoef(counts.astype(np.float64), biases)[0, 1])
    rows = [
        ItemBiasRow(cid, int(counts[j]), float(biases[j])) for j, cid in enumerate(ds.communities)
    ]
    return ItemBiasReport(rows, pearson)


def format_item_bias(report: ItemBiasReport) -> str:
    lines = [f"{'community':<20} {'posts':>8} {'item_bias':>10}"]
    for r in report.rows:
        lines.append(f"{r.community_id:<20} {r.post_count:>8d} {r.item_bias:>10.4f}")
    lines.append(f"pearson(post_count, item_bias) = {report.pearson:.4f}")
    return "\n".join(lines)


@dataclass
class RankedRow:
    rank: int
    community_id: str
    score: float
    is_test: bool


def top_k_table(
    scores: ScoreMatrix,
    split: SplitSpec,
    ds: InteractionDataset,
    user: int,
    k: int,
) -> list[RankedRow]:
    """Top-k candidates for a test user, held-out community marked."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    held_out = dict(split.test_examples).get(user)
    if held_out is None:
        raise ValueError(f"user {user} has no test example")
    cands = candidate_set(ds, split, user)
    ordered = sorted(cands, key=lambda j: (-scores.values[user, j], j))
    return [
        RankedRow(r + 1, ds.communities[j], float(scores.values[user, j]), j == held_out)
        for r, j in enumerate(ordered[:k])
    ]


def render_comparison(tables: list[tuple[str, list[RankedRow]]]) -> str:
    """Lay several top-k tables side by side, one column block per model."""
    if not tables:
        raise ValueError("no tables to render")
    depth = max(len(rows) for _, rows in tables)
    blocks: list[list[str]] = []
    for label, rows in tables:
        cells = [f"{r.rank:>2}. {r.community_id}{' *' if r.is_test else ''} ({r.score:.3f})" for r in rows]
        cells += [""] * (depth - len(cells))
        width = max(len(label), *(len(c) for c in cells)) if cells else len(label)
        blocks.append([label.ljust(width)] + ["-" * width] + [c.ljust(width) for c in cells])
    lines = ["   ".join(block[row] for block in blocks).rstrip() for row in range(depth + 2)]
    lines.append("(* = held-out community)")
    return "\n".join(lines)
