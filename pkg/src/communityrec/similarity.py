"""Community-community cosine similarity.

The dense n x n matrix C holds max(0, cosine(a, b)) for every community pair,
mirrored from the upper triangle so it is exactly symmetric, with a unit
diagonal.  Negative cosines are clamped to zero so that downstream
weighted-average denominators stay nonnegative.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import InteractionDataset
from .features import EmbeddingTable

logger = logging.getLogger(__name__)


@dataclass
class SimilarityMatrix:
    n: int
    values: np.ndarray
    ids: list[str]

    def __post_init__(self):
        if self.values.shape != (self.n, self.n):
            raise ValueError(f"similarity matrix must be {self.n}x{self.n}, got {self.values.shape}")
        if len(self.ids) != self.n:
            raise ValueError(f"expected {self.n} community ids, got {len(self.ids)}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("similarity matrix has non-finite entries")
        if not np.array_equal(self.values, self.values.T):
            raise ValueError("similarity matrix must be symmetric")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Plain cosine similarity; zero vectors and dimension mismatches raise."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    return float(np.dot(a, b) / (norm_a * norm_b))


def build_similarity(table: EmbeddingTable, ds: InteractionDataset) -> SimilarityMatrix:
    """Pairwise clamped cosine over the communities' vectors, in index order."""
    missing = [cid for cid in ds.communities if cid not in table.vectors]
    if missing:
        raise ValueError(f"embedding table is missing communities: {', '.join(missing)}")
    vecs = np.stack([table.vectors[cid] for cid in ds.communities]).astype(np.float64)
    norms = np.linalg.norm(vecs, axis=1)
    zero_ids = [cid for cid, nv in zip(ds.communities, norms) if nv == 0.0]
    if zero_ids:
        raise ValueError(f"zero vectors for communities: {', '.join(zero_ids)}")
    unit = vecs / norms[:, None]
    gram = unit @ unit.T

    n = ds.n
    values = np.zeros((n, n))
    np.fill_diagonal(values, 1.0)
    iu, ju = np.triu_indices(n, k=1)
    upper = np.clip(gram[iu, ju], 0.0, 1.0)
    values[iu, ju] = upper
    values[ju, iu] = upper
    return SimilarityMatrix(n, values, list(ds.communities))


def save_similarity(sim: SimilarityMatrix, path: str | Path) -> None:
    """CSV with a community-id header row and full-precision float rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(sim.ids)
        for row in sim.values:
            writer.writerow([repr(float(x)) for x in row])


def load_similarity(path: str | Path) -> SimilarityMatrix:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            ids = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty similarity file") from None
        rows = [[float(x) for x in row] for row in reader]
    n = len(ids)
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"{path}: expected an {n}x{n} matrix under the header")
    return SimilarityMatrix(n, np.array(rows, dtype=np.float64), ids)
