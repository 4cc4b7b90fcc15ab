"""Text featurization: TF-IDF vectors and community embedding tables.

Two routes produce the per-community vectors that feed cosine similarity:

* a small TF-IDF vectorizer fitted either on community descriptions or on
  training post bodies, and
* imported embeddings computed elsewhere (one JSONL record per id), averaged
  per community when they are post-level.

TF-IDF variant, pinned: lowercase tokens are maximal runs of >= 2 word
characters, idf = ln((1 + N) / (1 + df)) + 1 with raw term counts, and each
vector is L2-normalized (zero vectors stay zero).  The vocabulary is sorted
lexicographically, so columns are reproducible.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import InteractionDataset, Post, read_jsonl

logger = logging.getLogger(__name__)

TOKEN_RE = re.compile(r"\w\w+")

SOURCE_TAGS = ("tfidf", "external")
INFO_TAGS = ("description", "posts")


def tokenize(text: str) -> list[str]:
    """Lowercase and split into maximal runs of two or more word characters."""
    return TOKEN_RE.findall(text.lower())


@dataclass
class TfidfModel:
    vocabulary: dict[str, int]
    doc_frequency: np.ndarray
    n_docs: int

    def idf(self) -> np.ndarray:
        return np.log((1.0 + self.n_docs) / (1.0 + self.doc_frequency)) + 1.0


def fit_tfidf(docs) -> TfidfModel:
    """Fit on an iterable of (id, text) pairs.

    Raises if there are no documents or if no document yields a token.
    """
    n_docs = 0
    df: Counter[str] = Counter()
    for _doc_id, text in docs:
        n_docs += 1
        df.update(set(tokenize(text)))
    if n_docs == 0:
        raise ValueError("cannot fit tf-idf on an empty document collection")
    if not df:
        raise ValueError("all documents are empty; the vocabulary would be empty")
    terms = sorted(df)
    vocabulary = {t: col for col, t in enumerate(terms)}
    doc_frequency = np.array([df[t] for t in terms], dtype=np.int64)
    return TfidfModel(vocabulary, doc_frequency, n_docs)


def transform_tfidf(model: TfidfModel, text: str) -> np.ndarray:
    """Vectorize one document; out-of-vocabulary tokens are ignored.

    The result has unit L2 norm unless no known token occurs, in which case it
    is all zeros (repaired later, at community aggregation).
    """
    vec = np.zeros(len(model.vocabulary))
    counts = Counter(tokenize(text))
    if counts:
        idf = model.idf()
        for token, count in counts.items():
            col = model.vocabulary.get(token)
            if col is not None:
                vec[col] = count * idf[col]
        norm = np.linalg.norm(vec)
        if norm > 0.0:
            vec /= norm
    return vec


@dataclass
class EmbeddingTable:
    """id -> vector map plus origin tags.

    ``source_tag`` records how vectors were produced ("tfidf" or "external"),
    ``info_tag`` what they describe ("description" or "posts").
    """

    dim: int
    vectors: dict[str, np.ndarray]
    source_tag: str
    info_tag: str

    def __post_init__(self):
        if self.source_tag not in SOURCE_TAGS:
            raise ValueError(f"source_tag must be one of {SOURCE_TAGS}, got {self.source_tag!r}")
        if self.info_tag not in INFO_TAGS:
            raise ValueError(f"info_tag must be one of {INFO_TAGS}, got {self.info_tag!r}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        for key, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise ValueError(f"vector for {key!r} has shape {vec.shape}, expected ({self.dim},)")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"vector for {key!r} has non-finite components")


def post_id(post: Post) -> str:
    """Stable 16-hex-digit id for a post.

    sha256 of user_id, community_id, decimal timestamp, and text joined by the
    unit-separator byte 0x1f, truncated to 16 hex digits.  External embedding
    exporters must key post vectors by this exact scheme.
    """
    key = "\x1f".join((post.user_id, post.community_id, str(post.timestamp), post.text))
    return hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]


def import_embeddings(path: str | Path, info_tag: str = "description") -> EmbeddingTable:
    """Read an embeddings JSONL file: one {"id": ..., "vector": [...]} per line.

    Ragged dimensions, duplicate ids, non-finite components and all-zero
    vectors are rejected with the offending id named.
    """
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    for lineno, rec in read_jsonl(path):
        if not isinstance(rec, dict) or "id" not in rec or "vector" not in rec:
            raise ValueError(f"{path}: line {lineno}: record must have 'id' and 'vector' fields")
        rec_id = rec["id"]
        if not isinstance(rec_id, str) or not rec_id:
            raise ValueError(f"{path}: line {lineno}: 'id' must be a non-empty string")
        raw = rec["vector"]
        if (
            not isinstance(raw, list)
            or not raw
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in raw)
        ):
            raise ValueError(f"{path}: line {lineno}: vector for id {rec_id!r} must be a non-empty list of numbers")
        vec = np.asarray(raw, dtype=np.float64)
        if rec_id in vectors:
            raise ValueError(f"{path}: line {lineno}: duplicate id {rec_id!r}")
        if dim is None:
            dim = int(vec.size)
        elif vec.size != dim:
            raise ValueError(
                f"{path}: line {lineno}: vector for id {rec_id!r} has {vec.size} components, expected {dim}"
            )
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"{path}: line {lineno}: vector for id {rec_id!r} has non-finite components")
        if not vec.any():
            raise ValueError(f"{path}: line {lineno}: vector for id {rec_id!r} is all zeros")
        vectors[rec_id] = vec
    if not vectors:
        raise ValueError(f"{path}: no embedding records found")
    return EmbeddingTable(dim, vectors, "external", info_tag)


def export_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    """Write the table in the import format, ids sorted for reproducibility."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec_id in sorted(table.vectors):
            vec = [float(x) for x in table.vectors[rec_id]]
            fh.write(json.dumps({"id": rec_id, "vector": vec}) + "\n")


def post_embeddings_tfidf(model: TfidfModel, posts: list[Post]) -> EmbeddingTable:
    """Vectorize each non-empty post body, keyed by :func:`post_id`.

    Zero vectors (no in-vocabulary token) are kept; aggregation repairs them.
    """
    vectors = {post_id(p): transform_tfidf(model, p.text) for p in posts if p.text}
    if not vectors:
        raise ValueError("no posts with non-empty text to vectorize")
    return EmbeddingTable(len(model.vocabulary), vectors, "tfidf", "posts")


def _repair_zero_vectors(raw: dict[str, np.ndarray]) -> tuple[dict[str, np.ndarray], list[str]]:
    """Replace all-zero vectors with the mean of the nonzero ones."""
    nonzero = [v for v in raw.values() if v.any()]
    needs_fix = [key for key, v in raw.items() if not v.any()]
    if not nonzero:
        raise ValueError("every community vector is zero; nothing to fall back on")
    mean = np.mean(np.stack(nonzero), axis=0)
    if not mean.any():
        raise ValueError("community vectors cancel to a zero mean; cannot repair")
    fixed = {key: (mean.copy() if not v.any() else v) for key, v in raw.items()}
    return fixed, needs_fix


def community_embeddings_from_posts(
    ds: InteractionDataset,
    post_vectors: EmbeddingTable,
    posts: list[Post] | None = None,
) -> EmbeddingTable:
    """Average post vectors per community (over ``posts``, default all).

    Every post with non-empty text must have a vector in the table, keyed by
    :func:`post_id`.  Communities with no embedded posts -- or whose mean
    cancels to zero -- get the mean of the other communities' vectors, and are
    logged.
    """
    if posts is None:
        posts = ds.posts
    if not post_vectors.vectors:
        raise ValueError("post embedding table is empty")
    sums: dict[str, np.ndarray] = {}
    counts: Counter[str] = Counter()
    missing: list[str] = []
    for p in posts:
        if not p.text:
            continue
        pid = post_id(p)
        vec = post_vectors.vectors.get(pid)
        if vec is None:
            missing.append(pid)
            continue
        if p.community_id in sums:
            sums[p.community_id] = sums[p.community_id] + vec
        else:
            sums[p.community_id] = vec.astype(np.float64)
        counts[p.community_id] += 1
    if missing:
        shown = ", ".join(missing[:5])
        raise ValueError(f"{len(missing)} posts have no embedding (first missing post ids: {shown})")

    raw: dict[str, np.ndarray] = {}
    zero = np.zeros(post_vectors.dim)
    for cid in ds.communities:
        raw[cid] = sums[cid] / counts[cid] if cid in sums else zero
    fixed, repaired = _repair_zero_vectors(raw)
    if repaired:
        logger.warning(
            "community_embeddings_from_posts: %d communities have no embedded posts; "
            "using the corpus-mean vector for: %s",
            len(repaired),
            ", ".join(repaired[:10]),
        )
    return EmbeddingTable(post_vectors.dim, fixed, post_vectors.source_tag, "posts")


def community_embeddings_from_descriptions(
    ds: InteractionDataset,
    source: TfidfModel | EmbeddingTable,
) -> EmbeddingTable:
    """One vector per community from its description.

    ``source`` is either a fitted TF-IDF model (descriptions are vectorized
    here) or an embedding table keyed by community id (vectors are looked up;
    a missing community is an error).  Zero vectors -- empty or fully
    out-of-vocabulary descriptions -- get the mean of the nonzero ones, logged.
    """
    if isinstance(source, TfidfModel):
        raw = {cid: transform_tfidf(source, ds.descriptions[cid]) for cid in ds.communities}
        dim = len(source.vocabulary)
        source_tag = "tfidf"
    elif isinstance(source, EmbeddingTable):
        missing = [cid for cid in ds.communities if cid not in source.vectors]
        if missing:
            raise ValueError(f"embedding table is missing communities: {', '.join(missing)}")
        raw = {cid: source.vectors[cid].astype(np.float64) for cid in ds.communities}
        dim = source.dim
        source_tag = source.source_tag
    else:
        raise TypeError(f"source must be a TfidfModel or EmbeddingTable, got {type(source).__name__}")
    fixed, repaired = _repair_zero_vectors(raw)
    if repaired:
        logger.warning(
            "community_embeddings_from_descriptions: %d communities have empty/zero description "
            "vectors; using the corpus-mean vector for: %s",
            len(repaired),
            ", ".join(repaired[:10]),
        )
    return EmbeddingTable(dim, fixed, source_tag, "description")
