"""Data model and ingestion for the user/community posting corpus.

The raw corpus is two JSON-lines files:

    posts.jsonl   {"user_id": str, "community_id": str, "timestamp": int, "text": str}
    meta.jsonl    {"community_id": str, "description": str}

Communities are defined by the meta file; a post that references a community
absent from meta is a referential-integrity error.  Users and communities are
indexed in lexicographic id order so every downstream matrix has a
reproducible layout.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Post:
    user_id: str
    community_id: str
    timestamp: int
    text: str = ""


@dataclass(frozen=True)
class CommunityMeta:
    community_id: str
    description: str = ""


@dataclass
class InteractionDataset:
    """An immutable view of the corpus with stable index assignments.

    ``users`` and ``communities`` are lexicographically sorted; user i and
    community j in every matrix below refer to positions in these lists.
    Treat instances as frozen -- the index maps are built once.
    """

    users: list[str]
    communities: list[str]
    posts: list[Post]
    meta: list[CommunityMeta]

    def __post_init__(self):
        self.user_pos = {u: i for i, u in enumerate(self.users)}
        self.community_pos = {c: j for j, c in enumerate(self.communities)}
        self.descriptions = {cm.community_id: cm.description for cm in self.meta}

    @property
    def m(self) -> int:
        return len(self.users)

    @property
    def n(self) -> int:
        return len(self.communities)


@dataclass
class RatingMatrix:
    """Sparse m x n matrix of observed interactions.

    Values are 5 (user posted to the community) or 1 (sampled negative).
    Cells absent from ``entries`` are unknown -- the thing being predicted --
    and every consumer must treat them as missing, not as zeros.
    """

    m: int
    n: int
    entries: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        for (i, j), v in self.entries.items():
            if not (0 <= i < self.m and 0 <= j < self.n):
                raise ValueError(f"entry ({i}, {j}) out of bounds for {self.m}x{self.n} matrix")
            if v not in (5, 1):
                raise ValueError(f"entry ({i}, {j}) has value {v!r}; only 5 and 1 are allowed")

    def to_dense(self) -> np.ndarray:
        """Dense float copy with unknown cells as 0.0 (placeholder, not a rating)."""
        dense = np.zeros((self.m, self.n))
        for (i, j), v in self.entries.items():
            dense[i, j] = float(v)
        return dense

    def observed_mask(self) -> np.ndarray:
        """Boolean m x n indicator of observed cells."""
        mask = np.zeros((self.m, self.n), dtype=bool)
        for (i, j) in self.entries:
            mask[i, j] = True
        return mask


def read_jsonl(path: str | Path):
    """Yield (lineno, record) pairs from a JSON-lines file; blank lines are skipped."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from None


def _require_str(record, key: str, path, lineno: int, allow_empty: bool = False) -> str:
    if not isinstance(record, dict) or key not in record:
        raise ValueError(f"{path}: line {lineno}: missing field '{key}'")
    value = record[key]
    if not isinstance(value, str):
        raise ValueError(f"{path}: line {lineno}: field '{key}' must be a string")
    if not value and not allow_empty:
        raise ValueError(f"{path}: line {lineno}: field '{key}' must be non-empty")
    return value


def _require_timestamp(record, path, lineno: int) -> int:
    if not isinstance(record, dict) or "timestamp" not in record:
        raise ValueError(f"{path}: line {lineno}: missing field 'timestamp'")
    value = record["timestamp"]
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ValueError(f"{path}: line {lineno}: field 'timestamp' must be a non-negative integer")
    return value


def build_dataset(posts: list[Post], meta: list[CommunityMeta]) -> InteractionDataset:
    """Assemble a dataset from in-memory records, validating integrity."""
    seen: set[str] = set()
    for cm in meta:
        if not cm.community_id:
            raise ValueError("community_id must be non-empty")
        if cm.community_id in seen:
            raise ValueError(f"duplicate community_id {cm.community_id!r} in meta")
        seen.add(cm.community_id)
    for p in posts:
        if not p.user_id or not p.community_id:
            raise ValueError("post user_id and community_id must be non-empty")
        if isinstance(p.timestamp, bool) or not isinstance(p.timestamp, int) or p.timestamp < 0:
            raise ValueError(f"post by {p.user_id!r} has invalid timestamp {p.timestamp!r}")
        if p.community_id not in seen:
            raise ValueError(f"post references community {p.community_id!r} missing from meta")
    users = sorted({p.user_id for p in posts})
    meta_sorted = sorted(meta, key=lambda cm: cm.community_id)
    communities = [cm.community_id for cm in meta_sorted]
    return InteractionDataset(users, communities, list(posts), meta_sorted)


def ingest(posts_path: str | Path, meta_path: str | Path) -> InteractionDataset:
    """Load a dataset from posts.jsonl / meta.jsonl.

    Raises ValueError naming the file and line for malformed JSON, missing or
    ill-typed fields, duplicate meta ids, and posts referencing unknown
    communities.  Communities with no posts are retained (they are candidate
    items); an empty posts file yields a dataset with zero users.
    """
    meta: list[CommunityMeta] = []
    known: set[str] = set()
    for lineno, rec in read_jsonl(meta_path):
        cid = _require_str(rec, "community_id", meta_path, lineno)
        desc = _require_str(rec, "description", meta_path, lineno, allow_empty=True)
        if cid in known:
            raise ValueError(f"{meta_path}: line {lineno}: duplicate community_id {cid!r}")
        known.add(cid)
        meta.append(CommunityMeta(cid, desc))

    posts: list[Post] = []
    for lineno, rec in read_jsonl(posts_path):
        uid = _require_str(rec, "user_id", posts_path, lineno)
        cid = _require_str(rec, "community_id", posts_path, lineno)
        ts = _require_timestamp(rec, posts_path, lineno)
        text = _require_str(rec, "text", posts_path, lineno, allow_empty=True)
        if cid not in known:
            raise ValueError(
                f"{posts_path}: line {lineno}: post references community {cid!r} missing from meta"
            )
        posts.append(Post(uid, cid, ts, text))
    return build_dataset(posts, meta)


def write_dataset(ds: InteractionDataset, posts_path: str | Path, meta_path: str | Path) -> None:
    """Write the dataset back out in the ingestion formats (round-trips exactly)."""
    with open(meta_path, "w", encoding="utf-8") as fh:
        for cm in ds.meta:
            fh.write(json.dumps({"community_id": cm.community_id, "description": cm.description}) + "\n")
    with open(posts_path, "w", encoding="utf-8") as fh:
        for p in ds.posts:
            fh.write(
                json.dumps(
                    {
                        "user_id": p.user_id,
                        "community_id": p.community_id,
                        "timestamp": p.timestamp,
                        "text": p.text,
                    }
                )
                + "\n"
            )


def filter_min_communities(ds: InteractionDataset, k_min: int) -> InteractionDataset:
    """Keep only users who posted to at least ``k_min`` distinct communities.

    Distinctness is counted over the full (unfiltered) dataset.  Communities
    and meta are left untouched even if they end up with no posts.
    """
    if k_min < 1:
        raise ValueError(f"k_min must be >= 1, got {k_min}")
    by_user: dict[str, set[str]] = defaultdict(set)
    for p in ds.posts:
        by_user[p.user_id].add(p.community_id)
    kept = {u for u in ds.users if len(by_user[u]) >= k_min}
    dropped = ds.m - len(kept)
    if dropped:
        logger.info("filter_min_communities: dropped %d of %d users below k_min=%d", dropped, ds.m, k_min)
    posts = [p for p in ds.posts if p.user_id in kept]
    return InteractionDataset(sorted(kept), list(ds.communities), posts, list(ds.meta))


def build_rating_matrix(
    ds: InteractionDataset,
    negatives: list[tuple[int, int]],
    posts: list[Post] | None = None,
) -> RatingMatrix:
    """Build the sparse interaction matrix: 5 per posted pair, 1 per negative.

    ``posts`` defaults to every post in the dataset; pass a training subset to
    build the training matrix.  A negative that collides with a positive pair
    is a contract violation and raises.
    """
    if posts is None:
        posts = ds.posts
    entries: dict[tuple[int, int], int] = {}
    for p in posts:
        i = ds.user_pos[p.user_id]
        j = ds.community_pos[p.community_id]
        entries[(i, j)] = 5
    for (i, j) in negatives:
        if not (0 <= i < ds.m and 0 <= j < ds.n):
            raise ValueError(f"negative pair ({i}, {j}) out of bounds for {ds.m}x{ds.n}")
        if entries.get((i, j)) == 5:
            raise ValueError(f"negative pair ({i}, {j}) collides with a positive interaction")
        entries[(i, j)] = 1
    return RatingMatrix(ds.m, ds.n, entries)
