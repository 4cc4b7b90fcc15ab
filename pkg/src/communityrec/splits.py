"""Leave-latest-out evaluation splits and negative sampling.

For each user the held-out test community is the one whose *first* post by
that user is latest (ties go to the larger community index); every post the
user made in that community is removed from training.  Users active in a
single community have nothing to hold out -- they stay in training only.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import InteractionDataset, Post

logger = logging.getLogger(__name__)


@dataclass
class SplitSpec:
    train_posts: list[Post]
    test_examples: list[tuple[int, int]]
    negatives: list[tuple[int, int]] = field(default_factory=list)
    rng_seed: int = 0
    n_users_without_test: int = 0


def build_split(ds: InteractionDataset, seed: int) -> SplitSpec:
    """Hold out each user's latest-first-post community as their test example."""
    first_ts: dict[int, dict[int, int]] = defaultdict(dict)
    for p in ds.posts:
        i = ds.user_pos[p.user_id]
        j = ds.community_pos[p.community_id]
        prev = first_ts[i].get(j)
        if prev is None or p.timestamp < prev:
            first_ts[i][j] = p.timestamp

    test_examples: list[tuple[int, int]] = []
    held_out: dict[int, int] = {}
    n_single = 0
    for i in range(ds.m):
        per_comm = first_ts.get(i, {})
        if len(per_comm) < 2:
            n_single += 1
            continue
        # latest first-post wins; ties broken toward the larger index
        j_star = max(per_comm, key=lambda j: (per_comm[j], j))
        test_examples.append((i, j_star))
        held_out[i] = j_star
    if n_single:
        logger.info("build_split: %d users have a single community and keep all posts in training", n_single)

    train_posts = [
        p
        for p in ds.posts
        if held_out.get(ds.user_pos[p.user_id]) != ds.community_pos[p.community_id]
    ]
    return SplitSpec(
        train_posts=train_posts,
        test_examples=test_examples,
        rng_seed=seed,
        n_users_without_test=n_single,
    )


def sample_negatives(ds: InteractionDataset, split: SplitSpec, seed: int) -> list[tuple[int, int]]:
    """Sample one negative community per positive training pair, per user.

    Candidates are communities the user never posted to in the *full* history,
    so the held-out test community is never drawn.  Sampling is without
    replacement until the pool runs dry, then with replacement (logged).  Each
    user draws from an independent substream keyed by ``seed ^ user_index``.
    """
    posted_full: list[set[int]] = [set() for _ in range(ds.m)]
    for p in ds.posts:
        posted_full[ds.user_pos[p.user_id]].add(ds.community_pos[p.community_id])

    train_pairs: list[set[int]] = [set() for _ in range(ds.m)]
    for p in split.train_posts:
        train_pairs[ds.user_pos[p.user_id]].add(ds.community_pos[p.community_id])

    negatives: list[tuple[int, int]] = []
    n_overflow = 0
    for i in range(ds.m):
        t = len(train_pairs[i])
        if t == 0:
            continue
        pool = np.array([j for j in range(ds.n) if j not in posted_full[i]], dtype=np.int64)
        if pool.size == 0:
            raise ValueError(
                f"user {ds.users[i]!r} has posted to every community; cannot sample negatives"
            )
        rng = np.random.default_rng(seed ^ i)
        take = min(t, int(pool.size))
        drawn = rng.choice(pool, size=take, replace=False)
        if t > take:
            n_overflow += 1
            drawn = np.concatenate([drawn, rng.choice(pool, size=t - take, replace=True)])
        negatives.extend((i, int(j)) for j in drawn)
    if n_overflow:
        logger.info(
            "sample_negatives: %d users needed more negatives than unposted communities; reused with replacement",
            n_overflow,
        )
    return negatives


def save_split(split: SplitSpec, ds: InteractionDataset, path: str | Path) -> None:
    """Persist the split as JSON; train posts are reconstructed at load time."""
    payload = {
        "rng_seed": split.rng_seed,
        "n_users": ds.m,
        "n_communities": ds.n,
        "n_users_without_test": split.n_users_without_test,
        "test_examples": [list(pair) for pair in split.test_examples],
        "negatives": [list(pair) for pair in split.negatives],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_split(ds: InteractionDataset, path: str | Path) -> SplitSpec:
    """Load a split saved by :func:`save_split` against the same dataset."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("n_users") != ds.m or payload.get("n_communities") != ds.n:
        raise ValueError(
            f"{path}: split was built for a {payload.get('n_users')}x{payload.get('n_communities')} "
            f"dataset, got {ds.m}x{ds.n}"
        )
    test_examples = [(int(i), int(j)) for i, j in payload["test_examples"]]
    held_out = dict(test_examples)
    if len(held_out) != len(test_examples):
        raise ValueError(f"{path}: split lists a user twice in test_examples")
    train_posts = [
        p
        for p in ds.posts
        if held_out.get(ds.user_pos[p.user_id]) != ds.community_pos[p.community_id]
    ]
    return SplitSpec(
        train_posts=train_posts,
        test_examples=test_examples,
        negatives=[(int(i), int(j)) for i, j in payload["negatives"]],
        rng_seed=int(payload["rng_seed"]),
        n_users_without_test=int(payload.get("n_users_without_test", 0)),
    )
