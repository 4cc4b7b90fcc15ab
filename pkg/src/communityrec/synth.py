"""Synthetic corpus with planted topic structure.

Communities are grouped into topics with disjoint vocabularies; each user gets
a home topic and posts there with probability 1 - noise, otherwise in a
uniformly chosen other topic.  Descriptions and post bodies are drawn from the
topic vocabulary, so description similarity recovers the topic blocks and a
recommender has real signal to find.  Generation is fully deterministic given
the seed.
"""

from __future__ import annotations

import logging

import numpy as np

from .corpus import CommunityMeta, InteractionDataset, Post, build_dataset

logger = logging.getLogger(__name__)

_DESC_WORDS = 15
_POST_WORDS = 8


def generate(
    topics: int,
    communities_per_topic: int,
    users: int,
    posts_per_user: int,
    noise: float,
    vocab_per_topic: int = 20,
    seed: int = 0,
) -> tuple[InteractionDataset, dict[str, int]]:
    """Generate a planted-topic dataset; returns it with the community->topic map.

    Timestamps are strictly increasing within each user, so the leave-latest-
    out split is unambiguous.  A warning is logged when the shape cannot
    survive the usual >=3-community eligibility filter.
    """
    for name, value in (
        ("topics", topics),
        ("communities_per_topic", communities_per_topic),
        ("users", users),
        ("posts_per_user", posts_per_user),
        ("vocab_per_topic", vocab_per_topic),
    ):
        if value < 1:
            raise ValueError(f"{name} must be >= 1, got {value}")
    if not (0.0 <= noise < 1.0):
        raise ValueError(f"noise must be in [0, 1), got {noise}")
    if communities_per_topic < 3 or posts_per_user < 3:
        logger.warning(
            "generate: communities_per_topic=%d, posts_per_user=%d -- users may not reach "
            "3 distinct communities, and a k_min=3 eligibility filter would drop them",
            communities_per_topic,
            posts_per_user,
        )

    rng = np.random.default_rng(seed)
    vocab = [
        np.array([f"t{t:02d}w{v:03d}" for v in range(vocab_per_topic)]) for t in range(topics)
    ]
    meta = []
    topic_map: dict[str, int] = {}
    for t in range(topics):
        for c in range(communities_per_topic):
            cid = f"t{t:02d}c{c:02d}"
            desc = " ".join(rng.choice(vocab[t], size=_DESC_WORDS))
            meta.append(CommunityMeta(cid, desc))
            topic_map[cid] = t

    posts = []
    for u in range(users):
        uid = f"u{u:05d}"
        home = int(rng.integers(topics))
        ts = int(rng.integers(0, 1000))
        for _ in range(posts_per_user):
            t = home
            if topics > 1 and rng.random() < noise:
                other = int(rng.integers(topics - 1))
                t = other + 1 if other >= home else other
            c = int(rng.integers(communities_per_topic))
            text = " ".join(rng.choice(vocab[t], size=_POST_WORDS))
            ts += int(rng.integers(1, 100))
            posts.append(Post(uid, f"t{t:02d}c{c:02d}", ts, text))

    return build_dataset(posts, meta), topic_map
