import re

import pytest

from communityrec import synth


class TestGenerate:
    def test_shape_and_ids(self):
        ds, topic_map = synth.generate(4, 3, 200, 5, 0.1, seed=0)
        assert ds.n == 12
        assert ds.m == 200
        assert len(ds.posts) == 200 * 5
        assert sorted(topic_map) == ds.communities
        assert set(topic_map.values()) == {0, 1, 2, 3}
        assert all(re.fullmatch(r"t\d{2}c\d{2}", cid) for cid in ds.communities)
        assert all(re.fullmatch(r"u\d{5}", uid) for uid in ds.users)
        assert topic_map["t02c01"] == 2

    def test_description_and_post_lengths(self):
        ds, _ = synth.generate(2, 3, 10, 4, 0.0, seed=1)
        for desc in ds.descriptions.values():
            assert len(desc.split()) == 15
        for p in ds.posts:
            assert len(p.text.split()) == 8

    def test_vocabularies_are_topic_disjoint(self):
        ds, topic_map = synth.generate(3, 2, 30, 4, 0.0, vocab_per_topic=10, seed=2)
        for cid, desc in ds.descriptions.items():
            t = topic_map[cid]
            assert all(w.startswith(f"t{t:02d}w") for w in desc.split())
        # with zero noise every post's text comes from its community's topic
        for p in ds.posts:
            t = topic_map[p.community_id]
            assert all(w.startswith(f"t{t:02d}w") for w in p.text.split())

    def test_zero_noise_keeps_users_in_one_topic(self):
        ds, topic_map = synth.generate(4, 3, 50, 6, 0.0, seed=3)
        for uid in ds.users:
            topics_hit = {topic_map[p.community_id] for p in ds.posts if p.user_id == uid}
            assert len(topics_hit) == 1

    def test_noise_spills_into_other_topics(self):
        ds, topic_map = synth.generate(4, 3, 100, 8, 0.5, seed=4)
        spilled = 0
        for uid in ds.users:
            topics_hit = {topic_map[p.community_id] for p in ds.posts if p.user_id == uid}
            if len(topics_hit) > 1:
                spilled += 1
        assert spilled > 50  # at noise 0.5 almost every 8-post user crosses over

    def test_timestamps_strictly_increase_per_user(self):
        ds, _ = synth.generate(3, 3, 40, 7, 0.2, seed=5)
        by_user = {}
        for p in ds.posts:
            by_user.setdefault(p.user_id, []).append(p.timestamp)
        for stamps in by_user.values():
            assert all(a < b for a, b in zip(stamps, stamps[1:]))

    def test_same_seed_is_identical(self):
        a, map_a = synth.generate(3, 3, 25, 4, 0.1, seed=6)
        b, map_b = synth.generate(3, 3, 25, 4, 0.1, seed=6)
        assert a.posts == b.posts
        assert a.descriptions == b.descriptions
        assert map_a == map_b

    def test_different_seed_differs(self):
        a, _ = synth.generate(3, 3, 25, 4, 0.1, seed=6)
        b, _ = synth.generate(3, 3, 25, 4, 0.1, seed=7)
        assert a.posts != b.posts

    def test_single_topic_ignores_noise_draws(self):
        ds, topic_map = synth.generate(1, 4, 10, 3, 0.9, seed=8)
        assert set(topic_map.values()) == {0}
        assert ds.n == 4

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"topics": 0},
            {"communities_per_topic": 0},
            {"users": 0},
            {"posts_per_user": 0},
            {"vocab_per_topic": 0},
            {"noise": -0.1},
            {"noise": 1.0},
        ],
    )
    def test_bad_arguments_rejected(self, kwargs):
        base = dict(topics=2, communities_per_topic=3, users=5, posts_per_user=4, noise=0.1)
        base.update(kwargs)
        with pytest.raises(ValueError):
            synth.generate(**base)

    def test_thin_shapes_warn(self, caplog):
        with caplog.at_level("WARNING"):
            synth.generate(2, 2, 5, 4, 0.0, seed=9)
        assert "eligibility" in caplog.text
        caplog.clear()
        with caplog.at_level("WARNING"):
            synth.generate(2, 3, 5, 2, 0.0, seed=9)
        assert "eligibility" in caplog.text
