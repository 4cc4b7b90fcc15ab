import json

import numpy as np
import pytest

from communityrec import corpus

from conftest import make_dataset


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def post_rec(user="u1", community="c1", ts=1, text="hello world"):
    return {"user_id": user, "community_id": community, "timestamp": ts, "text": text}


class TestIngest:
    def test_basic_counts(self, tmp_path):
        write_jsonl(tmp_path / "meta.jsonl", [
            {"community_id": "c1", "description": "one"},
            {"community_id": "c2", "description": "two"},
        ])
        write_jsonl(tmp_path / "posts.jsonl", [
            post_rec("u1", "c1", 1),
            post_rec("u2", "c2", 2),
            post_rec("u1", "c2", 3),
        ])
        ds = corpus.ingest(tmp_path / "posts.jsonl", tmp_path / "meta.jsonl")
        assert ds.m == 2
        assert ds.n == 2
        assert ds.users == ["u1", "u2"]
        assert ds.communities == ["c1", "c2"]
        assert len(ds.posts) == 3

    def test_empty_posts_file(self, tmp_path):
        write_jsonl(tmp_path / "meta.jsonl", [{"community_id": "c1", "description": "one"}])
        (tmp_path / "posts.jsonl").write_text("")
        ds = corpus.ingest(tmp_path / "posts.jsonl", tmp_path / "meta.jsonl")
        assert ds.m == 0
        assert ds.n == 1

    def test_missing_timestamp_names_line(self, tmp_path):
        write_jsonl(tmp_path / "meta.jsonl", [{"community_id": "c1", "description": "one"}])
        recs = [post_rec(), {"user_id": "u2", "community_id": "c1", "text": "no ts"}]
        write_jsonl(tmp_path / "posts.jsonl", recs)
        with pytest.raises(ValueError, match="line 2.*timestamp"):
            corpus.ingest(tmp_path / "posts.jsonl", tmp_path / "meta.jsonl")

    def test_malformed_json_names_line(self, tmp_path):
        write_jsonl(tmp_path / "meta.jsonl", [{"community_id": "c1", "description": "one"}])
        with open(tmp_path / "posts.jsonl", "w") as fh:
            fh.write(json.dumps(post_rec()) + "\n")
            fh.write("{not json\n")
        with pytest.raises(ValueError, match="line 2"):
            corpus.ingest(tmp_path / "posts.jsonl", tmp_path / "meta.jsonl")

    def test_unknown_community_is_referential_error(self, tmp_path):
        write_jsonl(tmp_path / "meta.jsonl", [{"community_id": "c1", "description": "one"}])
        write_jsonl(tmp_path / "posts.jsonl", [post_rec(community="c9")])
        with pytest.raises(ValueError, match="c9"):
            corpus.ingest(tmp_path / "posts.jsonl", tmp_path / "meta.jsonl")

    def test_duplicate_meta_id(self, tmp_path):
        write_jsonl(tmp_path / "meta.jsonl", [
            {"community_id": "c1", "description": "one"},
            {"community_id": "c1", "description": "again"},
        ])
        write_jsonl(tmp_path / "posts.jsonl", [])
        with pytest.raises(ValueError, match="duplicate"):
            corpus.ingest(tmp_path / "posts.jsonl", tmp_path / "meta.jsonl")

    def test_negative_timestamp_rejected(self, tmp_path):
        write_jsonl(tmp_path / "meta.jsonl", [{"community_id": "c1", "description": "one"}])
        write_jsonl(tmp_path / "posts.jsonl", [post_rec(ts=-5)])
        with pytest.raises(ValueError, match="timestamp"):
            corpus.ingest(tmp_path / "posts.jsonl", tmp_path / "meta.jsonl")

    def test_round_trip(self, tmp_path, tiny_ds):
        corpus.write_dataset(tiny_ds, tmp_path / "p.jsonl", tmp_path / "m.jsonl")
        again = corpus.ingest(tmp_path / "p.jsonl", tmp_path / "m.jsonl")
        assert again == tiny_ds


class TestFilterMinCommunities:
    def test_below_threshold_dropped(self):
        ds = make_dataset(
            [("u1", "c1", 1, ""), ("u1", "c2", 2, ""), ("u2", "c1", 3, "")],
            [("c1", ""), ("c2", ""), ("c3", "")],
        )
        out = corpus.filter_min_communities(ds, 2)
        assert out.users == ["u1"]
        assert out.communities == ds.communities  # communities never shrink
        assert all(p.user_id == "u1" for p in out.posts)

    def test_boundary_user_kept(self):
        ds = make_dataset(
            [("u1", "c1", 1, ""), ("u1", "c2", 2, ""), ("u1", "c3", 3, "")],
            [("c1", ""), ("c2", ""), ("c3", "")],
        )
        out = corpus.filter_min_communities(ds, 3)
        assert out.users == ["u1"]

    def test_k_min_one_is_identity(self, tiny_ds):
        assert corpus.filter_min_communities(tiny_ds, 1) == tiny_ds

    def test_distinctness_not_post_count(self):
        # five posts but only two distinct communities
        ds = make_dataset(
            [("u1", "c1", t, "") for t in range(4)] + [("u1", "c2", 9, "")],
            [("c1", ""), ("c2", "")],
        )
        assert corpus.filter_min_communities(ds, 3).users == []

    def test_invalid_k_min(self, tiny_ds):
        with pytest.raises(ValueError):
            corpus.filter_min_communities(tiny_ds, 0)

    def test_idempotent(self, tiny_ds):
        once = corpus.filter_min_communities(tiny_ds, 2)
        assert corpus.filter_min_communities(once, 2) == once


class TestRatingMatrix:
    def test_direct_construction(self):
        ds = make_dataset([("u1", "c3", 1, "")], [("c1", ""), ("c2", ""), ("c3", ""), ("c4", ""), ("c5", "")])
        mat = corpus.build_rating_matrix(ds, [(0, 4)])
        assert mat.entries == {(0, 2): 5, (0, 4): 1}

    def test_empty(self):
        ds = make_dataset([], [("c1", "")])
        mat = corpus.build_rating_matrix(ds, [])
        assert mat.entries == {}
        assert mat.m == 0 and mat.n == 1

    def test_negative_colliding_with_positive(self):
        ds = make_dataset([("u1", "c3", 1, "")], [("c1", ""), ("c2", ""), ("c3", "")])
        with pytest.raises(ValueError, match="positive"):
            corpus.build_rating_matrix(ds, [(0, 2)])

    def test_out_of_bounds_negative(self):
        ds = make_dataset([("u1", "c1", 1, "")], [("c1", "")])
        with pytest.raises(ValueError, match="bounds"):
            corpus.build_rating_matrix(ds, [(0, 5)])

    def test_values_restricted(self):
        with pytest.raises(ValueError, match="only 5 and 1"):
            corpus.RatingMatrix(1, 1, {(0, 0): 3})

    def test_dense_and_mask(self, tiny_ds):
        mat = corpus.build_rating_matrix(tiny_ds, [])
        dense = mat.to_dense()
        mask = mat.observed_mask()
        assert dense.shape == (3, 4)
        assert dense[tiny_ds.user_pos["alice"], tiny_ds.community_pos["c0"]] == 5.0
        assert mask.sum() == len(mat.entries)
        # every 5 entry is backed by at least one post
        for (i, j), v in mat.entries.items():
            assert v == 5
            assert any(
                tiny_ds.user_pos[p.user_id] == i and tiny_ds.community_pos[p.community_id] == j
                for p in tiny_ds.posts
            )

    def test_posts_subset(self, tiny_ds):
        train = [p for p in tiny_ds.posts if p.community_id != "c0"]
        mat = corpus.build_rating_matrix(tiny_ds, [], posts=train)
        assert all(j != tiny_ds.community_pos["c0"] for (_, j) in mat.entries)

    def test_random_matrices_match_posts(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n_users, n_comms = int(rng.integers(1, 6)), int(rng.integers(2, 7))
            meta = [(f"c{j}", "") for j in range(n_comms)]
            posts = []
            for i in range(n_users):
                for j in range(n_comms):
                    if rng.random() < 0.4:
                        posts.append((f"u{i}", f"c{j}", int(rng.integers(0, 100)), "x"))
            if not posts:
                continue
            ds = make_dataset(posts, meta)
            mat = corpus.build_rating_matrix(ds, [])
            pairs = {(ds.user_pos[u], ds.community_pos[c]) for (u, c, _, _) in posts}
            assert set(mat.entries) == pairs
            assert set(mat.entries.values()) <= {5}
