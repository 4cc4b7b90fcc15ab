import dataclasses

import pytest

from communityrec import corpus, splits

# One line per acceptance criterion, printed in the terminal summary so a full
# run always ends with the pass/fail ledger.
ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, ok: bool, detail: str) -> None:
    """Append the criterion's ledger line, then enforce it."""
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_dataset(posts, meta):
    """Build a dataset from (user, community, ts, text) tuples and (id, desc) pairs."""
    return corpus.build_dataset(
        [corpus.Post(*p) for p in posts],
        [corpus.CommunityMeta(*m) for m in meta],
    )


def make_split(ds, seed=0, with_negatives=True):
    split = splits.build_split(ds, seed)
    if with_negatives:
        split = dataclasses.replace(split, negatives=splits.sample_negatives(ds, split, seed))
    return split


@pytest.fixture
def tiny_ds():
    """Three users, four communities, enough history for a split."""
    meta = [(f"c{j}", f"all about topic {j}") for j in range(4)]
    posts = [
        ("alice", "c0", 10, "alpha beta"),
        ("alice", "c1", 20, "beta gamma"),
        ("alice", "c0", 30, "alpha alpha"),
        ("bob", "c1", 5, "beta beta"),
        ("bob", "c2", 15, "gamma delta"),
        ("carol", "c2", 8, "delta delta"),
        ("carol", "c3", 12, "epsilon"),
        ("carol", "c0", 25, "alpha"),
    ]
    return make_dataset(posts, meta)
