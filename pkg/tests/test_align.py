import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from editrep.align import (
    GAP,
    TAG_DELETE,
    TAG_EQUAL,
    TAG_INSERT,
    TAG_REPLACE,
    AlignedDiff,
    DiffEntry,
    align,
    flip,
    format_diff,
)


def edit_distance(a, b):
    """Independent unit-cost Levenshtein with substitutions (cost oracle)."""
    m, n = len(a), len(b)
    prev = list(range(n + 1))
    for i in range(1, m + 1):
        cur = [i] + [0] * n
        for j in range(1, n + 1):
            sub = prev[j - 1] + (a[i - 1] != b[j - 1])
            cur[j] = min(sub, prev[j] + 1, cur[j - 1] + 1)
        prev = cur
    return prev[n]


tokens = st.text(alphabet="abcde", min_size=1, max_size=1)
seqs = st.lists(tokens, min_size=1, max_size=12)


def test_figure_example():
    diff = align("v . F = x + x".split(), "u = x + x".split())
    expected = [
        (TAG_REPLACE, "v", "u"),
        (TAG_DELETE, ".", GAP),
        (TAG_DELETE, "F", GAP),
        (TAG_EQUAL, "=", "="),
        (TAG_EQUAL, "x", "x"),
        (TAG_EQUAL, "+", "+"),
        (TAG_EQUAL, "x", "x"),
    ]
    assert [(e.tag, e.before_token, e.after_token) for e in diff] == expected


def test_identical_sequences_all_equal():
    diff = align(list("abca"), list("abca"))
    assert all(e.tag == TAG_EQUAL for e in diff)
    assert diff.cost() == 0


def test_nonempty_precondition():
    with pytest.raises(ValueError):
        align([], ["a"])
    with pytest.raises(ValueError):
        align(["a"], [])


def test_random_pairs_match_levenshtein():
    import random

    rng = random.Random(1234)
    vocab = ["t0", "t1", "t2", "t3", "t4"]
    for _ in range(1000):
        a = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
        b = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
        diff = align(a, b)
        assert diff.cost() == edit_distance(a, b)
        assert diff.before_tokens == a
        assert diff.after_tokens == b


def test_exhaustive_small_cost_optimality():
    from itertools import product

    alphabet = "ab"
    seqs_small = [list(p) for l in range(1, 5) for p in product(alphabet, repeat=l)]
    for a in seqs_small:
        for b in seqs_small:
            assert align(a, b).cost() == edit_distance(a, b)


@given(seqs)
@settings(max_examples=100, deadline=None)
def test_self_alignment_has_no_edits(xs):
    assert align(xs, xs).cost() == 0


@given(seqs, seqs)
@settings(max_examples=200, deadline=None)
def test_projections_reproduce_inputs(a, b):
    diff = align(a, b)
    assert diff.before_tokens == a
    assert diff.after_tokens == b


@given(seqs, seqs)
@settings(max_examples=200, deadline=None)
def test_symmetric_flip_under_mirrored_preference(a, b):
    # Flipping the alignment equals aligning in the opposite direction with
    # the mirrored consume-first preference.
    assert flip(align(a, b)) == align(b, a, consume_before_first=False)


@given(seqs, seqs)
@settings(max_examples=100, deadline=None)
def test_tags_imply_token_slots(a, b):
    for e in align(a, b):
        if e.tag == TAG_INSERT:
            assert e.before_token == GAP and e.after_token != GAP
        elif e.tag == TAG_DELETE:
            assert e.after_token == GAP and e.before_token != GAP
        elif e.tag == TAG_EQUAL:
            assert e.before_token == e.after_token != GAP
        else:
            assert GAP not in (e.before_token, e.after_token)


def test_diff_entry_validation():
    with pytest.raises(ValueError):
        DiffEntry(TAG_INSERT, "a", "b")
    with pytest.raises(ValueError):
        DiffEntry(TAG_EQUAL, "a", "b")


def test_determinism_prefers_replace_then_delete():
    # 'p q' -> 'r': replacement must come first, then the deletion.
    diff = align(["p", "q"], ["r"])
    assert [e.tag for e in diff] == [TAG_REPLACE, TAG_DELETE]


def test_format_diff_three_columns():
    text = format_diff(align(["a"], ["a", "b"]))
    lines = text.splitlines()
    assert lines[0] == "=\ta\ta"
    assert lines[1] == f"+\t{GAP}\tb"
