import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oomkit.core import MISSING, Alphabet, MissObsSeq
from oomkit.estimator import (
    QueryWord,
    assemble_hankel,
    count_obs,
    freq_estimate,
    indicator,
    select_words,
)

WORKED_TRAJ = MissObsSeq.from_tokens([MISSING, "b", "a", "b", MISSING])
WORKED_QUERY = (MISSING, "b")


def naive_match(q, o):
    if q is MISSING:
        return True
    if o is MISSING:
        return False
    return o == q


def naive_count(query, tokens):
    k, n = len(query), len(tokens)
    return sum(
        all(naive_match(q, tokens[i + j]) for j, q in enumerate(query))
        for i in range(n - k + 1)
    )


# ---------------------------------------------------------------------------
# queries and matching


def test_query_word_validates_tokens():
    q = QueryWord(["a", MISSING])
    assert q.tokens == ("a", MISSING)
    assert q.miss == (0, 1)
    assert len(q) == 2
    with pytest.raises(ValueError):
        QueryWord([])
    with pytest.raises(ValueError):
        QueryWord([3])


def test_indicator_wildcard_matches_anything():
    assert indicator((MISSING,), ("a",)) == 1
    assert indicator((MISSING,), (MISSING,)) == 1
    assert indicator(("a",), ("a",)) == 1
    assert indicator(("a",), ("b",)) == 0


def test_indicator_concrete_never_matches_missing_window():
    assert indicator(("b",), (MISSING,)) == 0
    assert indicator((MISSING, "b"), ("b", MISSING)) == 0


def test_indicator_rejects_length_mismatch():
    with pytest.raises(ValueError):
        indicator(("a",), ("a", "b"))


def test_worked_example_placements():
    # placements of _b over _ b a b _ contribute 1 + 0 + 1 + 0
    windows = [WORKED_TRAJ.obs[i : i + 2] for i in range(4)]
    assert [indicator(WORKED_QUERY, w) for w in windows] == [1, 0, 1, 0]


def test_worked_example_count_and_frequency():
    assert count_obs(WORKED_QUERY, WORKED_TRAJ) == 2
    assert freq_estimate(WORKED_QUERY, [WORKED_TRAJ]) == 0.5


# ---------------------------------------------------------------------------
# counting against the naive scan

token_st = st.sampled_from(["a", "b", "c", MISSING])
query_token_st = st.sampled_from(["a", "b", "d", MISSING])


@settings(max_examples=200, deadline=None)
@given(
    st.lists(token_st, min_size=1, max_size=30),
    st.lists(query_token_st, min_size=1, max_size=4),
)
def test_count_obs_matches_naive_scan(tokens, query):
    if len(query) > len(tokens):
        tokens = tokens + ["a"] * (len(query) - len(tokens))
    traj = MissObsSeq.from_tokens(tokens)
    assert count_obs(query, traj) == naive_count(query, tokens)


def test_count_obs_rejects_short_trajectory():
    with pytest.raises(ValueError):
        count_obs(("a", "b"), MissObsSeq.from_symbols("a"))


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.sampled_from(["a", "b"]), min_size=4, max_size=30),
    st.integers(min_value=0, max_value=3),
    st.integers(min_value=1, max_value=3),
)
def test_wildcard_count_partitions_over_fill_ins_on_clean_data(tokens, pos, length):
    # on missing-free data a wildcard slot splits exactly across the symbols
    query = ["a"] * length
    query[min(pos, length - 1)] = MISSING
    total = sum(
        naive_count(q, tokens)
        for q in (
            [s if t is MISSING else t for t in query]
            for s in ("a", "b")
        )
    )
    assert count_obs(query, MissObsSeq.from_symbols(tokens)) == total


def test_wildcard_count_dominates_fill_ins_on_corrupted_data():
    traj = MissObsSeq.from_tokens(["a", MISSING, "b", "a", MISSING, MISSING, "b"])
    query = ("a", MISSING)
    filled = [("a", "a"), ("a", "b")]
    total = sum(count_obs(q, traj) for q in filled)
    assert count_obs(query, traj) >= total


# ---------------------------------------------------------------------------
# pooled frequencies


def test_freq_estimate_empty_query_is_one():
    assert freq_estimate((), [WORKED_TRAJ]) == 1.0


def test_freq_estimate_pools_across_trajectories():
    t1 = MissObsSeq.from_symbols("aab")  # 2 placements of length 2, 1 hit of "aa"
    t2 = MissObsSeq.from_symbols("aaa")  # 2 placements, 2 hits
    assert freq_estimate(("a", "a"), [t1, t2]) == pytest.approx(3 / 4)


def test_freq_estimate_skips_too_short_trajectories():
    t1 = MissObsSeq.from_symbols("a")
    t2 = MissObsSeq.from_symbols("aa")
    assert freq_estimate(("a", "a"), [t1, t2]) == 1.0
    with pytest.raises(ValueError):
        freq_estimate(("a", "a", "a"), [t1, t2])


# ---------------------------------------------------------------------------
# word selection


def test_select_words_all_in_lexicographic_order():
    a = Alphabet(["a", "b"])
    data = [MissObsSeq.from_symbols("abab")]
    words = select_words(data, 2, a, None)
    assert words == [("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")]


def test_select_words_ranks_by_count():
    a = Alphabet(["a", "b"])
    data = [MissObsSeq.from_symbols("ababab")]  # ab x3, ba x2
    assert select_words(data, 2, a, 2) == [("a", "b"), ("b", "a")]
    assert select_words(data, 2, a, 1) == [("a", "b")]


def test_select_words_breaks_ties_lexicographically():
    a = Alphabet(["a", "b"])
    data = [MissObsSeq.from_symbols("abba")]  # ab, bb, ba once each
    assert select_words(data, 2, a, 3) == [("a", "b"), ("b", "a"), ("b", "b")]


def test_select_words_keeps_only_occurring_words():
    a = Alphabet(["a", "b"])
    data = [MissObsSeq.from_symbols("aaaa")]
    assert select_words(data, 2, a, 10) == [("a", "a")]


def test_select_words_requires_a_clean_window():
    a = Alphabet(["a", "b"])
    data = [MissObsSeq.from_tokens(["a", MISSING, "a"])]
    with pytest.raises(ValueError):
        select_words(data, 2, a, 4)
    assert select_words(data, 1, a, 4) == [("a",)]


def test_select_words_validates_arguments():
    a = Alphabet(["a"])
    data = [MissObsSeq.from_symbols("aa")]
    with pytest.raises(ValueError):
        select_words(data, 0, a, None)
    with pytest.raises(ValueError):
        select_words(data, 1, a, 0)


# ---------------------------------------------------------------------------
# Hankel assembly


def corrupted_data(seed, n=400, miss=0.2):
    rng = np.random.default_rng(seed)
    tokens = [
        MISSING if rng.random() < miss else ("a", "b")[rng.integers(2)]
        for _ in range(n)
    ]
    return [MissObsSeq.from_tokens(tokens)]


@pytest.mark.parametrize("seed", [0, 1])
def test_hankel_blocks_equal_pooled_frequencies(seed):
    a = Alphabet(["a", "b"])
    data = corrupted_data(seed)
    # mixed word lengths exercise the per-length table grouping
    q_words = [("a",), ("b",), ("a", "b")]
    c_words = [("b",), ("a", "a"), ("b", "a")]
    h = assemble_hankel(data, q_words, c_words, a)
    assert h.f_cq.shape == (3, 3)
    for j, q in enumerate(q_words):
        assert h.f_q[j] == pytest.approx(freq_estimate(q, data), abs=0)
        for i, c in enumerate(c_words):
            assert h.f_cq[i, j] == pytest.approx(freq_estimate(q + c, data), abs=0)
            for s in a:
                assert h.f_xcq[s][i, j] == pytest.approx(
                    freq_estimate(q + (s,) + c, data), abs=0
                )
    for i, c in enumerate(c_words):
        assert h.f_c[i] == pytest.approx(freq_estimate(c, data), abs=0)


def test_hankel_word_metadata_round_trip():
    a = Alphabet(["a", "b"])
    data = [MissObsSeq.from_symbols("ababaabb" * 4)]
    words = list(a.words(2))
    h = assemble_hankel(data, words, words, a)
    assert h.q_words == tuple(words)
    assert h.c_words == tuple(words)
    assert set(h.f_xcq) == {"a", "b"}


def test_hankel_rejects_bad_word_lists():
    a = Alphabet(["a", "b"])
    data = [MissObsSeq.from_symbols("abab")]
    with pytest.raises(ValueError):
        assemble_hankel(data, [], [("a",)], a)
    with pytest.raises(ValueError):
        assemble_hankel(data, [("a",)], [()], a)
    with pytest.raises(ValueError):
        assemble_hankel(data, [("a", MISSING)], [("a",)], a)
    with pytest.raises(ValueError):
        assemble_hankel(data, [("z",)], [("a",)], a)


def test_hankel_rejects_data_without_long_windows():
    a = Alphabet(["a", "b"])
    data = [MissObsSeq.from_symbols("ab")]
    with pytest.raises(ValueError):
        # needs windows of length 2 + 1 + 2 = 5
        assemble_hankel(data, [("a", "b")], [("a", "b")], a)


def test_hankel_rejects_key_overflow():
    symbols = [f"s{i}" for i in range(5000)]
    a = Alphabet(symbols)
    data = [MissObsSeq.from_symbols(symbols[:10])]
    word = tuple(symbols[:3])
    with pytest.raises(ValueError):
        assemble_hankel(data, [word], [word], a)
