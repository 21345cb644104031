import itertools

import numpy as np
import pytest

from oomkit.core import (
    MISSING,
    Alphabet,
    IoOom,
    MissingToken,
    MissObsSeq,
    Oom,
    augment_to_ioom,
    check_symbol,
    external_fn,
    is_missing,
    reduce_to_oom,
    similarity_transform,
    stationary_state,
    wildcard_prob,
)
from oomkit.simulate import gen_ring_hmm, hmm_to_oom


def ring_oom(n_states=3, n_obs=3, seed=0):
    return hmm_to_oom(gen_ring_hmm(n_states, n_obs, 2, seed))


def all_words(alphabet, max_len):
    for length in range(1, max_len + 1):
        yield from alphabet.words(length)


# ---------------------------------------------------------------------------
# tokens and alphabet


def test_missing_is_a_singleton():
    assert MISSING is MissingToken.MISSING
    assert is_missing(MISSING)
    assert not is_missing("a")
    assert not is_missing("_")  # the string is wire syntax, not the token
    assert repr(MISSING) == "MISSING"


@pytest.mark.parametrize("good", ["a", "ab", "x1", "s12", "a-b", "__x"])
def test_check_symbol_accepts_wire_safe_strings(good):
    assert check_symbol(good) == good


@pytest.mark.parametrize("bad", ["", "_", "a b", "a\tb", "a\n", "#", "#x", 3, None])
def test_check_symbol_rejects_unsafe_values(bad):
    with pytest.raises(ValueError):
        check_symbol(bad)


def test_alphabet_orders_and_indexes():
    a = Alphabet(["b", "a", "c"])
    assert a.symbols == ("b", "a", "c")
    assert [a.index(s) for s in "bac"] == [0, 1, 2]
    assert "a" in a and "z" not in a
    assert len(a) == 3
    assert list(a) == ["b", "a", "c"]
    with pytest.raises(ValueError):
        a.index("z")


def test_alphabet_rejects_duplicates_and_empty():
    with pytest.raises(ValueError):
        Alphabet(["a", "a"])
    with pytest.raises(ValueError):
        Alphabet([])


def test_alphabet_words_enumerates_lexicographically():
    a = Alphabet(["x", "y"])
    assert list(a.words(2)) == [("x", "x"), ("x", "y"), ("y", "x"), ("y", "y")]
    assert list(a.words(0)) == [()]


# ---------------------------------------------------------------------------
# trajectories


def test_missobsseq_from_tokens_builds_matching_bits():
    t = MissObsSeq.from_tokens(["a", MISSING, "b"])
    assert t.miss == (0, 1, 0)
    assert t.obs == ("a", MISSING, "b")
    assert t.missing_count == 1
    assert len(t) == 3
    assert list(t) == ["a", MISSING, "b"]


def test_missobsseq_rejects_inconsistent_bits():
    with pytest.raises(ValueError):
        MissObsSeq((0,), (MISSING,))
    with pytest.raises(ValueError):
        MissObsSeq((1,), ("a",))
    with pytest.raises(ValueError):
        MissObsSeq((0, 0), ("a",))
    with pytest.raises(ValueError):
        MissObsSeq((2,), ("a",))


def test_missobsseq_prefix():
    t = MissObsSeq.from_tokens(["a", MISSING, "b", "a"])
    p = t.prefix(2)
    assert p.obs == ("a", MISSING)
    assert p.miss == (0, 1)


def test_missobsseq_from_symbols_is_fully_observed():
    t = MissObsSeq.from_symbols("abc")
    assert t.missing_count == 0
    assert t.obs == ("a", "b", "c")


# ---------------------------------------------------------------------------
# model containers


def two_dim_shift_model():
    # tau_a projects onto e1, tau_b maps e1 to e2; the pair does not commute
    a = Alphabet(["a", "b"])
    tau = {
        "a": np.array([[1.0, 0.0], [0.0, 0.0]]),
        "b": np.array([[0.0, 0.0], [1.0, 0.0]]),
    }
    return Oom(a, np.array([1.0, 1.0]), tau, np.array([1.0, 0.0]))


def test_oom_validates_shapes_and_operator_set():
    a = Alphabet(["a", "b"])
    tau = {"a": np.eye(2), "b": np.eye(2)}
    with pytest.raises(ValueError):
        Oom(a, np.ones(3), tau, np.ones(2))
    with pytest.raises(ValueError):
        Oom(a, np.ones(2), {"a": np.eye(2)}, np.ones(2))
    with pytest.raises(ValueError):
        Oom(a, np.ones(2), {**tau, "c": np.eye(2)}, np.ones(2))
    with pytest.raises(ValueError):
        Oom(a, np.ones(2), {"a": np.eye(2), "b": np.eye(3)}, np.ones(2))


def test_oom_arrays_are_frozen():
    m = two_dim_shift_model()
    assert not m.sigma.flags.writeable
    assert not m.omega.flags.writeable
    assert not m.tau["a"].flags.writeable
    assert m.dim == 2


def test_ioom_requires_exact_operator_key_set():
    oom = two_dim_shift_model()
    io = augment_to_ioom(oom)
    bad = dict(io.tau)
    del bad[(1, "a")]
    with pytest.raises(ValueError):
        IoOom(io.alphabet, io.sigma, bad, io.omega)
    worse = dict(io.tau)
    worse[(2, "a")] = np.eye(2)
    with pytest.raises(ValueError):
        IoOom(io.alphabet, io.sigma, worse, io.omega)


# ---------------------------------------------------------------------------
# evaluation order


def test_operators_apply_earliest_symbol_first():
    m = two_dim_shift_model()
    # e1 survives tau_a then moves to e2 under tau_b; the reverse dies
    assert external_fn(m, ("a", "b")) == 1.0
    assert external_fn(m, ("b", "a")) == 0.0


def test_empty_word_evaluates_sigma_omega():
    m = ring_oom()
    assert external_fn(m, ()) == pytest.approx(1.0, abs=1e-12)


def test_pair_words_evaluate_on_augmented_model():
    m = two_dim_shift_model()
    io = augment_to_ioom(m)
    assert external_fn(io, ((0, "a"), (0, "b"))) == 1.0
    assert external_fn(io, ((0, "b"), (0, "a"))) == 0.0


# ---------------------------------------------------------------------------
# wildcard weights


def fill_ins(query, symbols):
    slots = [i for i, t in enumerate(query) if t is MISSING]
    for combo in itertools.product(symbols, repeat=len(slots)):
        filled = list(query)
        for i, s in zip(slots, combo):
            filled[i] = s
        yield tuple(filled)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_wildcard_prob_sums_over_completions(seed):
    oom = ring_oom(seed=seed)
    syms = oom.alphabet.symbols
    queries = []
    for length in (1, 2, 3, 4):
        for word in itertools.product((*syms, MISSING), repeat=length):
            if sum(t is MISSING for t in word) <= 2:
                queries.append(word)
    for q in queries:
        total = sum(external_fn(oom, w) for w in fill_ins(q, syms))
        assert wildcard_prob(oom, q) == pytest.approx(total, abs=1e-12)


def test_wildcard_prob_accepts_missobsseq_and_start():
    oom = ring_oom(seed=3)
    w = stationary_state(oom)
    q = MissObsSeq.from_tokens(["a", MISSING])
    direct = wildcard_prob(oom, ("a", MISSING), start=w)
    assert wildcard_prob(oom, q, start=w) == pytest.approx(direct, abs=0)
    # all-wildcard words carry the full mass at the stationary state
    for length in (1, 2, 3):
        assert wildcard_prob(oom, (MISSING,) * length, start=w) == pytest.approx(
            1.0, abs=1e-10
        )


# ---------------------------------------------------------------------------
# stationary state


def power_iteration_state(oom, iters=500):
    s = oom.operator_sum()
    w = np.array(oom.omega)
    for _ in range(iters):
        w = s @ w
        w = w / (oom.sigma @ w)
    return w


@pytest.mark.parametrize("seed", [0, 5, 9])
def test_stationary_state_matches_power_iteration(seed):
    oom = ring_oom(4, 3, seed=seed)
    w = stationary_state(oom)
    assert oom.sigma @ w == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(oom.operator_sum() @ w, w, atol=1e-10)
    assert np.allclose(w, power_iteration_state(oom), atol=1e-9)


def test_stationary_state_rejects_models_without_unit_eigenvalue():
    a = Alphabet(["a"])
    half = Oom(a, np.array([1.0]), {"a": np.array([[0.5]])}, np.array([1.0]))
    with pytest.raises(ValueError):
        stationary_state(half)


# ---------------------------------------------------------------------------
# similarity maps


@pytest.mark.parametrize("seed", range(6))
def test_similarity_transform_preserves_word_weights(seed):
    oom = ring_oom(seed=seed)
    rng = np.random.default_rng(seed + 100)
    rho = rng.normal(size=(oom.dim, oom.dim)) + 3 * np.eye(oom.dim)
    other = similarity_transform(oom, rho)
    for w in all_words(oom.alphabet, 4):
        assert external_fn(other, w) == pytest.approx(
            external_fn(oom, w), abs=1e-10
        )


def test_similarity_transform_rejects_singular_maps():
    oom = ring_oom()
    rho = np.zeros((oom.dim, oom.dim))
    with pytest.raises(ValueError):
        similarity_transform(oom, rho)
    with pytest.raises(ValueError):
        similarity_transform(oom, np.eye(2))  # wrong size


def test_similarity_transform_round_trip():
    oom = ring_oom(seed=7)
    rng = np.random.default_rng(42)
    rho = rng.normal(size=(oom.dim, oom.dim)) + 3 * np.eye(oom.dim)
    back = similarity_transform(similarity_transform(oom, rho), np.linalg.inv(rho))
    assert np.allclose(back.sigma, oom.sigma, atol=1e-8)
    assert np.allclose(back.omega, oom.omega, atol=1e-8)
    for s in oom.alphabet:
        assert np.allclose(back.tau[s], oom.tau[s], atol=1e-8)


# ---------------------------------------------------------------------------
# augmentation


def test_augment_operator_structure():
    oom = ring_oom(seed=1)
    io = augment_to_ioom(oom)
    total = oom.operator_sum()
    for s in oom.alphabet:
        assert np.array_equal(io.tau[(0, s)], oom.tau[s])
        assert np.array_equal(io.tau[(1, s)], np.zeros_like(total))
    assert np.array_equal(io.tau[(0, MISSING)], np.zeros_like(total))
    assert np.allclose(io.tau[(1, MISSING)], total, atol=0)


def test_reduce_then_augment_round_trip():
    oom = ring_oom(seed=2)
    back = reduce_to_oom(augment_to_ioom(oom))
    assert np.array_equal(back.sigma, oom.sigma)
    assert np.array_equal(back.omega, oom.omega)
    for s in oom.alphabet:
        assert np.array_equal(back.tau[s], oom.tau[s])


def test_augmented_pair_words_match_wildcard_weights():
    oom = ring_oom(seed=4)
    io = augment_to_ioom(oom)
    tokens = (*oom.alphabet.symbols, MISSING)
    for length in (1, 2, 3):
        for word in itertools.product(tokens, repeat=length):
            pairs = tuple((1, MISSING) if t is MISSING else (0, t) for t in word)
            assert external_fn(io, pairs) == pytest.approx(
                wildcard_prob(oom, word), abs=1e-12
            )
