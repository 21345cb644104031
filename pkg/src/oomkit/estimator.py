"""Wildcard window counting and Hankel block assembly.

The frequency estimator slides a length-k query along a trajectory and
counts matching windows.  A query position holding :data:`MISSING` is a
wildcard and matches any window token, including a missing one.  A
concrete query position matches only the identical symbol; in particular a
*missing window token never matches a concrete query token*, because the
underlying value at a corrupted position is unknown.  The estimate is the
match count over the number of window placements, pooled across
trajectories.  Windows never span trajectory boundaries.

Example: for the trajectory ``_ b a b _`` and the query ``_ b`` the four
placements contribute 1 + 0 + 1 + 0, giving the estimate 2/4.

Hankel assembly only ever needs fully concrete queries, so it runs on a
per-length table of missing-free window counts instead of the per-query
scan; the two paths agree exactly and tests pin that down.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import MISSING, Alphabet, MissObsSeq, ObsToken

__all__ = [
    "QueryWord",
    "HankelSet",
    "indicator",
    "count_obs",
    "freq_estimate",
    "select_words",
    "assemble_hankel",
]

Tokens = Sequence[ObsToken]


@dataclass(frozen=True)
class QueryWord:
    """Validated nonempty token word used as a counting query."""

    tokens: tuple[ObsToken, ...]

    def __init__(self, tokens: Iterable[ObsToken]):
        toks = tuple(tokens)
        if not toks:
            raise ValueError("query word must be nonempty")
        for t in toks:
            if not (isinstance(t, str) or t is MISSING):
                raise ValueError(f"query token {t!r} is neither a symbol nor MISSING")
        object.__setattr__(self, "tokens", toks)

    @property
    def miss(self) -> tuple[int, ...]:
        return tuple(1 if t is MISSING else 0 for t in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


def _query_tokens(query: Union[QueryWord, Tokens]) -> tuple[ObsToken, ...]:
    if isinstance(query, QueryWord):
        return query.tokens
    return QueryWord(query).tokens


def indicator(query: Union[QueryWord, Tokens], window: Tokens) -> int:
    """1 if the window matches the query, else 0.

    Wildcard query positions match anything; concrete positions demand the
    identical token.  The window must have the query's length.
    """
    toks = _query_tokens(query)
    if len(window) != len(toks):
        raise ValueError(f"window length {len(window)} differs from query length {len(toks)}")
    for q, o in zip(toks, window):
        if q is not MISSING and o != q:
            return 0
    return 1


def _as_tokens(traj: Union[MissObsSeq, Tokens]) -> tuple[ObsToken, ...]:
    if isinstance(traj, MissObsSeq):
        return traj.obs
    return tuple(traj)


def _encode_local(tokens: tuple[ObsToken, ...], vocab: dict) -> np.ndarray:
    # unseen tokens get fresh codes; MISSING is always -1
    out = np.empty(len(tokens), dtype=np.int64)
    for i, t in enumerate(tokens):
        if t is MISSING:
            out[i] = -1
        else:
            c = vocab.get(t)
            if c is None:
                c = len(vocab)
                vocab[t] = c
            out[i] = c
    return out


def count_obs(query: Union[QueryWord, Tokens], traj: Union[MissObsSeq, Tokens]) -> int:
    """Number of query-matching windows among all placements in one trajectory."""
    toks = _query_tokens(query)
    seq = _as_tokens(traj)
    n, k = len(seq), len(toks)
    if n < k:
        raise ValueError(f"trajectory length {n} is shorter than query length {k}")
    vocab: dict = {}
    codes = _encode_local(seq, vocab)
    qcodes = [-1 if t is MISSING else vocab.get(t, -2) for t in toks]
    m = n - k + 1
    ok = np.ones(m, dtype=bool)
    for i, q in enumerate(qcodes):
        if q == -1:
            continue
        if q == -2:  # symbol absent from the trajectory, no window can match
            return 0
        ok &= codes[i : i + m] == q
    return int(ok.sum())


def freq_estimate(
    query: Union[QueryWord, Tokens], data: Sequence[Union[MissObsSeq, Tokens]]
) -> float:
    """Pooled matching frequency of a query over a collection of trajectories.

    The empty query has frequency 1 by convention.  Trajectories shorter
    than the query contribute no windows; if none is long enough the
    estimate is undefined and an error is raised.
    """
    toks = tuple(query.tokens if isinstance(query, QueryWord) else query)
    if not toks:
        return 1.0
    qw = QueryWord(toks)
    k = len(qw)
    hits = 0
    windows = 0
    for traj in data:
        n = len(_as_tokens(traj))
        if n < k:
            continue
        hits += count_obs(qw, traj)
        windows += n - k + 1
    if windows == 0:
        raise ValueError(f"no trajectory offers a window of length {k}")
    return hits / windows


# ---------------------------------------------------------------------------
# batched missing-free word counting for Hankel blocks


def _encode(traj: Union[MissObsSeq, Tokens], alphabet: Alphabet) -> np.ndarray:
    toks = _as_tokens(traj)
    out = np.empty(len(toks), dtype=np.int64)
    for i, t in enumerate(toks):
        out[i] = -1 if t is MISSING else alphabet.index(t)
    return out


class _WordTable:
    """Counts of every missing-free window of one length, keyed base-|alphabet|."""

    def __init__(self, keys: np.ndarray, counts: np.ndarray, windows: int):
        self.keys = keys
        self.counts = counts
        self.windows = windows

    def lookup(self, keys: np.ndarray) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.int64)
        pos = np.searchsorted(self.keys, keys)
        pos = np.clip(pos, 0, len(self.keys) - 1) if len(self.keys) else pos
        out = np.zeros(keys.shape, dtype=np.int64)
        if len(self.keys):
            hit = self.keys[pos] == keys
            out[hit] = self.counts[pos[hit]]
        return out


def _word_table(coded: Sequence[np.ndarray], base: int, length: int) -> _WordTable:
    powers = base ** np.arange(length, dtype=np.int64)
    chunks = []
    windows = 0
    for codes in coded:
        n = len(codes)
        if n < length:
            continue
        windows += n - length + 1
        wins = sliding_window_view(codes, length)
        valid = ~(wins < 0).any(axis=1)
        if valid.any():
            chunks.append(wins[valid] @ powers)
    if chunks:
        keys, counts = np.unique(np.concatenate(chunks), return_counts=True)
    else:
        keys = np.empty(0, dtype=np.int64)
        counts = np.empty(0, dtype=np.int64)
    return _WordTable(keys, counts, windows)


def _word_key(indices: Sequence[int], base: int) -> int:
    key = 0
    for i, s in enumerate(indices):
        key += s * base**i
    return key


def select_words(
    data: Sequence[Union[MissObsSeq, Tokens]],
    length: int,
    alphabet: Alphabet,
    top_k: int | None,
) -> list[tuple[str, ...]]:
    """Choose the row/column words for Hankel assembly.

    With ``top_k=None`` every word of the given length is returned in
    lexicographic order.  With an integer, the words are ranked by their
    missing-free window count in the data (ties broken lexicographically)
    and the best ``top_k`` that actually occur are kept.
    """
    if length < 1:
        raise ValueError("word length must be at least 1")
    if top_k is not None and top_k < 1:
        raise ValueError("top_k must be positive when given")
    coded = [_encode(t, alphabet) for t in data]
    base = len(alphabet)
    table = _word_table(coded, base, length)
    if table.counts.sum() == 0:
        raise ValueError(f"data contains no missing-free window of length {length}")
    if top_k is None:
        return list(alphabet.words(length))
    decoded = []
    for key, cnt in zip(table.keys.tolist(), table.counts.tolist()):
        idx = tuple((key // base**i) % base for i in range(length))
        decoded.append((-cnt, idx))
    decoded.sort()
    return [
        tuple(alphabet.symbols[i] for i in idx) for _, idx in decoded[:top_k]
    ]


@dataclass(frozen=True, eq=False)
class HankelSet:
    """Estimated Hankel blocks for a fixed choice of words.

    ``f_cq[i, j]`` estimates the frequency of the concatenation
    ``q_words[j] + c_words[i]`` (the column word comes first in time);
    ``f_xcq[x][i, j]`` inserts symbol ``x`` between them.  ``f_q`` and
    ``f_c`` hold the word frequencies themselves.
    """

    alphabet: Alphabet
    q_words: tuple[tuple[str, ...], ...]
    c_words: tuple[tuple[str, ...], ...]
    f_q: np.ndarray
    f_c: np.ndarray
    f_cq: np.ndarray
    f_xcq: Mapping[str, np.ndarray]


def _check_words(words: Sequence[Sequence[str]], alphabet: Alphabet, label: str) -> list[tuple[int, ...]]:
    if not words:
        raise ValueError(f"{label} word list is empty")
    coded = []
    for w in words:
        if not w:
            raise ValueError(f"{label} contains an empty word")
        idx = []
        for s in w:
            if s is MISSING:
                raise ValueError(f"{label} words must be missing-free")
            idx.append(alphabet.index(s))
        coded.append(tuple(idx))
    return coded


def assemble_hankel(
    data: Sequence[Union[MissObsSeq, Tokens]],
    q_words: Sequence[Sequence[str]],
    c_words: Sequence[Sequence[str]],
    alphabet: Alphabet,
) -> HankelSet:
    """Estimate all Hankel blocks needed by the spectral learner.

    Every block entry equals the pooled window frequency of a concrete
    word, exactly as :func:`freq_estimate` would compute it; the batched
    per-length tables only change the cost, not the values.
    """
    q_idx = _check_words(q_words, alphabet, "Q")
    c_idx = _check_words(c_words, alphabet, "C")
    base = len(alphabet)
    coded = [_encode(t, alphabet) for t in data]

    lengths = set()
    for q in q_idx:
        lengths.add(len(q))
    for c in c_idx:
        lengths.add(len(c))
    for q in q_idx:
        for c in c_idx:
            lengths.add(len(q) + len(c))
            lengths.add(len(q) + 1 + len(c))
    if max(lengths) * np.log2(max(base, 2)) >= 62:
        raise ValueError("alphabet and word lengths too large for integer word keys")
    tables = {L: _word_table(coded, base, L) for L in sorted(lengths)}
    for L, table in tables.items():
        if table.windows == 0:
            raise ValueError(f"data offers no window of length {L}")

    def freq_one(idx: tuple[int, ...]) -> float:
        table = tables[len(idx)]
        key = np.array([_word_key(idx, base)], dtype=np.int64)
        return float(table.lookup(key)[0]) / table.windows

    f_q = np.array([freq_one(q) for q in q_idx])
    f_c = np.array([freq_one(c) for c in c_idx])

    # keys of q + c and q + (x,) + c decompose over the pieces
    kq = np.array([_word_key(q, base) for q in q_idx], dtype=np.int64)
    kc = np.array([_word_key(c, base) for c in c_idx], dtype=np.int64)
    qlen = np.array([len(q) for q in q_idx], dtype=np.int64)
    shift_c = base ** qlen  # per-column shift applied to the inserted part

    def block(insert: int | None) -> np.ndarray:
        keys = np.empty((len(c_idx), len(q_idx)), dtype=np.int64)
        length = np.empty((len(c_idx), len(q_idx)), dtype=np.int64)
        extra = 0 if insert is None else 1
        for ci, (c, ckey) in enumerate(zip(c_idx, kc)):
            if insert is None:
                keys[ci] = kq + shift_c * ckey
            else:
                keys[ci] = kq + shift_c * insert + shift_c * base * ckey
            length[ci] = qlen + extra + len(c)
        out = np.empty(keys.shape)
        for L in np.unique(length):
            table = tables[int(L)]
            mask = length == L
            out[mask] = table.lookup(keys[mask]) / table.windows
        return out

    f_cq = block(None)
    f_xcq = {s: block(x) for x, s in enumerate(alphabet.symbols)}
    return HankelSet(
        alphabet,
        tuple(tuple(w) for w in q_words),
        tuple(tuple(w) for w in c_words),
        f_q,
        f_c,
        f_cq,
        f_xcq,
    )
