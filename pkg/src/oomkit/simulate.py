"""Synthetic data: ring HMMs, ancestral sampling and trigger corruption.

Ground truth for the experiments is a hidden Markov chain on a ring: each
state only reaches itself and its two neighbours.  Trajectories are drawn
by ancestral sampling with an optional burn-in so that retained data is
close to stationary.  Corruption follows a trigger rule: a position is
knocked out with some probability whenever the *previous* position is
observed and shows a trigger symbol.  A position that is itself missing
never triggers, so knockouts cannot chain.

All randomness flows through :func:`spawn_rng`, a PCG64 generator keyed by
an explicit 64-bit seed plus a stream tuple; repeated calls with the same
arguments reproduce the same draws (given a fixed numpy version).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import MISSING, Alphabet, MissObsSeq, Oom

__all__ = [
    "Hmm",
    "AmsarTriggerPolicy",
    "spawn_rng",
    "child_seed",
    "gen_ring_hmm",
    "sample_hmm",
    "forward_prob",
    "hmm_conditional",
    "hmm_stationary",
    "hmm_to_oom",
    "corrupt_amsar",
    "sampled_policy",
    "mild_policy",
    "severe_policy",
]

_ROW_SUM_TOL = 1e-12


def spawn_rng(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic PCG64 generator for a seed and stream key."""
    if not isinstance(seed, (int, np.integer)):
        raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(seed: int, *stream: int) -> int:
    """Derive an independent integer seed for a sub-purpose of a run.

    Distinct stream keys give statistically independent children, so a
    single user-facing seed can drive several separate random choices.
    """
    if not isinstance(seed, (int, np.integer)):
        raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return int(ss.generate_state(1)[0])


def _check_rows(name: str, rows: np.ndarray) -> None:
    if (rows < 0).any():
        raise ValueError(f"{name} has negative entries")
    sums = rows.sum(axis=-1)
    if np.max(np.abs(sums - 1.0)) > _ROW_SUM_TOL:
        raise ValueError(f"{name} rows must sum to 1 (max deviation {np.max(np.abs(sums - 1.0)):.3g})")


@dataclass(frozen=True, eq=False)
class Hmm:
    """Hidden Markov model with row-stochastic transition and emission."""

    alphabet: Alphabet
    transition: np.ndarray
    emission: np.ndarray
    initial: np.ndarray

    def __post_init__(self) -> None:
        t = np.array(self.transition, dtype=np.float64)
        e = np.array(self.emission, dtype=np.float64)
        p = np.array(self.initial, dtype=np.float64)
        n = t.shape[0]
        if t.shape != (n, n):
            raise ValueError(f"transition must be square, got {t.shape}")
        if e.shape != (n, len(self.alphabet)):
            raise ValueError(
                f"emission shape {e.shape} does not match {n} states x {len(self.alphabet)} symbols"
            )
        if p.shape != (n,):
            raise ValueError(f"initial distribution has shape {p.shape}, want ({n},)")
        _check_rows("transition", t)
        _check_rows("emission", e)
        _check_rows("initial", p[None, :])
        for a in (t, e, p):
            a.flags.writeable = False
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "emission", e)
        object.__setattr__(self, "initial", p)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]


def _default_symbols(n: int) -> list[str]:
    if n <= 26:
        return [chr(ord("a") + i) for i in range(n)]
    return [f"s{i}" for i in range(n)]


def _positive_weights(rng: np.random.Generator, n: int) -> np.ndarray:
    # all-zero draws have probability zero but would break normalization
    while True:
        w = rng.random(n)
        if w.sum() > 0:
            return w / w.sum()


def gen_ring_hmm(n_states: int, n_obs: int, max_obs_per_state: int, seed: int) -> Hmm:
    """Random HMM on a ring topology.

    Each transition row is supported on the state itself and its two ring
    neighbours; each emission row is supported on at most
    ``max_obs_per_state`` randomly chosen symbols.  Nonzero entries are
    uniform draws, row-normalized.  The initial distribution has full
    support.
    """
    if n_states < 1 or n_obs < 1 or max_obs_per_state < 1:
        raise ValueError("n_states, n_obs and max_obs_per_state must be positive")
    rng = spawn_rng(seed)
    transition = np.zeros((n_states, n_states))
    for i in range(n_states):
        cols = sorted({(i - 1) % n_states, i, (i + 1) % n_states})
        transition[i, cols] = _positive_weights(rng, len(cols))
    emission = np.zeros((n_states, n_obs))
    for i in range(n_states):
        while True:
            syms = rng.choice(n_obs, size=min(max_obs_per_state, n_obs), replace=False)
            w = rng.random(len(syms))
            if w.sum() > 0:
                break
        emission[i, syms] = w / w.sum()
    initial = _positive_weights(rng, n_states)
    return Hmm(Alphabet(_default_symbols(n_obs)), transition, emission, initial)


def _sample_path(hmm: Hmm, steps: int, rng: np.random.Generator) -> np.ndarray:
    # cumulative rows as plain lists; the tight loop dominates sampling cost
    t_rows = [row.tolist() for row in np.cumsum(hmm.transition, axis=1)]
    e_rows = [row.tolist() for row in np.cumsum(hmm.emission, axis=1)]
    p_row = np.cumsum(hmm.initial).tolist()
    u_state = rng.random(steps)
    u_emit = rng.random(steps)
    out = np.empty(steps, dtype=np.int64)

    def pick(row: list, u: float) -> int:
        i = 0
        last = len(row) - 1
        while i < last and row[i] <= u:
            i += 1
        return i

    state = pick(p_row, u_state[0])
    for t in range(steps):
        if t > 0:
            state = pick(t_rows[state], u_state[t])
        out[t] = pick(e_rows[state], u_emit[t])
    return out


def sample_hmm(
    hmm: Hmm, length: int, count: int = 1, burn_in: int = 1000, seed: int = 0
) -> list[MissObsSeq]:
    """Ancestral samples from an HMM, burn-in discarded.

    Each trajectory uses its own generator stream derived from the seed,
    so the result is independent of sampling order and reproducible
    per-trajectory.
    """
    if length < 1 or count < 1 or burn_in < 0:
        raise ValueError("length and count must be positive, burn_in nonnegative")
    syms = hmm.alphabet.symbols
    out = []
    for j in range(count):
        path = _sample_path(hmm, length + burn_in, spawn_rng(seed, j))
        out.append(MissObsSeq.from_symbols(syms[o] for o in path[burn_in:]))
    return out


def forward_prob(hmm: Hmm, word: Sequence[str]) -> float:
    """Exact probability of a symbol word under the HMM (forward pass)."""
    alpha = hmm.initial.copy()
    first = True
    for s in word:
        x = hmm.alphabet.index(s)
        if not first:
            alpha = alpha @ hmm.transition
        alpha = alpha * hmm.emission[:, x]
        first = False
    return float(alpha.sum())


def hmm_stationary(hmm: Hmm) -> np.ndarray:
    """Stationary distribution of the hidden chain."""
    values, vectors = np.linalg.eig(hmm.transition.T)
    i = int(np.argmin(np.abs(values - 1.0)))
    if abs(values[i] - 1.0) > 1e-6:
        raise ValueError("transition matrix has no eigenvalue near 1")
    v = vectors[:, i].real
    s = v.sum()
    if abs(s) < 1e-12:
        raise ValueError("degenerate stationary eigenvector")
    v = v / s
    if (v < -1e-9).any():
        raise ValueError("stationary eigenvector is not a distribution")
    return np.clip(v, 0.0, None)


def hmm_conditional(
    hmm: Hmm, prefix: Sequence[str], state_dist: np.ndarray | None = None
) -> np.ndarray:
    """Next-symbol distribution given an observed prefix.

    ``state_dist`` is the distribution of the state about to emit the
    first symbol; it defaults to the HMM's initial distribution.  Raises
    if the prefix has probability zero.
    """
    d = hmm.initial if state_dist is None else np.asarray(state_dist, dtype=np.float64)
    for s in prefix:
        x = hmm.alphabet.index(s)
        post = d * hmm.emission[:, x]
        total = post.sum()
        if total <= 0:
            raise ValueError(f"prefix has probability zero at symbol {s!r}")
        d = (post / total) @ hmm.transition
    return d @ hmm.emission


def hmm_to_oom(hmm: Hmm) -> Oom:
    """Exact operator model of the HMM's observation process.

    The state space is the hidden-state simplex: the operator of symbol x
    scales by the emission probability of x and pushes through the
    transition.  Word weights match :func:`forward_prob` exactly.
    """
    t_T = hmm.transition.T
    tau = {
        s: t_T * hmm.emission[:, x][None, :]
        for x, s in enumerate(hmm.alphabet.symbols)
    }
    sigma = np.ones(hmm.n_states)
    return Oom(hmm.alphabet, sigma, tau, hmm.initial.copy())


@dataclass(frozen=True)
class AmsarTriggerPolicy:
    """Knockout rule: after an observed trigger symbol, drop the next
    position with probability ``miss_prob``."""

    triggers: frozenset[str]
    miss_prob: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "triggers", frozenset(self.triggers))
        if not 0.0 <= self.miss_prob <= 1.0:
            raise ValueError(f"miss_prob must lie in [0, 1], got {self.miss_prob}")


def corrupt_amsar(
    traj: Sequence[str], policy: AmsarTriggerPolicy, seed: int
) -> MissObsSeq:
    """Apply trigger knockouts to a fully observed trajectory.

    The scan is causal: eligibility of position t depends on the already
    corrupted position t-1, so a missing position never triggers and the
    first position is never dropped.  Underlying values at dropped
    positions are discarded.
    """
    symbols = list(traj)
    n = len(symbols)
    rng = spawn_rng(seed)
    u = rng.random(n) if n else np.empty(0)
    obs: list = []
    prev_triggers = False
    for t, s in enumerate(symbols):
        if s is MISSING:
            raise ValueError("corruption input must be fully observed")
        drop = t > 0 and prev_triggers and u[t] < policy.miss_prob
        if drop:
            obs.append(MISSING)
            prev_triggers = False
        else:
            obs.append(s)
            prev_triggers = s in policy.triggers
    return MissObsSeq.from_tokens(obs)


def sampled_policy(
    alphabet: Alphabet, n_triggers: int, miss_prob: float, seed: int
) -> AmsarTriggerPolicy:
    """Trigger policy with uniformly drawn distinct trigger symbols."""
    if len(alphabet) < n_triggers:
        raise ValueError(
            f"alphabet has {len(alphabet)} symbols, cannot draw {n_triggers} triggers"
        )
    rng = spawn_rng(seed)
    idx = rng.choice(len(alphabet), size=n_triggers, replace=False)
    return AmsarTriggerPolicy(frozenset(alphabet.symbols[i] for i in idx), miss_prob)


def mild_policy(alphabet: Alphabet, seed: int) -> AmsarTriggerPolicy:
    """Five uniformly drawn trigger symbols, knockout probability 0.3."""
    return sampled_policy(alphabet, 5, 0.3, seed)


def severe_policy(alphabet: Alphabet, seed: int) -> AmsarTriggerPolicy:
    """Ten uniformly drawn trigger symbols, knockout probability 0.5."""
    return sampled_policy(alphabet, 10, 0.5, seed)
