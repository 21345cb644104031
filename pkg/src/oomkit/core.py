"""Model types and exact algebra for observable operator models.

An observable operator model (OOM) assigns a probability to every finite
symbol word through a bilinear form: a row functional, one square operator
per symbol, and an initial state column.  The weight of a word is obtained
by applying the operator of the *earliest* symbol first,

    weight(x1 ... xn) = sigma . tau[xn] ... tau[x1] . omega,

so the state is pushed forward through time and the functional is applied
last.  Every evaluation in this package goes through :func:`_propagate`,
which fixes that order once.

Two model flavours live here.  :class:`Oom` models an ordinary process over
an alphabet.  :class:`IoOom` models the joint missingness/observation
process over pairs ``(bit, token)`` where bit 1 marks a missing position;
it is what the spectral learner produces before reduction.  The wildcard
token :data:`MISSING` is a dedicated sentinel type and can never be a
member of an :class:`Alphabet`.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

__all__ = [
    "MISSING",
    "MissingToken",
    "ObsToken",
    "Alphabet",
    "MissObsSeq",
    "Oom",
    "IoOom",
    "external_fn",
    "wildcard_prob",
    "stationary_state",
    "similarity_transform",
    "augment_to_ioom",
    "reduce_to_oom",
    "is_missing",
    "check_symbol",
]

# Eigenvalue selection window for stationary states; learned models only
# perturb the exact unit eigenvalue, so the window can be tight.
STATIONARY_EIG_TOL = 1e-6

# Reject similarity maps whose reciprocal condition number is below this.
RCOND_LIMIT = 1e-12


class MissingToken(enum.Enum):
    """Singleton type for the wildcard token.

    Using a dedicated enum (rather than a reserved string) makes collisions
    with alphabet symbols impossible by construction.
    """

    MISSING = "_"

    def __repr__(self) -> str:  # keeps sequences readable in test output
        return "MISSING"


MISSING = MissingToken.MISSING

ObsToken = Union[str, MissingToken]


def is_missing(token: ObsToken) -> bool:
    return token is MISSING


def check_symbol(symbol: str) -> str:
    """Validate a single alphabet symbol for use in text trajectory files."""
    if not isinstance(symbol, str) or not symbol:
        raise ValueError(f"alphabet symbol must be a nonempty string, got {symbol!r}")
    if any(c.isspace() for c in symbol):
        raise ValueError(f"alphabet symbol {symbol!r} contains whitespace")
    if symbol == "_":
        raise ValueError("'_' is reserved for the missing token and cannot be a symbol")
    if symbol.startswith("#"):
        raise ValueError(f"alphabet symbol {symbol!r} would collide with comment lines")
    return symbol


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite set of observation symbols.

    The order is significant: operator dictionaries, Hankel blocks and
    serialized models all follow it.
    """

    symbols: tuple[str, ...]

    def __init__(self, symbols: Iterable[str]):
        syms = tuple(check_symbol(s) for s in symbols)
        if not syms:
            raise ValueError("alphabet must contain at least one symbol")
        if len(set(syms)) != len(syms):
            raise ValueError("alphabet symbols must be distinct")
        object.__setattr__(self, "symbols", syms)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(syms)})

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise ValueError(f"unknown symbol {symbol!r}") from None

    def __contains__(self, symbol: object) -> bool:
        return symbol in self._index

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[str]:
        return iter(self.symbols)

    def words(self, length: int) -> Iterator[tuple[str, ...]]:
        """All words of the given length, in lexicographic (index) order."""
        return itertools.product(self.symbols, repeat=length)


@dataclass(frozen=True)
class MissObsSeq:
    """A trajectory of tokens paired with its missingness pattern.

    Invariant: ``miss[t] == 1`` exactly when ``obs[t] is MISSING``.  The
    pair is redundant but keeps the missingness word available where the
    estimator needs it.
    """

    miss: tuple[int, ...]
    obs: tuple[ObsToken, ...]

    def __post_init__(self) -> None:
        if len(self.miss) != len(self.obs):
            raise ValueError(
                f"missingness and token sequences differ in length "
                f"({len(self.miss)} vs {len(self.obs)})"
            )
        for t, (m, o) in enumerate(zip(self.miss, self.obs)):
            if m not in (0, 1):
                raise ValueError(f"missingness bit at position {t} is {m!r}, want 0 or 1")
            if (m == 1) != (o is MISSING):
                raise ValueError(
                    f"position {t}: missingness bit {m} does not match token {o!r}"
                )

    @classmethod
    def from_tokens(cls, tokens: Iterable[ObsToken]) -> "MissObsSeq":
        obs = tuple(tokens)
        miss = tuple(1 if o is MISSING else 0 for o in obs)
        return cls(miss, obs)

    @classmethod
    def from_symbols(cls, symbols: Iterable[str]) -> "MissObsSeq":
        """Build a fully observed trajectory."""
        obs = tuple(symbols)
        return cls((0,) * len(obs), obs)

    def __len__(self) -> int:
        return len(self.obs)

    def __iter__(self) -> Iterator[ObsToken]:
        return iter(self.obs)

    @property
    def missing_count(self) -> int:
        return sum(self.miss)

    def prefix(self, n: int) -> "MissObsSeq":
        return MissObsSeq(self.miss[:n], self.obs[:n])


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Oom:
    """Observable operator model of a process over an alphabet.

    Attributes
    ----------
    alphabet:
        Symbol set; one operator per symbol.
    sigma:
        Row functional, shape ``(dim,)``.
    tau:
        Mapping symbol -> operator matrix of shape ``(dim, dim)``.
    omega:
        Initial state column, shape ``(dim,)``.
    """

    alphabet: Alphabet
    sigma: np.ndarray
    tau: dict[str, np.ndarray]
    omega: np.ndarray

    def __post_init__(self) -> None:
        sigma = _freeze(self.sigma)
        omega = _freeze(self.omega)
        if sigma.ndim != 1 or omega.ndim != 1:
            raise ValueError("sigma and omega must be one-dimensional")
        d = sigma.shape[0]
        if omega.shape[0] != d:
            raise ValueError(f"sigma has length {d} but omega has length {omega.shape[0]}")
        extra = set(self.tau) - set(self.alphabet.symbols)
        if extra:
            raise ValueError(f"operators for symbols outside the alphabet: {sorted(extra)}")
        tau = {}
        for s in self.alphabet:
            if s not in self.tau:
                raise ValueError(f"no operator for symbol {s!r}")
            m = _freeze(self.tau[s])
            if m.shape != (d, d):
                raise ValueError(f"operator for {s!r} has shape {m.shape}, want {(d, d)}")
            tau[s] = m
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "tau", tau)

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]

    def operator_sum(self) -> np.ndarray:
        """Sum of all symbol operators."""
        return sum(self.tau.values())


IoKey = tuple[int, ObsToken]


def _io_keys(alphabet: Alphabet) -> list[IoKey]:
    keys: list[IoKey] = [(0, s) for s in alphabet]
    keys.append((0, MISSING))
    keys.append((1, MISSING))
    keys.extend((1, s) for s in alphabet)
    return keys


@dataclass(frozen=True)
class IoOom:
    """Operator model over (missingness bit, token) pairs.

    Operators exist for exactly the pairs ``(0, x)``, ``(0, MISSING)``,
    ``(1, MISSING)`` and ``(1, x)`` for alphabet symbols ``x``.
    """

    alphabet: Alphabet
    sigma: np.ndarray
    tau: dict[IoKey, np.ndarray]
    omega: np.ndarray

    def __post_init__(self) -> None:
        sigma = _freeze(self.sigma)
        omega = _freeze(self.omega)
        if sigma.ndim != 1 or omega.ndim != 1 or sigma.shape != omega.shape:
            raise ValueError("sigma and omega must be one-dimensional and equally long")
        d = sigma.shape[0]
        want = set(_io_keys(self.alphabet))
        have = set(self.tau)
        if have != want:
            raise ValueError(
                f"operator keys mismatch: missing {sorted(map(str, want - have))}, "
                f"unexpected {sorted(map(str, have - want))}"
            )
        tau = {}
        for k, m in self.tau.items():
            m = _freeze(m)
            if m.shape != (d, d):
                raise ValueError(f"operator for {k!r} has shape {m.shape}, want {(d, d)}")
            tau[k] = m
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "tau", tau)

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]


Model = Union[Oom, IoOom]


def _propagate(state: np.ndarray, operators: Iterable[np.ndarray]) -> np.ndarray:
    """Push a state column through operators in temporal order.

    The first operator in the iterable belongs to the earliest element of
    the word.  Every word evaluation in the package funnels through here so
    the application order cannot silently diverge between call sites.
    """
    for op in operators:
        state = op @ state
    return state


def _operators_for_word(model: Model, word: Sequence) -> list[np.ndarray]:
    ops = []
    if isinstance(model, Oom):
        for x in word:
            if x not in model.tau:
                raise ValueError(f"unknown symbol {x!r}")
            ops.append(model.tau[x])
    else:
        for pair in word:
            try:
                bit, token = pair
            except (TypeError, ValueError):
                raise ValueError(
                    f"element {pair!r} is not a (bit, token) pair"
                ) from None
            key = (int(bit), token)
            if key not in model.tau:
                raise ValueError(f"unknown pair {key!r}")
            ops.append(model.tau[key])
    return ops


def external_fn(model: Model, word: Sequence) -> float:
    """Weight the model assigns to a word.

    For an :class:`Oom` the word is a sequence of symbols; for an
    :class:`IoOom` a sequence of ``(bit, token)`` pairs.  The empty word
    evaluates to ``sigma . omega``.
    """
    state = _propagate(model.omega, _operators_for_word(model, word))
    return float(model.sigma @ state)


def wildcard_prob(
    oom: Oom,
    query: Union[MissObsSeq, Sequence[ObsToken]],
    start: np.ndarray | None = None,
) -> float:
    """Probability of a token word with wildcard positions summed out.

    Concrete positions apply the symbol operator; missing positions apply
    the sum of all symbol operators, which marginalizes the symbol at that
    position.  Equivalent to evaluating the augmented pair model on the
    corresponding (bit, token) word.

    Parameters
    ----------
    oom:
        Model to evaluate.
    query:
        Token sequence; entries are symbols or :data:`MISSING`.
    start:
        Optional replacement initial state (e.g. a stationary state).
    """
    tau_sum = oom.operator_sum()
    ops = []
    for tok in query:
        if tok is MISSING:
            ops.append(tau_sum)
        else:
            if tok not in oom.tau:
                raise ValueError(f"unknown symbol {tok!r}")
            ops.append(oom.tau[tok])
    state = oom.omega if start is None else np.asarray(start, dtype=np.float64)
    return float(oom.sigma @ _propagate(state, ops))


def stationary_state(oom: Oom) -> np.ndarray:
    """Fixed state of the summed operator, scaled to unit total weight.

    Returns the eigenvector of ``sum_x tau[x]`` for the eigenvalue nearest
    one, scaled so that ``sigma . w == 1``.  Raises if no eigenvalue lies
    within :data:`STATIONARY_EIG_TOL` of one or if the scaling weight
    vanishes.
    """
    tau_sum = oom.operator_sum()
    values, vectors = np.linalg.eig(tau_sum)
    close = np.abs(values - 1.0) <= STATIONARY_EIG_TOL
    if not close.any():
        nearest = values[np.argmin(np.abs(values - 1.0))]
        raise ValueError(
            f"no eigenvalue within {STATIONARY_EIG_TOL} of 1 (nearest is {nearest:.6g})"
        )
    candidates = np.flatnonzero(close)
    pick = candidates[np.argmax(values[candidates].real)]
    vec = vectors[:, pick]
    scale = np.asarray(oom.sigma, dtype=complex) @ vec
    if abs(scale) < 1e-12:
        raise ValueError("stationary eigenvector has zero weight under sigma")
    w = vec / scale
    if np.max(np.abs(w.imag)) > 1e-9:
        raise ValueError("stationary eigenvector is not real")
    out = np.ascontiguousarray(w.real)
    return out


def _apply_similarity(
    sigma: np.ndarray, omega: np.ndarray, mats: dict, rho: np.ndarray
) -> tuple[np.ndarray, np.ndarray, dict]:
    rho = np.asarray(rho, dtype=np.float64)
    d = sigma.shape[0]
    if rho.shape != (d, d):
        raise ValueError(f"similarity map has shape {rho.shape}, want {(d, d)}")
    svals = np.linalg.svd(rho, compute_uv=False)
    if svals[0] == 0 or svals[-1] / svals[0] < RCOND_LIMIT:
        raise ValueError("similarity map is singular or too ill-conditioned")
    rho_inv = np.linalg.inv(rho)
    new_sigma = sigma @ rho_inv
    new_omega = rho @ omega
    new_mats = {k: rho @ m @ rho_inv for k, m in mats.items()}
    return new_sigma, new_omega, new_mats


def similarity_transform(model: Model, rho: np.ndarray) -> Model:
    """Conjugate a model by an invertible map, preserving all word weights.

    The transformed model is ``(sigma rho^-1, {rho tau rho^-1}, rho omega)``.
    Maps with reciprocal condition number below :data:`RCOND_LIMIT` are
    rejected.
    """
    sigma, omega, mats = _apply_similarity(model.sigma, model.omega, model.tau, rho)
    if isinstance(model, Oom):
        return Oom(model.alphabet, sigma, mats, omega)
    return IoOom(model.alphabet, sigma, mats, omega)


def augment_to_ioom(oom: Oom) -> IoOom:
    """Lift a process model to the paired missingness/observation alphabet.

    Observed pairs ``(0, x)`` keep the symbol operator, the missing pair
    ``(1, MISSING)`` gets the summed operator, and the two inconsistent
    pair shapes get zero operators.  The lifted model reproduces
    :func:`wildcard_prob` values exactly.
    """
    d = oom.dim
    zero = np.zeros((d, d))
    tau: dict[IoKey, np.ndarray] = {}
    for s in oom.alphabet:
        tau[(0, s)] = oom.tau[s]
        tau[(1, s)] = zero
    tau[(0, MISSING)] = zero
    tau[(1, MISSING)] = oom.operator_sum()
    return IoOom(oom.alphabet, oom.sigma, tau, oom.omega)


def reduce_to_oom(ioom: IoOom) -> Oom:
    """Keep the observed-pair operators, dropping the missingness layer."""
    tau = {s: ioom.tau[(0, s)] for s in ioom.alphabet}
    return Oom(ioom.alphabet, ioom.sigma, tau, ioom.omega)
