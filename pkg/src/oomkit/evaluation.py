"""Prediction metrics and the learning-curve harness.

Learned operator models are only approximately normalized, so one-step
conditionals are computed defensively: negative weights are clamped to a
small floor, the distribution is renormalized, and a state update whose
normalizer is not positive resets the state to the model's stationary
state.  On an exact model none of the guards fire and the conditionals
match the hidden-chain filter to rounding error.

Two scores summarize test performance.  ``laospe`` is the log (base 2) of
the mean squared one-step prediction error against the true process
conditionals, averaged per trajectory, per step, per symbol; identical
predictions give mean zero, reported as ``-inf``.  ``anll`` is the
average negative log2 likelihood per symbol.  Candidate models predict
from their own initial state; a true hidden Markov model predicts from
its stationary hidden distribution, matching burned-in test data.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import MISSING, MissObsSeq, Oom, stationary_state
from .learner import LearnParams, learn_missing_value_oom, learn_short_trajectory_oom
from .simulate import (
    Hmm,
    child_seed,
    corrupt_amsar,
    gen_ring_hmm,
    hmm_stationary,
    sample_hmm,
    sampled_policy,
)

__all__ = [
    "RobustEvalConfig",
    "RobustPredictor",
    "oom_conditional_robust",
    "laospe",
    "anll",
    "CurvePoint",
    "RingExperimentConfig",
    "learning_curve",
    "write_curve_csv",
    "CSV_HEADER",
]

logger = logging.getLogger(__name__)

CSV_HEADER = ("model", "train_len", "missing_count", "metric", "value", "seed")


@dataclass(frozen=True)
class RobustEvalConfig:
    """Guard rails for conditionals of approximately normalized models."""

    floor: float = 1e-6
    renormalize: bool = True

    def __post_init__(self) -> None:
        if not self.floor > 0:
            raise ValueError("floor must be positive")


class RobustPredictor:
    """Stateful one-step predictor over a model's alphabet.

    Tracks how often the guards fired in ``clamp_count`` and
    ``reset_count``; both stay zero on an exact model.
    """

    def __init__(
        self,
        oom: Oom,
        config: RobustEvalConfig | None = None,
        start: np.ndarray | None = None,
    ):
        self.oom = oom
        self.config = config or RobustEvalConfig()
        n = len(oom.alphabet)
        if not self.config.floor < 1.0 / n:
            raise ValueError(
                f"floor {self.config.floor} must be below 1/{n} for this alphabet"
            )
        self._taus = [oom.tau[s] for s in oom.alphabet]
        self._sig_tau = np.array([oom.sigma @ t for t in self._taus])
        self._start = (
            np.array(oom.omega, dtype=np.float64)
            if start is None
            else np.array(start, dtype=np.float64)
        )
        self._reset_state = self._fallback_state()
        self.clamp_count = 0
        self.reset_count = 0
        self.state = self._start.copy()

    def _fallback_state(self) -> np.ndarray:
        try:
            return stationary_state(self.oom)
        except ValueError:
            total = float(self.oom.sigma @ self.oom.omega)
            if abs(total) > 1e-12:
                return np.array(self.oom.omega) / total
            return np.array(self.oom.omega)

    def reset(self) -> None:
        self.state = self._start.copy()

    def distribution(self) -> np.ndarray:
        """Clamped, renormalized distribution of the next symbol."""
        raw = self._sig_tau @ self.state
        bad = ~np.isfinite(raw)
        if bad.any():
            raw = np.where(bad, 0.0, raw)
        negative = raw < 0
        self.clamp_count += int(negative.sum())
        clamped = np.where(negative, self.config.floor, raw)
        if not self.config.renormalize:
            return clamped
        total = clamped.sum()
        if total <= 0 or not np.isfinite(total):
            return np.full(len(clamped), 1.0 / len(clamped))
        return clamped / total

    def advance(self, symbol: str) -> None:
        x = self.oom.alphabet.index(symbol)
        new = self._taus[x] @ self.state
        weight = float(self.oom.sigma @ new)
        if weight <= 0 or not np.isfinite(weight):
            self.state = self._reset_state.copy()
            self.reset_count += 1
        else:
            self.state = new / weight


def oom_conditional_robust(
    oom: Oom,
    prefix: Sequence[str],
    config: RobustEvalConfig | None = None,
) -> np.ndarray:
    """Robust next-symbol distribution after an observed prefix."""
    predictor = RobustPredictor(oom, config)
    for s in prefix:
        predictor.advance(s)
    return predictor.distribution()


class _HmmFilter:
    """Forward filter over hidden states, used for true-model conditionals."""

    def __init__(self, hmm: Hmm, start: np.ndarray):
        self.hmm = hmm
        self._start = np.array(start, dtype=np.float64)
        self.state = self._start.copy()
        self.reset_count = 0

    def reset(self) -> None:
        self.state = self._start.copy()

    def distribution(self) -> np.ndarray:
        return self.state @ self.hmm.emission

    def advance(self, symbol: str) -> None:
        x = self.hmm.alphabet.index(symbol)
        post = self.state * self.hmm.emission[:, x]
        total = post.sum()
        if total <= 0:
            self.state = self._start.copy()
            self.reset_count += 1
        else:
            self.state = (post / total) @ self.hmm.transition


TrueModel = Union[Oom, Hmm]
TestData = Sequence[Union[MissObsSeq, Sequence[str]]]


def _symbols_of(traj: Union[MissObsSeq, Sequence[str]]) -> Sequence[str]:
    if isinstance(traj, MissObsSeq):
        if any(tok is MISSING for tok in traj.obs):
            raise ValueError("test trajectories must be fully observed")
        return traj.obs
    return traj


def _true_stepper(true_model: TrueModel, config: RobustEvalConfig | None):
    if isinstance(true_model, Hmm):
        return _HmmFilter(true_model, hmm_stationary(true_model))
    return RobustPredictor(true_model, config)


def _check_same_alphabet(a, b) -> None:
    if tuple(a.symbols) != tuple(b.symbols):
        raise ValueError("candidate and true model use different alphabets")


def laospe(
    model: Oom,
    true_model: TrueModel,
    test_data: TestData,
    config: RobustEvalConfig | None = None,
) -> float:
    """Log2 of the averaged squared one-step prediction error.

    Zero total error (e.g. evaluating a model against itself) yields
    ``-inf``.
    """
    _check_same_alphabet(model.alphabet, true_model.alphabet)
    if not test_data:
        raise ValueError("no test data")
    candidate = RobustPredictor(model, config)
    truth = _true_stepper(true_model, config)
    total = 0.0
    for traj in test_data:
        seq = _symbols_of(traj)
        if not len(seq):
            raise ValueError("test trajectories must be nonempty")
        candidate.reset()
        truth.reset()
        acc = 0.0
        for s in seq:
            diff = candidate.distribution() - truth.distribution()
            acc += float(diff @ diff) / len(diff)
            candidate.advance(s)
            truth.advance(s)
        total += acc / len(seq)
    mean = total / len(test_data)
    if mean <= 0.0:
        return float("-inf")
    return float(np.log2(mean))


def anll(
    model: Oom,
    test_data: TestData,
    config: RobustEvalConfig | None = None,
) -> float:
    """Average negative log2 likelihood per symbol under robust conditionals."""
    if not test_data:
        raise ValueError("no test data")
    predictor = RobustPredictor(model, config)
    index = {s: i for i, s in enumerate(model.alphabet.symbols)}
    total = 0.0
    for traj in test_data:
        seq = _symbols_of(traj)
        if not len(seq):
            raise ValueError("test trajectories must be nonempty")
        predictor.reset()
        acc = 0.0
        for s in seq:
            if s not in index:
                raise ValueError(f"test symbol {s!r} is not in the model alphabet")
            p = predictor.distribution()[index[s]]
            with np.errstate(divide="ignore"):
                acc += float(np.log2(p))
            predictor.advance(s)
        total += acc / len(seq)
    return -total / len(test_data)


# ---------------------------------------------------------------------------
# learning curves


@dataclass(frozen=True)
class CurvePoint:
    """One measurement of one model kind at one training length."""

    model_kind: str
    train_len: int
    missing_count: int
    metric_name: str
    metric_value: float
    seed: int


_MODEL_KINDS = ("missing", "short")


@dataclass(frozen=True)
class RingExperimentConfig:
    """Full description of a ring-HMM learning-curve run."""

    n_states: int
    n_obs: int
    n_triggers: int
    miss_prob: float
    train_lengths: tuple[int, ...]
    test_count: int
    test_length: int
    dim: int
    seeds: tuple[int, ...]
    max_obs_per_state: int = 2
    word_length: int = 3
    top_k: int | None = 512
    burn_in: int = 1000
    train_burn_in: int = 0
    model_kinds: tuple[str, ...] = _MODEL_KINDS
    eval_floor: float = 1e-6

    def __post_init__(self) -> None:
        object.__setattr__(self, "train_lengths", tuple(int(x) for x in self.train_lengths))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "model_kinds", tuple(self.model_kinds))
        lengths = self.train_lengths
        if not lengths or any(l < 1 for l in lengths):
            raise ValueError("train_lengths must be positive")
        if list(lengths) != sorted(lengths) or len(set(lengths)) != len(lengths):
            raise ValueError("train_lengths must be strictly ascending")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        unknown = set(self.model_kinds) - set(_MODEL_KINDS)
        if unknown:
            raise ValueError(f"unknown model kinds: {sorted(unknown)}")
        if self.test_count < 1 or self.test_length < 1:
            raise ValueError("test_count and test_length must be positive")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RingExperimentConfig":
        import dataclasses

        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown experiment config keys: {sorted(unknown)}")
        required = {
            f.name
            for f in dataclasses.fields(cls)
            if f.default is dataclasses.MISSING
            and f.default_factory is dataclasses.MISSING
        }
        missing = required - set(mapping)
        if missing:
            raise ValueError(f"experiment config misses keys: {sorted(missing)}")
        kwargs = dict(mapping)
        if "top_k" in kwargs and kwargs["top_k"] in ("all", 0):
            kwargs["top_k"] = None
        return cls(**kwargs)


def _child_seed(seed: int, stream: int) -> int:
    return child_seed(seed, stream)


def learning_curve(config: RingExperimentConfig) -> list[CurvePoint]:
    """Run the full curve: per seed, one nested training trajectory and a
    shared test set; per training length and model kind, one score.

    Training prefixes are nested because the corruption scan is causal:
    corrupting the full trajectory and slicing a prefix equals corrupting
    the prefix.  Failed learns (e.g. the segment baseline on data without
    a single usable run) are logged and skipped.
    """
    points: list[CurvePoint] = []
    learners = {
        "missing": learn_missing_value_oom,
        "short": learn_short_trajectory_oom,
    }
    eval_config = RobustEvalConfig(floor=config.eval_floor)
    for seed in config.seeds:
        hmm = gen_ring_hmm(
            config.n_states, config.n_obs, config.max_obs_per_state, _child_seed(seed, 0)
        )
        policy = sampled_policy(
            hmm.alphabet, config.n_triggers, config.miss_prob, _child_seed(seed, 1)
        )
        train = sample_hmm(
            hmm,
            max(config.train_lengths),
            count=1,
            burn_in=config.train_burn_in,
            seed=_child_seed(seed, 2),
        )[0]
        corrupted = corrupt_amsar(train, policy, _child_seed(seed, 3))
        tests = sample_hmm(
            hmm,
            config.test_length,
            count=config.test_count,
            burn_in=config.burn_in,
            seed=_child_seed(seed, 4),
        )
        params = LearnParams(
            dim=config.dim, word_length=config.word_length, top_k=config.top_k
        )
        for train_len in config.train_lengths:
            prefix = corrupted.prefix(train_len)
            for kind in config.model_kinds:
                try:
                    model = learners[kind]([prefix], params, hmm.alphabet)
                except ValueError as err:
                    logger.warning(
                        "seed %d, %s model at length %d: learn failed (%s); point skipped",
                        seed,
                        kind,
                        train_len,
                        err,
                    )
                    continue
                value = laospe(model, hmm, tests, eval_config)
                points.append(
                    CurvePoint(
                        model_kind=kind,
                        train_len=train_len,
                        missing_count=prefix.missing_count,
                        metric_name="laospe",
                        metric_value=value,
                        seed=seed,
                    )
                )
                logger.info(
                    "seed %d, %s model, n=%d: laospe %.3f",
                    seed,
                    kind,
                    train_len,
                    value,
                )
    return points


def _format_value(value: float) -> str:
    if value == float("-inf"):
        return "-inf"
    return repr(float(value))


def render_curve_csv(points: Sequence[CurvePoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for p in points:
        writer.writerow(
            [
                p.model_kind,
                p.train_len,
                p.missing_count,
                p.metric_name,
                _format_value(p.metric_value),
                p.seed,
            ]
        )
    return buf.getvalue()


def write_curve_csv(points: Sequence[CurvePoint], path) -> None:
    """Write curve points as CSV (atomically)."""
    from .formats import atomic_write_text

    atomic_write_text(path, render_curve_csv(points))
