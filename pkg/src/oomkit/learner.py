"""Spectral recovery of operator models from estimated Hankel blocks.

The learner turns pooled window frequencies into an operator model in
three moves: rank-truncated SVD of the main Hankel block, a pseudo-inverse
of the projected block, and one matrix product per symbol.  With exact
(noise-free) block values the result is similar to the generating model
started from its stationary state, so all stationary word probabilities
are reproduced; with estimated blocks the error follows the estimates.

Two front ends share the pipeline.  ``learn_missing_value_oom`` counts
windows on the corrupted trajectories directly, exploiting that missing
positions simply never match a concrete query.  The baseline
``learn_short_trajectory_oom`` instead cuts the data into maximal fully
observed runs and discards runs too short to be useful, which is how one
would proceed without a wildcard-aware estimator.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import MISSING, Alphabet, IoOom, MissObsSeq, Oom, reduce_to_oom
from .estimator import HankelSet, assemble_hankel, select_words

__all__ = [
    "LearnParams",
    "SvdTriple",
    "LearnReport",
    "RankDeficiencyWarning",
    "truncated_svd",
    "pseudo_inverse",
    "spectral_learn",
    "segment_missing_free",
    "learn_missing_value_oom",
    "learn_short_trajectory_oom",
    "format_report",
]

logger = logging.getLogger(__name__)

PINV_RTOL = 1e-10


class RankDeficiencyWarning(UserWarning):
    """Estimated Hankel block looks rank-deficient at the requested dimension."""


@dataclass(frozen=True)
class LearnParams:
    """Knobs of the spectral learner.

    ``dim`` is the target model dimension, ``word_length`` the length of
    the row and column words, ``top_k`` how many of the most frequent
    words to keep (``None`` keeps every word of that length).
    """

    dim: int
    word_length: int = 3
    top_k: int | None = 512

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.word_length < 1:
            raise ValueError("word_length must be positive")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be positive or None")


@dataclass(frozen=True, eq=False)
class SvdTriple:
    """Rank-truncated SVD factors: ``matrix ~ u @ diag(s) @ v.T``."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


@dataclass
class LearnReport:
    """Diagnostics collected during a learner run."""

    n_trajectories: int = 0
    n_segments_used: int | None = None
    n_q_words: int = 0
    n_c_words: int = 0
    window_counts: dict[int, int] = field(default_factory=dict)
    singular_values: np.ndarray | None = None
    numerical_rank: int | None = None
    notes: list[str] = field(default_factory=list)


def truncated_svd(matrix: np.ndarray, k: int) -> SvdTriple:
    """Top-k singular triples of a matrix.

    Columns of ``u`` and ``v`` are orthonormal and the singular values are
    nonnegative and descending.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    if not 1 <= k <= min(m.shape):
        raise ValueError(f"k={k} out of range for shape {m.shape}")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return SvdTriple(u[:, :k], s[:k], vt[:k].T)


def pseudo_inverse(matrix: np.ndarray, rtol: float = PINV_RTOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with a relative singular value cutoff.

    Singular values at or below ``rtol`` times the largest are treated as
    zero, which keeps the inverse bounded on rank-deficient input.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[1], m.shape[0]))
    inv = np.where(s > rtol * s[0], np.divide(1.0, s, where=s > 0), 0.0)
    return (vt.T * inv) @ u.T


def spectral_learn(
    hankel: HankelSet, dim: int, report: LearnReport | None = None
) -> IoOom:
    """Recover a pair model from Hankel blocks at the given dimension.

    Only the observed-pair operators carry information; the missing-pair
    operator is their sum and the two inconsistent pair shapes get zero
    operators.  A numerically rank-deficient main block triggers
    :class:`RankDeficiencyWarning` but learning proceeds.
    """
    n_c, n_q = hankel.f_cq.shape
    if not 1 <= dim <= min(n_c, n_q):
        raise ValueError(f"dim={dim} out of range for a {n_c} x {n_q} Hankel block")
    svd = truncated_svd(hankel.f_cq, dim)
    if svd.s[0] == 0.0 or svd.s[-1] <= PINV_RTOL * svd.s[0]:
        rank = int(np.sum(svd.s > PINV_RTOL * (svd.s[0] or 1.0)))
        warnings.warn(
            f"Hankel block has numerical rank {rank} < {dim}; "
            "the model dimension is likely too large for this data",
            RankDeficiencyWarning,
            stacklevel=2,
        )
        if report is not None:
            report.notes.append(f"rank deficiency: numerical rank {rank} < dim {dim}")
    projected = svd.u.T @ hankel.f_cq
    pinv = pseudo_inverse(projected)
    sigma = hankel.f_q @ pinv
    omega = svd.u.T @ hankel.f_c
    alphabet = hankel.alphabet
    d = dim
    zero = np.zeros((d, d))
    observed = {s: svd.u.T @ hankel.f_xcq[s] @ pinv for s in alphabet}
    tau = {}
    for s in alphabet:
        tau[(0, s)] = observed[s]
        tau[(1, s)] = zero
    tau[(0, MISSING)] = zero
    tau[(1, MISSING)] = sum(observed.values())
    if report is not None:
        report.singular_values = svd.s.copy()
        report.numerical_rank = int(np.sum(svd.s > PINV_RTOL * (svd.s[0] or 1.0)))
    return IoOom(alphabet, sigma, tau, omega)


def segment_missing_free(data: Sequence[MissObsSeq]) -> list[MissObsSeq]:
    """Maximal fully observed runs of each trajectory, in order."""
    segments = []
    for traj in data:
        run: list = []
        for tok in traj.obs:
            if tok is MISSING:
                if run:
                    segments.append(MissObsSeq.from_symbols(run))
                    run = []
            else:
                run.append(tok)
        if run:
            segments.append(MissObsSeq.from_symbols(run))
    return segments


def _infer_alphabet(data: Sequence[MissObsSeq]) -> Alphabet:
    symbols = set()
    for traj in data:
        for tok in traj.obs:
            if tok is not MISSING:
                symbols.add(tok)
    if not symbols:
        raise ValueError("data contains no observed symbols")
    return Alphabet(sorted(symbols))


def _pipeline(
    effective: Sequence[MissObsSeq],
    params: LearnParams,
    alphabet: Alphabet,
    report: LearnReport | None,
) -> Oom:
    words = select_words(effective, params.word_length, alphabet, params.top_k)
    if len(words) < params.dim:
        raise ValueError(
            f"only {len(words)} candidate words of length {params.word_length}, "
            f"need at least dim={params.dim}"
        )
    hankel = assemble_hankel(effective, words, words, alphabet)
    if report is not None:
        report.n_q_words = len(words)
        report.n_c_words = len(words)
        for length in sorted(
            {params.word_length, 2 * params.word_length, 2 * params.word_length + 1}
        ):
            report.window_counts[length] = sum(
                max(len(t) - length + 1, 0) for t in effective
            )
    ioom = spectral_learn(hankel, params.dim, report)
    return reduce_to_oom(ioom)


def learn_missing_value_oom(
    data: Sequence[MissObsSeq],
    params: LearnParams,
    alphabet: Alphabet | None = None,
    report: LearnReport | None = None,
) -> Oom:
    """Learn a process model from corrupted trajectories directly.

    Window counting treats missing positions as unmatchable, so corrupted
    trajectories contribute every window they still determine.  The
    alphabet defaults to the sorted set of observed symbols.
    """
    if not data:
        raise ValueError("no training data")
    if alphabet is None:
        alphabet = _infer_alphabet(data)
    if report is not None:
        report.n_trajectories = len(data)
    return _pipeline(list(data), params, alphabet, report)


def learn_short_trajectory_oom(
    data: Sequence[MissObsSeq],
    params: LearnParams,
    alphabet: Alphabet | None = None,
    report: LearnReport | None = None,
) -> Oom:
    """Baseline learner that only uses fully observed runs.

    Trajectories are segmented at missing positions; runs shorter than
    ``2 * word_length + 1`` (too short for the longest Hankel query) are
    dropped.  On data without missing values this coincides exactly with
    :func:`learn_missing_value_oom`.
    """
    if not data:
        raise ValueError("no training data")
    if alphabet is None:
        alphabet = _infer_alphabet(data)
    min_len = 2 * params.word_length + 1
    segments = [s for s in segment_missing_free(data) if len(s) >= min_len]
    if not segments:
        raise ValueError(
            f"no fully observed run of length >= {min_len}; "
            "the data is too fragmented for the segment baseline"
        )
    if report is not None:
        report.n_trajectories = len(data)
        report.n_segments_used = len(segments)
    return _pipeline(segments, params, alphabet, report)


def format_report(report: LearnReport) -> str:
    """Render learner diagnostics as a small text report."""
    lines = [f"trajectories: {report.n_trajectories}"]
    if report.n_segments_used is not None:
        lines.append(f"segments used: {report.n_segments_used}")
    lines.append(f"row/column words: {report.n_q_words} x {report.n_c_words}")
    for length in sorted(report.window_counts):
        lines.append(f"windows of length {length}: {report.window_counts[length]}")
    if report.singular_values is not None:
        vals = ", ".join(f"{v:.3e}" for v in report.singular_values)
        lines.append(f"singular values: {vals}")
    if report.numerical_rank is not None:
        lines.append(f"numerical rank: {report.numerical_rank}")
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"
