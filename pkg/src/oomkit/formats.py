"""File formats: trajectory text, model JSON, HMM JSON.

Trajectory files hold one trajectory per line as space-separated tokens,
with ``_`` marking a missing value; lines starting with ``#`` and blank
lines are ignored.  Models and HMMs are stored as JSON with row-major
nested lists, which round-trips float64 exactly.  All writers go through
:func:`atomic_write_text` (write to a temporary file, then rename) so a
crash cannot leave a half-written file behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .core import MISSING, Alphabet, IoOom, MissObsSeq, ObsToken, Oom, check_symbol
from .simulate import Hmm

__all__ = [
    "atomic_write_text",
    "token_to_text",
    "text_to_token",
    "read_trajectories",
    "write_trajectories",
    "save_model",
    "load_model",
    "model_to_dict",
    "model_from_dict",
    "save_hmm",
    "load_hmm",
]

MISSING_TEXT = "_"


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    """Write text to a file via a same-directory temporary and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(
        prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or "."
    )
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def token_to_text(token: ObsToken) -> str:
    return MISSING_TEXT if token is MISSING else token


def text_to_token(text: str) -> ObsToken:
    return MISSING if text == MISSING_TEXT else text


def write_trajectories(path: Union[str, Path], trajectories: Iterable[MissObsSeq]) -> None:
    lines = []
    for traj in trajectories:
        lines.append(" ".join(token_to_text(tok) for tok in traj.obs))
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def read_trajectories(path: Union[str, Path]) -> list[MissObsSeq]:
    """Parse a trajectory file; malformed lines raise with their line number."""
    out = []
    with open(path) as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                tokens = [
                    MISSING if t == MISSING_TEXT else check_symbol(t)
                    for t in stripped.split()
                ]
            except ValueError as err:
                raise ValueError(f"{path}:{lineno}: {err}") from None
            out.append(MissObsSeq.from_tokens(tokens))
    return out


# ---------------------------------------------------------------------------
# model JSON


def _io_key_to_text(key) -> str:
    bit, token = key
    return f"{bit}:{token_to_text(token)}"


def _io_key_from_text(text: str):
    bit_text, _, token_text = text.partition(":")
    if bit_text not in ("0", "1") or not token_text:
        raise ValueError(f"malformed operator key {text!r}")
    return int(bit_text), text_to_token(token_text)


def model_to_dict(model: Union[Oom, IoOom]) -> dict:
    if isinstance(model, Oom):
        kind = "oom"
        tau = {s: model.tau[s].tolist() for s in model.alphabet}
    else:
        kind = "ioom"
        tau = {_io_key_to_text(k): m.tolist() for k, m in model.tau.items()}
    return {
        "kind": kind,
        "dim": model.dim,
        "alphabet": list(model.alphabet.symbols),
        "sigma": model.sigma.tolist(),
        "omega": model.omega.tolist(),
        "tau": tau,
    }


def model_from_dict(data: dict) -> Union[Oom, IoOom]:
    try:
        kind = data["kind"]
        alphabet = Alphabet(data["alphabet"])
        sigma = np.array(data["sigma"], dtype=np.float64)
        omega = np.array(data["omega"], dtype=np.float64)
        raw_tau = data["tau"]
        dim = int(data["dim"])
    except (KeyError, TypeError) as err:
        raise ValueError(f"malformed model data: {err}") from None
    if sigma.shape != (dim,):
        raise ValueError(f"sigma length {sigma.shape} does not match dim {dim}")
    if kind == "oom":
        tau = {s: np.array(m, dtype=np.float64) for s, m in raw_tau.items()}
        return Oom(alphabet, sigma, tau, omega)
    if kind == "ioom":
        tau = {
            _io_key_from_text(k): np.array(m, dtype=np.float64)
            for k, m in raw_tau.items()
        }
        return IoOom(alphabet, sigma, tau, omega)
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model: Union[Oom, IoOom], path: Union[str, Path]) -> None:
    atomic_write_text(path, json.dumps(model_to_dict(model), indent=2) + "\n")


def load_model(path: Union[str, Path]) -> Union[Oom, IoOom]:
    with open(path) as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as err:
            raise ValueError(f"{path}: not valid JSON ({err})") from None
    try:
        return model_from_dict(data)
    except ValueError as err:
        raise ValueError(f"{path}: {err}") from None


# ---------------------------------------------------------------------------
# HMM JSON


def save_hmm(hmm: Hmm, path: Union[str, Path]) -> None:
    data = {
        "n_states": hmm.n_states,
        "alphabet": list(hmm.alphabet.symbols),
        "transition": hmm.transition.tolist(),
        "emission": hmm.emission.tolist(),
        "initial": hmm.initial.tolist(),
    }
    atomic_write_text(path, json.dumps(data, indent=2) + "\n")


def load_hmm(path: Union[str, Path]) -> Hmm:
    with open(path) as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as err:
            raise ValueError(f"{path}: not valid JSON ({err})") from None
    try:
        hmm = Hmm(
            Alphabet(data["alphabet"]),
            np.array(data["transition"], dtype=np.float64),
            np.array(data["emission"], dtype=np.float64),
            np.array(data["initial"], dtype=np.float64),
        )
    except (KeyError, TypeError) as err:
        raise ValueError(f"{path}: malformed HMM data ({err})") from None
    except ValueError as err:
        raise ValueError(f"{path}: {err}") from None
    if hmm.n_states != int(data.get("n_states", hmm.n_states)):
        raise ValueError(f"{path}: n_states does not match the transition matrix")
    return hmm
