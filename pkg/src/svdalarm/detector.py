"""Sliding-window history matrix and the streaming sigma_1 detector."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError
from .numerics import as_vector, largest_singular_value, largest_singular_values, weighted_pinv

__all__ = [
    "HistoryDetector",
    "HistoryMatrix",
    "Verdict",
    "build_history_matrix",
    "estimate_stream",
    "history_components",
    "history_stack",
    "post_attack_profile",
    "sigma1_series",
]

SOURCES = ("measurements", "estimates")


@dataclass(frozen=True)
class HistoryMatrix:
    t: Optional[int]
    delta: np.ndarray

    @property
    def w(self) -> int:
        return self.delta.shape[1]


@dataclass(frozen=True)
class Verdict:
    t: int
    sigma1: float
    alarmed: bool
    threshold_used: float


def build_history_matrix(window: Sequence, t: Optional[int] = None) -> HistoryMatrix:
    """Build the M x w matrix of changes from ``w + 1`` vectors.

    ``window`` is in chronological order (oldest first). Column ``k`` (1-based)
    is ``newest - window[-1 - k]``, i.e. ``y^t - y^{t-k}``.
    """
    try:
        rows = np.asarray(window, dtype=float)
    except ValueError:
        raise InvalidInputError("window vectors have mismatched dimensions") from None
    if rows.ndim != 2:
        raise InvalidInputError("window must be a sequence of equal-length vectors")
    if rows.shape[0] < 2:
        raise InvalidInputError("window needs at least 2 vectors (w >= 1)")
    newest = rows[-1]
    delta = (newest - rows[-2::-1]).T
    return HistoryMatrix(t=t, delta=delta)


def history_stack(ys, w: int) -> np.ndarray:
    """All history matrices of a (T, M) stream, shaped (T - w, M, w).

    Entry ``i`` corresponds to time index ``i + w``.
    """
    ys = np.asarray(ys, dtype=float)
    if w < 1:
        raise InvalidInputError("window size w must be >= 1")
    T = ys.shape[0]
    if T <= w:
        return np.zeros((0, ys.shape[1], w))
    newest = ys[w:]
    lagged = np.stack([ys[w - k : T - k] for k in range(1, w + 1)], axis=2)
    return newest[:, :, None] - lagged


def sigma1_series(ys, w: int) -> np.ndarray:
    """sigma_1 of every history matrix of the stream; NaN during warm-up."""
    ys = np.asarray(ys, dtype=float)
    out = np.full(ys.shape[0], np.nan)
    out[w:] = largest_singular_values(history_stack(ys, w))
    return out


class HistoryDetector:
    """Streaming detector: keeps the last ``w + 1`` samples and alarms when
    sigma_1 of the history matrix exceeds ``threshold``.

    Verdicts do not latch; every time step is judged on its own window.
    """

    def __init__(self, w: int, threshold: float, source: str = "measurements"):
        if w < 1:
            raise InvalidInputError("window size w must be >= 1")
        if source not in SOURCES:
            raise InvalidInputError(f"source must be one of {SOURCES}")
        self.w = int(w)
        self.threshold = float(threshold)
        self.source = source
        self._buf: deque = deque(maxlen=self.w + 1)
        self._dim: Optional[int] = None
        self._t = -1

    @property
    def ready(self) -> bool:
        return len(self._buf) == self.w + 1

    def step(self, v, t: Optional[int] = None) -> Optional[Verdict]:
        v = as_vector(v)
        if self._dim is None:
            self._dim = v.shape[0]
        elif v.shape[0] != self._dim:
            raise InvalidInputError(f"sample dim changed from {self._dim} to {v.shape[0]}")
        self._t = self._t + 1 if t is None else int(t)
        self._buf.append(v)
        if not self.ready:
            return None
        s1 = largest_singular_value(build_history_matrix(self._buf).delta)
        return Verdict(t=self._t, sigma1=s1, alarmed=s1 > self.threshold, threshold_used=self.threshold)

    def run(self, samples, times: Optional[Sequence[int]] = None) -> list:
        verdicts = []
        for i, v in enumerate(samples):
            verdict = self.step(v, None if times is None else times[i])
            if verdict is not None:
                verdicts.append(verdict)
        return verdicts


def estimate_stream(frames, H, variances) -> np.ndarray:
    """Map every measurement to its WLS state estimate; returns (T, N)."""
    Hm = getattr(H, "H", H)
    ys = np.vstack([getattr(fr, "y", fr) for fr in frames])
    if ys.shape[1] != Hm.shape[0]:
        raise InvalidInputError(f"measurements have dim {ys.shape[1]}, H has {Hm.shape[0]} rows")
    K = weighted_pinv(Hm, variances)
    return ys @ K.T


def post_attack_profile(ys, w: int, t_a: int) -> np.ndarray:
    """sigma_1 at ``t_a + j`` for ``j = 0..w``; ``ys`` is indexed by time."""
    ys = np.asarray(ys, dtype=float)
    if t_a < w or t_a + w >= ys.shape[0]:
        raise InvalidInputError("stream too short around the attack for this window")
    window = ys[t_a - w : t_a + w + 1]
    return largest_singular_values(history_stack(window, w))


def history_components(frames, H, a=None) -> dict:
    """Split the history matrix of ``frames`` (w + 1 frames, oldest first,
    truth populated) into its noise, state and attack parts.

    Returns ``E`` (newest noise repeated), ``G`` (minus lagged noise), ``HX``
    (state changes mapped through H) and ``A`` (attack signature changes), so
    that ``E + G + HX + A`` equals the measured history matrix.
    """
    Hm = getattr(H, "H", H)
    w = len(frames) - 1
    if w < 1:
        raise InvalidInputError("need at least 2 frames")
    newest, lagged = frames[-1], frames[-2::-1]
    E = np.tile(newest.e[:, None], (1, w))
    G = -np.column_stack([fr.e for fr in lagged])
    X = np.column_stack([newest.x - fr.x for fr in lagged])
    if a is None:
        A = np.zeros_like(E)
    else:
        a = np.asarray(a, dtype=float)
        s_now = newest.theta or 0.0
        A = np.column_stack([(s_now - (fr.theta or 0.0)) * a for fr in lagged])
    return {"E": E, "G": G, "HX": Hm @ X, "A": A}
