"""Closed-form thresholds and tail bounds for sigma_1 of the history matrix.

All quantities are functions of :class:`BoundParams`:

* ``lemma1_tail``  -- P(||e|| >= nu sqrt(M) (1+eps))  <= ((1+eps) e^-eps)^(M/2)
* ``lemma2_tail``  -- P(sigma_1(G) >= nu (sqrt(M)+sqrt(w)+tau)) <= 2 exp(-tau^2/2)
* ``threshold_ell`` -- pre-attack envelope on sigma_1
* ``threshold_u``   -- at-attack floor ``sqrt(w) ||a|| - ell``

With ``tau = 4, eps = 0.75, M = 85`` the summed tail is 9.771e-4; the
Gaussian-matrix term alone is 6.709e-4.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

from .errors import InvalidInputError, NoSolutionError

__all__ = [
    "BoundParams",
    "ThresholdPair",
    "detectability_condition",
    "detection_probability_lower_bound",
    "lemma1_tail",
    "lemma2_tail",
    "min_attack_norm",
    "min_window",
    "tail_probability",
    "threshold_ell",
    "threshold_pair",
    "threshold_u",
]

DEFAULT_TAU = 4.0
DEFAULT_EPS = 0.75
MIN_WINDOW_CAP = 10**6


@dataclass(frozen=True)
class BoundParams:
    nu: float
    M: int
    w: int = 1
    tau: float = DEFAULT_TAU
    eps: float = DEFAULT_EPS
    gamma: float = 0.0
    h_norm: float = 0.0

    def __post_init__(self):
        for name in ("nu", "tau", "eps", "gamma", "h_norm"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise InvalidInputError(f"{name} must be finite and >= 0, got {v!r}")
        if self.M < 1 or self.w < 1:
            raise InvalidInputError("M and w must be >= 1")

    def with_window(self, w: int) -> "BoundParams":
        return replace(self, w=int(w))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "BoundParams":
        fields = {k: doc[k] for k in ("nu", "M", "w", "tau", "eps", "gamma", "h_norm") if k in doc}
        return cls(**fields)


@dataclass(frozen=True)
class ThresholdPair:
    ell: float
    u: float
    tail: float


def lemma1_tail(eps: float, M: int) -> float:
    if eps < 0:
        raise InvalidInputError("eps must be >= 0")
    if M < 1:
        raise InvalidInputError("M must be >= 1")
    return math.exp(0.5 * M * (math.log1p(eps) - eps))


def lemma2_tail(tau: float, clamp: bool = False) -> float:
    """``2 exp(-tau^2 / 2)``; exceeds 1 for small tau unless ``clamp``."""
    if tau < 0:
        raise InvalidInputError("tau must be >= 0")
    value = 2.0 * math.exp(-0.5 * tau * tau)
    return min(value, 1.0) if clamp else value


def _raw_tail(p: BoundParams) -> float:
    return lemma2_tail(p.tau) + lemma1_tail(p.eps, p.M)


def tail_probability(p: BoundParams, clamp: bool = True) -> float:
    raw = _raw_tail(p)
    return min(max(raw, 0.0), 1.0) if clamp else raw


def threshold_ell(p: BoundParams) -> float:
    sw, sm = math.sqrt(p.w), math.sqrt(p.M)
    return p.nu * sw * sm * (1 + p.eps) + p.nu * (sm + sw + p.tau) + p.gamma * sw * p.h_norm


def threshold_u(a_norm: float, p: BoundParams) -> float:
    if a_norm < 0:
        raise InvalidInputError("a_norm must be >= 0")
    return math.sqrt(p.w) * a_norm - threshold_ell(p)


def threshold_pair(a_norm: float, p: BoundParams) -> ThresholdPair:
    return ThresholdPair(ell=threshold_ell(p), u=threshold_u(a_norm, p), tail=tail_probability(p))


def detection_probability_lower_bound(p: BoundParams, clamp: bool = True) -> float:
    raw = 1.0 - 2.0 * _raw_tail(p)
    return max(raw, 0.0) if clamp else raw


def min_attack_norm(p: BoundParams) -> float:
    """Right-hand side of the sufficient detectability condition."""
    sw, sm = math.sqrt(p.w), math.sqrt(p.M)
    return 2.0 * (p.nu * sm * (1 + p.eps + 1 / sw + 1 / sm + p.tau / (sm * sw)) + p.gamma * p.h_norm)


def detectability_condition(a_norm: float, p: BoundParams) -> bool:
    return a_norm > min_attack_norm(p)


def _asymptote(p: BoundParams) -> float:
    # limit of min_attack_norm as w -> infinity
    return 2.0 * (p.nu * math.sqrt(p.M) * (1 + p.eps) + p.nu + p.gamma * p.h_norm)


def min_window(a_norm: float, p: BoundParams, cap: int = MIN_WINDOW_CAP) -> int:
    """Smallest window ``w >= 1`` for which ``a_norm`` is detectable.

    ``p.w`` is ignored. The closed-form root of the condition seeds an exact
    integer search that only consults :func:`detectability_condition`.
    """
    slack = 0.5 * a_norm - 0.5 * _asymptote(p)
    if slack <= 0:
        raise NoSolutionError(
            f"||a|| = {a_norm} is not above the large-window limit {_asymptote(p):.6g}"
        )
    w_star = (p.nu * (math.sqrt(p.M) + p.tau) / slack) ** 2
    if w_star >= cap:
        raise NoSolutionError(f"required window exceeds the cap of {cap}")
    w = max(1, int(math.floor(w_star)))
    ok = lambda k: detectability_condition(a_norm, p.with_window(k))  # noqa: E731
    while w > 1 and ok(w - 1):
        w -= 1
    while not ok(w):
        w += 1
        if w > cap:
            raise NoSolutionError(f"no window up to {cap} satisfies the condition")
    return w
