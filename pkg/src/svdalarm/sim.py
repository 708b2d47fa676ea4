"""Bounded-variation state trajectories, noisy measurements and attacks.

Random streams come from numpy's PCG64 ``default_rng``. A realization seed
``s`` feeds two independent streams, ``default_rng([s, 0])`` for states and
``default_rng([s, 1])`` for measurement noise, so changing the noise level
never perturbs the state trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InvalidInputError
from .grid import Attack

__all__ = [
    "AttackScenario",
    "MeasurementFrame",
    "NoiseModel",
    "Ramp",
    "Step",
    "TrajectoryConfig",
    "apply_attack",
    "generate_measurements",
    "generate_states",
    "signature_value",
    "stack_frames",
]

STATE_STREAM = 0
NOISE_STREAM = 1


@dataclass(frozen=True)
class NoiseModel:
    nu: float
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.nu) and self.nu >= 0):
            raise InvalidInputError("noise std nu must be finite and >= 0")


@dataclass(frozen=True)
class TrajectoryConfig:
    x0: np.ndarray
    gamma: float = 0.0
    T: int = 256
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma >= 0):
            raise InvalidInputError("gamma must be finite and >= 0")
        if self.T < 1:
            raise InvalidInputError("horizon T must be >= 1")


@dataclass(frozen=True)
class Step:
    pass


@dataclass(frozen=True)
class Ramp:
    t_start: int
    t_end: int

    def __post_init__(self):
        if self.t_start > self.t_end:
            raise InvalidInputError("ramp needs t_start <= t_end")


@dataclass(frozen=True)
class AttackScenario:
    attack: Attack
    t_a: int
    signature: Union[Step, Ramp] = field(default_factory=Step)


@dataclass(frozen=True)
class MeasurementFrame:
    t: int
    y: np.ndarray
    x: Optional[np.ndarray] = None
    e: Optional[np.ndarray] = None
    theta: Optional[float] = None


def generate_states(cfg: TrajectoryConfig) -> np.ndarray:
    """Return a (T, N) array of states confined to a ball of radius gamma/2
    around ``x0``, so every pair of states is within ``gamma``."""
    x0 = np.asarray(cfg.x0, dtype=float)
    n = x0.shape[0]
    if cfg.gamma == 0:
        return np.tile(x0, (cfg.T, 1))
    rng = np.random.default_rng([cfg.seed, STATE_STREAM])
    direction = rng.standard_normal((cfg.T, n))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = 0.5 * cfg.gamma * rng.random(cfg.T) ** (1.0 / n)
    return x0 + direction * radius[:, None]


def generate_measurements(states, H, noise: NoiseModel, t0: int = 0) -> list:
    """``y^t = H x^t + e^t`` with iid ``N(0, nu^2)`` noise entries."""
    Hm = getattr(H, "H", H)
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if states.shape[1] != Hm.shape[1]:
        raise InvalidInputError(f"states have dim {states.shape[1]}, H expects {Hm.shape[1]}")
    rng = np.random.default_rng([noise.seed, NOISE_STREAM])
    e = noise.nu * rng.standard_normal((states.shape[0], Hm.shape[0]))
    y = states @ Hm.T + e
    return [
        MeasurementFrame(t=t0 + k, y=y[k], x=states[k], e=e[k], theta=0.0)
        for k in range(states.shape[0])
    ]


def signature_value(t: int, scenario: AttackScenario) -> float:
    sig = scenario.signature
    if isinstance(sig, Ramp):
        if t < sig.t_start:
            return 0.0
        if t >= sig.t_end:
            return 1.0
        return (t - sig.t_start) / (sig.t_end - sig.t_start)
    return 1.0 if t >= scenario.t_a else 0.0


def apply_attack(frames: Sequence[MeasurementFrame], scenario: AttackScenario) -> list:
    """Return new frames with ``y + s(t) a``; frames with s(t) = 0 are reused."""
    if not frames:
        return []
    t_first, t_last = frames[0].t, frames[-1].t
    if not t_first <= scenario.t_a <= t_last:
        raise InvalidInputError(
            f"attack time {scenario.t_a} outside horizon [{t_first}, {t_last}]"
        )
    a = scenario.attack.a
    out = []
    for fr in frames:
        s = signature_value(fr.t, scenario)
        if s == 0.0:
            out.append(fr)
        else:
            out.append(replace(fr, y=fr.y + s * a, theta=s))
    return out


def stack_frames(frames: Sequence[MeasurementFrame]) -> np.ndarray:
    return np.vstack([fr.y for fr in frames])
