"""DC power-flow grid model, measurement matrix, WLS estimation and
unobservable attacks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Hashable, Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvalidInputError, TopologyError
from .numerics import as_vector, weighted_pinv

__all__ = [
    "Attack",
    "GridModel",
    "MeasurementMatrix",
    "build_h_matrix",
    "default_grid",
    "is_unobservable",
    "load_grid",
    "make_unobservable_attack",
    "residual",
    "wls_estimate",
]

DEFAULT_UNOBSERVABLE_TOL = 1e-8


@dataclass(frozen=True)
class GridModel:
    """Bus/branch topology. Branches are ``(from_bus, to_bus, susceptance)``."""

    buses: tuple
    slack_bus: Hashable
    branches: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(tuple(b) for b in self.branches))
        if len(set(self.buses)) != len(self.buses):
            raise TopologyError("duplicate bus ids")
        if self.slack_bus not in self.buses:
            raise TopologyError(f"slack bus {self.slack_bus!r} is not a bus")
        if len(self.branches) < 1:
            raise TopologyError("grid needs at least one branch")
        known = set(self.buses)
        for f, t, b in self.branches:
            if f not in known or t not in known:
                raise TopologyError(f"branch {f!r}-{t!r} references an unknown bus")
            if f == t:
                raise TopologyError(f"self-loop at bus {f!r}")
            if not (np.isfinite(b) and b > 0):
                raise TopologyError(f"branch {f!r}-{t!r} has non-positive susceptance {b!r}")

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    @property
    def state_buses(self) -> tuple:
        """Non-slack buses, in the column order of H."""
        return tuple(b for b in self.buses if b != self.slack_bus)

    def is_connected(self) -> bool:
        index = {bus: i for i, bus in enumerate(self.buses)}
        rows = [index[f] for f, _, _ in self.branches]
        cols = [index[t] for _, t, _ in self.branches]
        adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.n_buses,) * 2)
        n_comp, _ = connected_components(adj, directed=False)
        return n_comp == 1

    def degree(self, bus) -> int:
        return sum((f == bus) + (t == bus) for f, t, _ in self.branches)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "slack": self.slack_bus,
            "buses": list(self.buses),
            "branches": [{"from": f, "to": t, "b": b} for f, t, b in self.branches],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GridModel":
        try:
            branches = [(br["from"], br["to"], float(br["b"])) for br in doc["branches"]]
            return cls(
                buses=doc["buses"],
                slack_bus=doc["slack"],
                branches=branches,
                name=doc.get("name", ""),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed grid document: {exc}") from exc


def load_grid(source="default") -> GridModel:
    """Load a grid JSON file; ``"default"`` selects the bundled 39-bus case."""
    if str(source) == "default":
        return default_grid()
    with open(Path(source)) as fh:
        return GridModel.from_dict(json.load(fh))


def default_grid() -> GridModel:
    text = resources.files("svdalarm").joinpath("data/ieee39.json").read_text()
    return GridModel.from_dict(json.loads(text))


@dataclass(frozen=True)
class MeasurementMatrix:
    """H (M x N) with row tags ``("injection", bus)`` or ``("flow", (from, to))``."""

    H: np.ndarray
    row_labels: tuple
    state_buses: tuple

    def __post_init__(self):
        self.H.setflags(write=False)

    @property
    def M(self) -> int:
        return self.H.shape[0]

    @property
    def N(self) -> int:
        return self.H.shape[1]

    def column_of(self, bus) -> int:
        try:
            return self.state_buses.index(bus)
        except ValueError:
            raise InvalidInputError(f"bus {bus!r} is not a state (non-slack) bus") from None


def _as_h(H) -> np.ndarray:
    return H.H if isinstance(H, MeasurementMatrix) else np.asarray(H, dtype=float)


def build_h_matrix(grid: GridModel) -> MeasurementMatrix:
    """DC measurement matrix.

    The first n+1 rows are bus injections (rows of the bus susceptance matrix
    ``B = A^T diag(b) A``, slack row included); the last m rows are branch flows
    ``b_k * A_k``. ``A`` is the oriented incidence matrix with -1 at the
    from-bus and +1 at the to-bus. The slack column is dropped.
    """
    if not grid.is_connected():
        raise TopologyError("grid graph is disconnected")
    index = {bus: i for i, bus in enumerate(grid.buses)}
    m, nb = grid.n_branches, grid.n_buses
    A = np.zeros((m, nb))
    b = np.empty(m)
    for k, (f, t, bk) in enumerate(grid.branches):
        A[k, index[f]] = -1.0
        A[k, index[t]] = 1.0
        b[k] = bk
    flows = b[:, None] * A
    injections = A.T @ flows
    keep = [index[bus] for bus in grid.state_buses]
    H = np.vstack([injections[:, keep], flows[:, keep]])
    labels = tuple(("injection", bus) for bus in grid.buses) + tuple(
        ("flow", (f, t)) for f, t, _ in grid.branches
    )
    return MeasurementMatrix(H=H, row_labels=labels, state_buses=grid.state_buses)


def wls_estimate(y, H, variances) -> np.ndarray:
    """Weighted least-squares state estimate ``K y``."""
    Hm = _as_h(H)
    y = as_vector(y, "y")
    if y.shape[0] != Hm.shape[0]:
        raise InvalidInputError(f"y has length {y.shape[0]}, expected {Hm.shape[0]}")
    return weighted_pinv(Hm, variances) @ y


def residual(y, H, x_hat) -> np.ndarray:
    Hm = _as_h(H)
    y = as_vector(y, "y")
    x_hat = as_vector(x_hat, "x_hat")
    if y.shape[0] != Hm.shape[0] or x_hat.shape[0] != Hm.shape[1]:
        raise InvalidInputError(
            f"shape mismatch: H {Hm.shape}, y {y.shape}, x_hat {x_hat.shape}"
        )
    return y - Hm @ x_hat


@dataclass(frozen=True)
class Attack:
    a: np.ndarray
    c: Optional[np.ndarray] = None
    support: tuple = field(default=())

    @property
    def sparsity(self) -> int:
        return int(np.count_nonzero(self.a))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.a))


def make_unobservable_attack(
    H: MeasurementMatrix,
    support_buses: Sequence,
    target_norm: float,
    weights: Optional[Sequence[float]] = None,
) -> Attack:
    """Build ``a = H c`` with ``c`` supported on ``support_buses``.

    ``c`` starts as ``weights`` (all ones by default) on the support and is
    rescaled so that ``||a||_2 == target_norm``.
    """
    support = tuple(support_buses)
    if not support:
        raise InvalidInputError("attack support is empty")
    if not (np.isfinite(target_norm) and target_norm > 0):
        raise InvalidInputError("target_norm must be positive")
    if weights is None:
        weights = np.ones(len(support))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(support),):
        raise InvalidInputError("weights must match the support length")

    c = np.zeros(H.N)
    for bus, wgt in zip(support, weights):
        c[H.column_of(bus)] = wgt
    a = H.H @ c
    norm = np.linalg.norm(a)
    if norm == 0:
        raise InvalidInputError("attack direction maps to the zero vector")
    scale = target_norm / norm
    return Attack(a=a * scale, c=c * scale, support=support)


def is_unobservable(a, H, tol: float = DEFAULT_UNOBSERVABLE_TOL):
    """Check whether ``a`` lies in range(H).

    Returns ``(True, c)`` when the least-squares fit satisfies
    ``||a - H c|| <= tol * ||a||``, else ``(False, None)``.
    """
    Hm = _as_h(H)
    a = as_vector(a, "a")
    if a.shape[0] != Hm.shape[0]:
        raise InvalidInputError(f"a has length {a.shape[0]}, expected {Hm.shape[0]}")
    a_norm = np.linalg.norm(a)
    if a_norm == 0:
        return True, np.zeros(Hm.shape[1])
    c, *_ = np.linalg.lstsq(Hm, a, rcond=None)
    if np.linalg.norm(a - Hm @ c) <= tol * a_norm:
        return True, c
    return False, None
