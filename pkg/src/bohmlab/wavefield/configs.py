"""Particle labels and the three kinds of configuration."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from ..errors import CoincidenceError, OutOfDomainError, ValidationError


@dataclass(frozen=True)
class IndexSet:
    """A subset of the particle labels ``{1, ..., n}`` (1-based)."""

    members: frozenset
    n: int

    def __init__(self, members: Iterable[int], n: int):
        mem = frozenset(int(i) for i in members)
        if n < 1:
            raise ValidationError(f"IndexSet: n must be >= 1, got {n}")
        bad = sorted(i for i in mem if not 1 <= i <= n)
        if bad:
            raise ValidationError(f"IndexSet: labels {bad} outside 1..{n}")
        object.__setattr__(self, "members", mem)
        object.__setattr__(self, "n", int(n))

    @classmethod
    def all(cls, n: int) -> "IndexSet":
        return cls(range(1, n + 1), n)

    @classmethod
    def from_mask(cls, mask: int, n: int) -> "IndexSet":
        return cls((i + 1 for i in range(n) if mask >> i & 1), n)

    def complement(self) -> "IndexSet":
        return IndexSet(set(range(1, self.n + 1)) - self.members, self.n)

    @property
    def labels(self) -> Tuple[int, ...]:
        return tuple(sorted(self.members))

    @property
    def indices(self) -> Tuple[int, ...]:
        """0-based particle indices in increasing order."""
        return tuple(i - 1 for i in self.labels)

    @property
    def mask(self) -> int:
        return sum(1 << i for i in self.indices)

    def __len__(self):
        return len(self.members)

    def __contains__(self, label):
        return label in self.members

    def __iter__(self):
        return iter(self.labels)

    def __str__(self):
        return "{" + ",".join(map(str, self.labels)) + "}"


@dataclass(frozen=True, eq=False)
class LabeledConfig:
    """Ordered N-tuple of positions, array of shape ``(N, d)``."""

    positions: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        p = np.array(self.positions, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if p.ndim != 2:
            raise ValidationError(f"positions: expected (N, d), got shape {p.shape}")
        p.flags.writeable = False
        object.__setattr__(self, "positions", p)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def flat(self) -> np.ndarray:
        return self.positions.reshape(-1)

    def check_inside(self, lo: float, hi: float) -> None:
        p = self.positions
        if not np.all((p >= lo) & (p < hi)):
            raise OutOfDomainError(f"configuration {p.tolist()} outside box [{lo}, {hi})",
                                   position=p.copy(), time=self.time)


def canonical_order(points: np.ndarray) -> np.ndarray:
    """Row order sorting points lexicographically (first coordinate first)."""
    pts = np.asarray(points)
    return np.lexsort(pts.T[::-1])


@dataclass(frozen=True, eq=False)
class UnorderedConfig:
    """N distinct points stored in lexicographic order.

    The stored order carries no physical meaning; it is only used for
    deterministic serialisation and slot addressing.
    """

    points: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        p = p[canonical_order(p)]
        if p.shape[0] > 1 and np.any(np.all(np.diff(p, axis=0) == 0, axis=1)):
            raise CoincidenceError(f"coincident points in {p.tolist()}")
        p.flags.writeable = False
        object.__setattr__(self, "points", p)

    @classmethod
    def from_labeled(cls, q: LabeledConfig) -> "UnorderedConfig":
        return cls(q.positions, q.time)

    def as_labeled(self) -> LabeledConfig:
        return LabeledConfig(self.points, self.time)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def same_set(self, other: "UnorderedConfig", atol: float = 0.0) -> bool:
        return self.points.shape == other.points.shape and bool(
            np.all(np.abs(self.points - other.points) <= atol))


def as_positions(q, n: int | None = None, d: int | None = None) -> np.ndarray:
    """Coerce a config object or array-like to a float array ``(N, d)``."""
    if isinstance(q, LabeledConfig):
        p = q.positions
    elif isinstance(q, UnorderedConfig):
        p = q.points
    else:
        p = np.asarray(q, dtype=float)
        if p.ndim == 1:
            if n is None:
                p = p.reshape(-1, 1 if d is None else d)
            else:
                p = p.reshape(n, -1)
    if n is not None and p.shape[0] != n:
        raise ValidationError(f"expected {n} positions, got {p.shape[0]}")
    return p


def positions_sequence(qs: Sequence) -> np.ndarray:
    return np.stack([as_positions(q) for q in qs])
