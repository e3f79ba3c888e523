"""Permutations of particle slots."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from ..errors import ValidationError
from ..wavefield.configs import LabeledConfig


@dataclass(frozen=True)
class Permutation:
    """Bijection of ``{0, ..., N-1}``; ``images[j]`` is the image of ``j``."""

    images: tuple

    def __init__(self, images: Sequence[int]):
        im = tuple(int(i) for i in images)
        if sorted(im) != list(range(len(im))):
            raise ValidationError(f"not a permutation: {im}")
        object.__setattr__(self, "images", im)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(n))

    @classmethod
    def transposition(cls, n: int, a: int, b: int) -> "Permutation":
        im = list(range(n))
        im[a], im[b] = im[b], im[a]
        return cls(im)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(rng.permutation(n))

    @classmethod
    def all(cls, n: int) -> Iterator["Permutation"]:
        for im in itertools.permutations(range(n)):
            yield cls(im)

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, j: int) -> int:
        return self.images[j]

    def __matmul__(self, other: "Permutation") -> "Permutation":
        """Composition: ``(self @ other)(j) = self(other(j))``."""
        if other.n != self.n:
            raise ValidationError("composing permutations of different size")
        return Permutation(self.images[j] for j in other.images)

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for j, i in enumerate(self.images):
            inv[i] = j
        return Permutation(inv)


def apply_permutation(sigma: Permutation, q):
    """``sigma(Q)``: the point in slot ``j`` moves to slot ``sigma(j)``.

    Accepts a :class:`LabeledConfig` (returned as one) or an array whose
    second-to-last axis, or first axis for 2-D input, indexes particles.
    """
    if isinstance(q, LabeledConfig):
        return LabeledConfig(apply_permutation(sigma, q.positions), q.time)
    p = np.asarray(q)
    if p.shape[-2 if p.ndim >= 2 else 0] != sigma.n:
        raise ValidationError(f"permutation of {sigma.n} applied to {p.shape}")
    inv = sigma.inverse().images
    if p.ndim == 1:
        return p[list(inv)]
    return p[..., list(inv), :]
