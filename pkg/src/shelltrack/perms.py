"""Permutation algebra on {1..k}, generator-word evaluation, and product folds.

Indices are 1-based everywhere.  Composition is right-to-left: compose(g, f)
applies f first, so a sequence of moves m1, m2, ... composes to
mN ∘ ... ∘ m1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import MismatchedSize


@dataclass(frozen=True)
class Permutation:
    """Bijection on {1..k}; ``map[i-1]`` is the image of i."""

    k: int
    map: tuple[int, ...]

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be positive, got {self.k}")
        if sorted(self.map) != list(range(1, self.k + 1)):
            raise ValueError(f"map {self.map} is not a bijection of 1..{self.k}")

    @classmethod
    def identity(cls, k: int) -> "Permutation":
        return cls(k, tuple(range(1, k + 1)))

    @classmethod
    def transposition(cls, k: int, a: int, b: int) -> "Permutation":
        if not (1 <= a <= k and 1 <= b <= k and a != b):
            raise ValueError(f"bad transposition ({a} {b}) on k={k}")
        m = list(range(1, k + 1))
        m[a - 1], m[b - 1] = b, a
        return cls(k, tuple(m))

    def apply(self, i: int) -> int:
        return self.map[i - 1]

    @property
    def is_identity(self) -> bool:
        return all(self.map[i] == i + 1 for i in range(self.k))

    def inverse(self) -> "Permutation":
        inv = [0] * self.k
        for i, j in enumerate(self.map, start=1):
            inv[j - 1] = i
        return Permutation(self.k, tuple(inv))

    def to_json(self) -> dict:
        return {"k": self.k, "map": list(self.map)}

    @classmethod
    def from_json(cls, obj: dict) -> "Permutation":
        return cls(int(obj["k"]), tuple(int(v) for v in obj["map"]))


@dataclass(frozen=True)
class GeneratorWord:
    """A word over the adjacent transpositions τ1..τ4 of S5.

    ``symbols[i] = j`` denotes the transposition (j, j+1).
    """

    symbols: tuple[int, ...]

    def __post_init__(self):
        for j in self.symbols:
            if not 1 <= j <= 4:
                raise ValueError(f"generator index {j} outside 1..4")

    @classmethod
    def from_text(cls, text: str) -> "GeneratorWord":
        text = text.strip()
        if not all(c in "1234" for c in text):
            raise ValueError(f"word text must be over {{1,2,3,4}}, got {text!r}")
        return cls(tuple(int(c) for c in text))

    def to_text(self) -> str:
        return "".join(str(j) for j in self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)


def compose(g: Permutation, f: Permutation) -> Permutation:
    """Return g ∘ f (f applied first)."""
    if g.k != f.k:
        raise MismatchedSize(f"cannot compose permutations on k={g.k} and k={f.k}")
    return Permutation(g.k, tuple(g.map[f.map[i] - 1] for i in range(g.k)))


def eval_word(w: GeneratorWord, k: int = 5) -> Permutation:
    """Evaluate a generator word; the first symbol acts first."""
    if k < 5:
        raise ValueError(f"word evaluation needs k >= 5, got {k}")
    perms = [Permutation.transposition(k, j, j + 1) for j in w.symbols]
    return fold(perms, strategy="sequential", k=k)


def fold(
    perms: Sequence[Permutation],
    strategy: str = "sequential",
    k: int | None = None,
) -> Permutation:
    """Compose p_n ∘ ... ∘ p_1; an empty sequence needs an explicit ambient k."""
    perms = list(perms)
    if not perms:
        if k is None:
            raise ValueError("empty fold needs an explicit ambient k")
        return Permutation.identity(k)
    k0 = perms[0].k
    for p in perms:
        if p.k != k0:
            raise MismatchedSize(f"mixed ground sets in fold: {p.k} vs {k0}")
    if strategy == "sequential":
        acc = Permutation.identity(k0)
        for p in perms:
            acc = compose(p, acc)
        return acc
    if strategy == "balanced":
        return _fold_balanced(perms)
    raise ValueError(f"unknown fold strategy {strategy!r}")


def _fold_balanced(perms: list[Permutation]) -> Permutation:
    if len(perms) == 1:
        return perms[0]
    mid = len(perms) // 2
    left = _fold_balanced(perms[:mid])
    right = _fold_balanced(perms[mid:])
    # later factors (right half) act after the earlier ones
    return compose(right, left)
