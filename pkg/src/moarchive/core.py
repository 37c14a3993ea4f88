"""Pareto dominance on objective vectors and solution sets.

All objectives are minimised. Vectors are plain tuples of floats and are
compared exactly; there is no tolerance anywhere in this module.
"""
from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

Vector = tuple[float, ...]


class UsageError(ValueError):
    """Raised when an operation is called outside its contract."""


def as_vector(values: Iterable[float]) -> Vector:
    """Validate and convert ``values`` to an objective vector."""
    vec = tuple(float(v) for v in values)
    if len(vec) < 2:
        raise UsageError(f"objective vectors need at least 2 components, got {len(vec)}")
    if not all(math.isfinite(v) for v in vec):
        raise UsageError(f"non-finite objective value in {vec}")
    return vec


def _check_dims(y: Sequence[float], y2: Sequence[float]) -> None:
    if len(y) != len(y2):
        raise UsageError(f"dimension mismatch: {len(y)} vs {len(y2)}")


def weakly_dominates(y: Sequence[float], y2: Sequence[float]) -> bool:
    """True iff ``y`` is no worse than ``y2`` in every objective."""
    _check_dims(y, y2)
    return all(a <= b for a, b in zip(y, y2))


def dominates(y: Sequence[float], y2: Sequence[float]) -> bool:
    """True iff ``y`` weakly dominates ``y2`` and the two differ."""
    _check_dims(y, y2)
    strict = False
    for a, b in zip(y, y2):
        if a > b:
            return False
        if a < b:
            strict = True
    return strict


def minimal_set(points: Sequence[Vector]) -> list[Vector]:
    """Return the members of ``points`` not dominated by any other member.

    Input order is preserved and duplicates of a minimal element are kept,
    since equal vectors never dominate each other.
    """
    if len(points) == 0:
        raise UsageError("minimal_set of an empty set")
    return [p for p in points if not any(dominates(q, p) for q in points)]


def is_nondominated(points: Sequence[Vector]) -> bool:
    return len(minimal_set(points)) == len(points)


def _check_sets(a: Sequence[Vector], b: Sequence[Vector]) -> None:
    if len(a) == 0 or len(b) == 0:
        raise UsageError("set comparison requires nonempty sets")


def set_weakly_dominates(a: Sequence[Vector], b: Sequence[Vector]) -> bool:
    """True iff every member of ``b`` is weakly dominated by some member of ``a``."""
    _check_sets(a, b)
    return all(any(weakly_dominates(x, y) for x in a) for y in b)


def better(a: Sequence[Vector], b: Sequence[Vector]) -> bool:
    """The better-relation: ``a`` weakly dominates ``b`` but not vice versa."""
    _check_sets(a, b)
    return set_weakly_dominates(a, b) and not set_weakly_dominates(b, a)


def same_set(a: Iterable[Vector], b: Iterable[Vector]) -> bool:
    """Set equality of objective vectors, ignoring multiplicity and order."""
    return set(a) == set(b)


def ideal_point(points: Sequence[Vector]) -> Vector:
    return tuple(min(c) for c in zip(*points))


def nadir_point(points: Sequence[Vector]) -> Vector:
    return tuple(max(c) for c in zip(*points))


@dataclass(frozen=True)
class Batch:
    """Solutions presented to an archiver at one timestep."""

    timestep: int
    solutions: tuple[Vector, ...]

    def __post_init__(self):
        sols = tuple(tuple(s) for s in self.solutions)
        if not sols:
            raise UsageError(f"batch {self.timestep} is empty")
        if self.timestep < 0:
            raise UsageError(f"negative timestep {self.timestep}")
        object.__setattr__(self, "solutions", sols)


def flatten(batches: Iterable[Batch]) -> list[Vector]:
    return [s for b in batches for s in b.solutions]


def sequence_dimension(batches: Sequence[Batch]) -> int:
    dims = {len(s) for b in batches for s in b.solutions}
    if len(dims) != 1:
        raise UsageError(f"inconsistent dimensions in sequence: {sorted(dims)}")
    return dims.pop()


class Trajectory:
    """Archive snapshots ``A(0..T)`` together with the batches that produced them.

    ``snapshots[0]`` is the empty archive and ``snapshots[k]`` is the archive
    after folding ``batches[k - 1]``. ``seen(k)`` is the cumulative set of
    solutions presented up to snapshot ``k``.
    """

    def __init__(self, batches: Sequence[Batch], snapshots: Sequence[Sequence[Vector]], meta: dict | None = None):
        if len(snapshots) != len(batches) + 1:
            raise UsageError("need exactly one snapshot per batch plus the initial empty archive")
        if len(snapshots[0]) != 0:
            raise UsageError("snapshot 0 must be the empty archive")
        self.batches = list(batches)
        self.snapshots = [tuple(tuple(p) for p in snap) for snap in snapshots]
        self.meta = dict(meta or {})

    def __len__(self) -> int:
        return len(self.snapshots)

    def seen(self, k: int) -> list[Vector]:
        return flatten(self.batches[:k])

    def timestep(self, k: int) -> int:
        """Batch timestep label of snapshot ``k`` (snapshot 0 maps to -1)."""
        return self.batches[k - 1].timestep if k > 0 else -1
