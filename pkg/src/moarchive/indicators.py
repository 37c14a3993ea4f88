"""Unary quality indicators over solution sets.

Every function here is pure. :class:`IndicatorSpec` bundles an indicator with
its configuration and exposes :meth:`IndicatorSpec.loss`, a smaller-is-better
view used by the indicator-driven archivers (hypervolume is negated).
"""
from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .core import UsageError, Vector, ideal_point, minimal_set, nadir_point, weakly_dominates

KINDS = ("hypervolume", "epsilon_additive", "igd_plus", "r2")


def _check(points: Sequence[Vector], other: Sequence[float] | Sequence[Vector], what: str) -> None:
    if len(points) == 0:
        raise UsageError("indicator of an empty set")
    if len(other) == 0:
        raise UsageError(f"empty {what}")


def _hv2(points: list[Vector], ref: Sequence[float]) -> float:
    area = 0.0
    prev = ref[1]
    for x, y in sorted(points):
        if y < prev:
            area += (ref[0] - x) * (prev - y)
            prev = y
    return area


def _hv(points: list[Vector], ref: Sequence[float]) -> float:
    if not points:
        return 0.0
    if len(ref) == 2:
        return _hv2(points, ref)
    # slice along the last objective
    pts = sorted(points, key=lambda p: p[-1])
    sub_ref = ref[:-1]
    volume = 0.0
    for i, p in enumerate(pts):
        upper = pts[i + 1][-1] if i + 1 < len(pts) else ref[-1]
        depth = upper - p[-1]
        if depth > 0:
            volume += _hv([q[:-1] for q in pts[: i + 1]], sub_ref) * depth
    return volume


def hypervolume(points: Sequence[Vector], ref: Sequence[float]) -> float:
    """Exact Lebesgue measure of the region dominated by ``points`` and bounded by ``ref``.

    Points that do not strictly dominate ``ref`` contribute nothing.
    """
    _check(points, ref, "reference point")
    d = len(ref)
    for p in points:
        if len(p) != d:
            raise UsageError(f"dimension mismatch: point {p} vs reference {tuple(ref)}")
    inside = [tuple(p) for p in points if all(a < r for a, r in zip(p, ref))]
    return _hv(inside, tuple(ref))


def hypervolume_mc(points: Sequence[Vector], ref: Sequence[float], samples: int = 1_000_000,
                   seed: int = 0, chunk: int = 200_000) -> float:
    """Monte-Carlo estimate of :func:`hypervolume`, for cross-checking only."""
    pts = np.array([p for p in points if all(a < r for a, r in zip(p, ref))], dtype=float)
    if len(pts) == 0:
        return 0.0
    ref_arr = np.asarray(ref, dtype=float)
    lo = pts.min(axis=0)
    box = float(np.prod(ref_arr - lo))
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        u = rng.uniform(lo, ref_arr, size=(n, len(ref_arr)))
        covered = np.zeros(n, dtype=bool)
        for p in pts:
            covered |= np.all(p <= u, axis=1)
        hits += int(covered.sum())
        done += n
    return box * hits / samples


def hv_contribution(points: Sequence[Vector], a: Vector, ref: Sequence[float]) -> float:
    """Hypervolume lost when one copy of ``a`` is removed from ``points``."""
    pts = list(points)
    try:
        pts.remove(tuple(a))
    except ValueError:
        raise UsageError(f"{a} is not a member of the set") from None
    rest = hypervolume(pts, ref) if pts else 0.0
    return hypervolume(points, ref) - rest


def epsilon_additive(points: Sequence[Vector], reference: Sequence[Vector]) -> float:
    """Smallest additive shift that lets ``points`` weakly dominate ``reference``."""
    _check(points, reference, "reference set")
    return max(min(max(a_i - r_i for a_i, r_i in zip(a, r)) for a in points) for r in reference)


def igd_plus(points: Sequence[Vector], reference: Sequence[Vector]) -> float:
    """Mean dominance-truncated distance from each reference point to ``points``."""
    _check(points, reference, "reference set")
    dists = [
        min(math.sqrt(math.fsum(max(a_i - r_i, 0.0) ** 2 for a_i, r_i in zip(a, r))) for a in points)
        for r in reference
    ]
    return math.fsum(dists) / len(reference)


def r2(points: Sequence[Vector], weights: Sequence[Sequence[float]], utopian: Sequence[float]) -> float:
    """Mean over weights of the best weighted Tchebycheff value reached by ``points``."""
    _check(points, weights, "weight set")
    for a in points:
        if not weakly_dominates(utopian, a):
            raise UsageError(f"utopian point {tuple(utopian)} does not weakly dominate {a}")
    vals = [
        min(max(w_i * abs(a_i - z_i) for w_i, a_i, z_i in zip(w, a, utopian)) for a in points)
        for w in weights
    ]
    return math.fsum(vals) / len(weights)


def uniform_weights(n: int, d: int) -> list[Vector]:
    """``n`` weight vectors on the unit simplex, spread as evenly as a lattice allows."""
    if n < 1 or d < 2:
        raise UsageError("need n >= 1 and d >= 2")
    if n == 1:
        return [tuple(1.0 / d for _ in range(d))]
    if d == 2:
        return [(i / (n - 1), 1.0 - i / (n - 1)) for i in range(n)]
    h = 1
    while math.comb(h + d - 1, d - 1) < n:
        h += 1
    lattice = [c for c in itertools.product(range(h + 1), repeat=d) if sum(c) == h]
    lattice.sort(reverse=True)
    idx = [round(i * (len(lattice) - 1) / (n - 1)) for i in range(n)]
    return [tuple(c / h for c in lattice[i]) for i in idx]


@dataclass(frozen=True)
class IndicatorSpec:
    """An indicator plus the configuration it needs.

    ``kind`` is one of :data:`KINDS`. Hypervolume is maximised; the others
    are minimised. :meth:`loss` always returns a smaller-is-better value.
    """

    kind: str
    reference_point: Vector | None = None
    reference_set: tuple[Vector, ...] | None = None
    weights: tuple[Vector, ...] | None = None
    utopian: Vector | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown indicator kind {self.kind!r}")
        need = {
            "hypervolume": ("reference_point",),
            "epsilon_additive": ("reference_set",),
            "igd_plus": ("reference_set",),
            "r2": ("weights", "utopian"),
        }[self.kind]
        for attr in need:
            if getattr(self, attr) is None:
                raise UsageError(f"{self.kind} requires {attr}")
        if self.weights is not None:
            for w in self.weights:
                if any(x < 0 for x in w) or not math.isclose(sum(w), 1.0):
                    raise UsageError(f"weight {w} is not on the unit simplex")
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    @property
    def maximised(self) -> bool:
        return self.kind == "hypervolume"

    def value(self, points: Sequence[Vector]) -> float:
        if self.kind == "hypervolume":
            return hypervolume(points, self.reference_point)
        if self.kind == "epsilon_additive":
            return epsilon_additive(points, self.reference_set)
        if self.kind == "igd_plus":
            return igd_plus(points, self.reference_set)
        return r2(points, self.weights, self.utopian)

    def loss(self, points: Sequence[Vector]) -> float:
        v = self.value(points)
        return -v if self.maximised else v

    @classmethod
    def for_ground_set(cls, kind: str, ground: Sequence[Vector], n_weights: int | None = None) -> IndicatorSpec:
        """Configure ``kind`` so that it is weakly Pareto compliant over ``ground``.

        Reference sets are the distinct minimal elements of ``ground``; the
        hypervolume reference point and the R2 utopian point sit one unit
        outside the ground set's nadir and ideal respectively.
        """
        pts = [tuple(p) for p in ground]
        if kind == "hypervolume":
            return cls(kind, reference_point=tuple(x + 1 for x in nadir_point(pts)))
        if kind in ("epsilon_additive", "igd_plus"):
            return cls(kind, reference_set=tuple(dict.fromkeys(minimal_set(pts))))
        if kind == "r2":
            d = len(pts[0])
            n = n_weights or (11 if d == 2 else 15)
            return cls(kind, weights=tuple(uniform_weights(n, d)), utopian=tuple(x - 1 for x in ideal_point(pts)))
        raise UsageError(f"unknown indicator kind {kind!r}")

    def to_json(self) -> dict:
        out = {"kind": self.kind, "name": self.name}
        if self.reference_point is not None:
            out["reference_point"] = list(self.reference_point)
        if self.reference_set is not None:
            out["reference_set"] = [list(p) for p in self.reference_set]
        if self.weights is not None:
            out["weights"] = [list(w) for w in self.weights]
        if self.utopian is not None:
            out["utopian"] = list(self.utopian)
        return out

    @classmethod
    def from_json(cls, data: dict) -> IndicatorSpec:
        def vec(key):
            v = data.get(key)
            return None if v is None else tuple(float(x) for x in v)

        def vecs(key):
            v = data.get(key)
            return None if v is None else tuple(tuple(float(x) for x in p) for p in v)

        return cls(
            data["kind"],
            reference_point=vec("reference_point"),
            reference_set=vecs("reference_set"),
            weights=vecs("weights"),
            utopian=vec("utopian"),
            name=data.get("name", ""),
        )
