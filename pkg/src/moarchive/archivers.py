"""Bounded archivers: one-at-a-time update rules plus a common driver.

Each ``*_update`` function is pure: it takes the current members (a list in
insertion order) and a new solution and returns the new member list. The
:class:`Archiver` class binds one rule to its configuration, owns the random
generator and auxiliary state, and folds batches.
"""
from __future__ import annotations

import math
import random
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

from .core import (
    Batch,
    Trajectory,
    UsageError,
    Vector,
    dominates,
    minimal_set,
    nadir_point,
    weakly_dominates,
)
from .indicators import IndicatorSpec, uniform_weights

KINDS = ("unbounded", "a_dom", "eps_box", "mga", "nsga2", "moead", "indicator_mu1", "weak_compliant")


@dataclass(frozen=True)
class ArchiverConfig:
    """Everything needed to build an :class:`Archiver`.

    Only the fields relevant to ``kind`` are read. ``capacity`` may be None
    for ``unbounded`` and ``eps_box``, whose size is not controlled.
    """

    kind: str
    capacity: int | None = None
    indicator: IndicatorSpec | None = None
    epsilon: float = 0.1
    eps_mode: str = "pareto"
    scalarizer: str = "tch"
    pbi_theta: float = 5.0
    weights: tuple[Vector, ...] | None = None
    ideal: Vector | None = None
    ref_policy: str = "fixed"
    tie_policy: str = "reject_new"
    batch_native: bool = False
    rng_seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown archiver kind {self.kind!r}")
        if self.capacity is not None and self.capacity < 1:
            raise UsageError("capacity must be >= 1")
        if self.capacity is None and self.kind not in ("unbounded", "eps_box", "moead"):
            raise UsageError(f"{self.kind} requires a capacity")
        if self.kind == "eps_box":
            if not self.epsilon > 0:
                raise UsageError("epsilon must be > 0")
            if self.eps_mode not in ("pareto", "approx"):
                raise UsageError(f"unknown eps_mode {self.eps_mode!r}")
        if self.kind == "moead":
            if self.scalarizer not in ("tch", "pbi"):
                raise UsageError(f"unknown scalarizer {self.scalarizer!r}")
            if self.weights is not None and self.capacity is not None and len(self.weights) != self.capacity:
                raise UsageError("moead needs exactly one weight per archive slot")
            if self.weights is None and self.capacity is None:
                raise UsageError("moead requires weights or a capacity")
        if self.kind in ("indicator_mu1", "weak_compliant") and self.indicator is None:
            raise UsageError(f"{self.kind} requires an indicator")
        if self.ref_policy not in ("fixed", "adaptive"):
            raise UsageError(f"unknown ref_policy {self.ref_policy!r}")
        if self.tie_policy not in ("reject_new", "uniform_random"):
            raise UsageError(f"unknown tie_policy {self.tie_policy!r}")
        if not self.name:
            object.__setattr__(self, "name", self.kind)


# -- unbounded / A_dom -------------------------------------------------------


def unbounded_update(members: list[Vector], s: Vector) -> list[Vector]:
    if any(weakly_dominates(a, s) for a in members):
        return members
    return [a for a in members if not dominates(s, a)] + [s]


def a_dom_update(members: list[Vector], s: Vector, capacity: int) -> list[Vector]:
    """Reject weakly dominated arrivals; otherwise accept only if the filtered set fits."""
    if any(weakly_dominates(a, s) for a in members):
        return members
    merged = [a for a in members if not dominates(s, a)] + [s]
    return merged if len(merged) <= capacity else members


# -- epsilon boxes -----------------------------------------------------------


def box_index(s: Sequence[float], epsilon: float) -> tuple[int, ...]:
    """Logarithmic box of ``s``: ``floor(log(s_i) / log(1 + epsilon))`` per objective."""
    base = 1.0 + epsilon
    out = []
    for v in s:
        if not v > 0:
            raise UsageError(f"epsilon boxes need strictly positive objectives, got {tuple(s)}")
        k = math.floor(math.log(v) / math.log(base))
        # repair float error at exact powers of the base
        while base ** (k + 1) <= v:
            k += 1
        while base**k > v:
            k -= 1
        out.append(k)
    return tuple(out)


def eps_box_update(members: list[Vector], s: Vector, epsilon: float, mode: str = "pareto") -> list[Vector]:
    bs = box_index(s, epsilon)
    boxes = [box_index(a, epsilon) for a in members]
    beaten = [i for i, b in enumerate(boxes) if dominates(bs, b)]
    if beaten:
        drop = set(beaten)
        return [a for i, a in enumerate(members) if i not in drop] + [s]
    if mode == "pareto":
        for i, (a, b) in enumerate(zip(members, boxes)):
            if b == bs and dominates(s, a):
                return members[:i] + members[i + 1:] + [s]
    if not any(weakly_dominates(b, bs) for b in boxes):
        return members + [s]
    return members


# -- multi-level grid --------------------------------------------------------


def _floor_log2(x: float) -> int:
    _, e = math.frexp(x)
    return e - 1


def mga_box(a: Sequence[float], level: int) -> tuple[int, ...]:
    return tuple(math.floor(math.ldexp(v, -level)) for v in a)


def _mga_level_range(points: Sequence[Vector]) -> tuple[int, int]:
    top = max(abs(v) for p in points for v in p)
    b_hi = _floor_log2(top) + 1 if top > 0 else 0
    diffs = [
        abs(x - y)
        for i in range(len(points[0]))
        for x in {p[i] for p in points}
        for y in {p[i] for p in points}
        if x != y
    ]
    b_lo = _floor_log2(min(diffs)) - 1 if diffs else b_hi
    return min(b_lo, b_hi), b_hi


def _box_dominated(points: Sequence[Vector], level: int) -> list[int]:
    boxes = [mga_box(p, level) for p in points]
    return [
        i
        for i, b in enumerate(boxes)
        if any(j != i and points[j] != points[i] and weakly_dominates(boxes[j], b) for j in range(len(points)))
    ]


def mga_level(points: Sequence[Vector]) -> int | None:
    """Finest coarseness level at which one member weakly box-dominates another, or None."""
    lo, hi = _mga_level_range(points)
    for level in range(lo, hi + 1):
        if _box_dominated(points, level):
            return level
    return None


def mga_update(members: list[Vector], s: Vector, capacity: int, rng: random.Random) -> list[Vector]:
    if any(dominates(a, s) for a in members):
        return members
    if s in members:
        return members
    merged = [a for a in members if not dominates(s, a)] + [s]
    if len(merged) <= capacity:
        return merged
    level = mga_level(merged)
    if level is None:
        return members
    candidates = _box_dominated(merged, level)
    if len(merged) - 1 in candidates:
        return members
    victim = rng.choice(candidates)
    return merged[:victim] + merged[victim + 1:]


# -- nondominated sorting and crowding ---------------------------------------


def front_indices(points: Sequence[Vector]) -> list[list[int]]:
    if len(points) == 0:
        raise UsageError("nondom_sorting of an empty set")
    remaining = list(range(len(points)))
    fronts = []
    while remaining:
        front = [i for i in remaining if not any(dominates(points[j], points[i]) for j in remaining)]
        fronts.append(front)
        taken = set(front)
        remaining = [i for i in remaining if i not in taken]
    return fronts


def nondom_sorting(points: Sequence[Vector]) -> list[list[Vector]]:
    """Partition ``points`` into successive nondominated fronts."""
    return [[points[i] for i in f] for f in front_indices(points)]


def crowding_distance(front: Sequence[Vector]) -> list[float]:
    n = len(front)
    if n <= 2:
        return [math.inf] * n
    dist = [0.0] * n
    for m in range(len(front[0])):
        order = sorted(range(n), key=lambda i: front[i][m])
        lo, hi = front[order[0]][m], front[order[-1]][m]
        dist[order[0]] = dist[order[-1]] = math.inf
        if hi == lo:
            continue
        for k in range(1, n - 1):
            dist[order[k]] += (front[order[k + 1]][m] - front[order[k - 1]][m]) / (hi - lo)
    return dist


def nsga2_update(members: list[Vector], s: Vector, capacity: int) -> list[Vector]:
    """Add ``s`` and drop the least crowded member of the last front.

    While the union still fits the capacity, only dominated members are
    dropped. Ties in crowding distance remove the most recently added member.
    """
    union = members + [s]
    if len(union) <= capacity:
        return minimal_set(union)
    last = front_indices(union)[-1]
    cd = crowding_distance([union[i] for i in last])
    low = min(cd)
    victim = max(i for i, c in zip(last, cd) if c == low)
    return union[:victim] + union[victim + 1:]


def nsga2_batch_update(members: list[Vector], batch: Sequence[Vector], capacity: int) -> list[Vector]:
    """Merge a whole batch, then keep ``capacity`` members front by front."""
    union = members + list(batch)
    if len(union) <= capacity:
        return minimal_set(union)
    keep: list[int] = []
    for front in front_indices(union):
        room = capacity - len(keep)
        if room <= 0:
            break
        if len(front) <= room:
            keep.extend(front)
            continue
        cd = crowding_distance([union[i] for i in front])
        ranked = sorted(range(len(front)), key=lambda k: -cd[k])
        keep.extend(front[k] for k in ranked[:room])
    return [union[i] for i in sorted(keep)]


# -- decomposition -----------------------------------------------------------


def tch(a: Sequence[float], w: Sequence[float], ref: Sequence[float]) -> float:
    return max(w_i * abs(a_i - r_i) for a_i, w_i, r_i in zip(a, w, ref))


def pbi(a: Sequence[float], w: Sequence[float], ref: Sequence[float], theta: float = 5.0) -> float:
    norm = math.sqrt(math.fsum(x * x for x in w))
    diff = [a_i - r_i for a_i, r_i in zip(a, ref)]
    d1 = abs(math.fsum(x * y for x, y in zip(diff, w))) / norm
    d2 = math.sqrt(math.fsum((x - d1 * y / norm) ** 2 for x, y in zip(diff, w)))
    return d1 + theta * d2


@dataclass
class MoeadState:
    """Per-weight incumbents plus the running ideal point."""

    weights: tuple[Vector, ...]
    assoc: list[Vector] = field(default_factory=list)
    ideal: Vector | None = None

    @property
    def members(self) -> list[Vector]:
        return list(dict.fromkeys(self.assoc))


def moead_update(state: MoeadState, s: Vector, scalarizer: str = "tch", theta: float = 5.0) -> MoeadState:
    if not state.assoc:
        ideal = s if state.ideal is None else tuple(map(min, state.ideal, s))
        return MoeadState(state.weights, [s] * len(state.weights), ideal)
    ideal = tuple(map(min, state.ideal, s))
    if scalarizer == "tch":
        def g(a, w):
            return tch(a, w, ideal)
    else:
        def g(a, w):
            return pbi(a, w, ideal, theta)
    assoc = [s if g(s, w) < g(a, w) else a for a, w in zip(state.assoc, state.weights)]
    return MoeadState(state.weights, assoc, ideal)


# -- indicator based ---------------------------------------------------------


def _with_adaptive_ref(indicator: IndicatorSpec, points: Sequence[Vector]) -> IndicatorSpec:
    return replace(indicator, reference_point=tuple(x + 1 for x in nadir_point(points)))


def indicator_mu1_update(
    members: list[Vector],
    s: Vector,
    capacity: int,
    indicator: IndicatorSpec,
    rng: random.Random,
    tie_policy: str = "reject_new",
    ref_policy: str = "fixed",
) -> list[Vector]:
    """Steady-state indicator selection on the last nondominated front.

    Duplicates are allowed. With ``ref_policy="adaptive"`` the hypervolume
    reference point is the nadir of the union plus one, recomputed each call.
    """
    union = members + [s]
    if len(union) <= capacity:
        return minimal_set(union)
    if indicator.kind == "hypervolume" and ref_policy == "adaptive":
        indicator = _with_adaptive_ref(indicator, union)
    last = front_indices(union)[-1]
    if len(last) == 1:
        worst = last
    else:
        front = [union[i] for i in last]
        losses = [indicator.loss(front[:k] + front[k + 1:]) for k in range(len(front))]
        low = min(losses)
        worst = [i for i, v in zip(last, losses) if v == low]
    new = len(union) - 1
    if tie_policy == "reject_new":
        if new in worst:
            return members
        victim = rng.choice(worst)
    else:
        victim = rng.choice(worst)
        if victim == new:
            return members
    return union[:victim] + union[victim + 1:]


def weak_compliant_update(members: list[Vector], s: Vector, capacity: int, indicator: IndicatorSpec) -> list[Vector]:
    """The four-rule archiver for weakly Pareto-compliant indicators.

    Rule 3 keeps the archive when the best swap merely ties the current
    value; among equally good swaps the earliest-archived member leaves.
    """
    if any(weakly_dominates(a, s) for a in members):
        return members
    merged = [a for a in members if not dominates(s, a)] + [s]
    if len(merged) <= capacity:
        return merged
    current = indicator.loss(members)
    swaps = [members[:k] + members[k + 1:] + [s] for k in range(len(members))]
    losses = [indicator.loss(c) for c in swaps]
    best = min(losses)
    if current <= best:
        return members
    return swaps[losses.index(best)]


# -- driver ------------------------------------------------------------------


class Archiver:
    """A configured archiver holding its current members.

    >>> arch = Archiver(ArchiverConfig("a_dom", capacity=2))
    >>> arch.update((1.0, 2.0)); arch.update((2.0, 1.0)); arch.update((0.0, 0.0))
    >>> arch.members
    [(0.0, 0.0)]
    """

    def __init__(self, config: ArchiverConfig, dimension: int | None = None):
        self.config = config
        self.rng = random.Random(config.rng_seed)
        self.dimension = dimension
        self.members: list[Vector] = []
        self.moead: MoeadState | None = None
        if config.kind == "moead" and (config.weights is not None or dimension is not None):
            self._init_moead(dimension)

    def _init_moead(self, dimension: int) -> None:
        weights = self.config.weights
        if weights is None:
            weights = tuple(uniform_weights(self.config.capacity, dimension))
        self.moead = MoeadState(tuple(weights), [], self.config.ideal)

    @property
    def capacity(self) -> int | None:
        if self.config.kind == "moead" and self.config.weights is not None:
            return len(self.config.weights)
        return self.config.capacity

    def snapshot(self) -> tuple[Vector, ...]:
        return tuple(self.members)

    def _check(self, s: Vector) -> Vector:
        s = tuple(float(x) for x in s)
        if self.dimension is None:
            self.dimension = len(s)
        elif len(s) != self.dimension:
            raise UsageError(f"solution {s} has dimension {len(s)}, archive has {self.dimension}")
        return s

    def update(self, s: Vector) -> None:
        s = self._check(s)
        c = self.config
        kind = c.kind
        if kind == "unbounded":
            self.members = unbounded_update(self.members, s)
        elif kind == "a_dom":
            self.members = a_dom_update(self.members, s, c.capacity)
        elif kind == "eps_box":
            if c.capacity is not None:
                raise UsageError("eps_box archives are not size-controlled; leave capacity unset")
            self.members = eps_box_update(self.members, s, c.epsilon, c.eps_mode)
        elif kind == "mga":
            self.members = mga_update(self.members, s, c.capacity, self.rng)
        elif kind == "nsga2":
            self.members = nsga2_update(self.members, s, c.capacity)
        elif kind == "moead":
            if self.moead is None:
                self._init_moead(len(s))
            self.moead = moead_update(self.moead, s, c.scalarizer, c.pbi_theta)
            self.members = self.moead.members
        elif kind == "indicator_mu1":
            self.members = indicator_mu1_update(
                self.members, s, c.capacity, c.indicator, self.rng, c.tie_policy, c.ref_policy
            )
        else:
            self.members = weak_compliant_update(self.members, s, c.capacity, c.indicator)

    def fold(self, batch: Batch | Sequence[Vector]) -> None:
        """Apply one batch, one solution at a time unless the archiver is batch-native."""
        sols = batch.solutions if isinstance(batch, Batch) else list(batch)
        if not sols:
            raise UsageError("empty batch")
        if self.config.kind == "nsga2" and self.config.batch_native:
            sols = [self._check(s) for s in sols]
            self.members = nsga2_batch_update(self.members, sols, self.config.capacity)
            return
        for s in sols:
            self.update(s)


def fold_batch(archiver: Archiver, batch: Batch) -> tuple[Vector, ...]:
    archiver.fold(batch)
    return archiver.snapshot()


def run(config: ArchiverConfig, batches: Sequence[Batch]) -> Trajectory:
    """Fold every batch into a fresh archiver and record each snapshot."""
    dim = len(batches[0].solutions[0]) if batches else None
    arch = Archiver(config, dimension=dim)
    snaps = [()]
    for b in batches:
        arch.fold(b)
        snaps.append(arch.snapshot())
    return Trajectory(batches, snaps, meta={"archiver": config.name, "seed": config.rng_seed})
