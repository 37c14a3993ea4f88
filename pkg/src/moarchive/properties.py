"""Checkers for anytime and limit archiver properties.

Trajectories are scanned with per-vector bitmasks: every distinct vector gets
an id, and ``covers[i]`` is the mask of ids weakly dominated by vector ``i``.
Set comparisons then reduce to a few integer operations.
"""
from __future__ import annotations

import itertools
import random
from collections.abc import Sequence
from dataclasses import dataclass, field

from .archivers import Archiver, ArchiverConfig
from .core import Trajectory, UsageError, Vector, dominates, minimal_set, weakly_dominates
from .indicators import IndicatorSpec

ANYTIME = ("pareto_subset", "point_monotone", "set_monotone")
LEMMAS = ("lemma1_monotone", "lemma2_no_revisit")


@dataclass
class ViolationReport:
    property: str
    witnesses: list[dict] = field(default_factory=list)

    @property
    def held(self) -> bool:
        return not self.witnesses

    def to_json(self) -> dict:
        return {"property": self.property, "held": self.held, "witnesses": self.witnesses}


@dataclass
class LimitVerdict:
    stabilized: bool
    stable_at: int | None
    is_pareto_subset: bool
    is_optimal: bool
    budget_exhausted: bool
    archive: list[Vector] = field(default_factory=list)
    draws: int = 0

    def to_json(self) -> dict:
        return {
            "stabilized": self.stabilized,
            "stable_at": self.stable_at,
            "is_pareto_subset": self.is_pareto_subset,
            "is_optimal": self.is_optimal,
            "budget_exhausted": self.budget_exhausted,
            "draws": self.draws,
            "archive": [list(p) for p in self.archive],
        }


class _Index:
    """Distinct-vector ids with weak and strict dominance masks."""

    def __init__(self, vectors):
        self.vecs: list[Vector] = list(dict.fromkeys(vectors))
        self.ids = {v: i for i, v in enumerate(self.vecs)}
        n = len(self.vecs)
        self.covers = [0] * n
        self.beats = [0] * n
        for i, a in enumerate(self.vecs):
            for j, b in enumerate(self.vecs):
                if weakly_dominates(a, b):
                    self.covers[i] |= 1 << j
                    if i != j:
                        self.beats[i] |= 1 << j

    def mask(self, points) -> int:
        m = 0
        for p in points:
            m |= 1 << self.ids[p]
        return m

    def cover(self, mask: int) -> int:
        c = 0
        i = 0
        while mask:
            if mask & 1:
                c |= self.covers[i]
            mask >>= 1
            i += 1
        return c


def _better_masks(a: int, cov_a: int, b: int, cov_b: int) -> bool:
    return (b & ~cov_a) == 0 and (a & ~cov_b) != 0


def _vec(p) -> list[float]:
    return list(p)


def check_anytime(traj: Trajectory) -> dict[str, ViolationReport]:
    """Scan a trajectory for Pareto-subset, point-monotone and set-monotone violations.

    One witness is stored per offending (vector, dominator) pair for the first
    two properties, and per ordered pair of distinct archive states for the
    third, always at the earliest snapshots that exhibit it.
    """
    if not traj.batches:
        raise UsageError("empty trajectory")
    k_max = len(traj) - 1
    mins = [tuple(dict.fromkeys(minimal_set(s))) if s else () for s in traj.snapshots]
    seen_at: dict[Vector, int] = {}
    for k, b in enumerate(traj.batches, start=1):
        for s in b.solutions:
            seen_at.setdefault(s, k)
    idx = _Index(list(seen_at) + [p for s in traj.snapshots for p in s])

    reports = {p: ViolationReport(p) for p in ANYTIME}

    # pareto_subset: earliest snapshot at which each vector has a seen dominator
    first_beaten: dict[Vector, tuple[int, Vector]] = {}
    for v in {p for m in mins for p in m}:
        best = None
        for s, k in seen_at.items():
            if dominates(s, v) and (best is None or k < best[0]):
                best = (k, s)
        if best is not None:
            first_beaten[v] = best
    reported = set()
    for k in range(1, k_max + 1):
        for v in mins[k]:
            hit = first_beaten.get(v)
            if hit and hit[0] <= k and (v, hit[1]) not in reported:
                reported.add((v, hit[1]))
                reports["pareto_subset"].witnesses.append(
                    {"t": k, "archived": _vec(v), "dominated_by": _vec(hit[1]), "seen_at": hit[0]}
                )

    # point_monotone: a in min(A(t)) strictly dominates a' in min(A(t')), t < t'
    present: dict[Vector, list[int]] = {}
    for k in range(1, k_max + 1):
        for v in mins[k]:
            present.setdefault(v, []).append(k)
    for a, ks_a in present.items():
        t = ks_a[0]
        for a2, ks_b in present.items():
            if a2 == a or not dominates(a, a2):
                continue
            later = next((k for k in ks_b if k > t), None)
            if later is not None:
                reports["point_monotone"].witnesses.append(
                    {"t": t, "t_prime": later, "earlier": _vec(a), "later": _vec(a2)}
                )

    # set_monotone: A(t) better than A(t'), t < t', over runs of equal states
    runs: list[tuple[int, int, int]] = []  # (start snapshot, mask, cover)
    for k in range(1, k_max + 1):
        if not traj.snapshots[k]:
            continue
        m = idx.mask(traj.snapshots[k])
        if runs and runs[-1][1] == m:
            continue
        runs.append((k, m, idx.cover(m)))
    found = set()
    for i, (t, ma, ca) in enumerate(runs):
        for t2, mb, cb in runs[i + 1:]:
            if (ma, mb) in found:
                continue
            if _better_masks(ma, ca, mb, cb):
                found.add((ma, mb))
                reports["set_monotone"].witnesses.append(
                    {
                        "t": t,
                        "t_prime": t2,
                        "earlier": [_vec(p) for p in traj.snapshots[t]],
                        "later": [_vec(p) for p in traj.snapshots[t2]],
                    }
                )
    return reports


def check_lemmas(traj: Trajectory, indicator: IndicatorSpec) -> dict[str, ViolationReport]:
    """Check the never-degrades and no-revisit lemmas on a trajectory.

    Indicator values are compared exactly in smaller-is-better orientation.
    """
    reports = {p: ViolationReport(p) for p in LEMMAS}
    snaps = traj.snapshots
    losses = [indicator.loss(s) if s else None for s in snaps]
    for k in range(1, len(snaps) - 1):
        if losses[k] is not None and losses[k + 1] is not None and losses[k + 1] > losses[k]:
            reports["lemma1_monotone"].witnesses.append(
                {"t": k, "t_prime": k + 1, "before": losses[k], "after": losses[k + 1]}
            )
    # runs of set-equal states; a state that reappears after a change is a revisit
    runs: list[tuple[int, frozenset]] = []
    for k in range(1, len(snaps)):
        state = frozenset(snaps[k])
        if runs and runs[-1][1] == state:
            continue
        runs.append((k, state))
    first_run: dict[frozenset, int] = {}
    for r, (k, state) in enumerate(runs):
        if state in first_run:
            r0 = first_run[state]
            reports["lemma2_no_revisit"].witnesses.append(
                {"t": runs[r0][0], "t_changed": runs[r0 + 1][0], "t_revisit": k, "archive": [_vec(p) for p in state]}
            )
        else:
            first_run[state] = r
    return reports


def _distinct(points) -> list[Vector]:
    return list(dict.fromkeys(tuple(p) for p in points))


def is_optimal_brute(archive: Sequence[Vector], ground: Sequence[Vector], capacity: int) -> bool:
    """Exhaustive check: no subset of ``ground`` with at most ``capacity`` members is better."""
    A = [tuple(a) for a in archive]
    if not A or len(minimal_set(A)) != len(A):
        return False
    idx = _Index(_distinct(ground))
    ma = idx.mask(A)
    ca = idx.cover(ma)
    n = len(idx.vecs)
    for size in range(1, min(capacity, n) + 1):
        for combo in itertools.combinations(range(n), size):
            mb = 0
            cb = 0
            for i in combo:
                mb |= 1 << i
                cb |= idx.covers[i]
            if _better_masks(mb, cb, ma, ca):
                return False
    return True


def is_optimal_fast(archive: Sequence[Vector], ground: Sequence[Vector], capacity: int) -> bool:
    """Structural check: members are Pareto optimal and there are as many as possible.

    The archive must be nondominated, contained in the minimal set of
    ``ground``, and hold ``min(capacity, |distinct minimal set|)`` distinct
    vectors. Duplicates only matter through that count.
    """
    A = [tuple(a) for a in archive]
    if not A or len(minimal_set(A)) != len(A):
        return False
    front = set(minimal_set(_distinct(ground)))
    distinct = set(A)
    return distinct <= front and len(distinct) == min(capacity, len(front))


def is_optimal_approximation(archive: Sequence[Vector], ground: Sequence[Vector], capacity: int,
                             method: str = "auto") -> bool:
    """Whether ``archive`` is an optimal approximation of bounded size ``capacity`` of ``ground``.

    ``method`` is ``"brute"``, ``"fast"`` or ``"auto"`` (brute force when
    ``|ground| <= 12`` and ``capacity <= 4``, otherwise the fast path).
    """
    ground_set = {tuple(y) for y in ground}
    for a in archive:
        if tuple(a) not in ground_set:
            raise UsageError(f"archive member {tuple(a)} is not in the ground set")
    if len(archive) > capacity:
        raise UsageError(f"archive holds {len(archive)} > {capacity} members")
    if method == "auto":
        method = "brute" if len(ground_set) <= 12 and capacity <= 4 else "fast"
    if method == "brute":
        return is_optimal_brute(archive, ground, capacity)
    if method == "fast":
        return is_optimal_fast(archive, ground, capacity)
    raise UsageError(f"unknown method {method!r}")


def run_limit_experiment(
    config: ArchiverConfig,
    ground: Sequence[Vector],
    seed: int = 0,
    stability_window: int | None = None,
    budget: int | None = None,
    capacity: int | None = None,
) -> LimitVerdict:
    """Feed uniform draws from ``ground`` until the archive stops changing.

    The archive is stable once it has been set-equal for ``stability_window``
    consecutive draws (default ``50 * |ground|``). Running out of ``budget``
    draws (default ``10_000 * |ground|``) leaves the verdict open. ``capacity``
    overrides the size bound used for the optimality check, which is needed
    for archivers without one.
    """
    Y = [tuple(float(x) for x in y) for y in ground]
    if not Y:
        raise UsageError("empty ground set")
    window = stability_window if stability_window is not None else 50 * len(Y)
    if window < len(Y):
        raise UsageError("stability window must be at least |Y|")
    budget = budget if budget is not None else 10_000 * len(Y)
    rng = random.Random(seed)
    arch = Archiver(config, dimension=len(Y[0]))
    state: frozenset = frozenset()
    since = 0
    stable_at = 0
    for draw in range(1, budget + 1):
        arch.update(rng.choice(Y))
        new = frozenset(arch.members)
        if new == state:
            since += 1
        else:
            state, since, stable_at = new, 0, draw
        if since >= window:
            A = list(arch.members)
            front = minimal_set(A)
            n = capacity if capacity is not None else arch.capacity
            y_front = set(minimal_set(_distinct(Y)))
            optimal = n is not None and len(front) <= n and is_optimal_approximation(front, Y, n)
            return LimitVerdict(True, stable_at, set(front) <= y_front, optimal, False, A, draw)
    return LimitVerdict(False, None, False, False, True, list(arch.members), budget)

