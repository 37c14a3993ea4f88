"""Ground sets, input sequences, the named deterioration scenarios and the sequence CSV codec."""
from __future__ import annotations

import csv
import math
import random
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .archivers import ArchiverConfig
from .core import Batch, UsageError, Vector, dominates, nadir_point
from .indicators import IndicatorSpec

SHAPES = ("linear", "concave", "convex", "disconnected", "degenerate")
ORDERS = ("shuffle", "lexicographic_sweep", "extremes_first", "replay")
SCENARIOS = ("fig1_crowding", "fig2_adom", "fig4_adaptive_hv")


class SequenceFormatError(UsageError):
    pass


@dataclass(frozen=True)
class FrontSpec:
    """How to build a finite ground set.

    ``scale`` stretches the unit front; with ``lattice=True`` every coordinate
    is rounded to an integer so that all later comparisons are exact.
    ``offset`` is added to every coordinate afterwards.
    """

    shape: str = "linear"
    dimension: int = 2
    n: int = 10
    noise: int = 0
    seed: int = 0
    scale: float = 10.0
    lattice: bool = True
    offset: float = 0.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise UsageError(f"unknown front shape {self.shape!r}")
        if self.n < 1 or self.dimension < 2 or self.noise < 0:
            raise UsageError("need n >= 1, dimension >= 2 and noise >= 0")
        if self.shape == "degenerate" and self.dimension < 3:
            raise UsageError("a degenerate front needs at least 3 objectives")


def _unit_point(shape: str, d: int, rng: random.Random) -> list[float]:
    if shape in ("linear", "disconnected"):
        while True:
            g = [rng.expovariate(1.0) for _ in range(d)]
            x = [v / sum(g) for v in g]
            if shape == "linear" or not 0.35 < x[0] < 0.65:
                return x
    if shape == "degenerate":
        t = rng.random()
        return [t, 1.0 - t] + [0.5] * (d - 2)
    g = [abs(rng.gauss(0.0, 1.0)) + 1e-12 for _ in range(d)]
    norm = math.sqrt(sum(v * v for v in g))
    u = [v / norm for v in g]
    return u if shape == "concave" else [1.0 - v for v in u]


def sample_ground_set(spec: FrontSpec) -> list[Vector]:
    """Return ``spec.n`` mutually nondominated points followed by ``spec.noise`` dominated ones."""
    rng = random.Random(spec.seed)
    d = spec.dimension
    flat = spec.shape == "degenerate" or (spec.shape == "linear" and d == 2)
    if spec.lattice and flat and spec.n > int(spec.scale) + 1:
        raise UsageError(f"cannot place {spec.n} nondominated points on a lattice of side {spec.scale}")
    front: list[Vector] = []
    tries = 0
    while len(front) < spec.n:
        tries += 1
        if tries > 2000 * spec.n:
            raise UsageError(f"cannot place {spec.n} distinct nondominated points for {spec}")
        x = [spec.scale * v for v in _unit_point(spec.shape, d, rng)]
        if spec.lattice:
            x = [float(round(v)) for v in x]
        p = tuple(v + spec.offset for v in x)
        if p in front or any(dominates(q, p) or dominates(p, q) for q in front):
            continue
        front.append(p)
    noise = []
    bump = max(1, int(spec.scale) // 5)
    for _ in range(spec.noise):
        base = rng.choice(front)
        if spec.lattice:
            noise.append(tuple(v + rng.randint(1, bump) for v in base))
        else:
            noise.append(tuple(v + rng.uniform(0.01, 0.2) * spec.scale for v in base))
    return front + noise


def random_ground_set(size: int, dimension: int, seed: int, high: int = 10, low: int = 1) -> list[Vector]:
    """``size`` uniform integer points in ``[low, high]^dimension`` (duplicates allowed)."""
    rng = random.Random(seed)
    return [tuple(float(rng.randint(low, high)) for _ in range(dimension)) for _ in range(size)]


@dataclass(frozen=True)
class OrderPolicy:
    kind: str = "shuffle"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ORDERS:
            raise UsageError(f"unknown order policy {self.kind!r}")


def _one_pass(points: list[Vector], policy: OrderPolicy, rng: random.Random) -> list[Vector]:
    if policy.kind == "replay":
        return list(points)
    if policy.kind == "lexicographic_sweep":
        return sorted(points)
    if policy.kind == "shuffle":
        out = list(points)
        rng.shuffle(out)
        return out
    d = len(points[0])
    firsts = []
    for m in range(d):
        best = min(range(len(points)), key=lambda i: (points[i][m], points[i]))
        if best not in firsts:
            firsts.append(best)
    rest = [i for i in range(len(points)) if i not in firsts]
    rng.shuffle(rest)
    return [points[i] for i in firsts + rest]


def order_and_batch(points: Sequence[Vector], policy: OrderPolicy | str = "shuffle", batch_size: int = 1,
                    passes: int = 1) -> list[Batch]:
    """Concatenate ``passes`` orderings of ``points`` and chunk them into batches."""
    if isinstance(policy, str):
        policy = OrderPolicy(policy)
    if batch_size < 1 or passes < 1:
        raise UsageError("batch_size and passes must be >= 1")
    if not points:
        raise UsageError("cannot order an empty ground set")
    pts = [tuple(float(v) for v in p) for p in points]
    rng = random.Random(policy.seed)
    flat = [p for _ in range(passes) for p in _one_pass(pts, policy, rng)]
    return [Batch(k + 1, flat[i:i + batch_size]) for k, i in enumerate(range(0, len(flat), batch_size))]


def singletons(points: Sequence[Vector]) -> list[Batch]:
    return [Batch(k + 1, [tuple(float(v) for v in p)]) for k, p in enumerate(points)]


@dataclass
class Scenario:
    """A hand-built sequence, the archiver it breaks and what the checkers should find.

    ``expected`` lists the anytime properties violated by ``config``;
    ``control`` (when set) is an archiver that must stay clean on the same
    sequence.
    """

    name: str
    batches: list[Batch]
    config: ArchiverConfig
    expected: frozenset[str]
    control: ArchiverConfig | None = None
    notes: dict = field(default_factory=dict)


_FIG1 = [(0, 10), (2, 7), (10, 0), (6, 2), (4, 7.5)]
_FIG2 = [(4, 5), (5, 4), (1, 8), (3, 3), (2, 9)]
# a, b, c, d, e of the adaptive-reference example; with the reference at
# nadir + 1 the contributions are 2,3,3 / 9,3,3.5 / 2,1.5,2
_FIG4 = [(0, 1), (2, 0), (5, -3), (-1.5, 3), (0, 2)]


def scenario(name: str) -> Scenario:
    if name == "fig1_crowding":
        return Scenario(
            name,
            singletons(_FIG1),
            ArchiverConfig("nsga2", capacity=3, name="nsga2"),
            frozenset({"pareto_subset", "point_monotone", "set_monotone"}),
            notes={"better_pair": [3, 5]},
        )
    if name == "fig2_adom":
        return Scenario(
            name,
            singletons(_FIG2),
            ArchiverConfig("a_dom", capacity=2, name="a_dom"),
            frozenset({"pareto_subset"}),
            notes={"archived": [2.0, 9.0], "dominated_by": [1.0, 8.0]},
        )
    if name == "fig4_adaptive_hv":
        batches = singletons(_FIG4)
        ref = tuple(x + 1 for x in nadir_point([b.solutions[0] for b in batches]))
        hv = IndicatorSpec("hypervolume", reference_point=ref)
        return Scenario(
            name,
            batches,
            ArchiverConfig("indicator_mu1", capacity=2, indicator=hv, ref_policy="adaptive", name="sms_emoa"),
            frozenset({"pareto_subset", "point_monotone", "set_monotone"}),
            control=ArchiverConfig("indicator_mu1", capacity=2, indicator=hv, ref_policy="fixed", name="a_hv"),
            notes={"better_pair": [2, 5]},
        )
    raise UsageError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")


def _fmt(x: float) -> str:
    return repr(float(x))


def write_sequence(batches: Sequence[Batch], path: str | Path) -> None:
    """Write ``batches`` as CSV: header ``t,f1..fd`` and one solution per row."""
    if not batches:
        raise UsageError("cannot write an empty sequence")
    d = len(batches[0].solutions[0])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"f{i + 1}" for i in range(d)])
        for b in batches:
            for s in b.solutions:
                if len(s) != d:
                    raise SequenceFormatError(f"solution {s} in batch {b.timestep} has dimension {len(s)}, expected {d}")
                w.writerow([str(b.timestep)] + [_fmt(v) for v in s])


def read_sequence(path: str | Path) -> list[Batch]:
    """Parse a sequence CSV; consecutive rows sharing ``t`` form one batch."""
    path = Path(path)
    if not path.exists():
        raise UsageError(f"sequence file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SequenceFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if d < 2 or header[0] != "t" or header[1:] != [f"f{i + 1}" for i in range(d)]:
        raise SequenceFormatError(f"{path}:1: header must be t,f1,...,fd with d >= 2, got {','.join(header)}")
    groups: list[tuple[int, list[Vector]]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != d + 1:
            raise SequenceFormatError(f"{path}:{lineno}: expected {d + 1} fields, got {len(row)}")
        try:
            t = int(row[0])
            vals = tuple(float(v) for v in row[1:])
        except ValueError as exc:
            raise SequenceFormatError(f"{path}:{lineno}: {exc}") from None
        if t < 0:
            raise SequenceFormatError(f"{path}:{lineno}: negative batch index {t}")
        if not all(math.isfinite(v) for v in vals):
            raise SequenceFormatError(f"{path}:{lineno}: non-finite objective value")
        if groups and t < groups[-1][0]:
            raise SequenceFormatError(f"{path}:{lineno}: batch index {t} decreases (previous {groups[-1][0]})")
        if groups and groups[-1][0] == t:
            groups[-1][1].append(vals)
        else:
            groups.append((t, [vals]))
    if not groups:
        raise SequenceFormatError(f"{path}: no solutions")
    return [Batch(t, sols) for t, sols in groups]
