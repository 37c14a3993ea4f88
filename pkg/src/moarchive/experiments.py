"""Experiment configs and the run / compare / classify drivers behind the CLI."""
from __future__ import annotations

import csv
import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

from .archivers import ArchiverConfig, run
from .core import Batch, Trajectory, UsageError, Vector, flatten, ideal_point, minimal_set, sequence_dimension
from .indicators import KINDS as INDICATOR_KINDS
from .indicators import IndicatorSpec
from .properties import ANYTIME, check_anytime, check_lemmas, run_limit_experiment
from .sequences import (
    FrontSpec,
    OrderPolicy,
    order_and_batch,
    random_ground_set,
    read_sequence,
    sample_ground_set,
    scenario,
    singletons,
    write_sequence,
)

SCHEMA_VERSION = 1


def _distinct(points) -> list[Vector]:
    return list(dict.fromkeys(tuple(p) for p in points))


def _jsonable(x):
    """Replace non-finite floats so reports stay strict JSON."""
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def dump_json(data, path: Path) -> None:
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


# -- config parsing ----------------------------------------------------------


def archiver_from_json(data: dict, ground: Sequence[Vector], seed: int) -> ArchiverConfig:
    """Build an :class:`ArchiverConfig`, filling indicator and ideal settings from ``ground``."""
    if "kind" not in data:
        raise UsageError(f"archiver entry without 'kind': {data}")
    kw = dict(data)
    kw.setdefault("rng_seed", seed)
    ind = kw.pop("indicator", None)
    if ind is not None:
        if isinstance(ind, str):
            ind = {"kind": ind}
        if ind.get("kind") not in INDICATOR_KINDS:
            raise UsageError(f"unknown indicator {ind.get('kind')!r}")
        explicit = any(k in ind for k in ("reference_point", "reference_set", "weights", "utopian"))
        kw["indicator"] = IndicatorSpec.from_json(ind) if explicit else IndicatorSpec.for_ground_set(ind["kind"], ground)
    ideal = kw.get("ideal")
    if ideal == "ground":
        kw["ideal"] = ideal_point(ground)
    elif ideal is not None:
        kw["ideal"] = tuple(float(v) for v in ideal)
    if kw.get("weights") is not None:
        kw["weights"] = tuple(tuple(float(v) for v in w) for w in kw["weights"])
    try:
        return ArchiverConfig(**kw)
    except TypeError as exc:
        raise UsageError(f"bad archiver entry {data}: {exc}") from None


def load_source(source: dict, base: Path, seed: int) -> tuple[list[Batch], list[Vector], str]:
    """Resolve a sequence source to (batches, ground set, label)."""
    if not isinstance(source, dict) or len(source) != 1:
        raise UsageError("source must be one of {'scenario': ...}, {'file': ...}, {'generator': {...}}")
    (kind, val), = source.items()
    if kind == "scenario":
        sc = scenario(val)
        return sc.batches, _distinct(flatten(sc.batches)), f"scenario:{val}"
    if kind == "file":
        path = Path(val)
        if not path.is_absolute():
            path = base / path
        batches = read_sequence(path)
        return batches, _distinct(flatten(batches)), f"file:{val}"
    if kind == "generator":
        gen = dict(val)
        gseed = gen.get("seed", seed)
        if "front" in gen:
            spec = dict(gen["front"])
            spec.setdefault("seed", gseed)
            ground = sample_ground_set(FrontSpec(**spec))
        elif "random" in gen:
            r = dict(gen["random"])
            ground = random_ground_set(r.get("size", 20), r.get("dimension", 2), r.get("seed", gseed),
                                       high=r.get("high", 10), low=r.get("low", 1))
        else:
            raise UsageError("generator needs a 'front' or 'random' entry")
        order = gen.get("order", "shuffle")
        order = OrderPolicy(order, gseed) if isinstance(order, str) else OrderPolicy(order["kind"], order.get("seed", gseed))
        batches = order_and_batch(ground, order, gen.get("batch_size", 1), gen.get("passes", 1))
        return batches, _distinct(ground), "generator"
    raise UsageError(f"unknown source kind {kind!r}")


@dataclass
class ExperimentConfig:
    archivers: list[dict]
    source: dict
    metrics: list = field(default_factory=lambda: list(INDICATOR_KINDS))
    checks: list[str] = field(default_factory=lambda: ["anytime"])
    seed: int = 0
    out: str = "out"
    limit: dict = field(default_factory=dict)
    classify: dict = field(default_factory=dict)
    base: Path = Path(".")

    @classmethod
    def load(cls, path: str | Path, require_source: bool = True) -> ExperimentConfig:
        path = Path(path)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_dict(data, base=path.parent, require_source=require_source)

    @classmethod
    def from_dict(cls, data: dict, base: Path = Path("."), require_source: bool = True) -> ExperimentConfig:
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise UsageError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
        unknown = set(data) - {"schema_version", "archivers", "source", "metrics", "checks", "seed", "out",
                               "limit", "classify"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        checks = data.get("checks", ["anytime"])
        bad = set(checks) - {"anytime", "lemmas", "limit"}
        if bad:
            raise UsageError(f"unknown checks: {sorted(bad)}")
        if require_source:
            if not data.get("archivers"):
                raise UsageError("config needs at least one archiver")
            if "source" not in data:
                raise UsageError("config needs a sequence source")
        return cls(
            archivers=list(data.get("archivers", [])),
            source=data.get("source", {}),
            metrics=list(data.get("metrics", INDICATOR_KINDS)),
            checks=list(checks),
            seed=int(data.get("seed", 0)),
            out=data.get("out", "out"),
            limit=dict(data.get("limit", {})),
            classify=dict(data.get("classify", {})),
            base=base,
        )


def metric_specs(metrics: list, ground: Sequence[Vector]) -> list[IndicatorSpec]:
    specs = []
    for m in metrics:
        if isinstance(m, str):
            specs.append(IndicatorSpec.for_ground_set(m, ground))
        elif set(m) <= {"kind", "name"}:
            spec = IndicatorSpec.for_ground_set(m["kind"], ground)
            specs.append(replace(spec, name=m.get("name", m["kind"])))
        else:
            specs.append(IndicatorSpec.from_json(m))
    return specs


# -- output files ------------------------------------------------------------


def write_trajectory(traj: Trajectory, path: Path) -> None:
    d = len(traj.batches[0].solutions[0])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["snapshot", "t"] + [f"f{i + 1}" for i in range(d)])
        for k, snap in enumerate(traj.snapshots):
            for p in snap:
                w.writerow([k, traj.timestep(k)] + [repr(float(v)) for v in p])


def read_trajectory(path: Path, batches: Sequence[Batch]) -> Trajectory:
    """Rebuild a trajectory from its CSV and the sequence that produced it."""
    snaps: list[list[Vector]] = [[] for _ in range(len(batches) + 1)]
    with open(path, newline="", encoding="utf-8") as fh:
        rows = csv.reader(fh)
        next(rows)
        for row in rows:
            snaps[int(row[0])].append(tuple(float(v) for v in row[2:]))
    return Trajectory(batches, snaps)


def write_metrics(traj: Trajectory, specs: Sequence[IndicatorSpec], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["snapshot", "t"] + [s.name for s in specs])
        for k, snap in enumerate(traj.snapshots):
            if snap:
                w.writerow([k, traj.timestep(k)] + [repr(s.value(snap)) for s in specs])


# -- run ---------------------------------------------------------------------


def _limit_verdicts(cfg: ArchiverConfig, ground: Sequence[Vector], limit: dict, seed: int) -> list[dict]:
    seeds = limit.get("seeds", 5)
    out = []
    for i in range(seeds):
        v = run_limit_experiment(
            cfg, ground, seed=seed + i,
            stability_window=limit.get("stability_window"),
            budget=limit.get("budget"),
            capacity=limit.get("capacity"),
        )
        out.append({"seed": seed + i, **v.to_json()})
    return out


def run_experiment(config: ExperimentConfig, out: Path) -> dict:
    """Run every archiver over the configured sequence and write all outputs to ``out``."""
    batches, ground, label = load_source(config.source, config.base, config.seed)
    sequence_dimension(batches)
    specs = metric_specs(config.metrics, ground)
    out.mkdir(parents=True, exist_ok=True)
    write_sequence(batches, out / "sequence.csv")
    report = {"schema_version": SCHEMA_VERSION, "command": "run", "seed": config.seed, "source": label,
              "archivers": {}, "violations": 0}
    names = set()
    for entry in config.archivers:
        cfg = archiver_from_json(entry, ground, config.seed)
        if cfg.name in names:
            raise UsageError(f"duplicate archiver name {cfg.name!r}")
        names.add(cfg.name)
        traj = run(cfg, batches)
        write_trajectory(traj, out / f"{cfg.name}.trajectory.csv")
        write_metrics(traj, specs, out / f"{cfg.name}.metrics.csv")
        rec: dict = {"kind": cfg.kind, "final_archive": [list(p) for p in traj.snapshots[-1]], "checks": {}}
        count = 0
        if "anytime" in config.checks:
            for prop, rep in check_anytime(traj).items():
                rec["checks"][prop] = rep.to_json()
                count += len(rep.witnesses)
        if "lemmas" in config.checks and cfg.kind == "weak_compliant":
            for prop, rep in check_lemmas(traj, cfg.indicator).items():
                rec["checks"][prop] = rep.to_json()
                count += len(rep.witnesses)
        if "limit" in config.checks:
            rec["limit"] = _limit_verdicts(cfg, ground, config.limit, config.seed)
        rec["violation_count"] = count
        report["archivers"][cfg.name] = rec
        report["violations"] += count
    dump_json(report, out / "report.json")
    return report


# -- compare -----------------------------------------------------------------


def _ratio(value: float, reference: float, maximised: bool) -> float:
    num, den = (reference, value) if maximised else (value, reference)
    if num == den:
        return 1.0
    if den == 0:
        return math.inf
    return num / den


def compare(config: ExperimentConfig, out: Path) -> dict:
    """Final metric values per archiver, and ratios against the unbounded archive."""
    if len(config.archivers) < 2:
        raise UsageError("compare needs at least two archivers")
    batches, ground, label = load_source(config.source, config.base, config.seed)
    specs = metric_specs(config.metrics, ground)
    reference = minimal_set(run(ArchiverConfig("unbounded"), batches).snapshots[-1])
    ref_values = {s.name: s.value(reference) for s in specs}
    rows = {}
    for entry in config.archivers:
        cfg = archiver_from_json(entry, ground, config.seed)
        traj = run(cfg, batches)
        final = traj.snapshots[-1]
        reps = check_anytime(traj)
        rows[cfg.name] = {
            "kind": cfg.kind,
            "size": len(final),
            "metrics": {
                s.name: {"final": s.value(final), "ratio_vs_unbounded": _ratio(s.value(final), ref_values[s.name], s.maximised)}
                for s in specs
            },
            "violations": {p: len(reps[p].witnesses) for p in ANYTIME},
        }
    report = {"schema_version": SCHEMA_VERSION, "command": "compare", "seed": config.seed, "source": label,
              "unbounded": {"size": len(reference), "metrics": ref_values}, "archivers": rows}
    out.mkdir(parents=True, exist_ok=True)
    dump_json(report, out / "compare.json")
    text = render_compare(report)
    (out / "compare.txt").write_text(text, encoding="utf-8")
    return report


def _fmt(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.6g}"
    return str(v)


def _table(header: list[str], body: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in [header] + body]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_compare(report: dict) -> str:
    metrics = list(report["unbounded"]["metrics"])
    header = ["archiver", "size"] + [f"{m} (ratio)" for m in metrics] + list(ANYTIME)
    body = []
    for name, row in report["archivers"].items():
        cells = [name, str(row["size"])]
        for m in metrics:
            v = row["metrics"][m]
            cells.append(f"{_fmt(v['final'])} ({_fmt(v['ratio_vs_unbounded'])})")
        cells += [str(row["violations"][p]) for p in ANYTIME]
        body.append(cells)
    ub = report["unbounded"]
    body.append(["unbounded", str(ub["size"])] + [f"{_fmt(ub['metrics'][m])} (1)" for m in metrics] + ["-"] * 3)
    return _table(header, body)


# -- classify ----------------------------------------------------------------

PROPERTIES = ANYTIME + ("limit_stable", "limit_pareto_subset", "limit_optimal")

DEFAULT_ROWS = (
    "nsga2", "a_dom", "eps_approx", "eps_pareto", "moead_pbi", "moead_tch",
    "a_r2", "a_hv", "sms_emoa", "mga", "weak_eps", "weak_igd",
)

# properties whose guarantee depends on a reference point staying put
_CONDITIONAL = {"sms_emoa": set(PROPERTIES) - {"pareto_subset", "point_monotone"}}

# scenario replayed against a row in addition to the random sequences
_CRAFTED = {
    "nsga2": "fig1_crowding",
    "a_dom": "fig2_adom",
    "sms_emoa": "fig4_adaptive_hv",
    "a_hv": "fig4_adaptive_hv",
}
# one weight at (0.5, 0.5): the penalty term lets (2,3) displace (1,3)
PBI_CRAFTED = [(0.0, 10.0), (10.0, 0.0), (1.0, 3.0), (2.0, 3.0)]


def row_config(row: str, capacity: int, ground: Sequence[Vector], seed: int, epsilon: float = 0.1) -> ArchiverConfig:
    """The archiver behind one row of the classification matrix."""
    hv = IndicatorSpec.for_ground_set("hypervolume", ground)
    if row == "nsga2":
        return ArchiverConfig("nsga2", capacity, name=row)
    if row == "a_dom":
        return ArchiverConfig("a_dom", capacity, name=row)
    if row in ("eps_approx", "eps_pareto"):
        return ArchiverConfig("eps_box", None, epsilon=epsilon, eps_mode=row[4:], name=row)
    if row == "moead_pbi":
        return ArchiverConfig("moead", capacity, scalarizer="pbi", name=row)
    if row == "moead_tch":
        return ArchiverConfig("moead", capacity, scalarizer="tch", ideal=ideal_point(ground), name=row)
    if row == "a_r2":
        return ArchiverConfig("indicator_mu1", capacity, indicator=IndicatorSpec.for_ground_set("r2", ground),
                              rng_seed=seed, name=row)
    if row == "a_hv":
        return ArchiverConfig("indicator_mu1", capacity, indicator=hv, rng_seed=seed, name=row)
    if row == "sms_emoa":
        return ArchiverConfig("indicator_mu1", capacity, indicator=hv, ref_policy="adaptive", rng_seed=seed, name=row)
    if row == "mga":
        return ArchiverConfig("mga", capacity, rng_seed=seed, name=row)
    if row == "weak_eps":
        return ArchiverConfig("weak_compliant", capacity,
                              indicator=IndicatorSpec.for_ground_set("epsilon_additive", ground), name=row)
    if row == "weak_igd":
        return ArchiverConfig("weak_compliant", capacity,
                              indicator=IndicatorSpec.for_ground_set("igd_plus", ground), name=row)
    raise UsageError(f"unknown classify row {row!r}")


_SHAPE_CYCLE = ("linear", "concave", "convex", "disconnected")
_CAPACITIES = (2, 3, 5, 8, 10)


def random_instance(i: int, seed: int, max_ground: int = 30, dimensions=(2, 3)) -> tuple[list[Vector], int, list[Batch]]:
    """Deterministic random instance ``i``: ground set, capacity and a two-pass shuffled sequence."""
    import random

    rng = random.Random(f"{seed}:{i}")
    d = dimensions[i % len(dimensions)]
    size = rng.randint(min(10, max_ground), max_ground)
    if i % 3 == 0:
        ground = random_ground_set(size, d, rng.randrange(2**31), high=10)
    else:
        n = max(2, size * 2 // 3)
        spec = FrontSpec(_SHAPE_CYCLE[i % 4], d, n, noise=size - n, seed=rng.randrange(2**31), scale=60, offset=1)
        ground = sample_ground_set(spec)
    capacity = _CAPACITIES[i % len(_CAPACITIES)]
    batches = order_and_batch(ground, OrderPolicy("shuffle", rng.randrange(2**31)), 1, 2)
    return ground, capacity, batches


def limit_ground(j: int, seed: int, size: int = 20) -> list[Vector]:
    d = 2 + j % 2
    if j % 2 == 0:
        return random_ground_set(size, d, seed * 7919 + j, high=8)
    n = size * 3 // 4
    return sample_ground_set(FrontSpec(_SHAPE_CYCLE[j % 4], d, n, noise=size - n, seed=seed * 7919 + j, scale=60, offset=1))


def _crafted_runs(row: str) -> list[tuple[str, Trajectory]]:
    out = []
    if row in _CRAFTED:
        sc = scenario(_CRAFTED[row])
        ground = _distinct(flatten(sc.batches))
        cap = sc.config.capacity
        out.append((sc.name, run(row_config(row, cap, ground, 0), sc.batches)))
    if row == "moead_pbi":
        batches = singletons(PBI_CRAFTED)
        out.append(("pbi_crafted", run(row_config(row, 1, PBI_CRAFTED, 0), batches)))
    return out


def classify(settings: dict | None = None, seed: int = 0, progress=None) -> dict:
    """Estimate the property matrix: anytime checks on random and crafted
    sequences, limit experiments on finite ground sets.

    "violated" always comes with a stored witness; "held" only means none was
    found within the budget.
    """
    s = dict(settings or {})
    rows = s.get("rows", list(DEFAULT_ROWS))
    n_seq = s.get("sequences", 200)
    n_lim = s.get("limit_seeds", 20)
    max_ground = s.get("max_ground", 30)
    dims = tuple(s.get("dimensions", (2, 3)))
    lim_size = s.get("limit_ground", 20)
    lim_cap = s.get("limit_capacity", 5)
    window = s.get("window_factor", 50) * lim_size
    budget = s.get("budget_factor", 200) * lim_size
    epsilon = s.get("epsilon", 0.1)

    instances = [random_instance(i, seed, max_ground, dims) for i in range(n_seq)]
    grounds = [limit_ground(j, seed, lim_size) for j in range(n_lim)]
    matrix: dict[str, dict] = {}
    for row in rows:
        if progress:
            progress(row)
        cells = {p: {"status": "held", "witness": None, "runs": 0} for p in PROPERTIES}

        def note(prop, witness, source):
            cell = cells[prop]
            if cell["witness"] is None:
                cell["witness"] = {"source": source, **witness}

        runs = _crafted_runs(row)
        for i, (ground, cap, batches) in enumerate(instances):
            runs.append((f"random:{i}", run(row_config(row, cap, ground, seed + i, epsilon), batches)))
        for source, traj in runs:
            reps = check_anytime(traj)
            for p in ANYTIME:
                cells[p]["runs"] += 1
                if reps[p].witnesses:
                    w = reps[p].witnesses[0]
                    note(p, {**w, "sequence": [list(x) for x in flatten(traj.batches)]}, source)

        stable_all = True
        for j, ground in enumerate(grounds):
            cfg = row_config(row, lim_cap, ground, seed + j, epsilon)
            v = run_limit_experiment(cfg, ground, seed=seed + j, stability_window=window, budget=budget,
                                     capacity=lim_cap)
            for p in PROPERTIES[3:]:
                cells[p]["runs"] += 1
            if not v.stabilized:
                stable_all = False
                continue
            base = {"ground": [list(y) for y in ground], "seed": seed + j, "archive": [list(a) for a in v.archive],
                    "stable_at": v.stable_at}
            if not v.is_pareto_subset:
                note("limit_pareto_subset", base, f"limit:{j}")
            if not v.is_optimal:
                note("limit_optimal", base, f"limit:{j}")

        for p, cell in cells.items():
            if cell["witness"] is not None:
                cell["status"] = "violated"
            elif p in PROPERTIES[3:] and not stable_all:
                cell["status"] = "inconclusive"
            elif p in _CONDITIONAL.get(row, ()):
                cell["status"] = "inconclusive"
        matrix[row] = cells
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "classify",
        "seed": seed,
        "settings": {"rows": rows, "sequences": n_seq, "limit_seeds": n_lim, "max_ground": max_ground,
                     "dimensions": list(dims), "limit_ground": lim_size, "limit_capacity": lim_cap,
                     "stability_window": window, "budget": budget, "epsilon": epsilon},
        "matrix": matrix,
    }


def render_matrix(report: dict) -> str:
    header = ["archiver"] + list(PROPERTIES)
    body = [[row] + [cells[p]["status"] for p in PROPERTIES] for row, cells in report["matrix"].items()]
    return _table(header, body)


def write_classify(report: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    dump_json(report, out / "classify.json")
    (out / "matrix.txt").write_text(render_matrix(report), encoding="utf-8")
