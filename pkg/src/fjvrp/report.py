"""Batch pipeline over days and payloads, plus the table, timing and geometry dumps."""

from __future__ import annotations

import csv
import io
import logging
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .assign import Assignment, NoFeasibleAssignment, extra_mileage, select_seeds, solve_assignment
from .geom import Point, degrees_to_miles
from .instance import (
    DailyInstance,
    NodeExceedsCapacity,
    UnitMap,
    VehicleConfig,
    build_daily_instances,
    global_bbox,
    parse_missions_csv,
    read_day_file,
    vehicle_count,
)
from .route import ALGORITHMS, ORACLE_CAP, Route, route_with

log = logging.getLogger(__name__)

DEFAULT_PAYLOADS = (1500.0, 2000.0)
DEFAULT_ALGORITHMS = ("greedy", "subtour", "anneal")
OUTPUT_FILES = ("table.csv", "table.txt", "timings.csv", "routes.csv", "assignments.csv")
_DAY_FILE = re.compile(r"day_(\d+)\.csv")


@dataclass(frozen=True)
class RunConfig:
    days_dir: Path
    hub: Point
    payloads: tuple[float, ...] = DEFAULT_PAYLOADS
    algorithms: tuple[str, ...] = DEFAULT_ALGORITHMS
    rng_seed: int = 0
    unit_map_path: Path | None = None
    output_dir: Path = Path("out")
    oracle_cap: int = ORACLE_CAP
    sa_iterations: int | None = None  # None: payload default
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "days_dir", Path(self.days_dir))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.unit_map_path is not None:
            object.__setattr__(self, "unit_map_path", Path(self.unit_map_path))
        # dedupe, keep the caller's order
        object.__setattr__(self, "payloads", tuple(dict.fromkeys(float(p) for p in self.payloads)))
        object.__setattr__(self, "algorithms", tuple(dict.fromkeys(self.algorithms)))
        if not self.payloads:
            raise ValueError("at least one payload is required")
        if any(not p > 0 for p in self.payloads):
            raise ValueError(f"payloads must be positive: {self.payloads}")
        if not self.algorithms:
            raise ValueError("at least one routing algorithm is required")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithms {unknown}; choose from {list(ALGORITHMS)}")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must fit in an unsigned 64-bit integer")
        if not 0 <= self.oracle_cap <= ORACLE_CAP:
            raise ValueError(f"oracle_cap must be in [0, {ORACLE_CAP}]")
        if self.sa_iterations is not None and self.sa_iterations < 1:
            raise ValueError("sa_iterations must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def vehicle_config(self, payload: float) -> VehicleConfig:
        return VehicleConfig(payload, self.sa_iterations or 0)


@dataclass
class DayResult:
    day: int
    payload: float
    n_nodes: int
    vehicles: int = 0
    lengths_deg: dict[str, float | None] = field(default_factory=dict)
    assign_seconds: float = 0.0
    route_seconds: dict[str, float] = field(default_factory=dict)
    assignment: Assignment | None = None
    routes: dict[str, tuple[Route, ...]] = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def miles(self, algo: str) -> float | None:
        d = self.lengths_deg.get(algo)
        return None if d is None else degrees_to_miles(d)


@dataclass
class PipelineResult:
    config: RunConfig
    results: list[DayResult]
    totals_deg: dict[tuple[float, str], float | None]

    @property
    def failures(self) -> list[DayResult]:
        return [r for r in self.results if not r.ok]

    @property
    def exit_code(self) -> int:
        return 2 if self.failures else 0


def vehicle_seed(rng_seed: int, day: int, payload: float, vehicle: int) -> int:
    """Independent 64-bit annealing seed per (run seed, day, payload, vehicle)."""
    ss = np.random.SeedSequence([rng_seed, day, int(round(payload * 1000)), vehicle])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def load_instances(cfg: RunConfig) -> list[DailyInstance]:
    """Read ``day_<N>.csv`` files, or ingest ``missions.csv`` when there are none."""
    d = cfg.days_dir
    if not d.is_dir():
        raise FileNotFoundError(f"days directory {d} does not exist")
    files = []
    for p in d.iterdir():
        m = _DAY_FILE.fullmatch(p.name)
        if m:
            files.append((int(m.group(1)), p))
    if files:
        return [read_day_file(p, cfg.hub, day) for day, p in sorted(files)]
    missions = d / "missions.csv"
    if missions.exists():
        units = UnitMap.load(cfg.unit_map_path) if cfg.unit_map_path else UnitMap()
        with missions.open("rb") as fh:
            return build_daily_instances(parse_missions_csv(fh, units), units, cfg.hub)
    raise FileNotFoundError(f"no day_<N>.csv files or missions.csv in {d}")


def solve_day(inst: DailyInstance, payload: float, cfg: RunConfig, bbox: tuple[Point, Point]) -> DayResult:
    res = DayResult(inst.day, payload, inst.n)
    vcfg = cfg.vehicle_config(payload)
    t0 = time.perf_counter()
    try:
        m = vehicle_count(inst, vcfg)
        res.vehicles = m
        seeds = select_seeds(inst, m, bbox)
        h = extra_mileage(inst, seeds).h
        res.assignment = solve_assignment(inst.nodes, h, payload, day=inst.day)
    except (NoFeasibleAssignment, NodeExceedsCapacity) as exc:
        res.assign_seconds = time.perf_counter() - t0
        res.error = str(exc)
        log.error("day %d, payload %g kg: %s", inst.day, payload, exc)
        return res
    res.assign_seconds = time.perf_counter() - t0

    for algo in cfg.algorithms:
        t0 = time.perf_counter()
        if algo == "oracle" and any(len(g) > cfg.oracle_cap for g in res.assignment.members):
            # skipped rather than partially reported
            res.lengths_deg[algo] = None
            res.route_seconds[algo] = 0.0
            log.info("day %d, payload %g kg: oracle skipped, a vehicle exceeds %d nodes",
                     inst.day, payload, cfg.oracle_cap)
            continue
        routes = tuple(
            route_with(algo, grp, inst.hub, sa_iterations=vcfg.sa_iterations,
                       rng_seed=vehicle_seed(cfg.rng_seed, inst.day, payload, k), oracle_cap=cfg.oracle_cap)
            for k, grp in enumerate(res.assignment.members)
        )
        res.route_seconds[algo] = time.perf_counter() - t0
        res.routes[algo] = routes
        res.lengths_deg[algo] = math.fsum(r.length_deg for r in routes)
    log.debug("day %d, payload %g kg: m=%d %s", inst.day, payload, res.vehicles,
              {a: round(v, 6) for a, v in res.lengths_deg.items() if v is not None})
    return res


def _solve_all_payloads(args) -> list[DayResult]:
    inst, cfg, bbox = args
    return [solve_day(inst, p, cfg, bbox) for p in cfg.payloads]


def run_pipeline(cfg: RunConfig, instances: Sequence[DailyInstance] | None = None) -> PipelineResult:
    if instances is None:
        instances = load_instances(cfg)
    instances = sorted(instances, key=lambda i: i.day)
    if not instances:
        raise ValueError("no days to process")
    bbox = global_bbox(instances)
    tasks = [(inst, cfg, bbox) for inst in instances]
    if cfg.workers > 1 and len(tasks) > 1:
        # map() yields in submission order, so output order never depends on scheduling
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            per_day = list(pool.map(_solve_all_payloads, tasks))
    else:
        per_day = [_solve_all_payloads(t) for t in tasks]
    results = [r for day in per_day for r in day]

    totals: dict[tuple[float, str], float | None] = {}
    for p in cfg.payloads:
        for a in cfg.algorithms:
            vals = [r.lengths_deg.get(a) if r.ok else None for r in results if r.payload == p]
            totals[(p, a)] = None if any(v is None for v in vals) else math.fsum(vals)
    return PipelineResult(cfg, results, totals)


# -- emitters -----------------------------------------------------------------------

def _kg(p: float) -> str:
    return f"{p:g}"


def _fmt(v, fmt):
    if v is None:
        return ""
    return repr(v) if fmt == "repr" else format(v, fmt)


def _table_rows(run: PipelineResult, deg_fmt: str):
    cfg = run.config
    header = ["day"]
    for p in cfg.payloads:
        header.append(f"vehicles_{_kg(p)}kg")
        for a in cfg.algorithms:
            header += [f"{a}_{_kg(p)}kg_deg", f"{a}_{_kg(p)}kg_mi"]
    by_key = {(r.day, r.payload): r for r in run.results}
    days = sorted({r.day for r in run.results})
    rows = []
    for d in days:
        row = [str(d)]
        for p in cfg.payloads:
            r = by_key.get((d, p))
            row.append(str(r.vehicles) if r is not None and r.ok else "")
            for a in cfg.algorithms:
                deg = r.lengths_deg.get(a) if r is not None and r.ok else None
                row += [_fmt(deg, deg_fmt), _fmt(None if deg is None else degrees_to_miles(deg), ".3f")]
        rows.append(row)
    tot = ["Totals"]
    for p in cfg.payloads:
        vs = [r.vehicles for r in run.results if r.payload == p]
        tot.append(str(sum(vs)) if all(r.ok for r in run.results if r.payload == p) else "")
        for a in cfg.algorithms:
            deg = run.totals_deg.get((p, a))
            tot += [_fmt(deg, deg_fmt), _fmt(None if deg is None else degrees_to_miles(deg), ".3f")]
    rows.append(tot)
    return header, rows


def emit_table(run: PipelineResult) -> tuple[str, str]:
    """(CSV text, aligned plain-text table): one row per day plus a Totals row.

    Degrees are written at full precision in the CSV and 4 decimals in the text
    table; miles are rounded to 3 decimals in both.
    """
    if not run.results:
        raise ValueError("no results to tabulate")
    header, rows = _table_rows(run, "repr")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)

    header, rows = _table_rows(run, ".4f")
    widths = [max(len(row[c]) for row in [header, *rows]) for c in range(len(header))]
    lines = ["  ".join(cell.rjust(wd) for cell, wd in zip(row, widths)) for row in [header, *rows]]
    lines.insert(1, "  ".join("-" * wd for wd in widths))
    lines.insert(len(lines) - 1, lines[1])
    return buf.getvalue(), "\n".join(lines) + "\n"


def emit_timings(run: PipelineResult) -> str:
    """Wall-clock seconds per payload and algorithm, summed over days.

    The assignment stage runs once per day and payload and is shared by every
    algorithm, so each row reports it alongside that algorithm's routing time.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["payload_kg", "algorithm", "assign_seconds", "route_seconds", "total_seconds"])
    if not run.results:
        return buf.getvalue()
    for p in run.config.payloads:
        rs = [r for r in run.results if r.payload == p]
        stage1 = math.fsum(r.assign_seconds for r in rs)
        for a in run.config.algorithms:
            stage2 = math.fsum(r.route_seconds.get(a, 0.0) for r in rs)
            w.writerow([_kg(p), a, f"{stage1:.6f}", f"{stage2:.6f}", f"{stage1 + stage2:.6f}"])
    return buf.getvalue()


def emit_routes(run: PipelineResult) -> str:
    """Every route as hub..hub point rows, each followed by a 'total' summary row."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["payload_kg", "day", "vehicle", "algorithm", "seq_index", "node_id", "lat", "lon",
                "length_deg", "length_miles"])
    for r in run.results:
        for a in run.config.algorithms:
            for k, route in enumerate(r.routes.get(a, ()), start=1):
                ids = ["hub", *route.node_ids, "hub"]
                for s, (nid, pt) in enumerate(zip(ids, route.sequence)):
                    w.writerow([_kg(r.payload), r.day, k, a, s, nid, repr(pt.lat), repr(pt.lon), "", ""])
                w.writerow([_kg(r.payload), r.day, k, a, "total", "", "", "",
                            repr(route.length_deg), f"{route.length_miles:.3f}"])
    return buf.getvalue()


def emit_assignments(run: PipelineResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["payload_kg", "day", "vehicle", "node_id", "lat", "lon", "q_kg"])
    for r in run.results:
        if r.assignment is None:
            continue
        for k, grp in enumerate(r.assignment.members, start=1):
            for nd in grp:
                w.writerow([_kg(r.payload), r.day, k, nd.id, repr(nd.point.lat), repr(nd.point.lon),
                            repr(nd.demand_q)])
    return buf.getvalue()


def write_outputs(run: PipelineResult, out_dir: str | Path | None = None) -> dict[str, Path]:
    out = Path(out_dir) if out_dir is not None else run.config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    table_csv, table_txt = emit_table(run)
    texts = {
        "table.csv": table_csv,
        "table.txt": table_txt,
        "timings.csv": emit_timings(run),
        "routes.csv": emit_routes(run),
        "assignments.csv": emit_assignments(run),
    }
    paths = {}
    for name, text in texts.items():
        paths[name] = out / name
        paths[name].write_text(text, encoding="utf-8", newline="")
    return paths

