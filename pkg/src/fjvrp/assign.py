"""Stage one: seed selection, extra-mileage costs, and the node-to-vehicle assignment BIP."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bip import BipParams, BipProblem, solve_bip
from .geom import Point, convex_hull, euclid_dist
from .instance import DailyInstance, DemandNode, VehicleConfig, vehicle_count


class NoFeasibleAssignment(RuntimeError):
    def __init__(self, m: int, day: int | None = None):
        where = f"day {day}: " if day is not None else ""
        super().__init__(f"{where}no capacity-feasible assignment with {m} vehicles")
        self.m = m
        self.day = day


class SeedProvenance(str, enum.Enum):
    HULL = "hull-corners"
    GRID = "grid-fallback"
    SINGLE = "single-node"


@dataclass(frozen=True)
class SeedSet:
    seeds: tuple[Point, ...]
    provenance: SeedProvenance

    def __len__(self):
        return len(self.seeds)


@dataclass(frozen=True)
class ExtraMileageMatrix:
    h: np.ndarray  # (n, m), degrees

    @property
    def shape(self):
        return self.h.shape


@dataclass(frozen=True)
class Assignment:
    members: tuple[tuple[DemandNode, ...], ...]
    loads: tuple[float, ...]
    objective: float = 0.0

    @property
    def groups(self) -> list[set[str]]:
        return [{nd.id for nd in grp} for grp in self.members]

    @property
    def m(self) -> int:
        return len(self.members)


def _disperse(hub: Point, cands: list[tuple[int, Point]], m: int) -> list[Point]:
    # farthest from the hub first, then the corner farthest from everything chosen
    first = max(cands, key=lambda c: (euclid_dist(hub, c[1]), -c[0]))
    chosen = [first]
    left = [c for c in cands if c is not first]
    while len(chosen) < m:
        nxt = max(left, key=lambda c: (min(euclid_dist(c[1], s[1]) for s in chosen), -c[0]))
        chosen.append(nxt)
        left.remove(nxt)
    return [p for _, p in chosen]


def diagonal_points(lo: Point, hi: Point, m: int) -> list[Point]:
    """m evenly spaced points on the segment lo..hi, endpoints included (midpoint if m == 1)."""
    if m == 1:
        return [Point((lo.x + hi.x) / 2, (lo.y + hi.y) / 2)]
    return [Point(lo.x + (hi.x - lo.x) * k / (m - 1), lo.y + (hi.y - lo.y) * k / (m - 1)) for k in range(m)]


def select_seeds(inst: DailyInstance, m: int, global_bbox: tuple[Point, Point] | None = None) -> SeedSet:
    """Pick m seeds for the day.

    One node: that node. Otherwise hull corners of nodes plus hub (the hub itself is
    never a seed), chosen by farthest-point dispersion when there are at least m of
    them; failing that, m points spread along the diagonal of ``global_bbox`` (the
    bounding box of every node over all days; defaults to this day's nodes).
    """
    if m < 1:
        raise ValueError(f"need at least one vehicle, got m={m}")
    if inst.n == 1:
        return SeedSet((inst.nodes[0].point,) * m, SeedProvenance.SINGLE)

    hull = convex_hull([inst.hub, *(nd.point for nd in inst.nodes)])
    first_index: dict[Point, int] = {}
    for i, nd in enumerate(inst.nodes):
        first_index.setdefault(nd.point, i)
    cands = sorted((first_index[p], p) for p in hull.corners if p != inst.hub)
    if len(cands) >= m:
        return SeedSet(tuple(_disperse(inst.hub, cands, m)), SeedProvenance.HULL)

    if global_bbox is None:
        xs = [nd.point.x for nd in inst.nodes]
        ys = [nd.point.y for nd in inst.nodes]
        global_bbox = (Point(min(xs), min(ys)), Point(max(xs), max(ys)))
    return SeedSet(tuple(diagonal_points(*global_bbox, m)), SeedProvenance.GRID)


def extra_mileage(inst: DailyInstance, seeds: SeedSet) -> ExtraMileageMatrix:
    """h[i, k] = d(hub, i) + d(i, seed_k) - d(hub, seed_k)."""
    hub = inst.hub
    h = np.empty((inst.n, len(seeds)))
    for i, nd in enumerate(inst.nodes):
        d0i = euclid_dist(hub, nd.point)
        for k, s in enumerate(seeds.seeds):
            h[i, k] = d0i + euclid_dist(nd.point, s) - euclid_dist(hub, s)
    # the triangle inequality makes h >= 0; clamp round-off below zero
    np.maximum(h, 0.0, out=h)
    return ExtraMileageMatrix(h)


def assignment_bip(h: np.ndarray, demands: Sequence[float], capacity: float | Sequence[float]) -> BipProblem:
    """min sum h_ik z_ik; each node on exactly one vehicle; vehicle loads within capacity."""
    h = np.asarray(h, dtype=float)
    n, m = h.shape
    q = np.asarray(demands, dtype=float)
    R = np.broadcast_to(np.asarray(capacity, dtype=float), (m,))
    A_eq = np.zeros((n, n * m))
    A_ub = np.zeros((m, n * m))
    for i in range(n):
        A_eq[i, i * m:(i + 1) * m] = 1.0
        A_ub[np.arange(m), i * m + np.arange(m)] = q[i]
    return BipProblem.from_arrays(h.reshape(-1), A_eq, np.ones(n), A_ub, R.copy(), shape=(n, m))


def solve_assignment(nodes: Sequence[DemandNode], h: np.ndarray, capacity: float,
                     params: BipParams | None = None, day: int | None = None) -> Assignment:
    h = np.asarray(h, dtype=float)
    m = h.shape[1]
    q = [nd.demand_q for nd in nodes]
    res = solve_bip(assignment_bip(h, q, capacity), params)
    if not res.optimal:
        raise NoFeasibleAssignment(m, day)
    z = res.values.reshape(len(nodes), m)
    members = tuple(tuple(nd for i, nd in enumerate(nodes) if z[i, k]) for k in range(m))
    loads = tuple(float(sum(nd.demand_q for nd in grp)) for grp in members)
    return Assignment(members, loads, res.objective)


def assign_nodes(inst: DailyInstance, cfg: VehicleConfig, m: int | None = None,
                 seeds: SeedSet | None = None, global_bbox: tuple[Point, Point] | None = None,
                 params: BipParams | None = None) -> Assignment:
    if m is None:
        m = vehicle_count(inst, cfg)
    if seeds is None:
        seeds = select_seeds(inst, m, global_bbox)
    h = extra_mileage(inst, seeds).h
    return solve_assignment(inst.nodes, h, cfg.payload_R, params, inst.day)
