"""Stage two: route one vehicle's nodes as a hub-anchored Hamiltonian cycle.

Nearest-neighbour greedy and best-improvement sub-tour reversal are deterministic;
simulated annealing applies random sub-tour reversals under a cooling schedule. An
exhaustive oracle gives exact answers for small node sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .geom import Point, degrees_to_miles, euclid_dist, path_length
from .instance import DemandNode, natural_key

ORACLE_CAP = 10
N_TEMPERATURES = 5
COOLING = 0.2


class TooLargeForOracle(ValueError):
    pass


@dataclass(frozen=True)
class Route:
    hub: Point
    stops: tuple[DemandNode, ...]
    length_deg: float

    @classmethod
    def through(cls, hub: Point, stops: Sequence[DemandNode]) -> "Route":
        stops = tuple(stops)
        return cls(hub, stops, path_length([hub, *(s.point for s in stops), hub]))

    @property
    def sequence(self) -> list[Point]:
        return [self.hub, *(s.point for s in self.stops), self.hub]

    @property
    def node_ids(self) -> list[str]:
        return [s.id for s in self.stops]

    @property
    def length_miles(self) -> float:
        return degrees_to_miles(self.length_deg)

    def reversed(self) -> "Route":
        return Route.through(self.hub, self.stops[::-1])


def route_length(r: Route) -> float:
    return path_length(r.sequence)


def _distances(hub: Point, stops: Sequence[DemandNode]) -> np.ndarray:
    pts = [hub, *(s.point for s in stops)]
    n = len(pts)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = euclid_dist(pts[i], pts[j])
    return D


def _tour_len(D: np.ndarray, seq: Sequence[int]) -> float:
    # seq runs hub (0) .. hub (0)
    return float(sum(D[a, b] for a, b in zip(seq, seq[1:])))


def initial_route(nodes: Sequence[DemandNode], hub: Point) -> Route:
    """Nodes in ascending id order between two copies of the hub."""
    return Route.through(hub, sorted(nodes, key=lambda nd: natural_key(nd.id)))


def greedy_route(nodes: Sequence[DemandNode], hub: Point) -> Route:
    """Nearest unvisited neighbour from the hub; ties go to the earlier node."""
    left = list(nodes)
    here = hub
    order = []
    while left:
        k = min(range(len(left)), key=lambda i: (euclid_dist(here, left[i].point), i))
        nxt = left.pop(k)
        order.append(nxt)
        here = nxt.point
    return Route.through(hub, order)


def _best_reversal(D: np.ndarray, seq: list[int]) -> tuple[float, int, int]:
    n = len(seq) - 2
    best = (0.0, 0, 0)
    for i in range(1, n):
        a, b = seq[i - 1], seq[i]
        for j in range(i + 1, n + 1):
            c, d = seq[j], seq[j + 1]
            delta = D[a, c] + D[b, d] - D[a, b] - D[c, d]
            if delta < best[0]:
                best = (delta, i, j)
    return best


def subtour_reversal(start: Route) -> Route:
    """Apply the most-improving sub-tour reversal until none shortens the route."""
    D = _distances(start.hub, start.stops)
    seq = [0, *range(1, len(start.stops) + 1), 0]
    while True:
        delta, i, j = _best_reversal(D, seq)
        if delta >= -1e-12 * (1.0 + _tour_len(D, seq)):
            break
        seq[i:j + 1] = seq[i:j + 1][::-1]
    return Route.through(start.hub, [start.stops[k - 1] for k in seq[1:-1]])


def improving_reversal_exists(r: Route, tol: float = 1e-9) -> bool:
    D = _distances(r.hub, r.stops)
    seq = [0, *range(1, len(r.stops) + 1), 0]
    return _best_reversal(D, seq)[0] < -tol


@dataclass(frozen=True)
class AnnealingSchedule:
    temperatures: tuple[float, ...]
    iterations_per_T: int

    def __post_init__(self):
        t = self.temperatures
        if not t or any(x <= 0 for x in t) or any(b >= a for a, b in zip(t, t[1:])):
            raise ValueError(f"temperatures must be positive and strictly decreasing: {t}")
        if self.iterations_per_T < 1:
            raise ValueError("iterations_per_T must be >= 1")

    @classmethod
    def from_initial(cls, z0: float, iterations_per_T: int, count: int = N_TEMPERATURES,
                     ratio: float = COOLING) -> "AnnealingSchedule":
        """T1 = ratio * z0, T_{j+1} = ratio * T_j."""
        temps = [ratio * z0]
        for _ in range(count - 1):
            temps.append(ratio * temps[-1])
        return cls(tuple(temps), iterations_per_T)


def legal_reversals(n: int) -> list[tuple[int, int]]:
    """(begin, end) positions of reversible subsequences in ``hub, v1..vn, hub``.

    Positions are 0-based with the hub at 0 and n + 1. The beginning may not be the
    first, last or second-to-last position; the end may not be the last; and a
    subsequence may not span both the second and the second-to-last positions
    (that would only reverse the whole cycle).
    """
    pairs = []
    for b in range(1, n):
        for e in range(b + 1, n + 1):
            if not (b == 1 and e == n):
                pairs.append((b, e))
    return pairs


def accept(z_c: float, z_n: float, T: float, w: float) -> bool:
    """Metropolis test: a worse trial is kept when exp((z_c - z_n) / T) > w."""
    return z_n <= z_c or math.exp((z_c - z_n) / T) > w


def simulated_annealing(start: Route, sched: AnnealingSchedule, rng_seed: int) -> Route:
    """Random sub-tour reversals under a cooling schedule; returns the best route seen.

    Randomness comes from numpy's PCG64 generator seeded with ``rng_seed``; ``w`` is
    drawn from [0, 1) only when a trial route is longer than the current one.
    """
    pairs = legal_reversals(len(start.stops))
    D = _distances(start.hub, start.stops)
    seq = [0, *range(1, len(start.stops) + 1), 0]
    z_c = _tour_len(D, seq)
    if not pairs or z_c <= 0:
        return start
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    best, z_best = list(seq), z_c
    for T in sched.temperatures:
        for _ in range(sched.iterations_per_T):
            b, e = pairs[int(rng.integers(len(pairs)))]
            trial = seq[:b] + seq[b:e + 1][::-1] + seq[e + 1:]
            z_n = _tour_len(D, trial)
            if z_n <= z_c or accept(z_c, z_n, T, float(rng.random())):
                seq, z_c = trial, z_n
                if z_c < z_best:
                    best, z_best = list(seq), z_c
    if best == [0, *range(1, len(start.stops) + 1), 0]:
        return start
    return Route.through(start.hub, [start.stops[k - 1] for k in best[1:-1]])


def anneal(start: Route, iterations_per_T: int, rng_seed: int) -> Route:
    """Annealing with the default schedule derived from the start route's length."""
    if start.length_deg <= 0:
        return start
    return simulated_annealing(start, AnnealingSchedule.from_initial(start.length_deg, iterations_per_T), rng_seed)


@lru_cache(maxsize=None)
def _cycle_orders(n: int) -> np.ndarray:
    """All orderings of 1..n with first < last: one representative per undirected cycle."""
    perms = np.zeros((1, 0), dtype=np.int8)
    for k in range(1, n + 1):
        # insert k at every position of each permutation of 1..k-1
        rows = [np.insert(perms, pos, k, axis=1) for pos in range(k)]
        perms = np.concatenate(rows, axis=0)
    if n >= 2:
        perms = perms[perms[:, 0] < perms[:, -1]]
    order = np.lexsort(perms.T[::-1])
    perms = perms[order]
    perms.setflags(write=False)
    return perms


def permutation_count(n: int) -> int:
    """Distinct hub-anchored cycles through n nodes: n!/2 (a cycle equals its reverse)."""
    return 1 if n <= 1 else math.factorial(n) // 2


def enumeration_seconds(n: int, seconds_per_route: float) -> float:
    return permutation_count(n) * seconds_per_route


def brute_force_route(nodes: Sequence[DemandNode], hub: Point, cap: int = ORACLE_CAP) -> Route:
    """Exact shortest cycle by scoring every one of the n!/2 distinct orderings."""
    n = len(nodes)
    if n > cap or n > ORACLE_CAP:
        raise TooLargeForOracle(f"{n} nodes exceeds the oracle cap of {min(cap, ORACLE_CAP)}")
    if n == 0:
        return Route.through(hub, ())
    D = _distances(hub, nodes)
    P = _cycle_orders(n).astype(np.intp)
    lengths = D[0, P[:, 0]] + D[P[:, -1], 0]
    for a in range(n - 1):
        lengths += D[P[:, a], P[:, a + 1]]
    best = P[int(np.argmin(lengths))]
    return Route.through(hub, [nodes[k - 1] for k in best])


def route_with(algorithm: str, nodes: Sequence[DemandNode], hub: Point, *, sa_iterations: int = 15,
               rng_seed: int = 0, oracle_cap: int = ORACLE_CAP) -> Route:
    if not nodes:
        return Route.through(hub, ())
    if algorithm == "greedy":
        return greedy_route(nodes, hub)
    if algorithm == "subtour":
        return subtour_reversal(initial_route(nodes, hub))
    if algorithm == "anneal":
        return anneal(initial_route(nodes, hub), sa_iterations, rng_seed)
    if algorithm == "oracle":
        return brute_force_route(nodes, hub, oracle_cap)
    raise ValueError(f"unknown routing algorithm {algorithm!r}")


ALGORITHMS = ("greedy", "subtour", "anneal", "oracle")
