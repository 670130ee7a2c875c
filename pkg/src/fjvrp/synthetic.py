"""Synthetic multi-day relief dataset shaped like the original mission logs.

Locations are scattered around a few district centres near the hub; each day visits
between 1 and ``max_nodes`` of them. Daily supply is drawn so that every requested
payload admits a capacity-feasible assignment with the ceiling vehicle count.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .geom import Point
from .instance import write_day_file

SYNTH_HUB = Point.from_latlon(27.7172, 85.3240)


def _packable(n: int, q: float, payload: float) -> bool:
    m = math.ceil(n * q / payload)
    return m * math.floor(payload / q) >= n


def synthetic_days(seed: int = 0, n_days: int = 26, hub: Point = SYNTH_HUB, max_nodes: int = 20,
                   payloads: Sequence[float] = (1500.0, 2000.0), pool_size: int = 150):
    """Returns a list of (day, [(id, Point)], total_kg)."""
    rng = np.random.default_rng(seed)
    centres = np.array([hub.x, hub.y]) + rng.uniform(-1.2, 1.2, (6, 2))
    which = rng.integers(0, len(centres), pool_size)
    xy = centres[which] + rng.normal(0, 0.18, (pool_size, 2))
    pool = [(f"VDC{i + 1:03d}", Point(round(float(x), 5), round(float(y), 5))) for i, (x, y) in enumerate(xy)]
    pool = [(i, p) for i, p in pool if p != hub]

    counts = rng.integers(1, max_nodes + 1, n_days)
    if n_days >= 2:
        counts[rng.choice(n_days, 2, replace=False)] = (1, max_nodes)

    days = []
    for d, n in enumerate(counts, start=1):
        n = int(n)
        picks = sorted(rng.choice(len(pool), n, replace=False))
        locs = [pool[k] for k in picks]
        while True:
            # per-node loads from a few hundred kg up to nearly a full small truck
            q = float(np.exp(rng.uniform(math.log(80), math.log(1400))))
            total = float(round(q * n))
            if total > 0 and all(_packable(n, total / n, R) for R in payloads):
                break
        days.append((d, locs, total))
    return days


def write_synthetic(out_dir: str | Path, seed: int = 0, n_days: int = 26, hub: Point = SYNTH_HUB,
                    max_nodes: int = 20) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for d, locs, total in synthetic_days(seed, n_days, hub, max_nodes):
        p = out / f"day_{d}.csv"
        write_day_file(p, locs, total)
        paths.append(p)
    (out / "hub.txt").write_text(f"{hub.lat!r},{hub.lon!r}\n", encoding="utf-8")
    return paths
