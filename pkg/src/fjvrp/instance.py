"""Mission records, unit conversion, and per-day routing instances."""

from __future__ import annotations

import csv
import io
import math
import re
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .geom import Point

MISSION_COLUMNS = ("day", "location_id", "lat", "lon", "product", "amount", "unit")
DEFAULT_UNITS = {"sack": 25.0, "kg": 1.0}


class MalformedRow(ValueError):
    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class UnknownUnit(KeyError):
    def __init__(self, name: str, row: int | None = None):
        super().__init__(name)
        self.name = name
        self.row = row

    def __str__(self):
        where = f" (row {self.row})" if self.row is not None else ""
        return f"unknown unit {self.name!r}{where}"


class ZeroSupply(ValueError):
    def __init__(self, day: int):
        super().__init__(f"day {day} has zero total supply")
        self.day = day


class NodeExceedsCapacity(ValueError):
    pass


def natural_key(s: str):
    """Sort key treating digit runs numerically, so 'N2' < 'N10'."""
    return [(0, int(t), "") if t.isdigit() else (1, 0, t) for t in re.split(r"(\d+)", s) if t]


@dataclass(frozen=True)
class MissionRecord:
    day: int
    location_id: str
    lat: float
    lon: float
    product: str
    amount: float
    unit: str

    def __post_init__(self):
        if self.day < 1:
            raise ValueError(f"day must be >= 1, got {self.day}")
        if not self.amount >= 0:
            raise ValueError(f"amount must be >= 0, got {self.amount}")


class UnitMap(Mapping[str, float]):
    """Unit name -> kilograms per unit. Names are case-insensitive."""

    def __init__(self, factors: Mapping[str, float] | None = None):
        merged = dict(DEFAULT_UNITS)
        for name, kg in (factors or {}).items():
            merged[name.strip().lower()] = float(kg)
        for name, kg in merged.items():
            if not (kg > 0 and math.isfinite(kg)):
                raise ValueError(f"unit {name!r}: factor must be positive, got {kg}")
        if merged["sack"] != 25.0:
            raise ValueError("unit map must keep sack=25")
        self._factors = merged

    def __getitem__(self, name: str) -> float:
        try:
            return self._factors[name.strip().lower()]
        except KeyError:
            raise UnknownUnit(name) from None

    def __contains__(self, name) -> bool:
        return isinstance(name, str) and name.strip().lower() in self._factors

    def __iter__(self):
        return iter(self._factors)

    def __len__(self):
        return len(self._factors)

    def __repr__(self):
        return f"UnitMap({self._factors!r})"

    @classmethod
    def parse(cls, text: str) -> "UnitMap":
        factors = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            name, sep, value = line.partition("=")
            if not sep or not name.strip():
                raise ValueError(f"unit map line {lineno}: expected name=kg, got {raw!r}")
            try:
                factors[name.strip()] = float(value)
            except ValueError:
                raise ValueError(f"unit map line {lineno}: bad number {value.strip()!r}") from None
        return cls(factors)

    @classmethod
    def load(cls, path: str | Path) -> "UnitMap":
        return cls.parse(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class DemandNode:
    id: str
    point: Point
    demand_q: float

    def __post_init__(self):
        if not self.demand_q > 0:
            raise ValueError(f"node {self.id}: demand must be positive, got {self.demand_q}")


@dataclass(frozen=True)
class DailyInstance:
    day: int
    hub: Point
    nodes: tuple[DemandNode, ...]
    total_supply: float

    def __post_init__(self):
        if not self.nodes:
            raise ValueError(f"day {self.day}: no demand nodes")
        ids = [nd.id for nd in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError(f"day {self.day}: duplicate node ids")
        q = self.q
        for nd in self.nodes:
            if not math.isclose(nd.demand_q, q, rel_tol=1e-12):
                raise ValueError(f"day {self.day}: node {nd.id} demand {nd.demand_q} != even split {q}")
            if nd.point == self.hub:
                raise ValueError(f"day {self.day}: node {nd.id} coincides with the hub")

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def q(self) -> float:
        return self.total_supply / len(self.nodes)

    @classmethod
    def even_split(cls, day: int, hub: Point, locations: Sequence[tuple[str, Point]], total_supply: float):
        if not total_supply > 0:
            raise ZeroSupply(day)
        q = total_supply / len(locations) if locations else 0.0
        nodes = tuple(DemandNode(i, p, q) for i, p in locations)
        return cls(day, hub, nodes, float(total_supply))


def default_sa_iterations(payload: float) -> int:
    # 15 iterations per temperature at 1500 kg, 20 at 2000 kg
    return 20 if payload >= 2000 else 15


@dataclass(frozen=True)
class VehicleConfig:
    payload_R: float
    sa_iterations: int = field(default=0)

    def __post_init__(self):
        if not self.payload_R > 0:
            raise ValueError(f"payload must be positive, got {self.payload_R}")
        if self.sa_iterations == 0:
            object.__setattr__(self, "sa_iterations", default_sa_iterations(self.payload_R))
        if self.sa_iterations < 1:
            raise ValueError(f"sa_iterations must be >= 1, got {self.sa_iterations}")


def _text_stream(stream: IO) -> IO[str]:
    if isinstance(stream, io.TextIOBase):
        return stream
    if isinstance(stream, (bytes, bytearray)):
        return io.StringIO(bytes(stream).decode("utf-8-sig"))
    return io.TextIOWrapper(stream, encoding="utf-8-sig", newline="")


def parse_missions_csv(stream: IO | bytes, units: UnitMap) -> list[MissionRecord]:
    """Parse a missions CSV with columns day,location_id,lat,lon,product,amount,unit."""
    reader = csv.reader(_text_stream(stream))
    header = next(reader, None)
    if header is None:
        return []
    header = [h.strip().lower() for h in header]
    missing = [c for c in MISSION_COLUMNS if c not in header]
    if missing:
        raise MalformedRow(1, f"header lacks columns {missing}")
    col = {c: header.index(c) for c in MISSION_COLUMNS}

    records = []
    for rowno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < len(header):
            raise MalformedRow(rowno, f"expected {len(header)} fields, got {len(row)}")
        get = lambda c: row[col[c]].strip()  # noqa: E731
        unit = get("unit")
        if unit not in units:
            raise UnknownUnit(unit, rowno)
        try:
            rec = MissionRecord(
                day=int(get("day")),
                location_id=get("location_id"),
                lat=float(get("lat")),
                lon=float(get("lon")),
                product=get("product"),
                amount=float(get("amount")),
                unit=unit,
            )
            Point.from_latlon(rec.lat, rec.lon)
        except ValueError as exc:
            raise MalformedRow(rowno, str(exc)) from None
        if not rec.location_id:
            raise MalformedRow(rowno, "empty location_id")
        records.append(rec)
    return records


def build_daily_instances(records: Iterable[MissionRecord], units: UnitMap, hub: Point) -> list[DailyInstance]:
    records = list(records)
    if not records:
        raise ValueError("no mission records")
    by_day: dict[int, list[MissionRecord]] = {}
    for rec in records:
        by_day.setdefault(rec.day, []).append(rec)

    out = []
    for day in sorted(by_day):
        rows = by_day[day]
        # fsum so the total does not depend on row order
        total = math.fsum(r.amount * units[r.unit] for r in rows)
        if total <= 0:
            raise ZeroSupply(day)
        locs: dict[str, Point] = {}
        for r in sorted(rows, key=lambda r: (natural_key(r.location_id), r.lat, r.lon)):
            locs.setdefault(r.location_id, Point.from_latlon(r.lat, r.lon))
        ordered = sorted(locs.items(), key=lambda kv: natural_key(kv[0]))
        out.append(DailyInstance.even_split(day, hub, ordered, total))
    return out


def vehicle_count(inst: DailyInstance, cfg: VehicleConfig) -> int:
    """ceil(n / (payload / q)) with q = total / n, evaluated exactly."""
    total = Fraction(inst.total_supply)
    payload = Fraction(cfg.payload_R)
    if total > inst.n * payload:
        raise NodeExceedsCapacity(
            f"day {inst.day}: per-node demand {inst.q:.6g} kg exceeds payload {cfg.payload_R:g} kg"
        )
    return max(1, math.ceil(total / payload))


def global_bbox(instances: Iterable[DailyInstance]) -> tuple[Point, Point]:
    """(lower-left, upper-right) corners over every node of every day."""
    xs, ys = [], []
    for inst in instances:
        for nd in inst.nodes:
            xs.append(nd.point.x)
            ys.append(nd.point.y)
    if not xs:
        raise ValueError("no nodes")
    return Point(min(xs), min(ys)), Point(max(xs), max(ys))


# Day files: "# total_kg=<float>" comment plus an id,lat,lon table.

def read_day_file(path: str | Path, hub: Point, day: int | None = None) -> DailyInstance:
    path = Path(path)
    if day is None:
        m = re.fullmatch(r"day_(\d+)\.csv", path.name)
        if not m:
            raise ValueError(f"{path.name}: expected name day_<N>.csv")
        day = int(m.group(1))
    total = None
    body = []
    for line in path.read_text(encoding="utf-8-sig").splitlines():
        s = line.strip()
        if s.startswith("#"):
            m = re.match(r"#\s*total_kg\s*=\s*(\S+)", s)
            if m:
                total = float(m.group(1))
            continue
        if s:
            body.append(line)
    if total is None:
        raise ValueError(f"{path}: missing '# total_kg=' line")
    reader = csv.reader(body)
    header = [h.strip().lower() for h in next(reader, [])]
    if header[:3] != ["id", "lat", "lon"]:
        raise MalformedRow(1, f"{path.name}: expected header id,lat,lon, got {header}")
    locs: OrderedDict[str, Point] = OrderedDict()
    for rowno, row in enumerate(reader, start=2):
        try:
            node_id, lat, lon = row[0].strip(), float(row[1]), float(row[2])
            p = Point.from_latlon(lat, lon)
        except (IndexError, ValueError) as exc:
            raise MalformedRow(rowno, f"{path.name}: {exc}") from None
        locs.setdefault(node_id, p)
    return DailyInstance.even_split(day, hub, list(locs.items()), total)


def write_day_file(path: str | Path, nodes: Sequence[tuple[str, Point]], total_kg: float) -> None:
    buf = io.StringIO()
    buf.write(f"# total_kg={total_kg!r}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "lat", "lon"])
    for node_id, p in nodes:
        w.writerow([node_id, repr(p.lat), repr(p.lon)])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def dump_instance(inst: DailyInstance, stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["day", "total_kg", "hub_lat", "hub_lon"])
    w.writerow([inst.day, repr(inst.total_supply), repr(inst.hub.lat), repr(inst.hub.lon)])
    w.writerow(["id", "lat", "lon", "q_kg"])
    for nd in inst.nodes:
        w.writerow([nd.id, repr(nd.point.lat), repr(nd.point.lon), repr(nd.demand_q)])
