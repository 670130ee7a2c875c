"""Command line: ``fjvrp run``, ``fjvrp ingest`` and ``fjvrp gen-synthetic``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .geom import Point
from .instance import UnitMap, build_daily_instances, dump_instance, parse_missions_csv, write_day_file
from .report import DEFAULT_ALGORITHMS, DEFAULT_PAYLOADS, RunConfig, emit_table, run_pipeline, write_outputs
from .route import ALGORITHMS, ORACLE_CAP
from .synthetic import SYNTH_HUB, write_synthetic

log = logging.getLogger("fjvrp")


def parse_hub(text: str) -> Point:
    try:
        lat, lon = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LAT,LON, got {text!r}") from None
    return Point.from_latlon(lat, lon)


def _hub_from_dir(days_dir: Path) -> Point | None:
    f = days_dir / "hub.txt"
    if f.exists():
        return parse_hub(f.read_text(encoding="utf-8").strip())
    return None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fjvrp", description="Two-stage relief vehicle routing.")
    ap.add_argument("--verbose", "-v", action="count", default=0, help="-v for info, -vv for debug traces")
    # also accepted after the subcommand; SUPPRESS keeps the top-level count when absent
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", "-v", action="count", default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="assign and route every day, write tables and dumps")
    run.add_argument("--days-dir", type=Path, required=True, help="directory of day_<N>.csv files")
    run.add_argument("--hub", type=parse_hub, help="hub as LAT,LON (default: hub.txt in the days dir)")
    run.add_argument("--payload", type=float, action="append", help="vehicle payload in kg (repeatable)")
    run.add_argument("--algo", choices=ALGORITHMS, action="append", help="routing algorithm (repeatable)")
    run.add_argument("--seed", type=int, default=0, help="master seed for annealing")
    run.add_argument("--units", type=Path, help="unit map file (name=kg lines) for missions.csv input")
    run.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    run.add_argument("--oracle-cap", type=int, default=ORACLE_CAP, help="largest vehicle the oracle will enumerate")
    run.add_argument("--sa-iters", type=int, help="annealing iterations per temperature (default by payload)")
    run.add_argument("--workers", type=int, default=1, help="days solved in parallel")

    ing = sub.add_parser("ingest", parents=[common], help="convert a missions CSV into day_<N>.csv files")
    ing.add_argument("missions", type=Path)
    ing.add_argument("--hub", type=parse_hub, required=True)
    ing.add_argument("--units", type=Path)
    ing.add_argument("--out", type=Path, required=True)
    ing.add_argument("--dump", action="store_true", help="also write instance_<N>.csv debug dumps")

    gen = sub.add_parser("gen-synthetic", parents=[common], help="write a synthetic multi-day dataset")
    gen.add_argument("--out", type=Path, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--days", type=int, default=26)
    gen.add_argument("--max-nodes", type=int, default=20)
    gen.add_argument("--hub", type=parse_hub, default=SYNTH_HUB)
    return ap


def cmd_run(args) -> int:
    hub = args.hub or _hub_from_dir(args.days_dir)
    if hub is None:
        log.error("no --hub given and no hub.txt in %s", args.days_dir)
        return 1
    cfg = RunConfig(
        days_dir=args.days_dir,
        hub=hub,
        payloads=tuple(args.payload or DEFAULT_PAYLOADS),
        algorithms=tuple(args.algo or DEFAULT_ALGORITHMS),
        rng_seed=args.seed,
        unit_map_path=args.units,
        output_dir=args.out,
        oracle_cap=args.oracle_cap,
        sa_iterations=args.sa_iters,
        workers=args.workers,
    )
    run = run_pipeline(cfg)
    write_outputs(run)
    sys.stdout.write(emit_table(run)[1])
    for r in run.failures:
        print(f"day {r.day}, payload {r.payload:g} kg failed: {r.error}", file=sys.stderr)
    return run.exit_code


def cmd_ingest(args) -> int:
    units = UnitMap.load(args.units) if args.units else UnitMap()
    with args.missions.open("rb") as fh:
        instances = build_daily_instances(parse_missions_csv(fh, units), units, args.hub)
    args.out.mkdir(parents=True, exist_ok=True)
    for inst in instances:
        write_day_file(args.out / f"day_{inst.day}.csv", [(nd.id, nd.point) for nd in inst.nodes], inst.total_supply)
        if args.dump:
            with (args.out / f"instance_{inst.day}.csv").open("w", encoding="utf-8", newline="") as fh:
                dump_instance(inst, fh)
    (args.out / "hub.txt").write_text(f"{args.hub.lat!r},{args.hub.lon!r}\n", encoding="utf-8")
    print(f"wrote {len(instances)} day files to {args.out}")
    return 0


def cmd_gen(args) -> int:
    paths = write_synthetic(args.out, args.seed, args.days, args.hub, args.max_nodes)
    print(f"wrote {len(paths)} day files to {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return {"run": cmd_run, "ingest": cmd_ingest, "gen-synthetic": cmd_gen}[args.command](args)
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
