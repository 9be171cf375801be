"""Command line driver: single runs, protocol sweeps, CSV tables and SVG figures.

    lmeec-sim run --protocol lmeec --nodes 100 --seed 42 --out results/
    lmeec-sim sweep --config sweep.toml --out results/
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import math
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli

from .core import ConfigError, Protocol, RadioEnergyModel, RunUntil, SimConfig, WeightParams
from .engine import SimResult, run_simulation
from .plotting import line_plot

log = logging.getLogger("lmeec_sim")

ROUNDS_COLUMNS = [
    "protocol", "n", "seed", "round", "time_s", "alive", "unreachable",
    "ch_count", "round_dissipated_J", "total_residual_J",
]
SUMMARY_COLUMNS = [
    "protocol", "n", "seed", "deployment_hash", "avg_dissipated_J",
    "fnd_s", "hnd_s", "lnd_s", "rounds_run",
]
FIG1_COLUMNS = ["n", "protocol", "mean_avg_dissipated_J", "stddev"]
FIG2_COLUMNS = ["n", "protocol", "mean_fnd_s", "stddev"]

EXIT_CONFIG = 2
EXIT_IO = 3

_SIM_FIELDS = {f.name for f in dataclasses.fields(SimConfig)} - {"weights", "radio"}
_WEIGHT_FIELDS = {f.name for f in dataclasses.fields(WeightParams)}
_RADIO_FIELDS = {f.name for f in dataclasses.fields(RadioEnergyModel)}


@dataclass
class SweepSpec:
    node_counts: list[int] = field(default_factory=lambda: [50, 100, 150, 200, 250, 300, 350, 400])
    protocols: list[Protocol] = field(default_factory=lambda: [Protocol.LMEEC, Protocol.LEACH])
    seeds: list[int] = field(default_factory=lambda: derive_seeds(0, 5))
    base: SimConfig = field(default_factory=lambda: SimConfig(run_until=RunUntil.ALL_DEAD))

    def __post_init__(self):
        for key in ("node_counts", "protocols", "seeds"):
            if not getattr(self, key):
                raise ConfigError(key, "must not be empty")

    def cells(self) -> list[SimConfig]:
        return [
            self.base.replace(protocol=p, n_nodes=n, seed=s)
            for p in self.protocols
            for n in self.node_counts
            for s in self.seeds
        ]


def derive_seeds(master_seed: int, count: int) -> list[int]:
    state = np.random.SeedSequence(master_seed).generate_state(count, dtype=np.uint64)
    return [int(s) for s in state]


def fmt(value) -> str:
    """CSV cell text: repr precision for floats, empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def load_config_file(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError("config", f"{path}: {exc}") from None


def build_config(table: dict, overrides: dict | None = None) -> SimConfig:
    """SimConfig from a parsed TOML table; unknown keys are rejected by name."""
    table = {**table, **(overrides or {})}
    sim, weights, radio = {}, {}, {}
    for key, value in table.items():
        if key == "weights":
            _check_table(key, value, _WEIGHT_FIELDS)
            weights.update(value)
        elif key == "radio":
            _check_table(key, value, _RADIO_FIELDS)
            radio.update(value)
        elif key in _SIM_FIELDS:
            sim[key] = value
        elif key != "sweep":
            raise ConfigError(key, "unknown configuration key")
    try:
        return SimConfig(weights=WeightParams(**weights), radio=RadioEnergyModel(**radio), **sim)
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from None


def _check_table(name, value, allowed):
    if not isinstance(value, dict):
        raise ConfigError(name, "must be a table")
    for key in value:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}", "unknown configuration key")


def build_sweep(table: dict, base: SimConfig, master_seed=None, n_seeds=None, nodes=None, protocols=None) -> SweepSpec:
    sweep = dict(table.get("sweep", {}))
    for key in sweep:
        if key not in ("node_counts", "protocols", "seeds", "master_seed", "n_seeds"):
            raise ConfigError(f"sweep.{key}", "unknown configuration key")
    spec = SweepSpec(base=base)
    if nodes is not None:
        spec.node_counts = nodes
    elif "node_counts" in sweep:
        spec.node_counts = [int(n) for n in sweep["node_counts"]]
    if protocols is not None:
        spec.protocols = protocols
    elif "protocols" in sweep:
        spec.protocols = [_protocol(p) for p in sweep["protocols"]]
    if "seeds" in sweep and master_seed is None and n_seeds is None:
        spec.seeds = [int(s) for s in sweep["seeds"]]
    else:
        master = master_seed if master_seed is not None else sweep.get("master_seed", 0)
        count = n_seeds if n_seeds is not None else sweep.get("n_seeds", 5)
        if count < 1:
            raise ConfigError("n_seeds", "must be >= 1")
        spec.seeds = derive_seeds(int(master), int(count))
    spec.__post_init__()
    for n in spec.node_counts:
        base.replace(n_nodes=n)  # validates every cell size up front
    return spec


def _protocol(value) -> Protocol:
    try:
        return Protocol(str(value).lower())
    except ValueError:
        raise ConfigError("protocol", f"expected lmeec or leach, got {value!r}") from None


def round_rows(result: SimResult) -> list[list[str]]:
    c = result.config
    return [
        [c.protocol.value, c.n_nodes, c.seed, r.round_index, fmt(r.time_start), r.alive_count,
         r.unreachable_count, r.ch_count, fmt(r.energy_dissipated_this_round), fmt(r.total_residual)]
        for r in result.rounds
    ]


def summary_row(result: SimResult) -> list:
    c = result.config
    return [
        c.protocol.value, c.n_nodes, c.seed, result.deployment_hash,
        fmt(result.avg_dissipated_at_cap), fmt(result.fnd), fmt(result.hnd), fmt(result.lnd),
        len(result.rounds),
    ]


def _mean_std(values):
    if not values:
        return None, None
    mean = math.fsum(values) / len(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def figure_tables(results: list[SimResult], spec: SweepSpec):
    """Per (n, protocol) means over seeds of energy at the time cap and of FND."""
    fig1, fig2 = [], []
    for n in spec.node_counts:
        for p in spec.protocols:
            cell = [r for r in results if r.config.n_nodes == n and r.config.protocol is p]
            m, s = _mean_std([r.avg_dissipated_at_cap for r in cell])
            fig1.append([n, p.value, m, s])
            m, s = _mean_std([r.fnd for r in cell if r.fnd is not None])
            fig2.append([n, p.value, m, s])
    return fig1, fig2


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_run(results: list[SimResult], out: Path):
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "rounds.csv", ROUNDS_COLUMNS, [row for r in results for row in round_rows(r)])
    write_csv(out / "summary.csv", SUMMARY_COLUMNS, [summary_row(r) for r in results])


def write_sweep(results: list[SimResult], spec: SweepSpec, out: Path):
    write_run(results, out)
    fig1, fig2 = figure_tables(results, spec)
    write_csv(out / "fig1.csv", FIG1_COLUMNS, fig1)
    write_csv(out / "fig2.csv", FIG2_COLUMNS, fig2)
    for name, rows, ylabel in (
        ("fig1.svg", fig1, f"Average dissipated energy at {spec.base.sim_time:g} s (J)"),
        ("fig2.svg", fig2, "Network lifetime, first node death (s)"),
    ):
        series = {}
        for p in spec.protocols:
            pts = [(n, v) for n, proto, v, _ in rows if proto == p.value and v is not None]
            series[p.value] = ([x for x, _ in pts], [y for _, y in pts])
        line_plot(out / name, series, "Number of nodes", ylabel)


def run_cells(configs: list[SimConfig], jobs: int = 1) -> list[SimResult]:
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_simulation, configs))
    results = []
    for i, cfg in enumerate(configs, 1):
        log.info("cell %d/%d: %s n=%d seed=%d", i, len(configs), cfg.protocol.value, cfg.n_nodes, cfg.seed)
        results.append(run_simulation(cfg))
    return results


def _parse_nodes_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError("nodes", f"expected comma-separated integers, got {text!r}") from None


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lmeec-sim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML file with SimConfig keys")
    common.add_argument("--out", type=Path, default=Path("results"))
    common.add_argument("--until", choices=[u.value for u in RunUntil])
    common.add_argument("--weight-variant", choices=["literal", "magnitude"])

    run = sub.add_parser("run", parents=[common], help="simulate one configuration")
    run.add_argument("--protocol", choices=[p.value for p in Protocol])
    run.add_argument("--nodes", type=int)
    run.add_argument("--seed", type=int)

    sweep = sub.add_parser("sweep", parents=[common], help="protocol x node-count x seed matrix")
    sweep.add_argument("--protocol", help="comma-separated subset of lmeec,leach")
    sweep.add_argument("--nodes", help="comma-separated node counts")
    sweep.add_argument("--seed", type=int, help="master seed the per-cell seeds derive from")
    sweep.add_argument("--n-seeds", type=int)
    sweep.add_argument("--jobs", type=int, default=1)
    return parser


def _overrides(args, sweep: bool) -> dict:
    over = {}
    if args.until:
        over["run_until"] = args.until
    if args.weight_variant:
        over["weights"] = {"variant": args.weight_variant}
    if not sweep:
        if args.protocol:
            over["protocol"] = args.protocol
        if args.nodes is not None:
            over["n_nodes"] = args.nodes
        if args.seed is not None:
            over["seed"] = args.seed
    return over


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    is_sweep = args.command == "sweep"
    try:
        table = load_config_file(args.config) if args.config else {}
        over = _overrides(args, is_sweep)
        if "weights" in over and "weights" in table:
            over["weights"] = {**table["weights"], **over["weights"]}
        if is_sweep:
            table.setdefault("run_until", RunUntil.ALL_DEAD.value)
            base = build_config(table, over)
            spec = build_sweep(
                table, base,
                master_seed=args.seed,
                n_seeds=args.n_seeds,
                nodes=_parse_nodes_list(args.nodes) if args.nodes else None,
                protocols=[_protocol(p) for p in args.protocol.split(",")] if args.protocol else None,
            )
        else:
            cfg = build_config(table, over)
    except ConfigError as exc:
        flag = {"n_nodes": " (--nodes)", "nodes": " (--nodes)"}.get(exc.key, "")
        print(f"lmeec-sim: config error in '{exc.key}'{flag}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"lmeec-sim: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        args.out.mkdir(parents=True, exist_ok=True)
        if is_sweep:
            results = run_cells(spec.cells(), jobs=args.jobs)
            write_sweep(results, spec, args.out)
        else:
            write_run([run_simulation(cfg)], args.out)
    except OSError as exc:
        print(f"lmeec-sim: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
