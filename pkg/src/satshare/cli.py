"""Command-line front end: ``satshare <validate|run|sweep|radiomap>``.

The CLI is a thin orchestrator over the library.  Data goes to files,
diagnostics go to stderr, and the exit status is 0 only on full success.
Every run directory gets a ``manifest.json`` carrying the resolved
config, seeds, digests, and output paths, so any result file can be
reproduced from its manifest alone.  Report payloads never contain
timestamps or timings; reruns with the same manifest are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from dataclasses import dataclass

from .config import (ScenarioConfig, config_digest, default_config_path,
                     load_config)
from .geometry import generate_topology
from .radiomap import (RadioMapError, build_radio_map, load_radio_map,
                       save_radio_map, verify_radio_map)
from .seeding import derive_seed
from .simulator import SCHEMES, replicate, report_json, sweep

__all__ = ["RunManifest", "main", "cmd_validate", "cmd_run", "cmd_sweep",
           "cmd_radiomap"]

TOOL_VERSION = "0.1.0"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class RunManifest:
    """Provenance for one CLI invocation; written next to the outputs."""

    command: str
    config_path: str
    config_digest: str
    config: dict
    master_seed: int
    outputs: tuple
    tool_version: str
    status: str              # "ok" | "partial" | "failed"
    started_at: float
    elapsed_s: float
    notes: tuple = ()

    def to_payload(self) -> dict:
        return dataclasses.asdict(self)


def _err(message: str) -> None:
    print(message, file=sys.stderr)


def _load_validated_config(path: str) -> ScenarioConfig:
    """Load a config, printing diagnostics; exit on errors."""
    config, diags = load_config(path)
    for diag in diags:
        if diag.severity == "error":
            _err(diag.format(path))
    if config is None:
        raise SystemExit(EXIT_USAGE)
    return config


def _write_manifest(out_dir, manifest: RunManifest) -> None:
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest.to_payload(), sort_keys=True,
                               indent=2) + "\n", encoding="utf-8")


def _write_csv(path, rows, fieldnames) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


_RESULT_FIELDS = ("topology_index", "topology_seed", "scheme", "sat_rate_bps",
                  "ter_rate_bps", "total_rate_bps", "improvement_pct",
                  "n_violations", "min_laa_elevation_deg")


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    """Check a config file; print all findings; exit 0 iff no errors."""
    config, diags = load_config(args.config)
    for diag in diags:
        _err(diag.format(args.config))
    if config is None:
        return EXIT_FAILURE
    return EXIT_OK


def _apply_overrides(config: ScenarioConfig, args) -> ScenarioConfig:
    changes = {}
    if getattr(args, "mc_samples", None) is not None:
        changes["eval_samples"] = int(args.mc_samples)
    if getattr(args, "n_topologies", None) is not None:
        changes["n_topologies"] = int(args.n_topologies)
    if changes:
        config = config.replace(**changes)
        config.validate()
    return config


def _parse_schemes(spec: str) -> tuple:
    names = tuple(s.strip() for s in spec.split(",") if s.strip())
    for name in names:
        if name not in SCHEMES:
            raise SystemExit(f"unknown scheme {name!r}; choose from "
                             f"{', '.join(SCHEMES)}")
    return names or SCHEMES


def cmd_run(args) -> int:
    from pathlib import Path

    config = _load_validated_config(args.config)
    config = _apply_overrides(config, args)
    schemes = _parse_schemes(args.schemes)
    master_seed = int(args.seed) if args.seed is not None else config.master_seed
    radiomap = None
    if args.radiomap:
        radiomap = load_radio_map(args.radiomap)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    started = time.time()
    t0 = time.perf_counter()
    notes = []
    outputs = []
    try:
        report = replicate(config, schemes, master_seed=master_seed,
                           parallelism=args.parallelism, radiomap=radiomap)
    except Exception as exc:
        _err(f"run failed: {type(exc).__name__}: {exc}")
        manifest = RunManifest(
            command="run", config_path=str(args.config),
            config_digest=config_digest(config), config=config.to_mapping(),
            master_seed=master_seed, outputs=(), tool_version=TOOL_VERSION,
            status="failed", started_at=started,
            elapsed_s=time.perf_counter() - t0,
            notes=(f"{type(exc).__name__}: {exc}",))
        _write_manifest(out_dir, manifest)
        return EXIT_FAILURE

    report_path = out_dir / "report.json"
    report_path.write_text(report_json(report), encoding="utf-8")
    outputs.append(str(report_path))
    csv_path = out_dir / "results.csv"
    _write_csv(csv_path, report.long_rows(), _RESULT_FIELDS)
    outputs.append(str(csv_path))

    status = "ok"
    for topo in report.topologies:
        for scheme, message in topo.failures:
            status = "partial"
            note = f"topology {topo.index}: {scheme} failed: {message}"
            notes.append(note)
            _err(note)
    manifest = RunManifest(
        command="run", config_path=str(args.config),
        config_digest=report.config_digest, config=config.to_mapping(),
        master_seed=master_seed, outputs=tuple(outputs),
        tool_version=TOOL_VERSION, status=status, started_at=started,
        elapsed_s=report.elapsed_s, notes=tuple(notes))
    _write_manifest(out_dir, manifest)
    return EXIT_OK if status == "ok" else EXIT_FAILURE


def cmd_sweep(args) -> int:
    from pathlib import Path

    config = _load_validated_config(args.config)
    config = _apply_overrides(config, args)
    schemes = _parse_schemes(args.schemes)
    master_seed = int(args.seed) if args.seed is not None else config.master_seed
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    typed = [int(v) if args.parameter == "F" else float(v) for v in values]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    started = time.time()
    t0 = time.perf_counter()
    try:
        result = sweep(config, args.parameter, typed, schemes=schemes,
                       master_seed=master_seed, parallelism=args.parallelism)
    except Exception as exc:
        _err(f"sweep failed: {type(exc).__name__}: {exc}")
        manifest = RunManifest(
            command="sweep", config_path=str(args.config),
            config_digest=config_digest(config), config=config.to_mapping(),
            master_seed=master_seed, outputs=(), tool_version=TOOL_VERSION,
            status="failed", started_at=started,
            elapsed_s=time.perf_counter() - t0,
            notes=(f"{type(exc).__name__}: {exc}",))
        _write_manifest(out_dir, manifest)
        return EXIT_FAILURE

    outputs = []
    payload = {
        "kind": "satshare-sweep",
        "version": 1,
        "parameter": result.parameter,
        "values": list(result.values),
        "reports": [r.to_payload() for r in result.reports],
    }
    report_path = out_dir / "sweep.json"
    report_path.write_text(json.dumps(payload, sort_keys=True, indent=2)
                           + "\n", encoding="utf-8")
    outputs.append(str(report_path))
    csv_path = out_dir / "sweep.csv"
    _write_csv(csv_path, result.long_rows(),
               ("parameter", "value") + _RESULT_FIELDS)
    outputs.append(str(csv_path))

    status = "ok"
    notes = []
    for value, report in zip(result.values, result.reports):
        for topo in report.topologies:
            for scheme, message in topo.failures:
                status = "partial"
                note = (f"value {value}, topology {topo.index}: "
                        f"{scheme} failed: {message}")
                notes.append(note)
                _err(note)
    manifest = RunManifest(
        command="sweep", config_path=str(args.config),
        config_digest=config_digest(config), config=config.to_mapping(),
        master_seed=master_seed, outputs=tuple(outputs),
        tool_version=TOOL_VERSION, status=status, started_at=started,
        elapsed_s=time.perf_counter() - t0, notes=tuple(notes))
    _write_manifest(out_dir, manifest)
    return EXIT_OK if status == "ok" else EXIT_FAILURE


def _radiomap_topology(config: ScenarioConfig, master_seed: int, index: int):
    return generate_topology(config, derive_seed(master_seed, "topology",
                                                 index))


def cmd_radiomap(args) -> int:
    if args.action == "build":
        config = _load_validated_config(args.config)
        master_seed = (int(args.seed) if args.seed is not None
                       else config.master_seed)
        topology = _radiomap_topology(config, master_seed, args.index)
        try:
            radio_map = build_radio_map(topology, config,
                                        grid_step_m=args.grid_step)
            save_radio_map(radio_map, args.out)
        except RadioMapError as exc:
            _err(f"build failed: {exc}")
            return EXIT_FAILURE
        print(f"wrote {args.out}: {radio_map.n_nodes} nodes "
              f"({radio_map.n_lat} x {radio_map.n_lon}), "
              f"digest {radio_map.digest()[:16]}...")
        return EXIT_OK

    if args.action == "info":
        try:
            radio_map = load_radio_map(args.map)
        except RadioMapError as exc:
            _err(f"unreadable map: {exc}")
            return EXIT_FAILURE
        lat_min, lat_max, lon_min, lon_max = radio_map.region
        print(f"nodes: {radio_map.n_nodes} ({radio_map.n_lat} x "
              f"{radio_map.n_lon}), step {radio_map.grid_step_m} m")
        print(f"region: lat [{lat_min:.6f}, {lat_max:.6f}], "
              f"lon [{lon_min:.6f}, {lon_max:.6f}], "
              f"altitude {radio_map.altitude_m} m")
        print(f"carrier: {radio_map.freq_hz / 1e9:.3f} GHz")
        print(f"topology digest: {radio_map.topology_digest}")
        print(f"config digest:   {radio_map.config_digest}")
        print(f"map digest:      {radio_map.digest()}")
        return EXIT_OK

    if args.action == "verify":
        config = _load_validated_config(args.config)
        master_seed = (int(args.seed) if args.seed is not None
                       else config.master_seed)
        topology = _radiomap_topology(config, master_seed, args.index)
        try:
            radio_map = load_radio_map(args.map)
            checked = verify_radio_map(radio_map, topology, config,
                                       n_check=args.n_check)
        except RadioMapError as exc:
            _err(f"verification failed: {exc}")
            return EXIT_FAILURE
        print(f"verified {checked} nodes against direct recomputation")
        return EXIT_OK

    _err(f"unknown radiomap action {args.action!r}")
    return EXIT_USAGE


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(parser, default_out: str) -> None:
    parser.add_argument("--config", default=default_config_path(),
                        help="TOML scenario config (default: shipped)")
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed (default: from config)")
    parser.add_argument("--schemes", default=",".join(SCHEMES),
                        help="comma-separated scheme subset")
    parser.add_argument("--out", default=default_out,
                        help="output directory")
    parser.add_argument("--parallelism", type=int, default=1,
                        help="worker processes for topology replication")
    parser.add_argument("--mc-samples", type=int, default=None,
                        help="override evaluation Monte Carlo sample count")
    parser.add_argument("--n-topologies", type=int, default=None,
                        help="override number of random topologies")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satshare",
        description=("Joint time-frequency spectrum sharing between a "
                     "satellite uplink overlay of low-altitude aircraft "
                     "and a terrestrial 5G downlink."))
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check a config file")
    p_val.add_argument("--config", default=default_config_path())
    p_val.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="replicate all schemes and report")
    _add_common(p_run, "runs/latest")
    p_run.add_argument("--radiomap", default=None,
                       help="radio-map file; enables lookup-mode planner CSI")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="replicate over a parameter grid")
    _add_common(p_sweep, "sweeps/latest")
    p_sweep.add_argument("--parameter", required=True,
                         choices=("tbs_power", "T", "F"))
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values, e.g. 0,5,10")
    p_sweep.set_defaults(func=cmd_sweep)

    p_map = sub.add_parser("radiomap", help="build/inspect/verify gain maps")
    map_sub = p_map.add_subparsers(dest="action", required=True)
    m_build = map_sub.add_parser("build")
    m_build.add_argument("--config", default=default_config_path())
    m_build.add_argument("--seed", type=int, default=None)
    m_build.add_argument("--index", type=int, default=0,
                         help="topology replication index the map serves")
    m_build.add_argument("--grid-step", type=float, default=None)
    m_build.add_argument("--out", required=True)
    m_build.set_defaults(func=cmd_radiomap)
    m_info = map_sub.add_parser("info")
    m_info.add_argument("--map", required=True)
    m_info.set_defaults(func=cmd_radiomap)
    m_verify = map_sub.add_parser("verify")
    m_verify.add_argument("--map", required=True)
    m_verify.add_argument("--config", default=default_config_path())
    m_verify.add_argument("--seed", type=int, default=None)
    m_verify.add_argument("--index", type=int, default=0)
    m_verify.add_argument("--n-check", type=int, default=100)
    m_verify.set_defaults(func=cmd_radiomap)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
