"""Command-line interface: ``ringvortex <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import sys
from datetime import datetime, timezone
from pathlib import Path

from .array_field import COMPONENTS, EVALUATORS, TruncationPolicy, make_sampler
from .errors import ConfigError, DomainError
from .scan import ScanConfig, field_map, load_config, radial_profile, render_heatmaps, resolve_threads
from .topology import GridSpec, component_thresholds, leading_charges, min_atoms, singularity_scan


def _common(p: argparse.ArgumentParser, config_required: bool) -> None:
    p.add_argument("--config", type=Path, required=config_required, help="YAML config, or a CSV exported by this tool")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    p.add_argument("--evaluator", choices=EVALUATORS, help="override the evaluator named in the config")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores, capped by RINGVORTEX_MAX_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringvortex",
        description="Vector field, 3D polarization and topology of a phased ring of dipole emitters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("field-map", help="grid scan of flux, amplitudes and polarization, one CSV per z")
    _common(p, True)
    p.add_argument("--png", action="store_true", help="also render heatmaps (needs matplotlib)")
    p.add_argument("--timestamp", action="store_true", help="record the wall-clock time in the metadata")

    p = sub.add_parser("radial-profile", help="1D cut at a fixed azimuth, one CSV per z")
    _common(p, True)
    p.add_argument("--azimuth", type=float, default=0.0, help="azimuth of the cut in radians (default 0)")

    p = sub.add_parser("singularities", help="locate phase vortices of field components on the config grid")
    _common(p, True)
    p.add_argument("--component", choices=COMPONENTS + ("all",), default="all")
    p.add_argument("--samples", type=int, default=256, help="loop samples for winding confirmation")

    p = sub.add_parser("min-atoms", help="least emitter count for a vortex of charge l")
    _common(p, False)
    p.add_argument("--l", type=int, dest="phase_param", help="phase parameter l (or taken from --config)")
    p.add_argument("--m-z", type=int, dest="m_z", help="magnetic number m_z (or taken from --config)")
    p.add_argument("--n", type=int, dest="n_emitters", help="also report leading charges for this N")

    p = sub.add_parser("verify", help="run the acceptance suite")
    _common(p, False)
    p.add_argument("--max-lattice-index", type=int, help="force a truncation M (M=1 demonstrates a failure)")
    return parser


def _scan_config(args) -> ScanConfig:
    cfg = load_config(args.config)
    if args.evaluator:
        cfg = cfg.with_evaluator(args.evaluator)
    return cfg


def cmd_field_map(args) -> int:
    cfg = _scan_config(args)
    threads = resolve_threads(args.threads)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds") if args.timestamp else None
    for i, z in enumerate(cfg.z_list):
        table = field_map(cfg, z, threads, timestamp=stamp)
        stem = f"field_map_z{i}"
        path = table.write(args.out / f"{stem}.csv")
        print(f"wrote {path} ({table.size} cells, z = {z / cfg.rayleigh_range:.6g} z_R)")
        if args.png and table.size:
            for png in render_heatmaps(table, args.out, stem, cfg.outputs):
                print(f"wrote {png}")
    return 0


def cmd_radial_profile(args) -> int:
    cfg = _scan_config(args)
    threads = resolve_threads(args.threads)
    for i, z in enumerate(cfg.z_list):
        table = radial_profile(cfg, args.azimuth, z, threads=threads)
        path = table.write(args.out / f"radial_profile_z{i}.csv")
        print(f"wrote {path} ({table.size} rows, z = {z / cfg.rayleigh_range:.6g} z_R)")
    return 0


def cmd_singularities(args) -> int:
    cfg = _scan_config(args)
    sampler = make_sampler(cfg.array, cfg.evaluator, cfg.truncation)
    comps = COMPONENTS if args.component == "all" else (args.component,)
    args.out.mkdir(parents=True, exist_ok=True)
    for i, z in enumerate(cfg.z_list):
        grid = GridSpec(cfg.grid_extent, cfg.grid_resolution, z)
        path = args.out / f"singularities_z{i}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write(f"# z_m = {z!r}\n# evaluator = {cfg.evaluator}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["component", "kind", "winding", "rho_x_m", "rho_y_m"])
            count = 0
            for c in comps:
                for rec in singularity_scan(sampler, grid, c, samples=args.samples):
                    w.writerow([c, rec.kind, "" if rec.winding is None else rec.winding,
                                format(rec.location[0], ".16e"), format(rec.location[1], ".16e")])
                    count += 1
        print(f"wrote {path} ({count} records, z = {z / cfg.rayleigh_range:.6g} z_R)")
    return 0


def cmd_min_atoms(args) -> int:
    l, m_z, n = args.phase_param, args.m_z, args.n_emitters
    if args.config is not None:
        cfg = load_config(args.config)
        l = cfg.array.phase_param if l is None else l
        m_z = cfg.array.m_z if m_z is None else m_z
        n = cfg.array.n_emitters if n is None else n
    if l is None or m_z is None:
        raise ConfigError("min-atoms needs --l and --m-z (or a --config)")
    print(f"min_atoms(l={l}, m_z={m_z}) = {min_atoms(l, m_z)}")
    for c, t in component_thresholds(l, m_z).items():
        print(f"  {c:5s} keeps its m=0 order for N >= {t}")
    if n is not None:
        print(f"leading charges for N = {n}:")
        for c, rep in leading_charges(l, m_z, n).items():
            tag = " (mixed)" if rep.mixed else ""
            print(f"  {c:5s} base {rep.base_order:+d}: {list(rep.leading_orders)}{tag}")
    return 0


def cmd_verify(args) -> int:
    from .acceptance import verify

    policy = None
    if args.max_lattice_index is not None:
        policy = TruncationPolicy(max_lattice_index=args.max_lattice_index)
    return 0 if verify(policy) else 1


COMMANDS = {
    "field-map": cmd_field_map,
    "radial-profile": cmd_radial_profile,
    "singularities": cmd_singularities,
    "min-atoms": cmd_min_atoms,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
