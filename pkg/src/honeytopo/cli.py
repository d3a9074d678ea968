"""Command-line front end.

Subcommands: geometry, spectrum, bott, perturb, sweep.  Exit codes: 0 on
success with all requested outputs written, 2 for usage/config errors
(argparse conventions), 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import bott as bott_mod
from . import ensemble, green, lattice, perturb, spectrum

DEFAULT_WINDOW = (0.0, 14.0)


def _add_common(p: argparse.ArgumentParser, size: bool = True) -> None:
    if size:
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--hex-layers", type=int, metavar="N",
                       help="hexagonal flake with N plaquette rings (6 N^2 atoms)")
        g.add_argument("--square-side", type=float, metavar="L",
                       help="square cut of side L (lambda0 units)")
    p.add_argument("--a", type=float, default=0.05, help="lattice spacing / lambda0")
    p.add_argument("--delta-b", type=float, default=0.0)
    p.add_argument("--delta-ab", type=float, default=0.0)
    p.add_argument("--w", type=float, default=0.0, help="disorder strength (units of a)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target", choices=("all", "b-only"), default="all")
    p.add_argument("--n-edge", type=int, default=4)
    p.add_argument("--threads", type=int, default=None)


def _params(args) -> lattice.PhysicalParams:
    return lattice.PhysicalParams(a=args.a, delta_b=args.delta_b, delta_ab=args.delta_ab)


def _geometry(args) -> lattice.SampleGeometry:
    if args.hex_layers is not None:
        return lattice.build_hexagonal_sample(args.hex_layers, _params(args))
    return lattice.build_square_sample(args.square_side, _params(args))


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("HONEYTOPO_THREADS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise SystemExit(f"HONEYTOPO_THREADS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def _parse_grid(text: str) -> np.ndarray:
    """'lo:hi:step' or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid must be lo:hi:step, got {text!r}")
        lo, hi, step = (float(x) for x in parts)
        if step <= 0 or hi < lo:
            raise argparse.ArgumentTypeError(f"bad grid bounds {text!r}")
        return np.arange(lo, hi + step / 2, step)
    return np.array([float(x) for x in text.split(",")])


def cmd_geometry(args) -> int:
    geom = _geometry(args)
    regions = lattice.partition_bulk_edge(geom, args.n_edge)
    print(f"atoms: {geom.n_atoms}")
    print(f"sublattice A: {(geom.sublattice == 'A').sum()}  B: {(geom.sublattice == 'B').sum()}")
    print(f"bulk: {regions.n_bulk}  edge: {geom.n_atoms - regions.n_bulk}  "
          f"bulk radius: {regions.bulk_radius:.6g}")
    if regions.bulk_is_empty:
        print("warning: bulk region is empty at this n-edge", file=sys.stderr)
    if args.out:
        lattice.export_geometry_csv(geom, regions, args.out)
        print(f"wrote {args.out}")
    return 0


def _diagonalize_cli(args, want_left: bool):
    geom = _geometry(args)
    cfg = lattice.apply_positional_disorder(geom, args.w, args.target, args.seed)
    g = green.assemble_green_matrix(cfg, _params(args))
    modes = spectrum.diagonalize_biorthogonal(g, want_left=want_left)
    return geom, cfg, g, modes


def cmd_spectrum(args) -> int:
    geom, cfg, g, modes = _diagonalize_cli(args, want_left=False)
    regions = lattice.partition_bulk_edge(geom, args.n_edge)
    modes = spectrum.classify_modes(modes, regions)
    if regions.bulk_is_empty:
        width, lo, hi = spectrum.measure_gap(modes.detuning, DEFAULT_WINDOW)
    else:
        width, lo, hi = spectrum.measure_bulk_gap(modes, regions)
    print(f"modes: {modes.n_modes}")
    print(f"bulk gap estimate: width {width:.6g} over [{lo:.6g}, {hi:.6g}]")
    if args.dump_matrix:
        green.write_matrix_dump(g, args.dump_matrix)
        print(f"wrote {args.dump_matrix}")
    if args.out:
        spectrum.export_modes_csv(modes, args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_bott(args) -> int:
    if args.hex_layers is not None:
        print("bott expects a square sample (use --square-side)", file=sys.stderr)
        return 2
    geom, cfg, g, modes = _diagonalize_cli(args, want_left=True)
    modes, regularized = spectrum.regularize_degeneracies(g, modes)
    if regularized:
        print("note: exact degeneracies lifted with tiny symmetry-breaking shifts", file=sys.stderr)
    deltas = _parse_grid(args.delta_scan) if args.delta_scan else np.array([args.delta])
    rows = bott_mod.bott_scan(modes, cfg.positions, geom.shape.lx, geom.shape.ly, deltas)
    for d, cb, k in rows:
        print(f"delta={d:g}  C_B={cb:+.6f}  modes={k}")
    if args.out:
        bott_mod.export_bott_csv(rows, args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_perturb(args) -> int:
    geom, cfg, g, modes = _diagonalize_cli(args, want_left=True)
    if args.w != 0:
        print("perturb expands around the ideal lattice; --w is ignored here", file=sys.stderr)
    modes, regularized = spectrum.regularize_degeneracies(g, modes)
    if regularized:
        print("note: exact degeneracies lifted with tiny symmetry-breaking shifts", file=sys.stderr)
    derivs = perturb.derivative_matrices(geom, _params(args), method="analytic")
    shifted = perturb.averaged_second_order_shift(modes, derivs, geom.a)
    ws = _parse_grid(args.w_grid)
    regions = lattice.partition_bulk_edge(geom, args.n_edge)
    modes = spectrum.classify_modes(modes, regions)
    sel = np.flatnonzero(modes.klass == "edge")
    if sel.size == 0:
        sel = np.arange(modes.n_modes)
        print("note: no edge-classified modes; exporting curves for all modes",
              file=sys.stderr)
    curves = perturb.predicted_edge_spectrum(shifted, sel, ws)
    print(f"modes: {modes.n_modes}, curves for {sel.size} edge modes over {len(ws)} W values")
    if args.out:
        perturb.export_shift_csv(shifted, args.out)
        print(f"wrote {args.out}")
    if args.curves_out:
        perturb.export_curves_csv(curves, args.curves_out)
        print(f"wrote {args.curves_out}")
    return 0


_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["geometry", "params", "disorder", "spectral", "output"],
    "properties": {
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "hex_layers": {"type": "integer", "minimum": 1},
                "square_side": {"type": "number", "exclusiveMinimum": 0},
                "n_edge": {"type": "integer", "minimum": 0},
            },
        },
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "a": {"type": "number", "exclusiveMinimum": 0},
                "delta_b": {"type": "number"},
                "delta_ab": {"type": "number"},
            },
        },
        "disorder": {
            "type": "object",
            "additionalProperties": False,
            "required": ["w_grid", "n_realizations", "master_seed"],
            "properties": {
                "w_grid": {"type": "array", "items": {"type": "number", "minimum": 0},
                           "minItems": 1},
                "target": {"enum": ["all", "b-only"]},
                "master_seed": {"type": "integer", "minimum": 0},
                "n_realizations": {"type": "integer", "minimum": 1},
            },
        },
        "spectral": {
            "type": "object",
            "additionalProperties": False,
            "required": ["delta_min", "delta_max", "delta_step"],
            "properties": {
                "delta_min": {"type": "number"},
                "delta_max": {"type": "number"},
                "delta_step": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "required": ["directory"],
            "properties": {
                "directory": {"type": "string"},
                "observables": {
                    "type": "array",
                    "items": {"enum": sorted(ensemble.KNOWN_OBSERVABLES)},
                    "minItems": 1,
                },
            },
        },
    },
}


def load_run_config(path) -> dict:
    """Parse and schema-validate a sweep config; raises SystemExit(2) listing
    every violation with its path."""
    import jsonschema

    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    validator = jsonschema.Draft202012Validator(_CONFIG_SCHEMA)
    errs = sorted(validator.iter_errors(cfg), key=lambda e: e.json_path)
    if errs:
        for e in errs:
            print(f"config error at {e.json_path}: {e.message}", file=sys.stderr)
        raise SystemExit(2)
    return cfg


def plan_from_config(cfg: dict) -> ensemble.SweepPlan:
    geo = cfg["geometry"]
    par = cfg.get("params", {})
    dis = cfg["disorder"]
    spe = cfg["spectral"]
    out = cfg["output"]
    deltas = np.arange(spe["delta_min"], spe["delta_max"] + spe["delta_step"] / 2,
                       spe["delta_step"])
    return ensemble.SweepPlan(
        params=lattice.PhysicalParams(
            a=par.get("a", 0.05),
            delta_b=par.get("delta_b", 0.0),
            delta_ab=par.get("delta_ab", 0.0),
        ),
        w_grid=tuple(float(w) for w in dis["w_grid"]),
        delta_grid=tuple(float(d) for d in deltas),
        n_realizations=int(dis["n_realizations"]),
        master_seed=int(dis["master_seed"]),
        target=dis.get("target", "all"),
        observables=frozenset(out.get("observables",
                                      ["bott", "edge_dos", "bulk_dos", "bulk_ipr", "decay"])),
        hex_layers=int(geo.get("hex_layers", 6)),
        square_side=float(geo.get("square_side", 0.7)),
        n_edge=int(geo.get("n_edge", 4)),
    )


def cmd_sweep(args) -> int:
    cfg = load_run_config(args.config)
    plan = plan_from_config(cfg)
    outdir = args.out if args.out else cfg["output"]["directory"]
    n_jobs = _threads(args)
    print(f"sweep: {len(plan.w_grid)} W x {plan.n_realizations} realizations, "
          f"{len(plan.delta_grid)} detuning points, {n_jobs} worker(s)")
    diagram = ensemble.run_sweep(plan, n_jobs=n_jobs)
    written = ensemble.write_phase_diagram(diagram, outdir)
    for path in written:
        print(f"wrote {path}")
    nfail = len(diagram.metadata.get("failures", []))
    if nfail:
        print(f"note: {nfail} realization(s) failed and were excluded", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="honeytopo",
        description="Collective light modes of honeycomb atomic lattices: "
                    "spectra, Bott index, disorder sweeps.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("geometry", help="build a sample and report its layout")
    _add_common(p)
    p.add_argument("--out", help="write per-atom CSV here")
    p.set_defaults(fn=cmd_geometry)

    p = sub.add_parser("spectrum", help="diagonalize one configuration")
    _add_common(p)
    p.add_argument("--out", help="write per-mode CSV here")
    p.add_argument("--dump-matrix", help="write the raw matrix (binary) here")
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("bott", help="Bott index of a square sample")
    _add_common(p)
    p.add_argument("--delta", type=float, default=7.0, help="projector threshold")
    p.add_argument("--delta-scan", metavar="LO:HI:STEP",
                   help="scan thresholds instead of a single --delta")
    p.add_argument("--out", help="write (delta, C_B) CSV here")
    p.set_defaults(fn=cmd_bott)

    p = sub.add_parser("perturb", help="second-order disorder shifts at W -> 0")
    _add_common(p)
    p.add_argument("--w-grid", default="0:0.1:0.01", metavar="LO:HI:STEP")
    p.add_argument("--out", help="write per-mode quadratic-shift CSV here")
    p.add_argument("--curves-out", help="write predicted edge-mode curves CSV here")
    p.set_defaults(fn=cmd_perturb)

    p = sub.add_parser("sweep", help="disorder-ensemble phase diagram from a TOML config")
    p.add_argument("config", help="path to the run configuration (TOML)")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit:
        raise
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
