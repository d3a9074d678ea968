"""Command line: render figures from a sweep output directory."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FigureSpec, SectionSpec, render_ipr_sections, render_phase_diagram


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="honeytopo-plots",
        description="Render phase-diagram panels and IPR sections from sweep CSVs.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phase", help="multi-panel (delta, W) heatmaps")
    p.add_argument("--in-dir", required=True, help="sweep output directory")
    p.add_argument("--out", required=True, help="image file to write")
    p.add_argument("--contour-level", type=float, default=-0.5,
                   help="level for the white contour on the index panel")
    p.add_argument("--curves", help="optional predicted-curves CSV to overlay")
    p.add_argument("--panels", default=",".join(("bott", "edge_dos", "bulk_ipr", "decay")),
                   help="comma list of observable names")
    p.add_argument("--dpi", type=int, default=150)
    p.set_defaults(fn=cmd_phase)

    p = sub.add_parser("ipr", help="IPR vs detuning with error bars")
    p.add_argument("--in-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--w", type=float, default=None,
                   help="plot a single disorder strength (default: all)")
    p.add_argument("--gap", metavar="LO:HI",
                   help="override the gap-edge verticals")
    p.add_argument("--dos-threshold", type=float, default=0.05,
                   help="gap detection: fraction of the DOS maximum")
    p.add_argument("--dpi", type=int, default=150)
    p.set_defaults(fn=cmd_ipr)
    return ap


def cmd_phase(args) -> int:
    spec = FigureSpec(
        in_dir=Path(args.in_dir),
        out_path=Path(args.out),
        contour_level=args.contour_level,
        curves_path=Path(args.curves) if args.curves else None,
        panels=tuple(s.strip() for s in args.panels.split(",") if s.strip()),
        dpi=args.dpi,
    )
    info = render_phase_diagram(spec)
    print(f"wrote {info['path']} ({len(info['panels'])} panels, "
          f"contour {'drawn' if info['contour_drawn'] else 'not crossed'})")
    return 0


def cmd_ipr(args) -> int:
    gap = None
    if args.gap:
        lo, hi = (float(x) for x in args.gap.split(":"))
        gap = (lo, hi)
    spec = SectionSpec(
        in_dir=Path(args.in_dir),
        out_path=Path(args.out),
        w_select=args.w,
        dos_rel_threshold=args.dos_threshold,
        gap_override=gap,
        dpi=args.dpi,
    )
    info = render_ipr_sections(spec)
    print(f"wrote {info['path']} ({info['n_lines']} curve(s), "
          f"gap edges {info['gap_edges']})")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
