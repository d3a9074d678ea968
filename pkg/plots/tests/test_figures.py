"""Rendering: files produced, contour logic, error paths, determinism."""

import numpy as np
import pytest

from honeytopo_plots import cli
from honeytopo_plots.figures import (
    FigureSpec,
    SectionSpec,
    render_ipr_sections,
    render_phase_diagram,
)

DELTAS = np.arange(0.0, 14.1, 2.0)
WS = np.array([0.0, 0.1, 0.2, 0.3])


def bott_value(d, w):
    # plateau at -1 inside (2, 12) that erodes with w: crosses -0.5
    inside = 2.0 < d < 12.0
    return -1.0 + 2.5 * w if inside else 0.0


def write_dir(root, ws=WS, bott=bott_value, names=("bott", "edge_dos", "bulk_ipr", "decay")):
    root.mkdir(parents=True, exist_ok=True)
    fns = {
        "bott": bott,
        "edge_dos": lambda d, w: 3.0 if 2.0 < d < 12.0 else 0.5,
        "bulk_dos": lambda d, w: 0.1 if 2.0 < d < 12.0 else 30.0,
        "bulk_ipr": lambda d, w: 0.02 + 0.01 * w + 0.001 * d,
        "decay": lambda d, w: 1.0 + 0.05 * d,
    }
    for name in names:
        lines = ["delta,w,mean,stderr,n"]
        for d in DELTAS:
            for w in ws:
                lines.append(f"{d},{w},{fns[name](d, w)},0.01,25")
        (root / f"{name}.csv").write_text("\n".join(lines) + "\n")
    (root / "manifest.json").write_text('{"format": "honeytopo-phase-diagram-v1"}\n')
    return root


def test_phase_diagram_with_contour(tmp_path):
    indir = write_dir(tmp_path / "sweep")
    out = tmp_path / "phase.png"
    info = render_phase_diagram(FigureSpec(in_dir=indir, out_path=out))
    assert out.is_file() and out.stat().st_size > 0
    assert info["contour_drawn"] is True
    assert info["panels"] == ["bott", "edge_dos", "bulk_ipr", "decay"]


def test_contour_absent_when_not_crossed(tmp_path):
    indir = write_dir(tmp_path / "sweep", bott=lambda d, w: -0.2 * np.exp(-d))
    info = render_phase_diagram(FigureSpec(in_dir=indir, out_path=tmp_path / "p.png"))
    assert info["contour_drawn"] is False


def test_single_w_column_renders(tmp_path):
    indir = write_dir(tmp_path / "sweep", ws=np.array([0.0]))
    info = render_phase_diagram(FigureSpec(in_dir=indir, out_path=tmp_path / "p.png"))
    assert info["contour_drawn"] is False  # cannot contour a single column
    assert (tmp_path / "p.png").is_file()


def test_mismatched_grids_refused(tmp_path):
    indir = write_dir(tmp_path / "sweep")
    lines = ["delta,w,mean,stderr,n"]
    for d in DELTAS[:-1]:  # one delta short
        for w in WS:
            lines.append(f"{d},{w},1.0,0.0,25")
    (indir / "decay.csv").write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError, match="does not match"):
        render_phase_diagram(FigureSpec(in_dir=indir, out_path=tmp_path / "p.png"))


def test_curves_overlay(tmp_path):
    indir = write_dir(tmp_path / "sweep")
    curves = tmp_path / "curves.csv"
    curves.write_text(
        "alpha,w,detuning,decay\n"
        + "\n".join(f"4,{w},{5.0 + w},1.0" for w in WS)
        + "\n"
    )
    info = render_phase_diagram(
        FigureSpec(in_dir=indir, out_path=tmp_path / "p.png", curves_path=curves)
    )
    assert info["curves_overlaid"] is True


def test_ipr_sections(tmp_path):
    indir = write_dir(tmp_path / "sweep", names=("bulk_ipr", "bulk_dos"))
    out = tmp_path / "ipr.png"
    info = render_ipr_sections(SectionSpec(in_dir=indir, out_path=out))
    assert out.is_file()
    assert info["n_lines"] == WS.size
    lo, hi = info["gap_edges"]
    assert lo == pytest.approx(3.0) and hi == pytest.approx(11.0)  # bin edges around (4..10)


def test_ipr_single_w_and_override(tmp_path):
    indir = write_dir(tmp_path / "sweep", names=("bulk_ipr", "bulk_dos"))
    info = render_ipr_sections(
        SectionSpec(in_dir=indir, out_path=tmp_path / "i.png", w_select=0.2,
                    gap_override=(2.0, 12.0))
    )
    assert info["n_lines"] == 1 and info["gap_edges"] == (2.0, 12.0)
    with pytest.raises(ValueError, match="no W = 0.15"):
        render_ipr_sections(
            SectionSpec(in_dir=indir, out_path=tmp_path / "j.png", w_select=0.15)
        )


def test_render_is_deterministic(tmp_path):
    indir = write_dir(tmp_path / "sweep")
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render_phase_diagram(FigureSpec(in_dir=indir, out_path=a))
    render_phase_diagram(FigureSpec(in_dir=indir, out_path=b))
    assert a.read_bytes() == b.read_bytes()


def test_cli_phase_and_ipr(tmp_path, capsys):
    indir = write_dir(tmp_path / "sweep", names=("bott", "edge_dos", "bulk_ipr",
                                                 "decay", "bulk_dos"))
    rc = cli.main(["phase", "--in-dir", str(indir), "--out", str(tmp_path / "p.png"),
                   "--contour-level", "-0.5"])
    assert rc == 0 and "contour drawn" in capsys.readouterr().out
    rc = cli.main(["ipr", "--in-dir", str(indir), "--out", str(tmp_path / "i.png"),
                   "--w", "0.1", "--gap", "2:12"])
    assert rc == 0
    assert (tmp_path / "i.png").is_file()


def test_cli_error_paths(tmp_path, capsys):
    rc = cli.main(["phase", "--in-dir", str(tmp_path), "--out", str(tmp_path / "p.png")])
    assert rc == 1
    assert "bott.csv" in capsys.readouterr().err
