"""Rendering for disorder-sweep CSV outputs.

Reads only the documented CSV schemas (observable tables with columns
delta,w,mean,stderr,n and the optional predicted-curves table
alpha,w,detuning,decay); knows nothing about how they were produced.
"""

from .io import ObservableGrid, read_curves_csv, read_manifest, read_observable_csv
from .figures import (
    FigureSpec,
    SectionSpec,
    render_ipr_sections,
    render_phase_diagram,
)

__version__ = "0.1.0"

__all__ = [
    "ObservableGrid",
    "read_observable_csv",
    "read_curves_csv",
    "read_manifest",
    "FigureSpec",
    "SectionSpec",
    "render_phase_diagram",
    "render_ipr_sections",
    "__version__",
]
