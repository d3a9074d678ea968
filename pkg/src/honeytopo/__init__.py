"""Coupled-dipole simulator for light in honeycomb lattices of two-level atoms.

Submodules: lattice (geometry + disorder), green (matrix assembly), spectrum
(biorthogonal modes and diagnostics), bott (topological index), perturb
(weak-disorder expansion), ensemble (disorder sweeps), cli (command line).
"""

from .lattice import (
    PhysicalParams,
    SampleGeometry,
    DisorderedConfiguration,
    RegionLabels,
    build_hexagonal_sample,
    build_square_sample,
    apply_positional_disorder,
    export_geometry_csv,
    ideal_configuration,
    partition_bulk_edge,
)
from .green import GreenMatrix, assemble_green_matrix, coupling_block, scalar_factors
from .spectrum import (
    ModeSet,
    classify_modes,
    compute_ipr,
    density_of_states,
    diagonalize_biorthogonal,
    measure_bulk_gap,
    measure_gap,
)
from .bott import BottInput, bott_index, bott_scan, build_projected_position_unitaries
from .perturb import (
    DerivativeMatrices,
    PerturbedSpectrum,
    averaged_second_order_shift,
    derivative_matrices,
    predicted_edge_spectrum,
)
from .ensemble import PhaseDiagram, SweepPlan, decay_map, ipr_section, run_sweep, write_phase_diagram

__version__ = "0.1.0"

__all__ = [
    "PhysicalParams",
    "SampleGeometry",
    "DisorderedConfiguration",
    "RegionLabels",
    "build_hexagonal_sample",
    "build_square_sample",
    "apply_positional_disorder",
    "export_geometry_csv",
    "ideal_configuration",
    "partition_bulk_edge",
    "GreenMatrix",
    "assemble_green_matrix",
    "coupling_block",
    "scalar_factors",
    "ModeSet",
    "classify_modes",
    "compute_ipr",
    "density_of_states",
    "diagonalize_biorthogonal",
    "measure_bulk_gap",
    "measure_gap",
    "BottInput",
    "bott_index",
    "bott_scan",
    "build_projected_position_unitaries",
    "DerivativeMatrices",
    "PerturbedSpectrum",
    "averaged_second_order_shift",
    "derivative_matrices",
    "predicted_edge_spectrum",
    "PhaseDiagram",
    "SweepPlan",
    "decay_map",
    "ipr_section",
    "run_sweep",
    "write_phase_diagram",
    "__version__",
]
