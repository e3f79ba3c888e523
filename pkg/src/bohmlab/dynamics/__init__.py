"""Guidance laws and trajectory integration."""
from .integrate import (
    BatchIntegrator,
    Controls,
    PathBatch,
    RelabelReport,
    Trajectory,
    build_series,
    integrate,
    relabel_then_integrate_check,
    write_trajectory_csv,
)
from .laws import (
    NODE_FLOOR,
    FullLaw,
    Law,
    ReducedLaw,
    SymmetrizedLaw,
    VelocityField,
    law_from_tag,
    velocity_full,
    velocity_reduced,
    velocity_symmetrized,
)
from .permutation import Permutation, apply_permutation
from .track import FieldTrack

__all__ = [
    "BatchIntegrator", "Controls", "FieldTrack", "FullLaw", "Law", "NODE_FLOOR",
    "PathBatch", "Permutation", "ReducedLaw", "RelabelReport", "SymmetrizedLaw",
    "Trajectory", "VelocityField", "apply_permutation", "build_series", "integrate",
    "law_from_tag", "relabel_then_integrate_check", "velocity_full",
    "velocity_reduced", "velocity_symmetrized", "write_trajectory_csv",
]
