"""Wavefunctions on periodic grids and the fields derived from them."""
from .configs import IndexSet, LabeledConfig, UnorderedConfig, canonical_order
from .evolve import Propagator, SnapshotSeries, evolve, evolve_series, kinetic_symbol
from .fields import (
    FieldBundle,
    SymmetrizedDensity,
    contract_axis,
    density,
    density_current,
    interval_weights,
    marginalize,
    microscopic_current,
    partial_inner_product,
    point_weights,
    reduced_current,
    reduced_density,
    spectral_derivative,
    symmetrized_currents,
    symmetrized_density,
)
from .grid import Grid, GridSpec, ModelParams, build_grid
from .interp import eval_field, interpolate
from .snapshot import dump_state, load_state
from .state import Potential, SpinorWaveFunction, init_state, permute_particles

__all__ = [
    "FieldBundle", "Grid", "GridSpec", "IndexSet", "LabeledConfig", "ModelParams",
    "Potential", "Propagator", "SnapshotSeries", "SpinorWaveFunction",
    "SymmetrizedDensity", "UnorderedConfig", "build_grid", "canonical_order",
    "contract_axis", "density", "density_current", "dump_state", "eval_field",
    "evolve", "evolve_series", "init_state", "interpolate", "interval_weights",
    "kinetic_symbol", "load_state", "marginalize", "microscopic_current",
    "partial_inner_product", "permute_particles", "point_weights",
    "reduced_current", "reduced_density", "spectral_derivative",
    "symmetrized_currents", "symmetrized_density",
]
