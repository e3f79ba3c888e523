"""Configuration-dependent sets of real particles."""
from .fibers import (
    SectorQuadrature,
    fiber_current,
    fiber_density,
    jump_rate,
    sector_cell_masses,
    sector_channels,
    sector_masses,
)
from .jumps import (
    JumpProcess,
    SectorPaths,
    path_rngs,
    projection_oracle,
    sector_histogram_json,
    simulate_jump_process,
    write_event_log,
)
from .partition import Face, JumpEvent, ProjectedState, RegionPartition, project

__all__ = [
    "Face", "JumpEvent", "JumpProcess", "ProjectedState", "RegionPartition",
    "SectorPaths", "SectorQuadrature", "fiber_current", "fiber_density", "jump_rate",
    "path_rngs", "project", "projection_oracle", "sector_cell_masses",
    "sector_channels", "sector_histogram_json", "sector_masses",
    "simulate_jump_process", "write_event_log",
]
