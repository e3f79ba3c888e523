"""Turn a validated RunConfig into library objects."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..dynamics.integrate import Controls
from ..dynamics.laws import FullLaw, ReducedLaw, SymmetrizedLaw
from ..ensemble.runner import Experiment, JumpLaw
from ..varset.partition import RegionPartition
from ..wavefield.configs import IndexSet
from ..wavefield.grid import Grid, GridSpec, ModelParams, build_grid
from ..wavefield.state import Potential, SpinorWaveFunction, init_state
from .config import LawConfig, RunConfig


@dataclass
class Built:
    config: RunConfig
    grid: Grid
    params: ModelParams
    psi0: SpinorWaveFunction
    potential: Optional[Potential]
    controls: Controls
    partition: Optional[RegionPartition]
    velocity_factor: float = 1.0

    def law(self, lc: LawConfig):
        scale = lc.velocity_scale * self.velocity_factor
        n = self.grid.num_particles
        if lc.kind == "full":
            return FullLaw(velocity_scale=scale)
        if lc.kind == "reduced":
            return ReducedLaw(IndexSet(lc.real_set, n), velocity_scale=scale)
        if lc.kind == "symmetrized":
            return SymmetrizedLaw(velocity_scale=scale)
        if scale != 1.0:
            from ..errors import ValidationError
            raise ValidationError("velocity_scale is not supported for the jump law")
        return JumpLaw(self.partition)

    def experiment(self) -> Experiment:
        return Experiment(self.psi0, self.config.experiment.T, self.controls, self.potential)

    def initial_state(self) -> Optional[SpinorWaveFunction]:
        rec = self.config.experiment.initial_state
        return None if rec is None else init_state(rec, self.grid, self.params)


def build(cfg: RunConfig, velocity_factor: float = 1.0) -> Built:
    """Construct grid, state, potential, controls and partition (errors exit 3)."""
    g = cfg.grid
    grid = build_grid(GridSpec(g.num_particles, g.space_dim, tuple(g.box), g.points_per_axis,
                               g.memory_budget))
    m = cfg.model
    masses = tuple(m.masses) if m.masses is not None else (1.0,) * g.num_particles
    params = ModelParams(masses, hbar=m.hbar, spin_dim=m.spin_dim)
    psi0 = init_state(cfg.state, grid, params)
    pc = cfg.potential
    potential = None
    if pc.kind == "harmonic":
        k = pc.stiffness
        potential = Potential.harmonic(k if isinstance(k, list) else [k] * g.num_particles)
    c = cfg.controls
    controls = Controls(stride=c.stride, wave_dt=c.wave_dt, dt_traj=c.dt_traj,
                        substeps=c.substeps, eta=c.eta, max_halvings=c.max_halvings)
    part = None
    if cfg.experiment.partition is not None:
        bounds = [(float("-inf") if a is None else a, float("inf") if b is None else b)
                  for a, b in cfg.experiment.partition.bounds]
        part = RegionPartition(bounds)
    return Built(cfg, grid, params, psi0, potential, controls, part, velocity_factor)
