"""Trajectory simulation of Bohm-type particle laws on periodic grids.

Subpackages
-----------
wavefield  grid, states, split-step evolution, densities and currents
dynamics   full, reduced and symmetrized velocity laws, RK4 integration
varset     region-dependent real-particle sets and the jump process
ensemble   equilibrium sampling, ensembles, KS / chi-square checks
cli        config-driven runner (``bohmlab run|verify|dump-state``)
"""

__version__ = "0.1.0"
