"""Equilibrium sampling, seeded ensembles and the statistical checks built on them."""
from .binning import AdaptiveBins, SectorBins, wedge_cell_masses
from .checks import (DEFAULT_SEEDS, CalibrationReport, CheckReport, Reference, SeedOutcome,
                     calibration_check, equivalence_check, equivariance_check,
                     markovization_check, observable_coords)
from .runner import (WORKERS_ENV, EnsembleResult, Experiment, ExperimentPlan, JumpLaw,
                     config_hash, default_workers, equilibrium_density, run_ensemble, stream)
from .sampling import cell_index, sample_config, sort_points
from .stats import (TestResult, chi_square_binned, chi_square_two_sample, ks_two_sample,
                    merge_small_bins)

__all__ = [n for n in dir() if not n.startswith("_")]
