"""Strongly monotone variational inequalities: solvers, stability
measurement, gap oracles, and generalization-rate experiments."""

__version__ = "0.1.0"

from .analysis import (BOUND_NOTE, BernsteinResult, BoundSet, StabilityResult,
                       SweepResult, bernstein_check, bernstein_constant,
                       covering_bound, eg_stability_closed_form,
                       evaluate_bounds, fit_loglog_slope, game_bound,
                       gd_stability_bound, generalization_sweep,
                       hp_quantile_sweep, simplex_bound, stability_experiment,
                       stability_gamma, trial_dataset_seed)
from .domains import Ball, Box, Domain, Product, Simplex
from .errors import (BoundViolationError, ConfigError, GenerationError,
                     InfeasiblePointError, NumericalError,
                     VertexEnumerationError)
from .gaps import (GapReport, best_response, empirical_gap, gap, gap_report,
                   generalization_gap, potential_gap, weak_gap)
from .problems import (EmpiricalOperator, NoiseModel, ProblemConstants,
                       QuadraticGame, QuadraticOperator, SampledDataset,
                       constants, empirical_operator, exact_solution,
                       generate_game, generate_operator, monotonicity_modulus,
                       noisy_operator_ceiling, replace_record, sample_dataset,
                       spectral_norm)
from .solvers import (SolverConfig, Trajectory, admissible_eta,
                      contraction_ratio, eg_contraction_bound,
                      eg_contraction_coefficient, eg_step,
                      gd_contraction_bound, gd_step, in_gd_stability_range,
                      run)
