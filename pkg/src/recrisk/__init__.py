"""Recovery-based solvency risk measures and their applications."""

from .adjustments import (AggRecAdjConfig, RegulatoryRegime, agg_rec_adj,
                          case_study_sweep, rec_adj, regulatory_capital)
from .allocation import (AllocationResult, DivisionalSample,
                         allocation_property_check, euler_allocation, rorac,
                         rorac_from_sample)
from .balancesheet import (BalanceSheetModel, SimulationResult, gamma_cdf,
                           gamma_quantile, loss_probability,
                           mixture_gamma_cdf, mixture_gamma_quantile,
                           normal_cdf, normal_quantile, sample_scenarios,
                           uniform_stream)
from .calibration import (CalibratedGamma, CalibrationInput, calibrate_gamma,
                          discretize_gamma, normal_var, verify_calibration)
from .errors import (AmbiguousBindingIndex, ConstructionInfeasible,
                     DenominatorNotPositive, NumericalError, RecriskError,
                     SolverStalled, TargetReturnInfeasible)
from .frontier import (FrontierResult, PortfolioProblem, build_lp,
                       efficient_frontier, minimax_check, position_sample,
                       psi, solve_portfolio)
from .measures import (DualBound, PiecewiseEvaluation, SolvencyVerdict,
                       avar_empirical, l_reavar, l_revar, min_recovery_pair,
                       reavar, reavar_dual_bound, reavar_grid, reavar_pieces,
                       recovery_probability_curve, revar, revar_grid,
                       revar_pieces, solvency_test, var_empirical)
from .recovery import RecoveryFunction
from .samples import WeightedSample, read_scenario_csv, write_scenario_csv
from .simplex import LinearProgram, LPSolution, solve_lp
from .stress import (ExtremalSearchConfig, ExtremalWitness,
                     PeakedLiabilityModel, TwoStateCase, extremal_construction,
                     peaked_cdf, peaked_density, peaked_quantile,
                     peaked_regulatory, peaked_revar, two_state_measures,
                     two_state_sample)

__version__ = "0.1.0"
