"""Classical and tapered Potts models for categorical lattice data."""

__version__ = "0.1.0"

from .errors import (ConvergenceError, DegenerateDataError, DimensionError,
                     EnumerationCapError, PottsError, SteppingStallError, TauSearchError)
from .lattice import (FREE, PERIODIC, ExactDistribution, Grid, PottsParams, SuffStats,
                      TaperingSpec, delta_s, exact_distribution, phase_transition_beta,
                      random_grid, suff_stats, unnormalized_log_prob)
from .samplers import (ChainConfig, SampleBatch, draw, gibbs_sample, quench, sample_like,
                       swendsen_wang_sample, tapered_gibbs_sample)
from .hull import convex_hull_gamma, in_convex_hull
from .inference import (FitReport, SteppingConfig, StatsSummary, cumulant_approx,
                        cumulant_maximizer, fit_pseudolikelihood, mcmcmle, moment_check,
                        monte_carlo_se, naive_loglik_ratio, partial_stepping,
                        pseudo_log_likelihood)
from .tapering import (DiagnosisReport, TauSearchConfig, TauSearchResult, assess,
                       bimodality_coefficient, choose_tau, diagnose, is_unimodal)
from .scenario import ScenarioConfig, builtin_scenarios, gamma_exp_cov, generate_scenario
from .io import read_grid, write_grid
