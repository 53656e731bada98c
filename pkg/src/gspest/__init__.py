"""Adaptive estimation of bandlimited graph signals.

Builds nearest-neighbour graphs over geographic stations, projects signals
onto the low-frequency Laplacian eigenbasis, tracks them online from noisy
subsampled observations with LMS and RLS estimators, and checks the
measured learning curves against closed-form predictions.
"""

from ._version import __version__
from .estimators import (LmsState, RlsState, SignalModel, error_signal, lms_init,
                         lms_msd_trajectory, lms_step, msd, msd_db, rls_gain_matrix,
                         rls_init, rls_msd_trajectory, rls_step)
from .graph import (BandBasis, GftBasis, Graph, StationTable, band_select,
                    build_knn_graph, gft_basis, haversine_km, laplacian,
                    project_bandlimited)
from .harness import (ConfigError, DeviationStats, Experiment, ExperimentConfig,
                      RunResult, compare, prepare_experiment, run_experiment,
                      synthetic_stations)
from .io import DataError
from .noise import SCENARIOS, NoiseModel, build_cw, draw_noise, noiseless, scenario_coefficients
from .sampling import (SamplingSet, apply_sampling, check_recoverability,
                       greedy_max_lambda_min, random_sampling, sampled_gram,
                       stable_step_range)
from .theory import (TheoryCurve, lms_steady_state, lms_theory_exact, lms_theory_paper,
                     rls_steady_state, rls_theory_exact, rls_theory_paper,
                     solve_lms_lyapunov)

__all__ = [
    "__version__",
    "BandBasis", "GftBasis", "Graph", "StationTable",
    "band_select", "build_knn_graph", "gft_basis", "haversine_km", "laplacian",
    "project_bandlimited",
    "SamplingSet", "apply_sampling", "check_recoverability", "greedy_max_lambda_min",
    "random_sampling", "sampled_gram", "stable_step_range",
    "SCENARIOS", "NoiseModel", "build_cw", "draw_noise", "noiseless", "scenario_coefficients",
    "LmsState", "RlsState", "SignalModel", "error_signal", "lms_init", "lms_msd_trajectory",
    "lms_step", "msd", "msd_db", "rls_gain_matrix", "rls_init", "rls_msd_trajectory", "rls_step",
    "TheoryCurve", "lms_steady_state", "lms_theory_exact", "lms_theory_paper",
    "rls_steady_state", "rls_theory_exact", "rls_theory_paper", "solve_lms_lyapunov",
    "ConfigError", "DataError", "DeviationStats", "Experiment", "ExperimentConfig",
    "RunResult", "compare", "prepare_experiment", "run_experiment", "synthetic_stations",
]
