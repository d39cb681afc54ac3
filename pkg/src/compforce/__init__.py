"""Echo state networks trained online by RLS, composite RLS and composite
LMS FORCE rules, with a Mackey-Glass prediction benchmark."""

from .config import ExperimentConfig, benchmark_config, config_dump, config_load
from .harness import RunRecord, convergence_step, mse, run_experiment, seed_sweep
from .learners import (FilterBank, LearnerOutput, RlsState, composite_lms_step,
                       composite_rls_step, filter_update, generalized_error, prior_error,
                       rls_force_step, rls_update_P)
from .reservoir import (EsnModel, ReservoirState, SparseMatrix, build_esn, load_model,
                        readout, reservoir_step, save_model, spectral_diagnostic)
from .rng import SeededRng, rng_uniform
from .signals import MgsState, mackey_glass, mgs_new, mgs_step

__version__ = "0.1.0"
