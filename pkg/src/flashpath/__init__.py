"""FLASH: regularization paths that interpolate between the Lasso and
forward selection, for least squares and logistic regression."""

from .data import (CoefficientEstimate, Dataset, Scaling, StandardizedDataset, destandardize,
                   load_csv, residual_correlations, standardize)
from .exceptions import (ConvergenceError, DataError, FlashError, SingularGramError,
                         StepBudgetError)
from .glm import (GlmData, GlmPath, GlmPathPoint, deviance, fit_glm_block_flash,
                  fit_glm_flash_path, glm_block_paths, glm_corrector, glm_forward_path,
                  glm_gradient_corr, glm_loglik, glm_mu, glm_predictor)
from .linear import (Breakpoint, DeltaSchedule, FlashPath, PathState, advance_step,
                     direction_vector, fit_block_paths, fit_flash_path, gamma_forward_check,
                     gamma_lasso, path_coefficients_at, relaxation_point, zero_cross_gamma)
from .simulate import (SimulationMetrics, SimulationScenario, evaluate_metrics, gen_glm,
                       gen_linear, run_benchmark)
from .theory import (RecoveryDesign, build_claim1_design, mu_flash_bound, mu_lasso_bound,
                     recovery_experiment, signed_support_match)
from .tuning import (BlockFlash, CandidatePoint, Forward, GForward, GlobalFlash, GLasso,
                     GlmBlockFlash, GRelaxo, Lasso, Relaxo, TuningResult, enumerate_candidates,
                     fit_block_flash, fit_global_flash, kfold_cv_select, validation_select)

__version__ = "0.1.0"
