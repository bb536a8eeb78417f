"""
When the L1 path misses the true support
========================================

With negative coefficients and a noise variable that is negatively
correlated with all of them, the L1 path can admit the noise variable
before the weak signals.  Block FLASH still contains the right signed
support for correlations somewhat above the Lasso bound.
"""

import flashpath as fp

S = 5
print(f"Lasso bound {fp.mu_lasso_bound(S):.4f}")
print(f"block FLASH bound (q1=0.6, q2=0.4) {fp.mu_flash_bound(S, 0.6, 0.4):.4f}")

# %%
# A correlation 5% above the Lasso bound; three large and two small signals.

design = fp.build_claim1_design(S, 20, 1.05 * fp.mu_lasso_bound(S), q1=0.6)
print("smallest eigenvalue of the design:", round(design.min_eigenvalue, 4))
report = fp.recovery_experiment(design, n=200, noise_sd=0.05, reps=50, seed=0)
print(report.to_csv())
