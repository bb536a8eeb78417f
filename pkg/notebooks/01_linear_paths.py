"""
Paths between the Lasso and forward selection
=============================================

A shrinkage factor ``delta`` sets how far each step moves toward the least
squares fit on the current active set.  ``delta = 0`` traces the Lasso and
``delta = 1`` traces forward selection.
"""

import numpy as np

import flashpath as fp

rng = np.random.default_rng(0)
n, p = 60, 8
X = rng.standard_normal((n, p))
X[:, 1] = 0.8 * X[:, 0] + 0.6 * X[:, 1]          # two correlated predictors
beta = np.array([2.0, -1.5, 0, 0, 1.0, 0, 0, 0])
y = X @ beta + rng.standard_normal(n)
sd = fp.standardize(fp.Dataset(X, y))

# %%
# Order of entry and size of the largest residual correlation at each break.

for delta in (0.0, 0.5, 1.0):
    path = fp.fit_flash_path(sd, delta)
    order = [b.entered for b in path.breakpoints if b.entered is not None]
    corr = ", ".join(f"{b.max_abs_corr:.2f}" for b in path.breakpoints[:5])
    print(f"delta={delta:<4} entry order {order}  first levels {corr}")

# %%
# The block schedule takes Lasso steps until ``l_star`` variables are active,
# jumps to the least squares fit on them, then continues with Lasso steps.

block = fp.fit_flash_path(sd, fp.DeltaSchedule.block(3))
print("after the forward step:", np.round(block.coefficients_at(3).beta, 3))

# %%
# Each breakpoint carries a relaxed endpoint (least squares on its active
# set); ``phi`` moves along the segment between the two.

lasso = fp.fit_flash_path(sd, 0.0)
for phi in (0.0, 0.5, 1.0):
    coef = lasso.coefficients_at(3, phi)
    print(f"phi={phi}: beta on original scale {np.round(coef.beta, 3)}")
