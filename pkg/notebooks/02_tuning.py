"""
Choosing delta, the step and the relaxation
===========================================

Every method yields a finite set of candidate fits.  A validation split or
k-fold cross-validation picks one.
"""

import numpy as np

import flashpath as fp

rng = np.random.default_rng(1)
n, p = 150, 40
X = rng.standard_normal((n, p))
beta = np.zeros(p)
beta[:6] = rng.normal(0, 1.5, 6)
y = X @ beta + rng.standard_normal(n)
train = fp.Dataset(X[:100], y[:100])
valid = fp.Dataset(X[100:], y[100:])

# %%
# Validation-set selection for each linear method.

for name in ("Lasso", "Relaxo", "Forward", "FLASH_G", "FLASH_B"):
    res = fp.validation_select(train, valid, name)
    err = np.sum((res.best.coef.beta - beta) ** 2)
    print(f"{name:8s} key={res.best.key} step={res.best.step:2d} phi={res.best.phi:.2f} "
          f"nonzeros={res.best.nonzeros:2d} squared error={err:.3f}")

# %%
# Ten-fold cross-validation on the pooled data.  The table holds the mean
# fold error for every coordinate; plot ``score`` against ``step`` for a
# cross-validation curve.

res = fp.fit_global_flash(fp.Dataset(X, y), 10, seed=0)
best = res.best
print("cv choice:", best.key, "step", best.step, "phi", best.phi)
curve = [(c.step, c.score) for c in res.table if c.key == best.key and c.phi == best.phi]
print("first points of its curve:", [(s, round(v, 3)) for s, v in curve[:6]])
