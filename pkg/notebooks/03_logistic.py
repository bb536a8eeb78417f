"""
Logistic regression paths
=========================

The GLM engine follows the same idea with a predictor-corrector scheme.
Every point solves a weighted L1-penalized likelihood exactly, and ``delta``
again shrinks the penalties of the active variables.
"""

import numpy as np

import flashpath as fp

rng = np.random.default_rng(2)
n, p = 300, 10
X = rng.standard_normal((n, p))
beta = np.zeros(p)
beta[:3] = [1.0, -0.8, 0.5]
y = (rng.random(n) < 1 / (1 + np.exp(-(X @ beta)))).astype(float)
gd = fp.GlmData.from_dataset(fp.Dataset(X, y))

# %%
# The L1 path: the largest penalty shrinks and variables enter one by one.

glasso = fp.fit_glm_flash_path(gd, 0.0)
seen = []
for pt in glasso.points:
    if pt.active != (seen[-1] if seen else None):
        seen.append(pt.active)
        print(f"max penalty {pt.max_lam:7.3f}  active {pt.active}")

# %%
# ``delta = 1`` gives forward selection: unpenalized fits on nested sets.

for pt in fp.fit_glm_flash_path(gd, 1.0).points:
    if pt.kind == "ml":
        print(f"{len(pt.active)} variables: deviance {fp.deviance(gd, pt.mu):.2f}")

# %%
# Validation by deviance on held-out rows.

train, valid = fp.Dataset(X[:200], y[:200]), fp.Dataset(X[200:], y[200:])
for name in ("GLasso", "GRelaxo", "GForward", "GLM-FLASH_B"):
    res = fp.validation_select(train, valid, name)
    print(f"{name:12s} deviance {res.best.score:.2f} support {res.best.coef.support}")
