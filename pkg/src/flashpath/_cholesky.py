"""Incrementally maintained Cholesky factor of an active-set Gram matrix."""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import SingularGramError

COLLINEAR_TOL = 1e-10
MAX_CONDITION = 1e12


class GramFactor:
    """Lower-triangular ``L`` with ``L L^T = X_A^T X_A`` for an ordered set A.

    Columns are appended by bordering the factor (O(|A|^2)); a removal
    refactors only the trailing block below the removed column.
    """

    def __init__(self, X: np.ndarray):
        self.X = X
        self.active: list[int] = []
        self.L = np.zeros((0, 0))

    def __len__(self):
        return len(self.active)

    def append(self, j: int) -> bool:
        """Add column ``j``; return False (factor untouched) if it is collinear."""
        x = self.X[:, j]
        k = len(self.active)
        if k:
            v = self.X[:, self.active].T @ x
            w = solve_triangular(self.L, v, lower=True, check_finite=False)
        else:
            w = np.zeros(0)
        d2 = float(x @ x - w @ w)
        if d2 <= COLLINEAR_TOL * float(x @ x):
            return False
        L = np.zeros((k + 1, k + 1))
        L[:k, :k] = self.L
        L[k, :k] = w
        L[k, k] = np.sqrt(d2)
        self.L = L
        self.active.append(j)
        self._check_conditioning()
        return True

    def remove(self, j: int) -> None:
        """Drop column ``j`` from the factor.

        With ``L = [[L11, 0, 0], [l21, l22, 0], [L31, l32, L33]]`` the new
        trailing factor is ``chol(L33 L33^T + l32 l32^T)``.
        """
        pos = self.active.index(j)
        k = len(self.active)
        L = self.L
        new = np.zeros((k - 1, k - 1))
        new[:pos, :pos] = L[:pos, :pos]
        if pos < k - 1:
            new[pos:, :pos] = L[pos + 1:, :pos]
            L33 = L[pos + 1:, pos + 1:]
            l32 = L[pos + 1:, pos]
            try:
                new[pos:, pos:] = np.linalg.cholesky(L33 @ L33.T + np.outer(l32, l32))
            except np.linalg.LinAlgError:
                del self.active[pos]
                self.refactor()
                return
        self.L = new
        del self.active[pos]
        self._check_conditioning()

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Return ``(X_A^T X_A)^{-1} rhs``."""
        if not self.active:
            return np.zeros(0)
        z = solve_triangular(self.L, rhs, lower=True, check_finite=False)
        return solve_triangular(self.L.T, z, lower=False, check_finite=False)

    def refactor(self) -> None:
        if not self.active:
            self.L = np.zeros((0, 0))
            return
        XA = self.X[:, self.active]
        try:
            self.L = np.linalg.cholesky(XA.T @ XA)
        except np.linalg.LinAlgError:
            raise SingularGramError(
                "active-set Gram matrix is singular", index=self.active[-1]
            ) from None

    def _check_conditioning(self) -> None:
        if not self.active:
            return
        d = np.abs(np.diag(self.L))
        if d.min() == 0.0 or (d.max() / d.min()) ** 2 > MAX_CONDITION:
            self.refactor()
            d = np.abs(np.diag(self.L))
            if d.min() == 0.0 or (d.max() / d.min()) ** 2 > MAX_CONDITION:
                raise SingularGramError(
                    f"active-set Gram matrix is numerically singular after "
                    f"adding or removing column {self.active[-1]}",
                    index=self.active[-1],
                )
