"""Soft-margin SVM trained by SMO, with Platt-scaled probabilities.

The dual is solved with second-order working-set selection (maximal violating
pair for the first index, largest guaranteed decrease for the second) on a
precomputed kernel matrix. Decision values are mapped to probabilities by a
one-dimensional logistic regression of A on the decision value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from numpy.typing import NDArray

from ..errors import ParameterError
from .logistic import LogisticFit, fit_logistic

TAU = 1e-12


def kernel_matrix(F1: NDArray, F2: NDArray, kernel: str, gamma: float) -> NDArray:
    if kernel == "linear":
        return F1 @ F2.T
    if kernel == "rbf":
        sq = (F1 ** 2).sum(1)[:, None] + (F2 ** 2).sum(1)[None, :] - 2.0 * F1 @ F2.T
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ParameterError(f"unknown kernel {kernel!r}; expected rbf or linear")


@njit(cache=True)
def _smo(K, y, C, eps, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    converged = False
    while it < max_iter:
        # i: maximal violator in I_up
        gmax = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * G[t]
                if v > gmax:
                    gmax = v
                    i = t
        gmin = np.inf
        j = -1
        best = np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                v = -y[t] * G[t]
                if v < gmin:
                    gmin = v
                if i >= 0:
                    b = gmax - v
                    if b > 0:
                        a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if a <= 0:
                            a = TAU
                        obj = -(b * b) / a
                        if obj < best:
                            best = obj
                            j = t
        if i < 0 or j < 0 or gmax - gmin < eps:
            converged = True
            break
        it += 1
        Qii = K[i, i]
        Qjj = K[j, j]
        Qij = y[i] * y[j] * K[i, j]
        ai = alpha[i]
        aj = alpha[j]
        if y[i] != y[j]:
            quad = Qii + Qjj + 2.0 * Qij
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0:
                    ai = 0.0
                    aj = -diff
            if diff > 0:
                if ai > C:
                    ai = C
                    aj = C - diff
            else:
                if aj > C:
                    aj = C
                    ai = C + diff
        else:
            quad = Qii + Qjj - 2.0 * Qij
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            s = ai + aj
            ai -= delta
            aj += delta
            if s > C:
                if ai > C:
                    ai = C
                    aj = s - C
            else:
                if aj < 0:
                    aj = 0.0
                    ai = s
            if s > C:
                if aj > C:
                    aj = C
                    ai = s - C
            else:
                if ai < 0:
                    ai = 0.0
                    aj = s
        dai = ai - alpha[i]
        daj = aj - alpha[j]
        alpha[i] = ai
        alpha[j] = aj
        for t in range(n):
            G[t] += y[t] * (y[i] * K[t, i] * dai + y[j] * K[t, j] * daj)
    # offset: average over free vectors, midpoint of the feasible range otherwise
    nfree = 0
    sfree = 0.0
    ub = np.inf
    lb = -np.inf
    for t in range(n):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            sfree += yg
    if nfree > 0:
        rho = sfree / nfree
    else:
        rho = 0.5 * (ub + lb)
    return alpha, rho, it, converged


@dataclass(frozen=True)
class SvmFit:
    F: NDArray
    coef: NDArray        # alpha_i * y_i
    offset: float
    kernel: str
    gamma: float
    converged: bool
    n_iter: int
    platt: LogisticFit

    @property
    def flagged(self) -> bool:
        return (not self.converged) or self.platt.flagged

    def decision_function(self, F: NDArray) -> NDArray:
        F = np.asarray(F, dtype=float).reshape(len(F), -1)
        return kernel_matrix(F, self.F, self.kernel, self.gamma) @ self.coef - self.offset

    def predict(self, F: NDArray) -> NDArray:
        return self.platt.predict(self.decision_function(F)[:, None])


def fit_svm_model(
    F: NDArray,
    A: NDArray,
    cost: float = 1.0,
    kernel: str = "rbf",
    gamma: float | None = None,
    tol: float = 1e-3,
    max_iter: int = 100_000,
) -> SvmFit:
    A = np.asarray(A, dtype=float)
    F = np.asarray(F, dtype=float).reshape(len(A), -1)
    if cost <= 0:
        raise ParameterError(f"SVM cost must be > 0, got {cost}")
    if len(A) == 0 or A.min() == A.max():
        raise ParameterError("SVM needs both treatment arms")
    q = F.shape[1]
    if gamma is None:
        gamma = 1.0 / max(q, 1)
    if gamma <= 0:
        raise ParameterError(f"kernel width must be > 0, got {gamma}")
    y = np.where(A == 1, 1.0, -1.0)
    K = np.ascontiguousarray(kernel_matrix(F, F, kernel, gamma))
    alpha, rho, n_iter, converged = _smo(K, y, float(cost), float(tol), int(max_iter))
    coef = alpha * y
    decision = K @ coef - rho
    platt = fit_logistic(decision[:, None], A)
    return SvmFit(F.copy(), coef, float(rho), kernel, float(gamma), bool(converged), int(n_iter), platt)


def fit_svm(F: NDArray, A: NDArray, seed=None, **hyper) -> NDArray:
    """In-sample Platt probabilities. The solver is deterministic; ``seed`` is
    accepted so every learner shares one calling convention."""
    return fit_svm_model(F, A, **hyper).predict(F)
