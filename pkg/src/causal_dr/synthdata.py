"""Simulated observational data with confounded treatment assignment.

Covariates are AR(1)-correlated Gaussians, treatment follows a logistic model
in all nine covariates and the outcome is linear with a constant treatment
effect. Defaults reproduce the benchmark design used throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import DegenerateDesignError, ParameterError
from .seeding import STREAM_REDRAW, derive_seed, make_rng

BETA_DEFAULT = (1.2, -0.8, 0.6, 1.1, -0.9, 0.5, 0.7, -1.0, -0.9)
GAMMA_DEFAULT = (0.6, -0.4, 1.1, 0.5, -1.2, 0.9, -0.3, -0.8, 1.5)
TAU_DEFAULT = 2.0
MAX_REDRAWS = 100


@dataclass(frozen=True)
class DgpParams:
    """Parameters of the data-generating mechanism."""

    p: int = 9
    rho: float = 0.2
    beta0: float = 0.0
    beta: tuple[float, ...] = BETA_DEFAULT
    alpha0: float = 0.0
    gamma: tuple[float, ...] = GAMMA_DEFAULT
    tau: float = TAU_DEFAULT
    noise_sd: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if self.p < 1:
            raise ParameterError(f"p must be positive, got {self.p}")
        if not abs(self.rho) < 1:
            raise ParameterError(f"|rho| must be < 1, got {self.rho}")
        if len(self.beta) != self.p or len(self.gamma) != self.p:
            raise ParameterError(
                f"beta and gamma need length p={self.p}, "
                f"got {len(self.beta)} and {len(self.gamma)}"
            )
        if self.noise_sd < 0:
            raise ParameterError(f"noise_sd must be >= 0, got {self.noise_sd}")

    def with_rho(self, rho: float) -> "DgpParams":
        return DgpParams(
            p=self.p, rho=rho, beta0=self.beta0, beta=self.beta, alpha0=self.alpha0,
            gamma=self.gamma, tau=self.tau, noise_sd=self.noise_sd,
        )


@dataclass(frozen=True)
class Dataset:
    """Covariates ``X`` (n x p), binary treatment ``A`` and outcome ``Y``."""

    X: NDArray
    A: NDArray
    Y: NDArray
    redraws: int = field(default=0, compare=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        A = np.asarray(self.A, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2 or A.ndim != 1 or Y.ndim != 1:
            raise ParameterError("X must be 2-d, A and Y 1-d")
        if not (X.shape[0] == A.shape[0] == Y.shape[0]):
            raise ParameterError("X, A, Y have mismatched lengths")
        if not np.all((A == 0) | (A == 1)):
            raise ParameterError("A must contain only 0 and 1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def take(self, rows: NDArray) -> "Dataset":
        return Dataset(self.X[rows], self.A[rows], self.Y[rows])


def ar1_covariance(p: int, rho: float) -> NDArray:
    """Sigma_jk = rho ** |j - k|."""
    if not abs(rho) < 1:
        raise ParameterError(f"|rho| must be < 1, got {rho}")
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)


def expit(z):
    """Numerically stable inverse logit."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def gen_covariates(n: int, params: DgpParams, seed) -> NDArray:
    """Draw ``n`` rows from N_p(0, Sigma) via the Cholesky factor of Sigma."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = make_rng(seed)
    L = np.linalg.cholesky(ar1_covariance(params.p, params.rho))
    Z = rng.standard_normal((n, params.p))
    return Z @ L.T


def treatment_probability(X: NDArray, params: DgpParams) -> NDArray:
    """True propensity logit^-1(beta0 + X beta)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.p:
        raise ParameterError(f"X must have {params.p} columns, got shape {X.shape}")
    return expit(params.beta0 + X @ np.asarray(params.beta))


def gen_treatment(X: NDArray, params: DgpParams, seed) -> NDArray:
    rng = make_rng(seed)
    prob = treatment_probability(X, params)
    return (rng.random(len(prob)) < prob).astype(float)


def gen_outcome(X: NDArray, A: NDArray, params: DgpParams, seed) -> NDArray:
    """Y = alpha0 + tau A + X gamma + eps, eps ~ N(0, noise_sd^2)."""
    X = np.asarray(X, dtype=float)
    A = np.asarray(A, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.p or A.shape != (X.shape[0],):
        raise ParameterError("X and A dimensions do not agree with params")
    rng = make_rng(seed)
    eps = rng.standard_normal(X.shape[0]) * params.noise_sd
    return params.alpha0 + params.tau * A + X @ np.asarray(params.gamma) + eps


def make_dataset(n: int, params: DgpParams, seed) -> Dataset:
    """Generate one dataset with both arms present.

    The first attempt uses ``seed`` directly; a single-arm draw is replaced by
    a redraw from the sub-stream ``(seed, attempt)``. After ``MAX_REDRAWS``
    degenerate draws a DegenerateDesignError is raised.
    """
    if n < params.p + 2:
        raise ParameterError(f"n must be >= p + 2 = {params.p + 2}, got {n}")
    base = seed if isinstance(seed, tuple) else (seed,)
    for attempt in range(MAX_REDRAWS):
        key = base if attempt == 0 else (STREAM_REDRAW, *base, attempt)
        rng = make_rng(derive_seed(*key))
        X = gen_covariates(n, params, rng)
        A = gen_treatment(X, params, rng)
        if 0 < A.sum() < n:
            Y = gen_outcome(X, A, params, rng)
            return Dataset(X, A, Y, redraws=attempt)
    raise DegenerateDesignError(
        f"{MAX_REDRAWS} consecutive draws had an empty treatment arm (n={n})"
    )
