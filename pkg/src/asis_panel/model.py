"""Model core for the Gaussian random-effects panel.

Two equivalent parameterizations of the same model are used throughout::

    (SA)  y_it = alpha_i + eps_it,            alpha_i ~ N(mu_alpha, sigma_alpha^2)
    (AA)  y_it = mu_alpha + atilde_i + eps_it, atilde_i ~ N(0, sigma_alpha^2)

with eps_it ~ N(0, sigma_eps^2) and the prior mu_alpha ~ N(phi_alpha, tau_alpha^2).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "PanelDataset",
    "VarianceMode",
    "ModelSpec",
    "Precisions",
    "compute_precisions",
    "generate_synthetic",
    "posterior_oracle_mu",
]


class DomainError(ValueError):
    """A parameter lies outside its admissible domain."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PanelDataset:
    """Balanced panel of N individuals observed over T periods.

    ``y`` has shape (N, T); ``covariates`` (optional) has shape (N, T, K).
    Row sums and the grand mean are cached at construction.
    """

    y: np.ndarray
    covariates: np.ndarray | None = None
    unit_ids: tuple[str, ...] | None = None
    periods: tuple[int, ...] | None = None
    individual_sums: np.ndarray = field(init=False, repr=False)
    grand_mean: float = field(init=False)

    def __post_init__(self):
        y = _readonly(self.y)
        if y.ndim != 2 or y.shape[0] < 1 or y.shape[1] < 1:
            raise DomainError(f"y must be a non-empty N x T matrix, got shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise DomainError("y contains non-finite values")
        object.__setattr__(self, "y", y)

        if self.covariates is not None:
            x = _readonly(self.covariates)
            if x.ndim != 3 or x.shape[:2] != y.shape or x.shape[2] < 1:
                raise DomainError(
                    f"covariates must have shape (N, T, K>=1) = {y.shape + ('K',)}, got {x.shape}"
                )
            if not np.all(np.isfinite(x)):
                raise DomainError("covariates contain non-finite values")
            object.__setattr__(self, "covariates", x)

        if self.unit_ids is not None:
            if len(self.unit_ids) != y.shape[0]:
                raise DomainError("unit_ids length does not match N")
            object.__setattr__(self, "unit_ids", tuple(self.unit_ids))
        if self.periods is not None:
            if len(self.periods) != y.shape[1]:
                raise DomainError("periods length does not match T")
            object.__setattr__(self, "periods", tuple(self.periods))

        object.__setattr__(self, "individual_sums", _readonly(y.sum(axis=1)))
        object.__setattr__(self, "grand_mean", float(y.mean()))

    @property
    def n_individuals(self) -> int:
        return self.y.shape[0]

    @property
    def n_periods(self) -> int:
        return self.y.shape[1]

    @property
    def n_covariates(self) -> int:
        return 0 if self.covariates is None else self.covariates.shape[2]

    @property
    def total(self) -> float:
        """Sum of all observations."""
        return float(self.individual_sums.sum())

    def with_y(self, y: np.ndarray, keep_covariates: bool = False) -> "PanelDataset":
        """Copy of the panel with a replaced response matrix."""
        return PanelDataset(
            y,
            covariates=self.covariates if keep_covariates else None,
            unit_ids=self.unit_ids,
            periods=self.periods,
        )


class VarianceMode(str, enum.Enum):
    KNOWN = "known"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class ModelSpec:
    """Variance parameters and the prior on mu_alpha.

    ``variance_hyperpriors`` is ``((shape_eps, scale_eps), (shape_alpha, scale_alpha))``
    for inverse-gamma priors, required exactly when ``variance_mode`` is SAMPLED.
    In SAMPLED mode the two variances serve as chain starting values.
    """

    sigma_eps_sq: float
    sigma_alpha_sq: float
    phi_alpha: float = 0.0
    tau_alpha_sq: float = 100.0
    variance_mode: VarianceMode = VarianceMode.KNOWN
    variance_hyperpriors: tuple[tuple[float, float], tuple[float, float]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "variance_mode", VarianceMode(self.variance_mode))
        for name in ("sigma_eps_sq", "sigma_alpha_sq", "tau_alpha_sq"):
            v = float(getattr(self, name))
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a finite positive number, got {v!r}")
            object.__setattr__(self, name, v)
        if not np.isfinite(self.phi_alpha):
            raise DomainError(f"phi_alpha must be finite, got {self.phi_alpha!r}")
        object.__setattr__(self, "phi_alpha", float(self.phi_alpha))

        hp = self.variance_hyperpriors
        if self.variance_mode is VarianceMode.SAMPLED:
            if hp is None:
                raise DomainError("variance_hyperpriors are required in sampled mode")
            hp = tuple((float(a), float(b)) for a, b in hp)
            if len(hp) != 2 or any(not (a > 0 and b > 0) for a, b in hp):
                raise DomainError("variance hyperpriors must be two (shape, scale) pairs of positive reals")
            object.__setattr__(self, "variance_hyperpriors", hp)
        elif hp is not None:
            raise DomainError("variance_hyperpriors are only allowed in sampled mode")


@dataclass(frozen=True)
class Precisions:
    lambda_alpha: float
    lambda_mu_sa: float
    lambda_mu_aa: float


def _precisions(sigma_eps_sq, sigma_alpha_sq, tau_alpha_sq, N, T) -> Precisions:
    ie, ia, it = 1.0 / sigma_eps_sq, 1.0 / sigma_alpha_sq, 1.0 / tau_alpha_sq
    return Precisions(
        lambda_alpha=ie * T + ia,
        lambda_mu_sa=ia * N + it,
        lambda_mu_aa=ie * N * T + it,
    )


def compute_precisions(spec: ModelSpec, N: int, T: int) -> Precisions:
    """Conditional precisions of alpha_i, of mu_alpha under SA and under AA."""
    if N < 1 or T < 1:
        raise DomainError(f"N and T must be >= 1, got N={N}, T={T}")
    for name in ("sigma_eps_sq", "sigma_alpha_sq", "tau_alpha_sq"):
        if not getattr(spec, name) > 0:
            raise DomainError(f"{name} must be positive")
    return _precisions(spec.sigma_eps_sq, spec.sigma_alpha_sq, spec.tau_alpha_sq, N, T)


def generate_synthetic(
    spec: ModelSpec,
    mu_true: float,
    N: int,
    T: int,
    seed: int | np.random.SeedSequence,
) -> PanelDataset:
    """Draw alpha_i ~ N(mu_true, sigma_alpha^2), then y_it = alpha_i + eps_it."""
    if N < 1 or T < 1:
        raise DomainError(f"N and T must be >= 1, got N={N}, T={T}")
    rng = np.random.default_rng(seed)
    alpha = mu_true + np.sqrt(spec.sigma_alpha_sq) * rng.standard_normal(N)
    eps = np.sqrt(spec.sigma_eps_sq) * rng.standard_normal((N, T))
    return PanelDataset(alpha[:, None] + eps)


def posterior_oracle_mu(data: PanelDataset, spec: ModelSpec) -> tuple[float, float]:
    """Exact posterior mean and variance of mu_alpha with alpha integrated out.

    Each individual mean is ybar_i ~ N(mu_alpha, sigma_alpha^2 + sigma_eps^2 / T)
    marginally, so the posterior is a conjugate normal update on those N means.
    """
    if spec.variance_mode is not VarianceMode.KNOWN:
        raise DomainError("posterior oracle requires known variances")
    if data.covariates is not None:
        raise DomainError("posterior oracle does not handle covariates")
    N, T = data.n_individuals, data.n_periods
    data_precision = N / (spec.sigma_alpha_sq + spec.sigma_eps_sq / T)
    prior_precision = 1.0 / spec.tau_alpha_sq
    precision = prior_precision + data_precision
    ybar_ind = float(np.mean(data.individual_sums / T))
    mean = (prior_precision * spec.phi_alpha + data_precision * ybar_ind) / precision
    return mean, 1.0 / precision
