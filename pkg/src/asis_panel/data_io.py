"""Long-format panel loading and the covariate / variance Gibbs blocks.

A fit sweep runs, in order: the beta block (covariates partialled out of y),
the scheme-specific (alpha, mu_alpha) block, then the variance block.  The
three blocks use separate RNG streams spawned from the fit seed, so the beta
and variance draws consume identical stream positions whatever the scheme.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import linalg

from .diagnostics import DiagnosticsReport, diagnose
from .model import ModelSpec, PanelDataset, VarianceMode
from .samplers import ChainState, Scheme, initial_state, step

__all__ = [
    "DataError",
    "ParseError",
    "DuplicateCell",
    "UnbalancedPanel",
    "CollinearCovariates",
    "load_long_csv",
    "write_long_csv",
    "FitConfig",
    "ChainOutput",
    "FitResult",
    "fit_streams",
    "partial_out_step",
    "inverse_gamma_draw",
    "variance_updates",
    "center_covariates",
    "pooled_ols",
    "fit",
    "write_fit_outputs",
    "synthetic_covariate_panel",
]


class DataError(ValueError):
    """Problem with an input data file."""


class ParseError(DataError):
    def __init__(self, message, row=None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class DuplicateCell(DataError):
    pass


class UnbalancedPanel(DataError):
    pass


class CollinearCovariates(ValueError):
    """Covariate design is rank deficient, so beta is not identified by the data."""


# -- CSV ---------------------------------------------------------------------

def load_long_csv(path: str | Path) -> PanelDataset:
    """Read ``id,t,y,x1..xK`` rows into a balanced PanelDataset.

    Units are sorted lexicographically by id and periods ascending.
    Row numbers in error messages count the header as row 1.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("file is empty", row=1) from None
        if header[:3] != ["id", "t", "y"]:
            raise ParseError(f"header must start with id,t,y; got {','.join(header[:3])}", row=1)
        xcols = header[3:]
        for k, name in enumerate(xcols, 1):
            if name != f"x{k}":
                raise ParseError(f"covariate column {k} must be named x{k}, got {name!r}", row=1)

        cells: dict[tuple[str, int], tuple[float, list[float]]] = {}
        for rowno, rec in enumerate(reader, 2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(rec)}", row=rowno)
            uid = rec[0].strip()
            if not uid:
                raise ParseError("empty id", row=rowno)
            try:
                t = int(rec[1])
            except ValueError:
                raise ParseError(f"period {rec[1]!r} is not an integer", row=rowno) from None
            try:
                vals = [float(v) for v in rec[2:]]
            except ValueError as exc:
                raise ParseError(f"non-numeric value ({exc})", row=rowno) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError("non-finite value", row=rowno)
            if (uid, t) in cells:
                raise DuplicateCell(f"row {rowno}: duplicate cell (id={uid!r}, t={t})")
            cells[(uid, t)] = (vals[0], vals[1:])

    if not cells:
        raise ParseError("no data rows")
    ids = sorted({u for u, _ in cells})
    periods = sorted({t for _, t in cells})
    for u in ids:
        missing = [t for t in periods if (u, t) not in cells]
        if missing:
            raise UnbalancedPanel(f"unit {u!r} is missing period(s) {missing}")

    K = len(xcols)
    y = np.array([[cells[(u, t)][0] for t in periods] for u in ids])
    x = None
    if K:
        x = np.array([[cells[(u, t)][1] for t in periods] for u in ids])
    return PanelDataset(y, covariates=x, unit_ids=tuple(ids), periods=tuple(periods))


def write_long_csv(data: PanelDataset, path: str | Path) -> None:
    ids = data.unit_ids or tuple(str(i + 1) for i in range(data.n_individuals))
    periods = data.periods or tuple(range(1, data.n_periods + 1))
    K = data.n_covariates
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "t", "y"] + [f"x{k}" for k in range(1, K + 1)])
        for i, u in enumerate(ids):
            for j, t in enumerate(periods):
                xs = [repr(float(v)) for v in data.covariates[i, j]] if K else []
                w.writerow([u, t, repr(float(data.y[i, j]))] + xs)


def synthetic_covariate_panel(N: int, T: int, beta, sigma_eps_sq: float, sigma_alpha_sq: float,
                              mu_alpha: float = 1.0, seed=0) -> PanelDataset:
    """y_it = alpha_i + x_it' beta + eps_it with standard normal covariates."""
    beta = np.asarray(beta, dtype=float)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((N, T, beta.size))
    alpha = mu_alpha + math.sqrt(sigma_alpha_sq) * rng.standard_normal(N)
    eps = math.sqrt(sigma_eps_sq) * rng.standard_normal((N, T))
    return PanelDataset(alpha[:, None] + x @ beta + eps, covariates=x,
                        unit_ids=tuple(f"u{i + 1:02d}" for i in range(N)), periods=tuple(range(1, T + 1)))


# -- configuration and outputs -----------------------------------------------

@dataclass
class FitConfig:
    spec: ModelSpec
    scheme: Scheme = Scheme.ASIS_SA_AA
    beta_prior_mean: np.ndarray | None = None
    beta_prior_variance: float = 100.0
    iterations: int = 10_000
    burn_in: int = 1_000
    seed: int = 0
    two_stage: bool = False
    center_covariates: bool = True
    max_lag: int = 50
    store_alpha: bool = True

    def __post_init__(self):
        self.scheme = Scheme(self.scheme)
        if not self.beta_prior_variance > 0:
            raise ValueError("beta_prior_variance must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spec"] = asdict(self.spec) | {"variance_mode": self.spec.variance_mode.value}
        d["scheme"] = self.scheme.value
        if self.beta_prior_mean is not None:
            d["beta_prior_mean"] = [float(b) for b in self.beta_prior_mean]
        return d


@dataclass
class ChainOutput:
    draws: dict[str, np.ndarray]
    scheme: Scheme
    seed: int
    burn_in: int

    def kept(self, name: str) -> np.ndarray:
        return self.draws[name][self.burn_in:]


@dataclass
class FitResult:
    chain: ChainOutput
    diagnostics: DiagnosticsReport
    summary: dict = field(default_factory=dict)
    beta_fixed: np.ndarray | None = None


def fit_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent (scheme, beta, variance) generators for a fit seed."""
    ss = np.random.SeedSequence(seed)
    return tuple(np.random.default_rng(s) for s in ss.spawn(3))


# -- beta block ----------------------------------------------------------------

class _BetaBlock:
    """Precomputed design quantities for the conjugate beta update."""

    def __init__(self, data: PanelDataset, prior_mean, prior_variance: float):
        if data.covariates is None:
            raise ValueError("beta block needs covariates")
        N, T, K = data.covariates.shape
        self.X = data.covariates.reshape(N * T, K)
        active = np.any(self.X != 0, axis=0)
        if active.any() and np.linalg.matrix_rank(self.X[:, active]) < active.sum():
            raise CollinearCovariates("covariate columns are linearly dependent")
        self.XtX = self.X.T @ self.X
        self.m0 = np.zeros(K) if prior_mean is None else np.asarray(prior_mean, dtype=float)
        if self.m0.shape != (K,):
            raise ValueError(f"beta_prior_mean must have length {K}")
        self.v0 = float(prior_variance)
        self.shape = (N, T, K)

    def _factor(self, resid, sigma_eps_sq):
        K = self.shape[2]
        P = self.XtX / sigma_eps_sq + np.eye(K) / self.v0
        try:
            c = linalg.cho_factor(P, lower=True)
        except linalg.LinAlgError:
            raise CollinearCovariates("beta posterior precision is not positive definite") from None
        mean = linalg.cho_solve(c, self.X.T @ resid.ravel() / sigma_eps_sq + self.m0 / self.v0)
        return c, mean

    def posterior(self, resid: np.ndarray, sigma_eps_sq: float) -> tuple[np.ndarray, np.ndarray]:
        """Mean and covariance of beta given y - alpha residuals."""
        c, mean = self._factor(resid, sigma_eps_sq)
        return mean, linalg.cho_solve(c, np.eye(self.shape[2]))

    def draw(self, resid: np.ndarray, sigma_eps_sq: float, rng: np.random.Generator) -> np.ndarray:
        c, mean = self._factor(resid, sigma_eps_sq)
        z = rng.standard_normal(self.shape[2])
        return mean + linalg.solve_triangular(np.tril(c[0]).T, z, lower=False)

    def fitted(self, beta: np.ndarray) -> np.ndarray:
        N, T, _ = self.shape
        return (self.X @ beta).reshape(N, T)


def partial_out_step(state: ChainState, data: PanelDataset, config: FitConfig,
                     rng: np.random.Generator, _block: _BetaBlock | None = None
                     ) -> tuple[np.ndarray, PanelDataset]:
    """Draw beta | alpha, variances and return it with the residualised panel.

    The residual panel carries y_it - x_it' beta and no covariates.
    """
    block = _block or _BetaBlock(data, config.beta_prior_mean, config.beta_prior_variance)
    beta = block.draw(data.y - state.alpha[:, None], state.sigma_eps_sq, rng)
    return beta, data.with_y(data.y - block.fitted(beta))


# -- variance block ----------------------------------------------------------

def inverse_gamma_draw(rng: np.random.Generator, shape: float, scale: float,
                       n: float = 0.0, ssq: float = 0.0) -> float:
    """Draw from IG(shape + n/2, scale + ssq/2), the conjugate normal-variance update."""
    return float((scale + 0.5 * ssq) / rng.standard_gamma(shape + 0.5 * n))


def variance_updates(state: ChainState, data: PanelDataset, config: FitConfig,
                     rng: np.random.Generator) -> tuple[float, float]:
    """Conjugate draws of (sigma_eps^2, sigma_alpha^2); a no-op for known variances.

    ``data`` is the (residualised) panel the alpha block was run on.
    """
    spec = config.spec
    if spec.variance_mode is VarianceMode.KNOWN:
        return state.sigma_eps_sq, state.sigma_alpha_sq
    (a_e, b_e), (a_a, b_a) = spec.variance_hyperpriors
    N, T = data.n_individuals, data.n_periods
    resid = data.y - state.alpha[:, None]
    s_eps = inverse_gamma_draw(rng, a_e, b_e, N * T, float(np.sum(resid * resid)))
    dev = state.alpha - state.mu_alpha
    s_alpha = inverse_gamma_draw(rng, a_a, b_a, N, float(dev @ dev))
    return s_eps, s_alpha


# -- driver ------------------------------------------------------------------

def center_covariates(data: PanelDataset) -> tuple[PanelDataset, np.ndarray]:
    """Subtract each covariate's pooled mean; returns the panel and the means."""
    x = data.covariates
    means = x.reshape(-1, x.shape[2]).mean(axis=0)
    return PanelDataset(data.y, covariates=x - means, unit_ids=data.unit_ids, periods=data.periods), means


def pooled_ols(data: PanelDataset, check: bool = True) -> np.ndarray:
    """Slope coefficients of pooled least squares of y on [1, x].

    With ``check=False`` a rank-deficient design returns the minimum-norm solution.
    """
    N, T, K = data.covariates.shape
    X = np.column_stack([np.ones(N * T), data.covariates.reshape(N * T, K)])
    if check and np.linalg.matrix_rank(X) < K + 1:
        raise CollinearCovariates("pooled design is rank deficient")
    coef, *_ = np.linalg.lstsq(X, data.y.ravel(), rcond=None)
    return coef[1:]


def fit(data: PanelDataset, config: FitConfig) -> FitResult:
    """Run one chain of the configured scheme and summarise it."""
    spec = config.spec
    scheme_rng, beta_rng, var_rng = fit_streams(config.seed)
    K = data.n_covariates
    x_means = None
    beta_fixed = None
    block = None

    if K and config.center_covariates:
        data, x_means = center_covariates(data)
    work = data.with_y(data.y) if K else data
    if K and config.two_stage:
        beta_fixed = pooled_ols(data)
        work = data.with_y(data.y - (data.covariates @ beta_fixed))
    elif K:
        block = _BetaBlock(data, config.beta_prior_mean, config.beta_prior_variance)
        # start alpha from the OLS-residualised panel so the first beta draw is sensible
        start = data.with_y(data.y - data.covariates @ pooled_ols(data, check=False))
        state = initial_state(start, spec)
    if block is None:
        state = initial_state(work, spec)

    R = config.iterations
    mu = np.empty(R)
    s_eps = np.empty(R)
    s_alpha = np.empty(R)
    betas = np.empty((R, K)) if block is not None else None
    alphas = np.empty((R, data.n_individuals)) if config.store_alpha else None

    for r in range(R):
        if block is not None:
            beta, work = partial_out_step(state, data, config, beta_rng, _block=block)
            state = replace(state, beta=beta)
        state = step(config.scheme, state, work, spec, scheme_rng)
        se, sa = variance_updates(state, work, config, var_rng)
        state = replace(state, sigma_eps_sq=se, sigma_alpha_sq=sa)
        mu[r] = state.mu_alpha
        s_eps[r], s_alpha[r] = se, sa
        if betas is not None:
            betas[r] = state.beta
        if alphas is not None:
            alphas[r] = state.alpha

    draws = {"mu_alpha": mu}
    if spec.variance_mode is VarianceMode.SAMPLED:
        draws["sigma_eps_sq"] = s_eps
        draws["sigma_alpha_sq"] = s_alpha
    if betas is not None:
        for k in range(K):
            draws[f"beta_{k + 1}"] = betas[:, k]
    if alphas is not None:
        labels = data.unit_ids or tuple(str(i + 1) for i in range(data.n_individuals))
        for i, u in enumerate(labels):
            draws[f"alpha[{u}]"] = alphas[:, i]

    chain = ChainOutput(draws, config.scheme, config.seed, config.burn_in)
    report = diagnose(mu, burn_in=config.burn_in, max_lag=config.max_lag)
    posterior = {}
    for name, d in draws.items():
        kept = d[config.burn_in:]
        posterior[name] = {"mean": float(kept.mean()), "sd": float(kept.std(ddof=1))}
    summary = {
        "config": config.to_dict(),
        "n_individuals": data.n_individuals,
        "n_periods": data.n_periods,
        "n_covariates": K,
        "covariate_means_removed": None if x_means is None else [float(m) for m in x_means],
        "beta_two_stage": None if beta_fixed is None else [float(b) for b in beta_fixed],
        "rng_streams": "SeedSequence(seed).spawn(3) -> (scheme, beta, variance)",
        "mu_alpha_diagnostics": report.to_dict(),
        "posterior": posterior,
    }
    return FitResult(chain, report, summary, beta_fixed)


def write_fit_outputs(result: FitResult, out_dir: str | Path, name: str = "") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prefix = f"{name}_" if name else ""
    draws_path = out / f"{prefix}draws.csv"
    names = list(result.chain.draws)
    cols = np.column_stack([result.chain.draws[n] for n in names])
    with open(draws_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration"] + names)
        for r, row in enumerate(cols, 1):
            w.writerow([r] + [repr(float(v)) for v in row])
    summary_path = out / f"{prefix}summary.json"
    summary_path.write_text(json.dumps(result.summary, indent=2))
    return [draws_path, summary_path]
