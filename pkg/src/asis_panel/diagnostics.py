"""Autocorrelation, batch-means MCSE and effective sample size."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConstantChainError",
    "ChainTooShortError",
    "DiagnosticsReport",
    "acf",
    "mcse_batch_means",
    "ess",
    "diagnose",
]


class ConstantChainError(ValueError):
    """The chain has zero sample variance."""


class ChainTooShortError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DiagnosticsReport:
    acf: np.ndarray
    mcse: float
    ess: float
    n_draws: int
    burn_in: int
    mean: float
    sd: float

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "sd": self.sd,
            "mcse": self.mcse,
            "ess": self.ess,
            "n_draws": self.n_draws,
            "burn_in": self.burn_in,
            "acf": [float(a) for a in self.acf],
        }


def _as_chain(chain) -> np.ndarray:
    x = np.asarray(chain, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"chain must be one-dimensional, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("chain contains non-finite values")
    return x


def _full_acf(x: np.ndarray) -> np.ndarray:
    if np.ptp(x) == 0:
        raise ConstantChainError("chain is constant; autocorrelation undefined")
    n = len(x)
    d = x - x.mean()
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(d, nfft)
    cov = np.fft.irfft(f * np.conj(f), nfft)[:n]
    out = cov / cov[0]
    out[0] = 1.0
    return out


def acf(chain, max_lag: int = 50) -> np.ndarray:
    """Sample autocorrelation at lags 0..max_lag (mean-centred, 1/n normalisation)."""
    x = _as_chain(chain)
    if max_lag < 1:
        raise ValueError("max_lag must be positive")
    if len(x) <= max_lag + 1:
        raise ChainTooShortError(f"chain of length {len(x)} too short for max_lag={max_lag}")
    if np.ptp(x) == 0:
        raise ConstantChainError("chain is constant; autocorrelation undefined")
    d = x - x.mean()
    c0 = d @ d
    r = np.array([1.0] + [d[:-k] @ d[k:] / c0 for k in range(1, max_lag + 1)])
    return np.clip(r, -1.0, 1.0)


def mcse_batch_means(chain, n_batches: int | None = None) -> float:
    """Batch-means Monte Carlo standard error of the chain mean.

    Uses ``floor(sqrt(n))`` contiguous batches by default; any trailing
    remainder that does not fill a batch is dropped.
    """
    x = _as_chain(chain)
    n = len(x)
    a = int(np.floor(np.sqrt(n))) if n_batches is None else int(n_batches)
    if a < 2:
        raise ChainTooShortError("need at least two batches")
    if n < 2 * a:
        raise ChainTooShortError(f"chain of length {n} too short for {a} batches")
    b = n // a
    means = x[: a * b].reshape(a, b).mean(axis=1)
    return float(np.std(means, ddof=1) / np.sqrt(a))


def ess(chain) -> float:
    """Effective sample size via Geyer's initial positive sequence.

    Autocorrelations are summed in adjacent pairs (rho_2m + rho_2m+1) up to
    the first non-positive pair.  The integrated autocorrelation time is
    floored at 1/log10(n), capping ESS at n*log10(n) for antithetic chains.
    """
    x = _as_chain(chain)
    n = len(x)
    rho = _full_acf(x)
    if n % 2:
        rho = rho[:-1]
    pairs = rho[0::2] + rho[1::2]
    nonpos = np.flatnonzero(pairs <= 0)
    m = nonpos[0] if nonpos.size else len(pairs)
    tau = -1.0 + 2.0 * pairs[:m].sum()
    tau = max(tau, 1.0 / np.log10(max(n, 10)))
    return float(n / tau)


def diagnose(chain, burn_in: int = 0, max_lag: int = 50, n_batches: int | None = None) -> DiagnosticsReport:
    x = _as_chain(chain)
    if not 0 <= burn_in < len(x):
        raise ValueError(f"burn_in={burn_in} out of range for chain of length {len(x)}")
    kept = x[burn_in:]
    lag = min(max_lag, len(kept) - 2)
    return DiagnosticsReport(
        acf=acf(kept, lag),
        mcse=mcse_batch_means(kept, n_batches),
        ess=ess(kept),
        n_draws=len(kept),
        burn_in=burn_in,
        mean=float(kept.mean()),
        sd=float(kept.std(ddof=1)),
    )
