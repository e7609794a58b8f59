"""Gibbs samplers for the Gaussian random-effects panel under centred (SA),
non-centred (AA) and interweaved (ASIS) augmentations, with convergence-rate
theory, MCMC diagnostics and a simulation harness."""

__version__ = "0.1.0"

from .model import (DomainError, ModelSpec, PanelDataset, Precisions, VarianceMode,
                    compute_precisions, generate_synthetic, posterior_oracle_mu)
from .samplers import ChainState, NoiseDraws, Scheme, run_chain, run_mu_chain
from .theory import RateReport, Verdict, asymptotic_regime_gap, rate_report
from .diagnostics import ConstantChainError, DiagnosticsReport, acf, diagnose, ess, mcse_batch_means

__all__ = [
    "DomainError", "ModelSpec", "PanelDataset", "Precisions", "VarianceMode",
    "compute_precisions", "generate_synthetic", "posterior_oracle_mu",
    "ChainState", "NoiseDraws", "Scheme", "run_chain", "run_mu_chain",
    "RateReport", "Verdict", "asymptotic_regime_gap", "rate_report",
    "ConstantChainError", "DiagnosticsReport", "acf", "diagnose", "ess", "mcse_batch_means",
]
