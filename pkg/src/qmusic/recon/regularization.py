"""Diagonal loading, the singular-value filter and its error budget.

The filter and the success constant are evaluated on singular values scaled
by ``sigma_max`` (so they lie in ``[1/kappa, 1]``) with the loading scaled
the same way. The reconstructed direction does not depend on that scaling,
and in these units the two prescriptions for the rotation constant coincide.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..numerics import as_matrix, numerical_rank, svd

DEFAULT_RELATIVE_LOADING = 1e-3
DEFAULT_PHASE_BITS = 12


@dataclass(frozen=True)
class RegularizationConfig:
    """``loading`` is sigma_reg^2 in the units of A; ``None`` picks 1e-3 * sigma_max^2."""

    loading: float | None = None
    phase_bits: int = DEFAULT_PHASE_BITS
    success_constant: float | None = None

    def __post_init__(self):
        if self.loading is not None and not self.loading > 0:
            raise ValueError("diagonal loading must be strictly positive")
        if self.phase_bits < 1:
            raise ValueError("phase_bits must be >= 1")
        if self.success_constant is not None and not 0 < self.success_constant <= 1:
            raise ValueError("success_constant must lie in (0, 1]")


@dataclass(frozen=True)
class ResolvedRegularization:
    loading: float
    sigma_max: float
    kappa: float
    frobenius: float
    success_constant: float
    phase_bits: int

    @property
    def normalized_loading(self) -> float:
        return self.loading / self.sigma_max**2

    def filter(self, sigma) -> np.ndarray:
        """Scaled filter h(lambda) = lambda / (lambda^2 + s^2) with lambda = sigma / sigma_max."""
        lam = np.asarray(sigma, dtype=float) / self.sigma_max
        return lam / (lam**2 + self.normalized_loading)

    def rotation_amplitude(self, sigma) -> np.ndarray:
        """Amplitude C*h left on the |0> branch of the controlled rotation."""
        return np.clip(self.success_constant * self.filter(sigma), 0.0, 1.0)

    def success_lower_bound(self) -> float:
        """(1/4) (1/kappa + kappa s^2)^2."""
        return 0.25 * (1.0 / self.kappa + self.kappa * self.normalized_loading) ** 2


def loading_filter(lam, loading: float) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    return lam / (lam**2 + loading)


def resolve_regularization(a, cfg: RegularizationConfig) -> ResolvedRegularization:
    s = svd(as_matrix(a)).singular_values
    r = numerical_rank(s)
    if r == 0:
        raise ValueError("measurement matrix is zero")
    s = s[:r]
    sigma_max = float(s[0])
    kappa = float(s[0] / s[-1])
    loading = cfg.loading if cfg.loading is not None else DEFAULT_RELATIVE_LOADING * sigma_max**2
    norm_loading = loading / sigma_max**2
    if math.sqrt(norm_loading) > 1.0 / kappa:
        warnings.warn(
            f"loading sqrt(s^2)={math.sqrt(norm_loading):.3g} exceeds 1/kappa={1 / kappa:.3g}; "
            "the filter is no longer monotone over the spectrum",
            stacklevel=2,
        )
    h_max = float(loading_filter(s / sigma_max, norm_loading).max())
    c = cfg.success_constant
    if c is None:
        c = min(1.0 / h_max, 1.0 / kappa + kappa * norm_loading, 1.0)
    elif c * h_max > 1.0 + 1e-12:
        raise ValueError(f"success_constant {c} exceeds 1/max h = {1 / h_max:.6g}")
    return ResolvedRegularization(
        loading=float(loading),
        sigma_max=sigma_max,
        kappa=kappa,
        frobenius=float(np.linalg.norm(as_matrix(a))),
        success_constant=float(c),
        phase_bits=cfg.phase_bits,
    )


def phase_precision(kappa: float, frobenius: float, normalized_loading: float, epsilon: float) -> float:
    """Phase-estimation precision eps_p for a target final state error ``epsilon``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return epsilon * (1.0 + normalized_loading * kappa**2) / (kappa * frobenius)


def phase_error_budget(a, cfg: RegularizationConfig, epsilon: float) -> int:
    """Phase bits t = ceil(log2(1/eps_p)) + 2 needed for final error ``epsilon``."""
    res = resolve_regularization(a, cfg)
    eps_p = phase_precision(res.kappa, res.frobenius, res.normalized_loading, epsilon)
    return bits_for_precision(eps_p)


def bits_for_precision(eps_p: float) -> int:
    return max(1, math.ceil(math.log2(1.0 / eps_p)) + 2)
