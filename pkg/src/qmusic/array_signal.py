"""Uniform linear array signal model and the beam-sweep measurement operator.

Angles are degrees at every public interface. The steering vector uses the
``exp(-j 2 pi (d/lambda) m sin(theta))`` sign convention with element 0 as
the phase reference.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NotHermitianError
from .numerics import as_matrix, is_hermitian, kron


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _check_angle(angle: float) -> None:
    if not np.isfinite(angle) or abs(angle) >= 90.0:
        raise ValueError(f"angle {angle} deg is outside (-90, 90)")


@dataclass(frozen=True)
class ArrayConfig:
    num_elements: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if self.num_elements < 2 or not _is_power_of_two(self.num_elements):
            raise ValueError("num_elements must be a power of two and at least 2")
        if not self.spacing_ratio > 0:
            raise ValueError("spacing_ratio must be positive")

    @property
    def num_qubits(self) -> int:
        return self.num_elements.bit_length() - 1


@dataclass(frozen=True)
class SourceScenario:
    angles: tuple[float, ...]
    noise_variance: float = 0.0
    num_snapshots: int = 1000
    source_powers: tuple[float, ...] | None = None

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        object.__setattr__(self, "angles", angles)
        for a in angles:
            _check_angle(a)
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise ValueError("source angles must be strictly increasing")
        powers = self.source_powers
        powers = tuple(1.0 for _ in angles) if powers is None else tuple(float(p) for p in powers)
        if len(powers) != len(angles) or any(not p > 0 for p in powers):
            raise ValueError("need one positive power per source")
        object.__setattr__(self, "source_powers", powers)
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be >= 0")
        if self.num_snapshots < 1:
            raise ValueError("num_snapshots must be >= 1")

    @property
    def num_sources(self) -> int:
        return len(self.angles)

    def validate_for(self, config: ArrayConfig) -> None:
        if self.num_sources >= config.num_elements:
            raise ValueError("need fewer sources than array elements")


@dataclass(frozen=True)
class BeamSweepPlan:
    angles: tuple[float, ...]

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        object.__setattr__(self, "angles", angles)
        if not angles:
            raise ValueError("a sweep needs at least one angle")
        for a in angles:
            _check_angle(a)
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise ValueError("sweep angles must be strictly increasing")

    @classmethod
    def uniform(cls, count: int, span: float = 90.0) -> "BeamSweepPlan":
        """``count`` equally spaced angles strictly inside (-span, span)."""
        return cls(tuple(np.linspace(-span, span, count + 2)[1:-1]))

    def __len__(self) -> int:
        return len(self.angles)


@dataclass(frozen=True)
class BeamSweepObservation:
    a_matrix: np.ndarray  # (Q, M^2)
    powers: np.ndarray  # (Q,)
    plan: BeamSweepPlan | None = field(default=None, compare=False)

    def __post_init__(self):
        a = as_matrix(self.a_matrix)
        p = np.asarray(self.powers, dtype=float).reshape(-1)
        if a.shape[0] != p.size:
            raise DimensionError(f"A has {a.shape[0]} rows but {p.size} powers were given")
        if np.any(p < 0):
            raise ValueError("beam powers must be nonnegative")
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "powers", p)

    @property
    def num_elements(self) -> int:
        return int(round(np.sqrt(self.a_matrix.shape[1])))


def steering_vector(config: ArrayConfig, angle: float) -> np.ndarray:
    _check_angle(angle)
    m = np.arange(config.num_elements)
    phase = 2 * np.pi * config.spacing_ratio * np.sin(np.deg2rad(angle))
    return np.exp(-1j * phase * m)


def steering_matrix(config: ArrayConfig, angles) -> np.ndarray:
    """Columns are steering vectors for ``angles`` (M x len(angles))."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.size and np.max(np.abs(angles)) >= 90.0:
        raise ValueError("angles must lie in (-90, 90)")
    m = np.arange(config.num_elements)[:, None]
    phase = 2 * np.pi * config.spacing_ratio * np.sin(np.deg2rad(angles))[None, :]
    return np.exp(-1j * phase * m)


def true_covariance(config: ArrayConfig, scenario: SourceScenario) -> np.ndarray:
    """R = A_s diag(p) A_s^H + noise_variance * I."""
    a_s = steering_matrix(config, scenario.angles)
    r = (a_s * np.asarray(scenario.source_powers)) @ a_s.conj().T
    return r + scenario.noise_variance * np.eye(config.num_elements)


def _circular_gaussian(rng: np.random.Generator, shape, variance) -> np.ndarray:
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate_snapshots(config: ArrayConfig, scenario: SourceScenario, rng_seed: int) -> np.ndarray:
    """Draw an M x N snapshot matrix y(k) = A_s s(k) + n(k).

    Sources are independent circular complex Gaussians with the scenario's
    powers; noise is white with variance ``noise_variance`` per element.
    """
    scenario.validate_for(config)
    rng = np.random.default_rng(rng_seed)
    n_snap = scenario.num_snapshots
    a_s = steering_matrix(config, scenario.angles)
    powers = np.asarray(scenario.source_powers)[:, None]
    s = _circular_gaussian(rng, (scenario.num_sources, n_snap), powers)
    noise = _circular_gaussian(rng, (config.num_elements, n_snap), scenario.noise_variance)
    return a_s @ s + noise


def sample_covariance(snapshots) -> np.ndarray:
    y = as_matrix(snapshots)
    if y.shape[1] < 1:
        raise DimensionError("need at least one snapshot")
    r = y @ y.conj().T / y.shape[1]
    return (r + r.conj().T) / 2


def beam_powers(r, plan: BeamSweepPlan, config: ArrayConfig) -> np.ndarray:
    """Average received power a^H(theta_q) R a(theta_q) per sweep angle."""
    r = as_matrix(r)
    m = config.num_elements
    if r.shape != (m, m):
        raise DimensionError(f"covariance must be {m}x{m}, got {r.shape}")
    if not is_hermitian(r):
        raise NotHermitianError("beam_powers requires a Hermitian covariance")
    a = steering_matrix(config, plan.angles)
    p = np.einsum("mq,mn,nq->q", a.conj(), r, a).real
    return np.clip(p, 0.0, None)


def build_a_matrix(plan: BeamSweepPlan, config: ArrayConfig) -> np.ndarray:
    """Q x M^2 measurement matrix with ``A @ vec(R) == beam_powers(R)``.

    Row q is ``kron(a_q, conj(a_q))``: with column-major ``vec``, entry
    ``m + M*n`` of that row is ``a_n conj(a_m)``, which pairs with ``R[m, n]``.
    """
    a = steering_matrix(config, plan.angles)
    return np.stack([kron(a[:, q], a[:, q].conj()).ravel() for q in range(a.shape[1])])


def observe(r, plan: BeamSweepPlan, config: ArrayConfig) -> BeamSweepObservation:
    """Bundle the measurement matrix with the powers a beam sweep of ``r`` yields."""
    return BeamSweepObservation(build_a_matrix(plan, config), beam_powers(r, plan, config), plan)


__all__ = [
    "ArrayConfig",
    "SourceScenario",
    "BeamSweepPlan",
    "BeamSweepObservation",
    "steering_vector",
    "steering_matrix",
    "true_covariance",
    "generate_snapshots",
    "sample_covariance",
    "beam_powers",
    "build_a_matrix",
    "observe",
]
