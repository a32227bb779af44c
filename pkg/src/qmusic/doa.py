"""Direction finding: MUSIC, the signal-subspace projection and quantum labeling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .array_signal import ArrayConfig, steering_matrix
from .errors import DimensionError, NotUnitaryError
from .numerics import as_matrix, hermitian_eig
from .qsim.measure import sample_counts

SPECTRUM_FLOOR = 1e-12
GRAM_TOL = 1e-8
HISTOGRAM_SMOOTHING_DEG = 2.0
SPECTRUM_KINDS = ("music-reciprocal", "projection")


@dataclass(frozen=True)
class SearchGrid:
    angles: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float).reshape(-1)
        if a.size < 2:
            raise ValueError("a search grid needs at least two angles")
        if not np.all(np.isfinite(a)) or np.max(np.abs(a)) >= 90.0:
            raise ValueError("grid angles must lie in (-90, 90)")
        if np.any(np.diff(a) <= 0):
            raise ValueError("grid angles must be strictly increasing")
        a.setflags(write=False)
        object.__setattr__(self, "angles", a)

    @classmethod
    def uniform(cls, count: int, span: float = 90.0) -> "SearchGrid":
        """``count`` equally spaced angles strictly inside (-span, span)."""
        return cls(np.linspace(-span, span, count + 2)[1:-1])

    def __len__(self) -> int:
        return self.angles.size

    @property
    def spacing(self) -> float:
        return float(np.median(np.diff(self.angles)))


@dataclass(frozen=True)
class Spectrum:
    grid: SearchGrid
    values: np.ndarray
    kind: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size != len(self.grid):
            raise DimensionError(f"{v.size} values for a {len(self.grid)}-point grid")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("spectrum values must be finite and nonnegative")
        if self.kind not in SPECTRUM_KINDS:
            raise ValueError(f"kind must be one of {SPECTRUM_KINDS}")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class LabelingResult:
    grid: SearchGrid
    distribution: np.ndarray
    success_probability: float
    samples: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        p = np.asarray(self.distribution, dtype=float)
        if p.size != len(self.grid) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
            raise ValueError("distribution must be a probability vector over the grid")
        if not 0 < self.success_probability <= 1 + 1e-12:
            raise ValueError("success probability must lie in (0, 1]")

    @property
    def shots(self) -> int | None:
        return None if self.samples is None else int(self.samples.sum())

    def histogram(self) -> np.ndarray:
        """Empirical frequencies if sampled, otherwise the exact distribution."""
        if self.samples is None:
            return self.distribution
        return self.samples / self.samples.sum()


@dataclass(frozen=True)
class DOAEstimate:
    angles: np.ndarray
    method: str
    indices: np.ndarray
    degenerate: bool = False


def subspaces(r, num_sources: int) -> tuple[np.ndarray, np.ndarray]:
    """Signal and noise eigenvector blocks of a Hermitian matrix."""
    eig = hermitian_eig(r)
    m = eig.eigenvectors.shape[0]
    if not 1 <= num_sources < m:
        raise ValueError(f"need 1 <= L < {m}, got L={num_sources}")
    return eig.eigenvectors[:, :num_sources], eig.eigenvectors[:, num_sources:]


def _orthonormal_columns(u) -> np.ndarray:
    u = as_matrix(u)
    gram = u.conj().T @ u
    if np.linalg.norm(gram - np.eye(u.shape[1])) > GRAM_TOL:
        raise ValueError("subspace basis must have orthonormal columns")
    return u


def _projection(u: np.ndarray, grid: SearchGrid, config: ArrayConfig) -> np.ndarray:
    if u.shape[0] != config.num_elements:
        raise DimensionError(f"basis has {u.shape[0]} rows, array has {config.num_elements} elements")
    a = steering_matrix(config, grid.angles)
    c = u.conj().T @ a
    return np.sum(np.abs(c) ** 2, axis=0)


def music_spectrum(noise_subspace, grid: SearchGrid, config: ArrayConfig) -> Spectrum:
    """1 / max(a^H U_n U_n^H a, 1e-12)."""
    u = _orthonormal_columns(noise_subspace)
    denom = np.maximum(_projection(u, grid, config), SPECTRUM_FLOOR)
    return Spectrum(grid, 1.0 / denom, "music-reciprocal")


def signal_projection_spectrum(signal_subspace, grid: SearchGrid, config: ArrayConfig) -> Spectrum:
    """a^H U_s U_s^H a for each grid angle."""
    u = _orthonormal_columns(signal_subspace)
    return Spectrum(grid, _projection(u, grid, config), "projection")


def labeling_distribution(
    v_star,
    num_sources: int,
    grid: SearchGrid,
    config: ArrayConfig,
    mode: str = "exact",
    shots: int | None = None,
    seed: int | None = None,
) -> LabelingResult:
    """Post-selected grid distribution of the labeling circuit.

    The grid register holds (1/sqrt(K)) sum_n |n> |a(theta_n)>/sqrt(M); V*^H
    acts on the array register, and the label flips when the array register
    is one of the first L basis states. ``shots`` counts post-selected
    (label = 1) samples.
    """
    v = as_matrix(v_star)
    m = config.num_elements
    if v.shape != (m, m):
        raise DimensionError(f"V* must be {m}x{m}, got {v.shape}")
    if np.linalg.norm(v.conj().T @ v - np.eye(m)) > 1e-8:
        raise NotUnitaryError("V* must be unitary")
    if not 1 <= num_sources <= m:
        raise ValueError(f"need 1 <= L <= {m}, got L={num_sources}")
    k = len(grid)
    phi = steering_matrix(config, grid.angles).T / np.sqrt(m * k)  # (K, M), row n = <n| block
    rotated = phi @ v.conj()  # row n -> V^H a(theta_n)
    labelled = np.sum(np.abs(rotated[:, :num_sources]) ** 2, axis=1)
    p_s = float(labelled.sum())
    if p_s <= 0:
        raise ValueError("label |1> has zero probability")
    dist = labelled / p_s
    if mode == "exact":
        return LabelingResult(grid, dist, min(p_s, 1.0), None, seed)
    if mode != "sampled":
        raise ValueError(f"unknown labeling mode {mode!r}")
    if shots is None or shots < 1:
        raise ValueError("sampled mode needs a positive shot count")
    counts = sample_counts(dist, shots, np.random.default_rng(seed))
    return LabelingResult(grid, dist, min(p_s, 1.0), counts, seed)


def _strict_maxima(values: np.ndarray) -> np.ndarray:
    left = np.concatenate([[-np.inf], values[:-1]])
    right = np.concatenate([values[1:], [-np.inf]])
    return np.flatnonzero((values > left) & (values > right))


def _rank(values: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    # descending value, ties to the smaller angle (smaller index)
    order = np.lexsort((candidates, -values[candidates]))
    return candidates[order]


def estimate_doa(
    source: Spectrum | LabelingResult, num_sources: int, smoothing: float | None = None
) -> DOAEstimate:
    """Top-L strict local maxima of a spectrum or histogram, returned in ascending angle.

    ``smoothing`` is a Gaussian kernel width in degrees applied before peak
    picking. By default sampled histograms get ``HISTOGRAM_SMOOTHING_DEG``,
    which suppresses shot noise on the broad peaks; spectra and exact
    distributions are used as is. Pass 0 to disable. If fewer than L peaks
    exist the remaining slots take the largest other values and the estimate
    is flagged degenerate.
    """
    if num_sources < 1:
        raise ValueError("need L >= 1")
    if isinstance(source, Spectrum):
        values, method, grid = source.values, "spectrum-peaks", source.grid
    else:
        values, method, grid = source.histogram().astype(float), "sampling-histogram", source.grid
        if smoothing is None and source.samples is not None:
            smoothing = HISTOGRAM_SMOOTHING_DEG
    if num_sources > len(grid):
        raise ValueError("more sources than grid points")
    if smoothing:
        values = gaussian_filter1d(values, smoothing / grid.spacing, mode="nearest")
    peaks = _rank(values, _strict_maxima(values))[:num_sources]
    degenerate = peaks.size < num_sources
    if degenerate:
        rest = np.setdiff1d(np.arange(values.size), peaks)
        fill = _rank(values, rest)[: num_sources - peaks.size]
        peaks = np.concatenate([peaks, fill])
    idx = np.sort(peaks)
    return DOAEstimate(grid.angles[idx].copy(), method, idx, bool(degenerate))
