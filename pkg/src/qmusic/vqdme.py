"""Variational density-matrix eigensolver.

A layered ansatz V(theta) is trained to maximize

    C(theta) = sum_i w_i <i| V^H rho V |i>,   w = q / sum(q),

over the first L computational basis states. With strictly decreasing
weights the maximum is reached when V|i> is the i-th eigenvector of rho, so
the diagonal terms at the optimum read out the top-L eigenvalues.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize as sopt

from .errors import DimensionError
from .numerics import hermitian_eig
from .qsim.circuit import Circuit
from .qsim.measure import destructive_swap_test
from .qsim.states import DensityMatrix, StateVector

log = logging.getLogger(__name__)

ENTANGLERS = ("ring-cz", "ring-cnot")
OPTIMIZERS = ("gradient", "spsa", "nelder-mead")
OBJECTIVES = ("exact", "swap-test")


SPSA_FIRST_STEP = 0.2
SPSA_CALIBRATION = 5


def default_depth(num_qubits: int) -> int:
    # Depth 4 reaches the 4x4 optimum; three qubits need 6 layers in practice.
    return 4 if num_qubits <= 2 else 2 * num_qubits


@dataclass(frozen=True)
class AnsatzConfig:
    """``depth=None`` picks :func:`default_depth`."""

    num_qubits: int
    depth: int | None = None
    entangler: str = "ring-cnot"

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        if self.depth is None:
            object.__setattr__(self, "depth", default_depth(self.num_qubits))
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.entangler not in ENTANGLERS:
            raise ValueError(f"entangler must be one of {ENTANGLERS}")

    @property
    def num_parameters(self) -> int:
        return 3 * self.num_qubits * self.depth

    @property
    def dim(self) -> int:
        return 2**self.num_qubits

    def pairs(self) -> list[tuple[int, int]]:
        n = self.num_qubits
        if n == 1:
            return []
        if n == 2:
            return [(0, 1)]
        return [(q, (q + 1) % n) for q in range(n)]


@dataclass(frozen=True)
class WeightVector:
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("need at least one weight")
        if vals[-1] <= 0 or any(b >= a for a, b in zip(vals, vals[1:])):
            raise ValueError("weights must be positive and strictly decreasing")

    @classmethod
    def default(cls, count: int) -> "WeightVector":
        """q_i = L - i + 1."""
        return cls(tuple(float(count - i) for i in range(count)))

    def normalized(self) -> np.ndarray:
        w = np.asarray(self.values)
        return w / w.sum()

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class VQDMEConfig:
    weights: WeightVector
    optimizer: str = "gradient"
    max_iterations: int = 200
    tolerance: float = 1e-8
    window: int = 10
    objective: str = "exact"
    shots: int | None = None
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if self.objective == "swap-test" and (self.shots is None or self.shots < 1):
            raise ValueError("swap-test objective needs a positive shot count")
        if self.max_iterations < 1 or self.restarts < 1 or self.window < 1:
            raise ValueError("max_iterations, restarts and window must be >= 1")
        if not self.tolerance >= 0:
            raise ValueError("tolerance must be >= 0")

    @property
    def num_states(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class VQDMEResult:
    theta_star: np.ndarray
    objective_trace: np.ndarray
    eigenvalue_estimates: np.ndarray
    eigenvector_states: tuple[StateVector, ...]
    iterations_used: int
    converged: bool
    objective: float
    upper_bound: float
    eigenvalue_trace: np.ndarray | None = field(default=None, repr=False)  # (iterations+1, L)
    restart_objectives: tuple[float, ...] = field(default=())

    @property
    def ordered(self) -> bool:
        lam = self.eigenvalue_estimates
        return bool(np.all(np.diff(lam) <= 1e-12))

    @property
    def gap(self) -> float:
        """Distance of the final objective from the weighted eigenvalue bound."""
        return self.upper_bound - self.objective


# -- ansatz -------------------------------------------------------------------

def _check_theta(cfg: AnsatzConfig, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != cfg.num_parameters:
        raise DimensionError(
            f"ansatz needs {cfg.num_parameters} parameters, got {theta.shape[-1]}"
        )
    return theta


def build_ansatz(cfg: AnsatzConfig, theta) -> Circuit:
    """R_d E R_{d-1} ... E R_1, each R applying RZ, RY, RZ to every qubit."""
    th = _check_theta(cfg, theta).reshape(cfg.depth, cfg.num_qubits, 3)
    c = Circuit(cfg.num_qubits)
    for layer in range(cfg.depth):
        if layer:
            _entangle(c, cfg)
        for q in range(cfg.num_qubits):
            c.rz(q, th[layer, q, 0]).ry(q, th[layer, q, 1]).rz(q, th[layer, q, 2])
    return c


def _entangle(c: Circuit, cfg: AnsatzConfig) -> None:
    for a, b in cfg.pairs():
        if cfg.entangler == "ring-cz":
            c.cz(a, b)
        else:
            c.cnot(a, b)


def _entangler_matrix(cfg: AnsatzConfig) -> np.ndarray:
    c = Circuit(cfg.num_qubits)
    _entangle(c, cfg)
    return c.to_matrix()


def _single_qubit_layers(th: np.ndarray) -> np.ndarray:
    """(B, depth, n, 3) angles -> (B, depth, n, 2, 2) RZ.RY.RZ gates."""
    a, b, c = th[..., 0], th[..., 1], th[..., 2]
    cb, sb = np.cos(b / 2), np.sin(b / 2)
    # RZ(c) RY(b) RZ(a)
    g = np.empty(th.shape[:-1] + (2, 2), dtype=np.complex128)
    g[..., 0, 0] = np.exp(-0.5j * (a + c)) * cb
    g[..., 0, 1] = -np.exp(0.5j * (a - c)) * sb
    g[..., 1, 0] = np.exp(-0.5j * (a - c)) * sb
    g[..., 1, 1] = np.exp(0.5j * (a + c)) * cb
    return g


def ansatz_unitaries(cfg: AnsatzConfig, thetas) -> np.ndarray:
    """Dense V(theta) for a batch of parameter vectors, shape (B, 2^n, 2^n)."""
    thetas = _check_theta(cfg, np.atleast_2d(thetas))
    b = thetas.shape[0]
    n, d = cfg.num_qubits, cfg.dim
    gates = _single_qubit_layers(thetas.reshape(b, cfg.depth, n, 3))
    ent = _entangler_matrix(cfg)
    v = np.broadcast_to(np.eye(d, dtype=np.complex128), (b, d, d))
    for layer in range(cfg.depth):
        if layer:
            v = ent @ v
        lay = gates[:, layer, 0]
        for q in range(1, n):
            g = gates[:, layer, q]
            lay = np.einsum("bij,bkl->bikjl", lay, g).reshape(b, 2 ** (q + 1), 2 ** (q + 1))
        v = lay @ v
    return v


def ansatz_unitary(cfg: AnsatzConfig, theta) -> np.ndarray:
    return ansatz_unitaries(cfg, theta)[0]


# -- objective ----------------------------------------------------------------

def _rho_matrix(rho, cfg: AnsatzConfig) -> np.ndarray:
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    if m.shape != (cfg.dim, cfg.dim):
        raise DimensionError(f"rho is {m.shape}, ansatz acts on dimension {cfg.dim}")
    return m


def _check_weights(vq: VQDMEConfig, dim: int) -> np.ndarray:
    if vq.num_states > dim:
        raise DimensionError(f"{vq.num_states} weights for a {dim}-dimensional space")
    return vq.weights.normalized()


def _diagonals(rho: np.ndarray, v: np.ndarray, count: int) -> np.ndarray:
    """<i| V^H rho V |i> for i < count, batched over V."""
    cols = v[..., :count]
    return np.einsum("bji,jk,bki->bi", cols.conj(), rho, cols).real


def objective_batch(rho, thetas, vq: VQDMEConfig, ansatz: AnsatzConfig) -> np.ndarray:
    """Exact C(theta) for every row of ``thetas``."""
    r = _rho_matrix(rho, ansatz)
    w = _check_weights(vq, ansatz.dim)
    v = ansatz_unitaries(ansatz, thetas)
    return _diagonals(r, v, len(w)) @ w


def reference_state(vq: VQDMEConfig, dim: int) -> DensityMatrix:
    """rho_f = sum_i w_i |i><i|."""
    w = np.zeros(dim)
    w[: vq.num_states] = _check_weights(vq, dim)
    return DensityMatrix(np.diag(w).astype(np.complex128))


def objective_C(
    rho, theta, vq: VQDMEConfig, ansatz: AnsatzConfig, rng: np.random.Generator | None = None
) -> float:
    """C(theta) = tr(V^H rho V rho_f); sampled with the swap test when so configured."""
    if vq.objective == "exact":
        return float(objective_batch(rho, theta, vq, ansatz)[0])
    r = _rho_matrix(rho, ansatz)
    v = ansatz_unitary(ansatz, theta)
    rotated = DensityMatrix((v.conj().T @ r @ v + (v.conj().T @ r @ v).conj().T) / 2)
    rng = rng if rng is not None else np.random.default_rng(vq.seed)
    est = destructive_swap_test(rotated, reference_state(vq, ansatz.dim), vq.shots, rng)
    return est.value


def gradient(rho, theta, vq: VQDMEConfig, ansatz: AnsatzConfig) -> np.ndarray:
    """Parameter-shift gradient [C(theta + pi/2 e_k) - C(theta - pi/2 e_k)] / 2."""
    theta = _check_theta(ansatz, theta)
    p = theta.size
    shifts = np.eye(p) * (np.pi / 2)
    batch = np.concatenate([theta + shifts, theta - shifts])
    c = objective_batch(rho, batch, vq, ansatz)
    return (c[:p] - c[p:]) / 2


def eigenvalue_readout(rho, theta_star, vq: VQDMEConfig, ansatz: AnsatzConfig) -> np.ndarray:
    r = _rho_matrix(rho, ansatz)
    v = ansatz_unitary(ansatz, theta_star)
    lam = _diagonals(r, v[None], vq.num_states)[0]
    return np.clip(lam, 0.0, 1.0)


def weighted_upper_bound(rho, vq: VQDMEConfig) -> float:
    """sum_i w_i lambda_i(rho) with eigenvalues in descending order."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else rho
    lam = hermitian_eig(m).eigenvalues
    w = vq.weights.normalized()
    return float(lam[: len(w)] @ w)


# -- optimizers ---------------------------------------------------------------

def _window_converged(trace: list[float], vq: VQDMEConfig) -> bool:
    w = vq.window
    if vq.objective == "exact":
        return len(trace) > w and abs(trace[-1] - trace[-1 - w]) < vq.tolerance
    # Shot estimates are quantized and noisy: compare means of consecutive windows
    # against the standard error of such a mean.
    if len(trace) < 2 * w:
        return False
    delta = abs(np.mean(trace[-w:]) - np.mean(trace[-2 * w:-w]))
    return delta < max(vq.tolerance, 1.0 / np.sqrt(vq.shots * w))


def _ascent(rho, theta, vq, ansatz):
    """Gradient ascent with a doubling step and Armijo backtracking."""
    c = objective_C(rho, theta, vq, ansatz)
    thetas, trace, step = [theta], [c], 1.0
    for _ in range(vq.max_iterations):
        g = gradient(rho, theta, vq, ansatz)
        gg = float(g @ g)
        if gg < 1e-30:
            break
        step *= 2.0
        while True:
            cand = theta + step * g
            cc = objective_C(rho, cand, vq, ansatz)
            if cc >= c + 1e-4 * step * gg or step < 1e-12:
                break
            step /= 2.0
        if cc >= c:
            theta, c = cand, cc
        thetas.append(theta)
        trace.append(c)
        if _window_converged(trace, vq):
            return thetas, trace, True
    return thetas, trace, _window_converged(trace, vq) or gg < 1e-30


def _spsa(rho, theta, vq, ansatz, rng):
    """Simultaneous-perturbation ascent; works with noisy objective estimates."""
    c0, big_a = 0.2, 0.1 * vq.max_iterations

    def f(th):
        return objective_C(rho, th, vq, ansatz, rng)

    def ghat(th, ck):
        delta = rng.choice([-1.0, 1.0], size=th.size)
        return (f(th + ck * delta) - f(th - ck * delta)) / (2 * ck) * delta

    # gain calibrated so the first step moves each parameter by about SPSA_FIRST_STEP
    mag = np.mean([np.mean(np.abs(ghat(theta, c0))) for _ in range(SPSA_CALIBRATION)])
    a0 = SPSA_FIRST_STEP * (1 + big_a) ** 0.602 / max(mag, 1e-6)
    thetas, trace = [theta], [f(theta)]
    for k in range(vq.max_iterations):
        ak = a0 / (k + 1 + big_a) ** 0.602
        ck = c0 / (k + 1) ** 0.101
        theta = theta + ak * ghat(theta, ck)
        thetas.append(theta)
        trace.append(f(theta))
        if _window_converged(trace, vq):
            return thetas, trace, True
    return thetas, trace, False


def _simplex(rho, theta, vq, ansatz, rng):
    f = lambda th: -objective_C(rho, th, vq, ansatz, rng)  # noqa: E731
    thetas, trace = [theta], [-f(theta)]

    def record(xk):
        thetas.append(np.array(xk))
        trace.append(-f(xk))

    res = sopt.minimize(
        f, theta, method="Nelder-Mead", callback=record,
        options={"maxiter": vq.max_iterations, "fatol": vq.tolerance, "xatol": 1e-8},
    )
    if not np.array_equal(thetas[-1], res.x):
        record(res.x)
    return thetas, trace, bool(res.success)


def optimize(rho, vq: VQDMEConfig, ansatz: AnsatzConfig) -> VQDMEResult:
    """Multi-start maximization of C; the best restart is kept."""
    r = _rho_matrix(rho, ansatz)
    _check_weights(vq, ansatz.dim)
    if vq.optimizer == "gradient" and vq.objective != "exact":
        raise ValueError("parameter-shift ascent runs on the exact objective; use spsa or nelder-mead")
    run = {"gradient": lambda th: _ascent(r, th, vq, ansatz),
           "spsa": lambda th: _spsa(r, th, vq, ansatz, rng),
           "nelder-mead": lambda th: _simplex(r, th, vq, ansatz, rng)}[vq.optimizer]
    rng = np.random.default_rng(vq.seed)
    best = None
    finals = []
    for k in range(vq.restarts):
        thetas, trace, conv = run(rng.uniform(0.0, 2 * np.pi, ansatz.num_parameters))
        final = float(objective_batch(r, thetas[-1], vq, ansatz)[0])
        finals.append(final)
        log.debug("restart %d: C=%.10f after %d iterations", k, final, len(trace) - 1)
        if best is None or final > best[3]:
            best = (thetas, trace, conv, final)
    thetas, trace, conv, final = best
    theta = thetas[-1]
    v = ansatz_unitary(ansatz, theta)
    lam_trace = _diagonals(r, ansatz_unitaries(ansatz, np.asarray(thetas)), vq.num_states)
    return VQDMEResult(
        theta_star=theta,
        objective_trace=np.asarray(trace),
        eigenvalue_estimates=eigenvalue_readout(r, theta, vq, ansatz),
        eigenvector_states=tuple(StateVector(v[:, i]) for i in range(vq.num_states)),
        iterations_used=len(trace) - 1,
        converged=conv,
        objective=final,
        upper_bound=weighted_upper_bound(r, vq),
        eigenvalue_trace=lam_trace,
        restart_objectives=tuple(finals),
    )


def example_density(seed: int, eigenvalues=(0.4, 0.3, 0.2, 0.1)) -> DensityMatrix:
    """diag(eigenvalues) conjugated by a Haar-random unitary drawn from ``seed``."""
    from scipy.stats import unitary_group

    lam = np.asarray(eigenvalues, dtype=float)
    u = unitary_group.rvs(lam.size, random_state=seed)
    m = (u * lam) @ u.conj().T
    return DensityMatrix((m + m.conj().T) / 2)
