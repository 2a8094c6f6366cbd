"""Named states: thermal, quenched, maximally entangled, isotropic, GHZ basis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qmat import DEFAULT_TOL, ToleranceProfile, check_dims, eig_hermitian, is_hermitian, ket, proj, tensor


class NotAState(ValueError):
    """The requested operator is not a density operator.

    ``min_eigenvalue`` carries the most negative eigenvalue when that is the
    violated condition.
    """

    def __init__(self, msg: str, min_eigenvalue: float | None = None):
        super().__init__(msg)
        self.min_eigenvalue = min_eigenvalue


@dataclass(frozen=True, eq=False)
class DensityOperator:
    mat: np.ndarray
    dims: tuple[int, ...]
    tol: ToleranceProfile = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        mat = np.array(self.mat, dtype=complex)
        dims = check_dims(mat, self.dims if self.dims else (mat.shape[0],))
        if not is_hermitian(mat, self.tol.herm):
            raise NotAState("operator is not Hermitian")
        tr = np.trace(mat).real
        if abs(tr - 1) > 1e-10:
            raise NotAState(f"trace {tr!r} differs from 1")
        lmin = float(np.linalg.eigvalsh((mat + mat.conj().T) / 2)[0])
        if lmin < -self.tol.psd:
            raise NotAState(f"negative eigenvalue {lmin:.3e}", lmin)
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)

    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))


def as_matrix(rho) -> np.ndarray:
    return rho.mat if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)


@dataclass(frozen=True, eq=False)
class ThermalSpec:
    """Hamiltonian, temperature and Boltzmann constant.

    ``temperature`` may be ``math.inf``; that case is handled without
    exponentiating, so no overflow occurs.
    """

    hamiltonian: np.ndarray
    temperature: float
    boltzmann: float = 1.0

    def __post_init__(self):
        h = np.array(self.hamiltonian, dtype=complex)
        if h.ndim == 1:
            h = np.diag(h)
        if not is_hermitian(h):
            raise ValueError("Hamiltonian must be Hermitian")
        if not self.temperature >= 0:
            raise ValueError("temperature must be non-negative")
        if self.boltzmann <= 0:
            raise ValueError("Boltzmann constant must be positive")
        object.__setattr__(self, "hamiltonian", h)

    @property
    def infinite(self) -> bool:
        return math.isinf(self.temperature)

    @property
    def kT(self) -> float:
        return self.boltzmann * self.temperature


def ground_space(hamiltonian: np.ndarray, rel_gap: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Energies and an orthonormal basis (columns) of the ground space.

    Levels within ``rel_gap`` (relative to the spectral scale) of the lowest
    eigenvalue are counted as degenerate.
    """
    w, v = eig_hermitian(np.asarray(hamiltonian, dtype=complex))
    scale = max(np.max(np.abs(w)), 1.0)
    mask = w - w[0] < rel_gap * scale
    return w[mask], v[:, mask]


def thermal_state(spec: ThermalSpec) -> DensityOperator:
    """Gibbs state exp(-H/kT)/Z.

    At T = 0 the uniform mixture over the ground space is returned (the pure
    ground state when it is unique).
    """
    h = spec.hamiltonian
    d = h.shape[0]
    if spec.infinite:
        return DensityOperator(np.eye(d) / d, (d,))
    if spec.temperature == 0:
        _, g = ground_space(h)
        return DensityOperator(g @ g.conj().T / g.shape[1], (d,))
    w, v = eig_hermitian(h)
    boltz = np.exp(-(w - w[0]) / spec.kT)
    pops = boltz / boltz.sum()
    return DensityOperator((v * pops) @ v.conj().T, (d,))


def admits_eplt(gamma: DensityOperator) -> bool:
    """False when the marginal is pure: a pure marginal cannot carry entanglement."""
    return gamma.purity() < 1 - 1e-10


def min_thermal_population(gamma_a: DensityOperator, gamma_b: DensityOperator) -> float:
    if gamma_a.dim != gamma_b.dim:
        raise ValueError(f"unequal local dimensions {gamma_a.dim} and {gamma_b.dim}")
    p = min(gamma_a.eigenvalues()[0], gamma_b.eigenvalues()[0])
    return float(min(max(p, 0.0), 1.0 / gamma_a.dim))


def eta_state(gamma: DensityOperator, epsilon: float) -> DensityOperator:
    """Quenched state gamma + eps/(1-eps) (gamma - I/d).

    Mixing it with weight 1-eps against I/d with weight eps gives back gamma.
    Valid for 0 <= eps <= d * min eigenvalue of gamma.
    """
    if not 0 <= epsilon < 1:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    d = gamma.dim
    mat = gamma.mat + epsilon / (1 - epsilon) * (gamma.mat - np.eye(d) / d)
    lmin = float(np.linalg.eigvalsh(mat)[0])
    if lmin < -gamma.tol.psd:
        raise NotAState(f"epsilon={epsilon} exceeds d*P_min; eta has eigenvalue {lmin:.3e}", lmin)
    return DensityOperator(mat, gamma.dims, gamma.tol)


def max_entangled_vector(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)


def max_entangled(d: int) -> DensityOperator:
    if d < 2:
        raise ValueError("local dimension must be at least 2")
    return DensityOperator(proj(max_entangled_vector(d)), (d, d))


def isotropic(d: int, p: float) -> DensityOperator:
    if d < 2:
        raise ValueError("local dimension must be at least 2")
    lo = -1.0 / (d * d - 1)
    if not lo - 1e-15 <= p <= 1 + 1e-15:
        raise NotAState(f"isotropic weight p={p} outside [{lo}, 1]")
    mat = p * proj(max_entangled_vector(d)) + (1 - p) * np.eye(d * d) / d**2
    return DensityOperator(mat, (d, d))


def ghz_vector(n: int, j: int, sign: int = +1) -> np.ndarray:
    """(|j>|0> + sign |2^(n-1)-1-j>|1>)/sqrt(2) with j written on the first n-1 qubits."""
    if n < 2:
        raise ValueError("need at least two qubits")
    half = 2 ** (n - 1)
    if not 0 <= j < half:
        raise ValueError(f"GHZ index j={j} out of range [0, {half})")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    v = tensor(ket(j, half), ket(0, 2)) + sign * tensor(ket(half - 1 - j, half), ket(1, 2))
    return v / np.sqrt(2)


def ghz_basis(n: int, j: int, sign: int = +1) -> DensityOperator:
    return DensityOperator(proj(ghz_vector(n, j, sign)), (2,) * n)


def ghz_basis_matrix(n: int) -> np.ndarray:
    """Columns ordered (j=0,+), (j=0,-), (j=1,+), ..."""
    return np.column_stack([ghz_vector(n, j, s) for j in range(2 ** (n - 1)) for s in (1, -1)])


def ghz_isotropic(n: int, x: float) -> DensityOperator:
    return DensityOperator(x * proj(ghz_vector(n, 0, 1)) + (1 - x) * np.eye(2**n) / 2**n, (2,) * n)


def product_state(*rhos: DensityOperator) -> DensityOperator:
    return DensityOperator(tensor(*(r.mat for r in rhos)), sum((r.dims for r in rhos), ()))


def qubit_thermal(energy: float, kT: float) -> DensityOperator:
    """Thermal state of H = E |1><1| at temperature kT."""
    return thermal_state(ThermalSpec(np.diag([0.0, energy]), kT, 1.0))


def as_state(mat: np.ndarray, dims: Sequence[int]) -> DensityOperator:
    return DensityOperator(np.asarray(mat), tuple(dims))
