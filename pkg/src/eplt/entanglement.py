"""Entanglement and local-thermality verifiers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels.base import LosrMixture
from .qmat import DimensionMismatch, haar_unitary, hermitian_basis, partial_trace, partial_transpose
from .states import DensityOperator, as_matrix, ghz_vector, max_entangled_vector


class NotInFamily(ValueError):
    """The state is not of the form x GHZ + (1 - x) I / 2^n."""


def _local_dim(rho) -> int:
    dims = rho.dims
    if len(dims) != 2 or dims[0] != dims[1]:
        raise DimensionMismatch(f"expected a d x d bipartite state, got dims {dims}")
    return dims[0]


def singlet_fraction(rho: DensityOperator) -> float:
    phi = max_entangled_vector(_local_dim(rho))
    return float(np.real(phi.conj() @ rho.mat @ phi))


@dataclass
class FefResult:
    lower_bound: float
    optimized: float
    maximizer: np.ndarray = field(repr=False)
    restarts: int
    best_restart: int = 0

    def to_dict(self) -> dict:
        return {
            "singlet_fraction": self.lower_bound,
            "fef_lower_bound": self.optimized,
            "restarts": self.restarts,
            "best_restart": self.best_restart,
            "maximizer": [[[float(z.real), float(z.imag)] for z in row] for row in self.maximizer],
        }


def _polar(g: np.ndarray) -> np.ndarray:
    w, _, vh = np.linalg.svd(g)
    return w @ vh


def _ascend(rho: np.ndarray, u: np.ndarray, d: int, max_iter: int, tol: float) -> tuple[float, np.ndarray]:
    # overlap with (I kron U)|Psi+>: the state vector reshaped is U^T / sqrt(d)
    m = u.T / np.sqrt(d)
    val = float(np.real(m.reshape(-1).conj() @ rho @ m.reshape(-1)))
    for _ in range(max_iter):
        g = (rho @ m.reshape(-1)).reshape(d, d)
        m_new = _polar(g) / np.sqrt(d)
        new = float(np.real(m_new.reshape(-1).conj() @ rho @ m_new.reshape(-1)))
        if new < val + tol:
            if new > val:
                m, val = m_new, new
            break
        m, val = m_new, new
    return val, (m * np.sqrt(d)).T


def fef(rho: DensityOperator, restarts: int = 32, seed: int | None = 0, max_iter: int = 500, tol: float = 1e-14) -> FefResult:
    """Fully entangled fraction, maximised over (I kron U)|Psi_d^+>.

    Each restart runs a monotone ascent: the overlap is convex in the state
    vector, so moving to the unitary polar factor of its gradient never
    decreases it.  Restart 0 starts at U = I, so the result is never below
    the singlet fraction.  The value is a certified lower bound on the true
    maximum.
    """
    d = _local_dim(rho)
    mat = rho.mat
    seeds = np.random.SeedSequence(seed).spawn(max(restarts - 1, 0))
    starts = [np.eye(d, dtype=complex)]
    starts += [haar_unitary(d, np.random.default_rng(s)) for s in seeds]
    best, best_u, best_k = -np.inf, starts[0], 0
    for k, u0 in enumerate(starts):
        val, u = _ascend(mat, u0, d, max_iter, tol)
        if val > best:
            best, best_u, best_k = val, u, k
    sf = singlet_fraction(rho)
    return FefResult(sf, float(min(max(best, sf), 1.0)), best_u, len(starts), best_k)


def ppt_min_eigenvalue(rho: DensityOperator, party: int = 1) -> float:
    return float(np.linalg.eigvalsh(partial_transpose(as_matrix(rho), rho.dims, party))[0])


def is_npt(rho: DensityOperator, party: int = 1, tol: float = 0.0) -> bool:
    return ppt_min_eigenvalue(rho, party) < -tol


def isotropic_entangled(d: int, p: float) -> bool:
    if not -1 / (d * d - 1) - 1e-15 <= p <= 1 + 1e-15:
        raise ValueError(f"isotropic weight p={p} outside the state range")
    return p + (1 - p) / d**2 > 1 / d


def fef_threshold_flags(
    fef_value: float, d: int, f_nonlocal: float | None = None, f_steerable: float | None = None
) -> dict[str, bool | None]:
    """Strict threshold comparisons; None when no threshold was supplied."""
    if not 0 <= fef_value <= 1:
        raise ValueError("FEF must lie in [0, 1]")
    return {
        "teleportation": fef_value > 1 / d,
        "distillable": fef_value > 1 / d,
        "nonlocal": None if f_nonlocal is None else fef_value > f_nonlocal,
        "steerable": None if f_steerable is None else fef_value > f_steerable,
    }


def ghz_weight(rho: DensityOperator, tol: float = 1e-8) -> float:
    """x such that rho = x GHZ + (1 - x) I/2^n, or NotInFamily."""
    n = len(rho.dims)
    if n < 2 or any(x != 2 for x in rho.dims):
        raise DimensionMismatch("GHZ family lives on two or more qubits")
    dim = 2**n
    g = ghz_vector(n, 0, 1)
    f = float(np.real(g.conj() @ rho.mat @ g))
    x = (f - 1 / dim) / (1 - 1 / dim)
    model = x * np.outer(g, g.conj()) + (1 - x) * np.eye(dim) / dim
    if np.max(np.abs(model - rho.mat)) > tol:
        raise NotInFamily("state is not of the form x GHZ + (1 - x) I / 2^n")
    return x


def gme_threshold(n: int) -> float:
    return 1 / (1 + 2 ** (n - 1))


def gme_threshold_test(rho: DensityOperator) -> bool:
    """Genuine multipartite entanglement, decided only inside the GHZ-isotropic family."""
    return ghz_weight(rho) > gme_threshold(len(rho.dims))


@dataclass
class ThermalityReport:
    is_losr_form: bool
    max_marginal_deviation: float
    basis_size: int
    per_marginal: list[float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.is_losr_form and self.max_marginal_deviation < self.tolerance

    def to_dict(self) -> dict:
        return {
            "is_losr_form": self.is_losr_form,
            "max_marginal_deviation": self.max_marginal_deviation,
            "basis_size": self.basis_size,
            "per_marginal": self.per_marginal,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def spanning_states(dim: int) -> list[np.ndarray]:
    """dim^2 density matrices (I + E)/tr spanning all operators, E from a Hermitian basis."""
    eye = np.eye(dim)
    out = []
    for e in hermitian_basis(dim):
        m = eye + e
        out.append(m / np.trace(m).real)
    return out


def _losr_valid(mix) -> bool:
    if not isinstance(mix, LosrMixture):
        return False
    w = mix.weights
    return bool(np.all(w >= 0) and abs(w.sum() - 1) <= 1e-12)


def verify_local_thermalization(mix: LosrMixture, gammas: Sequence[DensityOperator], tolerance: float = 1e-9) -> ThermalityReport:
    """Check every single-party marginal of mix(rho) against its target.

    The inputs span the whole operator space, so by linearity a pass holds for
    every input state.
    """
    dims = mix.local_dims
    if len(gammas) != len(dims) or any(g.dim != d for g, d in zip(gammas, dims)):
        raise DimensionMismatch("marginal targets do not match the mixture's local dimensions")
    dim = int(np.prod(dims))
    per = [0.0] * len(dims)
    states = spanning_states(dim)
    for rho in states:
        out = mix.act(rho)
        for k, g in enumerate(gammas):
            dev = float(np.max(np.abs(partial_trace(out, dims, [k]) - g.mat)))
            per[k] = max(per[k], dev)
    return ThermalityReport(_losr_valid(mix), max(per), len(states), per, tolerance)
