"""Entanglement preserving local thermalizations as explicit LOSR mixtures."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..qmat import DimensionMismatch, tensor
from ..states import DensityOperator, eta_state, ground_space, min_thermal_population, product_state
from .base import (
    LosrMixture,
    LosrTerm,
    QuantumChannel,
    combine,
    constant_channel,
    identity_channel,
    mixing_channel,
    product_mixture,
    unitary_channel,
)
from .twirl import clifford_group, ghz_twirl_mixture, ghz_twirl_operator, twirl_mixture, twirl_operator

_RANGE_SLACK = 1e-12


class EpsilonOutOfRange(ValueError):
    def __init__(self, epsilon: float, eps_max: float, what: str = "epsilon"):
        super().__init__(f"{what}={epsilon} outside [0, {eps_max}]")
        self.epsilon = epsilon
        self.eps_max = eps_max


class NoEPLT(ValueError):
    """No entanglement preserving local thermalization exists for these marginals."""


def eps_star(gamma_a: DensityOperator, gamma_b: DensityOperator) -> float:
    return gamma_a.dim * min_thermal_population(gamma_a, gamma_b)


def _check_eps(eps: float, eps_max: float, what: str = "epsilon") -> None:
    if eps < 0 or eps > eps_max + _RANGE_SLACK:
        raise EpsilonOutOfRange(eps, eps_max, what)


def eplt(gamma_a: DensityOperator, gamma_b: DensityOperator, epsilon: float, samples: int = 2000, rng=None) -> LosrMixture:
    """(1 - eps) eta_A kron eta_B + eps * twirl, as a finite LOSR mixture.

    The twirl part is a Clifford 2-design for prime d and a Monte-Carlo
    mixture otherwise (see ``twirl_mixture``).
    """
    d = gamma_a.dim
    if gamma_b.dim != d:
        raise DimensionMismatch("both marginals need the same local dimension")
    e_max = eps_star(gamma_a, gamma_b)
    _check_eps(epsilon, e_max)
    parts = []
    if epsilon < 1:
        ea, eb = eta_state(gamma_a, epsilon), eta_state(gamma_b, epsilon)
        parts.append((1 - epsilon, product_mixture(constant_channel(ea), constant_channel(eb))))
    if epsilon > 0:
        parts.append((epsilon, twirl_mixture(d, samples, rng)))
    return combine(parts, f"eplt(d={d}, eps={epsilon:g})")


def eplt_operator(gamma_a: DensityOperator, gamma_b: DensityOperator, epsilon: float, x: np.ndarray) -> np.ndarray:
    """Closed-form action of the same map on an arbitrary operator."""
    d = gamma_a.dim
    _check_eps(epsilon, eps_star(gamma_a, gamma_b))
    out = epsilon * twirl_operator(x, d)
    if epsilon < 1:
        eta = tensor(eta_state(gamma_a, epsilon).mat, eta_state(gamma_b, epsilon).mat)
        out = out + (1 - epsilon) * np.trace(x) * eta
    return out


def eplt_output(gamma_a, gamma_b, epsilon, rho: DensityOperator) -> DensityOperator:
    return DensityOperator(eplt_operator(gamma_a, gamma_b, epsilon, rho.mat), rho.dims)


def _local_mixing(gamma: DensityOperator, eps: float) -> QuantumChannel:
    if eps >= 1:
        return identity_channel(gamma.dims)
    return mixing_channel(eta_state(gamma, eps), 1 - eps)


def eplt_alternative(gamma_a, gamma_b, eps_a: float, eps_b: float, samples: int = 2000, rng=None) -> LosrMixture:
    """[D_A kron D_B] o twirl, where D_X mixes towards eta_X with weight 1 - eps_X."""
    d = gamma_a.dim
    if gamma_b.dim != d:
        raise DimensionMismatch("both marginals need the same local dimension")
    _check_eps(eps_a, d * min_thermal_population(gamma_a, gamma_a), "eps_A")
    _check_eps(eps_b, d * min_thermal_population(gamma_b, gamma_b), "eps_B")
    da, db = _local_mixing(gamma_a, eps_a), _local_mixing(gamma_b, eps_b)
    tw = twirl_mixture(d, samples, rng)
    terms = tuple(LosrTerm(t.weight, (t.channels[0].then(da), t.channels[1].then(db))) for t in tw.terms)
    return LosrMixture(terms, f"eplt_alternative(d={d}, eps=({eps_a:g}, {eps_b:g}))")


def eplt_alternative_operator(gamma_a, gamma_b, eps_a, eps_b, x: np.ndarray) -> np.ndarray:
    from .base import apply_local

    d = gamma_a.dim
    y = twirl_operator(x, d)
    y = apply_local(y, (d, d), 0, _local_mixing(gamma_a, eps_a).kraus)
    return apply_local(y, (d, d), 1, _local_mixing(gamma_b, eps_b).kraus)


def multipartite_eps_max(gammas: Sequence[DensityOperator]) -> float:
    return 2 * min(float(g.eigenvalues()[0]) for g in gammas)


def eplt_multipartite(gammas: Sequence[DensityOperator], epsilon: float) -> LosrMixture:
    """(1 - eps) kron_i eta_i + eps * GHZ twirl on n qubits."""
    n = len(gammas)
    if n < 2 or any(g.dim != 2 for g in gammas):
        raise DimensionMismatch("multipartite construction needs two or more qubit marginals")
    _check_eps(epsilon, multipartite_eps_max(gammas))
    parts = []
    if epsilon < 1:
        parts.append((1 - epsilon, product_mixture(*(constant_channel(eta_state(g, epsilon)) for g in gammas))))
    if epsilon > 0:
        parts.append((epsilon, ghz_twirl_mixture(n)))
    return combine(parts, f"eplt_multipartite(n={n}, eps={epsilon:g})")


def eplt_multipartite_operator(gammas, epsilon, x: np.ndarray) -> np.ndarray:
    n = len(gammas)
    out = epsilon * ghz_twirl_operator(x, n)
    if epsilon < 1:
        out = out + (1 - epsilon) * np.trace(x) * tensor(*(eta_state(g, epsilon).mat for g in gammas))
    return out


# ---------------------------------------------------------------------------
# zero temperature with two-fold degenerate ground spaces


def _ground_isometry(h: np.ndarray) -> np.ndarray:
    _, g = ground_space(h)
    if g.shape[1] == 1:
        raise NoEPLT("nondegenerate ground state: the zero-temperature marginal is pure")
    if g.shape[1] != 2:
        raise NoEPLT(f"ground-space degeneracy {g.shape[1]} not supported (only 2)")
    return g


def _ground_reset(w: np.ndarray) -> QuantumChannel:
    """Keep the ground-space component; replace the excited part by Pi_0/2."""
    d = w.shape[0]
    pi0 = w @ w.conj().T
    full = np.linalg.eigh(np.eye(d) - pi0)[1][:, -(d - 2):] if d > 2 else np.zeros((d, 0))
    ks = [pi0]
    for k in range(full.shape[1]):
        for g in range(2):
            ks.append(np.outer(w[:, g], full[:, k].conj()) / np.sqrt(2))
    return QuantumChannel(tuple(ks), (d,))


def zero_temp_invariant_vector(ham_a, ham_b) -> np.ndarray:
    wa, wb = _ground_isometry(np.asarray(ham_a)), _ground_isometry(np.asarray(ham_b))
    return (np.kron(wa[:, 0], wb[:, 0]) + np.kron(wa[:, 1], wb[:, 1])) / np.sqrt(2)


def zero_temp_protocol(ham_a, ham_b) -> LosrMixture:
    """Measure {Pi_0, I - Pi_0} locally, reset on the excited outcome, then twirl inside the ground space."""
    wa, wb = _ground_isometry(np.asarray(ham_a)), _ground_isometry(np.asarray(ham_b))
    la, lb = _ground_reset(wa), _ground_reset(wb)
    comp_a = np.eye(wa.shape[0]) - wa @ wa.conj().T
    comp_b = np.eye(wb.shape[0]) - wb @ wb.conj().T
    us = clifford_group(2)
    terms = []
    for u in us:
        ua = wa @ u @ wa.conj().T + comp_a
        ub = wb @ u.conj() @ wb.conj().T + comp_b
        terms.append(LosrTerm(1 / len(us), (la.then(unitary_channel(ua)), lb.then(unitary_channel(ub)))))
    return LosrMixture(tuple(terms), "zero_temp_protocol")


def ground_marginal(ham) -> DensityOperator:
    w = _ground_isometry(np.asarray(ham))
    return DensityOperator(w @ w.conj().T / 2, (w.shape[0],))


def product_thermalization(gamma_a: DensityOperator, gamma_b: DensityOperator) -> LosrMixture:
    """Single-term local thermalization: both parties prepare their thermal state."""
    return product_mixture(constant_channel(gamma_a), constant_channel(gamma_b), label="product")


def product_target(gamma_a, gamma_b) -> DensityOperator:
    return product_state(gamma_a, gamma_b)
