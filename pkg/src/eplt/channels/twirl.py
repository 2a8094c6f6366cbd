"""(U kron U*) twirling: closed form, finite designs, Monte-Carlo products, GHZ twirl."""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np

from ..qmat import DimensionMismatch, haar_unitary, proj
from ..states import DensityOperator, ghz_basis_matrix, isotropic, max_entangled_vector
from .base import LosrMixture, LosrTerm, QuantumChannel, from_superoperator, identity_channel, unitary_channel


def _bipartite_dim(dims) -> int:
    if len(dims) != 2 or dims[0] != dims[1]:
        raise DimensionMismatch(f"twirl needs a d x d bipartition, got dims {tuple(dims)}")
    return dims[0]


def twirl_operator(x: np.ndarray, d: int) -> np.ndarray:
    """Haar twirl of an arbitrary operator on C^d kron C^d.

    The output lies in span{P, I - P}, P the maximally entangled projector,
    with the P-overlap and the trace preserved.
    """
    phi = max_entangled_vector(d)
    p = proj(phi)
    c1 = phi.conj() @ x @ phi
    c2 = (np.trace(x) - c1) / (d * d - 1)
    return c1 * p + c2 * (np.eye(d * d) - p)


def twirl_exact(rho: DensityOperator) -> DensityOperator:
    d = _bipartite_dim(rho.dims)
    f = float(np.real(max_entangled_vector(d).conj() @ rho.mat @ max_entangled_vector(d)))
    p = (f - 1 / d**2) / (1 - 1 / d**2)
    p = min(max(p, -1 / (d * d - 1)), 1.0)
    return isotropic(d, p)


def twirl_superoperator(d: int) -> np.ndarray:
    n = d * d
    cols = [twirl_operator(e.reshape(n, n), d).reshape(-1) for e in np.eye(n * n)]
    return np.column_stack(cols)


def twirl_channel(d: int) -> QuantumChannel:
    return from_superoperator(twirl_superoperator(d), (d, d))


def _conj_superop(u: np.ndarray) -> np.ndarray:
    w = np.kron(u, u.conj())
    return np.kron(w, w.conj())


def twirl_sampled(n: int, d: int = 2, rng: np.random.Generator | int | None = None):
    """Product of n random half-twirls T_k = I/2 + (U_k kron U_k^*) conjugation / 2.

    Returns the composed channel and the drawn unitaries.  Composition is done
    on superoperators so the Kraus count never exceeds d^4.
    """
    if n == 0:
        return identity_channel((d, d)), []
    rng = np.random.default_rng(rng)
    us = [haar_unitary(d, rng) for _ in range(n)]
    s = sampled_twirl_superoperator(us)
    return from_superoperator(s, (d, d)), us


def sampled_twirl_superoperator(unitaries) -> np.ndarray:
    if not unitaries:
        raise ValueError("need at least one unitary; use an identity channel for n = 0")
    d = unitaries[0].shape[0]
    s = np.eye(d**4, dtype=complex)
    for u in unitaries:
        s = 0.5 * (s + _conj_superop(u) @ s)
    return s


def probe_states(d: int, count: int = 200, rng: np.random.Generator | int | None = 0) -> np.ndarray:
    """Random pure bipartite states plus the maximally entangled state, stacked."""
    rng = np.random.default_rng(rng)
    n = d * d
    g = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    states = np.einsum("ki,kj->kij", g, g.conj())
    return np.concatenate([states, proj(max_entangled_vector(d))[None]], axis=0)


def probe_distance(s: np.ndarray, probes: np.ndarray) -> float:
    """max over probes of the operator norm of (T - S)(rho): a lower bound on the channel sup norm."""
    d = int(round(probes.shape[1] ** 0.5))
    diff = s - twirl_superoperator(d)
    out = (probes.reshape(len(probes), -1) @ diff.T).reshape(probes.shape)
    return float(np.max(np.linalg.norm(out, ord=2, axis=(1, 2))))


def twirl_convergence(n: int, d: int = 2, realizations: int = 500, probes: int = 200, seed: int = 0) -> np.ndarray:
    """Probe-set estimates of ||T - T_n||^2 for independent realisations.

    Realisation k draws its unitaries from its own spawned seed, so the result
    does not depend on evaluation order.
    """
    probe = probe_states(d, probes, np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0]))
    exact = twirl_superoperator(d)
    flat = probe.reshape(len(probe), -1)
    out = np.empty(realizations)
    for k, ss in enumerate(np.random.SeedSequence([seed, n, d]).spawn(realizations)):
        rng = np.random.default_rng(ss)
        s = sampled_twirl_superoperator([haar_unitary(d, rng) for _ in range(n)])
        diff = (flat @ (s - exact).T).reshape(probe.shape)
        out[k] = np.max(np.linalg.norm(diff, ord=2, axis=(1, 2))) ** 2
    return out


# ---------------------------------------------------------------------------
# finite unitary 2-designs (Clifford groups in prime dimension)


def _is_prime(d: int) -> bool:
    return d >= 2 and all(d % k for k in range(2, int(d**0.5) + 1))


def _phase_fixed(u: np.ndarray) -> np.ndarray:
    flat = u.reshape(-1)
    k = np.flatnonzero(np.abs(flat) > 1e-8)[0]
    return u * (abs(flat[k]) / flat[k])


def _key(u: np.ndarray) -> bytes:
    return (np.round(_phase_fixed(u), 6) + 0.0).tobytes()


@lru_cache(maxsize=None)
def clifford_group(d: int) -> tuple[np.ndarray, ...]:
    """Single-qudit Clifford group modulo phases for prime d (24 elements for d=2, 216 for d=3)."""
    if not _is_prime(d):
        raise ValueError(f"no built-in Clifford design for non-prime d={d}")
    w = np.exp(2j * np.pi / d)
    idx = np.arange(d)
    fourier = w ** np.outer(idx, idx) / np.sqrt(d)
    if d == 2:
        phase = np.diag([1, 1j])
    else:
        inv2 = (d + 1) // 2
        phase = np.diag(w ** (inv2 * idx * (idx + 1) % d))
    shift = np.roll(np.eye(d), 1, axis=0)
    gens = [fourier, phase, shift]
    seen = {_key(np.eye(d, dtype=complex)): np.eye(d, dtype=complex)}
    frontier = [np.eye(d, dtype=complex)]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                v = _phase_fixed(g @ u)
                k = _key(v)
                if k not in seen:
                    seen[k] = v
                    nxt.append(v)
        frontier = nxt
    return tuple(seen.values())


def frame_potential(unitaries) -> float:
    """(1/K^2) sum |tr(U^dag V)|^4; equals 2 exactly for a unitary 2-design."""
    us = np.array(unitaries)
    tr = np.einsum("aji,bji->ab", us.conj(), us)
    return float(np.mean(np.abs(tr) ** 4))


def twirl_mixture(d: int, samples: int = 2000, rng=None) -> LosrMixture:
    """Finite LOSR mixture of U kron U* realising the twirl.

    Exact (Clifford 2-design) for prime d; otherwise a Monte-Carlo mixture of
    ``samples`` Haar unitaries whose superoperator error shrinks as 1/sqrt(samples).
    """
    if _is_prime(d):
        us = clifford_group(d)
    else:
        rng = np.random.default_rng(rng)
        us = [haar_unitary(d, rng) for _ in range(samples)]
    w = 1.0 / len(us)
    terms = tuple(LosrTerm(w, (unitary_channel(u), unitary_channel(u.conj()))) for u in us)
    return LosrMixture(terms, f"twirl(d={d})")


def twirl_is_exact(d: int) -> bool:
    return _is_prime(d)


# ---------------------------------------------------------------------------
# GHZ twirl


def _check_qubits(dims) -> int:
    if len(dims) < 2 or any(x != 2 for x in dims):
        raise DimensionMismatch(f"GHZ twirl acts on two or more qubits, got dims {tuple(dims)}")
    return len(dims)


def ghz_twirl_operator(x: np.ndarray, n: int) -> np.ndarray:
    """Project onto GHZ-diagonal form, averaging the +/- pair for every j >= 1."""
    basis = ghz_basis_matrix(n)
    diag = np.einsum("ia,ij,ja->a", basis.conj(), x, basis)
    pairs = diag.reshape(-1, 2)
    pairs[1:] = pairs[1:].mean(axis=1, keepdims=True)
    return (basis * pairs.reshape(-1)) @ basis.conj().T


def ghz_twirl(rho: DensityOperator) -> DensityOperator:
    n = _check_qubits(rho.dims)
    return DensityOperator(ghz_twirl_operator(rho.mat, n), rho.dims)


def ghz_coefficients(rho: DensityOperator) -> np.ndarray:
    """Overlaps <Psi_j^s|rho|Psi_j^s>, shape (2^(n-1), 2) with columns (+, -)."""
    n = _check_qubits(rho.dims)
    basis = ghz_basis_matrix(n)
    return np.real(np.einsum("ia,ij,ja->a", basis.conj(), rho.mat, basis)).reshape(-1, 2)


def ghz_twirl_mixture(n: int) -> LosrMixture:
    """GHZ twirl as a uniform mixture of local unitaries.

    Stabiliser part: X^{kron n} and Z_1 Z_k flips (2^n elements) remove all
    coherences outside the GHZ basis.  Phase part: diag(1, i^b_k) on qubits
    1..n-1 and diag(1, (-i)^{sum b}) on qubit n, which fixes every |Psi_0^+->
    and dephases the +/- pairs with j >= 1.
    """
    if n < 2:
        raise ValueError("need at least two qubits")
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1, -1]).astype(complex)
    eye = np.eye(2, dtype=complex)
    terms = []
    weight = 1.0 / (2**n * 2 ** (n - 1))
    for flip, zs, bs in product((0, 1), product((0, 1), repeat=n - 1), product((0, 1), repeat=n - 1)):
        local = []
        for q in range(n):
            u = x if flip else eye
            # Z_1 Z_k pattern: qubit 0 gets Z^(parity of zs), qubit k gets Z^zs[k-1]
            zpow = sum(zs) % 2 if q == 0 else zs[q - 1]
            if zpow:
                u = z @ u
            if q < n - 1:
                ph = np.diag([1, 1j ** bs[q]])
            else:
                ph = np.diag([1, (-1j) ** sum(bs)])
            local.append(unitary_channel(ph @ u))
        terms.append(LosrTerm(weight, tuple(local)))
    return LosrMixture(tuple(terms), f"ghz_twirl(n={n})")
