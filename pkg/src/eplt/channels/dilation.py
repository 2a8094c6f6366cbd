"""Dilation of a finite LOSR mixture into local unitaries and a classically correlated bath.

Party X gets a Stinespring ancilla X' (dimension d^2, starts in |0>) and a
classical register X'' (dimension D = number of terms).  The controlled
unitary V_X = sum_i U^i_{XX'} kron |i><i|_{X''} acts on X X' X'' in that
order, and the bath state is |0..0><0..0|_{X'} kron sum_i p_i |i..i><i..i|_{X''}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import null_space

from ..qmat import DEFAULT_TOL, DimensionMismatch, dagger, partial_trace
from .base import LosrMixture, QuantumChannel


class NotProductTerm(ValueError):
    pass


def stinespring_unitary(ch: QuantumChannel) -> np.ndarray:
    """Unitary U on X kron X' with E(rho) = tr_X' U (rho kron |0><0|) U^dag."""
    d = ch.dim
    ks = ch.kraus if len(ch.kraus) <= d * d else ch.minimal().kraus
    if len(ks) > d * d:
        raise DimensionMismatch("more than d^2 Kraus operators after Choi reduction")
    anc = d * d
    iso = np.zeros((d, anc, d), dtype=complex)
    for k, op in enumerate(ks):
        iso[:, k, :] = op
    iso = iso.reshape(d * anc, d)
    u = np.zeros((d * anc, d * anc), dtype=complex)
    first = [a * anc for a in range(d)]  # columns |a>|0>
    u[:, first] = iso
    rest = [c for c in range(d * anc) if c % anc != 0]
    u[:, rest] = null_space(dagger(iso))
    return u


@dataclass(frozen=True, eq=False)
class BathDilation:
    """Per-party controlled unitaries (stored as their diagonal blocks) plus bath weights."""

    blocks: tuple[tuple[np.ndarray, ...], ...]  # blocks[party][i] = U^i on X X'
    weights: np.ndarray
    local_dims: tuple[int, ...]

    @property
    def terms(self) -> int:
        return len(self.weights)

    @property
    def ancilla_dims(self) -> tuple[int, int]:
        return (self.local_dims[0] ** 2, self.terms)

    def unitary(self, party: int) -> np.ndarray:
        """Dense V_X on X X' X''; size d^3 D, only sensible for small mixtures."""
        blocks = self.blocks[party]
        big_d = len(blocks)
        n = blocks[0].shape[0]
        v = np.zeros((n, big_d, n, big_d), dtype=complex)
        for i, u in enumerate(blocks):
            v[:, i, :, i] = u
        return v.reshape(n * big_d, n * big_d)

    def register_state(self) -> sparse.csr_array:
        """sum_i p_i |i..i><i..i| on the joint classical registers (sparse: D^n grows fast)."""
        big_d = self.terms
        n = len(self.local_dims)
        idx = np.arange(big_d) * sum(big_d**k for k in range(n))
        return sparse.csr_array((self.weights, (idx, idx)), shape=(big_d**n, big_d**n))

    def bath_state(self) -> sparse.csr_array:
        """Full bath state on X'_1..X'_n X''_1..X''_n (X' registers first)."""
        anc = self.local_dims[0] ** 2
        n = len(self.local_dims)
        zero = sparse.csr_array(([1.0], ([0], [0])), shape=(anc**n, anc**n))
        return sparse.kron(zero, self.register_state(), format="csr")

    def is_classically_correlated(self, tol: float = 1e-12) -> bool:
        """Bath is |0..0><0..0| on the X' registers times a state diagonal on |i..i> only."""
        bath = self.bath_state().tocoo()
        big_d = self.terms
        n = len(self.local_dims)
        allowed = set((np.arange(big_d) * sum(big_d**k for k in range(n))).tolist())
        reg_dim = big_d**n
        mass = np.abs(bath.data) > tol
        rows, cols, vals = bath.row[mass], bath.col[mass], bath.data[mass]
        return bool(
            np.all(rows == cols)
            and np.all(rows < reg_dim)  # X' part stays in |0..0>
            and all(int(r) in allowed for r in rows)
            and np.all(vals >= -tol)
            and abs(bath.data.sum() - 1) <= 1e-12
        )

    def unitaries_ok(self, tol: float = DEFAULT_TOL.unitary) -> bool:
        return all(
            np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))) <= tol for party in self.blocks for u in party
        )

    def act(self, x: np.ndarray) -> np.ndarray:
        """Evaluate tr_bath[(V_1 kron ... kron V_n)(x kron bath)(...)^dag] branch by branch.

        The register is diagonal, so the evolution splits into branches i with
        weight p_i; each branch only needs the columns of U^i that act on the
        ancilla state |0>.
        """
        dims = self.local_dims
        n = len(dims)
        anc = dims[0] ** 2
        x = np.asarray(x, dtype=complex)
        out = np.zeros_like(x)
        joint = tuple(v for d in dims for v in (d, anc))
        for i, p in enumerate(self.weights):
            if p == 0:
                continue
            w = np.ones((1, 1), dtype=complex)
            for k in range(n):
                w = np.kron(w, self.blocks[k][i][:, ::anc])
            y = w @ x @ dagger(w)
            out += p * partial_trace(y, joint, [2 * k for k in range(n)])
        return out

    def act_dense(self, x: np.ndarray) -> np.ndarray:
        """Same map, built literally from the dense controlled unitaries and bath state."""
        dims = self.local_dims
        n = len(dims)
        anc, big_d = self.ancilla_dims
        x = np.asarray(x, dtype=complex)
        full = np.kron(x, self.bath_state().toarray())
        # current order: X_1..X_n, X'_1..X'_n, X''_1..X''_n -> X_1 X'_1 X''_1 X_2 ...
        cur = list(dims) + [anc] * n + [big_d] * n
        perm = [j for k in range(n) for j in (k, n + k, 2 * n + k)]
        t = full.reshape(cur + cur)
        m = len(cur)
        t = t.transpose(perm + [m + j for j in perm])
        size = full.shape[0]
        full = t.reshape(size, size)
        v = np.ones((1, 1), dtype=complex)
        for k in range(n):
            v = np.kron(v, self.unitary(k))
        full = v @ full @ dagger(v)
        new_dims = [cur[j] for j in perm]
        return partial_trace(full, new_dims, [3 * k for k in range(n)])


def build_bath_dilation(mix: LosrMixture) -> BathDilation:
    """Controlled Stinespring unitaries and classically correlated bath for a product-channel mixture."""
    dims = mix.local_dims
    for t in mix.terms:
        if any(len(c.dims) > 1 for c in t.channels):
            raise NotProductTerm("a term acts jointly on several parties")
    if len(set(dims)) != 1:
        raise DimensionMismatch("dilation assumes equal local dimensions")
    for t in mix.terms:
        if len(t.channels) != len(dims):
            raise NotProductTerm("every term must be a product of one channel per party")
    blocks = tuple(tuple(stinespring_unitary(t.channels[k]) for t in mix.terms) for k in range(len(dims)))
    return BathDilation(blocks, mix.weights.copy(), dims)
