"""Dense complex linear algebra on square operators with subsystem structure.

Operators are plain ``numpy`` arrays.  Subsystem structure is carried as a
sequence of local dimensions (``dims``) whose product equals the matrix size.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np


class DimensionMismatch(ValueError):
    """Raised when an operator and its subsystem shape disagree."""


class NotHermitian(ValueError):
    pass


@dataclass(frozen=True)
class ToleranceProfile:
    """Numerical tolerances shared by the library."""

    herm: float = 1e-9
    unitary: float = 1e-9
    recon: float = 1e-8
    psd: float = 1e-10


DEFAULT_TOL = ToleranceProfile()


def check_dims(m: np.ndarray, dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(x) for x in dims)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if any(x < 1 for x in dims) or int(np.prod(dims)) != m.shape[0]:
        raise DimensionMismatch(f"dims {dims} inconsistent with matrix size {m.shape[0]}")
    return dims


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more operators, left to right."""
    if not ops:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, (np.asarray(o) for o in ops))


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def proj(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(vec, vec.conj())


def partial_trace(m: np.ndarray, dims: Sequence[int], keep: Sequence[int] | int) -> np.ndarray:
    """Trace out every party not listed in ``keep``.

    The kept parties appear in the output in their original order.
    """
    m = np.asarray(m)
    dims = check_dims(m, dims)
    n = len(dims)
    keep = sorted({keep} if isinstance(keep, (int, np.integer)) else set(keep))
    if not keep or keep[0] < 0 or keep[-1] >= n:
        raise DimensionMismatch(f"invalid kept parties {keep} for {n} parties")
    t = m.reshape(dims + dims)
    # letters: row indices a.., column indices A..; traced parties share a letter
    rows = [chr(97 + i) for i in range(n)]
    cols = [chr(65 + i) if i in keep else rows[i] for i in range(n)]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    res = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    k = int(np.prod([dims[i] for i in keep]))
    return res.reshape(k, k)


def partial_transpose(m: np.ndarray, dims: Sequence[int], party: int | Sequence[int]) -> np.ndarray:
    m = np.asarray(m)
    dims = check_dims(m, dims)
    n = len(dims)
    parties = [party] if isinstance(party, (int, np.integer)) else list(party)
    if any(p < 0 or p >= n for p in parties):
        raise DimensionMismatch(f"bad party index {party} for {n} parties")
    t = m.reshape(dims + dims)
    axes = list(range(2 * n))
    for p in parties:
        axes[p], axes[n + p] = axes[n + p], axes[p]
    return t.transpose(axes).reshape(m.shape)


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL.herm) -> bool:
    return bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= tol)


def eig_hermitian(m: np.ndarray, tol: ToleranceProfile = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not is_hermitian(m, tol.herm):
        raise NotHermitian(f"matrix deviates from Hermitian by {np.max(np.abs(m - dagger(m))):.3e}")
    w, v = np.linalg.eigh((m + dagger(m)) / 2)
    return w, v


def sup_norm(m: np.ndarray) -> float:
    """Largest singular value (operator norm)."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, ord=2))


def haar_unitary(d: int, rng: np.random.Generator | int | None = None) -> np.ndarray:
    """Haar-random d x d unitary from the QR decomposition of a Ginibre matrix.

    The phases of the diagonal of ``R`` are absorbed into ``Q`` so the result
    is exactly Haar distributed.
    """
    if d < 1:
        raise ValueError("dimension must be positive")
    rng = np.random.default_rng(rng)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    phases = diag / np.abs(diag)
    return q * phases[np.newaxis, :]


def random_density(dim: int, rng: np.random.Generator | int | None = None, rank: int | None = None) -> np.ndarray:
    """Random density matrix from the induced (Hilbert-Schmidt for full rank) measure."""
    rng = np.random.default_rng(rng)
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_pure(dim: int, rng: np.random.Generator | int | None = None) -> np.ndarray:
    return random_density(dim, rng, rank=1)


def hermitian_basis(dim: int) -> list[np.ndarray]:
    """Orthonormal (Hilbert-Schmidt) basis of dim x dim Hermitian matrices."""
    basis = []
    for j in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[j, j] = 1.0
        basis.append(e)
    for j in range(dim):
        for k in range(j + 1, dim):
            s = np.zeros((dim, dim), dtype=complex)
            s[j, k] = s[k, j] = 1 / np.sqrt(2)
            a = np.zeros((dim, dim), dtype=complex)
            a[j, k] = -1j / np.sqrt(2)
            a[k, j] = 1j / np.sqrt(2)
            basis += [s, a]
    return basis
