"""Kraus channels, superoperators and LOSR mixtures.

Superoperators use row-major vectorisation: vec(A X B) = (A kron B^T) vec(X),
so a Kraus family {K} has superoperator sum_k K kron conj(K).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..qmat import DEFAULT_TOL, DimensionMismatch, check_dims, dagger, ket, tensor
from ..states import DensityOperator, as_matrix


class NotTracePreserving(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CPTP map given by Kraus operators, on a system with local dims ``dims``."""

    kraus: tuple[np.ndarray, ...]
    dims: tuple[int, ...]
    tol: float = field(default=DEFAULT_TOL.herm, repr=False)

    def __post_init__(self):
        ks = tuple(np.array(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ValueError("a channel needs at least one Kraus operator")
        dims = check_dims(ks[0], self.dims if self.dims else (ks[0].shape[0],))
        for k in ks:
            if k.shape != ks[0].shape:
                raise DimensionMismatch("Kraus operators must share one square shape")
            k.setflags(write=False)
        gram = sum(dagger(k) @ k for k in ks)
        dev = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
        if dev > self.tol:
            raise NotTracePreserving(f"sum K^dag K deviates from identity by {dev:.3e}")
        object.__setattr__(self, "kraus", ks)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    def act(self, x: np.ndarray) -> np.ndarray:
        """Linear action on an arbitrary operator (not only states)."""
        x = np.asarray(x, dtype=complex)
        if x.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"operator of shape {x.shape} on a {self.dim}-dim channel")
        return sum(k @ x @ dagger(k) for k in self.kraus)

    def __call__(self, rho: DensityOperator) -> DensityOperator:
        return apply(self, rho)

    def superoperator(self) -> np.ndarray:
        return sum(np.kron(k, k.conj()) for k in self.kraus)

    def choi(self) -> np.ndarray:
        return choi_from_superoperator(self.superoperator())

    def minimal(self) -> "QuantumChannel":
        """Equivalent channel with at most dim^2 Kraus operators (via the Choi matrix)."""
        return from_superoperator(self.superoperator(), self.dims)

    def then(self, other: "QuantumChannel") -> "QuantumChannel":
        """``other`` applied after ``self``."""
        if other.dim != self.dim:
            raise DimensionMismatch("cannot compose channels of different dimension")
        ks = [b @ a for b in other.kraus for a in self.kraus]
        if len(ks) > self.dim**2:
            return from_superoperator(other.superoperator() @ self.superoperator(), self.dims)
        return QuantumChannel(tuple(ks), self.dims)

    def to_json(self) -> str:
        return json.dumps(channel_to_dict(self))


def apply(ch: QuantumChannel, rho: DensityOperator) -> DensityOperator:
    if rho.dim != ch.dim:
        raise DimensionMismatch(f"{rho.dim}-dim state into a {ch.dim}-dim channel")
    return DensityOperator(ch.act(rho.mat), rho.dims)


def choi_from_superoperator(s: np.ndarray) -> np.ndarray:
    """J = sum_ij E(|i><j|) kron |i><j| reordered as (out, in) on both indices."""
    d = int(round(np.sqrt(s.shape[0])))
    # s[(a,b),(i,j)] = <a|E(|i><j|)|b>; J[(a,i),(b,j)]
    return s.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)


def superoperator_from_choi(j: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(j.shape[0])))
    return j.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)


def kraus_from_choi(j: np.ndarray, cutoff: float = 1e-12) -> list[np.ndarray]:
    d = int(round(np.sqrt(j.shape[0])))
    w, v = np.linalg.eigh((j + dagger(j)) / 2)
    ks = []
    for lam, vec in zip(w[::-1], v[:, ::-1].T):
        if lam <= cutoff:
            break
        ks.append(np.sqrt(lam) * vec.reshape(d, d))
    return ks


def from_superoperator(s: np.ndarray, dims: Sequence[int]) -> QuantumChannel:
    return QuantumChannel(tuple(kraus_from_choi(choi_from_superoperator(s))), tuple(dims))


def superoperator_action(s: np.ndarray, x: np.ndarray) -> np.ndarray:
    d = x.shape[0]
    return (s @ x.reshape(-1)).reshape(d, d)


def identity_channel(dims: Sequence[int] | int) -> QuantumChannel:
    dims = (dims,) if isinstance(dims, int) else tuple(dims)
    return QuantumChannel((np.eye(int(np.prod(dims))),), dims)


def unitary_channel(u: np.ndarray, dims: Sequence[int] | None = None) -> QuantumChannel:
    u = np.asarray(u, dtype=complex)
    return QuantumChannel((u,), tuple(dims) if dims else (u.shape[0],))


def constant_channel(sigma: DensityOperator | np.ndarray, dims: Sequence[int] | None = None) -> QuantumChannel:
    """Discard the input and prepare ``sigma``."""
    s = as_matrix(sigma)
    d = s.shape[0]
    dims = tuple(dims) if dims else getattr(sigma, "dims", (d,))
    w, v = np.linalg.eigh(s)
    ks = [np.sqrt(lam) * np.outer(v[:, a], ket(k, d)) for a, lam in enumerate(w) if lam > 1e-15 for k in range(d)]
    return QuantumChannel(tuple(ks), dims)


def mixing_channel(sigma: DensityOperator, p: float) -> QuantumChannel:
    """rho -> p sigma + (1 - p) rho."""
    if not 0 <= p <= 1:
        raise ValueError(f"mixing weight must lie in [0, 1], got {p}")
    d = sigma.dim
    ks = [] if p == 1 else [np.sqrt(1 - p) * np.eye(d)]
    if p > 0:
        ks += [np.sqrt(p) * k for k in constant_channel(sigma).kraus]
    return QuantumChannel(tuple(ks), sigma.dims)


def partial_thermalization(gamma: DensityOperator, t: float, tau: float) -> QuantumChannel:
    """Exponential relaxation towards gamma: mixing weight 1 - exp(-t/tau)."""
    if t < 0 or tau <= 0:
        raise ValueError("need t >= 0 and tau > 0")
    return mixing_channel(gamma, -np.expm1(-t / tau))


def apply_local(x: np.ndarray, dims: Sequence[int], party: int, kraus: Iterable[np.ndarray]) -> np.ndarray:
    """Apply a Kraus family acting on one party of a multipartite operator."""
    dims = tuple(dims)
    n = len(dims)
    dp = dims[party]
    t = np.asarray(x).reshape(dims + dims)
    out = np.zeros_like(t, dtype=complex)
    for k in kraus:
        y = np.tensordot(k, t, axes=([1], [party]))          # new row axis first
        y = np.moveaxis(y, 0, party)
        y = np.tensordot(y, k.conj(), axes=([n + party], [1]))  # new column axis last
        out += np.moveaxis(y, -1, n + party)
    if out.shape[party] != dp:
        raise DimensionMismatch("local Kraus operator does not match party dimension")
    return out.reshape(x.shape)


def product_superoperator(channels: Sequence[QuantumChannel]) -> np.ndarray:
    """Superoperator of the tensor product of local channels on the joint space."""
    dims = [c.dim for c in channels]
    total = int(np.prod(dims))
    basis = np.eye(total * total, dtype=complex)
    cols = []
    for col in basis.T:
        x = col.reshape(total, total)
        for party, c in enumerate(channels):
            x = apply_local(x, dims, party, c.kraus)
        cols.append(x.reshape(-1))
    return np.column_stack(cols)


@dataclass(frozen=True, eq=False)
class LosrTerm:
    weight: float
    channels: tuple[QuantumChannel, ...]


@dataclass(frozen=True, eq=False)
class LosrMixture:
    """Finite shared-randomness mixture sum_i p_i (E_1^i kron ... kron E_N^i)."""

    terms: tuple[LosrTerm, ...]
    label: str = ""

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("empty mixture")
        w = np.array([t.weight for t in terms])
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError(f"weights must be non-negative and sum to 1 (sum={w.sum()!r})")
        local = tuple(c.dim for c in terms[0].channels)
        for t in terms:
            if tuple(c.dim for c in t.channels) != local:
                raise DimensionMismatch("all terms must act on the same local spaces")
        object.__setattr__(self, "terms", terms)

    @property
    def local_dims(self) -> tuple[int, ...]:
        return tuple(c.dim for c in self.terms[0].channels)

    @property
    def dim(self) -> int:
        return int(np.prod(self.local_dims))

    @property
    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.terms])

    def act(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"operator of shape {x.shape} into a {self.dim}-dim mixture")
        out = np.zeros_like(x)
        for t in self.terms:
            if t.weight == 0:
                continue
            y = x
            for party, c in enumerate(t.channels):
                y = apply_local(y, self.local_dims, party, c.kraus)
            out += t.weight * y
        return out

    def __call__(self, rho: DensityOperator) -> DensityOperator:
        return DensityOperator(self.act(rho.mat), rho.dims)

    def superoperator(self) -> np.ndarray:
        return sum(t.weight * product_superoperator(t.channels) for t in self.terms if t.weight > 0)

    def as_channel(self) -> QuantumChannel:
        return from_superoperator(self.superoperator(), self.local_dims)


def product_mixture(*channels: QuantumChannel, label: str = "") -> LosrMixture:
    return LosrMixture((LosrTerm(1.0, tuple(channels)),), label)


def combine(parts: Sequence[tuple[float, LosrMixture]], label: str = "") -> LosrMixture:
    """Convex combination of mixtures, flattened into one mixture."""
    terms = [LosrTerm(w * t.weight, t.channels) for w, mix in parts if w > 0 for t in mix.terms]
    return LosrMixture(tuple(terms), label)


def compose_local(first: LosrMixture, second: LosrMixture, label: str = "") -> LosrMixture:
    """``second`` after ``first``; terms multiply out pairwise."""
    terms = []
    for a in first.terms:
        for b in second.terms:
            chans = tuple(ca.then(cb) for ca, cb in zip(a.channels, b.channels))
            terms.append(LosrTerm(a.weight * b.weight, chans))
    return LosrMixture(tuple(terms), label)


def channel_to_dict(ch: QuantumChannel) -> dict:
    return {
        "shape": list(ch.dims),
        "kraus": [[[[float(z.real), float(z.imag)] for z in row] for row in k] for k in ch.kraus],
    }


def channel_from_dict(doc: dict) -> QuantumChannel:
    ks = [np.array([[complex(re, im) for re, im in row] for row in k]) for k in doc["kraus"]]
    return QuantumChannel(tuple(ks), tuple(doc["shape"]))


def channel_from_json(text: str) -> QuantumChannel:
    return channel_from_dict(json.loads(text))
