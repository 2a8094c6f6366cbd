import numpy as np
import pytest

from eplt.channels import (
    LosrMixture,
    LosrTerm,
    NotProductTerm,
    QuantumChannel,
    build_bath_dilation,
    eplt,
    eps_star,
    identity_channel,
    product_mixture,
    product_thermalization,
    stinespring_unitary,
)
from eplt.qmat import partial_trace, random_density, tensor
from eplt.states import ThermalSpec, thermal_state


def gibbs(levels, kT):
    return thermal_state(ThermalSpec(np.diag(levels), kT))


def test_stinespring_is_unitary_and_dilates(rng):
    g = gibbs([0.0, 1.0], 0.8)
    from eplt.channels import mixing_channel

    ch = mixing_channel(g, 0.3)
    u = stinespring_unitary(ch)
    assert np.allclose(u.conj().T @ u, np.eye(u.shape[0]))
    rho = random_density(2, rng)
    anc = np.zeros((4, 4))
    anc[0, 0] = 1
    out = partial_trace(u @ np.kron(rho, anc) @ u.conj().T, (2, 4), [0])
    assert np.allclose(out, ch.act(rho))


def test_identity_mixture_dilation(rng):
    mix = product_mixture(identity_channel(2), identity_channel(2))
    dil = build_bath_dilation(mix)
    x = random_density(4, rng)
    assert np.allclose(dil.act(x), x)
    assert np.allclose(dil.act_dense(x), x)


def test_constant_dilation(rng):
    ga, gb = gibbs([0.0, 1.0], 0.6), gibbs([0.0, 1.0], 1.7)
    dil = build_bath_dilation(product_thermalization(ga, gb))
    target = tensor(ga.mat, gb.mat)
    for _ in range(20):
        x = random_density(4, rng)
        assert np.abs(dil.act(x) - target).max() < 1e-9
    assert np.abs(dil.act_dense(x) - target).max() < 1e-9


def test_eplt_dilation(rng):
    g = gibbs([0.0, 1.0], 1.0)
    mix = eplt(g, g, eps_star(g, g))
    dil = build_bath_dilation(mix)
    assert dil.terms == len(mix.terms)
    assert dil.ancilla_dims == (4, dil.terms)
    assert dil.unitaries_ok()
    assert dil.is_classically_correlated()
    for _ in range(20):
        x = random_density(4, rng)
        assert np.linalg.norm(dil.act(x) - mix.act(x), 2) < 1e-9


def test_bath_state_form():
    g = gibbs([0.0, 1.0], 1.0)
    dil = build_bath_dilation(eplt(g, g, 0.5 * eps_star(g, g)))
    bath = dil.bath_state().tocoo()
    d2, k = dil.ancilla_dims
    assert bath.shape == ((d2 * k) ** 2, (d2 * k) ** 2)
    assert np.isclose(bath.data.sum(), 1)
    # support is |00>_{X'} kron |ii>_{X''} with the mixture weights
    assert np.array_equal(bath.row, bath.col)
    assert np.array_equal(np.sort(bath.row), np.arange(k) * (k + 1))
    assert np.allclose(bath.data[np.argsort(bath.row)], dil.weights)


def test_dense_matches_blockwise_small(rng):
    g = gibbs([0.0, 1.0], 0.9)
    from eplt.channels import mixing_channel

    m = mixing_channel(g, 0.4)
    mix = LosrMixture((LosrTerm(0.3, (m, identity_channel(2))), LosrTerm(0.7, (identity_channel(2), m))))
    dil = build_bath_dilation(mix)
    x = random_density(4, rng)
    assert np.allclose(dil.act_dense(x), dil.act(x))
    assert np.allclose(dil.act(x), mix.act(x))


def test_rejects_non_product_term():
    cnot = np.eye(4)[[0, 1, 3, 2]].astype(complex)
    mix = LosrMixture((LosrTerm(1.0, (QuantumChannel([cnot], (2, 2)),)),))
    with pytest.raises(NotProductTerm):
        build_bath_dilation(mix)
