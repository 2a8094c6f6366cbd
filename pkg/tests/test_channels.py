import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eplt.channels import (
    EpsilonOutOfRange,
    LosrMixture,
    LosrTerm,
    NoEPLT,
    NotTracePreserving,
    QuantumChannel,
    apply,
    constant_channel,
    eplt,
    eplt_alternative,
    eplt_alternative_operator,
    eplt_multipartite,
    eplt_operator,
    eps_star,
    ghz_twirl,
    ghz_twirl_mixture,
    identity_channel,
    mixing_channel,
    multipartite_eps_max,
    partial_thermalization,
    product_mixture,
    product_thermalization,
    twirl_exact,
    twirl_operator,
    zero_temp_invariant_vector,
    zero_temp_protocol,
)
from eplt.entanglement import singlet_fraction
from eplt.qmat import haar_unitary, partial_trace, random_density, tensor
from eplt.states import (
    DensityOperator,
    ThermalSpec,
    ghz_isotropic,
    ghz_vector,
    isotropic,
    max_entangled,
    thermal_state,
)


def state(m, dims):
    return DensityOperator(m, dims)


def gibbs(levels, kT):
    return thermal_state(ThermalSpec(np.diag(levels), kT))


def random_kraus_channel(rng, d, k=2):
    # random isometry sliced into k Kraus operators
    v = haar_unitary(d * k, rng)[:, :d]
    return QuantumChannel([v[i * d:(i + 1) * d] for i in range(k)], (d,))


def test_channel_requires_trace_preservation():
    with pytest.raises(NotTracePreserving):
        QuantumChannel([np.diag([1.0, 0.5])], (2,))


def test_apply_identity_and_constant(rng):
    rho = state(random_density(3, rng), (3,))
    assert np.allclose(apply(identity_channel(3), rho).mat, rho.mat)
    sigma = state(random_density(3, rng), (3,))
    assert np.allclose(apply(constant_channel(sigma), rho).mat, sigma.mat)


def test_apply_matches_superoperator(rng):
    ch = random_kraus_channel(rng, 3)
    rho = random_density(3, rng)
    # row-major vectorisation: vec(K rho K^dag) = (K kron conj K) vec(rho)
    s = sum(np.kron(k, k.conj()) for k in ch.kraus)
    assert np.allclose(ch.act(rho), (s @ rho.reshape(-1)).reshape(3, 3))
    assert np.allclose(ch.superoperator(), s)


def test_choi_roundtrip(rng):
    ch = random_kraus_channel(rng, 2, 3)
    again = ch.minimal()
    assert len(again.kraus) <= 4
    rho = random_density(2, rng)
    assert np.allclose(again.act(rho), ch.act(rho))


def test_apply_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        apply(identity_channel(2), state(random_density(3, rng), (3,)))


def test_mixing_channel():
    half = state(np.eye(2) / 2, (2,))
    zero = state(np.diag([1.0, 0.0]).astype(complex), (2,))
    assert np.allclose(mixing_channel(half, 0).act(zero.mat), zero.mat)
    assert np.allclose(mixing_channel(half, 1).act(zero.mat), half.mat)
    assert np.allclose(mixing_channel(half, 0.4)(zero).mat, np.diag([0.8, 0.2]))


def test_partial_thermalization():
    g = gibbs([0.0, 1.0], 1.0)
    rho = np.diag([0.0, 1.0]).astype(complex)
    assert np.allclose(partial_thermalization(g, 0, 1).act(rho), rho)
    assert np.allclose(partial_thermalization(g, 200, 1).act(rho), g.mat)
    half = partial_thermalization(g, math.log(2), 1).act(rho)
    assert np.allclose(half, 0.5 * rho + 0.5 * g.mat)


def test_twirl_exact_examples():
    for d in (2, 3):
        phi = max_entangled(d)
        assert np.allclose(twirl_exact(phi).mat, phi.mat)
        mixed = state(np.eye(d * d) / d**2, (d, d))
        assert np.allclose(twirl_exact(mixed).mat, mixed.mat)
    zz = np.zeros((4, 4), complex)
    zz[0, 0] = 1
    assert np.allclose(twirl_exact(state(zz, (2, 2))).mat, isotropic(2, 1 / 3).mat)


def test_twirl_exact_matches_haar_average():
    rng = np.random.default_rng(5)
    x = random_density(4, rng)
    acc = np.zeros((4, 4), complex)
    n = 20_000
    for _ in range(n):
        u = haar_unitary(2, rng)
        w = np.kron(u, u.conj())
        acc += w @ x @ w.conj().T
    assert np.abs(acc / n - twirl_operator(x, 2)).max() < 0.02


@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_twirl_idempotent_and_fidelity_preserving(seed, d):
    rho = state(random_density(d * d, np.random.default_rng(seed)), (d, d))
    once = twirl_exact(rho)
    assert np.abs(twirl_exact(once).mat - once.mat).max() < 1e-10
    assert singlet_fraction(once) == pytest.approx(singlet_fraction(rho), abs=1e-12)


def test_twirl_rejects_non_square_bipartition():
    with pytest.raises(ValueError):
        twirl_exact(state(np.eye(6) / 6, (2, 3)))


# --- eplt ------------------------------------------------------------------


def test_eplt_zero_eps_is_constant(rng):
    g = gibbs([0.0, 1.0], 0.7)
    mix = eplt(g, g, 0.0)
    rho = random_density(4, rng)
    assert np.allclose(mix.act(rho), tensor(g.mat, g.mat))


def test_eplt_infinite_temperature_is_twirl(rng):
    for d in (2, 3):
        g = state(np.eye(d) / d, (d,))
        assert eps_star(g, g) == pytest.approx(1)
        mix = eplt(g, g, 1.0)
        rho = random_density(d * d, rng)
        assert np.allclose(mix.act(rho), twirl_operator(rho, d), atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_eplt_marginals_on_random_inputs(d):
    rng = np.random.default_rng(d)
    g = gibbs(np.linspace(0, 1.3, d), 0.8)
    e = eps_star(g, g)
    mix = eplt(g, g, e)
    for _ in range(50):
        out = mix.act(random_density(d * d, rng))
        assert np.abs(partial_trace(out, (d, d), [0]) - g.mat).max() < 1e-12
        assert np.abs(partial_trace(out, (d, d), [1]) - g.mat).max() < 1e-12


def test_eplt_mixture_matches_closed_form(rng):
    ga, gb = gibbs([0.0, 0.4, 1.1], 0.9), gibbs([0.0, 0.2, 0.3], 1.3)
    e = 0.7 * eps_star(ga, gb)
    mix = eplt(ga, gb, e)
    x = random_density(9, rng)
    assert np.allclose(mix.act(x), eplt_operator(ga, gb, e, x), atol=1e-12)


def test_eplt_range_error():
    g = gibbs([0.0, 1.0], 1.0)
    with pytest.raises(EpsilonOutOfRange) as err:
        eplt(g, g, eps_star(g, g) + 1e-6)
    assert err.value.eps_max == pytest.approx(eps_star(g, g))


def test_alternative_limits(rng):
    half = state(np.eye(2) / 2, (2,))
    x = random_density(4, rng)
    assert np.allclose(eplt_alternative(half, half, 1, 1).act(x), twirl_operator(x, 2), atol=1e-12)
    g = gibbs([0.0, 1.0], 0.6)
    assert np.allclose(eplt_alternative(g, g, 0, 0).act(x), tensor(g.mat, g.mat))


def test_alternative_fidelity_bound():
    rng = np.random.default_rng(9)
    ga, gb = gibbs([0.0, 1.0], 0.8), gibbs([0.0, 1.0], 1.5)
    ea, eb = eps_star(ga, ga), eps_star(gb, gb)
    mix = eplt_alternative(ga, gb, ea, eb)
    for _ in range(30):
        rho = state(random_density(4, rng), (2, 2))
        out = mix(rho)
        assert np.allclose(out.mat, eplt_alternative_operator(ga, gb, ea, eb, rho.mat), atol=1e-12)
        # the singlet is one feasible maximally entangled state
        assert singlet_fraction(out) >= ea * eb * singlet_fraction(rho) - 1e-12


# --- GHZ --------------------------------------------------------------------


def test_ghz_twirl_fixed_points():
    for n in (2, 3, 4):
        iso = ghz_isotropic(n, 0.37)
        assert np.allclose(ghz_twirl(iso).mat, iso.mat)
    rng = np.random.default_rng(4)
    once = ghz_twirl(state(random_density(8, rng), (2, 2, 2)))
    assert np.allclose(ghz_twirl(once).mat, once.mat)


@given(st.integers(0, 10_000), st.sampled_from([2, 3, 4]))
def test_ghz_twirl_structure(seed, n):
    rho = state(random_density(2**n, np.random.default_rng(seed)), (2,) * n)
    out = ghz_twirl(rho).mat
    for k in range(n):
        assert np.abs(partial_trace(out, (2,) * n, [k]) - np.eye(2) / 2).max() < 1e-10
    from eplt.states import ghz_basis_matrix

    b = ghz_basis_matrix(n)
    rot = b.conj().T @ out @ b
    assert np.abs(rot - np.diag(np.diag(rot))).max() < 1e-10
    # the j = 0 pair keeps its weights
    for sign in (1, -1):
        v = ghz_vector(n, 0, sign)
        assert np.vdot(v, out @ v).real == pytest.approx(np.vdot(v, rho.mat @ v).real, abs=1e-12)


def test_ghz_mixture_matches_closed_form(rng):
    mix = ghz_twirl_mixture(3)
    x = random_density(8, rng)
    assert np.allclose(mix.act(x), ghz_twirl(state(x, (2, 2, 2))).mat, atol=1e-12)


def test_multipartite_examples():
    halves = [state(np.eye(2) / 2, (2,))] * 3
    assert multipartite_eps_max(halves) == pytest.approx(1)
    rng = np.random.default_rng(11)
    x = random_density(8, rng)
    assert np.allclose(eplt_multipartite(halves, 1.0).act(x), ghz_twirl(state(x, (2, 2, 2))).mat, atol=1e-12)
    gammas = [gibbs([0.0, 1.0], kT) for kT in (0.6, 1.0, 2.0)]
    e = multipartite_eps_max(gammas)
    mix = eplt_multipartite(gammas, e)
    ghz = ghz_vector(3, 0, 1)
    for _ in range(20):
        rho = random_density(8, rng)
        out = mix.act(rho)
        assert np.vdot(ghz, out @ ghz).real >= e * np.vdot(ghz, rho @ ghz).real - 1e-12
    with pytest.raises(EpsilonOutOfRange):
        eplt_multipartite(gammas, e + 1e-6)


# --- zero temperature -------------------------------------------------------

H_DEG = np.diag([0.0, 0.0, 1.0])


def test_zero_temp_invariant_state():
    mix = zero_temp_protocol(H_DEG, H_DEG)
    v = zero_temp_invariant_vector(H_DEG, H_DEG)
    rho = np.outer(v, v.conj())
    assert np.abs(mix.act(rho) - rho).max() < 1e-12


def test_zero_temp_marginals(rng):
    mix = zero_temp_protocol(H_DEG, H_DEG)
    pi0 = np.diag([0.5, 0.5, 0])
    for _ in range(10):
        out = mix.act(random_density(9, rng))
        assert np.abs(partial_trace(out, (3, 3), [0]) - pi0).max() < 1e-12
        assert np.abs(partial_trace(out, (3, 3), [1]) - pi0).max() < 1e-12
    excited = np.zeros((9, 9))
    excited[8, 8] = 1
    assert np.allclose(mix.act(excited), np.kron(pi0, pi0))


def test_zero_temp_rejects_nondegenerate():
    with pytest.raises(NoEPLT):
        zero_temp_protocol(np.diag([0.0, 1.0]), H_DEG)
    with pytest.raises(NoEPLT):
        zero_temp_protocol(np.diag([0.0, 0.0, 0.0, 1.0]), H_DEG)


# --- LOSR mixtures -----------------------------------------------------------


def test_losr_weight_validation():
    i2 = identity_channel(2)
    with pytest.raises(ValueError):
        LosrMixture((LosrTerm(0.5, (i2, i2)), LosrTerm(0.4, (i2, i2))))
    with pytest.raises(ValueError):
        LosrMixture((LosrTerm(1.2, (i2, i2)), LosrTerm(-0.2, (i2, i2))))


@given(st.integers(0, 10_000))
def test_channels_preserve_states(seed):
    rng = np.random.default_rng(seed)
    g = gibbs([0.0, 0.5, 1.0], 1.0)
    mix = eplt(g, g, 0.5 * eps_star(g, g))
    out = mix(state(random_density(9, rng), (3, 3)))
    assert out.eigenvalues()[0] > -1e-12


def test_product_thermalization_erases_correlations(rng):
    ga, gb = gibbs([0.0, 1.0], 0.5), gibbs([0.0, 0.3, 0.9], 2.0)
    mix = product_thermalization(ga, gb)
    assert np.allclose(mix.act(random_density(6, rng)), tensor(ga.mat, gb.mat))


def test_json_roundtrip(rng):
    from eplt.channels import channel_from_json

    ch = random_kraus_channel(rng, 2, 3)
    again = channel_from_json(ch.to_json())
    assert again.dims == ch.dims
    assert all(np.allclose(a, b) for a, b in zip(again.kraus, ch.kraus))
    doc = __import__("json").loads(ch.to_json())
    assert doc["shape"] == [2] and len(doc["kraus"][0][0][0]) == 2
