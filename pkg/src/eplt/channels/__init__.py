from .base import (
    LosrMixture,
    LosrTerm,
    NotTracePreserving,
    QuantumChannel,
    apply,
    apply_local,
    channel_from_dict,
    channel_from_json,
    channel_to_dict,
    combine,
    compose_local,
    constant_channel,
    from_superoperator,
    identity_channel,
    mixing_channel,
    partial_thermalization,
    product_mixture,
    superoperator_action,
    unitary_channel,
)
from .dilation import BathDilation, NotProductTerm, build_bath_dilation, stinespring_unitary
from .eplt import (
    EpsilonOutOfRange,
    NoEPLT,
    eplt,
    eplt_alternative,
    eplt_alternative_operator,
    eplt_multipartite,
    eplt_multipartite_operator,
    eplt_operator,
    eplt_output,
    eps_star,
    ground_marginal,
    multipartite_eps_max,
    product_thermalization,
    zero_temp_invariant_vector,
    zero_temp_protocol,
)
from .twirl import (
    clifford_group,
    frame_potential,
    ghz_coefficients,
    ghz_twirl,
    ghz_twirl_mixture,
    ghz_twirl_operator,
    probe_distance,
    probe_states,
    sampled_twirl_superoperator,
    twirl_channel,
    twirl_convergence,
    twirl_exact,
    twirl_is_exact,
    twirl_mixture,
    twirl_operator,
    twirl_sampled,
    twirl_superoperator,
)
