"""Thermalization times, quench energies and finite-twirl speed-up bounds.

Divergent times and energies are returned as ``INFINITY`` explicitly, never
produced by overflow.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass


from .qmat import sup_norm
from .states import as_matrix

log = logging.getLogger(__name__)

INFINITY = math.inf
SPEEDUP_FACTOR = 8 / math.log(2)


@dataclass(frozen=True)
class SpeedupScenario:
    tau_gamma: float
    tau_eta: float
    t_unitary: float
    delta: float
    p_min: float
    d: int

    def __post_init__(self):
        if min(self.tau_gamma, self.tau_eta, self.t_unitary) <= 0:
            raise ValueError("all times must be positive")
        if self.d < 2:
            raise ValueError("local dimension must be at least 2")
        if not 0 < self.p_min <= 1 / self.d + 1e-15:
            raise ValueError(f"p_min must lie in (0, 1/d], got {self.p_min}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")

    @classmethod
    def from_dict(cls, doc: dict) -> "SpeedupScenario":
        return cls(**{k: doc[k] for k in ("tau_gamma", "tau_eta", "t_unitary", "delta", "p_min", "d")})

    @classmethod
    def from_json(cls, text: str) -> "SpeedupScenario":
        return cls.from_dict(json.loads(text))

    def with_delta(self, delta: float) -> "SpeedupScenario":
        return SpeedupScenario(self.tau_gamma, self.tau_eta, self.t_unitary, delta, self.p_min, self.d)

    @property
    def quench_time(self) -> float:
        """Partial-thermalization time realising the mixing weight 1 - d P_min."""
        return self.tau_eta * math.log(1 / (self.d * self.p_min))

    @property
    def precision_scale(self) -> float:
        return self.d**2 * self.p_min * math.sqrt(2)


def delta_thermalizes(output, gamma, delta: float) -> bool:
    return sup_norm(as_matrix(output) - as_matrix(gamma)) <= delta


def t_partial_thermalization(rho, gamma, delta: float, tau: float) -> float:
    """tau ln(||rho - gamma|| / delta), zero once already delta-close."""
    dist = sup_norm(as_matrix(rho) - as_matrix(gamma))
    if dist <= delta:
        return 0.0
    if delta <= 0:
        return INFINITY
    return tau * math.log(dist / delta)


def t_eplt_bound(scenario: SpeedupScenario, t_twirl: float = 0.0) -> float:
    """Upper bound on the ideal-twirl time; independent of the input and of delta."""
    return t_twirl + scenario.quench_time


def quench_energy(energy: float, kT: float, epsilon: float) -> float:
    """Gap E' of H' = E'|1><1| whose thermal state at kT is eta^eps of H = E|1><1|."""
    if epsilon == 0:
        return float(energy)
    z = 1 + math.exp(-energy / kT)
    num = 2 - epsilon * z * math.exp(energy / kT)
    if num <= 1e-12:  # rounding at eps* leaves a tiny positive remainder
        log.info("epsilon=%g at or beyond the pole 2 exp(-E/kT)/Z: infinite gap", epsilon)
        return INFINITY
    return energy - kT * math.log(num / (2 - epsilon * z))


def smallest_integer_above(x: float, rel: float = 1e-12) -> int:
    """Smallest integer strictly larger than x (so integers map to x + 1)."""
    r = round(x)
    if abs(x - r) <= rel * max(1.0, abs(x)):
        return int(r) + 1
    return math.ceil(x)


def n_delta(scenario: SpeedupScenario) -> int:
    """Number of random half-twirls needed for delta-thermalization of every input."""
    x = 8 * math.log2(scenario.precision_scale / scenario.delta)
    return max(smallest_integer_above(x), 0)


def speedup_condition(scenario: SpeedupScenario) -> bool:
    return scenario.tau_gamma > scenario.t_unitary * SPEEDUP_FACTOR


def _threshold_parts(scenario: SpeedupScenario) -> tuple[float, float]:
    r = scenario.t_unitary / scenario.tau_gamma
    f = (
        (scenario.d * scenario.p_min) ** (-scenario.tau_eta / scenario.tau_gamma)
        * math.exp(r)
        * scenario.precision_scale ** (r * SPEEDUP_FACTOR)
    )
    return f, 1 - r * SPEEDUP_FACTOR


def speedup_state_threshold(scenario: SpeedupScenario) -> float:
    """Distance ||rho - gamma|| above which the finite-twirl protocol is faster at this delta."""
    f, expo = _threshold_parts(scenario)
    return f * scenario.delta**expo


def success_probability(scenario: SpeedupScenario) -> float:
    """Lower bound 1 - (delta / (d^2 P_min sqrt 2))^4 on a good twirl realisation."""
    return 1 - (scenario.delta / scenario.precision_scale) ** 4


def implementation_success_probability(n: int) -> float:
    """1 - 2^(-n/2): probability that n half-twirls reach the precision used for N_delta."""
    return 1 - 2.0 ** (-n / 2)


def chebyshev_tail(n: int, slack: float) -> float:
    """Bound 1/(slack^2 2^n) on P(||T - T_n||^2 - 2^-n > slack), capped at 1."""
    if n < 1 or slack <= 0:
        raise ValueError("need n >= 1 and slack > 0")
    return min(1.0, math.ldexp(1.0 / slack**2, -n))


def t_finite_eplt(scenario: SpeedupScenario) -> float:
    return scenario.quench_time + n_delta(scenario) * scenario.t_unitary


def _bisect_log(fn, lo: float, hi: float, rel: float = 1e-6) -> float:
    """Root of fn on [lo, hi] in log space; fn(lo) > 0 >= fn(hi)."""
    a, b = math.log(lo), math.log(hi)
    while b - a > rel:
        m = (a + b) / 2
        if fn(math.exp(m)) > 0:
            a = m
        else:
            b = m
    return math.exp((a + b) / 2)


def crossover_delta(scenario: SpeedupScenario, distance: float) -> float | None:
    """delta' below which the sufficient speed-up condition holds, by bisection.

    Uses the smooth bound N_delta <= 8 log2(scale/delta) + 1, so the margin is
    monotone in delta.  None when the speed-up condition fails or rho == gamma.
    """
    if distance <= 0 or not speedup_condition(scenario):
        return None

    def margin(delta: float) -> float:
        n_smooth = 8 * math.log2(scenario.precision_scale / delta) + 1
        return scenario.tau_gamma * math.log(distance / delta) - scenario.quench_time - n_smooth * scenario.t_unitary

    hi = min(distance, 1 - 1e-12)
    if margin(hi) > 0:
        return hi
    lo = hi
    while margin(lo) <= 0:
        lo /= 10
    return _bisect_log(margin, lo, hi)


def crossover_delta_closed_form(scenario: SpeedupScenario, distance: float) -> float:
    f, expo = _threshold_parts(scenario)
    return (distance / f) ** (1 / expo)


@dataclass
class RaceReport:
    delta: float
    distance: float
    t_pt: float
    t_eplt_ideal: float
    n_delta: int
    t_eplt_finite: float
    winner: str
    speedup_condition: bool
    delta_crossover: float | None
    state_threshold: float
    success_probability: float
    twirl_time_caveat: str

    def to_dict(self) -> dict:
        return asdict(self)


def race_report(scenario: SpeedupScenario, rho, gamma, t_twirl: float = 0.0) -> RaceReport:
    """Compare plain partial thermalization with the finite-twirl protocol at scenario.delta."""
    dist = sup_norm(as_matrix(rho) - as_matrix(gamma))
    t_pt = t_partial_thermalization(rho, gamma, scenario.delta, scenario.tau_gamma)
    t_fin = t_finite_eplt(scenario)
    winner = "eplt" if t_fin < t_pt else "partial_thermalization"
    caveat = "ideal twirl time set to 0; an exact twirl may take unbounded time" if t_twirl == 0 else ""
    return RaceReport(
        delta=scenario.delta,
        distance=dist,
        t_pt=t_pt,
        t_eplt_ideal=t_eplt_bound(scenario, t_twirl),
        n_delta=n_delta(scenario),
        t_eplt_finite=t_fin,
        winner=winner,
        speedup_condition=speedup_condition(scenario),
        delta_crossover=crossover_delta(scenario, dist),
        state_threshold=speedup_state_threshold(scenario),
        success_probability=success_probability(scenario),
        twirl_time_caveat=caveat,
    )


def sufficient_speedup(scenario: SpeedupScenario, distance: float) -> bool:
    return distance > speedup_state_threshold(scenario)
