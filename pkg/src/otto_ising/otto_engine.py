"""The quantum Otto cycle on the transverse-field Ising chain.

One cycle consists of four strokes starting from state A at the low field:

    A --(ramp h_i -> h_f)--> B --(hot bath at h_f)--> C
      --(ramp h_f -> h_i)--> D --(cold bath at h_i)--> next A

The hot bath acts at the high field and the cold bath at the low field, so in
the decoupled (J -> 0) limit each spin runs a textbook two-level Otto cycle
that extracts work whenever T_hot / T_cold > h_f / h_i.  Sign conventions:
work is positive when extracted, heats are positive when absorbed by the
chain.  With complete thermalization the cycle is immediately periodic and
history-free; with finite bath contact the state converges geometrically to a
limit cycle.

Per cycle n the bookkeeping is

    w_n    = (e_a - e_b) + (e_c - e_d)
    q_h,n  = e_c - e_b                      (contact at h_f)
    q_c,n  = e_a(cycle n+1) - e_d           (contact at h_i)

so w - q_c - q_h telescopes to the energy change of the working substance
between successive A states and vanishes for a periodic cycle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

from .chain_model import ChainSpec, CorrelationMatrix, energy_expectation
from .dynamics import Propagator, QuenchProtocol, evolve_correlations, quench_propagator
from .thermal_bath import (
    BathSpec,
    RelaxationSchedule,
    relax_correlations,
    thermal_correlations,
)


class Regime(enum.Enum):
    """Operating mode of the cycle, fixed by the signs of (w, q_cold, q_hot)."""

    HEAT_ENGINE = "HeatEngine"
    REFRIGERATOR = "Refrigerator"
    ACCELERATOR = "Accelerator"
    HEATER = "Heater"


# sign patterns (w, q_cold, q_hot); True = positive, False = negative or zero
_REGIME_SIGNS = {
    (True, False, True): Regime.HEAT_ENGINE,
    (False, True, False): Regime.REFRIGERATOR,
    (False, False, True): Regime.ACCELERATOR,
    (False, False, False): Regime.HEATER,
}


class ForbiddenRegime(ValueError):
    """Sign pattern that no thermodynamically consistent cycle can produce."""

    def __init__(self, work: float, heat_cold: float, heat_hot: float):
        self.work = work
        self.heat_cold = heat_cold
        self.heat_hot = heat_hot
        super().__init__(
            f"forbidden sign pattern: w={work:.6e}, q_c={heat_cold:.6e}, q_h={heat_hot:.6e}"
        )


class MarginalSign(ValueError):
    """One of (w, q_c, q_h) sits inside the sign tolerance band."""

    def __init__(self, work: float, heat_cold: float, heat_hot: float, components: tuple[str, ...]):
        self.work = work
        self.heat_cold = heat_cold
        self.heat_hot = heat_hot
        self.components = components
        super().__init__(f"sign of {', '.join(components)} is marginal at the given tolerance")


def classify_regime(work: float, heat_cold: float, heat_hot: float, tol: float = 0.0) -> Regime:
    """Map the signs of (work, cold heat, hot heat) to an operating regime.

    With tol = 0 exact zeros count as nonpositive, so a degenerate cycle with
    w = 0 classifies by its heat flows alone.  With tol > 0 any quantity whose
    magnitude is at most tol raises MarginalSign so the caller can resolve the
    ambiguity, for example by continuity along a sweep.  Sign patterns outside
    the four physical regimes raise ForbiddenRegime carrying the raw triple.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if tol > 0:
        near = tuple(
            name
            for name, val in (("w", work), ("q_c", heat_cold), ("q_h", heat_hot))
            if abs(val) <= tol
        )
        if near:
            raise MarginalSign(work, heat_cold, heat_hot, near)
    key = (work > tol, heat_cold > tol, heat_hot > tol)
    regime = _REGIME_SIGNS.get(key)
    if regime is None:
        raise ForbiddenRegime(work, heat_cold, heat_hot)
    return regime


@dataclass(frozen=True)
class CycleSpec:
    """Complete parameterization of an Otto cycle run.

    thermalization is either the string "complete" or a finite value giving
    the dimensionless contact strength dos*t per thermal stroke (both baths
    use the same value).  h_i = h_f and t_cold = t_hot are admitted as
    degenerate cycles; the CLI layer enforces the strict engine geometry.
    """

    chain: ChainSpec
    h_i: float
    h_f: float
    velocity: float
    bath_cold: BathSpec
    bath_hot: BathSpec
    thermalization: float | str = "complete"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.h_i) and math.isfinite(self.h_f)):
            raise ValueError("fields must be finite")
        if self.h_i > self.h_f:
            raise ValueError("h_i <= h_f required")
        if not (self.velocity > 0 and math.isfinite(self.velocity)):
            raise ValueError("velocity must be positive and finite")
        if self.bath_cold.temperature > self.bath_hot.temperature:
            raise ValueError("t_cold <= t_hot required")
        if isinstance(self.thermalization, str):
            if self.thermalization != "complete":
                raise ValueError("thermalization must be 'complete' or a contact strength")
        elif math.isnan(self.thermalization) or self.thermalization < 0:
            raise ValueError("contact strength must be >= 0")

    @property
    def t_cold(self) -> float:
        return self.bath_cold.temperature

    @property
    def t_hot(self) -> float:
        return self.bath_hot.temperature

    @property
    def is_complete(self) -> bool:
        if isinstance(self.thermalization, str):
            return True
        return math.isinf(self.thermalization)

    def schedule_for(self, bath: BathSpec) -> RelaxationSchedule:
        """Contact duration realizing the spec's dos*t product on this bath."""
        if self.is_complete:
            return RelaxationSchedule.complete()
        return RelaxationSchedule(duration=float(self.thermalization) / bath.dos)


@dataclass(frozen=True)
class CycleRecord:
    """Energy bookkeeping of one executed cycle.

    e_a..e_d are the internal energies at the four cycle points; regime is
    None for transient cycles that were not classified; n_cycle is the
    1-based index within a repeated run.
    """

    e_a: float
    e_b: float
    e_c: float
    e_d: float
    w: float
    q_c: float
    q_h: float
    regime: Regime | None = None
    n_cycle: int = 1

    @property
    def first_law_residual(self) -> float:
        """w - q_c - q_h; zero for a periodic (stationary) cycle."""
        return self.w - self.q_c - self.q_h


class ConvergenceError(RuntimeError):
    """Limit cycle not reached within the allowed number of cycles."""


def _strokes(spec: CycleSpec):
    chain = spec.chain
    up = quench_propagator(chain, QuenchProtocol(spec.h_i, spec.h_f, spec.velocity))
    down = quench_propagator(chain, QuenchProtocol(spec.h_f, spec.h_i, spec.velocity))
    hot = thermal_correlations(chain, spec.h_f, spec.bath_hot)
    cold = thermal_correlations(chain, spec.h_i, spec.bath_cold)
    return chain, up, down, hot, cold


def _cycle_once(
    chain: ChainSpec,
    spec: CycleSpec,
    state_a: CorrelationMatrix,
    up: Propagator,
    down: Propagator,
    hot: CorrelationMatrix,
    cold: CorrelationMatrix,
    n_cycle: int,
) -> tuple[CorrelationMatrix, CycleRecord]:
    """Run one full cycle from state A; returns the next A and its record."""
    e_a = energy_expectation(chain, spec.h_i, state_a)
    state_b = evolve_correlations(state_a, up)
    e_b = energy_expectation(chain, spec.h_f, state_b)
    state_c = relax_correlations(state_b, hot, spec.bath_hot, spec.schedule_for(spec.bath_hot))
    e_c = energy_expectation(chain, spec.h_f, state_c)
    state_d = evolve_correlations(state_c, down)
    e_d = energy_expectation(chain, spec.h_i, state_d)
    next_a = relax_correlations(state_d, cold, spec.bath_cold, spec.schedule_for(spec.bath_cold))
    e_next = energy_expectation(chain, spec.h_i, next_a)
    record = CycleRecord(
        e_a=e_a,
        e_b=e_b,
        e_c=e_c,
        e_d=e_d,
        w=(e_a - e_b) + (e_c - e_d),
        q_c=e_next - e_d,
        q_h=e_c - e_b,
        n_cycle=n_cycle,
    )
    return next_a, record


def _classified(record: CycleRecord) -> CycleRecord:
    regime = classify_regime(record.w, record.q_c, record.q_h)
    return CycleRecord(
        e_a=record.e_a,
        e_b=record.e_b,
        e_c=record.e_c,
        e_d=record.e_d,
        w=record.w,
        q_c=record.q_c,
        q_h=record.q_h,
        regime=regime,
        n_cycle=record.n_cycle,
    )


@lru_cache(maxsize=None)
def run_cycle(spec: CycleSpec) -> CycleRecord:
    """Run one stationary cycle with complete thermalization and classify it.

    The complete-thermalization cycle is history-free: both bath contacts
    land exactly on the Gibbs state, so a single pass through the four
    strokes gives the periodic cycle.  Raises ForbiddenRegime if the sign
    pattern is inconsistent, which no complete cycle with t_cold <= t_hot
    produces.
    """
    if not spec.is_complete:
        raise ValueError("run_cycle requires complete thermalization; see run_cycles_partial")
    chain, up, down, hot, cold = _strokes(spec)
    _, record = _cycle_once(chain, spec, cold, up, down, hot, cold, n_cycle=1)
    return _classified(record)


def run_cycles_partial(
    spec: CycleSpec,
    n_cyc: int,
    start: CorrelationMatrix | None = None,
) -> tuple[CycleRecord, ...]:
    """Run n_cyc consecutive cycles, carrying the state from cycle to cycle.

    The chain starts in the cold thermal state at h_i unless start is given.
    Records are returned in cycle order (n_cycle = 1..n_cyc) and are left
    unclassified, since transient sign patterns are not constrained to the
    four stationary regimes.
    """
    if n_cyc < 1:
        raise ValueError("n_cyc >= 1 required")
    chain, up, down, hot, cold = _strokes(spec)
    state = cold if start is None else start
    if state.n_sites != chain.n_sites:
        raise ValueError("start state size must match the chain")
    records = []
    for n in range(1, n_cyc + 1):
        state, record = _cycle_once(chain, spec, state, up, down, hot, cold, n_cycle=n)
        records.append(record)
    return tuple(records)


def stationary_cycle(
    spec: CycleSpec,
    atol: float = 1e-13,
    max_cycles: int = 10_000,
) -> CycleRecord:
    """Iterate cycles until the work output settles, then classify the result.

    Convergence is geometric with per-cycle ratio exp(-4*dos*t), so this is
    cheap for any appreciable contact strength; zero contact never converges
    and raises ConvergenceError.
    """
    if spec.is_complete:
        return run_cycle(spec)
    chain, up, down, hot, cold = _strokes(spec)
    state = cold
    previous = None
    for n in range(1, max_cycles + 1):
        state, record = _cycle_once(chain, spec, state, up, down, hot, cold, n_cycle=n)
        if previous is not None and abs(record.w - previous.w) <= atol:
            return _classified(record)
        previous = record
    raise ConvergenceError(f"no limit cycle after {max_cycles} cycles (jt={spec.thermalization})")


@dataclass(frozen=True)
class Metrics:
    """Efficiencies and distances to the reversible bounds for one cycle.

    eta compares work to hot heat against the Carnot efficiency; eta_r is the
    cooling coefficient of performance against its reversible bound.  pi and
    pi_r divide the output by the shortfall from the bound, so they diverge
    as the cycle approaches reversibility; overflow is flagged rather than
    raised.  flags also records when a figure is quoted outside its native
    regime.
    """

    eta: float
    eta_carnot: float
    delta_eta: float
    pi: float
    eta_r: float
    eta_r_carnot: float
    delta_eta_r: float
    pi_r: float
    flags: tuple[str, ...]


def engine_metrics(record: CycleRecord, spec: CycleSpec) -> Metrics:
    """Compute engine and refrigerator figures of merit for a cycle record."""
    if not (0 < spec.t_cold < spec.t_hot):
        raise ValueError("metrics need 0 < t_cold < t_hot")
    w, q_c, q_h = record.w, record.q_c, record.q_h
    flags = []
    if record.regime is not Regime.HEAT_ENGINE:
        flags.append("not_heat_engine")
    if record.regime is not Regime.REFRIGERATOR:
        flags.append("not_refrigerator")

    eta_carnot = 1.0 - spec.t_cold / spec.t_hot
    if q_h == 0.0:
        flags.append("eta_undefined")
        eta = math.nan
        delta_eta = math.nan
        pi = math.nan
    else:
        eta = w / q_h
        delta_eta = eta_carnot - eta
        if abs(delta_eta) < 1e-12:
            flags.append("pi_overflow")
            pi = math.copysign(math.inf, w) if w != 0 else math.inf
        else:
            pi = w / delta_eta

    eta_r_carnot = spec.t_cold / (spec.t_hot - spec.t_cold)
    if w == 0.0:
        flags.append("eta_r_undefined")
        eta_r = math.nan
        delta_eta_r = math.nan
        pi_r = math.nan
    else:
        # absolute-value convention keeps the COP positive in the R regime
        eta_r = q_c / abs(w)
        delta_eta_r = eta_r_carnot - eta_r
        if abs(delta_eta_r) < 1e-12:
            flags.append("pi_r_overflow")
            pi_r = math.copysign(math.inf, q_c) if q_c != 0 else math.inf
        else:
            pi_r = q_c / delta_eta_r

    return Metrics(
        eta=eta,
        eta_carnot=eta_carnot,
        delta_eta=delta_eta,
        pi=pi,
        eta_r=eta_r,
        eta_r_carnot=eta_r_carnot,
        delta_eta_r=delta_eta_r,
        pi_r=pi_r,
        flags=tuple(flags),
    )


def clear_caches() -> None:
    """Drop memoized cycle results (mainly for benchmarks and tests)."""
    run_cycle.cache_clear()
