"""Thermal states and relaxation toward them.

Bath contact happens at fixed field.  With one identical bath attached to
every site and jump operators built from the chain's own quasiparticles, all
modes relax at the same rate 2*J_dos, and the state after contact time t is
the convex mixture

    C(t) = C_thermal * (1 - exp(-2*J_dos*t)) + C(0) * exp(-2*J_dos*t)

where J_dos is the bath density of states.  Mixing is linear in the
correlation matrix, which makes this closed form exact for every observable
tracked here; duration = inf reproduces complete thermalization.  The rate
uniformity assumes a nondegenerate quasiparticle spectrum; degenerate spectra
(the h = 0 chain has a zero mode and a flat band) are still computed but
flagged with a warning.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .chain_model import (
    ChainSpec,
    CorrelationMatrix,
    ModeOccupations,
    build_bdg,
    correlation_matrix,
    diagonalize_bdg,
    thermal_occupations,
)

BATH_TOPOLOGY = "one-bath-per-site"


@dataclass(frozen=True)
class BathSpec:
    """A heat bath: temperature, density of states (rate units), topology."""

    temperature: float
    dos: float = 1.0
    topology: str = BATH_TOPOLOGY

    def __post_init__(self) -> None:
        if not (self.temperature >= 0 and math.isfinite(self.temperature)):
            raise ValueError("temperature must be finite and >= 0")
        if not (self.dos > 0 and math.isfinite(self.dos)):
            raise ValueError("dos must be positive and finite")
        if self.topology != BATH_TOPOLOGY:
            raise ValueError(f"only topology {BATH_TOPOLOGY!r} is supported")


@dataclass(frozen=True)
class RelaxationSchedule:
    """Contact duration of one thermal stroke; inf means complete."""

    duration: float

    def __post_init__(self) -> None:
        if math.isnan(self.duration) or self.duration < 0:
            raise ValueError("duration must be >= 0 (inf allowed)")

    @classmethod
    def complete(cls) -> "RelaxationSchedule":
        return cls(duration=math.inf)

    @property
    def is_complete(self) -> bool:
        return math.isinf(self.duration)


def _mixing_weight(bath: BathSpec, duration: float) -> float:
    """Thermal-state weight 1 - exp(-2*dos*t) after contact time t."""
    return 1.0 - math.exp(-2.0 * bath.dos * duration)


def _warn_if_degenerate(energies: np.ndarray) -> None:
    e = np.sort(np.asarray(energies, dtype=float))
    degenerate = np.any(e == 0.0) or (e.size > 1 and np.any(np.diff(e) < 1e-12))
    if degenerate:
        warnings.warn(
            "degenerate quasiparticle spectrum (e.g. h = 0): the uniform "
            "relaxation rate is assumed to still apply",
            RuntimeWarning,
            stacklevel=3,
        )


def thermal_correlations(spec: ChainSpec, h: float, bath: BathSpec) -> CorrelationMatrix:
    """Gibbs-state correlation matrix of the chain at field h.

    This is the unique fixed point of the relaxation dynamics.  At T = 0 any
    exact zero mode is filled at 1/2, the average over the degenerate ground
    space; a warning flags that choice.
    """
    t = diagonalize_bdg(build_bdg(spec, h))
    if bath.temperature == 0 and np.any(t.energies == 0.0):
        warnings.warn(
            "ground space is degenerate (exact zero mode); occupying it at 1/2",
            RuntimeWarning,
            stacklevel=2,
        )
    occ = thermal_occupations(t.energies, bath.temperature)
    return correlation_matrix(t, occ)


def relax_mode_occupations(
    start: ModeOccupations,
    energies,
    bath: BathSpec,
    t: float,
) -> ModeOccupations:
    """Mode-resolved relaxation toward the Fermi-Dirac occupations.

    Every mode follows n_k(t) = f_k + (n_k(0) - f_k) * exp(-2*dos*t) with the
    same rate; a degenerate spectrum is flagged but still computed.
    """
    if t < 0 or math.isnan(t):
        raise ValueError("contact time t must be >= 0")
    e = np.asarray(energies, dtype=float)
    if len(start) != e.shape[0]:
        raise ValueError("occupations and energies must have equal length")
    _warn_if_degenerate(e)
    target = thermal_occupations(e, bath.temperature)
    w = _mixing_weight(bath, t)
    # incremental form keeps the fixed point and t = 0 exact to the bit
    return ModeOccupations(values=start.values + w * (target.values - start.values))


def relax_correlations(
    start: CorrelationMatrix,
    target: CorrelationMatrix,
    bath: BathSpec,
    schedule: RelaxationSchedule,
) -> CorrelationMatrix:
    """Convex mixture of the initial and thermal correlation matrices.

    target must be the thermal fixed point at the current field; a complete
    schedule returns it unchanged (and exactly).
    """
    if start.n_sites != target.n_sites:
        raise ValueError("correlation matrices must have equal size")
    if schedule.is_complete:
        return target
    w = _mixing_weight(bath, schedule.duration)
    # incremental form keeps the fixed point and t = 0 exact to the bit
    return CorrelationMatrix(
        g_block=start.g_block + w * (target.g_block - start.g_block),
        f_block=start.f_block + w * (target.f_block - start.f_block),
    )


def heat_exchanged(e_before: float, e_after: float) -> float:
    """Heat absorbed by the chain during bath contact at fixed field."""
    return e_after - e_before


__all__ = [
    "BATH_TOPOLOGY",
    "BathSpec",
    "RelaxationSchedule",
    "thermal_correlations",
    "relax_mode_occupations",
    "relax_correlations",
    "heat_exchanged",
]
