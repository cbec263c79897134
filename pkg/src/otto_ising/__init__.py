"""Quantum Otto cycles on the transverse-field Ising chain.

The package simulates a four-stroke Otto engine whose working substance is
an open transverse-field Ising chain, using the exact free-fermion
representation so that chains of hundreds of sites cost only polynomial
work.  A dense-matrix oracle provides ground truth on small chains.

Layering, bottom to top: chain_model (static free-fermion structure),
kernels + dynamics (linear field ramps), thermal_bath (relaxation),
otto_engine (cycles, regimes, metrics), analysis (sweeps, maps, peaks,
fits), oracle (dense cross-checks), cli (command-line front end).
"""

from . import analysis, chain_model, dynamics, kernels, oracle, otto_engine, thermal_bath
from .analysis import (
    Curve,
    Grid2D,
    Peak,
    PeakPair,
    RegimeMap,
    ScalingFit,
    default_phase_grid,
    extract_regime_boundary,
    find_peaks,
    fit_power_law,
    sweep_observable,
    sweep_regime_map,
    velocity_scan,
)
from .chain_model import (
    BdGMatrix,
    BogoliubovTransform,
    ChainSpec,
    CorrelationMatrix,
    DiagonalizationError,
    ModeOccupations,
    analytic_dispersion,
    build_bdg,
    correlation_matrix,
    diagonalize_bdg,
    energy_expectation,
    mode_occupations,
    thermal_occupations,
)
from .dynamics import (
    IntegrationError,
    Propagator,
    QuenchProtocol,
    evolve_correlations,
    quench_propagator,
    stroke_work,
)
from .oracle import (
    DenseSpinOperator,
    exact_cycle,
    exact_quench,
    exact_spin_hamiltonian,
    exact_thermal_energy,
    gibbs_state,
)
from .otto_engine import (
    ConvergenceError,
    CycleRecord,
    CycleSpec,
    ForbiddenRegime,
    MarginalSign,
    Metrics,
    Regime,
    classify_regime,
    engine_metrics,
    run_cycle,
    run_cycles_partial,
    stationary_cycle,
)
from .thermal_bath import (
    BathSpec,
    RelaxationSchedule,
    heat_exchanged,
    relax_correlations,
    relax_mode_occupations,
    thermal_correlations,
)

__version__ = "0.1.0"


def clear_caches() -> None:
    """Drop every in-process cache (diagonalizations, propagators, cycles)."""
    otto_engine.clear_caches()
    dynamics.clear_caches()
    chain_model.clear_caches()
    oracle.clear_caches()
