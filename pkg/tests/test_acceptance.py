"""Acceptance gate: end-to-end checks of the physics at production parameters.

Each test prints one `[acceptance] C<n>: PASS/FAIL` line (visible with -s) and
asserts the same condition, so a plain pytest run is the gate.  Expensive
sweeps are memoized at module scope and shared between criteria; running this
file first also warms the propagator caches for the rest of the suite.
"""
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from otto_ising.analysis import (
    Grid2D,
    default_phase_grid,
    find_peaks,
    fit_power_law,
    sweep_observable,
    sweep_regime_map,
    velocity_scan,
)
from otto_ising.chain_model import (
    ChainSpec,
    build_bdg,
    correlation_matrix,
    diagonalize_bdg,
    energy_expectation,
    thermal_occupations,
)
from otto_ising.dynamics import QuenchProtocol, evolve_correlations, quench_propagator
from otto_ising.oracle import exact_quench, exact_thermal_energy, gibbs_state
from otto_ising.otto_engine import (
    Regime,
    run_cycle,
    run_cycles_partial,
    stationary_cycle,
)
from otto_ising.thermal_bath import BathSpec, RelaxationSchedule, relax_correlations, thermal_correlations

from conftest import H_FINE, make_cycle_spec

SIZES = (20, 30, 40, 50)
VELOCITIES = (1e-3, 5e-3, 1e-2, 5e-2)

_CACHE: dict[str, object] = {}


def _memo(key: str, builder):
    if key not in _CACHE:
        _CACHE[key] = builder()
    return _CACHE[key]


def _fine_curves(observable: str):
    template = make_cycle_spec(n=20, velocity=0.005)
    return _memo(
        f"fine_{observable}",
        lambda: sweep_observable(H_FINE, SIZES, template, observable),
    )


def _velocity_curves():
    template = make_cycle_spec(n=50, velocity=0.005)
    return _memo(
        "velocity_scan",
        lambda: velocity_scan(VELOCITIES, template, "pi_per_n", h_grid=H_FINE[::2]),
    )


def _conservation_map():
    def build():
        grid = Grid2D.regular(
            (0.1, 2.0), 40, (0.02, 0.48), 40,
            n_sites=20, delta_h=0.5, velocity=0.005, t_hot=0.5,
        )
        return sweep_regime_map(grid)

    return _memo("map40", build)


def _report(criterion: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    line = f"[acceptance] {criterion}: {status}"
    if detail:
        line += f" ({detail})"
    print(line, flush=True)
    assert passed, line


def test_criterion_01_thermal_state_oracle():
    started = time.perf_counter()
    worst = 0.0
    for n in range(2, 9):
        spec = ChainSpec(n)
        for h in (0.2, 0.5, 1.0, 1.5, 2.0):
            transform = diagonalize_bdg(build_bdg(spec, h))
            for temperature in (0.0, 0.1, 0.5, 2.0):
                occ = thermal_occupations(transform.energies, temperature)
                free = energy_expectation(spec, h, correlation_matrix(transform, occ))
                dense = exact_thermal_energy(spec, h, temperature)
                worst = max(worst, abs(free - dense))
    elapsed = time.perf_counter() - started
    _report(
        "C1 thermal-state oracle",
        worst < 1e-8 and elapsed < 30.0,
        f"max |free-fermion - dense| = {worst:.3g}, {elapsed:.1f}s",
    )


def test_criterion_02_quench_dynamics_oracle():
    started = time.perf_counter()
    spec = ChainSpec(6)
    initial_dense = gibbs_state(spec, 0.5, 0.5)
    initial_free = thermal_correlations(spec, 0.5, BathSpec(temperature=0.5))
    worst = 0.0
    for velocity in (0.05, 0.005):
        protocol = QuenchProtocol(0.5, 1.5, velocity)
        dense = exact_quench(spec, protocol, initial_dense)
        evolved = evolve_correlations(initial_free, quench_propagator(spec, protocol))
        free = energy_expectation(spec, 1.5, evolved)
        worst = max(worst, abs(free - dense))
    elapsed = time.perf_counter() - started
    _report(
        "C2 quench-dynamics oracle",
        worst < 1e-6 and elapsed < 120.0,
        f"max |free-fermion - dense| = {worst:.3g}, {elapsed:.1f}s",
    )


def test_criterion_03_conservation_laws_on_grid():
    started = time.perf_counter()
    rmap = _conservation_map()
    balance = float(np.max(np.abs(rmap.work - rmap.heat_cold - rmap.heat_hot)))
    grid = rmap.grid
    sigma = rmap.heat_hot / grid.t_hot + rmap.heat_cold / grid.y_values[None, :]
    clausius = float(sigma.max())
    forbidden = rmap.count("Forbidden")
    elapsed = time.perf_counter() - started
    _report(
        "C3 conservation laws",
        balance < 1e-10 and clausius <= 1e-10 and forbidden == 0 and elapsed < 600.0,
        f"max first-law residual {balance:.3g}, max entropy flow {clausius:.3g}, "
        f"{forbidden} forbidden cells, {elapsed:.1f}s",
    )


def test_criterion_04_carnot_bounds_on_grid():
    rmap = _conservation_map()
    grid = rmap.grid
    eta_limit = np.broadcast_to(
        1.0 - grid.y_values[None, :] / grid.t_hot, rmap.work.shape
    )
    cop_limit = np.broadcast_to(
        grid.y_values[None, :] / (grid.t_hot - grid.y_values[None, :]), rmap.work.shape
    )
    worst_engine = -np.inf
    worst_fridge = -np.inf
    engine = rmap.labels == Regime.HEAT_ENGINE.value
    fridge = rmap.labels == Regime.REFRIGERATOR.value
    if engine.any():
        eta = rmap.work[engine] / rmap.heat_hot[engine]
        worst_engine = float(np.max(eta - eta_limit[engine]))
    if fridge.any():
        cop = rmap.heat_cold[fridge] / np.abs(rmap.work[fridge])
        worst_fridge = float(np.max(cop - cop_limit[fridge]))
    _report(
        "C4 Carnot bounds",
        worst_engine <= 1e-10 and worst_fridge <= 1e-10,
        f"max engine excess {worst_engine:.3g}, max refrigerator excess {worst_fridge:.3g}",
    )


def _bracketing_rows(y_values: np.ndarray, target: float) -> tuple[int, int]:
    idx = int(np.searchsorted(y_values, target))
    return max(idx - 1, 0), min(idx, y_values.size - 1)


def test_criterion_05_regime_diagram_structure():
    started = time.perf_counter()
    rmap = _memo("map50", lambda: sweep_regime_map(default_phase_grid(50)))
    counts = {r.value: rmap.count(r.value) for r in Regime}
    all_present = all(count > 0 for count in counts.values())

    def intersects(label: str, t_line: float) -> bool:
        rows = _bracketing_rows(rmap.grid.y_values, t_line)
        return any((rmap.labels[:, j] == label).any() for j in rows)

    engine_lines = [intersects(Regime.HEAT_ENGINE.value, t) for t in (0.1, 0.25)]
    fridge_lines = [intersects(Regime.REFRIGERATOR.value, t) for t in (0.375, 0.45)]
    elapsed = time.perf_counter() - started
    _report(
        "C5 regime-diagram structure",
        all_present and all(engine_lines) and all(fridge_lines) and elapsed < 1800.0,
        f"counts {counts}, engine lines {engine_lines}, refrigerator lines {fridge_lines}, "
        f"{elapsed:.1f}s",
    )


def test_criterion_06_double_peak_and_size_dependence():
    curves = {c.n_sites: c for c in _fine_curves("w_per_n")}
    pairs = {n: find_peaks(curves[n]) for n in (20, 50)}
    failures = []
    for n, pair in pairs.items():
        if pair.critical is None or pair.paramagnetic is None:
            failures.append(f"N={n} missing a peak")
    if not failures:
        crit_20, crit_50 = pairs[20].critical.height, pairs[50].critical.height
        para_20, para_50 = pairs[20].paramagnetic.height, pairs[50].paramagnetic.height
        if not crit_50 > crit_20:
            failures.append(f"critical peak fell from {crit_20:.6g} to {crit_50:.6g}")
        para_change = abs(para_50 - para_20) / abs(para_20)
        if not para_change < 0.02:
            failures.append(f"paramagnetic peak changed by {para_change:.2%}")
    _report(
        "C6 double peak",
        not failures,
        "; ".join(failures)
        or f"critical {pairs[20].critical.height:.6g} -> {pairs[50].critical.height:.6g}, "
        f"paramagnetic change "
        f"{abs(pairs[50].paramagnetic.height - pairs[20].paramagnetic.height) / abs(pairs[20].paramagnetic.height):.2%}",
    )


def test_criterion_07_cooperation_peak_scaling():
    curves = _fine_curves("pi_per_n")
    pairs = {c.n_sites: find_peaks(c) for c in curves}
    failures = []

    critical = {}
    for n in SIZES:
        peak = pairs[n].critical
        if peak is None:
            failures.append(f"critical peak absent at N={n}")
        else:
            critical[n] = peak.height
    if len(critical) == len(SIZES):
        try:
            fit = fit_power_law(list(critical.items()))
            if not fit.alpha > 0:
                failures.append(f"fitted exponent {fit.alpha:.4f} is not positive")
            if not fit.residual < 0.1:
                failures.append(f"log-log residual {fit.residual:.4f} >= 0.1")
        except ValueError as exc:
            failures.append(
                f"power-law fit impossible: {exc}; critical heights "
                + ", ".join(f"N={n}: {v:.6g}" for n, v in critical.items())
            )

    para = [pairs[n].paramagnetic for n in SIZES]
    if any(p is None for p in para):
        failures.append("paramagnetic peak absent at some size")
    else:
        heights = [p.height for p in para]
        variation = (max(heights) - min(heights)) / abs(sum(heights) / len(heights))
        if not variation < 0.05:
            failures.append(f"paramagnetic heights vary by {variation:.2%} (>= 5%)")
    _report("C7 peak scaling with size", not failures, "; ".join(failures))


def test_criterion_08_velocity_dependence():
    curves = _velocity_curves()
    pairs = [find_peaks(c) for c in curves]
    failures = []

    crit = [p.critical.height if p.critical is not None else None for p in pairs]
    seen_absent = False
    for v, earlier, later in zip(VELOCITIES[1:], crit, crit[1:]):
        if earlier is None:
            seen_absent = True
        if later is None:
            continue
        if seen_absent:
            failures.append(f"critical peak reappeared at v={v}")
        elif later > earlier + 1e-15:
            failures.append(f"critical peak grew to {later:.6g} at v={v}")

    para = [p.paramagnetic.height if p.paramagnetic is not None else None for p in pairs]
    if any(p is None for p in para):
        failures.append("paramagnetic peak absent at some velocity")
    else:
        variation = (max(para) - min(para)) / abs(sum(para) / len(para))
        if not variation < 0.10:
            failures.append(f"paramagnetic heights vary by {variation:.2%} (>= 10%)")
    detail = "; ".join(failures) or (
        "critical heights " + ", ".join("absent" if c is None else f"{c:.6g}" for c in crit)
    )
    _report("C8 velocity dependence", not failures, detail)


def test_criterion_09_partial_thermalization():
    spec = make_cycle_spec(n=50, velocity=0.005)
    complete = run_cycle(spec)
    contact_values = (0.5, 1.0, 2.0, 5.0)

    failures = []
    stationary_failures = []
    previous = -np.inf
    for jt in contact_values:
        partial = make_cycle_spec(n=50, velocity=0.005, thermalization=jt)
        records = run_cycles_partial(partial, 12)
        work = [r.w for r in records]
        diffs = [b - a for a, b in zip(work, work[1:])]
        bound = math.exp(-2.0 * jt) + 1e-6
        for d_now, d_next in zip(diffs, diffs[1:]):
            if abs(d_now) > 1e-12 and abs(d_next) / abs(d_now) > bound:
                failures.append(
                    f"jt={jt}: contraction ratio {abs(d_next) / abs(d_now):.3g} > {bound:.3g}"
                )
                break
        limit = stationary_cycle(partial)
        if not limit.w >= previous - 1e-12:
            stationary_failures.append(f"jt={jt}: stationary work fell to {limit.w:.6g}")
        if not limit.w <= complete.w + 1e-12:
            stationary_failures.append(
                f"jt={jt}: stationary work {limit.w:.6g} exceeds complete {complete.w:.6g}"
            )
        previous = limit.w

    chain = spec.chain
    cold = thermal_correlations(chain, spec.h_i, spec.bath_cold)
    up = quench_propagator(chain, QuenchProtocol(spec.h_i, spec.h_f, spec.velocity))
    state_b = evolve_correlations(cold, up)
    e_b = energy_expectation(chain, spec.h_f, state_b)
    hot = thermal_correlations(chain, spec.h_f, spec.bath_hot)
    e_hot = energy_expectation(chain, spec.h_f, hot)
    heat_worst = 0.0
    for jt in contact_values:
        schedule = RelaxationSchedule(duration=jt / spec.bath_hot.dos)
        mixed = relax_correlations(state_b, hot, spec.bath_hot, schedule)
        factor = (energy_expectation(chain, spec.h_f, mixed) - e_b) / (e_hot - e_b)
        heat_worst = max(heat_worst, abs(factor - (1.0 - math.exp(-2.0 * jt))))
    if heat_worst > 1e-12:
        failures.append(f"heat factor off by {heat_worst:.3g}")
    failures.extend(stationary_failures)
    _report(
        "C9 partial thermalization",
        not failures,
        "; ".join(failures) or f"heat factor exact to {heat_worst:.3g}",
    )


def test_criterion_10_module_property_suite():
    started = time.perf_counter()
    root = Path(__file__).resolve().parent
    files = [
        "test_chain_model.py",
        "test_kernels.py",
        "test_dynamics.py",
        "test_thermal_bath.py",
        "test_otto_engine.py",
        "test_oracle.py",
        "test_analysis.py",
        "test_cli.py",
    ]
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *files],
        cwd=root,
        capture_output=True,
        text=True,
    )
    elapsed = time.perf_counter() - started
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else "no output"
    _report(
        "C10 module property suite",
        proc.returncode == 0 and elapsed < 300.0,
        f"exit {proc.returncode}, {elapsed:.1f}s, {tail}",
    )


class TestStructuralExamples:
    """Structural claims at production size, sharing the sweeps above."""

    def test_work_double_peak_across_four_sizes(self):
        pairs = {c.n_sites: find_peaks(c) for c in _fine_curves("w_per_n")}
        heights = []
        for n in SIZES:
            pair = pairs[n]
            assert pair.critical is not None, f"critical peak absent at N={n}"
            assert pair.paramagnetic is not None, f"paramagnetic peak absent at N={n}"
            heights.append((pair.critical.height, pair.paramagnetic.height))
        crit = [h for h, _ in heights]
        para = [p for _, p in heights]
        # the critical peak keeps growing with size, the paramagnetic one barely moves
        assert all(b > a for a, b in zip(crit, crit[1:])), f"critical heights {crit}"
        spread = (max(para) - min(para)) / abs(sum(para) / len(para))
        assert spread < 0.05, f"paramagnetic spread {spread:.2%}"

    def _warm_t375_curves(self, observable, sizes):
        template = make_cycle_spec(n=50, velocity=0.005, t_cold=0.375)
        key = f"t375_{observable}_{sizes}"
        return _memo(
            key, lambda: sweep_observable(H_FINE, list(sizes), template, observable)
        )

    def test_cold_heat_curve_loses_double_peak_at_warm_t_cold(self):
        curves = self._warm_t375_curves("q_c_per_n", (20, 50))
        para = {}
        for curve in curves:
            pair = find_peaks(curve)
            assert pair.critical is None, f"critical peak present at N={curve.n_sites}"
            assert pair.paramagnetic is not None
            para[curve.n_sites] = pair.paramagnetic
            # single hump: the curve never dips below its end-to-end chord
            chord = curve.y[0] + (curve.y[-1] - curve.y[0]) * (
                (curve.x - curve.x[0]) / (curve.x[-1] - curve.x[0])
            )
            dip = float(np.max(chord - curve.y))
            rng = float(curve.y.max() - curve.y.min())
            assert dip <= 1e-3 * rng, f"N={curve.n_sites} dips {dip:.3g} below chord"
        height_change = abs(para[50].height - para[20].height) / abs(para[20].height)
        assert height_change < 0.05, f"paramagnetic height changed {height_change:.2%}"
        assert abs(para[50].h_i - para[20].h_i) <= 0.06

    def test_refrigerator_cooperation_has_no_critical_peak_at_warm_t_cold(self):
        (curve,) = self._warm_t375_curves("pi_r_per_n", (50,))
        pair = find_peaks(curve)
        assert pair.critical is None
        assert pair.paramagnetic is not None

    def test_paramagnetic_peak_is_nearly_velocity_independent(self):
        pairs = [find_peaks(c) for c in _velocity_curves()]
        para = [p.paramagnetic.height for p in pairs if p.paramagnetic is not None]
        crit = [p.critical.height for p in pairs if p.critical is not None]
        assert len(para) == len(VELOCITIES), "paramagnetic peak absent somewhere"
        assert len(crit) >= 2, "critical peak absent almost everywhere"
        para_span = max(para) - min(para)
        crit_span = max(crit) - min(crit)
        assert para_span < 0.1 * crit_span, (
            f"paramagnetic span {para_span:.6g} is not below 10% of the critical span "
            f"{crit_span:.6g}"
        )
