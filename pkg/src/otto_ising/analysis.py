"""Sweeps and post-processing over families of Otto cycles.

This module turns single-cycle runs into the objects one actually plots:
regime maps over the (h_i, T_cold) plane, observable curves along h_i, peak
locations, finite-size scaling fits and velocity scans.  All sweeps share the
propagator and cycle caches, so a map costs one time integration per distinct
ramp rather than one per grid cell.

Peak detection is deliberately rigid: the curve is split at the critical
field h = 1 into a critical side (h < 1) and a paramagnetic side (h > 1), on
each side the candidates are interior local maxima of the full curve rising
above that side's minimum by at least a fixed fraction of the curve's range,
and the highest candidate wins.  This keeps peak bookkeeping reproducible on
coarse grids.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .chain_model import ChainSpec, _freeze
from .dynamics import QuenchProtocol, quench_propagator
from .otto_engine import (
    CycleSpec,
    ForbiddenRegime,
    MarginalSign,
    Regime,
    classify_regime,
    engine_metrics,
    stationary_cycle,
)
from .thermal_bath import BathSpec

THREADS_ENV = "OTTO_ISING_THREADS"

H_CRIT = 1.0

OBSERVABLES = ("w_per_n", "eta", "q_c_per_n", "eta_r", "pi_per_n", "pi_r_per_n")

# observables whose value is undefined (and therefore excluded) at points
# where the metric carries one of these flags
_EXCLUSION_FLAGS = {
    "w_per_n": (),
    "q_c_per_n": (),
    "eta": ("eta_undefined",),
    "eta_r": ("eta_r_undefined",),
    "pi_per_n": ("eta_undefined", "pi_overflow"),
    "pi_r_per_n": ("eta_r_undefined", "pi_r_overflow"),
}


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit argument, else OTTO_ISING_THREADS, else 1."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        if raw == "":
            return 1
        try:
            threads = int(raw)
        except ValueError as exc:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    return threads


def _pmap(fn, items, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class Grid2D:
    """Rectangular sweep grid: x is the h_i axis, y is the T_cold axis.

    The remaining cycle parameters (size, field span, ramp velocity, hot
    temperature) are fixed across the grid and carried here so a grid fully
    determines the family of cycles it indexes.
    """

    x_values: np.ndarray
    y_values: np.ndarray
    n_sites: int
    delta_h: float
    velocity: float
    t_hot: float
    coupling: float = 1.0

    def __post_init__(self) -> None:
        x = np.asarray(self.x_values, dtype=float)
        y = np.asarray(self.y_values, dtype=float)
        for name, axis in (("x_values", x), ("y_values", y)):
            if axis.ndim != 1 or axis.size == 0:
                raise ValueError(f"{name} must be a nonempty vector")
            if not np.all(np.isfinite(axis)):
                raise ValueError(f"{name} must be finite")
            if np.any(np.diff(axis) <= 0):
                raise ValueError(f"{name} must be strictly ascending")
        if self.delta_h < 0:
            raise ValueError("delta_h must be >= 0")
        object.__setattr__(self, "x_values", _freeze(x))
        object.__setattr__(self, "y_values", _freeze(y))

    @classmethod
    def regular(
        cls,
        h_span: tuple[float, float],
        n_x: int,
        t_span: tuple[float, float],
        n_y: int,
        **fixed,
    ) -> "Grid2D":
        return cls(
            x_values=np.linspace(h_span[0], h_span[1], n_x),
            y_values=np.linspace(t_span[0], t_span[1], n_y),
            **fixed,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.x_values.size, self.y_values.size)

    def cell_spec(self, i: int, j: int, thermalization: float | str = "complete") -> CycleSpec:
        """The CycleSpec evaluated at grid cell (i, j)."""
        h_i = float(self.x_values[i])
        return CycleSpec(
            chain=ChainSpec(n_sites=self.n_sites, coupling=self.coupling),
            h_i=h_i,
            h_f=h_i + self.delta_h,
            velocity=self.velocity,
            bath_cold=BathSpec(temperature=float(self.y_values[j])),
            bath_hot=BathSpec(temperature=self.t_hot),
            thermalization=thermalization,
        )


def default_phase_grid(
    n_sites: int = 50,
    t_hot: float = 0.5,
    delta_h: float = 0.5,
    velocity: float = 0.005,
    coupling: float = 1.0,
) -> Grid2D:
    """The standard 60 x 50 phase-diagram grid over h_i and T_cold."""
    return Grid2D.regular(
        (0.1, 2.0),
        60,
        (0.02, t_hot - 0.02),
        50,
        n_sites=n_sites,
        delta_h=delta_h,
        velocity=velocity,
        t_hot=t_hot,
        coupling=coupling,
    )


@dataclass(frozen=True)
class RegimeMap:
    """Classified cycles on a Grid2D; arrays are indexed [i_x, i_y].

    labels holds regime names ("HeatEngine", ..., plus "Forbidden" for cells
    whose sign pattern no consistent cycle produces); marginal marks cells
    whose signs sat inside the tolerance band and were resolved by continuity
    with their neighbors.
    """

    grid: Grid2D
    labels: np.ndarray
    marginal: np.ndarray
    work: np.ndarray
    heat_cold: np.ndarray
    heat_hot: np.ndarray

    def __post_init__(self) -> None:
        shape = self.grid.shape
        for name in ("labels", "marginal", "work", "heat_cold", "heat_hot"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} must have grid shape {shape}")
        object.__setattr__(self, "labels", _freeze(np.asarray(self.labels)))
        object.__setattr__(self, "marginal", _freeze(np.asarray(self.marginal, dtype=bool)))
        object.__setattr__(self, "work", _freeze(np.asarray(self.work, dtype=float)))
        object.__setattr__(self, "heat_cold", _freeze(np.asarray(self.heat_cold, dtype=float)))
        object.__setattr__(self, "heat_hot", _freeze(np.asarray(self.heat_hot, dtype=float)))

    def count(self, label: str) -> int:
        return int(np.sum(self.labels == label))


def sweep_regime_map(
    grid: Grid2D,
    threads: int | None = None,
    sign_tol: float | None = None,
) -> RegimeMap:
    """Classify one complete-thermalization cycle per grid cell.

    sign_tol defaults to 1e-12 per site, the scale to which extensive
    energies cancel in double precision.  Cells landing inside the band are
    resolved by majority vote over already-classified neighbors and flagged
    as marginal; forbidden sign patterns are kept with the label "Forbidden"
    rather than aborting the sweep.
    """
    workers = resolve_threads(threads)
    if sign_tol is None:
        sign_tol = 1e-12 * grid.n_sites
    n_x, n_y = grid.shape
    chain = ChainSpec(n_sites=grid.n_sites, coupling=grid.coupling)

    # warm the propagator cache, one ramp per distinct h_i
    def _warm(h_i: float):
        quench_propagator(chain, QuenchProtocol(h_i, h_i + grid.delta_h, grid.velocity))

    if grid.delta_h > 0:
        _pmap(_warm, grid.x_values, workers)

    labels = np.empty((n_x, n_y), dtype=object)
    marginal = np.zeros((n_x, n_y), dtype=bool)
    work = np.empty((n_x, n_y))
    heat_cold = np.empty((n_x, n_y))
    heat_hot = np.empty((n_x, n_y))

    def _cell(idx: tuple[int, int]):
        i, j = idx
        try:
            rec = stationary_cycle(grid.cell_spec(i, j))
            return i, j, rec.w, rec.q_c, rec.q_h, False
        except ForbiddenRegime as exc:
            return i, j, exc.work, exc.heat_cold, exc.heat_hot, True

    cells = [(i, j) for i in range(n_x) for j in range(n_y)]
    for i, j, w, qc, qh, forbidden in _pmap(_cell, cells, workers):
        work[i, j] = w
        heat_cold[i, j] = qc
        heat_hot[i, j] = qh
        if forbidden:
            labels[i, j] = "Forbidden"
            continue
        try:
            labels[i, j] = classify_regime(w, qc, qh, tol=sign_tol).value
        except MarginalSign:
            labels[i, j] = None
            marginal[i, j] = True
        except ForbiddenRegime:
            labels[i, j] = "Forbidden"

    _resolve_marginal(labels, marginal, work, heat_cold, heat_hot)
    return RegimeMap(
        grid=grid,
        labels=labels.astype(str),
        marginal=marginal,
        work=work,
        heat_cold=heat_cold,
        heat_hot=heat_hot,
    )


def _resolve_marginal(labels, marginal, work, heat_cold, heat_hot) -> None:
    """Fill None labels from classified neighbors, then fall back to tol = 0."""
    n_x, n_y = labels.shape
    regime_names = {r.value for r in Regime}
    pending = [(i, j) for i in range(n_x) for j in range(n_y) if labels[i, j] is None]
    while pending:
        progressed = False
        remaining = []
        for i, j in pending:
            votes = []
            for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                a, b = i + di, j + dj
                if 0 <= a < n_x and 0 <= b < n_y and labels[a, b] in regime_names:
                    votes.append(labels[a, b])
            if votes:
                # majority, ties broken by scan order of the neighbors
                best = max(set(votes), key=votes.count)
                labels[i, j] = best
                progressed = True
            else:
                remaining.append((i, j))
        pending = remaining
        if not progressed:
            break
    for i, j in pending:
        try:
            labels[i, j] = classify_regime(work[i, j], heat_cold[i, j], heat_hot[i, j]).value
        except ForbiddenRegime:
            labels[i, j] = "Forbidden"


@dataclass(frozen=True)
class Curve:
    """Observable values along an h_i sweep at fixed everything else.

    excluded lists (h_i, reason) pairs dropped because the observable was
    undefined or overflowed there; x contains only the retained points.
    """

    x: np.ndarray
    y: np.ndarray
    observable: str
    n_sites: int
    t_cold: float
    t_hot: float
    delta_h: float
    velocity: float
    excluded: tuple[tuple[float, str], ...] = ()

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be equal-length vectors")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly ascending")
        if not np.all(np.isfinite(y)):
            raise ValueError("y must be finite (undefined points belong in excluded)")
        object.__setattr__(self, "x", _freeze(x))
        object.__setattr__(self, "y", _freeze(y))


def _observable_value(observable: str, rec, met, n_sites: int) -> float:
    if observable == "w_per_n":
        return rec.w / n_sites
    if observable == "q_c_per_n":
        return rec.q_c / n_sites
    if observable == "eta":
        return met.eta
    if observable == "eta_r":
        return met.eta_r
    if observable == "pi_per_n":
        return met.pi / n_sites
    return met.pi_r / n_sites


def sweep_observable(
    h_grid,
    sizes: Sequence[int],
    template: CycleSpec,
    observable: str,
    threads: int | None = None,
) -> tuple[Curve, ...]:
    """Evaluate one observable over h_i for each chain size; one Curve per size.

    The template fixes everything except h_i (swept along h_grid, with
    h_f = h_i + (template.h_f - template.h_i)) and the chain size (taken from
    sizes).  Points where the observable is undefined or overflows are
    recorded on the curve's exclusion list instead of appearing in y.
    """
    if observable not in OBSERVABLES:
        raise ValueError(f"unknown observable {observable!r}; expected one of {OBSERVABLES}")
    workers = resolve_threads(threads)
    h_grid = np.asarray(h_grid, dtype=float)
    if h_grid.ndim != 1 or h_grid.size == 0:
        raise ValueError("h_grid must be a nonempty vector")
    if np.any(np.diff(h_grid) <= 0):
        raise ValueError("h_grid must be strictly ascending")
    delta_h = template.h_f - template.h_i

    curves = []
    for n_sites in sizes:
        chain = ChainSpec(n_sites=int(n_sites), coupling=template.chain.coupling)

        def _warm(h_i: float):
            quench_propagator(chain, QuenchProtocol(h_i, h_i + delta_h, template.velocity))

        if delta_h > 0:
            _pmap(_warm, h_grid, workers)

        def _point(h_i: float):
            spec = replace(template, chain=chain, h_i=float(h_i), h_f=float(h_i) + delta_h)
            try:
                rec = stationary_cycle(spec)
            except ForbiddenRegime:
                return None, "forbidden"
            met = engine_metrics(rec, spec)
            bad = [f for f in _EXCLUSION_FLAGS[observable] if f in met.flags]
            if bad:
                return None, bad[0]
            return _observable_value(observable, rec, met, spec.chain.n_sites), None

        kept_x, kept_y, excluded = [], [], []
        for h_i, (value, reason) in zip(h_grid, _pmap(_point, h_grid, workers)):
            if reason is None:
                kept_x.append(float(h_i))
                kept_y.append(value)
            else:
                excluded.append((float(h_i), reason))
        curves.append(
            Curve(
                x=np.array(kept_x),
                y=np.array(kept_y),
                observable=observable,
                n_sites=int(n_sites),
                t_cold=template.t_cold,
                t_hot=template.t_hot,
                delta_h=delta_h,
                velocity=template.velocity,
                excluded=tuple(excluded),
            )
        )
    return tuple(curves)


@dataclass(frozen=True)
class Peak:
    """A local maximum of a curve: position, height, index into the curve."""

    h_i: float
    height: float
    index: int


@dataclass(frozen=True)
class PeakPair:
    """The per-side maxima of a sweep around the critical-field split."""

    critical: Peak | None
    paramagnetic: Peak | None
    h_crit: float = H_CRIT

    def __post_init__(self) -> None:
        if self.critical is not None and not self.critical.h_i < self.h_crit:
            raise ValueError("critical peak must sit below h_crit")
        if self.paramagnetic is not None and not self.paramagnetic.h_i > self.h_crit:
            raise ValueError("paramagnetic peak must sit above h_crit")


def find_peaks(curve: Curve, h_crit: float = H_CRIT, floor_fraction: float = 1e-3) -> PeakPair:
    """Locate the per-side maxima of a curve around the critical field.

    Candidates on a side are its points that are interior local maxima of the
    full curve and exceed that side's minimum by floor_fraction times the
    full curve's range; the highest candidate wins (ties go to the leftmost).
    Points exactly at h_crit belong to neither side.  A side without
    candidates reports absent; fewer than 3 points on either side is an
    error, since peaks there would be meaningless.
    """
    x, y = curve.x, curve.y
    lo = np.flatnonzero(x < h_crit)
    hi = np.flatnonzero(x > h_crit)
    if lo.size < 3 or hi.size < 3:
        raise ValueError(f"need >= 3 points on each side of h_crit={h_crit}")
    rng = float(y.max() - y.min())
    if rng == 0.0:
        return PeakPair(critical=None, paramagnetic=None, h_crit=h_crit)
    floor = floor_fraction * rng

    def _side(side_idx: np.ndarray) -> Peak | None:
        side_min = float(y[side_idx].min())
        best = None
        for c in side_idx:
            if c == 0 or c == y.size - 1:
                continue
            if not (y[c] >= y[c - 1] and y[c] >= y[c + 1]):
                continue
            if y[c] - side_min < floor:
                continue
            if best is None or y[c] > y[best]:
                best = int(c)
        if best is None:
            return None
        return Peak(h_i=float(x[best]), height=float(y[best]), index=best)

    return PeakPair(critical=_side(lo), paramagnetic=_side(hi), h_crit=h_crit)


@dataclass(frozen=True)
class ScalingFit:
    """Power law value = prefactor * N**alpha fitted in log-log space."""

    alpha: float
    prefactor: float
    residual: float
    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if self.residual < 0:
            raise ValueError("residual must be >= 0")


def fit_power_law(points) -> ScalingFit:
    """Least-squares power law through (size, value) pairs; needs >= 3 points.

    Returns the slope alpha and intercept exp(prefactor) of the line in
    (log N, log value) space together with the rms residual of the fit.
    """
    pts = tuple((float(n), float(v)) for n, v in points)
    if len(pts) < 3:
        raise ValueError("at least 3 points required for a power-law fit")
    sizes = np.array([p[0] for p in pts])
    values = np.array([p[1] for p in pts])
    if np.any(sizes <= 0) or np.any(values <= 0):
        raise ValueError("sizes and values must be positive")
    lx, ly = np.log(sizes), np.log(values)
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return ScalingFit(
        alpha=float(slope),
        prefactor=float(np.exp(intercept)),
        residual=residual,
        points=pts,
    )


def velocity_scan(
    velocities,
    template: CycleSpec,
    observable: str,
    h_grid=None,
    threads: int | None = None,
) -> tuple[Curve, ...]:
    """Sweep the observable over h_i once per ramp velocity, at fixed size.

    The default h_grid covers [0.6, 1.6] in steps of 0.02, bracketing both
    peaks of the double-peak structure on either side of the critical field.
    """
    velocities = tuple(float(v) for v in velocities)
    if not velocities:
        raise ValueError("velocities must be nonempty")
    if any(v <= 0 for v in velocities):
        raise ValueError("velocities must be positive")
    if h_grid is None:
        h_grid = np.arange(0.6, 1.6 + 1e-9, 0.02)
    curves = []
    for v in velocities:
        scan = sweep_observable(
            h_grid,
            [template.chain.n_sites],
            replace(template, velocity=v),
            observable,
            threads=threads,
        )
        curves.append(scan[0])
    return tuple(curves)


# marching-squares segment table: corner bits 1=bottom-left, 2=bottom-right,
# 4=top-right, 8=top-left; edges S, E, N, W; ambiguous cases keep the corners
# separate (the cell center counts as outside)
_MS_SEGMENTS = {
    0: (),
    1: (("S", "W"),),
    2: (("S", "E"),),
    3: (("W", "E"),),
    4: (("E", "N"),),
    5: (("S", "W"), ("E", "N")),
    6: (("S", "N"),),
    7: (("W", "N"),),
    8: (("W", "N"),),
    9: (("S", "N"),),
    10: (("S", "E"), ("W", "N")),
    11: (("E", "N"),),
    12: (("W", "E"),),
    13: (("S", "E"),),
    14: (("S", "W"),),
    15: (),
}


def extract_regime_boundary(rmap: RegimeMap, regime: Regime | str) -> tuple[np.ndarray, ...]:
    """Trace the boundary of one regime's region as ordered polylines.

    Runs marching squares on the region indicator with crossing points at
    grid edge midpoints.  Returns one (M, 2) array of (h_i, T_cold) vertices
    per connected boundary piece; closed loops repeat their first vertex at
    the end.  An absent regime yields an empty tuple.
    """
    label = regime.value if isinstance(regime, Regime) else str(regime)
    inside = rmap.labels == label
    xs, ys = rmap.grid.x_values, rmap.grid.y_values
    n_x, n_y = inside.shape

    segments = []
    for i in range(n_x - 1):
        for j in range(n_y - 1):
            case = (
                int(inside[i, j])
                | int(inside[i + 1, j]) << 1
                | int(inside[i + 1, j + 1]) << 2
                | int(inside[i, j + 1]) << 3
            )
            if case in (0, 15):
                continue
            mid = {
                "S": ((xs[i] + xs[i + 1]) / 2.0, ys[j]),
                "E": (xs[i + 1], (ys[j] + ys[j + 1]) / 2.0),
                "N": ((xs[i] + xs[i + 1]) / 2.0, ys[j + 1]),
                "W": (xs[i], (ys[j] + ys[j + 1]) / 2.0),
            }
            for a, b in _MS_SEGMENTS[case]:
                segments.append((mid[a], mid[b]))

    return _chain_segments(segments)


def _chain_segments(segments) -> tuple[np.ndarray, ...]:
    """Join shared-endpoint segments into polylines, deterministically ordered."""
    adjacency: dict[tuple, list[tuple]] = {}
    for a, b in segments:
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, []).append(a)
    for nbrs in adjacency.values():
        nbrs.sort()

    used: set[frozenset] = set()

    def _walk(start) -> list[tuple]:
        path = [start]
        current = start
        while True:
            step = None
            for nxt in adjacency[current]:
                if frozenset((current, nxt)) not in used:
                    step = nxt
                    break
            if step is None:
                return path
            used.add(frozenset((current, step)))
            path.append(step)
            current = step

    polylines = []
    # open chains first: start at endpoints of odd degree
    for start in sorted(p for p, nbrs in adjacency.items() if len(nbrs) % 2 == 1):
        if all(frozenset((start, nbr)) in used for nbr in adjacency[start]):
            continue
        polylines.append(_walk(start))
    # remaining segments belong to closed loops
    for start in sorted(adjacency):
        if all(frozenset((start, nbr)) in used for nbr in adjacency[start]):
            continue
        polylines.append(_walk(start))

    polylines.sort(key=lambda path: path[0])
    return tuple(np.array(path, dtype=float) for path in polylines)
