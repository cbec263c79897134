"""Unitary quench dynamics under a linear field ramp.

A quench drives the chain from h_start to h_end at ramp speed v, so the
Heisenberg propagator of the Bogoliubov operators obeys a linear ODE with the
time-dependent BdG generator.  Working in the sum/difference combinations
phi = U + V and psi = U - V halves the bandwidth; the kernels module steps
those two N x N systems with fixed-step RK4.

The step size follows the stiffest scale present: dt = min(0.01 / eps_max,
0.01 / v) with eps_max = 2 * (J + max |h|) along the ramp.  Unitarity drift is
measured every chunk of steps; small drift is repaired by a polar projection
and drift beyond 1e-6 aborts, since it signals a step size inadequate for the
requested ramp.

For a ramp reversed in time the propagator is the plain transpose of the
forward one (the generator path is the same real-symmetric family traversed
backwards), so down-sweeps are served as transposes of cached up-sweeps and
never integrated separately.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .chain_model import ChainSpec, CorrelationMatrix, _freeze
from .kernels import rk4_chunk

# Steps between unitarity checks; drift repair and abort thresholds.
RENORM_INTERVAL = 100
DRIFT_RENORM_TOL = 1e-10
DRIFT_ABORT_TOL = 1e-6
MAX_STEPS = 100_000_000


class IntegrationError(RuntimeError):
    """Unitarity lost beyond repair or an unusable step size."""


@dataclass(frozen=True)
class QuenchProtocol:
    """Linear ramp h(t) = h_start + sign(h_end - h_start) * v * t."""

    h_start: float
    h_end: float
    velocity: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.h_start) and np.isfinite(self.h_end)):
            raise ValueError("fields must be finite")
        if not (self.velocity > 0 and np.isfinite(self.velocity)):
            raise ValueError("velocity must be positive and finite")

    @property
    def duration(self) -> float:
        return abs(self.h_end - self.h_start) / self.velocity


@dataclass(frozen=True)
class Propagator:
    """Propagator of the Bogoliubov operators across one ramp.

    matrix is the 2N x 2N complex map W with correlations transforming as
    W @ C @ W^dag; t_elapsed is the ramp duration and defect the largest
    unitarity residual observed after the final repair.
    """

    matrix: np.ndarray
    h_start: float
    h_end: float
    velocity: float
    t_elapsed: float
    defect: float

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise ValueError("matrix must be square with even dimension")
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[0] // 2


_cache: dict[tuple, Propagator] = {}
_cache_lock = threading.Lock()


def _unitarity_defect(phi: np.ndarray, psi: np.ndarray) -> tuple[float, np.ndarray]:
    m = 0.5 * (phi.conj().T @ phi + psi.conj().T @ psi)
    return float(np.abs(m - np.eye(m.shape[0])).max()), m


def _polar_project(phi: np.ndarray, psi: np.ndarray, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # right-multiply by m^(-1/2); m is Hermitian positive by construction
    w, q = np.linalg.eigh(m)
    r = (q / np.sqrt(w)) @ q.conj().T
    return phi @ r, psi @ r


def _integrate_up(n: int, coupling: float, h_start: float, h_end: float, v: float) -> Propagator:
    """Integrate a ramp with h_end >= h_start and assemble the full propagator."""
    span = h_end - h_start
    duration = span / v
    if span == 0.0:
        return Propagator(
            matrix=np.eye(2 * n, dtype=complex),
            h_start=h_start,
            h_end=h_end,
            velocity=v,
            t_elapsed=0.0,
            defect=0.0,
        )
    eps_max = 2.0 * (coupling + max(abs(h_start), abs(h_end)))
    dt = min(0.01 / eps_max, 0.01 / v)
    nsteps = math.ceil(duration / dt)
    if nsteps > MAX_STEPS:
        raise IntegrationError(
            f"ramp {h_start} -> {h_end} at v={v} needs {nsteps} steps; refusing"
        )
    dt = duration / nsteps
    phi = np.eye(n, dtype=complex)
    psi = np.eye(n, dtype=complex)
    done = 0
    while done < nsteps:
        take = min(RENORM_INTERVAL, nsteps - done)
        rk4_chunk(phi, psi, done * dt, dt, take, h_start, v, coupling)
        done += take
        defect, m = _unitarity_defect(phi, psi)
        if defect > DRIFT_ABORT_TOL:
            raise IntegrationError(
                f"unitarity drift {defect:.3e} after {done}/{nsteps} steps of "
                f"ramp {h_start} -> {h_end} at v={v} (dt={dt:.3e})"
            )
        if defect > DRIFT_RENORM_TOL:
            phi, psi = _polar_project(phi, psi, m)
    defect, m = _unitarity_defect(phi, psi)
    if defect > DRIFT_RENORM_TOL:
        phi, psi = _polar_project(phi, psi, m)
        defect, _ = _unitarity_defect(phi, psi)
    a = 0.5 * (phi + psi)
    b = 0.5 * (phi - psi)
    w = np.empty((2 * n, 2 * n), dtype=complex)
    w[:n, :n] = a
    w[:n, n:] = b.conj()
    w[n:, :n] = b
    w[n:, n:] = a.conj()
    return Propagator(
        matrix=w, h_start=h_start, h_end=h_end, velocity=v, t_elapsed=duration, defect=defect
    )


def quench_propagator(spec: ChainSpec, protocol: QuenchProtocol) -> Propagator:
    """Propagator for a ramp, cached per (size, coupling, fields, velocity).

    Only the upward direction is integrated; the reversed ramp is the
    transpose of the forward propagator and is derived from the same cache
    entry, so results are independent of call order.
    """
    lo, hi = sorted((protocol.h_start, protocol.h_end))
    key = (spec.n_sites, spec.coupling, lo, hi, protocol.velocity)
    with _cache_lock:
        up = _cache.get(key)
    if up is None:
        up = _integrate_up(spec.n_sites, spec.coupling, lo, hi, protocol.velocity)
        with _cache_lock:
            up = _cache.setdefault(key, up)
    if protocol.h_start <= protocol.h_end:
        return up
    return Propagator(
        matrix=up.matrix.T,
        h_start=protocol.h_start,
        h_end=protocol.h_end,
        velocity=protocol.velocity,
        t_elapsed=up.t_elapsed,
        defect=up.defect,
    )


def evolve_correlations(c: CorrelationMatrix, p: Propagator) -> CorrelationMatrix:
    """Push a Gaussian state through a quench: C -> W C W^dag."""
    if c.n_sites != p.n_sites:
        raise ValueError("correlation matrix and propagator sizes differ")
    g2 = p.matrix @ c.full() @ p.matrix.conj().T
    n = c.n_sites
    return CorrelationMatrix(g_block=g2[:n, :n], f_block=g2[:n, n:])


def stroke_work(e_start: float, e_end: float) -> float:
    """Work performed by the system across one unitary stroke.

    Takes the energies at the two ends of the stroke; positive when the
    internal energy decreased, so work was extracted.
    """
    return e_start - e_end


def clear_caches() -> None:
    """Drop cached propagators (mainly for benchmarks and tests)."""
    with _cache_lock:
        _cache.clear()
