"""Time-stepping kernels for the quench propagator.

The Heisenberg evolution of the 2N x 2N Bogoliubov propagator reduces to two
coupled N x N complex systems

    phi'[j] = -2i * (h(t) * psi[j] - J * psi[j-1])
    psi'[j] = -2i * (h(t) * phi[j] - J * phi[j+1])

with h(t) = h0 + v*t (v signed) and open ends, so each RK4 stage is a banded
update instead of a dense matrix product.  Two interchangeable backends
implement the same chunk step: a numba-compiled loop nest and a pure-numpy
slice version.  Selection is via the OTTO_ISING_BACKEND environment variable
("numba" or "numpy"); the default prefers numba when it imports.

Kernels advance phi and psi in place and carry no normalization logic; the
caller re-unitarizes between chunks.
"""

from __future__ import annotations

import os

import numpy as np

BACKEND_ENV = "OTTO_ISING_BACKEND"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    numba = None
    HAVE_NUMBA = False


def rk4_chunk_numpy(
    phi: np.ndarray,
    psi: np.ndarray,
    t0: float,
    dt: float,
    nsteps: int,
    h0: float,
    v: float,
    coupling: float,
) -> None:
    """Advance (phi, psi) through nsteps fixed RK4 steps using array slices."""

    def deriv(p, s, h):
        dp = h * s
        dp[1:] -= coupling * s[:-1]
        ds = h * p
        ds[:-1] -= coupling * p[1:]
        return -2j * dp, -2j * ds

    for step in range(nsteps):
        t = t0 + step * dt
        ha = h0 + v * t
        hm = h0 + v * (t + 0.5 * dt)
        hb = h0 + v * (t + dt)
        k1p, k1s = deriv(phi, psi, ha)
        k2p, k2s = deriv(phi + 0.5 * dt * k1p, psi + 0.5 * dt * k1s, hm)
        k3p, k3s = deriv(phi + 0.5 * dt * k2p, psi + 0.5 * dt * k2s, hm)
        k4p, k4s = deriv(phi + dt * k3p, psi + dt * k3s, hb)
        phi += (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        psi += (dt / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)


if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _deriv_nb(phi, psi, h, coupling, dphi, dpsi):
        n = phi.shape[0]
        for j in range(n):
            for c in range(n):
                a = h * psi[j, c]
                if j > 0:
                    a -= coupling * psi[j - 1, c]
                b = h * phi[j, c]
                if j < n - 1:
                    b -= coupling * phi[j + 1, c]
                dphi[j, c] = -2j * a
                dpsi[j, c] = -2j * b

    @numba.njit(cache=True, nogil=True)
    def rk4_chunk_numba(phi, psi, t0, dt, nsteps, h0, v, coupling):
        n = phi.shape[0]
        k1p = np.empty((n, n), np.complex128)
        k1s = np.empty((n, n), np.complex128)
        k2p = np.empty((n, n), np.complex128)
        k2s = np.empty((n, n), np.complex128)
        k3p = np.empty((n, n), np.complex128)
        k3s = np.empty((n, n), np.complex128)
        k4p = np.empty((n, n), np.complex128)
        k4s = np.empty((n, n), np.complex128)
        yp = np.empty((n, n), np.complex128)
        ys = np.empty((n, n), np.complex128)
        for step in range(nsteps):
            t = t0 + step * dt
            ha = h0 + v * t
            hm = h0 + v * (t + 0.5 * dt)
            hb = h0 + v * (t + dt)
            _deriv_nb(phi, psi, ha, coupling, k1p, k1s)
            for j in range(n):
                for c in range(n):
                    yp[j, c] = phi[j, c] + 0.5 * dt * k1p[j, c]
                    ys[j, c] = psi[j, c] + 0.5 * dt * k1s[j, c]
            _deriv_nb(yp, ys, hm, coupling, k2p, k2s)
            for j in range(n):
                for c in range(n):
                    yp[j, c] = phi[j, c] + 0.5 * dt * k2p[j, c]
                    ys[j, c] = psi[j, c] + 0.5 * dt * k2s[j, c]
            _deriv_nb(yp, ys, hm, coupling, k3p, k3s)
            for j in range(n):
                for c in range(n):
                    yp[j, c] = phi[j, c] + dt * k3p[j, c]
                    ys[j, c] = psi[j, c] + dt * k3s[j, c]
            _deriv_nb(yp, ys, hb, coupling, k4p, k4s)
            sixth = dt / 6.0
            for j in range(n):
                for c in range(n):
                    phi[j, c] += sixth * (
                        k1p[j, c] + 2.0 * k2p[j, c] + 2.0 * k3p[j, c] + k4p[j, c]
                    )
                    psi[j, c] += sixth * (
                        k1s[j, c] + 2.0 * k2s[j, c] + 2.0 * k3s[j, c] + k4s[j, c]
                    )

else:  # pragma: no cover - exercised only without numba installed
    rk4_chunk_numba = None


def available_backends() -> tuple[str, ...]:
    """Backends that can run on this interpreter."""
    return ("numba", "numpy") if HAVE_NUMBA else ("numpy",)


def active_backend() -> str:
    """Resolve the backend from OTTO_ISING_BACKEND (default: numba if present)."""
    choice = os.environ.get(BACKEND_ENV, "").strip().lower()
    if choice == "":
        return "numba" if HAVE_NUMBA else "numpy"
    if choice not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {choice!r}")
    if choice == "numba" and not HAVE_NUMBA:
        raise ValueError(f"{BACKEND_ENV}=numba requested but numba is not importable")
    return choice


def rk4_chunk(
    phi: np.ndarray,
    psi: np.ndarray,
    t0: float,
    dt: float,
    nsteps: int,
    h0: float,
    v: float,
    coupling: float,
) -> None:
    """Advance (phi, psi) in place on the backend chosen by the environment."""
    if active_backend() == "numba":
        rk4_chunk_numba(phi, psi, t0, dt, nsteps, h0, v, coupling)
    else:
        rk4_chunk_numpy(phi, psi, t0, dt, nsteps, h0, v, coupling)
