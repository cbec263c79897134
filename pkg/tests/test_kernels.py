import numpy as np
import pytest

from otto_ising import kernels
from otto_ising.kernels import (
    BACKEND_ENV,
    HAVE_NUMBA,
    active_backend,
    available_backends,
    rk4_chunk,
    rk4_chunk_numpy,
)


def _random_matrix_pair(n, seed):
    # the kernels only need complex square matrices, not unitary ones
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    r, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return np.ascontiguousarray(q + 0.1 * r), np.ascontiguousarray(q - 0.1 * r)


class TestBackendSelection:
    def test_numpy_always_available(self):
        assert "numpy" in available_backends()

    def test_numba_available_here(self):
        assert HAVE_NUMBA
        assert available_backends()[0] == "numba"

    def test_default_prefers_numba(self, monkeypatch):
        monkeypatch.delenv(BACKEND_ENV, raising=False)
        assert active_backend() == "numba"

    @pytest.mark.parametrize("choice", ["numpy", "numba"])
    def test_env_override(self, monkeypatch, choice):
        monkeypatch.setenv(BACKEND_ENV, choice)
        assert active_backend() == choice

    def test_env_rejects_unknown(self, monkeypatch):
        monkeypatch.setenv(BACKEND_ENV, "fortran")
        with pytest.raises(ValueError, match=BACKEND_ENV):
            active_backend()

    def test_empty_env_means_default(self, monkeypatch):
        monkeypatch.setenv(BACKEND_ENV, "")
        assert active_backend() == "numba"


class TestBackendAgreement:
    def test_backends_agree(self):
        n = 8
        phi0 = np.eye(n, dtype=complex)
        psi0 = np.eye(n, dtype=complex)
        args = (0.0, 1e-3, 500, 0.5, 0.01, 1.0)

        phi_a, psi_a = phi0.copy(), psi0.copy()
        kernels.rk4_chunk_numba(phi_a, psi_a, *args)
        phi_b, psi_b = phi0.copy(), psi0.copy()
        rk4_chunk_numpy(phi_b, psi_b, *args)

        assert np.max(np.abs(phi_a - phi_b)) < 1e-12
        assert np.max(np.abs(psi_a - psi_b)) < 1e-12

    def test_dispatcher_follows_env(self, monkeypatch):
        n = 4
        args = (0.0, 1e-3, 200, 0.8, 0.05, 1.0)
        results = {}
        for choice in ("numba", "numpy"):
            monkeypatch.setenv(BACKEND_ENV, choice)
            phi, psi = np.eye(n, dtype=complex), np.eye(n, dtype=complex)
            rk4_chunk(phi, psi, *args)
            results[choice] = (phi, psi)
        assert np.max(np.abs(results["numba"][0] - results["numpy"][0])) < 1e-12


class TestIntegratorAccuracy:
    @pytest.mark.parametrize("backend", ["numpy", "numba"])
    def test_single_site_phase_exact(self, backend):
        runner = rk4_chunk_numpy if backend == "numpy" else kernels.rk4_chunk_numba
        # one site, J plays no role: phi(t) = exp(-2i (h0 t + v t^2 / 2)) phi(0)
        h0, v, dt, nsteps = 0.7, 0.3, 1e-3, 1000
        phi = np.array([[1.0 + 0.0j]])
        psi = np.array([[1.0 + 0.0j]])
        runner(phi, psi, 0.0, dt, nsteps, h0, v, 1.0)
        t = dt * nsteps
        expected = np.exp(-2j * (h0 * t + 0.5 * v * t * t))
        assert abs(phi[0, 0] - expected) < 1e-10
        assert abs(psi[0, 0] - expected) < 1e-10

    def test_zero_coupling_keeps_diagonal_form(self):
        n = 6
        phi = np.eye(n, dtype=complex)
        psi = np.eye(n, dtype=complex)
        rk4_chunk_numpy(phi, psi, 0.0, 1e-3, 400, 0.9, 0.02, 0.0)
        off = ~np.eye(n, dtype=bool)
        assert np.max(np.abs(phi[off])) < 1e-12
        assert np.max(np.abs(psi[off])) < 1e-12
        gram = 0.5 * (phi.conj().T @ phi + psi.conj().T @ psi)
        assert np.max(np.abs(gram - np.eye(n))) < 1e-10

    def test_chunk_composition_matches_single_run(self):
        n = 5
        phi1, psi1 = _random_matrix_pair(n, 7)
        phi2, psi2 = phi1.copy(), psi1.copy()
        rk4_chunk_numpy(phi1, psi1, 0.0, 1e-3, 600, 0.5, 0.04, 1.0)
        rk4_chunk_numpy(phi2, psi2, 0.0, 1e-3, 250, 0.5, 0.04, 1.0)
        rk4_chunk_numpy(phi2, psi2, 0.25, 1e-3, 350, 0.5, 0.04, 1.0)
        assert np.max(np.abs(phi1 - phi2)) < 1e-12
        assert np.max(np.abs(psi1 - psi2)) < 1e-12
