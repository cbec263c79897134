"""Shared fixtures and helpers for the test suite."""
import numpy as np
import pytest
from hypothesis import settings

from otto_ising import BathSpec, ChainSpec, CycleSpec, gibbs_state

settings.register_profile("suite", max_examples=50, deadline=None, derandomize=True)
settings.load_profile("suite")

# Shared sweep grid: several expensive tests slice this exact array so that
# identical CycleSpec values hit the propagator cache instead of re-integrating.
H_FINE = np.arange(0.6, 1.6 + 1e-9, 0.02)

_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])


def dense_site_occupations(spec: ChainSpec, h: float, temperature: float) -> np.ndarray:
    """Fermion number <n_j> per site from the dense Gibbs state."""
    rho = gibbs_state(spec, h, temperature).matrix
    n = spec.n_sites
    out = np.empty(n)
    for j in range(n):
        op = np.array([[1.0]])
        for site in range(n):
            op = np.kron(op, _SZ if site == j else np.eye(2))
        out[j] = 0.5 * (1.0 - np.trace(rho @ op).real)
    return out


def make_cycle_spec(
    n: int = 6,
    h_i: float = 0.75,
    delta_h: float = 0.5,
    velocity: float = 0.05,
    t_cold: float = 0.25,
    t_hot: float = 0.5,
    thermalization="complete",
) -> CycleSpec:
    return CycleSpec(
        chain=ChainSpec(n),
        h_i=h_i,
        h_f=h_i + delta_h,
        velocity=velocity,
        bath_cold=BathSpec(t_cold),
        bath_hot=BathSpec(t_hot),
        thermalization=thermalization,
    )


@pytest.fixture
def tmp_out(tmp_path):
    return str(tmp_path)
