"""Free-fermion description of the open transverse-field Ising chain.

The spin chain

    H = -J sum_j sx_j sx_{j+1} - h sum_j sz_j

maps under a Jordan-Wigner transformation onto quadratic fermions, so all
observables used by the Otto cycle follow from N x N matrices instead of the
2^N spin space.  This module builds the Bogoliubov-de Gennes (BdG) matrix of
the chain, diagonalizes it, fills thermal mode occupations, assembles Gaussian
correlation matrices and contracts them into energy expectation values.

Conventions: the BdG matrix is the real particle-hole-symmetric block form
[[A, B], [-B, -A]] with spectrum +/-lambda_k; physical quasiparticle energies
are eps_k = 2*lambda_k, so the decoupled limit J -> 0 gives eps = 2h (a single
spin flip costs 2h).  The many-body energy is sum_k eps_k*(n_k - 1/2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Below this scale an eigenvalue of the BdG matrix is treated as a zero mode
# and its eigenvector pair is rebuilt explicitly from particle-hole symmetry.
ZERO_MODE_TOL = 1e-12

# Largest negative eigenvalue tolerated before clamping energies to zero.
ENERGY_CLAMP_TOL = 1e-12


class DiagonalizationError(RuntimeError):
    """Eigen-solver failure or a structurally inconsistent BdG spectrum."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ChainSpec:
    """Static definition of the working substance: size, coupling, boundary."""

    n_sites: int
    coupling: float = 1.0
    boundary: str = "open"

    def __post_init__(self) -> None:
        if self.n_sites < 2:
            raise ValueError("n_sites >= 2 required")
        if not (self.coupling > 0):
            raise ValueError("coupling > 0 required")
        if self.boundary != "open":
            raise ValueError("only open boundary conditions are supported")


@dataclass(frozen=True)
class BdGMatrix:
    """Single-particle blocks A (symmetric) and B (antisymmetric) at field h."""

    a_block: np.ndarray
    b_block: np.ndarray
    field: float

    def __post_init__(self) -> None:
        a = np.asarray(self.a_block, dtype=float)
        b = np.asarray(self.b_block, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
            raise ValueError("a_block and b_block must be square with equal shape")
        if not np.allclose(a, a.T, atol=1e-12, rtol=0):
            raise ValueError("a_block must be symmetric")
        if not np.allclose(b, -b.T, atol=1e-12, rtol=0):
            raise ValueError("b_block must be antisymmetric")
        object.__setattr__(self, "a_block", _freeze(a))
        object.__setattr__(self, "b_block", _freeze(b))

    @property
    def n_sites(self) -> int:
        return self.a_block.shape[0]

    def full(self) -> np.ndarray:
        """Assemble the 2N x 2N particle-hole-symmetric matrix."""
        n = self.n_sites
        m = np.zeros((2 * n, 2 * n))
        m[:n, :n] = self.a_block
        m[:n, n:] = self.b_block
        m[n:, :n] = -self.b_block
        m[n:, n:] = -self.a_block
        return m


@dataclass(frozen=True)
class BogoliubovTransform:
    """Blocks U, V of the Bogoliubov rotation plus quasiparticle energies.

    Columns of [U; V] are the positive-energy eigenvectors of the BdG matrix;
    energies are sorted ascending and clamped to be nonnegative.
    """

    u_block: np.ndarray
    v_block: np.ndarray
    energies: np.ndarray

    def __post_init__(self) -> None:
        u = np.asarray(self.u_block, dtype=complex)
        v = np.asarray(self.v_block, dtype=complex)
        e = np.asarray(self.energies, dtype=float)
        n = u.shape[0]
        if u.shape != (n, n) or v.shape != (n, n) or e.shape != (n,):
            raise ValueError("inconsistent block shapes")
        if np.any(np.diff(e) < 0):
            raise ValueError("energies must be sorted ascending")
        if np.any(e < -ENERGY_CLAMP_TOL):
            raise ValueError("energies must be nonnegative")
        object.__setattr__(self, "u_block", _freeze(u))
        object.__setattr__(self, "v_block", _freeze(v))
        object.__setattr__(self, "energies", _freeze(e))

    @property
    def n_sites(self) -> int:
        return self.u_block.shape[0]

    def nambu(self) -> np.ndarray:
        """The unitary 2N x 2N matrix [[U, conj(V)], [V, conj(U)]]."""
        n = self.n_sites
        m = np.empty((2 * n, 2 * n), dtype=complex)
        m[:n, :n] = self.u_block
        m[:n, n:] = self.v_block.conj()
        m[n:, :n] = self.v_block
        m[n:, n:] = self.u_block.conj()
        return m


@dataclass(frozen=True)
class ModeOccupations:
    """Quasiparticle occupation numbers <b_k^dag b_k>, one per mode."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("values must be a vector")
        if np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
            raise ValueError("occupations must lie in [0, 1]")
        object.__setattr__(self, "values", _freeze(v))

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class CorrelationMatrix:
    """Two-point functions G_jl = <a_j a_l^dag> and F_jl = <a_j a_l>.

    Together with canonical anticommutation these blocks determine the full
    2N x 2N matrix of quadratic correlators, hence every observable of a
    Gaussian state.
    """

    g_block: np.ndarray
    f_block: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.g_block, dtype=complex)
        f = np.asarray(self.f_block, dtype=complex)
        n = g.shape[0]
        if g.shape != (n, n) or f.shape != (n, n):
            raise ValueError("g_block and f_block must be square with equal shape")
        object.__setattr__(self, "g_block", _freeze(g))
        object.__setattr__(self, "f_block", _freeze(f))

    @property
    def n_sites(self) -> int:
        return self.g_block.shape[0]

    def full(self) -> np.ndarray:
        """Assemble [[G, F], [F^dag, I - G^T]]."""
        n = self.n_sites
        m = np.empty((2 * n, 2 * n), dtype=complex)
        m[:n, :n] = self.g_block
        m[:n, n:] = self.f_block
        m[n:, :n] = self.f_block.conj().T
        m[n:, n:] = np.eye(n) - self.g_block.T
        return m


def build_bdg(spec: ChainSpec, h: float) -> BdGMatrix:
    """Assemble the BdG blocks of the chain at transverse field h."""
    if not np.isfinite(h):
        raise ValueError("field h must be finite")
    n, j = spec.n_sites, spec.coupling
    a = np.zeros((n, n))
    b = np.zeros((n, n))
    np.fill_diagonal(a, h)
    for i in range(n - 1):
        a[i, i + 1] = a[i + 1, i] = -j / 2
        b[i, i + 1] = -j / 2
        b[i + 1, i] = +j / 2
    return BdGMatrix(a_block=a, b_block=b, field=float(h))


def _rebuild_zero_modes(vec: np.ndarray, lam: np.ndarray, n: int) -> np.ndarray:
    """Return the positive-energy columns with zero modes particle-hole paired.

    The eigensolver may mix the degenerate +0/-0 subspace arbitrarily.  The
    particle-hole involution P (site-block swap) maps the zero space to itself;
    splitting it into P-even and P-odd vectors and recombining one of each
    yields columns z with <z, Pz> = 0, which restores the Bogoliubov
    constraints exactly.
    """
    cols = vec[:, n:].copy()
    zero_all = np.flatnonzero(np.abs(lam) < ZERO_MODE_TOL)
    if zero_all.size == 0:
        return cols
    if zero_all.size % 2:
        raise DiagonalizationError("zero modes must come in particle-hole pairs")
    m = zero_all.size // 2
    z = vec[:, zero_all]
    pz = np.vstack([z[n:], z[:n]])  # involution P applied to the zero space
    s = z.T @ pz
    sig, rot = np.linalg.eigh(s)
    if not (np.all(sig[:m] < 0) and np.all(sig[m:] > 0)):
        raise DiagonalizationError("unbalanced particle-hole split of zero modes")
    odd = z @ rot[:, :m]
    even = z @ rot[:, m:]
    cols[:, :m] = (even + odd) / np.sqrt(2.0)
    return cols


@lru_cache(maxsize=None)
def _diagonalize(n: int, coupling: float, h: float) -> BogoliubovTransform:
    mat = build_bdg(ChainSpec(n_sites=n, coupling=coupling), h)
    try:
        lam, vec = np.linalg.eigh(mat.full())
    except np.linalg.LinAlgError as exc:
        raise DiagonalizationError(f"eigen-solver failed at h={h}") from exc
    cols = _rebuild_zero_modes(vec, lam, n)
    # deterministic signs: make the dominant entry of each column positive
    lead = np.abs(cols).argmax(axis=0)
    signs = np.sign(cols[lead, np.arange(n)])
    signs[signs == 0] = 1.0
    cols = cols * signs
    energies = 2.0 * lam[n:]
    if energies.min(initial=0.0) < -ENERGY_CLAMP_TOL:
        raise DiagonalizationError("positive branch contains negative energies")
    energies = np.where(np.abs(lam[n:]) < ZERO_MODE_TOL, 0.0, energies)
    energies = np.maximum(energies, 0.0)
    return BogoliubovTransform(
        u_block=cols[:n].astype(complex),
        v_block=cols[n:].astype(complex),
        energies=energies,
    )


def diagonalize_bdg(m: BdGMatrix) -> BogoliubovTransform:
    """Diagonalize a chain BdG matrix into (U, V, eps) with eps_k = 2*lambda_k."""
    n = m.n_sites
    coupling = -2.0 * m.a_block[0, 1]
    return _diagonalize(n, float(coupling), float(m.field))


def analytic_dispersion(coupling: float, h: float, k):
    """Bulk quasiparticle energy 2J*sqrt(1 + (h/J)^2 - 2(h/J)cos k).

    Thermodynamic-limit form, used only as a large-N reference band.
    """
    if not (coupling > 0):
        raise ValueError("coupling > 0 required")
    r = h / coupling
    return 2.0 * coupling * np.sqrt(1.0 + r * r - 2.0 * r * np.cos(k))


def thermal_occupations(energies, temperature: float) -> ModeOccupations:
    """Fermi-Dirac occupations 1/(1 + exp(eps/T)); T = 0 fills only zero modes."""
    if temperature < 0:
        raise ValueError("temperature >= 0 required")
    e = np.asarray(energies, dtype=float)
    if np.any(e < 0):
        raise ValueError("energies must be >= 0")
    if temperature == 0:
        values = np.where(e > 0, 0.0, 0.5)
    else:
        # tanh form avoids overflow for eps >> T and gives exactly 1/2 at eps = 0
        values = 0.5 * (1.0 - np.tanh(e / (2.0 * temperature)))
    return ModeOccupations(values=values)


def correlation_matrix(t: BogoliubovTransform, n: ModeOccupations) -> CorrelationMatrix:
    """Assemble the Gaussian state with occupations n in the eigenbasis of t."""
    if len(n) != t.n_sites:
        raise ValueError("occupation vector length must match transform size")
    uu = t.nambu()
    d = np.concatenate([1.0 - n.values, n.values])
    g2 = (uu * d) @ uu.conj().T
    ns = t.n_sites
    return CorrelationMatrix(g_block=g2[:ns, :ns], f_block=g2[:ns, ns:])


def mode_occupations(t: BogoliubovTransform, c: CorrelationMatrix) -> ModeOccupations:
    """Project a correlation matrix onto the quasiparticle basis of t."""
    if t.n_sites != c.n_sites:
        raise ValueError("transform and correlation matrix sizes differ")
    uu = t.nambu()
    diag = np.einsum("ik,ij,jk->k", uu.conj(), c.full(), uu)
    values = 1.0 - diag[: t.n_sites].real
    # guard tiny numerical excursions outside [0, 1]
    values = np.clip(values, -1e-12, 1.0 + 1e-12)
    return ModeOccupations(values=values)


def energy_expectation(spec: ChainSpec, h: float, c: CorrelationMatrix) -> float:
    """Contract a correlation matrix into <H> at field h.

    Raises if the contraction picks up an imaginary part above 1e-8, which
    signals a corrupted (non-Hermitian) state.
    """
    if c.n_sites != spec.n_sites:
        raise ValueError("correlation matrix size must match spec")
    g, f = c.g_block, c.f_block
    j = spec.coupling
    hop = np.trace(g, offset=1) + np.trace(g, offset=-1)
    pair = np.trace(f, offset=1)
    onsite = spec.n_sites - 2.0 * np.trace(g)
    total = j * (hop + pair + np.conj(pair)) + h * onsite
    if abs(total.imag) > 1e-8:
        raise ValueError(f"energy has imaginary part {total.imag:.3e}; state corrupted")
    return float(total.real)


def clear_caches() -> None:
    """Drop memoized diagonalizations (mainly for benchmarks and tests)."""
    _diagonalize.cache_clear()
