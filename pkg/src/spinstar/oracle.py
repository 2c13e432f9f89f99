"""Brute-force verification in the full 2^(N+1)-dimensional space.

Everything here is deliberately small and dumb: build the complete
Hamiltonian, diagonalize it, and compare projections against the sector
machinery. Bit convention for basis index i: bit 0 is the central spin,
bits 1..N are bath sites 1..N, a set bit means up. So basis state
|central=c, up set S> has index c + sum_{j in S} 2^j.

The full Hamiltonian uses Pauli z operators (eigenvalues +-1):
diagonal omega0*(2c - 1) + omega*(2*popcount(S) - N), with flip-flop
couplings alpha_j between (central up, j down) and (central down, j up).
This is lab-frame truth; sector trajectories must be taken to the lab
frame (or the projection rotated) before amplitudes are compared.
"""

from __future__ import annotations

from typing import IO

import numpy as np

from .errors import SectorSizeError, ValidationError
from .evolution import AmplitudePair, sector_energy_shift
from .model import ModelParams
from .tuples import SectorBasis, SpinTuple

#: Hard cap on bath size for the oracle (2^13 = 8192 dimensional space).
ORACLE_MAX_SITES = 12


def basis_index(central_up: bool, up_sites: SpinTuple, n_sites: int) -> int:
    """Index of the product state with the given spins up."""
    idx = 1 if central_up else 0
    for j in up_sites:
        if not 1 <= j <= n_sites:
            raise ValidationError(f"site {j} outside [1, {n_sites}]")
        idx += 1 << j
    return idx


def _check_cap(n_sites: int) -> None:
    if n_sites > ORACLE_MAX_SITES:
        raise SectorSizeError(
            f"oracle is capped at N={ORACLE_MAX_SITES} bath spins, got {n_sites}"
        )


def build_full_hamiltonian(params: ModelParams) -> np.ndarray:
    """Dense real symmetric Hamiltonian on all 2^(N+1) product states."""
    _check_cap(params.n_sites)
    n = params.n_sites
    dim = 1 << (n + 1)
    h = np.zeros((dim, dim))
    for idx in range(dim):
        central = idx & 1
        pop = bin(idx >> 1).count("1")
        h[idx, idx] = params.omega0 * (2 * central - 1) + params.omega * (2 * pop - n)
    for idx in range(dim):
        if not idx & 1:
            continue
        for j in range(1, n + 1):
            if idx & (1 << j):
                continue
            partner = (idx ^ 1) | (1 << j)
            h[idx, partner] = params.couplings[j - 1]
            h[partner, idx] = params.couplings[j - 1]
    return h


def total_sz_diagonal(n_sites: int) -> np.ndarray:
    """Diagonal of the total magnetization operator in spin-1/2 units:
    popcount(index) - (N+1)/2. The full operator is diagonal, so this
    vector is all there is to it."""
    dim = 1 << (n_sites + 1)
    return np.array(
        [bin(i).count("1") - 0.5 * (n_sites + 1) for i in range(dim)]
    )


def propagate_full(
    params: ModelParams, psi0: np.ndarray, times: np.ndarray
) -> np.ndarray:
    """exp(-i H t) psi0 on each time, via one Hermitian eigendecomposition.
    Returns an array of states, one row per time."""
    _check_cap(params.n_sites)
    t = np.asarray(times, dtype=float)
    psi0 = np.asarray(psi0, dtype=complex)
    h = build_full_hamiltonian(params)
    if psi0.shape != (h.shape[0],):
        raise ValidationError(
            f"state has dim {psi0.shape}, Hamiltonian needs {h.shape[0]}"
        )
    w, q = np.linalg.eigh(h)
    y0 = q.T @ psi0
    return (np.exp(-1j * np.outer(t, w)) * y0[np.newaxis, :]) @ q.T


def propagate_full_rk4(
    params: ModelParams,
    psi0: np.ndarray,
    times: np.ndarray,
    max_step: float = 0.005,
) -> np.ndarray:
    """Classical fixed-step 4th-order integration of dpsi/dt = -i H psi.

    A second, algorithmically unrelated oracle path: no diagonalization
    anywhere. Accuracy is O(max_step^4); tighten max_step as needed.
    """
    _check_cap(params.n_sites)
    if max_step <= 0.0:
        raise ValidationError(f"max_step must be positive, got {max_step}")
    t = np.asarray(times, dtype=float)
    h = build_full_hamiltonian(params)

    def rhs(psi: np.ndarray) -> np.ndarray:
        return -1j * (h @ psi)

    out = np.zeros((t.size, h.shape[0]), dtype=complex)
    psi = np.asarray(psi0, dtype=complex).copy()
    now = 0.0
    for i, target in enumerate(t):
        span = target - now
        if span < 0.0:
            raise ValidationError("times must not precede t=0 for the integrator")
        n_steps = max(1, int(np.ceil(span / max_step))) if span > 0.0 else 0
        for _ in range(n_steps):
            dt = span / n_steps
            k1 = rhs(psi)
            k2 = rhs(psi + 0.5 * dt * k1)
            k3 = rhs(psi + 0.5 * dt * k2)
            k4 = rhs(psi + dt * k3)
            psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        now = target
        out[i] = psi
    return out


def embed_pair(
    pair: AmplitudePair, basis_a: SectorBasis, basis_b: SectorBasis
) -> np.ndarray:
    """Place sector amplitudes into a full 2^(N+1) state vector."""
    n = basis_a.n_sites
    psi = np.zeros(1 << (n + 1), dtype=complex)
    for i, t in enumerate(basis_a.tuples()):
        psi[basis_index(True, t, n)] = pair.a[i]
    for i, t in enumerate(basis_b.tuples()):
        psi[basis_index(False, t, n)] = pair.b[i]
    return psi


def project_to_sector(
    psi: np.ndarray,
    p: int,
    basis_a: SectorBasis,
    basis_b: SectorBasis,
    params: ModelParams | None = None,
    time: float = 0.0,
) -> AmplitudePair:
    """Read sector amplitudes out of a full state vector.

    With params given, the inverse of the lab-frame phase is applied
    (multiplication by exp(+i E0 time)), so the result is directly
    comparable to rotating-frame trajectories.
    """
    if basis_a.p != p or basis_b.p != p + 1:
        raise ValidationError(
            f"bases (p={basis_a.p}, {basis_b.p}) do not match sector p={p}"
        )
    n = basis_a.n_sites
    a = np.array([psi[basis_index(True, t, n)] for t in basis_a.tuples()], dtype=complex)
    b = np.array([psi[basis_index(False, t, n)] for t in basis_b.tuples()], dtype=complex)
    if params is not None:
        phase = np.exp(1j * sector_energy_shift(params, p) * time)
        a = a * phase
        b = b * phase
    return AmplitudePair(a, b)


def out_of_sector_mass(
    psi: np.ndarray, p: int, basis_a: SectorBasis, basis_b: SectorBasis
) -> float:
    """Probability weight outside the sector's basis states; should stay
    at rounding level for sector-supported initial conditions."""
    pair = project_to_sector(psi, p, basis_a, basis_b)
    total = float(np.vdot(psi, psi).real)
    return total - pair.norm_sq()


def dump_state(psi: np.ndarray, stream: IO[str]) -> None:
    """Write one 'index real imaginary' line per amplitude (17 significant
    digits), using the module's bit convention for the index."""
    for i, amp in enumerate(np.asarray(psi, dtype=complex)):
        stream.write(
            f"{i} {format(amp.real, '.17g')} {format(amp.imag, '.17g')}\n"
        )
