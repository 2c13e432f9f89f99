"""Closed-form time evolution of the sector amplitudes.

Four propagation paths, kept deliberately independent so they can
cross-check one another:

* closed_form_p0 -- the analytic single-frequency solution available
  when all bath spins start down (p = 0),
* evolve_closed_form -- the general spectral solution of the decoupled
  second-order systems, x(t) = Q cos(sqrt(L) t) Q^T x(0)
  + Q sin(sqrt(L) t) L^{-1/2} Q^T xdot(0), per block,
* evolve_series -- the truncated power series of that same solution,
  for validation only,
* evolve_first_order -- unitary propagation of the first-order sector
  system, exp(-i H t).

Detuning sign convention: the first-order equations are implemented as
i da/dt = s*delta*a + K b, i db/dt = -s*delta*b + K^T a. With
s = +1 (DELTA_SIGN_ANALYTIC) the complex p=0 amplitudes take the
textbook form a(t) = cos - i(delta/alpha_eff) sin; with s = -1
(DELTA_SIGN_LAB) the amplitudes match the full lab-frame propagator
after removing the sector energy shift E0 = omega*(2p - N) + omega.
The two conventions are complex conjugates of each other on real
initial data, and every probability is identical between them because
delta enters the second-order matrices only squared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .companion import SpectralDecomposition, build_first_order, coupling_block
from .errors import DecompositionError, ValidationError
from .model import InitialCondition, ModelParams, SectorShape, sector_shape
from .tuples import rank

#: Convention reproducing the analytic p=0 amplitude formulas verbatim.
DELTA_SIGN_ANALYTIC = 1.0

#: Convention matching the lab-frame propagator after the E0 shift.
DELTA_SIGN_LAB = -1.0

#: Crossover below which sin(sqrt(l) t)/sqrt(l) switches to its Taylor form.
_SMALL_PHASE = 1e-4

#: Relative allowance for negative eigenvalues of the (PSD) companion matrices.
_NEGATIVE_EIG_RTOL = 1e-10

#: Times per chunk when sweeping a grid, bounding temporary memory.
_CHUNK_ENTRIES = 4_000_000


@dataclass(frozen=True, eq=False)
class AmplitudePair:
    """Amplitudes (a over p-tuples, b over (p+1)-tuples) at one instant,
    in lexicographic rank order. Also reused for time-derivative pairs,
    which is why no unit-norm check lives here."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", np.asarray(self.a, dtype=complex))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=complex))
        if self.a.ndim != 1 or self.b.ndim != 1:
            raise ValidationError("amplitude blocks must be one-dimensional")

    def norm_sq(self) -> float:
        return float(np.vdot(self.a, self.a).real + np.vdot(self.b, self.b).real)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Amplitudes sampled on a strictly increasing time grid.

    a has shape (n_times, dim_a) and b (n_times, dim_b); frame is
    "rotating" (sector energy shift removed) or "lab".
    """

    times: np.ndarray
    a: np.ndarray
    b: np.ndarray
    frame: str
    n_sites: int
    p: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=complex))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=complex))
        if self.times.ndim != 1 or self.times.size == 0:
            raise ValidationError("times must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(self.times)):
            raise ValidationError("times must be finite")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValidationError("times must be strictly increasing")
        if self.a.shape[0] != self.times.size or self.b.shape[0] != self.times.size:
            raise ValidationError("amplitude arrays must have one row per time")
        if self.frame not in ("rotating", "lab"):
            raise ValidationError(f"unknown frame tag {self.frame!r}")

    @property
    def n_times(self) -> int:
        return self.times.size

    def state_at(self, index: int) -> AmplitudePair:
        return AmplitudePair(self.a[index], self.b[index])

    def norms(self) -> np.ndarray:
        """Total probability sum |a|^2 + |b|^2 at each time."""
        return (np.abs(self.a) ** 2).sum(axis=1) + (np.abs(self.b) ** 2).sum(axis=1)

    def max_norm_drift(self) -> float:
        norms = self.norms()
        return float(np.abs(norms - norms[0]).max())


def initial_state(init: InitialCondition, shape: SectorShape) -> AmplitudePair:
    """Basis product state: unit weight on the initial up-tuple in the
    a-block, empty b-block."""
    if init.p != shape.p:
        raise ValidationError(
            f"initial condition has p={init.p} but sector was built for p={shape.p}"
        )
    a = np.zeros(shape.dim_a, dtype=complex)
    a[rank(init.up_sites, shape.basis_a)] = 1.0
    b = np.zeros(shape.dim_b, dtype=complex)
    return AmplitudePair(a, b)


def initial_derivatives(
    x0: AmplitudePair,
    params: ModelParams,
    p: int,
    delta_sign: float = DELTA_SIGN_ANALYTIC,
) -> AmplitudePair:
    """One application of the first-order right-hand sides:
    da/dt = -i(s*delta*a + K b), db/dt = -i(-s*delta*b + K^T a)."""
    shape = sector_shape(params, p)
    if x0.a.shape[0] != shape.dim_a or x0.b.shape[0] != shape.dim_b:
        raise ValidationError(
            f"state dims ({x0.a.shape[0]}, {x0.b.shape[0]}) do not match sector "
            f"dims ({shape.dim_a}, {shape.dim_b}) for N={params.n_sites}, p={p}"
        )
    k = coupling_block(params, p)
    sd = delta_sign * params.delta
    da = -1j * (sd * x0.a + k @ x0.b)
    db = -1j * (-sd * x0.b + k.T @ x0.a)
    return AmplitudePair(da, db)


def _check_block_pair(
    decomp_a: SpectralDecomposition, decomp_b: SpectralDecomposition
) -> None:
    if decomp_a.kind != "A" or decomp_b.kind != "B":
        raise ValidationError(
            f"expected kinds (A, B), got ({decomp_a.kind}, {decomp_b.kind})"
        )
    if (
        decomp_a.params_fingerprint != decomp_b.params_fingerprint
        or decomp_a.p != decomp_b.p
        or decomp_a.n_sites != decomp_b.n_sites
    ):
        raise ValidationError(
            "spectral decompositions come from different models or sectors"
        )


def _block_closed_form(
    decomp: SpectralDecomposition,
    x0: np.ndarray,
    v0: np.ndarray,
    times: np.ndarray,
) -> np.ndarray:
    """x(t) rows for one block: Q cos(sqrt(L)t) Q^T x0 + Q f_s(L,t) Q^T v0,
    with f_s(l,t) = sin(sqrt(l)t)/sqrt(l) and its small-argument Taylor
    branch t - l t^3/6 below a sqrt(l)*t crossover."""
    dim = decomp.dim
    out = np.zeros((times.size, dim), dtype=complex)
    if dim == 0:
        return out
    w = decomp.eigenvalues
    floor = -_NEGATIVE_EIG_RTOL * max(1.0, float(w[-1]))
    if float(w[0]) < floor:
        raise DecompositionError(
            f"kind-{decomp.kind} matrix has eigenvalue {w[0]:.6e} below {floor:.1e}; "
            "companion matrices must be positive semidefinite"
        )
    lam = np.where(w > decomp.zero_threshold, w, 0.0)
    sq = np.sqrt(lam)
    q = decomp.eigenvectors
    y0 = q.T @ x0
    w0 = q.T @ v0
    denom = np.where(sq == 0.0, 1.0, sq)[np.newaxis, :]
    chunk = max(1, _CHUNK_ENTRIES // max(dim, 1))
    for lo in range(0, times.size, chunk):
        tc = times[lo : lo + chunk, np.newaxis]
        phase = sq[np.newaxis, :] * tc
        fc = np.cos(phase)
        small = np.abs(phase) < _SMALL_PHASE
        fs = np.where(small, tc - lam[np.newaxis, :] * tc**3 / 6.0, np.sin(phase) / denom)
        y = fc * y0[np.newaxis, :] + fs * w0[np.newaxis, :]
        out[lo : lo + chunk] = y @ q.T
    return out


def evolve_closed_form(
    x0: AmplitudePair,
    v0: AmplitudePair,
    decomp_a: SpectralDecomposition,
    decomp_b: SpectralDecomposition,
    times: np.ndarray,
) -> Trajectory:
    """Exact spectral solution of the decoupled second-order systems,
    sampled at the given times. Rotating frame."""
    _check_block_pair(decomp_a, decomp_b)
    if x0.a.shape[0] != decomp_a.dim or x0.b.shape[0] != decomp_b.dim:
        raise ValidationError("initial state dims do not match the decompositions")
    if v0.a.shape[0] != decomp_a.dim or v0.b.shape[0] != decomp_b.dim:
        raise ValidationError("initial derivative dims do not match the decompositions")
    t = np.asarray(times, dtype=float)
    a = _block_closed_form(decomp_a, x0.a, v0.a, t)
    b = _block_closed_form(decomp_b, x0.b, v0.b, t)
    return Trajectory(
        times=t, a=a, b=b, frame="rotating", n_sites=decomp_a.n_sites, p=decomp_a.p
    )


def evolve_series(
    x0: AmplitudePair,
    v0: AmplitudePair,
    matrix_a,
    matrix_b,
    t: float,
    terms: int = 40,
) -> AmplitudePair:
    """Truncated power series of the second-order solution at one time.

    sum_k (-1)^k [ t^{2k}/(2k)! X^k x0 + t^{2k+1}/(2k+1)! X^k v0 ]
    per block. Validation path only; useful while ||X|| t^2 stays
    small (roughly <= 25 at the default 40 terms).
    """
    if terms < 1:
        raise ValidationError(f"terms must be >= 1, got {terms}")

    def block(mat, x, v):
        acc = np.zeros_like(x)
        yk = x.copy()
        zk = v.copy()
        c_cos = 1.0
        c_sin = float(t)
        for k in range(terms):
            acc = acc + c_cos * yk + c_sin * zk
            if k + 1 == terms:
                break
            yk = mat @ yk
            zk = mat @ zk
            c_cos *= -t * t / ((2 * k + 1) * (2 * k + 2))
            c_sin *= -t * t / ((2 * k + 2) * (2 * k + 3))
        return acc

    sp_a = matrix_a.matrix if hasattr(matrix_a, "matrix") else matrix_a
    sp_b = matrix_b.matrix if hasattr(matrix_b, "matrix") else matrix_b
    return AmplitudePair(block(sp_a, x0.a, v0.a), block(sp_b, x0.b, v0.b))


def closed_form_p0(params: ModelParams, times: np.ndarray) -> Trajectory:
    """Analytic p=0 trajectory (all bath spins initially down).

    a(t) = cos(w_e t) - i (delta/w_e) sin(w_e t),
    b_j(t) = -i (alpha_j/w_e) sin(w_e t), w_e = effective_frequency.
    The initial state revives exactly at every multiple of 2 pi / w_e.
    Degenerate case w_e = 0 (all couplings and the detuning vanish):
    the state is stationary, a(t) = 1. Uses the s = +1 sign convention.
    """
    t = np.asarray(times, dtype=float)
    w_e = params.effective_frequency
    alphas = params.coupling_array()
    if w_e == 0.0:
        a = np.ones((t.size, 1), dtype=complex)
        b = np.zeros((t.size, params.n_sites), dtype=complex)
    else:
        s = np.sin(w_e * t)
        a = (np.cos(w_e * t) - 1j * (params.delta / w_e) * s)[:, np.newaxis]
        b = (-1j / w_e) * s[:, np.newaxis] * alphas[np.newaxis, :]
    return Trajectory(times=t, a=a, b=b, frame="rotating", n_sites=params.n_sites, p=0)


def evolve_first_order(
    params: ModelParams,
    p: int,
    x0: AmplitudePair,
    times: np.ndarray,
    delta_sign: float = DELTA_SIGN_ANALYTIC,
) -> Trajectory:
    """Unitary propagation exp(-i H t) of the stacked first-order system.

    Independent of the closed-form route: diagonalizes the Hermitian
    sector matrix directly instead of the two companion blocks.
    """
    shape = sector_shape(params, p)
    if x0.a.shape[0] != shape.dim_a or x0.b.shape[0] != shape.dim_b:
        raise ValidationError(
            f"state dims ({x0.a.shape[0]}, {x0.b.shape[0]}) do not match sector "
            f"dims ({shape.dim_a}, {shape.dim_b})"
        )
    t = np.asarray(times, dtype=float)
    h = build_first_order(params, p, delta_sign=delta_sign)
    w, q = np.linalg.eigh(h)
    y0 = q.T @ np.concatenate([x0.a, x0.b])
    out = np.zeros((t.size, shape.dim_total), dtype=complex)
    chunk = max(1, _CHUNK_ENTRIES // max(shape.dim_total, 1))
    for lo in range(0, t.size, chunk):
        phases = np.exp(-1j * np.outer(t[lo : lo + chunk], w))
        out[lo : lo + chunk] = (phases * y0[np.newaxis, :]) @ q.T
    return Trajectory(
        times=t,
        a=out[:, : shape.dim_a],
        b=out[:, shape.dim_a :],
        frame="rotating",
        n_sites=params.n_sites,
        p=p,
    )


def sector_energy_shift(params: ModelParams, p: int) -> float:
    """Constant diagonal energy E0 = omega*(2p - N) + omega removed when
    passing to the rotating frame; restoring it multiplies all
    amplitudes by exp(-i E0 t)."""
    return params.omega * (2 * p - params.n_sites) + params.omega


def to_lab_frame(traj: Trajectory, params: ModelParams, p: int | None = None) -> Trajectory:
    """Restore the global sector phase exp(-i E0 t). Probabilities are
    untouched; only the complex phases change."""
    if traj.frame != "rotating":
        raise ValidationError(f"expected a rotating-frame trajectory, got {traj.frame!r}")
    if p is None:
        p = traj.p
    elif p != traj.p:
        raise ValidationError(f"trajectory has p={traj.p}, got p={p}")
    phase = np.exp(-1j * sector_energy_shift(params, p) * traj.times)
    return Trajectory(
        times=traj.times,
        a=traj.a * phase[:, np.newaxis],
        b=traj.b * phase[:, np.newaxis],
        frame="lab",
        n_sites=traj.n_sites,
        p=traj.p,
    )
