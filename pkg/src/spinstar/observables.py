"""Physical quantities extracted from amplitude trajectories.

All magnetizations use spin-1/2 units (+-1/2), so the central-spin
polarization is sum|a|^2 - 1/2 and equivalently 1/2 - sum|b|^2 on a
normalized state. The equality of those two expressions is itself a
useful runtime self-test, so the central observable computes both and
complains when they drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, ValidationError
from .evolution import Trajectory
from .model import InitialCondition
from .tuples import SectorBasis, rank

#: Largest tolerated gap between the two central-magnetization expressions.
SZ_IDENTITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ObservableSeries:
    """One named real-valued series on a time grid."""

    times: np.ndarray
    values: np.ndarray
    name: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValidationError("times and values must be 1-d arrays of equal length")


def _dual_sz_central(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    via_a = (np.abs(traj.a) ** 2).sum(axis=1) - 0.5
    via_b = 0.5 - (np.abs(traj.b) ** 2).sum(axis=1)
    return via_a, via_b


def sz_central(traj: Trajectory) -> ObservableSeries:
    """Central-spin polarization <S_z^A>.

    Computed from both blocks (population of a minus 1/2, and 1/2 minus
    population of b); the mean is returned. A gap above SZ_IDENTITY_TOL
    means the state is not normalized and raises ConsistencyError.
    """
    via_a, via_b = _dual_sz_central(traj)
    gap = float(np.abs(via_a - via_b).max())
    if gap > SZ_IDENTITY_TOL:
        raise ConsistencyError(
            f"central-magnetization expressions disagree by {gap:.3e} "
            f"(> {SZ_IDENTITY_TOL:.0e}); trajectory norm has drifted"
        )
    return ObservableSeries(traj.times, 0.5 * (via_a + via_b), "sz_central")


def sz_central_discrepancy(traj: Trajectory) -> ObservableSeries:
    """Diagnostic gap between the two <S_z^A> expressions (ideally 0)."""
    via_a, via_b = _dual_sz_central(traj)
    return ObservableSeries(traj.times, via_a - via_b, "sz_central_discrepancy")


def _membership_matrix(basis: SectorBasis) -> np.ndarray:
    """0/1 matrix M[m, j-1] = 1 iff site j belongs to tuple number m."""
    m = np.zeros((basis.dim, basis.n_sites))
    for i, t in enumerate(basis.tuples()):
        for j in t:
            m[i, j - 1] = 1.0
    return m


def site_occupations(traj: Trajectory) -> np.ndarray:
    """Probability of each bath site being up, shape (n_times, N)."""
    basis_a = SectorBasis(traj.n_sites, traj.p)
    basis_b = SectorBasis(traj.n_sites, traj.p + 1)
    occ = (np.abs(traj.a) ** 2) @ _membership_matrix(basis_a)
    occ += (np.abs(traj.b) ** 2) @ _membership_matrix(basis_b)
    return occ


def sz_site(traj: Trajectory, j: int) -> ObservableSeries:
    """Bath-site polarization <sigma_z^j>/2 = P(site j up) - 1/2."""
    if not 1 <= j <= traj.n_sites:
        raise ValidationError(f"site {j} outside [1, {traj.n_sites}]")
    return ObservableSeries(
        traj.times, site_occupations(traj)[:, j - 1] - 0.5, f"sz_site_{j}"
    )


def total_sz(traj: Trajectory) -> ObservableSeries:
    """Total magnetization <S_z^A> + sum_j <sigma_z^j>/2; conserved, equal
    to p + 1/2 - N/2 on a normalized sector state."""
    central = 0.5 * sum(_dual_sz_central(traj))
    bath = (site_occupations(traj) - 0.5).sum(axis=1)
    return ObservableSeries(traj.times, central + bath, "total_sz")


def return_probability(traj: Trajectory, init: InitialCondition) -> ObservableSeries:
    """|a_{rank(up_sites)}(t)|^2, the survival probability of the initial
    basis state. Frame-independent."""
    if init.p != traj.p:
        raise ValidationError(
            f"initial condition has p={init.p}, trajectory has p={traj.p}"
        )
    idx = rank(init.up_sites, SectorBasis(traj.n_sites, traj.p))
    return ObservableSeries(
        traj.times, np.abs(traj.a[:, idx]) ** 2, "return_probability"
    )


def _parabolic_refine(x: np.ndarray, y: np.ndarray, i: int) -> float:
    """Vertex of the parabola through points i-1, i, i+1; falls back to
    x[i] when the fit degenerates (flat plateau)."""
    x1, x2, x3 = x[i - 1], x[i], x[i + 1]
    y1, y2, y3 = y[i - 1], y[i], y[i + 1]
    num = (x2 - x1) ** 2 * (y2 - y3) - (x2 - x3) ** 2 * (y2 - y1)
    den = (x2 - x1) * (y2 - y3) - (x2 - x3) * (y2 - y1)
    if den == 0.0:
        return float(x2)
    vertex = x2 - 0.5 * num / den
    if not x1 <= vertex <= x3:
        return float(x2)
    return float(vertex)


def detect_revivals(series: ObservableSeries, threshold: float) -> np.ndarray:
    """Times of local maxima exceeding threshold, refined off-grid by a
    three-point parabolic fit.

    Comparisons are non-strict, so on a flat plateau every sample above
    threshold is reported (a constant series of 1.0 yields every grid
    point); an unreachable threshold yields an empty result.
    """
    if series.values.size == 0:
        raise ValidationError("cannot detect revivals in an empty series")
    if threshold <= 0.0:
        raise ValidationError(f"threshold must be positive, got {threshold}")
    v = series.values
    t = series.times
    hits: list[float] = []
    for i in range(v.size):
        if v[i] <= threshold:
            continue
        left_ok = i == 0 or v[i] >= v[i - 1]
        right_ok = i == v.size - 1 or v[i] >= v[i + 1]
        if not (left_ok and right_ok):
            continue
        if 0 < i < v.size - 1 and (v[i] > v[i - 1] or v[i] > v[i + 1]):
            hits.append(_parabolic_refine(t, v, i))
        else:
            hits.append(float(t[i]))
    return np.asarray(hits)
