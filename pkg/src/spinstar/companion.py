"""Real symmetric companion matrices of the second-order amplitude equations.

Within one conserved-polarization sector the amplitude pair (a, b) obeys
decoupled second-order equations d2a/dt2 = -A a and d2b/dt2 = -B b. Both
matrices are assembled entry by entry from the tuple adjacency structure:
a diagonal of delta^2 plus a sum of squared couplings, and off-diagonal
entries alpha_r * alpha_s exactly between tuples that differ in a single
site. The first-order sector matrix [[s*delta*I, K], [K^T, -s*delta*I]]
is kept as an independent cross-check; its square must reproduce A and B
block-wise.

Assembly is sparse (each row holds 1 + p(N-p), resp. 1 + (p+1)(N-p-1),
entries); dense storage appears only at decomposition time, since the
eigensolve dominates the cost anyway.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import IO, Callable

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import DecompositionError
from .model import ModelParams, sector_shape
from .tuples import SectorBasis, SpinTuple, off_diagonal_neighbors

#: Eigenvalues below this fraction of the largest one count as zero when
#: square roots are taken.
ZERO_EIGENVALUE_RTOL = 1e-12

#: Reconstruction residual allowance per unit dimension and entry scale.
RESIDUAL_RTOL = 1e-10


def params_fingerprint(params: ModelParams) -> str:
    """Short stable hash of the exact parameter floats.

    Spectral data carries this so that mixing decompositions from
    different models is caught instead of silently producing garbage.
    """
    h = hashlib.sha256()
    h.update(str(params.n_sites).encode())
    for x in (params.omega, params.omega0, *params.couplings):
        h.update(float(x).hex().encode())
    return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class CompanionMatrix:
    """One assembled sector matrix.

    kind is "A" (central-up block, dim C(N,p)) or "B" (central-down
    block, dim C(N,p+1)); p always names the sector polarization, so a
    kind-B matrix is indexed by (p+1)-tuples.
    """

    kind: str
    n_sites: int
    p: int
    dim: int
    matrix: scipy.sparse.csr_array
    params_fingerprint: str

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def row_nonzero_counts(self) -> np.ndarray:
        """Stored entries per row (explicit zeros count: storage is
        structural, one slot per adjacent tuple plus the diagonal)."""
        return np.diff(self.matrix.indptr)

    def max_abs_entry(self) -> float:
        if self.matrix.nnz == 0:
            return 0.0
        return float(np.abs(self.matrix.data).max())


def _assemble(
    basis: SectorBasis,
    alphas: np.ndarray,
    diag_for: Callable[[SpinTuple], float],
    kind: str,
    p: int,
    fingerprint: str,
) -> CompanionMatrix:
    # Upper triangle built once, then mirrored, so symmetry is exact.
    rank_of = basis.rank_map
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for i, t in enumerate(basis.tuples()):
        rows.append(i)
        cols.append(i)
        vals.append(float(diag_for(t)))
        for neighbor, added, removed in off_diagonal_neighbors(t, basis):
            j = rank_of[neighbor]
            if j > i:
                rows.append(i)
                cols.append(j)
                vals.append(float(alphas[added - 1] * alphas[removed - 1]))
    upper = len(rows)
    for k in range(upper):
        if rows[k] != cols[k]:
            rows.append(cols[k])
            cols.append(rows[k])
            vals.append(vals[k])
    mat = scipy.sparse.csr_array(
        (np.asarray(vals, dtype=float), (rows, cols)), shape=(basis.dim, basis.dim)
    )
    return CompanionMatrix(
        kind=kind,
        n_sites=basis.n_sites,
        p=p,
        dim=basis.dim,
        matrix=mat,
        params_fingerprint=fingerprint,
    )


def build_A(params: ModelParams, p: int, cap: int | None = None) -> CompanionMatrix:
    """Companion matrix for the a-amplitudes (central spin up).

    Diagonal: delta^2 + sum of alpha_j^2 over sites j NOT in the row's
    tuple. Off-diagonal (m, m'): alpha_r * alpha_s where r and s are the
    sites by which the two tuples differ, nonzero exactly when they
    differ in one element.
    """
    shape = sector_shape(params, p, cap=cap)
    alphas = params.coupling_array()
    delta_sq = params.delta**2
    total_sq = float(np.dot(alphas, alphas))

    def diag_for(t: tuple[int, ...]) -> float:
        inside = sum(alphas[j - 1] ** 2 for j in t)
        return delta_sq + total_sq - inside

    return _assemble(shape.basis_a, alphas, diag_for, "A", p, params_fingerprint(params))


def build_B(params: ModelParams, p: int, cap: int | None = None) -> CompanionMatrix:
    """Companion matrix for the b-amplitudes (central spin down).

    Diagonal: delta^2 + sum of alpha_j^2 over sites j IN the row's
    (p+1)-tuple; off-diagonal rule identical to build_A.
    """
    shape = sector_shape(params, p, cap=cap)
    alphas = params.coupling_array()
    delta_sq = params.delta**2

    def diag_for(t: tuple[int, ...]) -> float:
        return delta_sq + sum(alphas[j - 1] ** 2 for j in t)

    return _assemble(shape.basis_b, alphas, diag_for, "B", p, params_fingerprint(params))


def coupling_block(params: ModelParams, p: int, cap: int | None = None) -> scipy.sparse.csr_array:
    """Rectangular block K with K[m, q] = alpha_r iff the (p+1)-tuple q
    is the p-tuple m with site r added. Couples the a- and b-amplitudes
    in the first-order equations."""
    shape = sector_shape(params, p, cap=cap)
    alphas = params.coupling_array()
    rank_b = shape.basis_b.rank_map
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    sites = range(1, params.n_sites + 1)
    for i, t in enumerate(shape.basis_a.tuples()):
        members = set(t)
        for r in sites:
            if r in members:
                continue
            q = tuple(sorted(t + (r,)))
            rows.append(i)
            cols.append(rank_b[q])
            vals.append(float(alphas[r - 1]))
    return scipy.sparse.csr_array(
        (np.asarray(vals, dtype=float), (rows, cols)),
        shape=(shape.dim_a, shape.dim_b),
    )


def build_first_order(
    params: ModelParams, p: int, delta_sign: float = 1.0, cap: int | None = None
) -> np.ndarray:
    """Dense Hermitian sector matrix [[s*delta*I, K], [K^T, -s*delta*I]].

    The amplitudes evolve as dx/dt = -i H x with this H. delta_sign
    selects the sign convention s of the detuning on the a-block; both
    second-order matrices contain only delta^2, so probabilities do not
    depend on it (see evolution module for the two conventions).
    """
    shape = sector_shape(params, p, cap=cap)
    k = coupling_block(params, p, cap=cap).toarray()
    sd = delta_sign * params.delta
    h = np.zeros((shape.dim_total, shape.dim_total))
    h[: shape.dim_a, : shape.dim_a] = sd * np.eye(shape.dim_a)
    h[: shape.dim_a, shape.dim_a :] = k
    h[shape.dim_a :, : shape.dim_a] = k.T
    h[shape.dim_a :, shape.dim_a :] = -sd * np.eye(shape.dim_b)
    return h


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigensystem of one companion matrix.

    eigenvalues ascend; eigenvectors are the matching orthonormal
    columns with the gauge fixed (first non-negligible component of each
    column positive) so repeated runs produce identical arrays.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kind: str
    p: int
    n_sites: int
    params_fingerprint: str
    zero_threshold: float
    source_max_abs: float

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def _fix_gauge(vectors: np.ndarray) -> np.ndarray:
    if vectors.size == 0:
        return vectors
    absv = np.abs(vectors)
    colmax = absv.max(axis=0)
    thresh = 1e-12 * np.where(colmax > 0.0, colmax, 1.0)
    first = (absv > thresh[np.newaxis, :]).argmax(axis=0)
    signs = np.sign(vectors[first, np.arange(vectors.shape[1])])
    signs[signs == 0.0] = 1.0
    return vectors * signs


def decompose(
    cm: CompanionMatrix,
    driver: str = "evd",
    validate: bool | str = "auto",
) -> SpectralDecomposition:
    """Full symmetric eigendecomposition of a companion matrix.

    validate=True recomputes Q diag(w) Q^T and checks the residual
    against RESIDUAL_RTOL * dim * max|entry| (plus orthonormality);
    "auto" does so only up to dim 2048, where the extra matmuls are
    cheap relative to the solve itself.
    """
    do_validate = validate is True or (validate == "auto" and cm.dim <= 2048)
    if cm.dim == 0:
        return SpectralDecomposition(
            eigenvalues=np.zeros(0),
            eigenvectors=np.zeros((0, 0)),
            kind=cm.kind,
            p=cm.p,
            n_sites=cm.n_sites,
            params_fingerprint=cm.params_fingerprint,
            zero_threshold=0.0,
            source_max_abs=0.0,
        )
    dense = cm.to_dense()
    try:
        w, q = scipy.linalg.eigh(dense, driver=driver, overwrite_a=not do_validate)
    except scipy.linalg.LinAlgError as exc:
        raise DecompositionError(
            f"eigensolver ({driver}) failed on kind-{cm.kind} matrix of dim {cm.dim}: {exc}"
        ) from exc
    q = _fix_gauge(q)
    max_abs = cm.max_abs_entry()
    if do_validate:
        residual = np.abs((q * w) @ q.T - dense).max()
        allowance = RESIDUAL_RTOL * cm.dim * max(max_abs, 1e-30)
        if residual > allowance:
            raise DecompositionError(
                f"reconstruction residual {residual:.3e} exceeds {allowance:.3e} "
                f"for kind-{cm.kind} matrix of dim {cm.dim}"
            )
        ortho = np.abs(q.T @ q - np.eye(cm.dim)).max()
        if ortho > 1e-12 * max(cm.dim, 10):
            raise DecompositionError(
                f"eigenvector orthonormality defect {ortho:.3e} for dim {cm.dim}"
            )
    top = float(w[-1])
    return SpectralDecomposition(
        eigenvalues=w,
        eigenvectors=q,
        kind=cm.kind,
        p=cm.p,
        n_sites=cm.n_sites,
        params_fingerprint=cm.params_fingerprint,
        zero_threshold=ZERO_EIGENVALUE_RTOL * max(top, 0.0),
        source_max_abs=max_abs,
    )


def dump_coordinates(cm: CompanionMatrix, stream: IO[str]) -> None:
    """Write stored entries as 'row col value' lines (17 significant
    digits) for inspection by external tools."""
    coo = cm.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    for k in order:
        stream.write(
            f"{coo.row[k]} {coo.col[k]} {format(coo.data[k], '.17g')}\n"
        )
