"""Companion matrix assembly and spectral decomposition.

The brute-force comparisons here differentiate the first-order equations
directly on the sector basis, so matrix entries are checked against an
independent construction rather than against the assembly code's own
neighbor enumeration.
"""

import io
import itertools
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from spinstar import (
    DecompositionError,
    ModelParams,
    SectorBasis,
    build_A,
    build_B,
    build_first_order,
    coupling_block,
    decompose,
    dump_coordinates,
    params_fingerprint,
    random_model,
    sector_shape,
    uniform_params,
)


def brute_matrix(params, size, diag_inside):
    """Entry-by-entry reference: iterate all tuple pairs, apply the rules
    directly (diagonal from membership sums, off-diagonal from symmetric
    difference)."""
    tuples = list(itertools.combinations(range(1, params.n_sites + 1), size))
    alphas = params.couplings
    total = sum(a * a for a in alphas)
    m = np.zeros((len(tuples), len(tuples)))
    for i, t in enumerate(tuples):
        inside = sum(alphas[j - 1] ** 2 for j in t)
        m[i, i] = params.delta**2 + (inside if diag_inside else total - inside)
        for k, u in enumerate(tuples):
            diff_tu = set(t) - set(u)
            diff_ut = set(u) - set(t)
            if len(diff_tu) == 1 and len(diff_ut) == 1:
                m[i, k] = alphas[diff_tu.pop() - 1] * alphas[diff_ut.pop() - 1]
    return m


class TestBuildA:
    def test_known_matrix(self):
        params = ModelParams(3, 0.0, 0.0, (1.0, 2.0, 2.0))
        a = build_A(params, 1).to_dense()
        expected = np.array([[8.0, 2.0, 2.0], [2.0, 5.0, 4.0], [2.0, 4.0, 5.0]])
        assert np.array_equal(a, expected)

    def test_p0_scalar_is_alpha_eff_sq(self):
        params = ModelParams(2, 0.4, -0.3, (1.1, 0.6))
        a = build_A(params, 0).to_dense()
        assert a.shape == (1, 1)
        assert a[0, 0] == pytest.approx(params.effective_frequency**2, rel=1e-15)

    def test_row_counts_n4_p2(self):
        params = random_model(4, 0)
        counts = build_A(params, 2).row_nonzero_counts()
        assert np.all(counts == 5)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_against_brute_force(self, n):
        for p in range(0, n + 1):
            params = random_model(n, 3)
            a = build_A(params, p).to_dense()
            assert np.allclose(a, brute_matrix(params, p, diag_inside=False), atol=1e-14)


class TestBuildB:
    def test_known_matrix(self):
        params = ModelParams(2, 0.0, 0.0, (1.0, 2.0))
        b = build_B(params, 0).to_dense()
        assert np.array_equal(b, np.array([[1.0, 2.0], [2.0, 4.0]]))

    def test_top_sector_scalar(self):
        params = ModelParams(3, 0.7, 0.2, (1.0, 2.0, 2.0))
        b = build_B(params, 2).to_dense()
        assert b.shape == (1, 1)
        assert b[0, 0] == pytest.approx(params.delta**2 + 9.0, rel=1e-15)

    def test_empty_for_p_equals_n(self):
        params = uniform_params(3, 1.0)
        b = build_B(params, 3)
        assert b.dim == 0 and b.to_dense().shape == (0, 0)

    def test_near_full_diagonal_complement_form(self):
        # p = N-2: diagonal in lex order is delta^2 + total - alpha_{N+1-i}^2
        params = ModelParams(4, 0.3, 0.1, (1.0, 1.5, 0.7, 2.0))
        b = build_B(params, 2).to_dense()
        total = sum(a * a for a in params.couplings)
        for i in range(4):
            missing = params.couplings[4 - 1 - i] ** 2
            assert b[i, i] == pytest.approx(params.delta**2 + total - missing, rel=1e-15)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_against_brute_force(self, n):
        for p in range(0, n):
            params = random_model(n, 5)
            b = build_B(params, p).to_dense()
            assert np.allclose(b, brute_matrix(params, p + 1, diag_inside=True), atol=1e-14)


class TestStructure:
    @pytest.mark.parametrize("n", range(1, 9))
    def test_symmetry_exact_and_row_counts(self, n):
        for p in range(0, n + 1):
            params = random_model(n, 1)
            for cm, per_row in (
                (build_A(params, p), 1 + p * (n - p)),
                (build_B(params, p), 1 + (p + 1) * (n - p - 1)),
            ):
                dense = cm.to_dense()
                assert np.array_equal(dense, dense.T)
                if cm.dim:
                    assert np.all(cm.row_nonzero_counts() == per_row)

    def test_fingerprint_distinguishes_models(self):
        p1 = uniform_params(3, 1.0)
        p2 = uniform_params(3, 1.0 + 1e-16)  # same float, same print
        p3 = uniform_params(3, 1.0000001)
        assert params_fingerprint(p1) == params_fingerprint(p2)
        assert params_fingerprint(p1) != params_fingerprint(p3)
        assert build_A(p1, 1).params_fingerprint == params_fingerprint(p1)


class TestCouplingBlock:
    def test_entries(self):
        params = ModelParams(3, 0.0, 0.0, (1.0, 2.0, 3.0))
        k = coupling_block(params, 1).toarray()
        basis_a = SectorBasis(3, 1)
        basis_b = SectorBasis(3, 2)
        for i, t in enumerate(basis_a.tuples()):
            for q_idx, q in enumerate(basis_b.tuples()):
                added = set(q) - set(t)
                if set(t) <= set(q) and len(added) == 1:
                    assert k[i, q_idx] == params.couplings[added.pop() - 1]
                else:
                    assert k[i, q_idx] == 0.0

    def test_row_counts(self):
        params = random_model(5, 2)
        k = coupling_block(params, 2)
        assert np.all(np.diff(k.indptr) == 3)  # N - p additions per row


class TestFirstOrder:
    def test_single_site_matrix(self):
        params = ModelParams(1, 0.9, 0.4, (0.8,))
        h = build_first_order(params, 0)
        assert np.allclose(h, np.array([[0.5, 0.8], [0.8, -0.5]]), atol=1e-15)

    def test_sign_convention_flips_diagonal(self):
        params = ModelParams(1, 0.9, 0.4, (0.8,))
        h = build_first_order(params, 0, delta_sign=-1.0)
        assert np.allclose(h, np.array([[-0.5, 0.8], [0.8, 0.5]]), atol=1e-15)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_hermitian(self, n):
        params = random_model(n, 4)
        for p in range(0, n + 1):
            h = build_first_order(params, p)
            assert np.array_equal(h, h.T)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_square_reproduces_blocks(self, n):
        for p in range(0, n + 1):
            params = random_model(n, 6)
            shape = sector_shape(params, p)
            h2 = build_first_order(params, p) @ build_first_order(params, p)
            da = shape.dim_a
            assert np.allclose(h2[:da, :da], build_A(params, p).to_dense(), atol=1e-12)
            if shape.dim_b:
                assert np.allclose(h2[da:, da:], build_B(params, p).to_dense(), atol=1e-12)
                assert np.abs(h2[:da, da:]).max() < 1e-12


class TestDecompose:
    def test_scalar(self):
        params = ModelParams(2, 0.0, 0.0, (0.6, 0.8))
        d = decompose(build_A(params, 0))
        assert d.eigenvalues.shape == (1,)
        assert d.eigenvalues[0] == pytest.approx(1.0, rel=1e-15)
        assert d.eigenvectors[0, 0] == 1.0

    def test_uniform_triple_degenerate(self):
        params = uniform_params(3, 1.0)
        d = decompose(build_A(params, 1))
        assert np.allclose(d.eigenvalues, [1.0, 1.0, 4.0], atol=1e-12)

    def test_empty(self):
        params = uniform_params(2, 1.0)
        d = decompose(build_B(params, 2))
        assert d.eigenvalues.shape == (0,)
        assert d.eigenvectors.shape == (0, 0)

    def test_deterministic_gauge(self):
        params = random_model(5, 9)
        cm = build_A(params, 2)
        d1 = decompose(cm)
        d2 = decompose(cm)
        assert np.array_equal(d1.eigenvalues, d2.eigenvalues)
        assert np.array_equal(d1.eigenvectors, d2.eigenvectors)
        first = np.argmax(np.abs(d1.eigenvectors) > 1e-12 * np.abs(d1.eigenvectors).max(axis=0), axis=0)
        leading = d1.eigenvectors[first, np.arange(d1.dim)]
        assert np.all(leading > 0)

    @given(st.integers(1, 8), st.integers(0, 50))
    @settings(max_examples=40, deadline=None)
    def test_reconstruction_residual(self, n, seed):
        params = random_model(n, seed)
        p = seed % (n + 1)
        cm = build_A(params, p)
        d = decompose(cm, validate=True)
        recon = (d.eigenvectors * d.eigenvalues) @ d.eigenvectors.T
        assert np.abs(recon - cm.to_dense()).max() <= 1e-10 * cm.dim * max(
            cm.max_abs_entry(), 1e-30
        )

    def test_orthonormal(self):
        params = random_model(6, 3)
        d = decompose(build_B(params, 2))
        assert np.abs(d.eigenvectors.T @ d.eigenvectors - np.eye(d.dim)).max() < 1e-13

    def test_solver_failure_is_reported(self, monkeypatch):
        def broken(*args, **kwargs):
            raise scipy.linalg.LinAlgError("did not converge")

        monkeypatch.setattr(scipy.linalg, "eigh", broken)
        params = uniform_params(3, 1.0)
        cm = build_A(params, 1)
        with pytest.raises(DecompositionError, match="converge"):
            decompose(cm)

    def test_duality_complement(self):
        # B over (p+1)-tuples is A of the complementary polarization
        for n in range(1, 8):
            for p in range(0, n):
                params = random_model(n, 8)
                b = build_B(params, p).to_dense()
                a_dual = build_A(params, n - p - 1).to_dense()
                basis_b = SectorBasis(n, p + 1)
                basis_a = SectorBasis(n, n - p - 1)
                from spinstar import rank

                sites = set(range(1, n + 1))
                perm = [
                    rank(tuple(sorted(sites - set(q))), basis_a)
                    for q in basis_b.tuples()
                ]
                assert np.allclose(b, a_dual[np.ix_(perm, perm)], atol=1e-12)


class TestDump:
    def test_coordinate_format(self):
        params = ModelParams(2, 0.0, 0.0, (1.0, 2.0))
        buf = io.StringIO()
        dump_coordinates(build_B(params, 0), buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0].split() == ["0", "0", "1"]
        assert lines[1].split() == ["0", "1", "2"]
        parsed = [line.split() for line in lines]
        assert all(len(p) == 3 for p in parsed)
        # third-of-a-number round trip at 17 significant digits
        params2 = ModelParams(1, 0.0, 0.0, (1.0 / 3.0,))
        buf2 = io.StringIO()
        dump_coordinates(build_A(params2, 0), buf2)
        value = float(buf2.getvalue().split()[2])
        assert value == (1.0 / 3.0) ** 2
