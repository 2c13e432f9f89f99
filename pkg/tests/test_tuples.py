"""Tuple indexing: ranking, unranking, and adjacency enumeration."""

import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinstar import (
    SectorBasis,
    ValidationError,
    add_index,
    off_diagonal_neighbors,
    rank,
    remove_index,
    unrank,
    validate_tuple,
)


def brute_rank(t, n, p):
    """Independent oracle: position in the explicit lexicographic listing."""
    return list(itertools.combinations(range(1, n + 1), p)).index(t)


class TestBasis:
    def test_dimensions(self):
        assert SectorBasis(4, 2).dim == 6
        assert SectorBasis(5, 0).dim == 1
        assert SectorBasis(3, 4).dim == 0  # over-full basis is empty, not an error

    def test_lexicographic_order(self):
        basis = SectorBasis(4, 2)
        assert list(basis.tuples()) == [
            (1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4),
        ]

    def test_bad_parameters(self):
        with pytest.raises(ValidationError):
            SectorBasis(0, 0)
        with pytest.raises(ValidationError):
            SectorBasis(3, -1)


class TestRankUnrank:
    def test_known_values(self):
        basis = SectorBasis(4, 2)
        assert rank((1, 2), basis) == 0
        assert rank((2, 3), basis) == 3
        assert rank((3, 4), basis) == 5

    def test_empty_tuple(self):
        basis = SectorBasis(3, 0)
        assert rank((), basis) == 0
        assert unrank(0, basis) == ()

    @pytest.mark.parametrize("n", range(1, 9))
    def test_exhaustive_round_trip(self, n):
        for p in range(0, n + 1):
            basis = SectorBasis(n, p)
            for i, t in enumerate(basis.tuples()):
                assert rank(t, basis) == i == brute_rank(t, n, p)
                assert unrank(i, basis) == t

    def test_rank_rejects_foreign_tuples(self):
        basis = SectorBasis(4, 2)
        with pytest.raises(ValidationError):
            rank((1, 2, 3), basis)
        with pytest.raises(ValidationError):
            rank((2, 1), basis)
        with pytest.raises(ValidationError):
            rank((0, 1), basis)
        with pytest.raises(ValidationError):
            rank((4, 5), basis)

    def test_unrank_rejects_out_of_range(self):
        basis = SectorBasis(4, 2)
        with pytest.raises(ValidationError):
            unrank(6, basis)
        with pytest.raises(ValidationError):
            unrank(-1, basis)

    @given(st.integers(1, 12), st.data())
    @settings(max_examples=60)
    def test_round_trip_random(self, n, data):
        p = data.draw(st.integers(0, n))
        basis = SectorBasis(n, p)
        i = data.draw(st.integers(0, basis.dim - 1))
        assert rank(unrank(i, basis), basis) == i


class TestIndexMaps:
    def test_add_and_remove(self):
        assert add_index((1, 3), 2) == (1, 2, 3)
        assert add_index((), 4) == (4,)
        assert remove_index((1, 2, 3), 2) == (1, 3)

    def test_add_rejects_member(self):
        with pytest.raises(ValidationError):
            add_index((1, 3), 3)

    def test_remove_rejects_non_member(self):
        with pytest.raises(ValidationError):
            remove_index((1, 3), 2)

    def test_inverse_pair(self):
        t = (2, 5, 7)
        assert remove_index(add_index(t, 4), 4) == t
        assert add_index(remove_index(t, 5), 5) == t


class TestNeighbors:
    def test_example(self):
        basis = SectorBasis(3, 1)
        assert off_diagonal_neighbors((1,), basis) == [
            ((2,), 2, 1),
            ((3,), 3, 1),
        ]

    @pytest.mark.parametrize("n", range(1, 9))
    def test_exhaustive_counts(self, n):
        for p in range(0, n + 1):
            basis = SectorBasis(n, p)
            for t in basis.tuples():
                neighbors = off_diagonal_neighbors(t, basis)
                assert len(neighbors) == p * (n - p)
                seen = set()
                for neighbor, added, removed in neighbors:
                    assert added not in t and removed in t
                    assert remove_index(add_index(t, added), removed) == neighbor
                    assert neighbor not in seen
                    seen.add(neighbor)

    def test_symmetry_of_relation(self):
        # one-element difference is mutual
        basis = SectorBasis(5, 2)
        for t in basis.tuples():
            for neighbor, added, removed in off_diagonal_neighbors(t, basis):
                back = {n for n, _, _ in off_diagonal_neighbors(neighbor, basis)}
                assert t in back


class TestValidateTuple:
    def test_accepts_valid(self):
        validate_tuple((1, 4), SectorBasis(4, 2))

    def test_rejects_wrong_size(self):
        with pytest.raises(ValidationError):
            validate_tuple((1,), SectorBasis(4, 2))
