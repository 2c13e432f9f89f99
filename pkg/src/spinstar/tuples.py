"""Combinatorial indexing of sector basis states.

A basis state of the polarization sector is labelled by a strictly
increasing tuple of bath-site labels, the sites whose spin points up.
This module enumerates those tuples in lexicographic order, converts
between a tuple and its zero-based position (rank) in that order, and
provides the two index maps the flip-flop interaction induces:
adding a site to a tuple and removing a site from it.

Site labels are one-based (1..N) everywhere; ranks are zero-based.
All functions are pure and operate on plain tuples of ints.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from math import comb
from typing import Iterator

from .errors import ValidationError

SpinTuple = tuple[int, ...]


@dataclass(frozen=True)
class SectorBasis:
    """The lexicographically ordered family of p-subsets of {1..n_sites}.

    ``p == n_sites + 1`` is allowed and yields the empty basis (dim 0);
    it represents the central-down block of the fully polarized sector.
    """

    n_sites: int
    p: int

    def __post_init__(self) -> None:
        if self.n_sites < 1:
            raise ValidationError(f"n_sites must be >= 1, got {self.n_sites}")
        if not 0 <= self.p <= self.n_sites + 1:
            raise ValidationError(
                f"subset size p={self.p} outside [0, {self.n_sites + 1}] for n_sites={self.n_sites}"
            )

    @property
    def dim(self) -> int:
        return comb(self.n_sites, self.p)

    def tuples(self) -> Iterator[SpinTuple]:
        """All tuples of this basis, in lexicographic (= rank) order."""
        return itertools.combinations(range(1, self.n_sites + 1), self.p)

    @cached_property
    def rank_map(self) -> dict[SpinTuple, int]:
        """Tuple -> rank lookup table; materialized once, O(dim) memory."""
        return {t: i for i, t in enumerate(self.tuples())}


def validate_tuple(t: SpinTuple, basis: SectorBasis) -> None:
    """Raise ValidationError unless t is a valid member of basis."""
    if len(t) != basis.p:
        raise ValidationError(f"tuple {t} has length {len(t)}, expected p={basis.p}")
    for prev, cur in zip(t, t[1:]):
        if prev >= cur:
            raise ValidationError(f"tuple {t} is not strictly increasing")
    if t and (t[0] < 1 or t[-1] > basis.n_sites):
        raise ValidationError(f"tuple {t} has entries outside [1, {basis.n_sites}]")


def rank(t: SpinTuple, basis: SectorBasis) -> int:
    """Zero-based lexicographic rank of t within basis.

    Uses the combinatorial number system: the number of p-subsets that
    follow t equals sum_m C(n - i_m, p - m + 1), so the rank is the
    complement of that count. O(p), no enumeration.
    """
    validate_tuple(t, basis)
    n, p = basis.n_sites, basis.p
    trailing = sum(comb(n - site, p - m) for m, site in enumerate(t))
    return comb(n, p) - 1 - trailing


def unrank(r: int, basis: SectorBasis) -> SpinTuple:
    """The tuple at zero-based rank r; inverse of rank()."""
    if not 0 <= r < basis.dim:
        raise ValidationError(
            f"rank {r} outside [0, {basis.dim}) for n_sites={basis.n_sites}, p={basis.p}"
        )
    n, p = basis.n_sites, basis.p
    out = []
    site = 1
    remaining = r
    for m in range(p):
        # advance to the first candidate whose completion block contains `remaining`
        block = comb(n - site, p - m - 1)
        while remaining >= block:
            remaining -= block
            site += 1
            block = comb(n - site, p - m - 1)
        out.append(site)
        site += 1
    return tuple(out)


def add_index(t: SpinTuple, r: int) -> SpinTuple:
    """Insert site r into t, keeping increasing order. r must not be in t."""
    if r in t:
        raise ValidationError(f"site {r} already in tuple {t}; insertion undefined")
    if r < 1:
        raise ValidationError(f"site label must be >= 1, got {r}")
    return tuple(sorted(t + (r,)))


def remove_index(t: SpinTuple, r: int) -> SpinTuple:
    """Remove site r from t. r must be in t."""
    if r not in t:
        raise ValidationError(f"site {r} not in tuple {t}; removal undefined")
    return tuple(s for s in t if s != r)


def off_diagonal_neighbors(
    t: SpinTuple, basis: SectorBasis
) -> list[tuple[SpinTuple, int, int]]:
    """All single-swap neighbors of t: tuples reachable by adding one site
    and removing another.

    Returns (neighbor, added, removed) triples, added ascending then removed
    ascending; exactly p*(n_sites - p) of them. Each neighbor differs from t
    in one element, which is what makes the corresponding matrix entry of the
    second-order systems nonzero.
    """
    validate_tuple(t, basis)
    members = set(t)
    out = []
    for added in range(1, basis.n_sites + 1):
        if added in members:
            continue
        for removed in t:
            out.append((add_index(remove_index(t, removed), added), added, removed))
    return out
