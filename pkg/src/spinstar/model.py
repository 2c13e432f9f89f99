"""Physical parameters, initial conditions, and sector bookkeeping.

The system is one central spin-1/2 coupled to N non-interacting bath
spins through flip-flop (XX) exchange. Frequencies are angular, in
reciprocal time units with hbar = 1, so couplings and detunings combine
with bare time products.

Because the z component of total spin is conserved, an initial product
state with the central spin up and p bath spins up evolves inside a
sector spanned by C(N,p) central-up states and C(N,p+1) central-down
states. SectorShape records those dimensions; a configurable cap keeps
accidentally huge sectors from being built.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np

from .errors import SectorSizeError, ValidationError
from .tuples import SectorBasis, SpinTuple

#: Default upper bound on the full sector dimension C(N+1, p+1).
DEFAULT_SECTOR_DIM_CAP = 200_000

#: Environment variable overriding the cap (expert use only).
SECTOR_DIM_CAP_ENV = "SPINSTAR_MAX_SECTOR_DIM"


def sector_dim_cap() -> int:
    """Active sector-dimension cap: env override if set, else the default."""
    raw = os.environ.get(SECTOR_DIM_CAP_ENV)
    if raw is None:
        return DEFAULT_SECTOR_DIM_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValidationError(f"{SECTOR_DIM_CAP_ENV}={raw!r} is not an integer") from exc
    if cap < 1:
        raise ValidationError(f"{SECTOR_DIM_CAP_ENV} must be >= 1, got {cap}")
    return cap


@dataclass(frozen=True)
class ModelParams:
    """Validated model parameters.

    n_sites   number of bath spins N (>= 1)
    omega     bath Zeeman frequency
    omega0    central spin frequency
    couplings per-site exchange strengths alpha_1..alpha_N
    """

    n_sites: int
    omega: float
    omega0: float
    couplings: tuple[float, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.n_sites, int) or self.n_sites < 1:
            raise ValidationError(f"n_sites must be a positive integer, got {self.n_sites!r}")
        if len(self.couplings) != self.n_sites:
            raise ValidationError(
                f"expected {self.n_sites} couplings, got {len(self.couplings)}"
            )
        for name, value in (("omega", self.omega), ("omega0", self.omega0)):
            if not math.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value!r}")
        for j, alpha in enumerate(self.couplings, start=1):
            if not math.isfinite(alpha):
                raise ValidationError(f"coupling alpha_{j} must be finite, got {alpha!r}")
        object.__setattr__(self, "couplings", tuple(float(a) for a in self.couplings))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "omega0", float(self.omega0))

    @property
    def delta(self) -> float:
        """Detuning omega - omega0 between bath and central frequencies."""
        return self.omega - self.omega0

    @property
    def effective_frequency(self) -> float:
        """sqrt(sum_j alpha_j^2 + delta^2), the single frequency governing
        the dynamics when all bath spins start down."""
        return math.sqrt(math.fsum(a * a for a in self.couplings) + self.delta**2)

    def coupling_array(self) -> np.ndarray:
        """Couplings as a float array indexed by site-1."""
        return np.asarray(self.couplings, dtype=float)


def uniform_params(
    n_sites: int, alpha: float, omega: float = 0.0, omega0: float = 0.0
) -> ModelParams:
    """All couplings equal to alpha."""
    return ModelParams(n_sites, omega, omega0, (float(alpha),) * n_sites)


def random_couplings(n_sites: int, low: float, high: float, seed: int) -> tuple[float, ...]:
    """Seeded uniform couplings on [low, high]; the seed is mandatory so
    runs are reproducible."""
    if not (math.isfinite(low) and math.isfinite(high) and low <= high):
        raise ValidationError(f"invalid coupling interval [{low}, {high}]")
    rng = np.random.default_rng(seed)
    return tuple(float(x) for x in rng.uniform(low, high, size=n_sites))


@dataclass(frozen=True)
class InitialCondition:
    """Product initial state: central spin up, the listed bath sites up,
    every other bath site down."""

    up_sites: SpinTuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "up_sites", tuple(int(s) for s in self.up_sites))
        for prev, cur in zip(self.up_sites, self.up_sites[1:]):
            if prev >= cur:
                raise ValidationError(
                    f"up_sites {self.up_sites} must be strictly increasing"
                )
        if self.up_sites and self.up_sites[0] < 1:
            raise ValidationError(f"site labels start at 1, got {self.up_sites}")

    @property
    def p(self) -> int:
        return len(self.up_sites)

    def validate_for(self, params: ModelParams) -> None:
        if self.up_sites and self.up_sites[-1] > params.n_sites:
            raise ValidationError(
                f"up_sites {self.up_sites} exceed n_sites={params.n_sites}"
            )


@dataclass(frozen=True)
class SectorShape:
    """Dimensions of one conserved-polarization sector.

    dim_a counts central-up states (p bath spins up), dim_b central-down
    states (p+1 up); dim_total = dim_a + dim_b by the Pascal identity.
    """

    n_sites: int
    p: int
    dim_a: int
    dim_b: int
    dim_total: int

    @cached_property
    def basis_a(self) -> SectorBasis:
        return SectorBasis(self.n_sites, self.p)

    @cached_property
    def basis_b(self) -> SectorBasis:
        return SectorBasis(self.n_sites, self.p + 1)


def sector_shape(
    params: ModelParams,
    init: InitialCondition | int,
    cap: int | None = None,
) -> SectorShape:
    """Sector dimensions for the given initial condition (or bare p).

    Raises SectorSizeError when the total dimension C(N+1, p+1) exceeds
    the cap (default: sector_dim_cap()).
    """
    if isinstance(init, InitialCondition):
        init.validate_for(params)
        p = init.p
    else:
        p = int(init)
    n = params.n_sites
    if not 0 <= p <= n:
        raise ValidationError(f"polarization p={p} outside [0, {n}]")
    dim_a = comb(n, p)
    dim_b = comb(n, p + 1)
    dim_total = comb(n + 1, p + 1)
    limit = sector_dim_cap() if cap is None else cap
    if dim_total > limit:
        raise SectorSizeError(
            f"sector dimension C({n + 1},{p + 1}) = {dim_total} "
            f"(= {dim_a} + {dim_b}) exceeds the cap of {limit}; "
            f"raise {SECTOR_DIM_CAP_ENV} to override"
        )
    return SectorShape(n_sites=n, p=p, dim_a=dim_a, dim_b=dim_b, dim_total=dim_total)
