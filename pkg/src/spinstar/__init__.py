"""Exact sector dynamics of a spin star: one central spin-1/2 exchanging
excitations with N non-interacting bath spins through XX couplings.

Total magnetization is conserved, so an initial product state with the
central spin up and p bath spins up stays inside a sector of dimension
C(N,p) + C(N,p+1). The package enumerates that sector, assembles the
real symmetric matrices governing the decoupled second-order amplitude
equations, and evolves them in closed form, with a brute-force
full-space oracle and cross-path verification suites alongside.
"""

__version__ = "0.1.0"

from .errors import (
    ConsistencyError,
    DecompositionError,
    SectorSizeError,
    SpinStarError,
    ValidationError,
)
from .tuples import (
    SectorBasis,
    SpinTuple,
    add_index,
    off_diagonal_neighbors,
    rank,
    remove_index,
    unrank,
    validate_tuple,
)
from .model import (
    DEFAULT_SECTOR_DIM_CAP,
    SECTOR_DIM_CAP_ENV,
    InitialCondition,
    ModelParams,
    SectorShape,
    random_couplings,
    sector_dim_cap,
    sector_shape,
    uniform_params,
)
from .companion import (
    CompanionMatrix,
    SpectralDecomposition,
    build_A,
    build_B,
    build_first_order,
    coupling_block,
    decompose,
    dump_coordinates,
    params_fingerprint,
)
from .evolution import (
    DELTA_SIGN_ANALYTIC,
    DELTA_SIGN_LAB,
    AmplitudePair,
    Trajectory,
    closed_form_p0,
    evolve_closed_form,
    evolve_first_order,
    evolve_series,
    initial_derivatives,
    initial_state,
    sector_energy_shift,
    to_lab_frame,
)
from .observables import (
    ObservableSeries,
    detect_revivals,
    return_probability,
    site_occupations,
    sz_central,
    sz_central_discrepancy,
    sz_site,
    total_sz,
)
from .oracle import (
    ORACLE_MAX_SITES,
    basis_index,
    build_full_hamiltonian,
    dump_state,
    embed_pair,
    out_of_sector_mass,
    project_to_sector,
    propagate_full,
    propagate_full_rk4,
    total_sz_diagonal,
)
from .verify import CheckResult, random_model, run_checks

__all__ = [
    "__version__",
    "SpinStarError",
    "ValidationError",
    "SectorSizeError",
    "DecompositionError",
    "ConsistencyError",
    "SpinTuple",
    "SectorBasis",
    "validate_tuple",
    "rank",
    "unrank",
    "add_index",
    "remove_index",
    "off_diagonal_neighbors",
    "ModelParams",
    "InitialCondition",
    "SectorShape",
    "sector_shape",
    "sector_dim_cap",
    "uniform_params",
    "random_couplings",
    "DEFAULT_SECTOR_DIM_CAP",
    "SECTOR_DIM_CAP_ENV",
    "CompanionMatrix",
    "SpectralDecomposition",
    "build_A",
    "build_B",
    "build_first_order",
    "coupling_block",
    "decompose",
    "dump_coordinates",
    "params_fingerprint",
    "AmplitudePair",
    "Trajectory",
    "DELTA_SIGN_ANALYTIC",
    "DELTA_SIGN_LAB",
    "initial_state",
    "initial_derivatives",
    "evolve_closed_form",
    "evolve_series",
    "evolve_first_order",
    "closed_form_p0",
    "to_lab_frame",
    "sector_energy_shift",
    "ObservableSeries",
    "sz_central",
    "sz_central_discrepancy",
    "sz_site",
    "site_occupations",
    "total_sz",
    "return_probability",
    "detect_revivals",
    "ORACLE_MAX_SITES",
    "basis_index",
    "build_full_hamiltonian",
    "total_sz_diagonal",
    "propagate_full",
    "propagate_full_rk4",
    "embed_pair",
    "project_to_sector",
    "out_of_sector_mass",
    "dump_state",
    "CheckResult",
    "random_model",
    "run_checks",
]
