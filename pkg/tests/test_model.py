"""Model parameters, initial conditions, and sector bookkeeping."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinstar import (
    DEFAULT_SECTOR_DIM_CAP,
    SECTOR_DIM_CAP_ENV,
    InitialCondition,
    ModelParams,
    SectorSizeError,
    ValidationError,
    random_couplings,
    sector_dim_cap,
    sector_shape,
    uniform_params,
)


class TestModelParams:
    def test_basic_properties(self):
        params = ModelParams(3, 1.5, 0.5, (1.0, 2.0, 2.0))
        assert params.delta == 1.0
        assert params.effective_frequency == pytest.approx(math.sqrt(9 + 1), abs=1e-15)

    def test_coupling_count_mismatch(self):
        with pytest.raises(ValidationError):
            ModelParams(3, 0.0, 0.0, (1.0, 2.0))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValidationError):
            ModelParams(1, float("nan"), 0.0, (1.0,))
        with pytest.raises(ValidationError):
            ModelParams(1, 0.0, 0.0, (float("inf"),))

    def test_rejects_bad_n(self):
        with pytest.raises(ValidationError):
            ModelParams(0, 0.0, 0.0, ())

    def test_uniform(self):
        params = uniform_params(4, 0.7, omega=0.2)
        assert params.couplings == (0.7, 0.7, 0.7, 0.7)
        assert params.delta == 0.2

    @given(st.integers(1, 10), st.integers(0, 1000))
    @settings(max_examples=30)
    def test_effective_frequency_positive(self, n, seed):
        params = ModelParams(n, 0.0, 0.0, random_couplings(n, 0.1, 2.0, seed))
        assert params.effective_frequency >= math.sqrt(n) * 0.1 - 1e-12


class TestRandomCouplings:
    def test_reproducible(self):
        assert random_couplings(5, 0.1, 2.0, 42) == random_couplings(5, 0.1, 2.0, 42)

    def test_range(self):
        values = random_couplings(200, 0.3, 0.9, 7)
        assert all(0.3 <= v <= 0.9 for v in values)

    def test_bad_interval(self):
        with pytest.raises(ValidationError):
            random_couplings(3, 2.0, 1.0, 0)


class TestInitialCondition:
    def test_p_counts_up_sites(self):
        assert InitialCondition(()).p == 0
        assert InitialCondition((2, 5)).p == 2

    def test_must_increase(self):
        with pytest.raises(ValidationError):
            InitialCondition((3, 2))
        with pytest.raises(ValidationError):
            InitialCondition((2, 2))

    def test_site_labels_start_at_one(self):
        with pytest.raises(ValidationError):
            InitialCondition((0, 1))

    def test_validate_for_range(self):
        params = uniform_params(3, 1.0)
        InitialCondition((1, 3)).validate_for(params)
        with pytest.raises(ValidationError):
            InitialCondition((1, 4)).validate_for(params)


class TestSectorShape:
    def test_pascal_identity(self):
        params = uniform_params(6, 1.0)
        for p in range(0, 7):
            shape = sector_shape(params, p)
            assert shape.dim_a == math.comb(6, p)
            assert shape.dim_b == math.comb(6, p + 1)
            assert shape.dim_total == shape.dim_a + shape.dim_b == math.comb(7, p + 1)

    def test_accepts_initial_condition(self):
        params = uniform_params(4, 1.0)
        shape = sector_shape(params, InitialCondition((2, 3)))
        assert shape.p == 2

    def test_p_out_of_range(self):
        params = uniform_params(4, 1.0)
        with pytest.raises(ValidationError):
            sector_shape(params, 5)

    def test_cap_rejection_names_limit(self):
        params = uniform_params(20, 1.0)
        with pytest.raises(SectorSizeError) as err:
            sector_shape(params, 10)
        message = str(err.value)
        assert "352716" in message  # C(21, 11)
        assert "184756" in message and "167960" in message
        assert SECTOR_DIM_CAP_ENV in message

    def test_cap_parameter_override(self):
        params = uniform_params(10, 1.0)
        with pytest.raises(SectorSizeError):
            sector_shape(params, 5, cap=10)

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv(SECTOR_DIM_CAP_ENV, "500000")
        assert sector_dim_cap() == 500000
        params = uniform_params(20, 1.0)
        shape = sector_shape(params, 10)
        assert shape.dim_total == 352716

    def test_env_override_invalid(self, monkeypatch):
        monkeypatch.setenv(SECTOR_DIM_CAP_ENV, "not-a-number")
        with pytest.raises(ValidationError):
            sector_dim_cap()
        monkeypatch.setenv(SECTOR_DIM_CAP_ENV, "0")
        with pytest.raises(ValidationError):
            sector_dim_cap()

    def test_default_cap_value(self, monkeypatch):
        monkeypatch.delenv(SECTOR_DIM_CAP_ENV, raising=False)
        assert sector_dim_cap() == DEFAULT_SECTOR_DIM_CAP == 200_000

    def test_large_allowed_sector(self):
        # the N=200, p=1 production case stays under the default cap
        params = ModelParams(200, 0.0, 0.0, (1.0,) * 200)
        shape = sector_shape(params, 1)
        assert (shape.dim_a, shape.dim_b, shape.dim_total) == (200, 19900, 20100)
