import numpy as np
import pytest

from threshold_risk.engine.random_streams import SEED_LIMIT, SubstreamProvider, validate_seed


class TestValidateSeed:
    def test_bounds(self) -> None:
        assert validate_seed(0) == 0
        assert validate_seed(SEED_LIMIT - 1) == SEED_LIMIT - 1

    @pytest.mark.parametrize("seed", [-1, SEED_LIMIT])
    def test_out_of_range(self, seed: int) -> None:
        with pytest.raises(ValueError, match="seed must be in"):
            validate_seed(seed)

    def test_bool_rejected(self) -> None:
        with pytest.raises(ValueError, match="integer"):
            validate_seed(True)


class TestSubstreamProvider:
    def test_same_key_same_numbers(self) -> None:
        a = SubstreamProvider(42).gaussian(3, 1, 100, 1.0)
        b = SubstreamProvider(42).gaussian(3, 1, 100, 1.0)
        assert np.array_equal(a, b)

    def test_different_chunks_differ(self) -> None:
        streams = SubstreamProvider(42)
        assert not np.array_equal(streams.gaussian(0, 0, 100, 1.0), streams.gaussian(0, 1, 100, 1.0))

    def test_different_coefficients_differ(self) -> None:
        streams = SubstreamProvider(42)
        assert not np.array_equal(streams.gaussian(0, 0, 100, 1.0), streams.gaussian(1, 0, 100, 1.0))

    def test_scaling(self) -> None:
        streams = SubstreamProvider(1)
        base = streams.gaussian(0, 0, 50, 1.0)
        assert np.allclose(streams.gaussian(0, 0, 50, 3.0), 3.0 * base)

    def test_sample_spread(self) -> None:
        values = SubstreamProvider(5).gaussian(0, 0, 200_000, 2.0)
        assert float(np.std(values)) == pytest.approx(2.0, rel=0.02)

    def test_negative_index(self) -> None:
        with pytest.raises(ValueError, match="indices"):
            SubstreamProvider(0).generator(-1, 0)

    def test_seed_property(self) -> None:
        assert SubstreamProvider(9).seed == 9
