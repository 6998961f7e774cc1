import pytest

from threshold_risk.domain.value_objects import EstimatorKind, OutputFormat


class TestEstimatorKind:
    def test_values(self) -> None:
        assert EstimatorKind.HARD_THRESHOLD.value == "ht"
        assert EstimatorKind.PIECEWISE_LINEAR.value == "pl"
        assert EstimatorKind.SEMISOFT.value == "ss"

    def test_labels(self) -> None:
        assert EstimatorKind.HARD_THRESHOLD.label == "HT"
        assert EstimatorKind.PIECEWISE_LINEAR.label == "PL"
        assert EstimatorKind.SEMISOFT.label == "SS"

    def test_free_parameters(self) -> None:
        assert EstimatorKind.HARD_THRESHOLD.free_parameters == ("threshold",)
        assert EstimatorKind.PIECEWISE_LINEAR.free_parameters == ("alpha", "threshold")
        assert EstimatorKind.SEMISOFT.free_parameters == ("inner_threshold", "threshold")

    @pytest.mark.parametrize("label", ["HT", "ht", " Ht "])
    def test_from_label(self, label: str) -> None:
        assert EstimatorKind.from_label(label) == EstimatorKind.HARD_THRESHOLD

    def test_from_label_unknown(self) -> None:
        with pytest.raises(ValueError, match="unknown estimator family"):
            EstimatorKind.from_label("soft")


class TestOutputFormat:
    def test_values(self) -> None:
        assert OutputFormat.CSV.value == "csv"
        assert OutputFormat.JSON.value == "json"
