import json
from pathlib import Path

import pytest

from threshold_risk.domain.estimators import HardThresholdParams, PiecewiseLinearParams, SemisoftParams
from threshold_risk.domain.value_objects import EstimatorKind, OutputFormat
from threshold_risk.engine.config import (
    DEFAULT_MAX_WORKERS,
    ExperimentConfig,
    RuntimeConfig,
    load_experiment_file,
    load_runtime_config,
)
from threshold_risk.engine.monte_carlo import DEFAULT_CHUNK_SIZE


class TestRuntimeConfig:
    def test_defaults(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.delenv("THRESHOLD_RISK_MAX_WORKERS", raising=False)
        monkeypatch.delenv("THRESHOLD_RISK_CHUNK_SIZE", raising=False)
        monkeypatch.delenv("LOG_LEVEL", raising=False)

        config = load_runtime_config()

        assert config == RuntimeConfig(log_level="INFO", max_workers=DEFAULT_MAX_WORKERS, chunk_size=DEFAULT_CHUNK_SIZE)

    def test_custom_values(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("THRESHOLD_RISK_MAX_WORKERS", "8")
        monkeypatch.setenv("THRESHOLD_RISK_CHUNK_SIZE", "5000")

        config = load_runtime_config()

        assert config.max_workers == 8
        assert config.chunk_size == 5000

    def test_blank_value_uses_default(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("THRESHOLD_RISK_MAX_WORKERS", "  ")
        assert load_runtime_config().max_workers == DEFAULT_MAX_WORKERS

    def test_invalid_workers_raises(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("THRESHOLD_RISK_MAX_WORKERS", "many")

        with pytest.raises(ValueError, match="THRESHOLD_RISK_MAX_WORKERS"):
            load_runtime_config()

    def test_zero_workers_raises(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("THRESHOLD_RISK_MAX_WORKERS", "0")

        with pytest.raises(ValueError, match="1 以上"):
            load_runtime_config()

    def test_small_chunk_raises(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("THRESHOLD_RISK_CHUNK_SIZE", "10")

        with pytest.raises(ValueError, match="THRESHOLD_RISK_CHUNK_SIZE"):
            load_runtime_config()


class TestExperimentConfig:
    def test_defaults_validate(self) -> None:
        config = ExperimentConfig().validate()
        assert config.family == EstimatorKind.HARD_THRESHOLD
        assert config.output_format == OutputFormat.CSV
        assert len(config.x_grid()) == 33
        assert config.x_grid()[-1] == 8.0

    def test_overrides_skip_none(self) -> None:
        config = ExperimentConfig().with_overrides(threshold=3.0, alpha=None)
        assert config.threshold == 3.0
        assert config.alpha == 0.5

    def test_overrides_coerce_types(self) -> None:
        config = ExperimentConfig().with_overrides(family="pl", output_format="JSON", out="a/b.json", p_grid=[1, 2])
        assert config.family == EstimatorKind.PIECEWISE_LINEAR
        assert config.output_format == OutputFormat.JSON
        assert config.out == Path("a/b.json")
        assert config.p_grid == (1.0, 2.0)

    def test_amplitudes_scale_with_sigma(self) -> None:
        config = ExperimentConfig(sigma_w=2.0, threshold=1.5)
        assert config.estimator() == HardThresholdParams(3.0)
        assert config.x_grid()[-1] == 16.0

    def test_absolute_amplitudes(self) -> None:
        config = ExperimentConfig(sigma_w=2.0, threshold=1.5, absolute=True)
        assert config.estimator() == HardThresholdParams(1.5)

    def test_semisoft_default_inner_ratio(self) -> None:
        config = ExperimentConfig(family=EstimatorKind.SEMISOFT, threshold=2.0)
        assert config.estimator() == SemisoftParams(1.0, 2.0)

    def test_semisoft_inner_threshold(self) -> None:
        config = ExperimentConfig(family=EstimatorKind.SEMISOFT, threshold=2.0, inner_threshold=0.25)
        assert config.estimator() == SemisoftParams(0.25, 2.0)

    def test_estimator_for_other_family(self) -> None:
        config = ExperimentConfig(threshold=2.0, alpha=0.25)
        assert config.estimator(EstimatorKind.PIECEWISE_LINEAR) == PiecewiseLinearParams(0.25, 2.0)

    def test_selected_families_default_to_family(self) -> None:
        assert ExperimentConfig().selected_families() == (EstimatorKind.HARD_THRESHOLD,)
        assert ExperimentConfig(family=EstimatorKind.SEMISOFT).selected_families() == (EstimatorKind.SEMISOFT,)

    def test_families_all(self) -> None:
        config = ExperimentConfig().with_overrides(families=["all"])
        assert config.selected_families() == (
            EstimatorKind.HARD_THRESHOLD,
            EstimatorKind.PIECEWISE_LINEAR,
            EstimatorKind.SEMISOFT,
        )

    def test_families_keep_order_without_duplicates(self) -> None:
        config = ExperimentConfig().with_overrides(families=["ss", "PL", "pl"])
        assert config.selected_families() == (EstimatorKind.SEMISOFT, EstimatorKind.PIECEWISE_LINEAR)

    def test_families_validated_per_estimator(self) -> None:
        with pytest.raises(ValueError, match="alpha"):
            ExperimentConfig().with_overrides(families=["ht", "pl"], alpha=1.5).validate()

    def test_optimizer_settings_default(self) -> None:
        assert ExperimentConfig().optimizer_settings().t_max_ratio == 12.0

    def test_optimizer_settings_in_noise_units(self) -> None:
        assert ExperimentConfig(sigma_w=2.0, t_max=6.0).optimizer_settings().t_max_ratio == 6.0

    def test_optimizer_settings_absolute(self) -> None:
        config = ExperimentConfig(sigma_w=2.0, t_max=6.0, absolute=True)
        assert config.optimizer_settings().t_max_ratio == 3.0

    def test_sequence_uses_ensemble_energy(self) -> None:
        config = ExperimentConfig(p=1.0, p_grid=(1.0, 75.0))
        assert config.sequence().energy == config.ensemble().shared_energy

    @pytest.mark.parametrize(
        ("overrides", "match"),
        [
            ({"x_steps": 1}, "x_steps"),
            ({"x_min": 3.0, "x_max": 1.0}, "x_min"),
            ({"sigma_w": 0.0}, "sigma_w"),
            ({"trials": 10}, "trials"),
            ({"inner_threshold": 0.5, "inner_ratio": 0.5}, "either"),
            ({"inner_ratio": 1.5}, "inner_ratio"),
            ({"bin_width": 0.0}, "bin_width"),
            ({"t_max": 0.0}, "t_max"),
            ({"seed": -1}, "seed"),
            ({"alpha": 2.0, "family": "pl"}, "alpha"),
            ({"family": "ss", "inner_threshold": 3.0}, "must not exceed"),
            ({"p": 0.0}, "p must be positive"),
        ],
    )
    def test_validate_rejects(self, overrides: dict[str, object], match: str) -> None:
        with pytest.raises(ValueError, match=match):
            ExperimentConfig().with_overrides(**overrides).validate()

    def test_unknown_key(self) -> None:
        with pytest.raises(ValueError, match="unknown config keys: colour"):
            ExperimentConfig.from_mapping({"colour": "red"})

    def test_unknown_family(self) -> None:
        with pytest.raises(ValueError, match="unknown estimator family"):
            ExperimentConfig.from_mapping({"family": "soft"})


class TestLoadExperimentFile:
    def test_loads_values(self, tmp_path: Path) -> None:
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"threshold": 3.0, "family": "SS", "p_grid": [1, 75]}), encoding="utf-8")

        config = load_experiment_file(path)

        assert config.threshold == 3.0
        assert config.family == EstimatorKind.SEMISOFT
        assert config.p_grid == (1.0, 75.0)

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ValueError, match="設定ファイルを読み込めません"):
            load_experiment_file(tmp_path / "missing.json")

    def test_invalid_json(self, tmp_path: Path) -> None:
        path = tmp_path / "broken.json"
        path.write_text("{", encoding="utf-8")
        with pytest.raises(ValueError, match="JSON が不正"):
            load_experiment_file(path)

    def test_not_an_object(self, tmp_path: Path) -> None:
        path = tmp_path / "list.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(ValueError, match="JSON オブジェクト"):
            load_experiment_file(path)
