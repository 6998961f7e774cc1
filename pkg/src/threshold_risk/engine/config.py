"""実行設定と実験設定の管理。

実行設定（ログレベル・ワーカー数・チャンクサイズ）は環境変数から読み込む。
実験設定は組み込みの既定値 < JSON 設定ファイル < コマンドライン引数 の順に上書きする。
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from threshold_risk.domain.estimators import EstimatorParams, from_normalized
from threshold_risk.domain.sequences import (
    DEFAULT_LAMBDA,
    DEFAULT_LENGTH,
    DEFAULT_PEAK_MULTIPLE,
    CalibratedEnsemble,
    DecayModel,
    calibrate_ensemble,
    default_p_grid,
)
from threshold_risk.domain.value_objects import EstimatorKind, OutputFormat
from threshold_risk.engine.monte_carlo import DEFAULT_CHUNK_SIZE, MIN_TRIALS
from threshold_risk.engine.optimizer import OptimizerSettings
from threshold_risk.engine.random_streams import validate_seed

DEFAULT_LOG_LEVEL = "INFO"
DEFAULT_MAX_WORKERS = 4
DEFAULT_INNER_RATIO = 0.5


@dataclass(frozen=True)
class RuntimeConfig:
    """環境変数から決まる実行時の設定を保持する値オブジェクト。"""

    log_level: str = DEFAULT_LOG_LEVEL
    max_workers: int = DEFAULT_MAX_WORKERS
    chunk_size: int = DEFAULT_CHUNK_SIZE

    @property
    def log_level_value(self) -> int:
        """logging のレベル値。未知の名前は INFO として扱う。"""
        level = logging.getLevelName(self.log_level)
        return level if isinstance(level, int) else logging.INFO


def _read_int(name: str, default: int, minimum: int) -> int:
    raw = os.environ.get(name, "").strip()
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} の値が不正です: {raw!r}") from None
    if value < minimum:
        raise ValueError(f"{name} は {minimum} 以上で指定してください: {value}")
    return value


def load_runtime_config() -> RuntimeConfig:
    """環境変数から RuntimeConfig を生成する。

    環境変数:
        LOG_LEVEL: ログレベル（デフォルト: INFO、大文字小文字を区別しない）
        THRESHOLD_RISK_MAX_WORKERS: スイープ・シミュレーションのワーカースレッド数（デフォルト: 4）
        THRESHOLD_RISK_CHUNK_SIZE: モンテカルロの部分ストリームあたりの試行数（デフォルト: 100000）

    Raises:
        ValueError: 整数として解釈できない、または下限を下回る値の場合
    """
    log_level = os.environ.get("LOG_LEVEL", DEFAULT_LOG_LEVEL).strip().upper() or DEFAULT_LOG_LEVEL
    return RuntimeConfig(
        log_level=log_level,
        max_workers=_read_int("THRESHOLD_RISK_MAX_WORKERS", DEFAULT_MAX_WORKERS, 1),
        chunk_size=_read_int("THRESHOLD_RISK_CHUNK_SIZE", DEFAULT_CHUNK_SIZE, MIN_TRIALS),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """サブコマンドの実行に必要な設定。

    absolute が False のとき、x グリッドとしきい値は σ_w 単位で解釈する。
    """

    sigma_w: float = 1.0
    x_min: float = 0.0
    x_max: float = 8.0
    x_steps: int = 33
    family: EstimatorKind = EstimatorKind.HARD_THRESHOLD
    families: tuple[EstimatorKind, ...] | None = None
    threshold: float = 2.0
    alpha: float = 0.5
    inner_threshold: float | None = None
    inner_ratio: float | None = None
    n: int = DEFAULT_LENGTH
    lam: float = DEFAULT_LAMBDA
    p: float = 1.0
    p_grid: tuple[float, ...] | None = None
    peak_multiple: float = DEFAULT_PEAK_MULTIPLE
    bin_width: float = 0.5
    t_max: float | None = None
    trials: int | None = None
    seed: int = 0
    output_format: OutputFormat = OutputFormat.CSV
    out: Path | None = None
    absolute: bool = False

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> ExperimentConfig:
        """JSON 設定の辞書から生成する。未知のキーはエラーにする。"""
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls().with_overrides(**data)

    def with_overrides(self, **overrides: Any) -> ExperimentConfig:
        """None でない値だけを上書きした設定を返す。文字列の列挙値やパスは型を揃える。"""
        values = {k: v for k, v in overrides.items() if v is not None}
        if "family" in values:
            values["family"] = EstimatorKind.from_label(str(values["family"]))
        if "families" in values:
            values["families"] = _parse_families(values["families"])
        if "output_format" in values:
            values["output_format"] = OutputFormat(str(values["output_format"]).lower())
        if "out" in values:
            values["out"] = Path(values["out"])
        if "p_grid" in values:
            values["p_grid"] = tuple(float(p) for p in values["p_grid"])
        return dataclasses.replace(self, **values)

    @property
    def amplitude_unit(self) -> float:
        return 1.0 if self.absolute else self.sigma_w

    def validate(self) -> ExperimentConfig:
        """各モジュールの制約を満たすか確認して自身を返す。

        Raises:
            ValueError: 制約違反がある場合
        """
        if not self.sigma_w > 0 or math.isinf(self.sigma_w):
            raise ValueError(f"sigma_w must be positive, got {self.sigma_w}")
        if self.x_steps < 2:
            raise ValueError(f"x_steps must be >= 2, got {self.x_steps}")
        if not self.x_min < self.x_max:
            raise ValueError(f"x_min must be smaller than x_max, got {self.x_min} >= {self.x_max}")
        if self.inner_threshold is not None and self.inner_ratio is not None:
            raise ValueError("specify either inner_threshold or inner_ratio, not both")
        if self.inner_ratio is not None and not 0.0 <= self.inner_ratio <= 1.0:
            raise ValueError(f"inner_ratio must be in [0, 1], got {self.inner_ratio}")
        if self.trials is not None and self.trials < MIN_TRIALS:
            raise ValueError(f"trials must be >= {MIN_TRIALS}, got {self.trials}")
        if self.bin_width <= 0:
            raise ValueError(f"bin_width must be positive, got {self.bin_width}")
        if self.t_max is not None and not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        validate_seed(self.seed)
        for kind in self.selected_families():
            self.estimator(kind)
        self.sequence()
        return self

    def selected_families(self) -> tuple[EstimatorKind, ...]:
        """曲線を書き出す推定器の一覧。families が未指定なら family だけ。"""
        return self.families if self.families is not None else (self.family,)

    def x_grid(self) -> np.ndarray:
        unit = self.amplitude_unit
        return np.linspace(self.x_min * unit, self.x_max * unit, self.x_steps)

    def estimator(self, family: EstimatorKind | None = None) -> EstimatorParams:
        """設定から推定器パラメータを組み立てる（SS の T0 は inner_threshold か inner_ratio·T）。"""
        kind = family or self.family
        unit = self.amplitude_unit
        if self.inner_threshold is not None:
            inner = self.inner_threshold
        else:
            ratio = DEFAULT_INNER_RATIO if self.inner_ratio is None else self.inner_ratio
            inner = ratio * self.threshold
        values = {"threshold": self.threshold * unit, "alpha": self.alpha, "inner_threshold": inner * unit}
        # 絶対単位に揃えたので σ_w = 1 で変換する
        return from_normalized(kind, values, 1.0)

    def sequence(self) -> DecayModel:
        """p の係数列。エネルギーはアンサンブル（p_grid）全体で共通の値に較正する。"""
        return self.ensemble().sequence(self.p)

    def optimizer_settings(self) -> OptimizerSettings:
        """最適化の探索範囲。t_max は他の振幅と同じく既定で σ_w 単位。"""
        if self.t_max is None:
            return OptimizerSettings()
        return OptimizerSettings(t_max_ratio=self.t_max * self.amplitude_unit / self.sigma_w)

    def ensemble(self) -> CalibratedEnsemble:
        grid = self.p_grid if self.p_grid is not None else tuple(float(p) for p in default_p_grid())
        return calibrate_ensemble(self.n, self.lam, grid, self.sigma_w, self.peak_multiple)


def _parse_families(labels: Any) -> tuple[EstimatorKind, ...]:
    """ラベルの列を重複なしの推定器の並びにする。"all" は HT / PL / SS の 3 つ。"""
    if isinstance(labels, str):
        labels = [labels]
    kinds: list[EstimatorKind] = []
    for label in labels:
        text = str(label)
        expanded = list(EstimatorKind) if text.lower() == "all" else [EstimatorKind.from_label(text)]
        kinds.extend(k for k in expanded if k not in kinds)
    if not kinds:
        raise ValueError("families must not be empty")
    return tuple(kinds)


def load_experiment_file(path: Path) -> ExperimentConfig:
    """JSON 設定ファイルを読み込む。

    Raises:
        ValueError: ファイルが読めない、JSON として不正、またはオブジェクトでない場合
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ValueError(f"設定ファイルを読み込めません: {path} ({e})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"設定ファイルの JSON が不正です: {path} ({e})") from None
    if not isinstance(data, dict):
        raise ValueError(f"設定ファイルは JSON オブジェクトである必要があります: {path}")
    return ExperimentConfig.from_mapping(data)
