"""推定器の入出力写像（係数ごとに独立に適用する）。

パラメータは絶対振幅単位で保持する。σ_w 正規化値からの変換は ``from_normalized`` で行う。
境界 |y| = T ではすべての推定器が素通し側（y）を取る。
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray

from threshold_risk.domain.value_objects import EstimatorKind


def _check_threshold(name: str, value: float) -> None:
    if math.isnan(value) or value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class HardThresholdParams:
    """硬しきい値推定器のパラメータ。threshold = 0 は恒等（最尤）推定器、+∞ は常にゼロを返す推定器。"""

    threshold: float

    def __post_init__(self) -> None:
        _check_threshold("threshold", self.threshold)

    @property
    def kind(self) -> EstimatorKind:
        return EstimatorKind.HARD_THRESHOLD

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.threshold,)

    def as_dict(self) -> dict[str, float]:
        return {"threshold": self.threshold}


@dataclass(frozen=True)
class PiecewiseLinearParams:
    """区分線形推定器のパラメータ。|y| < threshold で傾き alpha、それ以外は素通し。"""

    alpha: float
    threshold: float

    def __post_init__(self) -> None:
        if math.isnan(self.alpha) or not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        _check_threshold("threshold", self.threshold)

    @property
    def kind(self) -> EstimatorKind:
        return EstimatorKind.PIECEWISE_LINEAR

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.threshold,)

    def as_dict(self) -> dict[str, float]:
        return {"alpha": self.alpha, "threshold": self.threshold}


@dataclass(frozen=True)
class SemisoftParams:
    """セミソフト縮小推定器のパラメータ。

    |y| < inner_threshold で 0、inner_threshold ≦ |y| < threshold で傾き β の線分、
    それ以外は素通し。inner_threshold == threshold のときは硬しきい値推定器として扱い、β は定義しない。
    """

    inner_threshold: float
    threshold: float

    def __post_init__(self) -> None:
        _check_threshold("inner_threshold", self.inner_threshold)
        _check_threshold("threshold", self.threshold)
        if self.inner_threshold > self.threshold:
            raise ValueError(
                f"inner_threshold must not exceed threshold, got {self.inner_threshold} > {self.threshold}"
            )
        if math.isinf(self.threshold) and not self.is_hard_threshold:
            raise ValueError("threshold must be finite when inner_threshold < threshold")

    @property
    def kind(self) -> EstimatorKind:
        return EstimatorKind.SEMISOFT

    @property
    def is_hard_threshold(self) -> bool:
        return self.inner_threshold == self.threshold

    @property
    def beta(self) -> float:
        """線分の傾き β = T/(T − T0) > 1。

        Raises:
            ValueError: inner_threshold == threshold（硬しきい値に退化）の場合
        """
        if self.is_hard_threshold:
            raise ValueError("beta is undefined when inner_threshold == threshold")
        return self.threshold / (self.threshold - self.inner_threshold)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        if self.is_hard_threshold:
            return (self.threshold,)
        return (self.inner_threshold, self.threshold)

    def as_dict(self) -> dict[str, float]:
        return {"inner_threshold": self.inner_threshold, "threshold": self.threshold}


EstimatorParams: TypeAlias = HardThresholdParams | PiecewiseLinearParams | SemisoftParams


def identity_estimator() -> PiecewiseLinearParams:
    """恒等推定器（最尤推定器）。"""
    return PiecewiseLinearParams(alpha=1.0, threshold=0.0)


def always_zero_estimator() -> HardThresholdParams:
    """常に 0 を返す推定器（threshold → ∞ の極限）。"""
    return HardThresholdParams(threshold=math.inf)


def from_normalized(kind: EstimatorKind, values: dict[str, float], sigma_w: float) -> EstimatorParams:
    """σ_w 正規化された振幅パラメータを絶対単位に変換して推定器パラメータを作る。

    alpha は無次元なのでそのまま使う。

    Raises:
        ValueError: 必要なパラメータが欠けている、または制約違反の場合
    """
    if not sigma_w > 0:
        raise ValueError(f"sigma_w must be positive, got {sigma_w}")
    missing = [name for name in kind.free_parameters if name not in values]
    if missing:
        raise ValueError(f"missing parameters for {kind.label}: {', '.join(missing)}")
    if kind == EstimatorKind.HARD_THRESHOLD:
        return HardThresholdParams(threshold=values["threshold"] * sigma_w)
    if kind == EstimatorKind.PIECEWISE_LINEAR:
        return PiecewiseLinearParams(alpha=values["alpha"], threshold=values["threshold"] * sigma_w)
    return SemisoftParams(
        inner_threshold=values["inner_threshold"] * sigma_w,
        threshold=values["threshold"] * sigma_w,
    )


def _as_output(values: NDArray[np.float64], y: ArrayLike) -> float | NDArray[np.float64]:
    if np.ndim(y) == 0:
        return float(values.reshape(()))
    return values


def apply_hard_threshold(y: ArrayLike, params: HardThresholdParams) -> float | NDArray[np.float64]:
    """|y| < T なら 0、それ以外は y。"""
    arr = np.asarray(y, dtype=np.float64)
    return _as_output(np.where(np.abs(arr) < params.threshold, 0.0, arr), y)


def apply_piecewise_linear(y: ArrayLike, params: PiecewiseLinearParams) -> float | NDArray[np.float64]:
    """|y| < T なら αy、それ以外は y。"""
    arr = np.asarray(y, dtype=np.float64)
    return _as_output(np.where(np.abs(arr) < params.threshold, params.alpha * arr, arr), y)


def apply_semisoft(y: ArrayLike, params: SemisoftParams) -> float | NDArray[np.float64]:
    """|y| < T0 で 0、T0 ≦ |y| < T で β(y − sgn(y)T0)、|y| ≧ T で y。y について連続な奇関数。"""
    if params.is_hard_threshold:
        return apply_hard_threshold(y, HardThresholdParams(threshold=params.threshold))
    arr = np.asarray(y, dtype=np.float64)
    magnitude = np.abs(arr)
    ramp = params.beta * (arr - np.sign(arr) * params.inner_threshold)
    out = np.where(magnitude < params.inner_threshold, 0.0, np.where(magnitude < params.threshold, ramp, arr))
    return _as_output(out, y)


def apply_estimator(y: ArrayLike, params: EstimatorParams) -> float | NDArray[np.float64]:
    """推定器の種類に応じて写像を適用する。"""
    if isinstance(params, HardThresholdParams):
        return apply_hard_threshold(y, params)
    if isinstance(params, PiecewiseLinearParams):
        return apply_piecewise_linear(y, params)
    return apply_semisoft(y, params)


def apply_to_vector(y: ArrayLike, estimator: EstimatorParams, sigma_w: float) -> NDArray[np.float64]:
    """観測ベクトルの各係数に推定器を独立に適用する。

    Raises:
        ValueError: 入力が空、または sigma_w <= 0 の場合
    """
    if not sigma_w > 0:
        raise ValueError(f"sigma_w must be positive, got {sigma_w}")
    arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if arr.size == 0:
        raise ValueError("observation vector must not be empty")
    return np.asarray(apply_estimator(arr, estimator), dtype=np.float64)


def scalar_estimator(params: EstimatorParams) -> Callable[[float], float]:
    """1 個の観測値に対する写像を返す。求積の被積分関数のように点ごとに呼ぶ用途向け。"""
    threshold = params.threshold
    if isinstance(params, HardThresholdParams) or (isinstance(params, SemisoftParams) and params.is_hard_threshold):
        return lambda y: 0.0 if abs(y) < threshold else y
    if isinstance(params, PiecewiseLinearParams):
        alpha = params.alpha
        return lambda y: alpha * y if abs(y) < threshold else y
    inner = params.inner_threshold
    beta = params.beta

    def semisoft(y: float) -> float:
        magnitude = abs(y)
        if magnitude < inner:
            return 0.0
        if magnitude < threshold:
            return beta * (y - math.copysign(inner, y))
        return y

    return semisoft
