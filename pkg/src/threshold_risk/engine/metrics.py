"""目的関数の評価メトリクス収集モジュール。

目的関数をラップするデコレータパターンで、最適化ロジックを変更せずに
評価点数・呼び出し回数・所要時間を計測する。
"""

from __future__ import annotations

import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from threshold_risk.engine.special_math import FloatArray

Objective = Callable[..., FloatArray]
"""パラメータ配列を受け取り、ブロードキャストされた目的関数値の配列を返す関数。"""


@dataclass
class EvaluationMetrics:
    """1 回の目的関数呼び出しのメトリクス。"""

    phase: str
    points: int
    elapsed_seconds: float


@dataclass
class OptimizationMetrics:
    """1 回の最適化分のメトリクスを保持する。"""

    calls: list[EvaluationMetrics] = field(default_factory=list)

    @property
    def total_calls(self) -> int:
        return len(self.calls)

    @property
    def total_evaluations(self) -> int:
        return sum(c.points for c in self.calls)

    @property
    def total_seconds(self) -> float:
        return sum(c.elapsed_seconds for c in self.calls)

    def evaluations_by_phase(self) -> dict[str, int]:
        result: dict[str, int] = {}
        for c in self.calls:
            result[c.phase] = result.get(c.phase, 0) + c.points
        return result


class MetricsCollectingObjective:
    """目的関数をラップし、各呼び出しで評価した点数と所要時間を記録するデコレータ。"""

    def __init__(self, inner: Objective, metrics: OptimizationMetrics | None = None) -> None:
        self._inner = inner
        self._metrics = metrics if metrics is not None else OptimizationMetrics()
        self.phase = "grid"

    @property
    def metrics(self) -> OptimizationMetrics:
        return self._metrics

    def __call__(self, *params: Any) -> FloatArray:
        start = time.monotonic()
        values = np.asarray(self._inner(*params), dtype=np.float64)
        self._metrics.calls.append(EvaluationMetrics(self.phase, int(values.size), time.monotonic() - start))
        return values
