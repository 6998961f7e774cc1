"""AWGN 観測をシミュレートして推定器のバイアスと平均二乗誤差を経験的に推定する。

閉形式とは独立な検証手段。試行はチャンクに分割し、チャンクごとに (係数, チャンク) で決まる
部分ストリームを使う。チャンク統計は固定の順序で併合するため、ワーカー数を変えても結果はビット単位で一致する。
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from threshold_risk.domain.estimators import EstimatorParams, apply_estimator
from threshold_risk.domain.sequences import DecayModel
from threshold_risk.engine.random_streams import SubstreamProvider

logger = logging.getLogger(__name__)

MIN_TRIALS = 1000
DEFAULT_POINT_TRIALS = 1_000_000
DEFAULT_SEQUENCE_TRIALS = 100_000
DEFAULT_CHUNK_SIZE = 100_000
ACCEPTANCE_SIGMAS = 3.0
ACCEPTANCE_MAX_RATE = 0.01


class AcceptanceError(Exception):
    """統計的・数値的な受け入れ条件を満たさなかった場合の例外。"""

    def __init__(self, message: str, failed: int) -> None:
        super().__init__(message)
        self.failed = failed


@dataclass(frozen=True)
class RunningMoments:
    """件数・平均・偏差平方和。併合は Chan らの並列公式で行う。"""

    count: int
    mean: float
    m2: float

    @classmethod
    def of(cls, values: np.ndarray) -> RunningMoments:
        mean = float(np.mean(values))
        return cls(count=int(values.size), mean=mean, m2=float(np.sum((values - mean) ** 2)))

    def merge(self, other: RunningMoments) -> RunningMoments:
        if self.count == 0:
            return other
        total = self.count + other.count
        delta = other.mean - self.mean
        return RunningMoments(
            count=total,
            mean=self.mean + delta * other.count / total,
            m2=self.m2 + other.m2 + delta * delta * self.count * other.count / total,
        )

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0


_EMPTY = RunningMoments(count=0, mean=0.0, m2=0.0)


@dataclass(frozen=True)
class SimulationReport:
    """経験的なバイアスと平均二乗誤差。x は係数列の集計では None。"""

    x: float | None
    trials: int
    seed: int
    bias_hat: float
    bias_stderr: float
    mse_hat: float
    mse_stderr: float

    def as_dict(self) -> dict[str, float | int | None]:
        return {
            "x": self.x,
            "trials": self.trials,
            "seed": self.seed,
            "bias_hat": self.bias_hat,
            "bias_stderr": self.bias_stderr,
            "mse_hat": self.mse_hat,
            "mse_stderr": self.mse_stderr,
        }


@dataclass(frozen=True)
class CellCheck:
    """セルごとの 3 標準誤差判定の集計。"""

    cells: int
    violations: int
    k: float

    @property
    def rate(self) -> float:
        return self.violations / self.cells if self.cells else 0.0

    @property
    def passed(self) -> bool:
        return self.rate <= ACCEPTANCE_MAX_RATE


def _check_inputs(sigma_w: float, trials: int, chunk_size: int, max_workers: int) -> None:
    if not sigma_w > 0:
        raise ValueError(f"sigma_w must be positive, got {sigma_w}")
    if trials < MIN_TRIALS:
        raise ValueError(f"trials must be >= {MIN_TRIALS}, got {trials}")
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    if max_workers < 1:
        raise ValueError(f"max_workers must be >= 1, got {max_workers}")


def _chunk_sizes(trials: int, chunk_size: int) -> list[int]:
    full, rest = divmod(trials, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def _simulate_coefficient(
    x: float,
    estimator: EstimatorParams,
    sigma_w: float,
    trials: int,
    streams: SubstreamProvider,
    coefficient: int,
    chunk_size: int,
    executor: ThreadPoolExecutor,
) -> tuple[RunningMoments, RunningMoments]:
    """1 係数分の誤差 (x̂ − x) と二乗誤差のモーメント。"""

    def _chunk(index: int, size: int) -> tuple[RunningMoments, RunningMoments]:
        y = x + streams.gaussian(coefficient, index, size, sigma_w)
        err = np.asarray(apply_estimator(y, estimator)) - x
        return RunningMoments.of(err), RunningMoments.of(err * err)

    futures = [executor.submit(_chunk, i, size) for i, size in enumerate(_chunk_sizes(trials, chunk_size))]
    bias_moments, mse_moments = _EMPTY, _EMPTY
    for future in futures:
        b, m = future.result()
        bias_moments = bias_moments.merge(b)
        mse_moments = mse_moments.merge(m)
    return bias_moments, mse_moments


def simulate_point(
    x: float,
    estimator: EstimatorParams,
    sigma_w: float,
    trials: int = DEFAULT_POINT_TRIALS,
    seed: int = 0,
    *,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    max_workers: int = 1,
) -> SimulationReport:
    """y = x + w（w ~ N(0, σ_w²)）を trials 回生成し、(x̂ − x) と (x̂ − x)² の標本平均を求める。

    係数番号 0 の部分ストリームを使うので、長さ 1 の係数列に対する simulate_sequence と一致する。

    Raises:
        ValueError: trials < 1000、sigma_w <= 0、seed が範囲外の場合
    """
    _check_inputs(sigma_w, trials, chunk_size, max_workers)
    streams = SubstreamProvider(seed)
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        bias_m, mse_m = _simulate_coefficient(x, estimator, sigma_w, trials, streams, 0, chunk_size, executor)
    return SimulationReport(
        x=x,
        trials=trials,
        seed=seed,
        bias_hat=bias_m.mean,
        bias_stderr=math.sqrt(bias_m.variance / trials),
        mse_hat=mse_m.mean,
        mse_stderr=math.sqrt(mse_m.variance / trials),
    )


def simulate_sequence(
    seq: DecayModel,
    estimator: EstimatorParams,
    sigma_w: float,
    trials: int = DEFAULT_SEQUENCE_TRIALS,
    seed: int = 0,
    *,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    max_workers: int = 1,
) -> SimulationReport:
    """係数ごとに独立な雑音で試行し、1 係数あたりの平均バイアスと平均二乗誤差を集計する。

    係数間は独立なので、1 試行あたりの平均の分散は Σ_n s_n²/N² で推定する。
    """
    _check_inputs(sigma_w, trials, chunk_size, max_workers)
    streams = SubstreamProvider(seed)
    n = len(seq)
    bias_means: list[float] = []
    bias_vars: list[float] = []
    mse_means: list[float] = []
    mse_vars: list[float] = []
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        for index, x in enumerate(seq.coefficients):
            bias_m, mse_m = _simulate_coefficient(
                float(x), estimator, sigma_w, trials, streams, index, chunk_size, executor
            )
            bias_means.append(bias_m.mean)
            bias_vars.append(bias_m.variance)
            mse_means.append(mse_m.mean)
            mse_vars.append(mse_m.variance)
    logger.debug("係数列シミュレーション完了: N=%d trials=%d seed=%d", n, trials, seed)
    return SimulationReport(
        x=None,
        trials=trials,
        seed=seed,
        bias_hat=math.fsum(bias_means) / n,
        bias_stderr=math.sqrt(math.fsum(bias_vars) / trials) / n,
        mse_hat=math.fsum(mse_means) / n,
        mse_stderr=math.sqrt(math.fsum(mse_vars) / trials) / n,
    )


def check_cells(
    reports: Sequence[SimulationReport],
    closed_forms: Sequence[float],
    k: float = ACCEPTANCE_SIGMAS,
    atol: float = 1e-12,
) -> CellCheck:
    """各セルで |mse_hat − 閉形式| ≦ k·stderr + atol を判定して集計する。"""
    if len(reports) != len(closed_forms):
        raise ValueError("reports and closed_forms must have the same length")
    violations = sum(
        1
        for report, expected in zip(reports, closed_forms)
        if abs(report.mse_hat - expected) > k * report.mse_stderr + atol
    )
    return CellCheck(cells=len(reports), violations=violations, k=k)
