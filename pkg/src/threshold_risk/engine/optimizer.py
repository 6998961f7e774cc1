"""係数列に対する 1 係数あたり平均二乗誤差を、各推定器ファミリーの自由パラメータについて最小化する。

目的関数は閉形式で評価するため決定的。粗い格子探索のあと、ステップを半減させながら
コンパス探索（座標方向と対角方向）で局所改良する。同程度の値では T が小さい方
（次に T0 が小さい方、α が大きい方）を選ぶ。
"""

from __future__ import annotations

import logging
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from threshold_risk.domain.estimators import (
    EstimatorParams,
    HardThresholdParams,
    PiecewiseLinearParams,
    SemisoftParams,
)
from threshold_risk.domain.sequences import CalibratedEnsemble, DecayModel
from threshold_risk.domain.value_objects import EstimatorKind
from threshold_risk.engine.metrics import MetricsCollectingObjective, OptimizationMetrics
from threshold_risk.engine.risk_analysis import mse, mse_ht, mse_pl_grid, mse_ss_grid
from threshold_risk.engine.special_math import FloatArray

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-12
MAX_REFINEMENT_ITERATIONS = 10_000

Point = tuple[float, ...]
TieKey = Callable[[Point], tuple[float, ...]]


@dataclass(frozen=True)
class OptimizerSettings:
    """探索範囲と解像度。長さは σ_w 単位。"""

    t_max_ratio: float = 12.0
    grid_points: int = 121
    alpha_points: int = 51
    min_step_ratio: float = 1e-6

    def __post_init__(self) -> None:
        if not self.t_max_ratio > 0:
            raise ValueError(f"t_max_ratio must be positive, got {self.t_max_ratio}")
        if self.grid_points < 2 or self.alpha_points < 2:
            raise ValueError("grid_points and alpha_points must be >= 2")
        if not self.min_step_ratio > 0:
            raise ValueError(f"min_step_ratio must be positive, got {self.min_step_ratio}")


@dataclass(frozen=True)
class OptimizationResult:
    """1 ファミリー分の最適化結果。"""

    estimator_kind: EstimatorKind
    params: EstimatorParams
    avg_mse_per_symbol: float
    evaluations: int
    converged: bool
    elapsed_seconds: float
    step: float
    objective_calls: int = 0
    evaluations_by_phase: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class SweepRow:
    """1 つの減衰率 p に対する 3 ファミリーの最適化結果。"""

    p: float
    ht: OptimizationResult
    pl: OptimizationResult
    ss: OptimizationResult

    def results(self) -> tuple[OptimizationResult, ...]:
        return (self.ht, self.pl, self.ss)


def average_mse(estimator: EstimatorParams, seq: DecayModel, sigma_w: float) -> float:
    """(1/N)·Σ_n mse(x_n)。シミュレーションではなく閉形式での厳密値。"""
    return float(np.mean(np.asarray(mse(estimator, seq.coefficients, sigma_w))))


def _select(values: FloatArray, points: FloatArray, key: TieKey, scale: float) -> tuple[Point, float]:
    """最小値から TIE_TOLERANCE·scale 以内の候補のうち、key が最小の点を選ぶ。"""
    flat = values.ravel()
    best = float(np.min(flat))
    near = np.flatnonzero(flat <= best + TIE_TOLERANCE * scale)
    chosen = min(near, key=lambda i: key(tuple(float(v) for v in points[i])))
    return tuple(float(v) for v in points[chosen]), float(flat[chosen])


class _CompassSearch:
    """射影付きコンパス探索。改善する近傍がなければステップを半減する。"""

    def __init__(
        self,
        objective: MetricsCollectingObjective,
        directions: FloatArray,
        project: Callable[[FloatArray], FloatArray],
        key: TieKey,
    ) -> None:
        self._objective = objective
        self._directions = directions
        self._project = project
        self._key = key

    def run(self, start: Point, initial_step: float, min_step: float) -> tuple[Point, float, float, bool]:
        self._objective.phase = "refine"
        current = np.asarray(start, dtype=np.float64)
        value = float(self._objective(*current[:, None])[0])
        step = initial_step
        for _ in range(MAX_REFINEMENT_ITERATIONS):
            if step < min_step:
                return tuple(float(v) for v in current), value, step, True
            candidates = self._project(current[None, :] + step * self._directions)
            values = self._objective(*candidates.T)
            point, best = _select(values, candidates, self._key, 0.0)
            if best < value:
                current = np.asarray(point)
                value = best
            else:
                step *= 0.5
        logger.warning("コンパス探索が反復上限に達しました: step=%.3e", step)
        return tuple(float(v) for v in current), value, step, False


def _ht_key(point: Point) -> tuple[float, ...]:
    return (point[0],)


def _pl_key(point: Point) -> tuple[float, ...]:
    return (point[1], -point[0])


def _ss_key(point: Point) -> tuple[float, ...]:
    return (point[1], point[0])


_AXES_1D = np.array([[1.0], [-1.0]])
_AXES_2D = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1], [1, -1], [-1, 1]], dtype=np.float64)


def _threshold_grid(sigma_w: float, settings: OptimizerSettings) -> FloatArray:
    return np.linspace(0.0, settings.t_max_ratio * sigma_w, settings.grid_points)


def _finish(
    kind: EstimatorKind,
    params: EstimatorParams,
    seq: DecayModel,
    sigma_w: float,
    metrics: OptimizationMetrics,
    start: float,
    step: float,
    converged: bool,
) -> OptimizationResult:
    result = OptimizationResult(
        estimator_kind=kind,
        params=params,
        avg_mse_per_symbol=average_mse(params, seq, sigma_w),
        evaluations=metrics.total_evaluations,
        converged=converged,
        elapsed_seconds=time.monotonic() - start,
        step=step,
        objective_calls=metrics.total_calls,
        evaluations_by_phase=metrics.evaluations_by_phase(),
    )
    logger.debug(
        "%s 最適値: %s avg_mse=%.12g evaluations=%d (目的関数 %.3f 秒)",
        kind.label,
        params.as_dict(),
        result.avg_mse_per_symbol,
        result.evaluations,
        metrics.total_seconds,
    )
    return result


def optimize_ht(
    seq: DecayModel, sigma_w: float, settings: OptimizerSettings | None = None
) -> OptimizationResult:
    """平均二乗誤差を最小にする硬しきい値 T* を [0, T_max] から探す。"""
    settings = settings or OptimizerSettings()
    start = time.monotonic()
    x = seq.coefficients
    t_max = settings.t_max_ratio * sigma_w
    objective = MetricsCollectingObjective(lambda t: np.mean(np.asarray(mse_ht(x, t[:, None], sigma_w)), axis=-1))

    grid = _threshold_grid(sigma_w, settings)
    values = objective(grid)
    key = _ht_key
    seed, _ = _select(values, grid[:, None], key, sigma_w**2)

    search = _CompassSearch(objective, _AXES_1D, lambda c: np.clip(c, 0.0, t_max), key)
    point, _, step, converged = search.run(seed, grid[1] - grid[0], settings.min_step_ratio * sigma_w)
    params = HardThresholdParams(threshold=point[0])
    return _finish(EstimatorKind.HARD_THRESHOLD, params, seq, sigma_w, objective.metrics, start, step, converged)


def optimize_pl(
    seq: DecayModel,
    sigma_w: float,
    settings: OptimizerSettings | None = None,
    ht_result: OptimizationResult | None = None,
) -> OptimizationResult:
    """(α*, T*) を α ∈ [0, 1]、T ∈ [0, T_max] から探す。

    格子の最良点に加え、硬しきい値の最適点（α = 0）からも改良を行い、良い方を採る。
    """
    settings = settings or OptimizerSettings()
    start = time.monotonic()
    x = seq.coefficients
    t_max = settings.t_max_ratio * sigma_w
    objective = MetricsCollectingObjective(
        lambda a, t: np.mean(np.asarray(mse_pl_grid(x, a[..., None], t[..., None], sigma_w)), axis=-1)
    )
    ht = ht_result or optimize_ht(seq, sigma_w, settings)
    assert isinstance(ht.params, HardThresholdParams)

    t_grid = _threshold_grid(sigma_w, settings)
    a_grid = np.linspace(0.0, 1.0, settings.alpha_points)
    aa, tt = np.meshgrid(a_grid, t_grid, indexing="ij")
    values = objective(aa, tt)
    points = np.stack([aa.ravel(), tt.ravel()], axis=-1)
    key = _pl_key
    grid_seed, _ = _select(values, points, key, sigma_w**2)

    # α の 1 ステップが T の 1 ステップと同じ格子幅の比になるよう方向を伸縮する
    t_step = t_grid[1] - t_grid[0]
    stretch = np.array([(a_grid[1] - a_grid[0]) / t_step, 1.0])

    def project(c: FloatArray) -> FloatArray:
        return np.stack([np.clip(c[:, 0], 0.0, 1.0), np.clip(c[:, 1], 0.0, t_max)], axis=-1)

    search = _CompassSearch(objective, _AXES_2D * stretch, project, key)
    min_step = settings.min_step_ratio * sigma_w
    runs = [search.run(s, t_step, min_step) for s in (grid_seed, (0.0, ht.params.threshold))]
    best = _pick_run(runs, key, sigma_w**2)
    params = PiecewiseLinearParams(alpha=best[0][0], threshold=best[0][1])
    return _finish(
        EstimatorKind.PIECEWISE_LINEAR, params, seq, sigma_w, objective.metrics, start, best[2], best[3]
    )


def optimize_ss(
    seq: DecayModel,
    sigma_w: float,
    settings: OptimizerSettings | None = None,
    ht_result: OptimizationResult | None = None,
) -> OptimizationResult:
    """(T0*, T*) を 0 ≦ T0 ≦ T ≦ T_max の範囲から探す。

    格子の最良点に加え、硬しきい値の最適点（T0 = T）からも改良を行い、良い方を採る。
    """
    settings = settings or OptimizerSettings()
    start = time.monotonic()
    x = seq.coefficients
    t_max = settings.t_max_ratio * sigma_w
    objective = MetricsCollectingObjective(
        lambda t0, t: np.mean(np.asarray(mse_ss_grid(x, t0[..., None], t[..., None], sigma_w)), axis=-1)
    )
    ht = ht_result or optimize_ht(seq, sigma_w, settings)
    assert isinstance(ht.params, HardThresholdParams)

    t_grid = _threshold_grid(sigma_w, settings)
    # 三角領域は行ごとに評価して中間配列を小さく保つ
    value_rows: list[FloatArray] = []
    point_rows: list[FloatArray] = []
    for i, t in enumerate(t_grid):
        inner = t_grid[: i + 1]
        outer = np.full_like(inner, t)
        value_rows.append(objective(inner, outer))
        point_rows.append(np.stack([inner, outer], axis=-1))
    key = _ss_key
    grid_seed, _ = _select(np.concatenate(value_rows), np.concatenate(point_rows), key, sigma_w**2)

    def project(c: FloatArray) -> FloatArray:
        outer = np.clip(c[:, 1], 0.0, t_max)
        return np.stack([np.clip(c[:, 0], 0.0, outer), outer], axis=-1)

    search = _CompassSearch(objective, _AXES_2D, project, key)
    t_step = t_grid[1] - t_grid[0]
    min_step = settings.min_step_ratio * sigma_w
    t_ht = ht.params.threshold
    runs = [search.run(s, t_step, min_step) for s in (grid_seed, (t_ht, t_ht))]
    best = _pick_run(runs, key, sigma_w**2)
    params = SemisoftParams(inner_threshold=best[0][0], threshold=best[0][1])
    return _finish(EstimatorKind.SEMISOFT, params, seq, sigma_w, objective.metrics, start, best[2], best[3])


def _pick_run(
    runs: list[tuple[Point, float, float, bool]], key: TieKey, scale: float
) -> tuple[Point, float, float, bool]:
    best = min(run[1] for run in runs)
    near = [run for run in runs if run[1] <= best + TIE_TOLERANCE * scale]
    return min(near, key=lambda run: key(run[0]))


def optimize_all(
    seq: DecayModel, sigma_w: float, settings: OptimizerSettings | None = None
) -> tuple[OptimizationResult, OptimizationResult, OptimizationResult]:
    """HT・PL・SS を順に最適化する。PL と SS は HT の最適点を改良の初期点に使う。"""
    ht = optimize_ht(seq, sigma_w, settings)
    pl = optimize_pl(seq, sigma_w, settings, ht_result=ht)
    ss = optimize_ss(seq, sigma_w, settings, ht_result=ht)
    return ht, pl, ss


def sweep_decay(
    ensemble: CalibratedEnsemble,
    settings: OptimizerSettings | None = None,
    max_workers: int = 1,
    show_progress: bool = False,
) -> list[SweepRow]:
    """アンサンブルの各 p で 3 ファミリーを最適化する。結果は p_grid の順に並ぶ。"""
    if max_workers < 1:
        raise ValueError(f"max_workers must be >= 1, got {max_workers}")

    def _run(p: float) -> SweepRow:
        ht, pl, ss = optimize_all(ensemble.sequence(p), ensemble.sigma_w, settings)
        logger.info(
            "p=%.4g: HT=%.6g PL=%.6g SS=%.6g",
            p,
            ht.avg_mse_per_symbol,
            pl.avg_mse_per_symbol,
            ss.avg_mse_per_symbol,
        )
        return SweepRow(p=p, ht=ht, pl=pl, ss=ss)

    logger.info("=== 減衰率スイープ開始 (%d 点, workers=%d) ===", len(ensemble.p_grid), max_workers)
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        iterator = executor.map(_run, ensemble.p_grid)
        rows = list(
            tqdm(iterator, total=len(ensemble.p_grid), desc="スイープ", unit="p", disable=not show_progress)
        )
    return rows


_PARAM_COLUMNS: dict[EstimatorKind, tuple[str, str | None]] = {
    EstimatorKind.HARD_THRESHOLD: ("threshold", None),
    EstimatorKind.PIECEWISE_LINEAR: ("alpha", "threshold"),
    EstimatorKind.SEMISOFT: ("inner_threshold", "threshold"),
}


def _normalized_param(name: str, value: float, sigma_w: float) -> float:
    return value if name == "alpha" else value / sigma_w


def sweep_table(rows: list[SweepRow], sigma_w: float) -> list[dict[str, object]]:
    """CSV 用の行（p, family, param1, param2, avg_mse_per_symbol）。

    しきい値は σ_w 単位、平均二乗誤差は σ_w² 単位に正規化する。HT の param2 は空欄。
    """
    table: list[dict[str, object]] = []
    for row in rows:
        for result in row.results():
            first, second = _PARAM_COLUMNS[result.estimator_kind]
            values = result.params.as_dict()
            table.append(
                {
                    "p": row.p,
                    "family": result.estimator_kind.label,
                    "param1": _normalized_param(first, values[first], sigma_w),
                    "param2": "" if second is None else _normalized_param(second, values[second], sigma_w),
                    "avg_mse_per_symbol": result.avg_mse_per_symbol / sigma_w**2,
                }
            )
    return table


def sweep_records(rows: list[SweepRow], sigma_w: float) -> list[dict[str, object]]:
    """JSON 用のレコード。パラメータは名前付きで σ_w 単位に正規化する。"""
    records: list[dict[str, object]] = []
    for row in rows:
        for result in row.results():
            records.append(
                {
                    "p": row.p,
                    "family": result.estimator_kind.label,
                    "params": {
                        name: _normalized_param(name, value, sigma_w)
                        for name, value in result.params.as_dict().items()
                    },
                    "avg_mse_per_symbol": result.avg_mse_per_symbol / sigma_w**2,
                    "evaluations": result.evaluations,
                    "converged": result.converged,
                    "search": {
                        "objective_calls": result.objective_calls,
                        "evaluations_by_phase": result.evaluations_by_phase,
                        "final_step": result.step / sigma_w,
                    },
                }
            )
    return records
