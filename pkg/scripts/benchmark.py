"""しきい値推定器リスク解析のベンチマークスクリプト。

閉形式と求積の一致、代表点の値、モンテカルロとの一致、アンサンブル較正、
減衰率スイープの順序関係をそれぞれ時間を計りながら検査し、結果を JSON に保存する。
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from collections.abc import Callable
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
from dotenv import load_dotenv
from tqdm import tqdm

# プロジェクトルートをパスに追加
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from threshold_risk.domain.estimators import (  # noqa: E402
    EstimatorParams,
    HardThresholdParams,
    PiecewiseLinearParams,
    SemisoftParams,
)
from threshold_risk.domain.sequences import (  # noqa: E402
    DEFAULT_LAMBDA,
    DEFAULT_LENGTH,
    calibrate_ensemble,
    default_p_grid,
)
from threshold_risk.engine.config import load_runtime_config  # noqa: E402
from threshold_risk.engine.monte_carlo import SimulationReport, check_cells, simulate_point  # noqa: E402
from threshold_risk.engine.optimizer import sweep_decay  # noqa: E402
from threshold_risk.engine.risk_analysis import (  # noqa: E402
    bias,
    bias_ht,
    bias_deriv_ht,
    crb_biased_scalar,
    mse,
    mse_ht,
    quadrature_oracle_bias,
    quadrature_oracle_mse,
)

SIGMA_W = 1.0
EQUIVALENCE_TOLERANCE = 1e-9
MONTE_CARLO_GRID_TRIALS = 100_000
MONTE_CARLO_POINT_TRIALS = 1_000_000

Check = Callable[[], dict[str, Any]]


def standard_estimators(sigma_w: float = SIGMA_W) -> list[EstimatorParams]:
    """閉形式の検査に使うパラメータ集合（T/σ_w ∈ {0.5, 1, 2, 3}）。"""
    estimators: list[EstimatorParams] = []
    for t in (0.5, 1.0, 2.0, 3.0):
        threshold = t * sigma_w
        estimators.append(HardThresholdParams(threshold))
        estimators.extend(PiecewiseLinearParams(a, threshold) for a in (0.0, 0.25, 0.5, 0.75, 1.0))
        estimators.extend(SemisoftParams(r * threshold, threshold) for r in (0.0, 0.25, 0.5, 0.75))
    return estimators


def check_closed_form_equivalence() -> dict[str, Any]:
    """全ファミリーの閉形式バイアス・MSE が適応求積と 1e-9 以内で一致するか。"""
    x_grid = np.arange(0.0, 8.0 + 1e-12, 0.25) * SIGMA_W
    max_bias_err = 0.0
    max_mse_err = 0.0
    cells = 0
    for estimator in standard_estimators():
        b = np.asarray(bias(estimator, x_grid, SIGMA_W))
        m = np.asarray(mse(estimator, x_grid, SIGMA_W))
        for i, x in enumerate(x_grid):
            max_bias_err = max(max_bias_err, abs(b[i] - quadrature_oracle_bias(estimator, float(x), SIGMA_W)))
            max_mse_err = max(max_mse_err, abs(m[i] - quadrature_oracle_mse(estimator, float(x), SIGMA_W)))
            cells += 1
    return {
        "passed": max_bias_err <= EQUIVALENCE_TOLERANCE and max_mse_err <= EQUIVALENCE_TOLERANCE,
        "cells": cells,
        "max_bias_error": max_bias_err,
        "max_mse_error": max_mse_err,
    }


def check_point_values() -> dict[str, Any]:
    """T = 2σ_w の HT の代表値。"""
    t = 2.0 * SIGMA_W
    mse0 = float(mse_ht(0.0, t, SIGMA_W))
    bias2 = float(bias_ht(2.0 * SIGMA_W, t, SIGMA_W))
    crb0 = float(crb_biased_scalar(bias_ht(0.0, t, SIGMA_W), bias_deriv_ht(0.0, t, SIGMA_W), SIGMA_W))
    return {
        "passed": abs(mse0 - 0.26146) <= 1e-4 and abs(bias2 + 0.6011) <= 1e-3 and abs(crb0 - 0.06836) <= 1e-4,
        "mse_at_0": mse0,
        "bias_at_2sigma": bias2,
        "crb_biased_at_0": crb0,
    }


def check_monte_carlo(
    max_workers: int,
    grid_trials: int = MONTE_CARLO_GRID_TRIALS,
    point_trials: int = MONTE_CARLO_POINT_TRIALS,
    seed: int = 0,
) -> dict[str, Any]:
    """モンテカルロの MSE が閉形式と 3 標準誤差以内で一致するか。

    標準パラメータ集合 × x/σ_w ∈ {0, 0.5, ..., 8} のセルの 99% 以上、
    および T = 2σ_w の HT の x = 0 を対象にする。
    """
    x_grid = np.arange(0.0, 8.0 + 1e-12, 0.5) * SIGMA_W
    reports: list[SimulationReport] = []
    expected: list[float] = []
    for estimator in standard_estimators():
        closed = np.asarray(mse(estimator, x_grid, SIGMA_W))
        for i, x in enumerate(x_grid):
            reports.append(
                simulate_point(float(x), estimator, SIGMA_W, trials=grid_trials, seed=seed, max_workers=max_workers)
            )
            expected.append(float(closed[i]))
    grid = check_cells(reports, expected)

    point = simulate_point(
        0.0, HardThresholdParams(2.0 * SIGMA_W), SIGMA_W, trials=point_trials, seed=seed, max_workers=max_workers
    )
    point_expected = float(mse_ht(0.0, 2.0 * SIGMA_W, SIGMA_W))
    point_ok = abs(point.mse_hat - point_expected) <= 3.0 * point.mse_stderr
    return {
        "passed": grid.passed and point_ok,
        "cells": grid.cells,
        "violations": grid.violations,
        "violation_rate": grid.rate,
        "ht_at_0": {"mse_hat": point.mse_hat, "mse_stderr": point.mse_stderr, "closed_form": point_expected},
    }


def check_calibration() -> dict[str, Any]:
    """N = 101、λ = 0.04、最大係数 10σ_w の既定アンサンブルの SNR が 10.7 ± 0.3 dB か。"""
    ensemble = calibrate_ensemble(DEFAULT_LENGTH, DEFAULT_LAMBDA, default_p_grid(), SIGMA_W)
    peak = max(ensemble.sequence(p).peak for p in ensemble.p_grid)
    return {
        "passed": abs(ensemble.snr_db - 10.7) <= 0.3 and math.isclose(peak, 10.0 * SIGMA_W, rel_tol=1e-9),
        "snr_db": ensemble.snr_db,
        "peak": peak,
    }


def check_sweep(max_workers: int) -> dict[str, Any]:
    """既定アンサンブルでの最適化結果が包含関係と極限の振る舞いを満たすか。"""
    ensemble = calibrate_ensemble(DEFAULT_LENGTH, DEFAULT_LAMBDA, default_p_grid(), SIGMA_W)
    rows = sweep_decay(ensemble, max_workers=max_workers)
    tol = 1e-12 * SIGMA_W**2
    containment = all(
        r.pl.avg_mse_per_symbol <= r.ht.avg_mse_per_symbol + tol
        and r.ss.avg_mse_per_symbol <= r.ht.avg_mse_per_symbol + tol
        for r in rows
    )
    largest_gain = max(r.ht.avg_mse_per_symbol - r.pl.avg_mse_per_symbol for r in rows)
    first, last = rows[0], rows[-1]
    assert isinstance(first.ht.params, HardThresholdParams)
    assert isinstance(first.pl.params, PiecewiseLinearParams)
    assert isinstance(first.ss.params, SemisoftParams)
    assert isinstance(last.pl.params, PiecewiseLinearParams)
    small_p = {
        "ht_threshold": first.ht.params.threshold / SIGMA_W,
        "ss_inner_threshold": first.ss.params.inner_threshold / SIGMA_W,
        "pl_alpha": first.pl.params.alpha,
        "pl_threshold": first.pl.params.threshold / SIGMA_W,
    }
    large_p = {
        "pl_alpha": last.pl.params.alpha,
        "pl_minus_ht": last.pl.avg_mse_per_symbol - last.ht.avg_mse_per_symbol,
        "ss_minus_min": last.ss.avg_mse_per_symbol
        - min(last.ht.avg_mse_per_symbol, last.pl.avg_mse_per_symbol),
    }
    return {
        "passed": containment and largest_gain > 0.01 * SIGMA_W**2,
        "containment": containment,
        "largest_pl_gain": largest_gain,
        "smallest_p": small_p,
        "largest_p": large_p,
    }


def run_benchmark(checks: dict[str, Check]) -> dict[str, Any]:
    """各検査を実行し、所要時間と合否を集計する。"""
    results: list[dict[str, Any]] = []
    pbar = tqdm(checks.items(), desc="受け入れ検査", unit="check")
    for name, check in pbar:
        pbar.set_postfix_str(name)
        start = time.monotonic()
        details = check()
        elapsed = time.monotonic() - start
        results.append({"name": name, "passed": bool(details.pop("passed")), "seconds": round(elapsed, 4), **details})

    metadata: dict[str, Any] = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "sigma_w": SIGMA_W,
        "checks_count": len(results),
    }
    summary = {
        "passed": sum(1 for r in results if r["passed"]),
        "failed": sum(1 for r in results if not r["passed"]),
        "total_seconds": round(sum(r["seconds"] for r in results), 4),
    }
    return {"metadata": metadata, "summary": summary, "checks": results}


def print_summary(result: dict[str, Any]) -> None:
    """ベンチマーク結果のサマリーを表示する。"""
    summary = result["summary"]

    print()
    print("=" * 50)
    print("ベンチマーク結果")
    print("=" * 50)
    for check in result["checks"]:
        status = "OK" if check["passed"] else "NG"
        print(f"  [{status}] {check['name']}: {check['seconds']:.3f}s")
    print(f"  合格: {summary['passed']} / {summary['passed'] + summary['failed']}")
    print(f"  合計時間: {summary['total_seconds']:.3f}s")
    print("=" * 50)


def save_result(result: dict[str, Any], output_path: Path) -> None:
    """結果を JSON ファイルに保存する。"""
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", encoding="utf-8") as f:
        json.dump(result, f, ensure_ascii=False, indent=2)
    print(f"\n結果を保存しました: {output_path}")


def main() -> None:
    parser = argparse.ArgumentParser(description="しきい値推定器リスク解析ベンチマーク")
    parser.add_argument("--skip-sweep", action="store_true", help="減衰率スイープを省略する")
    parser.add_argument("--skip-monte-carlo", action="store_true", help="モンテカルロ検証を省略する")
    parser.add_argument("--output", type=str, default=None, help="結果の JSON 出力先")
    parser.add_argument("--env-file", default=".env", help="読み込む .env ファイルのパス (default: .env)")
    args = parser.parse_args()

    load_dotenv(dotenv_path=args.env_file)
    runtime = load_runtime_config()

    # 出力先の決定（デフォルトはプロジェクトルート内の benchmark_results/）
    project_root = Path(__file__).resolve().parent.parent
    if args.output:
        output_path = Path(args.output)
    else:
        timestamp = datetime.now(timezone.utc).strftime("%Y%m%d_%H%M%S_%f")
        output_path = project_root / "benchmark_results" / f"result_{timestamp}.json"

    checks: dict[str, Check] = {
        "closed_form_equivalence": check_closed_form_equivalence,
        "point_values": check_point_values,
        "calibration": check_calibration,
    }
    if not args.skip_monte_carlo:
        checks["monte_carlo"] = lambda: check_monte_carlo(runtime.max_workers)
    if not args.skip_sweep:
        checks["sweep"] = lambda: check_sweep(runtime.max_workers)

    result = run_benchmark(checks)
    print_summary(result)
    save_result(result, output_path)
    if result["summary"]["failed"]:
        sys.exit(3)


if __name__ == "__main__":
    main()
