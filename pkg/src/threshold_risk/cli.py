"""コマンドラインエントリポイント。

Usage::

    threshold-risk risk-curve --family ht --T 2                  # HT のバイアス・MSE・各下限
    threshold-risk risk-curve --family ss --T 2 --T0-ratio 0.5   # セミソフト縮小
    threshold-risk risk-curve --T 2 --alpha 0.5 --T0-ratio 0.5   # HT / PL / SS を family 列付きで比較
    threshold-risk bounds --T 2 --out results/bounds.csv         # 下限の比較と順序の検査
    threshold-risk sweep --out results/sweep.csv                 # 減衰率スイープ（HT / PL / SS の最適化）
    threshold-risk simulate --family ht --T 2 --seed 1           # モンテカルロによる閉形式の検証
    threshold-risk sequence --p 75 --format json                 # 係数列とメタデータ

終了コード: 0 成功、1 使い方・設定の誤り、2 数値計算の失敗、3 受け入れ条件の不成立。
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any, NoReturn

from dotenv import load_dotenv

from threshold_risk.domain.sequences import DecayModel, histogram, snr
from threshold_risk.domain.value_objects import EstimatorKind, OutputFormat
from threshold_risk.engine.config import (
    ExperimentConfig,
    RuntimeConfig,
    load_experiment_file,
    load_runtime_config,
)
from threshold_risk.engine.monte_carlo import (
    DEFAULT_POINT_TRIALS,
    DEFAULT_SEQUENCE_TRIALS,
    AcceptanceError,
    SimulationReport,
    check_cells,
    simulate_point,
    simulate_sequence,
)
from threshold_risk.engine.optimizer import average_mse, sweep_decay, sweep_records, sweep_table
from threshold_risk.engine.risk_analysis import NumericError, check_bounds, mse, risk_curve
from threshold_risk.export import sibling_path, write_csv, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_ACCEPTANCE = 3

RISK_CURVE_COLUMNS = (
    "x_over_sigma",
    "bias_over_sigma",
    "mse_over_sigma2",
    "crb_biased_over_sigma2",
    "crb_unbiased_over_sigma2",
    "oracle_over_sigma2",
)
RISK_CURVE_FAMILY_COLUMNS = ("family", *RISK_CURVE_COLUMNS)
BOUNDS_COLUMNS = (
    "x_over_sigma",
    "mse_over_sigma2",
    "crb_unbiased_over_sigma2",
    "crb_biased_over_sigma2",
    "oracle_over_sigma2",
    "bounds_ok",
)
SWEEP_COLUMNS = ("p", "family", "param1", "param2", "avg_mse_per_symbol")
SIMULATE_COLUMNS = (
    "x",
    "trials",
    "seed",
    "bias_hat",
    "bias_stderr",
    "mse_hat",
    "mse_stderr",
    "mse_closed_form",
    "within_tolerance",
)
SEQUENCE_COLUMNS = ("n", "x_n")
HISTOGRAM_COLUMNS = ("bin_center_over_sigma", "count")
HISTOGRAM_DECAY_RATES = (1.0, 75.0)


class _ArgumentParser(argparse.ArgumentParser):
    """使い方の誤りを終了コード 1 で報告するパーサー。"""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"エラー: {message}\n")


def configure_logging(runtime: RuntimeConfig) -> None:
    logging.basicConfig(
        level=runtime.log_level_value,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        stream=sys.stderr,
    )
    logging.getLogger("threshold_risk").setLevel(runtime.log_level_value)


# ---------------------------------------------------------------------------
# サブコマンド
# ---------------------------------------------------------------------------


def cmd_risk_curve(config: ExperimentConfig, runtime: RuntimeConfig) -> None:
    """設定した推定器の x に対するバイアス・MSE・各下限を書き出す。

    推定器が複数のときは先頭に family 列を付け、推定器ごとに行を並べる。
    """
    families = config.selected_families()
    if len(families) == 1:
        points = risk_curve(config.estimator(families[0]), config.sigma_w, config.x_grid())
        rows = [point.normalized(config.sigma_w) for point in points]
        if config.output_format == OutputFormat.JSON:
            write_json({"estimator": _estimator_metadata(config, families[0]), "rows": rows}, config.out)
        else:
            write_csv(RISK_CURVE_COLUMNS, rows, config.out)
        return

    family_rows: list[dict[str, object]] = []
    for kind in families:
        points = risk_curve(config.estimator(kind), config.sigma_w, config.x_grid())
        family_rows.extend({"family": kind.label, **point.normalized(config.sigma_w)} for point in points)
    if config.output_format == OutputFormat.JSON:
        estimators = [_estimator_metadata(config, kind) for kind in families]
        write_json({"estimators": estimators, "rows": family_rows}, config.out)
    else:
        write_csv(RISK_CURVE_FAMILY_COLUMNS, family_rows, config.out)


def cmd_bounds(config: ExperimentConfig, runtime: RuntimeConfig) -> None:
    """HT の MSE と不偏 CRB・バイアス付き CRB・オラクル限界を書き出し、順序を検査する。

    Raises:
        AcceptanceError: mse が下限を下回る点がある場合（ファイルは書き出した後に送出する）
    """
    estimator = config.estimator(EstimatorKind.HARD_THRESHOLD)
    points = risk_curve(estimator, config.sigma_w, config.x_grid())
    violations = check_bounds(points, config.sigma_w)
    violated_x = {v.x for v in violations}
    rows: list[dict[str, object]] = []
    for point in points:
        row: dict[str, object] = dict(point.normalized(config.sigma_w))
        row["bounds_ok"] = point.x not in violated_x
        rows.append(row)
    if config.output_format == OutputFormat.JSON:
        write_json({"estimator": _estimator_metadata(config, EstimatorKind.HARD_THRESHOLD), "rows": rows}, config.out)
    else:
        write_csv(BOUNDS_COLUMNS, rows, config.out)
    if violations:
        for v in violations:
            logger.error("下限違反: x=%.6g bound=%s mse=%.12g bound_value=%.12g", v.x, v.bound, v.mse, v.bound_value)
        raise AcceptanceError(f"{len(violations)} bound violations", failed=len(violations))


def cmd_sweep(config: ExperimentConfig, runtime: RuntimeConfig) -> None:
    """アンサンブルを較正して減衰率スイープを実行し、最適化結果と p = 1, 75 のヒストグラムを書き出す。"""
    ensemble = config.ensemble()
    logger.info("アンサンブル: N=%d lambda=%g SNR=%.3f dB", ensemble.n, ensemble.lam, ensemble.snr_db)
    rows = sweep_decay(
        ensemble,
        config.optimizer_settings(),
        max_workers=runtime.max_workers,
        show_progress=config.out is not None,
    )
    histograms = {
        f"p{p:g}": _histogram_rows(ensemble.sequence(p), config) for p in HISTOGRAM_DECAY_RATES
    }
    if config.output_format == OutputFormat.JSON:
        write_json(
            {
                "ensemble": ensemble.as_dict(),
                "rows": sweep_records(rows, config.sigma_w),
                "histograms": histograms,
            },
            config.out,
        )
        return
    write_csv(SWEEP_COLUMNS, sweep_table(rows, config.sigma_w), config.out)
    metadata_path = sibling_path(config.out, "ensemble", ".json")
    if metadata_path is not None:
        write_json(ensemble.as_dict(), metadata_path)
        for tag, hist_rows in histograms.items():
            write_csv(HISTOGRAM_COLUMNS, hist_rows, sibling_path(config.out, f"hist-{tag}", ".csv"))
    else:
        logger.warning(
            "CSV を標準出力に書いたため、アンサンブルのメタデータとヒストグラムは出力していません"
            "（--out でファイルに書くか --format json を指定してください）"
        )


def cmd_simulate(config: ExperimentConfig, runtime: RuntimeConfig, *, sequence: bool = False) -> None:
    """モンテカルロ推定を閉形式と比較する。

    Raises:
        AcceptanceError: 3 標準誤差を超えるセルが 1% を超えた場合（ファイルは書き出した後に送出する）
    """
    estimator = config.estimator()
    reports: list[SimulationReport] = []
    expected: list[float] = []
    if sequence:
        seq = config.sequence()
        trials = config.trials or DEFAULT_SEQUENCE_TRIALS
        reports.append(
            simulate_sequence(
                seq,
                estimator,
                config.sigma_w,
                trials,
                config.seed,
                chunk_size=runtime.chunk_size,
                max_workers=runtime.max_workers,
            )
        )
        expected.append(average_mse(estimator, seq, config.sigma_w))
    else:
        trials = config.trials or DEFAULT_POINT_TRIALS
        for x in config.x_grid():
            reports.append(
                simulate_point(
                    float(x),
                    estimator,
                    config.sigma_w,
                    trials,
                    config.seed,
                    chunk_size=runtime.chunk_size,
                    max_workers=runtime.max_workers,
                )
            )
            expected.append(float(mse(estimator, float(x), config.sigma_w)))

    summary = check_cells(reports, expected)
    rows: list[dict[str, object]] = []
    for report, closed in zip(reports, expected):
        row: dict[str, object] = dict(report.as_dict())
        row["x"] = "" if report.x is None else report.x
        row["mse_closed_form"] = closed
        row["within_tolerance"] = check_cells([report], [closed]).violations == 0
        rows.append(row)
    if config.output_format == OutputFormat.JSON:
        write_json(
            {
                "estimator": _estimator_metadata(config),
                "cells": summary.cells,
                "violations": summary.violations,
                "rows": rows,
            },
            config.out,
        )
    else:
        write_csv(SIMULATE_COLUMNS, rows, config.out)
    logger.info("モンテカルロ判定: %d/%d セルが %.0f 標準誤差を超過", summary.violations, summary.cells, summary.k)
    if not summary.passed:
        raise AcceptanceError(
            f"{summary.violations} of {summary.cells} cells exceed {summary.k:g} standard errors",
            failed=summary.violations,
        )


def cmd_sequence(config: ExperimentConfig, runtime: RuntimeConfig) -> None:
    """1 本の係数列（n, x_n）とメタデータを書き出す。"""
    ensemble = config.ensemble()
    seq = ensemble.sequence(config.p)
    snr_db, snr_linear = snr(seq, config.sigma_w)
    metadata: dict[str, Any] = {**ensemble.as_dict(), "p": seq.p, "kappa": seq.kappa, "snr_linear": snr_linear}
    metadata["sequence_snr_db"] = snr_db
    rows = [{"n": i + 1, "x_n": float(x)} for i, x in enumerate(seq.coefficients)]
    if config.output_format == OutputFormat.JSON:
        write_json({"metadata": metadata, "coefficients": rows, "histogram": _histogram_rows(seq, config)}, config.out)
        return
    write_csv(SEQUENCE_COLUMNS, rows, config.out)
    metadata_path = sibling_path(config.out, "meta", ".json")
    if metadata_path is not None:
        write_json(metadata, metadata_path)


def _histogram_rows(seq: DecayModel, config: ExperimentConfig) -> list[dict[str, object]]:
    width = config.bin_width * config.amplitude_unit
    return [
        {"bin_center_over_sigma": center / config.sigma_w, "count": count}
        for center, count in histogram(seq, width)
    ]


def _estimator_metadata(config: ExperimentConfig, family: EstimatorKind | None = None) -> dict[str, object]:
    estimator = config.estimator(family)
    params: dict[str, object] = {
        name: value if name == "alpha" else value / config.sigma_w for name, value in estimator.as_dict().items()
    }
    return {"family": estimator.kind.label, "sigma_w": config.sigma_w, "params": params}


# ---------------------------------------------------------------------------
# 引数解析
# ---------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"整数ではありません: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"1 以上で指定してください: {value}")
    return value


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON 設定ファイル（引数が優先）")
    parser.add_argument("--env-file", default=".env", help="読み込む .env ファイルのパス (default: .env)")
    parser.add_argument("--log-level", default=None, help="ログレベル（LOG_LEVEL を上書き）")
    parser.add_argument("--workers", type=_positive_int, default=None, help="ワーカースレッド数")
    parser.add_argument("--sigma", dest="sigma_w", type=float, default=None, help="雑音の標準偏差 σ_w (default: 1)")
    parser.add_argument(
        "--absolute",
        action="store_true",
        default=None,
        help="振幅パラメータと x グリッドを σ_w 単位ではなく絶対単位で解釈する",
    )
    parser.add_argument("--format", dest="output_format", choices=["csv", "json"], default=None, help="出力形式")
    parser.add_argument("--out", type=Path, default=None, help="出力先（省略時は標準出力）")


def _add_grid(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--x-min", dest="x_min", type=float, default=None, help="x グリッドの下端 (default: 0)")
    parser.add_argument("--x-max", dest="x_max", type=float, default=None, help="x グリッドの上端 (default: 8)")
    parser.add_argument("--x-steps", dest="x_steps", type=int, default=None, help="x グリッドの点数 (default: 33)")


_FAMILY_CHOICES = ["ht", "pl", "ss", "HT", "PL", "SS"]


def _add_estimator(parser: argparse.ArgumentParser, family: bool = True, multiple: bool = False) -> None:
    if multiple:
        parser.add_argument(
            "--family",
            dest="families",
            nargs="+",
            choices=[*_FAMILY_CHOICES, "all"],
            default=None,
            help="推定器（複数指定可、all は 3 つすべて。省略時は --alpha / --T0 の指定から決める）",
        )
    elif family:
        parser.add_argument("--family", choices=_FAMILY_CHOICES, default=None, help="推定器")
    parser.add_argument("--T", dest="threshold", type=float, default=None, help="しきい値 T (default: 2)")
    if family:
        parser.add_argument("--alpha", type=float, default=None, help="PL の傾き α (default: 0.5)")
        parser.add_argument("--T0", dest="inner_threshold", type=float, default=None, help="SS の内側しきい値 T0")
        parser.add_argument("--T0-ratio", dest="inner_ratio", type=float, default=None, help="T0 = ratio·T (default: 0.5)")


def _add_sequence(parser: argparse.ArgumentParser, single_p: bool) -> None:
    parser.add_argument("--N", dest="n", type=_positive_int, default=None, help="係数の数 (default: 101)")
    parser.add_argument("--lambda", dest="lam", type=float, default=None, help="減衰の尺度 λ (default: 0.04)")
    if single_p:
        parser.add_argument("--p", type=float, default=None, help="減衰率 p (default: 1)")
    parser.add_argument(
        "--p-grid", dest="p_grid", type=float, nargs="+", default=None, help="較正に使う p の一覧（既定は 50 点）"
    )
    parser.add_argument(
        "--peak", dest="peak_multiple", type=float, default=None, help="最大係数の σ_w 倍率 (default: 10)"
    )
    parser.add_argument("--bin-width", dest="bin_width", type=float, default=None, help="ヒストグラムのビン幅（σ_w 単位）")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="threshold-risk", description="しきい値推定器のリスク解析")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    risk = subparsers.add_parser("risk-curve", help="バイアス・MSE・下限の曲線")
    _add_common(risk)
    _add_grid(risk)
    _add_estimator(risk, multiple=True)
    risk.set_defaults(handler=cmd_risk_curve)

    bounds = subparsers.add_parser("bounds", help="HT の MSE と下限の比較")
    _add_common(bounds)
    _add_grid(bounds)
    _add_estimator(bounds, family=False)
    bounds.set_defaults(handler=cmd_bounds)

    sweep = subparsers.add_parser("sweep", help="減衰率スイープと最適化")
    _add_common(sweep)
    _add_sequence(sweep, single_p=False)
    sweep.add_argument(
        "--t-max", dest="t_max", type=float, default=None, help="しきい値の探索上限（σ_w 単位、default: 12）"
    )
    sweep.set_defaults(handler=cmd_sweep)

    simulate = subparsers.add_parser("simulate", help="モンテカルロ検証")
    _add_common(simulate)
    _add_grid(simulate)
    _add_estimator(simulate)
    _add_sequence(simulate, single_p=True)
    simulate.add_argument("--trials", type=int, default=None, help="試行回数（点: 10^6、係数列: 10^5）")
    simulate.add_argument("--seed", type=int, default=None, help="乱数シード (default: 0)")
    simulate.add_argument("--sequence", action="store_true", help="x グリッドではなく係数列全体で検証する")
    simulate.set_defaults(handler=cmd_simulate)

    sequence = subparsers.add_parser("sequence", help="係数列の書き出し")
    _add_common(sequence)
    _add_sequence(sequence, single_p=True)
    sequence.set_defaults(handler=cmd_sequence)
    return parser


_NON_CONFIG_ARGS = {"command", "handler", "config", "env_file", "log_level", "workers", "sequence"}


def build_experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    """既定値 < JSON 設定ファイル < 引数 の順に上書きした実験設定を返す。"""
    base = load_experiment_file(args.config) if args.config is not None else ExperimentConfig()
    overrides = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG_ARGS}
    if "families" in overrides and overrides["families"] is None:
        overrides["families"] = _families_from_flags(args)
    return base.with_overrides(**overrides).validate()


def _families_from_flags(args: argparse.Namespace) -> list[str] | None:
    """--family を省略した risk-curve で、--alpha は PL、--T0 / --T0-ratio は SS を選ぶ。

    両方あれば HT と合わせた 3 つを比較する。どちらもなければ設定ファイルか既定値に任せる。
    """
    with_alpha = args.alpha is not None
    with_inner = args.inner_threshold is not None or args.inner_ratio is not None
    if with_alpha and with_inner:
        return ["all"]
    if with_alpha:
        return ["pl"]
    if with_inner:
        return ["ss"]
    return None


def _log_banner(command: str, config: ExperimentConfig, runtime: RuntimeConfig) -> None:
    logger.info("=== threshold-risk %s ===", command)
    logger.info("  sigma_w=%g absolute=%s format=%s", config.sigma_w, config.absolute, config.output_format.value)
    logger.info("  workers=%d chunk_size=%d LOG_LEVEL=%s", runtime.max_workers, runtime.chunk_size, runtime.log_level)
    logger.info("  出力先: %s", config.out if config.out is not None else "<stdout>")
    logger.info("=" * (len(command) + 22))


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    load_dotenv(dotenv_path=args.env_file)

    try:
        runtime = load_runtime_config()
        if args.log_level is not None:
            runtime = dataclasses.replace(runtime, log_level=args.log_level.strip().upper())
        if args.workers is not None:
            runtime = dataclasses.replace(runtime, max_workers=args.workers)
        configure_logging(runtime)
        config = build_experiment_config(args)
        _log_banner(args.command, config, runtime)
        if args.command == "simulate":
            cmd_simulate(config, runtime, sequence=args.sequence)
        else:
            args.handler(config, runtime)
    except AcceptanceError as e:
        print(f"エラー: {e}", file=sys.stderr)
        return EXIT_ACCEPTANCE
    except NumericError as e:
        print(f"エラー: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as e:
        print(f"エラー: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK

