"""推定器のバイアス・バイアス微分・平均二乗誤差の閉形式と、Cramér-Rao 限界・オラクル限界。

真値 x の関数として閉形式で評価する。全関数は numpy 配列を受け付けて x とパラメータを
ブロードキャストするため、最適化ではグリッド全体を一度に評価できる。スカラー入力には float を返す。

閉形式の検証用に、推定器写像をガウス密度に対して適応求積する独立なオラクルも提供する。
"""

from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike
from scipy import integrate

from threshold_risk.domain.estimators import (
    EstimatorParams,
    HardThresholdParams,
    PiecewiseLinearParams,
    SemisoftParams,
    scalar_estimator,
)
from threshold_risk.engine.special_math import (
    FloatArray,
    gauss_q,
    half_gauss_kernel,
    is_scalar,
    signed_gamma_inc_3half,
    to_output,
)

logger = logging.getLogger(__name__)

MSE_BOUND_TOLERANCE = 1e-9
"""限界関係を判定するときの許容誤差（σ_w² 単位）。"""

NARROW_RAMP_WIDTH = 0.25
"""T − T0 がこの値（σ_w 単位）未満のとき、セミソフトの傾斜区間を Gauss-Legendre 則で積分する。"""

QUADRATURE_HALF_WIDTH = 12.0
QUADRATURE_ABS_TOLERANCE = 1e-12
QUADRATURE_FAILURE_TOLERANCE = 1e-10

_SQRT2 = math.sqrt(2.0)
_SQRT_PI = math.sqrt(math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# 傾斜区間は幅が NARROW_RAMP_WIDTH·σ_w 未満なので 16 点で丸め誤差まで収束する
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class NumericError(ArithmeticError):
    """数値計算が所定の精度で完了しなかった場合の例外。"""


class QuadratureError(NumericError):
    """適応求積が収束しなかった場合の例外。"""

    def __init__(self, message: str, *, estimate: float, abserr: float, panels: int) -> None:
        super().__init__(f"{message} (estimate={estimate!r}, abserr={abserr:.3e}, panels={panels})")
        self.estimate = estimate
        self.abserr = abserr
        self.panels = panels


@dataclass(frozen=True)
class FisherInfo:
    """係数 1 個あたりの Fisher 情報量 σ_w⁻²。N 係数問題では value·I_N になる。"""

    value: float

    def matrix(self, n: int) -> FloatArray:
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        return self.value * np.eye(n)


@dataclass(frozen=True)
class StandardizedArgs:
    """閉形式に現れる標準化引数。x_s/x_d はしきい値 T、xi_s/xi_d は内側しきい値 T0 に対応する。"""

    x_s: FloatArray
    x_d: FloatArray
    xi_s: FloatArray
    xi_d: FloatArray

    @classmethod
    def compute(
        cls, x: ArrayLike, threshold: ArrayLike, sigma_w: float, inner_threshold: ArrayLike = 0.0
    ) -> StandardizedArgs:
        xa = np.asarray(x, dtype=np.float64)
        ta = np.asarray(threshold, dtype=np.float64)
        t0 = np.asarray(inner_threshold, dtype=np.float64)
        scale = _SQRT2 * sigma_w
        return cls(x_s=(xa + ta) / scale, x_d=(xa - ta) / scale, xi_s=(xa + t0) / scale, xi_d=(xa - t0) / scale)


class RiskPoint(NamedTuple):
    """真値 x における推定器の誤差特性と各下限。"""

    x: float
    bias: float
    bias_deriv: float
    mse: float
    crb_unbiased: float
    crb_biased: float
    oracle: float

    def normalized(self, sigma_w: float) -> dict[str, float]:
        """σ_w で無次元化した値（図の軸と同じ規約）。"""
        var = sigma_w * sigma_w
        return {
            "x_over_sigma": self.x / sigma_w,
            "bias_over_sigma": self.bias / sigma_w,
            "mse_over_sigma2": self.mse / var,
            "crb_biased_over_sigma2": self.crb_biased / var,
            "crb_unbiased_over_sigma2": self.crb_unbiased / var,
            "oracle_over_sigma2": self.oracle / var,
        }


class BoundViolation(NamedTuple):
    """mse が下限を下回った点。"""

    x: float
    bound: str
    mse: float
    bound_value: float


def _check_sigma(sigma_w: float) -> None:
    if not sigma_w > 0 or math.isinf(sigma_w):
        raise ValueError(f"sigma_w must be positive and finite, got {sigma_w}")


def _check_nonnegative(name: str, values: ArrayLike) -> FloatArray:
    arr = np.asarray(values, dtype=np.float64)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be >= 0, got {values!r}")
    return arr


def _q(z: FloatArray) -> FloatArray:
    return np.asarray(gauss_q(z))


def _k(z: FloatArray) -> FloatArray:
    return np.asarray(half_gauss_kernel(z))


# ---------------------------------------------------------------------------
# 硬しきい値
# ---------------------------------------------------------------------------


def bias_ht(x: ArrayLike, threshold: ArrayLike, sigma_w: float) -> float | FloatArray:
    """硬しきい値推定器のバイアス b(x) = −∫_{−T}^{T} y p_w(y − x) dy（閉形式）。

    b/σ_w = (2π)^{-1/2}(e^{-x_D²} − e^{-x_S²}) − (x/σ_w)(Q(x_D) − Q(x_S))。x について奇関数。

    Raises:
        ValueError: threshold < 0 または sigma_w <= 0 の場合
    """
    _check_sigma(sigma_w)
    _check_nonnegative("threshold", threshold)
    args = StandardizedArgs.compute(x, threshold, sigma_w)
    xa = np.asarray(x, dtype=np.float64)
    value = sigma_w * (_k(args.x_d) - _k(args.x_s)) - xa * (_q(args.x_d) - _q(args.x_s))
    return to_output(value, is_scalar(x, threshold))


def bias_deriv_ht(x: ArrayLike, threshold: ArrayLike, sigma_w: float) -> float | FloatArray:
    """∂b/∂x = −(Q(x_D) − Q(x_S)) + (T/σ_w)(2π)^{-1/2}(e^{-x_S²} + e^{-x_D²})。x について偶関数。"""
    _check_sigma(sigma_w)
    ta = _check_nonnegative("threshold", threshold)
    args = StandardizedArgs.compute(x, threshold, sigma_w)
    with np.errstate(invalid="ignore"):
        edge = np.where(np.isinf(ta), 0.0, (ta / sigma_w) * (_k(args.x_s) + _k(args.x_d)))
    value = -(_q(args.x_d) - _q(args.x_s)) + edge
    return to_output(value, is_scalar(x, threshold))


def mse_ht(x: ArrayLike, threshold: ArrayLike, sigma_w: float) -> float | FloatArray:
    """硬しきい値推定器の平均二乗誤差（閉形式）。

    mse/σ_w² = 1 + (x/σ_w)²(Q(x_D) − Q(x_S)) + ½(sgn(x_D)Γ_inc(x_D², 3/2) − sgn(x_S)Γ_inc(x_S², 3/2))。
    """
    _check_sigma(sigma_w)
    _check_nonnegative("threshold", threshold)
    args = StandardizedArgs.compute(x, threshold, sigma_w)
    ratio = np.asarray(x, dtype=np.float64) / sigma_w
    gamma_terms = np.asarray(signed_gamma_inc_3half(args.x_d)) - np.asarray(signed_gamma_inc_3half(args.x_s))
    value = sigma_w**2 * (1.0 + ratio**2 * (_q(args.x_d) - _q(args.x_s)) + 0.5 * gamma_terms)
    return to_output(value, is_scalar(x, threshold))


def truncated_second_moment(x: ArrayLike, threshold: ArrayLike, sigma_w: float) -> float | FloatArray:
    """∫_{−T}^{T} y² p_w(y − x) dy を閉形式で返す。"""
    _check_sigma(sigma_w)
    ta = _check_nonnegative("threshold", threshold)
    xa = np.asarray(x, dtype=np.float64)
    args = StandardizedArgs.compute(x, threshold, sigma_w)
    mass = _q(args.x_d) - _q(args.x_s)
    with np.errstate(invalid="ignore"):
        edge = np.where(
            np.isinf(ta),
            0.0,
            sigma_w * ((xa - ta) * _k(args.x_s) - (xa + ta) * _k(args.x_d)),
        )
    value = (xa**2 + sigma_w**2) * mass + edge
    return to_output(value, is_scalar(x, threshold))


def mse_ht_terms(x: ArrayLike, threshold: ArrayLike, sigma_w: float) -> tuple[FloatArray, FloatArray, FloatArray]:
    """硬しきい値の平均二乗誤差を 3 項に分解する。

    Returns:
        (最尤推定器の誤差 σ_w², バイアスによる増分 −2x·b ≧ 0, 不感帯での減少分 −∫y²p ≦ 0)。和は mse_ht に等しい。
    """
    xa = np.asarray(x, dtype=np.float64)
    bias = np.asarray(bias_ht(x, threshold, sigma_w))
    moment = np.asarray(truncated_second_moment(x, threshold, sigma_w))
    ml_term = np.full(np.broadcast(xa, np.asarray(threshold)).shape, sigma_w**2)
    return ml_term, -2.0 * xa * bias, -moment


# ---------------------------------------------------------------------------
# 区分線形
# ---------------------------------------------------------------------------


def _check_alpha(alpha: ArrayLike) -> FloatArray:
    arr = np.asarray(alpha, dtype=np.float64)
    if np.any(np.isnan(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise ValueError(f"alpha must be in [0, 1], got {alpha!r}")
    return arr


def bias_pl(x: ArrayLike, params: PiecewiseLinearParams, sigma_w: float) -> float | FloatArray:
    """区分線形推定器のバイアス (1 − α)·b_ht(x)。"""
    return to_output((1.0 - params.alpha) * np.asarray(bias_ht(x, params.threshold, sigma_w)), is_scalar(x))


def bias_deriv_pl(x: ArrayLike, params: PiecewiseLinearParams, sigma_w: float) -> float | FloatArray:
    return to_output((1.0 - params.alpha) * np.asarray(bias_deriv_ht(x, params.threshold, sigma_w)), is_scalar(x))


def mse_pl_grid(x: ArrayLike, alpha: ArrayLike, threshold: ArrayLike, sigma_w: float) -> float | FloatArray:
    """区分線形推定器の平均二乗誤差 σ_w² − (1 − α)·2x·b_ht(x) − (1 − α²)∫_{−T}^{T} y² p_w(y − x) dy。

    x・alpha・threshold は互いにブロードキャストされる。
    """
    a = _check_alpha(alpha)
    xa = np.asarray(x, dtype=np.float64)
    bias = np.asarray(bias_ht(x, threshold, sigma_w))
    moment = np.asarray(truncated_second_moment(x, threshold, sigma_w))
    value = sigma_w**2 - (1.0 - a) * 2.0 * xa * bias - (1.0 - a * a) * moment
    return to_output(value, is_scalar(x, alpha, threshold))


def mse_pl(x: ArrayLike, params: PiecewiseLinearParams, sigma_w: float) -> float | FloatArray:
    return mse_pl_grid(x, params.alpha, params.threshold, sigma_w)


# ---------------------------------------------------------------------------
# セミソフト縮小
# ---------------------------------------------------------------------------


class _RampTerms(NamedTuple):
    """傾斜区間 [T0, T] の寄与。bias = b_ht(x; T) + ramp_bias、mse = mse_ht(x; T) + f(x) + f(−x)。"""

    ramp_bias: FloatArray
    ramp_bias_deriv: FloatArray
    f_plus: FloatArray
    f_minus: FloatArray


def _check_semisoft(inner_threshold: ArrayLike, threshold: ArrayLike) -> tuple[FloatArray, FloatArray]:
    t0 = _check_nonnegative("inner_threshold", inner_threshold)
    ta = _check_nonnegative("threshold", threshold)
    if np.any(t0 > ta):
        raise ValueError("inner_threshold must not exceed threshold")
    if np.any(np.isinf(ta)):
        raise ValueError("semisoft thresholds must be finite")
    return t0, ta


def _f_closed(x: FloatArray, t0: FloatArray, ta: FloatArray, beta: FloatArray, sigma_w: float) -> FloatArray:
    """f(x) の閉形式。

    f/(β²σ_w²) = (x_D(1 − 2T0/T)e^{-x_D²} − (ξ_S − √2 T0 x/(σ_w T))e^{-ξ_D²})/√π
                 + (1 − 2ξ_D(ξ_S − √2 T0 x/(σ_w T)))(Q(x_D) − Q(ξ_D))
    """
    args = StandardizedArgs.compute(x, ta, sigma_w, inner_threshold=t0)
    shifted = args.xi_s - _SQRT2 * t0 * x / (sigma_w * ta)
    exp_part = (args.x_d * (1.0 - 2.0 * t0 / ta) * np.exp(-(args.x_d**2)) - shifted * np.exp(-(args.xi_d**2))) / _SQRT_PI
    mass_part = (1.0 - 2.0 * args.xi_d * shifted) * (_q(args.x_d) - _q(args.xi_d))
    return beta**2 * sigma_w**2 * (exp_part + mass_part)


def _ramp_terms_closed(x: FloatArray, t0: FloatArray, ta: FloatArray, sigma_w: float) -> _RampTerms:
    beta = ta / (ta - t0)
    args = StandardizedArgs.compute(x, ta, sigma_w, inner_threshold=t0)
    b_inner = np.asarray(bias_ht(x, t0, sigma_w))
    b_outer = np.asarray(bias_ht(x, ta, sigma_w))
    d_inner = np.asarray(bias_deriv_ht(x, t0, sigma_w))
    d_outer = np.asarray(bias_deriv_ht(x, ta, sigma_w))
    mass = _q(args.x_d) - _q(args.xi_d) + _q(args.x_s) - _q(args.xi_s)
    bias = beta * b_inner - (beta - 1.0) * b_outer - beta * t0 * mass
    edges = _k(args.x_d) - _k(args.xi_d) + _k(args.x_s) - _k(args.xi_s)
    deriv = beta * d_inner - (beta - 1.0) * d_outer + (beta * t0 / sigma_w) * edges
    return _RampTerms(
        ramp_bias=bias - b_outer,
        ramp_bias_deriv=deriv - d_outer,
        f_plus=_f_closed(x, t0, ta, beta, sigma_w),
        f_minus=_f_closed(-x, t0, ta, beta, sigma_w),
    )


def _ramp_terms_narrow(x: FloatArray, t0: FloatArray, ta: FloatArray, sigma_w: float) -> _RampTerms:
    """幅の狭い傾斜区間を Gauss-Legendre 則で積分する。

    β·(y − T0) = T·(1 + t)/2（t は [−1, 1] 上の節点）と書けるので β で割る操作が現れず、
    T0 = T では全項が厳密に 0 になる。
    """
    gap = (ta - t0)[..., None]
    y = t0[..., None] + 0.5 * gap * (1.0 + _GL_NODES)
    xe = x[..., None]
    ramp = 0.5 * ta[..., None] * (1.0 + _GL_NODES)
    var = sigma_w * sigma_w
    p_minus = np.exp(-0.5 * (y - xe) ** 2 / var) / (_SQRT_2PI * sigma_w)
    p_plus = np.exp(-0.5 * (y + xe) ** 2 / var) / (_SQRT_2PI * sigma_w)
    half_width = 0.5 * gap

    def _integrate(values: FloatArray) -> FloatArray:
        return np.asarray(np.sum(_GL_WEIGHTS * values, axis=-1) * half_width[..., 0])

    return _RampTerms(
        ramp_bias=_integrate(ramp * (p_minus - p_plus)),
        ramp_bias_deriv=_integrate(ramp * ((y - xe) * p_minus + (y + xe) * p_plus) / var),
        f_plus=_integrate((ramp**2 - 2.0 * xe * ramp) * p_minus),
        f_minus=_integrate((ramp**2 + 2.0 * xe * ramp) * p_plus),
    )


def _ramp_terms(x: ArrayLike, inner_threshold: ArrayLike, threshold: ArrayLike, sigma_w: float) -> _RampTerms:
    _check_sigma(sigma_w)
    t0, ta = _check_semisoft(inner_threshold, threshold)
    xa, t0, ta = np.broadcast_arrays(np.asarray(x, dtype=np.float64), t0, ta)
    narrow = (ta - t0) < NARROW_RAMP_WIDTH * sigma_w
    # 狭い要素には閉形式で割り算が起きないダミー値を入れ、結果は np.where で捨てる
    safe_t0 = np.where(narrow, 0.0, t0)
    safe_ta = np.where(narrow, sigma_w, ta)
    closed = _ramp_terms_closed(xa, safe_t0, safe_ta, sigma_w)
    gl = _ramp_terms_narrow(xa, t0, ta, sigma_w)
    return _RampTerms(*(np.where(narrow, g, c) for g, c in zip(gl, closed)))


def f_ss(x: ArrayLike, params: SemisoftParams, sigma_w: float) -> float | FloatArray:
    """f(x) = ∫_{T0}^{T} (β²(y − T0)² − 2xβ(y − T0)) p_w(y − x) dy。T0 = T では 0。"""
    if params.is_hard_threshold:
        _check_sigma(sigma_w)
        return to_output(np.zeros_like(np.asarray(x, dtype=np.float64)), is_scalar(x))
    terms = _ramp_terms(x, params.inner_threshold, params.threshold, sigma_w)
    return to_output(terms.f_plus, is_scalar(x))


def bias_ss(x: ArrayLike, params: SemisoftParams, sigma_w: float) -> float | FloatArray:
    """セミソフト縮小推定器のバイアス。

    β·b_ht(x; T0) − (β − 1)·b_ht(x; T) − βT0(Q(x_D) − Q(ξ_D) + Q(x_S) − Q(ξ_S))。T0 = T では b_ht(x; T)。
    """
    if params.is_hard_threshold:
        return bias_ht(x, params.threshold, sigma_w)
    terms = _ramp_terms(x, params.inner_threshold, params.threshold, sigma_w)
    value = np.asarray(bias_ht(x, params.threshold, sigma_w)) + terms.ramp_bias
    return to_output(value, is_scalar(x))


def bias_deriv_ss(x: ArrayLike, params: SemisoftParams, sigma_w: float) -> float | FloatArray:
    """bias_ss の x に関する解析的な微分。"""
    if params.is_hard_threshold:
        return bias_deriv_ht(x, params.threshold, sigma_w)
    terms = _ramp_terms(x, params.inner_threshold, params.threshold, sigma_w)
    value = np.asarray(bias_deriv_ht(x, params.threshold, sigma_w)) + terms.ramp_bias_deriv
    return to_output(value, is_scalar(x))


def mse_ss_grid(
    x: ArrayLike, inner_threshold: ArrayLike, threshold: ArrayLike, sigma_w: float
) -> float | FloatArray:
    """セミソフト縮小推定器の平均二乗誤差 mse_ht(x; T) + f(x) + f(−x)。引数はブロードキャストされる。"""
    terms = _ramp_terms(x, inner_threshold, threshold, sigma_w)
    value = np.asarray(mse_ht(x, threshold, sigma_w)) + terms.f_plus + terms.f_minus
    return to_output(value, is_scalar(x, inner_threshold, threshold))


def mse_ss(x: ArrayLike, params: SemisoftParams, sigma_w: float) -> float | FloatArray:
    if params.is_hard_threshold:
        return mse_ht(x, params.threshold, sigma_w)
    return mse_ss_grid(x, params.inner_threshold, params.threshold, sigma_w)


# ---------------------------------------------------------------------------
# 推定器の種類によるディスパッチ
# ---------------------------------------------------------------------------


def bias(estimator: EstimatorParams, x: ArrayLike, sigma_w: float) -> float | FloatArray:
    if isinstance(estimator, HardThresholdParams):
        return bias_ht(x, estimator.threshold, sigma_w)
    if isinstance(estimator, PiecewiseLinearParams):
        return bias_pl(x, estimator, sigma_w)
    return bias_ss(x, estimator, sigma_w)


def bias_deriv(estimator: EstimatorParams, x: ArrayLike, sigma_w: float) -> float | FloatArray:
    if isinstance(estimator, HardThresholdParams):
        return bias_deriv_ht(x, estimator.threshold, sigma_w)
    if isinstance(estimator, PiecewiseLinearParams):
        return bias_deriv_pl(x, estimator, sigma_w)
    return bias_deriv_ss(x, estimator, sigma_w)


def mse(estimator: EstimatorParams, x: ArrayLike, sigma_w: float) -> float | FloatArray:
    if isinstance(estimator, HardThresholdParams):
        return mse_ht(x, estimator.threshold, sigma_w)
    if isinstance(estimator, PiecewiseLinearParams):
        return mse_pl(x, estimator, sigma_w)
    return mse_ss(x, estimator, sigma_w)


# ---------------------------------------------------------------------------
# 下限
# ---------------------------------------------------------------------------


def fisher_information(sigma_w: float) -> FisherInfo:
    _check_sigma(sigma_w)
    return FisherInfo(value=sigma_w**-2)


def crb_unbiased(sigma_w: float) -> float:
    """不偏推定器に対する Cramér-Rao 限界（係数 1 個あたり）σ_w²。"""
    return 1.0 / fisher_information(sigma_w).value


def crb_unbiased_total(n: int, sigma_w: float) -> float:
    """N 係数全体での不偏 Cramér-Rao 限界 N·σ_w²。"""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return n * crb_unbiased(sigma_w)


def crb_biased_scalar(bias: ArrayLike, bias_deriv: ArrayLike, sigma_w: float) -> float | FloatArray:
    """スカラー AWGN でのバイアス付き Cramér-Rao 限界 b² + σ_w²(1 + ∂b/∂x)²。"""
    _check_sigma(sigma_w)
    b = np.asarray(bias, dtype=np.float64)
    d = np.asarray(bias_deriv, dtype=np.float64)
    return to_output(b * b + sigma_w**2 * (1.0 + d) ** 2, is_scalar(bias, bias_deriv))


def oracle_gain(x: ArrayLike, sigma_w: float) -> float | FloatArray:
    """x を知っているときの最適な線形ゲイン a_opt = x²/(x² + σ_w²)。"""
    _check_sigma(sigma_w)
    xa = np.asarray(x, dtype=np.float64)
    return to_output(xa**2 / (xa**2 + sigma_w**2), is_scalar(x))


def mse_linear(x: ArrayLike, gain: ArrayLike, sigma_w: float) -> float | FloatArray:
    """線形推定器 a·y の平均二乗誤差 a²σ_w² + (1 − a)²x²。"""
    _check_sigma(sigma_w)
    xa = np.asarray(x, dtype=np.float64)
    a = np.asarray(gain, dtype=np.float64)
    return to_output(a**2 * sigma_w**2 + (1.0 - a) ** 2 * xa**2, is_scalar(x, gain))


def oracle_bound(x: ArrayLike, sigma_w: float) -> float | FloatArray:
    """オラクル限界 σ_w²x²/(x² + σ_w²)。実現不可能な線形推定器の最小誤差。"""
    _check_sigma(sigma_w)
    xa = np.asarray(x, dtype=np.float64)
    return to_output(sigma_w**2 * xa**2 / (xa**2 + sigma_w**2), is_scalar(x))


def risk_curve(estimator: EstimatorParams, sigma_w: float, x_grid: Sequence[float] | FloatArray) -> list[RiskPoint]:
    """x グリッド上の各点で RiskPoint を組み立てる。

    Raises:
        ValueError: グリッドが空、または昇順でない場合
    """
    _check_sigma(sigma_w)
    grid = np.asarray(x_grid, dtype=np.float64).ravel()
    if grid.size == 0:
        raise ValueError("x_grid must not be empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("x_grid must be sorted in ascending order")
    b = np.asarray(bias(estimator, grid, sigma_w))
    d = np.asarray(bias_deriv(estimator, grid, sigma_w))
    m = np.asarray(mse(estimator, grid, sigma_w))
    crb_b = np.asarray(crb_biased_scalar(b, d, sigma_w))
    orc = np.asarray(oracle_bound(grid, sigma_w))
    crb_u = crb_unbiased(sigma_w)
    return [
        RiskPoint(
            x=float(grid[i]),
            bias=float(b[i]),
            bias_deriv=float(d[i]),
            mse=float(m[i]),
            crb_unbiased=crb_u,
            crb_biased=float(crb_b[i]),
            oracle=float(orc[i]),
        )
        for i in range(grid.size)
    ]


def check_bounds(
    points: Sequence[RiskPoint], sigma_w: float, tolerance: float = MSE_BOUND_TOLERANCE
) -> list[BoundViolation]:
    """mse ≧ crb_biased と mse ≧ oracle を各点で確認し、違反点を返す。"""
    tol = tolerance * sigma_w**2
    violations: list[BoundViolation] = []
    for point in points:
        if point.mse < point.crb_biased - tol:
            violations.append(BoundViolation(point.x, "crb_biased", point.mse, point.crb_biased))
        if point.mse < point.oracle - tol:
            violations.append(BoundViolation(point.x, "oracle", point.mse, point.oracle))
    return violations


# ---------------------------------------------------------------------------
# 求積オラクル
# ---------------------------------------------------------------------------


def _panel_edges(estimator: EstimatorParams, x: float, sigma_w: float) -> list[float]:
    lower = x - QUADRATURE_HALF_WIDTH * sigma_w
    upper = x + QUADRATURE_HALF_WIDTH * sigma_w
    cuts = {
        s * bp
        for bp in estimator.breakpoints
        for s in (-1.0, 1.0)
        if math.isfinite(bp) and lower < s * bp < upper
    }
    return [lower, *sorted(cuts), upper]


def _integrate_panels(integrand: Callable[[float], float], edges: list[float], scale: float) -> float:
    panels = len(edges) - 1
    epsabs = QUADRATURE_ABS_TOLERANCE * scale / panels
    total = 0.0
    total_err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            if b <= a:
                continue
            result = integrate.quad(integrand, a, b, epsabs=epsabs, epsrel=1e-13, limit=200, full_output=1)
            total += result[0]
            total_err += result[1]
    if total_err > QUADRATURE_FAILURE_TOLERANCE * scale:
        logger.warning("求積が収束しませんでした: estimate=%r abserr=%.3e panels=%d", total, total_err, panels)
        raise QuadratureError("adaptive quadrature did not converge", estimate=total, abserr=total_err, panels=panels)
    return total


def _error_integrand(estimator: EstimatorParams, x: float, sigma_w: float, power: int) -> Callable[[float], float]:
    norm = 1.0 / (_SQRT_2PI * sigma_w)
    estimate = scalar_estimator(estimator)

    def integrand(y: float) -> float:
        t = (y - x) / sigma_w
        err = estimate(y) - x
        return err**power * norm * math.exp(-0.5 * t * t)

    return integrand


def quadrature_oracle_bias(estimator: EstimatorParams, x: float, sigma_w: float) -> float:
    """E[x̂(y)] − x を [x − 12σ_w, x + 12σ_w] 上の適応求積で評価する（推定器の折れ点で区間分割）。

    Raises:
        QuadratureError: 求積が収束しなかった場合
    """
    _check_sigma(sigma_w)
    edges = _panel_edges(estimator, x, sigma_w)
    return _integrate_panels(_error_integrand(estimator, x, sigma_w, 1), edges, sigma_w)


def quadrature_oracle_mse(estimator: EstimatorParams, x: float, sigma_w: float) -> float:
    """E[(x̂(y) − x)²] を適応求積で評価する。

    Raises:
        QuadratureError: 求積が収束しなかった場合
    """
    _check_sigma(sigma_w)
    edges = _panel_edges(estimator, x, sigma_w)
    return _integrate_panels(_error_integrand(estimator, x, sigma_w, 2), edges, sigma_w**2)
