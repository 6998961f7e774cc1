"""閉形式の式で共通に使うスカラー特殊関数。

Q(x) は標準正規分布の裾確率ではなく π^{-1/2} ∫_x^∞ e^{-t²} dt = erfc(x)/2 である点に注意。
全関数は numpy 配列を受け付け、要素ごとに評価する。スカラー入力には float を返す。
"""

from __future__ import annotations

import math
from typing import TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

Probability: TypeAlias = float
"""[0, 1] に収まる無次元量。Q と Γ_inc の戻り値。"""

FloatArray: TypeAlias = NDArray[np.float64]

_SQRT_PI = math.sqrt(math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def to_output(values: ArrayLike, scalar: bool) -> float | FloatArray:
    """スカラー入力なら float、配列入力なら ndarray に揃える。"""
    if scalar:
        return float(np.asarray(values).reshape(()))
    return np.asarray(values, dtype=np.float64)


def is_scalar(*values: ArrayLike) -> bool:
    """全引数が 0 次元なら True。"""
    return all(np.ndim(v) == 0 for v in values)


def gauss_q(x: ArrayLike) -> float | FloatArray:
    """Q(x) = π^{-1/2} ∫_x^∞ e^{-t²} dt = erfc(x)/2 を返す。

    ±∞ は極限値 (0, 1) を返す。

    Raises:
        ValueError: NaN が含まれる場合
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(np.isnan(arr)):
        raise ValueError("gauss_q requires a real argument, got NaN")
    return to_output(0.5 * special.erfc(arr), arr.ndim == 0)


def gauss_q_derivative(x: ArrayLike) -> float | FloatArray:
    """dQ/dx = -e^{-x²}/√π。"""
    arr = np.asarray(x, dtype=np.float64)
    return to_output(-np.exp(-(arr**2)) / _SQRT_PI, arr.ndim == 0)


def gamma_inc_3half(x: ArrayLike) -> float | FloatArray:
    """Γ_inc(x, 3/2) = (2/√π) ∫_0^x t^{1/2} e^{-t} dt（形状 3/2 の正則化下側不完全ガンマ関数）。

    Raises:
        ValueError: x < 0 または NaN の場合
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise ValueError(f"gamma_inc_3half requires x >= 0, got {x!r}")
    return to_output(special.gammainc(1.5, arr), arr.ndim == 0)


def signed_gamma_inc_3half(z: ArrayLike) -> float | FloatArray:
    """sgn(z)·Γ_inc(z², 3/2)。z の奇関数で、HT の平均二乗誤差の閉形式に現れる。"""
    arr = np.asarray(z, dtype=np.float64)
    squared = np.where(np.isfinite(arr), arr**2, np.inf)
    return to_output(np.sign(arr) * special.gammainc(1.5, squared), arr.ndim == 0)


def gauss_pdf(y: ArrayLike, sigma: ArrayLike) -> float | FloatArray:
    """平均 0・標準偏差 sigma のガウス密度 p_w(y)。

    Raises:
        ValueError: sigma <= 0 の場合
    """
    s = np.asarray(sigma, dtype=np.float64)
    if np.any(~(s > 0)):
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    arr = np.asarray(y, dtype=np.float64)
    t = arr / s
    return to_output(np.exp(-0.5 * t * t) / (_SQRT_2PI * s), is_scalar(y, sigma))


def half_gauss_kernel(z: ArrayLike) -> float | FloatArray:
    """e^{-z²}/√(2π)。標準化引数 z = (x ∓ T)/(√2 σ_w) での標準正規密度に等しい。"""
    arr = np.asarray(z, dtype=np.float64)
    return to_output(np.exp(-(arr**2)) / _SQRT_2PI, arr.ndim == 0)
