"""一般化ガウス型で減衰する係数列と、そのエネルギー・SNR の較正。

x_n = κ(p)·exp(−[λ(n − 1)]^p), n = 1..N。κ(p) は列のエネルギーが指定値になるよう決める。
係数は降順に並んだ状態で生成する（下流の量はすべて並べ替えに対して不変）。
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

DEFAULT_LENGTH = 101
DEFAULT_LAMBDA = 0.04
DEFAULT_PEAK_MULTIPLE = 10.0
DEFAULT_P_RANGE = (1.0 / 3.0, 75.0)
DEFAULT_P_COUNT = 50


def _check_positive(name: str, value: float) -> None:
    if math.isnan(value) or value <= 0 or math.isinf(value):
        raise ValueError(f"{name} must be positive and finite, got {value}")


def _check_length(n: int) -> None:
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")


def decay_exponents(n: int, lam: float, p: float) -> NDArray[np.float64]:
    """[λ(n − 1)]^p を n = 1..N について返す。"""
    _check_length(n)
    _check_positive("lambda", lam)
    _check_positive("p", p)
    return np.power(lam * np.arange(n, dtype=np.float64), p)


def decay_profile_energy(n: int, lam: float, p: float) -> float:
    """S(p) = Σ_n exp(−2[λ(n − 1)]^p)。κ = 1 のときの列のエネルギー。"""
    return float(np.sum(np.exp(-2.0 * decay_exponents(n, lam, p))))


@dataclass(frozen=True)
class DecayModel:
    """エネルギーを正規化した減衰係数列。"""

    n: int
    lam: float
    p: float
    kappa: float
    energy: float
    coefficients: NDArray[np.float64] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return self.n

    @property
    def peak(self) -> float:
        """最大係数 x_1（= κ）。"""
        return float(self.coefficients[0])

    def as_dict(self) -> dict[str, float | int]:
        return {"N": self.n, "lambda": self.lam, "p": self.p, "kappa": self.kappa, "energy": self.energy}


DecaySequence = DecayModel


def make_sequence(n: int, lam: float, p: float, energy: float) -> DecayModel:
    """エネルギー energy の減衰係数列を作る。

    Args:
        n: 係数の数 N
        lam: 減衰の尺度 λ（1/λ 番目付近で e^{-1} まで減衰する）
        p: 減衰率
        energy: 列のエネルギー Σx_n²

    Raises:
        ValueError: パラメータが範囲外の場合
    """
    _check_positive("energy", energy)
    exponents = decay_exponents(n, lam, p)
    profile = np.exp(-exponents)
    kappa = math.sqrt(energy / float(np.sum(profile * profile)))
    coefficients = kappa * profile
    coefficients.setflags(write=False)
    return DecayModel(n=n, lam=lam, p=p, kappa=kappa, energy=energy, coefficients=coefficients)


def default_p_grid() -> NDArray[np.float64]:
    """[1/3, 75] 上に対数等間隔で 50 点。"""
    low, high = DEFAULT_P_RANGE
    return np.geomspace(low, high, DEFAULT_P_COUNT)


@dataclass(frozen=True)
class CalibratedEnsemble:
    """共通エネルギーに正規化した係数列の集まり。最大係数の最大値が peak_multiple·σ_w になる。"""

    n: int
    lam: float
    p_grid: tuple[float, ...]
    shared_energy: float
    sigma_w: float
    peak_multiple: float

    @property
    def snr_linear(self) -> float:
        return self.shared_energy / (self.n * self.sigma_w**2)

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr_linear)

    def sequence(self, p: float) -> DecayModel:
        return make_sequence(self.n, self.lam, p, self.shared_energy)

    def members(self) -> list[DecayModel]:
        return [self.sequence(p) for p in self.p_grid]

    def as_dict(self) -> dict[str, object]:
        return {
            "N": self.n,
            "lambda": self.lam,
            "p_grid": list(self.p_grid),
            "energy": self.shared_energy,
            "sigma_w": self.sigma_w,
            "snr_db": self.snr_db,
        }


def calibrate_ensemble(
    n: int,
    lam: float,
    p_grid: Sequence[float] | NDArray[np.float64],
    sigma_w: float,
    peak_multiple: float = DEFAULT_PEAK_MULTIPLE,
) -> CalibratedEnsemble:
    """全 p で同じエネルギーを持ち、最大係数の最大値が peak_multiple·σ_w になるよう較正する。

    κ(p) = sqrt(E/S(p)) なので E = (peak_multiple·σ_w)²·min_p S(p)。S(p) の単調性は仮定せず全点を走査する。

    Raises:
        ValueError: p_grid が空、またはパラメータが範囲外の場合
    """
    grid = tuple(float(p) for p in p_grid)
    if not grid:
        raise ValueError("p_grid must not be empty")
    _check_positive("sigma_w", sigma_w)
    _check_positive("peak_multiple", peak_multiple)
    min_profile = min(decay_profile_energy(n, lam, p) for p in grid)
    energy = (peak_multiple * sigma_w) ** 2 * min_profile
    return CalibratedEnsemble(
        n=n, lam=lam, p_grid=grid, shared_energy=energy, sigma_w=sigma_w, peak_multiple=peak_multiple
    )


def snr(seq: DecayModel, sigma_w: float) -> tuple[float, float]:
    """信号エネルギーと雑音エネルギーの比 Σx_n²/(Nσ_w²)。

    Returns:
        (dB 値, 線形値)
    """
    _check_positive("sigma_w", sigma_w)
    linear = seq.energy / (seq.n * sigma_w**2)
    return 10.0 * math.log10(linear), linear


def histogram(seq: DecayModel, bin_width: float) -> list[tuple[float, int]]:
    """係数の度数分布。ビンは 0 から bin_width 刻みで、全ビンの度数の和は N。

    Returns:
        (ビン中心, 度数) のリスト（最大係数を含むビンまで）
    """
    _check_positive("bin_width", bin_width)
    indices = np.floor(seq.coefficients / bin_width).astype(np.int64)
    counts = np.bincount(indices)
    return [((i + 0.5) * bin_width, int(c)) for i, c in enumerate(counts)]


def coefficient_clusters(seq: DecayModel, low: float = 0.1, high: float = 0.9) -> tuple[float, float]:
    """low·x_1 未満の係数の割合と、high·x_1 を超える係数の割合。

    p が大きいと係数は 0 付近と x_1 付近の 2 群に分かれ、両者の和が 1 に近づく。
    """
    if not 0 <= low <= high:
        raise ValueError(f"expected 0 <= low <= high, got low={low}, high={high}")
    peak = seq.peak
    below = float(np.count_nonzero(seq.coefficients < low * peak)) / seq.n
    above = float(np.count_nonzero(seq.coefficients > high * peak)) / seq.n
    return below, above
