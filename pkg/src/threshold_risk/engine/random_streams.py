"""再現可能な並列乱数ストリーム。

シード・係数番号・チャンク番号の組から Philox（カウンタベース）生成器を派生させる。
ストリームは組だけで決まるので、ワーカー数や実行順序に依らず同じ乱数列が得られる。
正規乱数は numpy の ziggurat 法で生成する。
"""

from __future__ import annotations

import numpy as np

from threshold_risk.engine.special_math import FloatArray

SEED_LIMIT = 2**64


def validate_seed(seed: int) -> int:
    """0 ≦ seed < 2⁶⁴ を確認して返す。

    Raises:
        ValueError: 範囲外、または整数でない場合
    """
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ValueError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < SEED_LIMIT:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return seed


class SubstreamProvider:
    """(coefficient, chunk) ごとに独立な生成器を払い出す。"""

    def __init__(self, seed: int) -> None:
        self._seed = validate_seed(seed)

    @property
    def seed(self) -> int:
        return self._seed

    def generator(self, coefficient: int, chunk: int) -> np.random.Generator:
        if coefficient < 0 or chunk < 0:
            raise ValueError("coefficient and chunk indices must be >= 0")
        sequence = np.random.SeedSequence(entropy=self._seed, spawn_key=(coefficient, chunk))
        return np.random.Generator(np.random.Philox(sequence))

    def gaussian(self, coefficient: int, chunk: int, size: int, sigma: float) -> FloatArray:
        """平均 0・標準偏差 sigma の正規乱数を size 個返す。"""
        return sigma * self.generator(coefficient, chunk).standard_normal(size)
