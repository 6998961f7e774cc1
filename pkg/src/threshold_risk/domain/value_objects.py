from __future__ import annotations

from enum import Enum


class EstimatorKind(str, Enum):
    """推定器ファミリー"""

    HARD_THRESHOLD = "ht"
    PIECEWISE_LINEAR = "pl"
    SEMISOFT = "ss"

    @property
    def label(self) -> str:
        """CSV の family 列などに出す短い表記（HT / PL / SS）。"""
        return self.value.upper()

    @property
    def free_parameters(self) -> tuple[str, ...]:
        """最適化対象となる自由パラメータ名。"""
        return _FREE_PARAMETERS[self]

    @classmethod
    def from_label(cls, label: str) -> EstimatorKind:
        """大文字・小文字どちらの表記（HT / ht）も受け付ける。"""
        try:
            return cls(label.strip().lower())
        except ValueError:
            raise ValueError(f"unknown estimator family: {label!r}") from None


_FREE_PARAMETERS: dict[EstimatorKind, tuple[str, ...]] = {
    EstimatorKind.HARD_THRESHOLD: ("threshold",),
    EstimatorKind.PIECEWISE_LINEAR: ("alpha", "threshold"),
    EstimatorKind.SEMISOFT: ("inner_threshold", "threshold"),
}


class OutputFormat(str, Enum):
    """出力ファイル形式"""

    CSV = "csv"
    JSON = "json"
