"""CSV / JSON の書き出し。

数値は repr 相当の丸め（有効数字 12 桁）で書き、改行は '\\n' に固定する。
ファイルへの書き込みは同じディレクトリの一時ファイルに書いてから置き換える。
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)


def format_value(value: object) -> str:
    """CSV セルの文字列表現。float は有効数字 12 桁、bool は小文字。"""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.12g}"
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Mapping[str, object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(row[column]) for column in header])
    return buffer.getvalue()


def _round_floats(obj: Any) -> Any:
    if isinstance(obj, float):
        return float(f"{obj:.12g}") if math.isfinite(obj) else None
    if isinstance(obj, Mapping):
        return {str(k): _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def render_json(obj: Any) -> str:
    return json.dumps(_round_floats(obj), ensure_ascii=False, indent=2) + "\n"


def write_text(text: str, output_path: Path | None) -> None:
    """output_path が None なら標準出力に書く。ファイルは一時ファイル経由で原子的に置き換える。

    Raises:
        OSError: 書き込めない場合
    """
    if output_path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    output_path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=output_path.parent, prefix=f".{output_path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, output_path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.info("結果を保存しました: %s", output_path)


def write_csv(header: Sequence[str], rows: Iterable[Mapping[str, object]], output_path: Path | None) -> None:
    write_text(render_csv(header, rows), output_path)


def write_json(obj: Any, output_path: Path | None) -> None:
    write_text(render_json(obj), output_path)


def sibling_path(output_path: Path | None, tag: str, suffix: str) -> Path | None:
    """付随ファイルのパス（例: out.csv → out.tag.json）。標準出力のときは None。"""
    if output_path is None:
        return None
    return output_path.with_name(f"{output_path.stem}.{tag}{suffix}")
