import json
import math
from pathlib import Path

import pytest

from threshold_risk.export import format_value, render_csv, render_json, sibling_path, write_csv, write_text


class TestFormatValue:
    def test_float(self) -> None:
        assert format_value(0.1) == "0.1"
        assert format_value(1.0 / 3.0) == "0.333333333333"
        assert format_value(2.0) == "2"

    def test_bool(self) -> None:
        assert format_value(True) == "true"
        assert format_value(False) == "false"

    def test_other(self) -> None:
        assert format_value(101) == "101"
        assert format_value("") == ""
        assert format_value(math.nan) == "nan"


class TestRender:
    def test_csv_uses_unix_newlines(self) -> None:
        text = render_csv(("a", "b"), [{"a": 1, "b": 0.5}, {"a": 2, "b": True}])
        assert text == "a,b\n1,0.5\n2,true\n"

    def test_csv_missing_column_raises(self) -> None:
        with pytest.raises(KeyError):
            render_csv(("a", "b"), [{"a": 1}])

    def test_json_rounds_and_keeps_unicode(self) -> None:
        text = render_json({"σ": 1.0 / 3.0, "values": [math.inf, 2], "nested": {"x": 0.5}})
        assert text.endswith("\n")
        assert "σ" in text
        data = json.loads(text)
        assert data["σ"] == 0.333333333333
        assert data["values"] == [None, 2]
        assert data["nested"] == {"x": 0.5}


class TestWriteText:
    def test_writes_atomically(self, tmp_path: Path) -> None:
        path = tmp_path / "out" / "result.csv"

        write_text("a\n", path)
        write_text("b\n", path)

        assert path.read_text(encoding="utf-8") == "b\n"
        assert sorted(p.name for p in path.parent.iterdir()) == ["result.csv"]

    def test_stdout(self, capsys: pytest.CaptureFixture[str]) -> None:
        write_csv(("x",), [{"x": 1.5}], None)
        assert capsys.readouterr().out == "x\n1.5\n"

    def test_sibling_path(self) -> None:
        assert sibling_path(Path("res/sweep.csv"), "ensemble", ".json") == Path("res/sweep.ensemble.json")
        assert sibling_path(None, "meta", ".json") is None
