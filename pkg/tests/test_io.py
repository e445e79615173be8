import numpy as np
import pytest

from sktlab import io


def test_config_hash_stable_and_order_free():
    h1 = io.config_hash({"a": 1.0, "b": 2})
    h2 = io.config_hash({"b": 2, "a": 1.0})
    assert h1 == h2
    assert len(h1) == 16
    assert io.config_hash({"a": 1.0000001, "b": 2}) != h1


def test_write_csv_format(tmp_path):
    path = tmp_path / "out.csv"
    io.write_csv(str(path), {"x": [0.5, 1.5], "y": [1.0 / 3.0, 2.0]},
                 "solve", {"k": 1}, metadata={"note": "z", "val": 2.5})
    lines = path.read_text().splitlines()
    assert lines[0] == f"# sktlab {io.VERSION}"
    assert lines[1] == "# command: solve"
    assert any(l == "# note: z" for l in lines)
    data = [l for l in lines if not l.startswith("#")]
    assert data[0] == "x,y"
    # full precision round trip
    assert float(data[1].split(",")[1]) == 1.0 / 3.0


def test_write_csv_ragged_columns(tmp_path):
    with pytest.raises(ValueError):
        io.write_csv(str(tmp_path / "bad.csv"), {"x": [1.0], "y": [1.0, 2.0]},
                     "solve", {})


def test_write_metadata(tmp_path):
    path = tmp_path / "meta.txt"
    io.write_metadata(str(path), "bounds", {"k": 1}, {"u_bound": 12.5})
    text = path.read_text()
    assert "u_bound = 12.5" in text
    assert text.startswith("# sktlab")
