# tests/test_readers.py

from pathlib import Path
import json
import math
import tempfile

import numpy as np
import pytest

from src.errors import ConfigurationError
from src.initial_data import Field, Grid
from src.readers import read_config, read_field, read_json, read_table, read_toml
from src.writers import write_field


def test_read_toml_config():
    """
    TOML configs keep their nested tables; inline tables become dicts.
    """
    with tempfile.TemporaryDirectory() as tmp:
        p = Path(tmp) / "run.toml"
        p.write_text(
            'scenario = "demo"\n'
            "[grid]\nd = 1\nM = 256\n"
            "[sweep]\nepsilons = { start = 0.5, stop = 0.05, points = 4 }\n",
            encoding="utf-8",
        )

        data = read_toml(p)

    assert data["scenario"] == "demo"
    assert data["grid"] == {"d": 1, "M": 256}
    assert data["sweep"]["epsilons"]["points"] == 4


def test_read_json_config_root_must_be_object():
    with tempfile.TemporaryDirectory() as tmp:
        good = Path(tmp) / "run.json"
        good.write_text(json.dumps({"scenario": "demo", "grid": {"d": 2}}), encoding="utf-8")
        bad = Path(tmp) / "list.json"
        bad.write_text(json.dumps([1, 2]), encoding="utf-8")

        assert read_json(good)["grid"]["d"] == 2

        with pytest.raises(ConfigurationError):
            read_json(bad)


def test_read_config_dispatches_on_suffix():
    with tempfile.TemporaryDirectory() as tmp:
        base = Path(tmp)
        (base / "a.toml").write_text('scenario = "t"\n', encoding="utf-8")
        (base / "b.json").write_text('{"scenario": "j"}', encoding="utf-8")
        (base / "c.yaml").write_text("scenario: y\n", encoding="utf-8")

        assert read_config(base / "a.toml")["scenario"] == "t"
        assert read_config(base / "b.json")["scenario"] == "j"

        with pytest.raises(ConfigurationError):
            read_config(base / "c.yaml")

        with pytest.raises(ConfigurationError):
            read_config(base / "missing.toml")


def test_invalid_documents_raise_configuration_error():
    with tempfile.TemporaryDirectory() as tmp:
        base = Path(tmp)
        (base / "broken.toml").write_text("scenario = \n", encoding="utf-8")
        (base / "broken.json").write_text("{not json", encoding="utf-8")

        with pytest.raises(ConfigurationError):
            read_config(base / "broken.toml")

        with pytest.raises(ConfigurationError):
            read_config(base / "broken.json")


def test_read_table_converts_numbers():
    with tempfile.TemporaryDirectory() as tmp:
        p = Path(tmp) / "table.csv"
        p.write_text(
            "epsilon,lifespan,verdict,message\n0.5,12.5,blowup,\n0.25,inf,reached_T_end,x\n",
            encoding="utf-8",
        )

        rows = read_table(p)

    assert rows[0] == {"epsilon": 0.5, "lifespan": 12.5, "verdict": "blowup", "message": None}
    assert rows[1]["lifespan"] == math.inf
    assert rows[1]["message"] == "x"

    with pytest.raises(ConfigurationError):
        read_table(Path("/nonexistent/table.csv"))


def test_field_file_keeps_values_and_header():
    grid = Grid(d=2, M=8, L=2.0)
    rng = np.random.default_rng(0)
    values = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    field = Field(values=values, grid=grid, epsilon=0.3, family="log_weighted")

    with tempfile.TemporaryDirectory() as tmp:
        path = write_field(field, Path(tmp) / "u.bin", t=1.5)
        loaded, header = read_field(path)

    assert loaded.grid == grid
    assert loaded.epsilon == 0.3
    assert loaded.family == "log_weighted"
    assert header["t"] == 1.5
    np.testing.assert_array_equal(loaded.values, values)


def test_field_file_in_single_precision():
    grid = Grid(d=1, M=16, L=4.0)
    field = Field(values=np.linspace(0, 1, 16) * 1j, grid=grid)

    with tempfile.TemporaryDirectory() as tmp:
        path = write_field(field, Path(tmp) / "u32.bin", dtype="complex64")
        size = path.stat().st_size
        loaded, header = read_field(path)

    assert header["dtype"] == "complex64"
    assert size > 16 * 8
    np.testing.assert_allclose(loaded.values, field.values, atol=1e-7)
