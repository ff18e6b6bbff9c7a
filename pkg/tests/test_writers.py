# tests/test_writers.py

from pathlib import Path
import csv
import json
import math
import tempfile

import matplotlib.pyplot as plt

from conftest import gaussian_field
from src.initial_data import Grid
from src.nonlinearity import nonlinearity_from_spec
from src.solver import SolverConfig, run
from src.writers import (
    build_output_filename,
    write_csv,
    write_json,
    write_svg,
    write_trajectory,
)


def test_build_output_filename_creates_directory():
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "nested" / "out"

        path = build_output_filename(out, "blowup_ladder", "pde_table", "csv")

        assert out.is_dir()
        assert path == out / "blowup_ladder_pde_table.csv"


def test_write_csv_column_order_and_cells():
    """
    Columns follow the given order, missing cells are empty, booleans are
    lower-case and floats keep full precision.
    """
    rows = [
        {"epsilon": 0.1, "stable": True, "lifespan": 1 / 3},
        {"epsilon": 0.05, "lifespan": math.inf, "extra": "dropped"},
    ]
    with tempfile.TemporaryDirectory() as tmp:
        path = write_csv(rows, Path(tmp) / "t.csv", columns=["epsilon", "lifespan", "stable"])
        with path.open(newline="", encoding="utf-8") as f:
            read = list(csv.DictReader(f))
        header = path.read_text(encoding="utf-8").splitlines()[0]

    assert header == "epsilon,lifespan,stable"
    assert read[0] == {"epsilon": "0.1", "lifespan": repr(1 / 3), "stable": "true"}
    assert read[1] == {"epsilon": "0.05", "lifespan": "inf", "stable": ""}


def test_write_csv_infers_columns():
    rows = [{"a": 1}, {"b": 2.5, "a": 3}]
    with tempfile.TemporaryDirectory() as tmp:
        path = write_csv(rows, Path(tmp) / "t.csv")
        lines = path.read_text(encoding="utf-8").splitlines()

    assert lines == ["a,b", "1,", "3,2.5"]


def test_write_json_is_sorted_and_finite():
    with tempfile.TemporaryDirectory() as tmp:
        obj = {"b": math.inf, "a": (1, 2), "c": {"nan": math.nan}}
        path = write_json(obj, Path(tmp) / "x.json")
        text = path.read_text(encoding="utf-8")
        data = json.loads(text)

    assert list(data) == ["a", "b", "c"]
    assert data == {"a": [1, 2], "b": "inf", "c": {"nan": "nan"}}


def test_write_svg_is_deterministic():
    def draw():
        fig, ax = plt.subplots()
        ax.plot([0, 1, 2], [1, 0, 1], "o-", label="line")
        ax.legend()
        return fig

    with tempfile.TemporaryDirectory() as tmp:
        first = write_svg(draw(), Path(tmp) / "a.svg").read_bytes()
        second = write_svg(draw(), Path(tmp) / "b.svg").read_bytes()

    assert first.startswith(b"<?xml")
    assert first == second


def test_write_trajectory_outputs():
    grid = Grid(d=1, M=64, L=16.0)
    traj = run(
        gaussian_field(grid, amplitude=0.2),
        SolverConfig(T_end=0.2, dt_init=0.05, snapshot_every=1),
        nonlinearity_from_spec("gauge", 1),
    )

    with tempfile.TemporaryDirectory() as tmp:
        paths = write_trajectory(traj, Path(tmp), "free")
        names = sorted(p.name for p in paths)
        with paths[0].open(newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))

    assert names == [
        "free_diagnostics.csv",
        "free_snapshot_final.bin",
        "free_snapshot_initial.bin",
    ]
    assert len(rows) == len(traj.times)
    assert float(rows[0]["t"]) == 0.0
