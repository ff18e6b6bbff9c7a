# tests/test_sweep.py

from pathlib import Path
import csv
import math
import tempfile
from dataclasses import replace

import numpy as np
import pytest

from src.config import BASE_DIR, build_run_config
from src.errors import ConfigurationError
from src.initial_data import sample_datum
from src.readers import read_config
from src.solver import run
from src.sweep import TABLE_COLUMNS, LifespanTable, regime_from_artifact, sweep


def _config(out: Path, **sections):
    raw = {
        "scenario": "sweep_test",
        "grid": {"d": 1, "M": 256, "L": 32.0},
        "datum": {"family": "log_weighted", "R0": 2.0, "alpha": 0.0},
        "nonlinearity": "constant",
        "solver": {"T_end": 0.5, "dt_init": 0.05, "keep_snapshots": False},
        "sweep": {"epsilons": [0.1, 0.05]},
        "oracle": {"alphas": [2.0], "d": 1},
    }
    for key, value in sections.items():
        raw[key] = value
    return build_run_config(raw, output_dir=out)


def test_table_row_selection():
    table = LifespanTable(
        engine="ode",
        scenario="s",
        rows=[
            {"epsilon": 0.1, "status": "ok", "lifespan": math.inf, "log_lifespan": 900.0},
            {"epsilon": 0.05, "status": "ok", "lifespan": math.inf},
            {"epsilon": 0.02, "status": "failed", "message": "boom"},
        ],
        metadata={"alpha": 2.0},
    )

    assert table.artifact == "ode_alpha2_table"
    assert [r["epsilon"] for r in table.successful()] == [0.1]
    assert [r["epsilon"] for r in table.failed()] == [0.02]
    assert LifespanTable(engine="pde", scenario="s").artifact == "pde_table"


def test_table_read_back_keeps_its_regime():
    assert regime_from_artifact("s_ode_alpha1_table") == {"engine": "ode", "alpha": 1.0}
    assert regime_from_artifact("s_ode_alpha0.5_table") == {"engine": "ode", "alpha": 0.5}
    assert regime_from_artifact("s_pde_table") == {"engine": "pde"}
    assert regime_from_artifact("my_lifespans") == {}

    fallback = {"d": 2, "alpha": 2.0}
    rows = [{"epsilon": 0.1, "status": "ok", "log_lifespan": 50.0}]
    by_name = LifespanTable.from_rows(rows, "s", "s_ode_alpha1_table", fallback)
    assert by_name.engine == "ode"
    assert by_name.metadata == {"d": 2, "alpha": 1.0}

    stamped = [{**rows[0], "d": 1.0, "alpha": 0.0}]
    by_column = LifespanTable.from_rows(stamped, "s", "s_ode_alpha1_table", fallback)
    assert by_column.metadata == {"d": 1, "alpha": 0.0}
    assert by_column.artifact == "ode_alpha0_table"

    plain = LifespanTable.from_rows(rows, "s", "my_lifespans", fallback)
    assert plain.engine == "file"
    assert plain.metadata == fallback

    with pytest.raises(ConfigurationError):
        LifespanTable.from_rows(stamped + [{**rows[0], "alpha": 2.0}], "s", "x", fallback)


def test_ode_sweep_matches_closed_form_ratio():
    """
    For α > 1 in d = 1 with the default gain κ·C_ode = 0.1 the escape point is
    log R* = 1/(0.2 ε²), so the ratio to the bound exponent ε^{-2} is 5 on every row.
    """
    with tempfile.TemporaryDirectory() as tmp:
        config = _config(Path(tmp), sweep={"epsilons": [0.1, 0.05, 0.02]})

        table = sweep(config, "ode", alpha=2.0)
        csv_path = Path(tmp) / "sweep_test_ode_alpha2_table.csv"
        assert csv_path.is_file()
        with csv_path.open(newline="", encoding="utf-8") as f:
            header = next(csv.reader(f))

    assert header == TABLE_COLUMNS
    assert len(table.successful()) == 3
    for row in table.rows:
        assert row["verdict"] == "blowup"
        assert (row["d"], row["alpha"]) == (1, 2.0)
        assert row["bound_formula"] == "exp(C*eps^(-2))"
        assert row["ratio"] == pytest.approx(5.0, rel=1e-6)
    # exp(log R*) overflows for the smallest ε
    assert table.rows[-1]["lifespan"] == math.inf
    assert table.metadata["alpha"] == 2.0


def test_ode_sweep_rows_grow_as_epsilon_shrinks():
    with tempfile.TemporaryDirectory() as tmp:
        config = _config(Path(tmp), sweep={"epsilons": [1e-2, 1e-3, 1e-4]})

        table = sweep(config, "ode", alpha=1.0, persist=False)

        assert not list(Path(tmp).iterdir())

    logs = [r["log_lifespan"] for r in table.successful()]
    assert len(logs) == 3
    assert logs[0] < logs[1] < logs[2]


def test_pde_sweep_records_failures_without_stopping():
    """
    ε = 5 puts the datum above the truncation tolerance at |x| = L, so that
    row fails; the other row runs to T_end without blow-up.
    """
    with tempfile.TemporaryDirectory() as tmp:
        config = _config(Path(tmp), sweep={"epsilons": [5.0, 0.1], "workers": 2})

        table = sweep(config, "pde")

        assert (Path(tmp) / "sweep_test_pde_table.csv").is_file()

    failed, ok = table.rows
    assert failed["status"] == "failed"
    assert "truncation_tol" in failed["message"]
    assert ok["status"] == "ok"
    assert ok["verdict"] == "reached_T_end"
    assert ok["lifespan"] == math.inf
    assert table.successful() == []
    assert table.metadata["nonlinearity"] == "constant"


def test_pde_sweep_detects_uniform_growth():
    """A large-amplitude datum with a short horizon blows up; refinement reruns it."""
    with tempfile.TemporaryDirectory() as tmp:
        config = _config(
            Path(tmp),
            grid={"d": 1, "M": 64, "L": 8.0, "truncation_tol": 10.0},
            datum={"R0": 1.5, "alpha": 0.0, "inner_fill": 20.0},
            solver={"T_end": 1.0, "dt_init": 1e-3, "dt_min": 1e-9, "blowup_factor": 50.0},
            sweep={"epsilons": [1.0], "refine": True},
        )

        table = sweep(config, "pde", persist=False)

    (row,) = table.rows
    assert row["verdict"] in ("blowup", "boundary_contaminated")
    assert row["lifespan"] < 1.0
    assert row["refined"]
    assert "refinement_change" in row


def test_shipped_blowup_ladder_blows_up_on_every_rung():
    """
    The shipped ladder: every rung blows up before T_end, t* grows as ε shrinks,
    one dt and M refinement moves t* by less than 10%, and ∫ Im u dx never
    increases along a run (d/dt ∫ Im u = -∫ |u|^3 for the constant symbol).
    """
    with tempfile.TemporaryDirectory() as tmp:
        config = build_run_config(
            read_config(BASE_DIR / "data" / "configs" / "blowup_ladder.toml"), output_dir=Path(tmp)
        )

        table = sweep(config, "pde", persist=False)

    assert len(table.successful()) == len(config.sweep.epsilons)
    lifespans = [row["lifespan"] for row in table.rows]
    assert all(math.isfinite(t) and t < config.solver.T_end for t in lifespans)
    assert all(a < b for a, b in zip(lifespans, lifespans[1:]))
    for row in table.rows:
        assert row["refined"]
        assert row["refinement_change"] < 0.1

    smallest = config.datum.with_epsilon(config.sweep.epsilons[-1])
    traj = run(
        sample_datum(smallest, config.grid),
        replace(config.solver, snapshot_every=1, keep_snapshots=False),
        config.nonlinearity,
    )
    im = np.asarray(traj.im_integral)
    assert traj.verdict.is_blowup
    assert np.all(np.diff(im) <= 1e-10 * np.max(np.abs(im)))


def test_unknown_engine():
    with tempfile.TemporaryDirectory() as tmp:
        config = _config(Path(tmp))

        with pytest.raises(ConfigurationError):
            sweep(config, "monte_carlo")
