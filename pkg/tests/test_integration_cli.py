# tests/test_integration_cli.py

from pathlib import Path
import csv
import json
import math
import tempfile

from src.main import main

CONFIG = """
scenario = "cli"
nonlinearity = "mixed:1,0.25"

[grid]
d = 1
M = 256
L = 32.0

[datum]
family = "log_weighted"
alpha = 2.0
R0 = 2.0
epsilon = 0.1
smoothing_width = "auto"

[solver]
T_end = 0.5
dt_init = 0.05
snapshot_every = 1

[sweep]
epsilons = [0.2, 0.1, 0.05, 0.02, 0.01]
workers = 1

[oracle]
alphas = [2.0]
d = 1
"""


def _setup(tmp: str) -> tuple[Path, Path]:
    config = Path(tmp) / "cli.toml"
    config.write_text(CONFIG, encoding="utf-8")
    return config, Path(tmp) / "out"


def _cli(config: Path, out: Path, *args: str) -> int:
    return main(["--config", str(config), "--out", str(out), *args])


def test_decompose_and_cutoff_certification():
    with tempfile.TemporaryDirectory() as tmp:
        config, out = _setup(tmp)

        assert _cli(config, out, "decompose", "--order", "8") == 0
        decomposition = json.loads((out / "cli_decomposition.json").read_text(encoding="utf-8"))
        with (out / "cli_coefficients.csv").open(newline="", encoding="utf-8") as f:
            coefficients = list(csv.DictReader(f))

        assert _cli(config, out, "--seed", "3", "certify-cutoffs") == 0
        cutoffs = json.loads((out / "cli_cutoffs.json").read_text(encoding="utf-8"))

    assert abs(decomposition["mu"] - 0.75) < 1e-9
    assert decomposition["l1_tail"] < 1e-12
    assert decomposition["sup_residual"] < 1e-9
    assert len(coefficients) == 17
    assert cutoffs["seed"] == 3
    assert {"d1", "d2", "log_integral_ratio"} <= set(cutoffs)
    assert cutoffs["d1"]["A"] > 0


def test_pairing_bound_and_simulate():
    with tempfile.TemporaryDirectory() as tmp:
        config, out = _setup(tmp)

        assert _cli(config, out, "pairing-bound", "--points", "5", "--R-max", "1e4") == 0
        with (out / "cli_pairing_alpha2.csv").open(newline="", encoding="utf-8") as f:
            pairing = list(csv.DictReader(f))

        assert _cli(config, out, "simulate") == 0
        run = json.loads((out / "cli_run.json").read_text(encoding="utf-8"))
        produced = sorted(p.name for p in out.iterdir())

    assert len(pairing) == 5
    assert {r["case"] for r in pairing} == {"bounded"}
    assert run["kind"] == "reached_T_end"
    assert run["decay_margin"] >= 0
    assert "cli_diagnostics.csv" in produced
    assert "cli_snapshot_final.bin" in produced


def test_verify_weak_writes_residuals():
    with tempfile.TemporaryDirectory() as tmp:
        config, out = _setup(tmp)

        code = _cli(config, out, "verify-weak", "--tol", "0.05")
        data = json.loads((out / "cli_weak_identity.json").read_text(encoding="utf-8"))

    assert len(data["results"]) == 3
    assert code == (0 if all(r["residual"] <= 0.05 for r in data["results"]) else 1)


def test_sweep_fit_report_chain():
    """ODE sweep → CSV table → fit and report read the table back from disk."""
    with tempfile.TemporaryDirectory() as tmp:
        config, out = _setup(tmp)

        assert _cli(config, out, "sweep", "--engine", "ode") == 0
        table = out / "cli_ode_alpha2_table.csv"
        assert table.is_file()

        assert _cli(config, out, "fit", "--table", str(table)) == 0
        fit = json.loads((out / "cli_fit_power_log.json").read_text(encoding="utf-8"))

        assert _cli(config, out, "report", "--tables", str(table)) == 0
        summary = (out / "cli_summary.md").read_text(encoding="utf-8")
        assert (out / "cli_lifespan.svg").is_file()

    assert fit["n_rows"] == 5
    assert abs(fit["exponent"] - 2.0) < 1e-4
    assert "| ode_alpha2_table | ode | 5 | 0 | power_log |" in summary


def test_fit_and_report_take_alpha_from_the_table_name():
    """
    The config's datum has α = 2; an ODE table named ..._ode_alpha1_table without
    regime columns is still fitted with the log-corrected model.
    """
    with tempfile.TemporaryDirectory() as tmp:
        config, out = _setup(tmp)
        out.mkdir()
        table = out / "cli_ode_alpha1_table.csv"
        with table.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["epsilon", "log_lifespan", "status"])
            for eps in (0.1, 0.05, 0.02, 0.01, 0.005):
                writer.writerow([eps, 0.5 * (eps * math.log(1.0 / eps)) ** -2.0, "ok"])

        assert _cli(config, out, "fit", "--table", str(table)) == 0
        fit = json.loads((out / "cli_fit_log_corrected.json").read_text(encoding="utf-8"))

        assert _cli(config, out, "report", "--tables", str(table)) == 0
        summary = (out / "cli_summary.md").read_text(encoding="utf-8")

    assert fit["model"] == "log_corrected"
    assert fit["regime"]["alpha"] == 1.0
    assert abs(fit["exponent"] - 2.0) < 1e-9
    assert "| ode_alpha1_table | ode | 5 | 0 | log_corrected |" in summary


def test_missing_config_is_a_configuration_error():
    with tempfile.TemporaryDirectory() as tmp:
        code = main(["--config", str(Path(tmp) / "nope.toml"), "certify-cutoffs"])

    assert code == 2
