from pathlib import Path
import csv
import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from src.utils.logutils import get_logger, color, bold, indent, CYAN, GREEN, ICONS

logger = get_logger(__name__)

# fixed SVG element ids so identical plots produce identical files
matplotlib.rcParams["svg.hashsalt"] = "nls-lifespan-lab"


def build_output_filename(output_dir: Path, scenario: str, artifact: str, ext: str) -> Path:
    """
    <scenario>_<artifact>.<ext>, e.g. blowup_ladder_pde_table.csv

    If it exists → overwrite it.
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    return output_dir / f"{scenario}_{artifact}.{ext}"


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_csv(rows: list[dict], path: Path, columns: list[str] | None = None) -> Path:
    if columns is None:
        columns = []
        for r in rows:
            columns += [c for c in r if c not in columns]

    with Path(path).open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for r in rows:
            writer.writerow({c: _cell(r.get(c)) for c in columns})

    message = f"{ICONS['report']} Wrote {bold(str(len(rows)))} rows → {Path(path).name}"
    logger.info(indent(color(message, CYAN)))
    return Path(path)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if np.isfinite(value) else str(value)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(obj, path: Path) -> Path:
    with Path(path).open("w", encoding="utf-8") as f:
        json.dump(_jsonable(obj), f, indent=2, ensure_ascii=False, sort_keys=True)
    logger.info(indent(color(f"{ICONS['ok']} Wrote {Path(path).name}", GREEN)))
    return Path(path)


def write_field(field, path: Path, dtype: str = "complex128", **extra) -> Path:
    """JSON header line (d, M, L, epsilon, family, dtype, ...) followed by little-endian values."""
    header = {
        "d": field.grid.d,
        "M": field.grid.M,
        "L": field.grid.L,
        "epsilon": field.epsilon,
        "family": field.family,
        "dtype": dtype,
        **extra,
    }
    payload = np.ascontiguousarray(field.values, dtype=np.dtype(dtype).newbyteorder("<"))
    with Path(path).open("wb") as f:
        f.write((json.dumps(_jsonable(header), sort_keys=True) + "\n").encode("utf-8"))
        f.write(payload.tobytes())
    logger.debug(f"field written to {Path(path).name}")
    return Path(path)


def write_trajectory(trajectory, output_dir: Path, scenario: str) -> list[Path]:
    """Diagnostics CSV (t, mass, sup, im_integral, dt) plus the first and last snapshots."""
    paths = [
        write_csv(
            trajectory.rows(),
            build_output_filename(output_dir, scenario, "diagnostics", "csv"),
            columns=["t", "mass", "sup", "im_integral", "dt"],
        )
    ]
    if trajectory.snapshots:
        for label, idx in (("initial", 0), ("final", -1)):
            snap = trajectory.u0.with_values(trajectory.snapshots[idx])
            path = build_output_filename(output_dir, scenario, f"snapshot_{label}", "bin")
            paths.append(write_field(snap, path, t=trajectory.times[idx]))
    return paths


def write_svg(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(indent(color(f"{ICONS['report']} Plot saved → {Path(path).name}", CYAN)))
    return Path(path)
