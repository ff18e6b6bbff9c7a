from pathlib import Path
import csv, json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from src.errors import ConfigurationError
from src.initial_data import Field, Grid
from src.utils.logutils import get_logger, color, indent, CYAN, RED, ICONS

logger = get_logger(__name__)


def read_toml(path: Path) -> dict:
    logger.info(indent(color(f"{ICONS['scan']} Reading TOML config {path.name}...", CYAN), 2))
    with path.open("rb") as f:
        try:
            return tomllib.load(f)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"Invalid TOML in {path}: {exc}") from exc


def read_json(path: Path) -> dict:
    logger.info(indent(color(f"{ICONS['scan']} Reading JSON config {path.name}...", CYAN), 2))
    with path.open(encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"Invalid JSON in {path}: {exc}") from exc

    if not isinstance(data, dict):
        logger.error(color(f"{ICONS['err']} Config root is not an object", RED))
        raise ConfigurationError(f"Invalid JSON structure in {path}")
    return data


def read_config(path: Path) -> dict:
    path = Path(path)
    if not path.is_file():
        logger.error(color(f"{ICONS['err']} Config file not found: {path}", RED))
        raise ConfigurationError(f"Config file not found: {path}")

    suffix = path.suffix.lower()
    if suffix == ".toml":
        return read_toml(path)
    if suffix == ".json":
        return read_json(path)

    logger.error(color(f"{ICONS['err']} Unsupported config type {suffix}", RED))
    raise ConfigurationError(f"Unsupported config type: {suffix}")


def _number(value: str):
    if value in ("", None):
        return None
    try:
        return float(value)
    except ValueError:
        return value


def read_table(path: Path) -> list[dict]:
    """CSV table → rows, numeric cells converted to float."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Table not found: {path}")
    logger.info(indent(color(f"{ICONS['scan']} Reading table {path.name}...", CYAN), 2))
    with path.open(newline="", encoding="utf-8") as f:
        return [{k: _number(v) for k, v in r.items()} for r in csv.DictReader(f)]


def read_field(path: Path) -> tuple[Field, dict]:
    """
    Binary field file: one JSON header line, then little-endian complex values, row-major.
    """
    path = Path(path)
    with path.open("rb") as f:
        header = json.loads(f.readline().decode("utf-8"))
        payload = f.read()

    dtype = np.dtype(header.get("dtype", "complex128")).newbyteorder("<")
    grid = Grid(d=int(header["d"]), M=int(header["M"]), L=float(header["L"]))
    values = np.frombuffer(payload, dtype=dtype).astype(complex).reshape(grid.shape)
    field = Field(
        values=values, grid=grid, epsilon=header.get("epsilon"), family=header.get("family")
    )
    return field, header
