"""Save and load report artifacts: JSON reports, CSV point tables."""

from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

import juliaspec
from juliaspec.dynamics.polynomial import Polynomial, format_polynomial
from juliaspec.errors import ValidationError

TOOL_NAME = "juliaspec"
RAY_COLUMNS = ("angle", "potential", "re", "im")
TREE_COLUMNS = ("depth", "index", "parent", "re", "im", "log_deriv")


def _ensure_dir(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)


def report_header(config: Any, poly: Optional[Polynomial], seeds: Sequence[int] = ()) -> dict:
    """Everything needed to reproduce a report; no wall-clock data."""
    return {
        "tool": TOOL_NAME,
        "version": juliaspec.__version__,
        "config": config.to_dict() if hasattr(config, "to_dict") else dict(config),
        "polynomial": None if poly is None else format_polynomial(poly),
        "coefficients": None if poly is None else list(poly.coefficients),
        "fingerprint": None if poly is None else poly.fingerprint,
        "seeds": list(seeds),
    }


def to_jsonable(value: Any) -> Any:
    """complex -> [re, im], non-finite -> null, Fraction -> 'p/q', numpy -> python."""
    if value is None or isinstance(value, (bool, str)):
        return value
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [to_jsonable(float(value.real)), to_jsonable(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if hasattr(value, "value"):  # enums
        return value.value
    return str(value)


def dumps_report(header: dict, body: dict) -> str:
    record = {"header": header, **body}
    return json.dumps(to_jsonable(record), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(path: str | Path, header: dict, body: dict) -> Path:
    """Write `body` under a reproducibility header. Returns the path."""
    path = Path(path)
    _ensure_dir(path)
    with open(path, "w") as f:
        f.write(dumps_report(header, body))
    return path


def load_report(path: str | Path) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as exc:
        raise ValidationError(f"cannot read report {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"report {path} is not valid JSON: {exc}") from exc


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    _ensure_dir(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
    return path


def _csv_cell(value: Any) -> Any:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def read_csv(path: str | Path) -> list[dict[str, str]]:
    try:
        with open(path, newline="") as f:
            return list(csv.DictReader(f))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


def read_ray_csv(path: str | Path) -> dict[str, list[complex]]:
    """Polylines keyed by angle, in file order."""
    rays: dict[str, list[complex]] = {}
    for row in read_csv(path):
        try:
            point = complex(float(row["re"]), float(row["im"]))
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"{path}: expected columns {', '.join(RAY_COLUMNS)}") from exc
        rays.setdefault(row["angle"], []).append(point)
    return rays


def spectrum_points(report: dict) -> list[complex]:
    """Periodic points stored in a spectrum (or pipeline) report."""
    spectrum = report.get("spectrum", report)
    points: list[complex] = []
    for period in spectrum.get("periods", []):
        for orbit in period.get("orbits", []):
            points += [complex(re, im) for re, im in orbit["points"]]
    return points
