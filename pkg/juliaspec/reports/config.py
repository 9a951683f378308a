"""Run configuration: dataclass defaults, then a JSON config file, then flags."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

from juliaspec.errors import ValidationError

OUT_DIR_ENV = "JULIASPEC_OUT_DIR"
MAX_RESOLUTION = 8192
RENDER_MODES = ("escape-time", "distance-estimate", "binary")
MIN_ROOT_BUDGET = 2
MIN_TREE_BUDGET = 2


def default_out_dir() -> str:
    return os.environ.get(OUT_DIR_ENV, ".")


@dataclass(frozen=True)
class RunConfig:
    # Polynomial
    poly: Optional[str] = None
    c: Optional[str] = None  # value for a free parameter `c` in the polynomial

    # Spectrum
    nmax: int = 8
    epsilon: float = 0.1
    solver: str = "grid-newton"
    workers: int = 1
    root_budget: int = 2 ** 16
    escalate: bool = True
    sieve_tol: float = 1e-6
    indifference_tol: float = 1e-8

    # Tree
    w0: str = "2,0"
    depth: int = 8
    tree_budget: int = 2 ** 16
    min_green: float = 1e-6
    ratio_margin: float = 1e-3
    raabe_margin: float = 0.1

    # Rays and psi
    theta: str = "0"  # comma separated angles, e.g. "1/3,2/3"
    s_hi: Optional[float] = None
    s_lo: float = 1e-6
    steps: int = 64
    landing_tol: float = 1e-6
    grid: str = "16x16"
    identity_samples: int = 50
    distortion_samples: int = 1000

    # Ergodic
    z0: Optional[str] = None  # defaults to the base point w0
    samples: int = 100_000
    burn: int = 200
    streams: int = 1
    seed: int = 42

    # Brjuno
    alpha: Optional[str] = None
    brjuno_depth: int = 40
    divergence_threshold: float = 50.0
    tail_tolerance: float = 1e-6
    decay_ratio: float = 0.9
    rational_cap: int = 10 ** 6

    # Render
    mode: str = "escape-time"
    res: int = 512
    center: str = "0,0"
    width: float = 4.0
    max_iter: int = 500
    overlay_rays: Optional[str] = None
    overlay_spectrum: Optional[str] = None

    # Output
    out: Optional[str] = None
    out_dir: str = field(default_factory=default_out_dir)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any], base: Optional[RunConfig] = None) -> RunConfig:
        """Overlay `data` on `base` (or the defaults); keys use '_' in place of '-'."""
        known = {f.name: f for f in fields(cls)}
        base = base if base is not None else cls()
        updates: dict[str, Any] = {}
        for key, value in data.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ValidationError(f"unknown config key {key!r}")
            updates[name] = _coerce(name, value)
        config = replace(base, **updates)
        config.validate()
        return config

    @classmethod
    def load(cls, path: str | Path, base: Optional[RunConfig] = None) -> RunConfig:
        try:
            with open(path) as f:
                data = json.load(f)
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError(f"config {path} must hold a JSON object")
        return cls.from_dict(data, base)

    def validate(self) -> None:
        positive = (
            "epsilon", "sieve_tol", "indifference_tol", "min_green", "ratio_margin", "raabe_margin",
            "s_lo", "landing_tol", "tail_tolerance", "divergence_threshold", "width",
        )
        for name in positive:
            value = getattr(self, name)
            if not value > 0:
                raise ValidationError(f"{name} must be > 0, got {value}")
        if not 0 < self.decay_ratio < 1:
            raise ValidationError(f"decay_ratio must be in (0, 1), got {self.decay_ratio}")
        if self.root_budget < MIN_ROOT_BUDGET or self.tree_budget < MIN_TREE_BUDGET:
            raise ValidationError("budgets must be >= 2")
        if self.workers < 1 or self.streams < 1:
            raise ValidationError("workers and streams must be >= 1")
        if self.steps < 2:
            raise ValidationError(f"steps must be >= 2, got {self.steps}")
        if self.s_hi is not None and self.s_hi <= self.s_lo:
            raise ValidationError(f"s_hi={self.s_hi} must exceed s_lo={self.s_lo}")
        if self.mode not in RENDER_MODES:
            raise ValidationError(f"mode must be one of {', '.join(RENDER_MODES)}, got {self.mode!r}")
        if not 1 <= self.res <= MAX_RESOLUTION:
            raise ValidationError(f"res must be in 1..{MAX_RESOLUTION}, got {self.res}")
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")
        self.grid_shape()

    def grid_shape(self) -> tuple[int, int]:
        try:
            rows, cols = (int(part) for part in self.grid.lower().split("x"))
        except ValueError as exc:
            raise ValidationError(f"grid must look like 16x16, got {self.grid!r}") from exc
        if rows < 1 or cols < 1:
            raise ValidationError(f"grid must be at least 1x1, got {self.grid!r}")
        return rows, cols

    def angles(self) -> list[str]:
        return [part.strip() for part in self.theta.split(",") if part.strip()]

    def stream_seeds(self) -> tuple[int, ...]:
        return tuple(self.seed + k for k in range(self.streams))

    def output_path(self, default_name: str) -> Path:
        if self.out:
            return Path(self.out)
        return Path(self.out_dir) / default_name


def _coerce(name: str, value: Any) -> Any:
    if value is None:
        return None
    kind = _FIELD_KINDS.get(name)
    try:
        if kind is bool:
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if kind is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"config key {name!r}: cannot use {value!r}") from exc


_FIELD_KINDS: dict[str, type] = {
    f.name: (
        bool if f.type == "bool"
        else int if f.type == "int"
        else float if f.type in ("float", "Optional[float]")
        else str
    )
    for f in fields(RunConfig)
}
