"""Raster images of filled Julia sets, and SVG overlays of rays and periodic points."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
from PIL import Image, ImageDraw

from juliaspec.boettcher.green import green_array
from juliaspec.dynamics.polynomial import Polynomial
from juliaspec.errors import ValidationError

logger = logging.getLogger(__name__)

MAX_RESOLUTION = 8192
MODES = ("escape-time", "distance-estimate", "binary")
BAND_ROWS = 64

# Colors
INTERIOR = (0, 0, 0)
RAY_COLOR = (230, 60, 40)
POINT_COLOR = (40, 120, 230)
SVG_BG = "#FFFFFF"
SVG_RAY = "#E63C28"
SVG_POINT = "#2878E6"
POINT_RADIUS = 3


@dataclass(frozen=True)
class ImageSpec:
    center: complex = 0j
    width: float = 4.0  # plane units across the image
    resolution: int = 512  # pixels per side
    max_iter: int = 500
    mode: str = "escape-time"

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise ValidationError(f"width must be > 0, got {self.width}")
        if not 1 <= self.resolution <= MAX_RESOLUTION:
            raise ValidationError(f"resolution must be in 1..{MAX_RESOLUTION}, got {self.resolution}")
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")

    @property
    def pixel(self) -> float:
        """Side of one pixel in plane units."""
        return self.width / self.resolution

    def pixel_centers(self, rows: range) -> np.ndarray:
        """Plane coordinates of the pixel centres in the given rows; row 0 is the top."""
        px = self.pixel
        cols = np.arange(self.resolution)
        x = self.center.real - self.width / 2 + (cols + 0.5) * px
        y = self.center.imag + self.width / 2 - (np.asarray(rows) + 0.5) * px
        return x[None, :] + 1j * y[:, None]

    def to_pixel(self, z: complex) -> tuple[float, float]:
        """(column, row) in continuous pixel units."""
        px = self.pixel
        col = (z.real - (self.center.real - self.width / 2)) / px
        row = ((self.center.imag + self.width / 2) - z.imag) / px
        return col, row


# ---------------------------------------------------------------------------
# Coloring
# ---------------------------------------------------------------------------

def _palette(t: np.ndarray) -> np.ndarray:
    """Smooth cyclic palette on t >= 0, returned as uint8 RGB."""
    phase = 2 * math.pi * t
    rgb = np.stack(
        [
            0.5 + 0.5 * np.cos(phase),
            0.5 + 0.5 * np.cos(phase + 2.1),
            0.5 + 0.5 * np.cos(phase + 4.2),
        ],
        axis=-1,
    )
    return (rgb * 255).round().astype(np.uint8)


def _color_band(poly: Polynomial, spec: ImageSpec, rows: range) -> np.ndarray:
    z = spec.pixel_centers(rows)
    field = green_array(poly, z, max_iter=spec.max_iter)
    escaped = field.escaped & (field.values > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        de = np.where(escaped & (field.gradients > 0), field.values / field.gradients, 0.0)

    if spec.mode == "binary":
        inside = ~escaped | (de < spec.pixel)
        return np.where(inside, 0, 255).astype(np.uint8)

    if spec.mode == "distance-estimate":
        with np.errstate(divide="ignore", invalid="ignore"):
            shade = np.clip(np.sqrt(de / (8 * spec.pixel)), 0.0, 1.0)
        shade = np.where(escaped, shade, 0.0)
        return (shade * 255).round().astype(np.uint8)

    # escape-time: smooth count -log_d G, interior black
    rgb = np.zeros(z.shape + (3,), dtype=np.uint8)
    if escaped.any():
        smooth = -np.log(field.values[escaped]) / math.log(poly.degree)
        rgb[escaped] = _palette(smooth / 24.0)
    rgb[~escaped] = INTERIOR
    return rgb


def render_julia(poly: Polynomial, spec: ImageSpec, workers: int = 1) -> np.ndarray:
    """Pixel array (rows x cols, or rows x cols x 3 for escape-time).

    Rows are colored in bands; with workers > 1 the bands run in a thread
    pool and are reassembled in row order.
    """
    bands = [
        range(start, min(start + BAND_ROWS, spec.resolution))
        for start in range(0, spec.resolution, BAND_ROWS)
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            parts = list(executor.map(lambda rows: _color_band(poly, spec, rows), bands))
    else:
        parts = [_color_band(poly, spec, rows) for rows in bands]
    logger.info("rendered %dx%d %s image", spec.resolution, spec.resolution, spec.mode)
    return np.concatenate(parts, axis=0)


def to_image(pixels: np.ndarray) -> Image.Image:
    return Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8))


# ---------------------------------------------------------------------------
# Overlays
# ---------------------------------------------------------------------------

def _clipped(spec: ImageSpec, polyline: Sequence[complex]) -> list[tuple[float, float]]:
    """Pixel coordinates of the samples lying within one image width of the viewport."""
    size = spec.resolution
    coords = [spec.to_pixel(z) for z in polyline]
    return [(x, y) for x, y in coords if -size <= x <= 2 * size and -size <= y <= 2 * size]


def overlay(
    image: Image.Image,
    spec: ImageSpec,
    rays: Optional[Mapping[str, Sequence[complex]]] = None,
    points: Sequence[complex] = (),
) -> Image.Image:
    """Draw ray polylines and periodic points over a rendered image."""
    image = image.convert("RGB")
    draw = ImageDraw.Draw(image)
    for polyline in (rays or {}).values():
        coords = _clipped(spec, polyline)
        if len(coords) >= 2:
            draw.line(coords, fill=RAY_COLOR, width=1)
    for z in points:
        x, y = spec.to_pixel(z)
        draw.ellipse(
            [x - POINT_RADIUS, y - POINT_RADIUS, x + POINT_RADIUS, y + POINT_RADIUS],
            fill=POINT_COLOR,
        )
    return image


def save_png(image: Image.Image, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image.save(path, format="PNG", optimize=False)
    return path


def render_rays_svg(
    spec: ImageSpec,
    rays: Mapping[str, Sequence[complex]],
    points: Sequence[complex] = (),
) -> str:
    """Vector drawing of ray polylines and periodic points in the viewport of `spec`."""
    size = spec.resolution
    parts: list[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">'
    )
    parts.append(f'<rect width="{size}" height="{size}" fill="{SVG_BG}"/>')

    for angle, polyline in rays.items():
        coords = " ".join(
            f"{x:.2f},{y:.2f}" for x, y in _clipped(spec, polyline)
        )
        parts.append(
            f'<polyline points="{coords}" fill="none" '
            f'stroke="{SVG_RAY}" stroke-width="1"><title>{angle}</title></polyline>'
        )

    for z in points:
        x, y = spec.to_pixel(z)
        parts.append(
            f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{POINT_RADIUS}" fill="{SVG_POINT}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
