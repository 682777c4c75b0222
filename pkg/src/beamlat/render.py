"""Deterministic SVG rendering of latent samples.

Two modes: "scatter" draws a 2-d sample against the 1-sigma circles of a
mixture's components; "heatmap" folds a square-length vector into a grid with
a fixed blue-white-red diverging palette over [-3, 3].  All coordinates use
fixed-precision formatting so identical inputs produce identical bytes.
"""

from __future__ import annotations

from math import isqrt, sqrt
from xml.sax.saxutils import escape

import numpy as np

from .exceptions import DimensionError
from .validation import as_vector
from .world import Condition, MixtureModel

TILE = 200.0
GAP = 10.0
CAPTION_HEIGHT = 24.0
SCATTER_SPAN = 4.0  # world coords [-span, span] fill the tile
HEAT_LO, HEAT_HI = -3.0, 3.0


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _scatter_px(x: float, y: float) -> tuple[float, float]:
    px = (x + SCATTER_SPAN) / (2 * SCATTER_SPAN) * TILE
    py = TILE - (y + SCATTER_SPAN) / (2 * SCATTER_SPAN) * TILE
    return px, py


def _heat_color(v: float) -> str:
    t = min(1.0, max(0.0, (v - HEAT_LO) / (HEAT_HI - HEAT_LO)))
    if t < 0.5:
        u = t / 0.5
        r = g = int(round(255 * u))
        b = 255
    else:
        u = (t - 0.5) / 0.5
        r = 255
        g = b = int(round(255 * (1 - u)))
    return f"rgb({r},{g},{b})"


def resolve_mode(mode: str, d: int) -> str:
    if mode == "auto":
        return "scatter" if d == 2 else "heatmap"
    if mode not in ("scatter", "heatmap"):
        raise ValueError(f"unknown render mode {mode!r}")
    return mode


def _scatter_group(sample: np.ndarray, mixture: MixtureModel | None) -> list[str]:
    if len(sample) != 2:
        raise DimensionError(f"scatter mode needs 2-d samples, got d={len(sample)}")
    parts = [f'<rect width="{_fmt(TILE)}" height="{_fmt(TILE)}" fill="#fafafa" stroke="#999"/>']
    if mixture is not None:
        for comp in mixture.components:
            cx, cy = _scatter_px(float(comp.mean[0]), float(comp.mean[1]))
            rx = sqrt(float(comp.var[0])) / (2 * SCATTER_SPAN) * TILE
            ry = sqrt(float(comp.var[1])) / (2 * SCATTER_SPAN) * TILE
            parts.append(
                f'<ellipse cx="{_fmt(cx)}" cy="{_fmt(cy)}" rx="{_fmt(rx)}" ry="{_fmt(ry)}" '
                f'fill="none" stroke="#7a9cc6" stroke-width="1.5"/>'
            )
    px, py = _scatter_px(float(sample[0]), float(sample[1]))
    parts.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="4.00" fill="#c0392b"/>')
    return parts


def _heatmap_group(sample: np.ndarray) -> list[str]:
    side = isqrt(len(sample))
    if side * side != len(sample):
        raise DimensionError(f"heatmap mode needs a square length, got d={len(sample)}")
    cell = TILE / side
    parts = []
    for row in range(side):
        for col in range(side):
            v = float(sample[row * side + col])
            parts.append(
                f'<rect x="{_fmt(col * cell)}" y="{_fmt(row * cell)}" '
                f'width="{_fmt(cell)}" height="{_fmt(cell)}" fill="{_heat_color(v)}"/>'
            )
    parts.append(f'<rect width="{_fmt(TILE)}" height="{_fmt(TILE)}" fill="none" stroke="#999"/>')
    return parts


def _tile_group(sample: np.ndarray, mixture: MixtureModel | None, mode: str) -> list[str]:
    sample = as_vector(sample, "sample")
    mode = resolve_mode(mode, len(sample))
    if mode == "scatter":
        return _scatter_group(sample, mixture)
    return _heatmap_group(sample)


def render_tile(
    sample: np.ndarray, mixture: MixtureModel | None = None, mode: str = "auto"
) -> str:
    body = "\n".join(_tile_group(sample, mixture, mode))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(TILE)}" '
        f'height="{_fmt(TILE)}" viewBox="0 0 {_fmt(TILE)} {_fmt(TILE)}">\n{body}\n</svg>\n'
    )


def render_sequence(
    samples: list[np.ndarray],
    conditions: list[Condition] | None = None,
    mixtures: list[MixtureModel] | None = None,
    mode: str = "auto",
) -> str:
    """One SVG strip, a captioned tile per step, byte-stable across runs."""
    if not samples:
        raise ValueError("nothing to render")
    if conditions is not None and len(conditions) != len(samples):
        raise ValueError("one condition per sample required")
    if mixtures is not None and len(mixtures) != len(samples):
        raise ValueError("one mixture per sample required")
    n = len(samples)
    width = n * TILE + (n - 1) * GAP
    height = TILE + CAPTION_HEIGHT
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">'
    ]
    for i, sample in enumerate(samples):
        x = i * (TILE + GAP)
        mixture = mixtures[i] if mixtures is not None else None
        parts.append(f'<g transform="translate({_fmt(x)},0)">')
        parts.extend(_tile_group(sample, mixture, mode))
        if conditions is not None:
            label = escape(conditions[i].text or conditions[i].token)
            parts.append(
                f'<text x="{_fmt(TILE / 2)}" y="{_fmt(TILE + 16)}" font-size="12" '
                f'font-family="monospace" text-anchor="middle">{label}</text>'
            )
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
