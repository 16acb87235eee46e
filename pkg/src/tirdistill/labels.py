"""Gaussian pseudo-labels over score-map cells and cell/image coordinate mapping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ScoreMap:
    """2-d response/label grid over feature cells.

    values: (H_f, W_f) float64
    stride: pixels per cell
    origin: (x0, y0) pixel position of the center of cell (row=0, col=0)
    """

    values: np.ndarray
    stride: float
    origin: tuple[float, float] = (0.0, 0.0)

    @property
    def shape(self):
        return self.values.shape

    def cell_to_image(self, row: float, col: float):
        """Image coordinates of a (possibly fractional) cell position."""
        x0, y0 = self.origin
        return (x0 + col * self.stride, y0 + row * self.stride)

    def image_to_cell(self, x: float, y: float):
        x0, y0 = self.origin
        return ((y - y0) / self.stride, (x - x0) / self.stride)


# A Gaussian label is an ordinary ScoreMap built by gaussian_label().
GaussianLabel = ScoreMap


def default_origin(stride: float):
    off = (stride - 1.0) / 2.0
    return (off, off)


def gaussian_label(center, map_shape, stride, sigma, origin=None) -> ScoreMap:
    """Gaussian pseudo-label peaked at `center` (image px), over an H_f x W_f cell grid.

    Values follow exp(-((u-u0)^2 + (v-v0)^2) / (2 sigma^2)) in cell units,
    rescaled so the cell nearest the center is exactly 1.  sigma is in cells.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    h, w = map_shape
    if h < 1 or w < 1:
        raise ValueError(f"empty map shape {map_shape}")
    if origin is None:
        origin = default_origin(stride)
    x0, y0 = origin
    cx, cy = center
    v0 = (cx - x0) / stride  # fractional col of the center
    u0 = (cy - y0) / stride  # fractional row
    rows = np.arange(h, dtype=np.float64)[:, None]
    cols = np.arange(w, dtype=np.float64)[None, :]
    d2 = (rows - u0) ** 2 + (cols - v0) ** 2
    values = np.exp(-d2 / (2.0 * sigma * sigma))
    values /= values.max()
    return ScoreMap(values=values, stride=float(stride), origin=(float(x0), float(y0)))


def sigma_for_box(w: float, h: float, stride: float, factor: float = 0.25, floor: float = 1.0) -> float:
    """Label width heuristic: factor x geometric mean of the target size in cells, floored."""
    cells = np.sqrt((w / stride) * (h / stride))
    return max(float(floor), float(factor * cells))


def _quadratic_offset(fm1: float, f0: float, fp1: float) -> float:
    """Sub-cell peak offset of a 1-d quadratic through three equidistant samples."""
    denom = fm1 - 2.0 * f0 + fp1
    if denom >= 0.0:
        return 0.0  # not concave around the peak; keep the integer argmax
    off = 0.5 * (fm1 - fp1) / denom
    return float(np.clip(off, -0.5, 0.5))


def argmax_to_image(score_map: ScoreMap, refine: bool = True):
    """Image coordinates of the maximal cell, sub-cell refined when interior.

    Ties break to the smallest (row, col); refinement is a separable 1-d
    quadratic fit, disabled when the argmax touches the map border.
    """
    v = score_map.values
    if v.size == 0:
        raise ValueError("empty score map")
    flat = int(np.argmax(v))  # first occurrence == lexicographic (row, col) tie-break
    u, c = divmod(flat, v.shape[1])
    du = dc = 0.0
    interior = 0 < u < v.shape[0] - 1 and 0 < c < v.shape[1] - 1
    if refine and interior:
        du = _quadratic_offset(v[u - 1, c], v[u, c], v[u + 1, c])
        dc = _quadratic_offset(v[u, c - 1], v[u, c], v[u, c + 1])
    return score_map.cell_to_image(u + du, c + dc)
