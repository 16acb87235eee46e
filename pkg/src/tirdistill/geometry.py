"""Bounding-box arithmetic, the 4-d box-state encoding, and per-frame error measures.

Boxes are (left, top, width, height) in continuous pixel coordinates. The
box state packs a box as (cx/w, cy/h, log w, log h), the regression target
used by the box-estimation head.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class InvalidBoxError(ValueError):
    """Box or box state violating the geometric contract (non-positive size, non-finite values)."""


@dataclass(frozen=True)
class Box:
    x: float
    y: float
    w: float
    h: float

    def center(self):
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def area(self):
        return self.w * self.h

    def corners(self):
        """(x1, y1, x2, y2)"""
        return (self.x, self.y, self.x + self.w, self.y + self.h)

    def translated(self, dx, dy):
        return Box(self.x + dx, self.y + dy, self.w, self.h)

    def scaled(self, k):
        """Uniform scaling of the whole frame (origin and size)."""
        return Box(self.x * k, self.y * k, self.w * k, self.h * k)

    def is_valid(self):
        vals = (self.x, self.y, self.w, self.h)
        return all(math.isfinite(v) for v in vals) and self.w > 0 and self.h > 0


@dataclass(frozen=True)
class BoxState:
    """(cx/w, cy/h, log w, log h); dimensionless except the log-pixel scale terms."""

    cx_over_w: float
    cy_over_h: float
    log_w: float
    log_h: float

    def as_tuple(self):
        return (self.cx_over_w, self.cy_over_h, self.log_w, self.log_h)

    @classmethod
    def from_values(cls, values):
        a, b, c, d = (float(v) for v in values)
        return cls(a, b, c, d)


@dataclass(frozen=True)
class FrameError:
    """Per-frame tracking error: center error (px), normalized center error, IoU."""

    cle: float
    norm_cle: float
    iou: float


def check_box(b: Box) -> Box:
    if not b.is_valid():
        raise InvalidBoxError(f"invalid box {b}: requires finite values and w > 0, h > 0")
    return b


def encode_box_state(b: Box) -> BoxState:
    """Encode a box as (cx/w, cy/h, log w, log h)."""
    check_box(b)
    cx, cy = b.center()
    return BoxState(cx / b.w, cy / b.h, math.log(b.w), math.log(b.h))


def decode_box_state(s: BoxState) -> Box:
    """Exact algebraic inverse of encode_box_state."""
    vals = s.as_tuple()
    if not all(math.isfinite(v) for v in vals):
        raise InvalidBoxError(f"non-finite box state {vals}")
    w = math.exp(s.log_w)
    h = math.exp(s.log_h)
    cx = s.cx_over_w * w
    cy = s.cy_over_h * h
    return Box(cx - w / 2.0, cy - h / 2.0, w, h)


def iou(a: Box, b: Box) -> float:
    """Intersection area over union area; 0 for disjoint boxes."""
    check_box(a)
    check_box(b)
    ix1 = max(a.x, b.x)
    iy1 = max(a.y, b.y)
    ix2 = min(a.x + a.w, b.x + b.w)
    iy2 = min(a.y + a.h, b.y + b.h)
    inter = max(0.0, ix2 - ix1) * max(0.0, iy2 - iy1)
    union = a.area() + b.area() - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def cle(a: Box, b: Box) -> float:
    """Euclidean distance between the two box centers, in pixels."""
    ax, ay = a.center()
    bx, by = b.center()
    return math.hypot(ax - bx, ay - by)


def normalized_cle(pred: Box, gt: Box) -> float:
    """Center offset divided componentwise by the ground-truth size, L2 norm."""
    if not (gt.w > 0 and gt.h > 0):
        raise InvalidBoxError(f"degenerate ground-truth box {gt}")
    px, py = pred.center()
    gx, gy = gt.center()
    return math.hypot((px - gx) / gt.w, (py - gy) / gt.h)


def frame_error(pred: Box, gt: Box) -> FrameError:
    return FrameError(cle=cle(pred, gt), norm_cle=normalized_cle(pred, gt), iou=iou(pred, gt))
