"""Small numpy numerics kernel: 2-d cross-correlation with exact backward passes,
pooling, image resampling and blurring.

Everything runs in float64 with fixed reduction order so losses, gradients and
generated fixtures are reproducible bit-for-bit.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _windows(xp: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """(C, Ho, Wo, kh, kw) view of all kernel windows of a padded (C, H, W) input."""
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))
    return win[:, ::stride, ::stride]


def conv2d(x: np.ndarray, w: np.ndarray, b=None, stride: int = 1, pad: int = 0) -> np.ndarray:
    """Cross-correlation of x (C,H,W) with filters w (O,C,kh,kw), zero padding."""
    o, c, kh, kw = w.shape
    if x.shape[0] != c:
        raise ValueError(f"channel mismatch: input has {x.shape[0]}, filters expect {c}")
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad))) if pad else x
    win = _windows(xp, kh, kw, stride)
    out = np.einsum("ocij,chwij->ohw", w, win, optimize=True)
    if b is not None:
        out = out + b[:, None, None]
    return out


def conv2d_backward(x: np.ndarray, w: np.ndarray, dout: np.ndarray, stride: int = 1,
                    pad: int = 0, need_dx: bool = True):
    """Gradients of conv2d: returns (dx, dw, db); dx is None when not requested."""
    o, c, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad))) if pad else x
    win = _windows(xp, kh, kw, stride)
    dw = np.einsum("ohw,chwij->ocij", dout, win, optimize=True)
    db = dout.sum(axis=(1, 2))
    dx = None
    if need_dx:
        ho, wo = dout.shape[1:]
        dxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                contrib = np.einsum("ohw,oc->chw", dout, w[:, :, i, j], optimize=True)
                dxp[:, i:i + stride * ho:stride, j:j + stride * wo:stride] += contrib
        dx = dxp[:, pad:pad + x.shape[1], pad:pad + x.shape[2]] if pad else dxp
    return dx, dw, db


def gap(x: np.ndarray) -> np.ndarray:
    """Global average pooling over space: (C,H,W) -> (C,)."""
    return x.mean(axis=(1, 2))


def gap_backward(dout: np.ndarray, shape) -> np.ndarray:
    c, h, w = shape
    return np.broadcast_to(dout[:, None, None] / (h * w), (c, h, w)).copy()


def reflect_pad_to_multiple(img: np.ndarray, multiple: int) -> np.ndarray:
    """Reflection-pad the trailing spatial dims of (C,H,W) up to the next multiple."""
    h, w = img.shape[1], img.shape[2]
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph == 0 and pw == 0:
        return img
    return np.pad(img, ((0, 0), (0, ph), (0, pw)), mode="reflect")


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned bilinear resampling; img is (H,W) or (H,W,C), returns float64."""
    x = np.asarray(img, dtype=np.float64)
    h, w = x.shape[:2]
    ys = np.linspace(0.0, h - 1.0, out_h) if out_h > 1 else np.zeros(1)
    xs = np.linspace(0.0, w - 1.0, out_w) if out_w > 1 else np.zeros(1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    if x.ndim == 3:
        fy = fy[..., None]
        fx = fx[..., None]
    top = x[y0][:, x0] * (1 - fx) + x[y0][:, x1] * fx
    bot = x[y1][:, x0] * (1 - fx) + x[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


def resize_u8(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of an 8-bit image, rounded back to uint8 (bit-stable)."""
    out = bilinear_resize(img, out_h, out_w)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    radius = max(1, int(np.ceil(3.0 * sigma)))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of a (H,W) float array with reflect borders; sigma<=0 is identity."""
    if sigma <= 0:
        return np.asarray(img, dtype=np.float64)
    k = gaussian_kernel1d(sigma)
    r = (len(k) - 1) // 2
    x = np.asarray(img, dtype=np.float64)
    xp = np.pad(x, ((r, r), (0, 0)), mode="reflect")
    cols = sliding_window_view(xp, len(k), axis=0)
    x = cols @ k
    xp = np.pad(x, ((0, 0), (r, r)), mode="reflect")
    rows = sliding_window_view(xp, len(k), axis=1)
    return rows @ k
