"""Dataset manifests for aligned RGB/TIR pairs, tracking-sequence I/O, and the
synthetic paired-modality generator that backs the desk-scale test fixtures.

Synthetic generation is a pure function of its spec: a fixed PCG64 stream
drives every random choice, so identical specs give bit-identical arrays.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .geometry import Box, check_box
from .ops import bilinear_resize, gaussian_blur


class ManifestError(ValueError):
    """Malformed pair-manifest file."""


class AlignmentError(ValueError):
    """RGB/TIR images of one pair do not share the same dimensions."""


class SequenceFormatError(ValueError):
    """Sequence directory violating the expected layout."""


@dataclass
class PairManifestEntry:
    rgb_path: str
    tir_path: str
    boxes: list[Box] | None = None


@dataclass
class Sequence:
    name: str
    frame_paths: list[str]
    gt: list[Box]
    attributes: set[str] = field(default_factory=set)

    def __len__(self):
        return len(self.frame_paths)


# ---------------------------------------------------------------------------
# manifest / image loading


def load_pair_manifest(path) -> list[PairManifestEntry]:
    """Parse a JSON Lines pair manifest; paths stay relative to the manifest file."""
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                rgb = obj["rgb"]
                tir = obj["tir"]
                raw_boxes = obj.get("boxes")
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ManifestError(f"{path}:{lineno}: malformed manifest line ({exc})") from exc
            boxes = None
            if raw_boxes is not None:
                try:
                    boxes = [check_box(Box(*map(float, b))) for b in raw_boxes]
                except (TypeError, ValueError) as exc:
                    raise ManifestError(f"{path}:{lineno}: bad box list ({exc})") from exc
            entries.append(PairManifestEntry(os.path.join(base, rgb), os.path.join(base, tir), boxes))
    return entries


def load_image(path) -> np.ndarray:
    img = Image.open(path)
    if img.mode in ("L", "I;16"):
        return np.asarray(img.convert("L"), dtype=np.uint8)
    return np.asarray(img.convert("RGB"), dtype=np.uint8)


def load_pair(entry: PairManifestEntry):
    """Load one aligned pair as (rgb uint8 HxWx3, tir uint8 HxW); checks alignment."""
    rgb = np.asarray(Image.open(entry.rgb_path).convert("RGB"), dtype=np.uint8)
    tir = np.asarray(Image.open(entry.tir_path).convert("L"), dtype=np.uint8)
    if rgb.shape[:2] != tir.shape[:2]:
        raise AlignmentError(
            f"pair {entry.rgb_path} / {entry.tir_path}: sizes {rgb.shape[:2]} vs {tir.shape[:2]}")
    return rgb, tir


def save_image(path, img: np.ndarray):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    Image.fromarray(img).save(path)


# ---------------------------------------------------------------------------
# sequence layout


def load_sequence(seq_dir) -> Sequence:
    """Read a sequence directory: frames.txt, groundtruth_rect.txt, optional attributes.txt."""
    frames_file = os.path.join(seq_dir, "frames.txt")
    gt_file = os.path.join(seq_dir, "groundtruth_rect.txt")
    with open(frames_file, "r", encoding="utf-8") as fh:
        frames = [os.path.join(seq_dir, ln.strip()) for ln in fh if ln.strip()]
    gt = load_results(gt_file)
    if len(frames) != len(gt):
        raise SequenceFormatError(
            f"{seq_dir}: {len(frames)} frames but {len(gt)} ground-truth lines")
    if len(frames) < 2:
        raise SequenceFormatError(f"{seq_dir}: need at least 2 frames, got {len(frames)}")
    check_box(gt[0])
    attrs: set[str] = set()
    attr_file = os.path.join(seq_dir, "attributes.txt")
    if os.path.exists(attr_file):
        with open(attr_file, "r", encoding="utf-8") as fh:
            attrs = {ln.strip() for ln in fh if ln.strip()}
    return Sequence(name=os.path.basename(os.path.normpath(seq_dir)),
                    frame_paths=frames, gt=gt, attributes=attrs)


def load_results(path) -> list[Box]:
    """Read an 'x,y,w,h' per-line box file (ground truth or tracker results)."""
    boxes = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.replace("\t", ",").split(",")
            if len(parts) != 4:
                raise SequenceFormatError(f"{path}:{lineno}: expected 4 comma-separated values")
            try:
                boxes.append(Box(*(float(p) for p in parts)))
            except ValueError as exc:
                raise SequenceFormatError(f"{path}:{lineno}: {exc}") from exc
    return boxes


def save_results(path, boxes: list[Box]):
    """Write boxes in the 'x,y,w,h' per-line format; repr floats round-trip losslessly."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for b in boxes:
            fh.write(f"{b.x!r},{b.y!r},{b.w!r},{b.h!r}\n")


# ---------------------------------------------------------------------------
# synthetic paired-modality generator


@dataclass(frozen=True)
class SynthSpec:
    n_pairs: int = 20
    image_size: int = 96
    object_size_range: tuple[int, int] = (12, 22)
    seed: int = 0
    tir_weights: tuple[float, float, float] = (0.299, 0.587, 0.114)
    tir_invert: bool = True
    tir_blur: float = 1.0
    tir_noise: float = 2.0


def luminance(rgb: np.ndarray, weights) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    return np.asarray(rgb, dtype=np.float64) @ w


def tir_from_rgb(rgb: np.ndarray, spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """Deterministic RGB -> TIR transform: luminance collapse, optional inversion,
    blur (kills texture), additive noise."""
    y = luminance(rgb, spec.tir_weights)
    if spec.tir_invert:
        y = 255.0 - y
    y = gaussian_blur(y, spec.tir_blur)
    if spec.tir_noise > 0:
        y = y + spec.tir_noise * rng.standard_normal(y.shape)
    return np.clip(np.rint(y), 0, 255).astype(np.uint8)


def _background(size: int, rng: np.random.Generator) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    img = np.zeros((size, size, 3), dtype=np.float64)
    for k in range(3):
        base = rng.uniform(70, 150)
        gx, gy = rng.uniform(-40, 40, size=2)
        amp = rng.uniform(5, 16)
        fx, fy = rng.uniform(1.0, 3.0, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        img[..., k] = base + gx * xx + gy * yy + amp * np.sin(2 * np.pi * (fx * xx + fy * yy) + phase)
    for _ in range(3):  # soft low-contrast clutter rectangles
        w = int(rng.integers(size // 6, size // 3))
        h = int(rng.integers(size // 6, size // 3))
        x = int(rng.integers(0, size - w))
        y = int(rng.integers(0, size - h))
        img[y:y + h, x:x + w] += rng.uniform(-20, 20, size=3)
    return img


def _object_patch(w: int, h: int, bg_lum: float, rng: np.random.Generator) -> np.ndarray:
    """Textured rectangle whose luminance is well separated from the background."""
    bright = bool(rng.integers(0, 2))
    target = np.clip(bg_lum + (95.0 if bright else -95.0), 25.0, 230.0)
    base = np.clip(target + rng.uniform(-25, 25, size=3), 10, 245)
    delta = rng.uniform(18, 40, size=3)
    cell = max(2, min(w, h) // 4)
    yy, xx = np.mgrid[0:h, 0:w]
    checker = ((yy // cell + xx // cell) % 2).astype(np.float64)[..., None]
    return base[None, None, :] + delta[None, None, :] * (checker - 0.5)


def _place_object(img: np.ndarray, rng: np.random.Generator, size_range) -> Box:
    size = img.shape[0]
    lo, hi = size_range
    w = int(rng.integers(lo, hi + 1))
    h = int(rng.integers(lo, hi + 1))
    x = int(rng.integers(1, size - w - 1))
    y = int(rng.integers(1, size - h - 1))
    patch_lum = luminance(img[y:y + h, x:x + w], (0.299, 0.587, 0.114)).mean()
    img[y:y + h, x:x + w] = _object_patch(w, h, patch_lum, rng)
    return Box(float(x), float(y), float(w), float(h))


def generate_synthetic_pairs(spec: SynthSpec):
    """List of (rgb uint8, tir uint8, true object Box); truth is for oracle use only."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    out = []
    for _ in range(spec.n_pairs):
        scene = _background(spec.image_size, rng)
        box = _place_object(scene, rng, spec.object_size_range)
        rgb = np.clip(np.rint(scene), 0, 255).astype(np.uint8)
        tir = tir_from_rgb(rgb, spec, rng)
        out.append((rgb, tir, box))
    return out


@dataclass(frozen=True)
class SequenceSpec:
    n_frames: int = 30
    image_size: int = 128
    object_size_range: tuple[int, int] = (14, 24)
    seed: int = 0
    modality: str = "tir"  # "tir" or "rgb"
    tir_weights: tuple[float, float, float] = (0.299, 0.587, 0.114)
    tir_invert: bool = True
    tir_blur: float = 1.0
    tir_noise: float = 2.0

    def synth_spec(self) -> SynthSpec:
        return SynthSpec(image_size=self.image_size, seed=self.seed,
                         tir_weights=self.tir_weights, tir_invert=self.tir_invert,
                         tir_blur=self.tir_blur, tir_noise=self.tir_noise)


def generate_synthetic_sequence(spec: SequenceSpec):
    """One moving-object sequence: (frames, gt boxes, attribute tags).

    The object follows a seeded bounded random walk over a static textured
    background; size may oscillate gently to exercise scale estimation.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    size = spec.image_size
    background = _background(size, rng)
    lo, hi = spec.object_size_range
    w0 = int(rng.integers(lo, hi + 1))
    h0 = int(rng.integers(lo, hi + 1))
    bg_lum = luminance(background, (0.299, 0.587, 0.114)).mean()
    obj = _object_patch(w0, h0, bg_lum, rng)

    cx = float(rng.uniform(w0, size - w0))
    cy = float(rng.uniform(h0, size - h0))
    speed = float(rng.uniform(1.5, 4.5))
    ang = float(rng.uniform(0, 2 * math.pi))
    vx, vy = speed * math.cos(ang), speed * math.sin(ang)
    scale_amp = float(rng.uniform(0.05, 0.12)) if rng.integers(0, 2) else 0.0
    scale_phase = float(rng.uniform(0, 2 * math.pi))

    tir_spec = spec.synth_spec()
    frames, gt, speeds = [], [], []
    for t in range(spec.n_frames):
        s = 1.0 + scale_amp * math.sin(2 * math.pi * t / 24.0 + scale_phase)
        w = max(6, int(round(w0 * s)))
        h = max(6, int(round(h0 * s)))
        vx += float(rng.normal(0.0, 0.35))
        vy += float(rng.normal(0.0, 0.35))
        v = math.hypot(vx, vy)
        if v > 6.0:
            vx, vy = vx * 6.0 / v, vy * 6.0 / v
        if not (w / 2 + 1 <= cx + vx <= size - w / 2 - 1):
            vx = -vx
        if not (h / 2 + 1 <= cy + vy <= size - h / 2 - 1):
            vy = -vy
        cx = float(np.clip(cx + vx, w / 2 + 1, size - w / 2 - 1))
        cy = float(np.clip(cy + vy, h / 2 + 1, size - h / 2 - 1))
        speeds.append(math.hypot(vx, vy))

        x = int(round(cx - w / 2))
        y = int(round(cy - h / 2))
        scene = background.copy()
        scene[y:y + h, x:x + w] = np.clip(bilinear_resize(obj, h, w), 0, 255)
        rgb = np.clip(np.rint(scene), 0, 255).astype(np.uint8)
        frames.append(rgb if spec.modality == "rgb" else tir_from_rgb(rgb, tir_spec, rng))
        gt.append(Box(float(x), float(y), float(w), float(h)))

    attrs = {"fast_motion" if float(np.mean(speeds)) > 3.2 else "slow_motion",
             "scale_variation" if scale_amp > 0 else "rigid_scale"}
    return frames, gt, attrs


def write_sequence_dir(seq_dir, frames, gt, attributes=()):
    """Materialize a sequence in the on-disk layout understood by load_sequence."""
    os.makedirs(os.path.join(seq_dir, "frames"), exist_ok=True)
    names = []
    for i, frame in enumerate(frames):
        name = os.path.join("frames", f"{i:04d}.png")
        save_image(os.path.join(seq_dir, name), frame)
        names.append(name)
    with open(os.path.join(seq_dir, "frames.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(names) + "\n")
    save_results(os.path.join(seq_dir, "groundtruth_rect.txt"), gt)
    if attributes:
        with open(os.path.join(seq_dir, "attributes.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(sorted(attributes)) + "\n")


def write_pair_fixture(out_dir, spec: SynthSpec, detection_jitter: float = 0.0):
    """Write PNG pairs plus manifest.jsonl; optionally emit jittered true boxes as
    stand-in external detections (detection_jitter = relative box-size noise)."""
    pairs = generate_synthetic_pairs(spec)
    rng = np.random.Generator(np.random.PCG64(spec.seed + 0x9E37))
    os.makedirs(out_dir, exist_ok=True)
    manifest_path = os.path.join(out_dir, "manifest.jsonl")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for i, (rgb, tir, box) in enumerate(pairs):
            rgb_name = f"rgb_{i:04d}.png"
            tir_name = f"tir_{i:04d}.png"
            save_image(os.path.join(out_dir, rgb_name), rgb)
            save_image(os.path.join(out_dir, tir_name), tir)
            record = {"rgb": rgb_name, "tir": tir_name}
            if detection_jitter > 0:
                noise = rng.normal(0.0, detection_jitter, size=4)
                det = Box(box.x + noise[0] * box.w, box.y + noise[1] * box.h,
                          max(4.0, box.w * (1 + noise[2])), max(4.0, box.h * (1 + noise[3])))
                record["boxes"] = [[det.x, det.y, det.w, det.h]]
            fh.write(json.dumps(record) + "\n")
    return manifest_path


def make_sequence_set(out_root, n_sequences: int, base_seed: int, **overrides):
    """Generate n sequence directories seq_000..; returns the list of directories."""
    dirs = []
    for i in range(n_sequences):
        spec = SequenceSpec(seed=base_seed + i, **overrides)
        frames, gt, attrs = generate_synthetic_sequence(spec)
        seq_dir = os.path.join(out_root, f"seq_{i:03d}")
        write_sequence_dir(seq_dir, frames, gt, attrs)
        dirs.append(seq_dir)
    return dirs
