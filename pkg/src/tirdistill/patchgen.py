"""Paired-patch generation strategies and mini-batch composition.

All three strategies crop the same rectangle from both modalities of an
aligned pair, so every sample carries identical semantics in RGB and TIR.
Batch composition assigns modalities to the reference/test branches and
optionally concatenates the pair side by side.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .geometry import Box
from .ops import resize_u8


class CropError(ValueError):
    """Requested patch does not fit inside the source image."""


class LayoutError(ValueError):
    """Batch incompatible with the requested mixing layout."""


class StrategyUnavailableError(ValueError):
    """Strategy preconditions unmet (e.g., detection without supplied boxes)."""


@dataclass
class PairedSample:
    rgb_patch: np.ndarray  # (H, W, 3) uint8
    tir_patch: np.ndarray  # (H, W) uint8
    pseudo_box: Box        # in patch coordinates
    strategy: str
    source: tuple          # (manifest index, crop rect Box)


@dataclass(frozen=True)
class BatchLayout:
    mixing: str = "REF_TIR"  # REF_TIR | REF_RGB | MIXED
    concat_horizontal: bool = False


@dataclass
class BatchInputs:
    """Composed mini-batch: per-item branch inputs, modality tags, and the
    pseudo-label box positioned inside the test input (shifted into the TIR
    half for concatenated inputs)."""

    ref_inputs: list
    test_inputs: list
    tags: list  # (reference modality, test modality) strings
    label_boxes: list


def _centered_square(side: float) -> Box:
    q = side / 2.0
    return Box((side - q) / 2.0, (side - q) / 2.0, q, q)


def center_area(rgb: np.ndarray, tir: np.ndarray, patch_size: int = 100, index: int = 0) -> PairedSample:
    """Centered square crop; the middle half-size square plays the fake object."""
    h, w = rgb.shape[:2]
    if patch_size > min(h, w):
        raise CropError(f"patch {patch_size} exceeds image size {w}x{h}")
    x0 = (w - patch_size) // 2
    y0 = (h - patch_size) // 2
    rect = Box(float(x0), float(y0), float(patch_size), float(patch_size))
    return PairedSample(
        rgb_patch=rgb[y0:y0 + patch_size, x0:x0 + patch_size].copy(),
        tir_patch=tir[y0:y0 + patch_size, x0:x0 + patch_size].copy(),
        pseudo_box=_centered_square(patch_size),
        strategy="center_area",
        source=(index, rect),
    )


def random_sampling(rgb: np.ndarray, tir: np.ndarray, rng: np.random.Generator,
                    index: int = 0, out_size: int = 100) -> PairedSample:
    """Random crop of ~1/6 image area (aspect in [0.75, 1.33]), resized to out_size^2."""
    h, w = rgb.shape[:2]
    if h * w < 6 * 16:
        raise CropError(f"image {w}x{h} too small for 1/6-area sampling")
    area = (h * w / 6.0) * rng.uniform(0.9, 1.1)
    aspect = rng.uniform(0.75, 1.33)
    cw = int(np.clip(round(np.sqrt(area * aspect)), 4, w))
    ch = int(np.clip(round(np.sqrt(area / aspect)), 4, h))
    x0 = int(rng.integers(0, w - cw + 1))
    y0 = int(rng.integers(0, h - ch + 1))
    rect = Box(float(x0), float(y0), float(cw), float(ch))
    return PairedSample(
        rgb_patch=resize_u8(rgb[y0:y0 + ch, x0:x0 + cw], out_size, out_size),
        tir_patch=resize_u8(tir[y0:y0 + ch, x0:x0 + cw], out_size, out_size),
        pseudo_box=_centered_square(out_size),
        strategy="random_sampling",
        source=(index, rect),
    )


def detection_patches(rgb: np.ndarray, tir: np.ndarray, boxes, index: int = 0) -> list[PairedSample]:
    """One sample per supplied detection: a 2x context window around the box."""
    if not boxes:
        raise StrategyUnavailableError(
            "detection strategy needs externally supplied boxes in the manifest")
    h, w = rgb.shape[:2]
    out = []
    for det in boxes:
        wx1 = max(0.0, det.x - det.w / 2.0)
        wy1 = max(0.0, det.y - det.h / 2.0)
        wx2 = min(float(w), det.x + 1.5 * det.w)
        wy2 = min(float(h), det.y + 1.5 * det.h)
        ix1, iy1 = int(np.floor(wx1)), int(np.floor(wy1))
        ix2, iy2 = int(np.ceil(wx2)), int(np.ceil(wy2))
        if ix2 - ix1 < 2 or iy2 - iy1 < 2:
            raise CropError(f"degenerate detection window for {det}")
        rect = Box(float(ix1), float(iy1), float(ix2 - ix1), float(iy2 - iy1))
        px1 = max(0.0, det.x - ix1)
        py1 = max(0.0, det.y - iy1)
        px2 = min(rect.w, det.x + det.w - ix1)
        py2 = min(rect.h, det.y + det.h - iy1)
        out.append(PairedSample(
            rgb_patch=rgb[iy1:iy2, ix1:ix2].copy(),
            tir_patch=tir[iy1:iy2, ix1:ix2].copy(),
            pseudo_box=Box(px1, py1, px2 - px1, py2 - py1),
            strategy="detection",
            source=(index, rect),
        ))
    return out


def to_3ch(img: np.ndarray) -> np.ndarray:
    if img.ndim == 2:
        return np.repeat(img[:, :, None], 3, axis=2)
    return img


def hconcat(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    return np.concatenate([to_3ch(left), to_3ch(right)], axis=1)


def _modality_patch(sample: PairedSample, modality: str) -> np.ndarray:
    return sample.rgb_patch if modality == "rgb" else sample.tir_patch


def compose_batch(samples: list[PairedSample], layout: BatchLayout) -> BatchInputs:
    """Assign patches to the reference/test branches per the layout.

    MIXED puts RGB in the reference slots of the upper half and TIR in the
    lower half ("RGB-TIR"), with the test branch carrying the opposite
    modality per item.  With concat_horizontal each input is the side-by-side
    pair with the branch's own modality on the left, and the label box moves
    into the TIR half of the test input.
    """
    n = len(samples)
    if layout.mixing == "MIXED" and n % 2 != 0:
        raise LayoutError(f"MIXED mixing needs an even batch, got {n}")
    if layout.mixing not in ("REF_TIR", "REF_RGB", "MIXED"):
        raise LayoutError(f"unknown mixing {layout.mixing!r}")

    ref_inputs, test_inputs, tags, label_boxes = [], [], [], []
    for i, sample in enumerate(samples):
        if layout.mixing == "REF_TIR":
            ref_mod = "tir"
        elif layout.mixing == "REF_RGB":
            ref_mod = "rgb"
        else:
            ref_mod = "rgb" if i < n // 2 else "tir"
        test_mod = "tir" if ref_mod == "rgb" else "rgb"
        box = sample.pseudo_box
        if layout.concat_horizontal:
            other = {"rgb": "tir", "tir": "rgb"}
            ref_inputs.append(hconcat(_modality_patch(sample, ref_mod),
                                      _modality_patch(sample, other[ref_mod])))
            test_inputs.append(hconcat(_modality_patch(sample, test_mod),
                                       _modality_patch(sample, other[test_mod])))
            tags.append((f"{ref_mod}|{other[ref_mod]}", f"{test_mod}|{other[test_mod]}"))
            if test_mod != "tir":  # TIR sits in the right half of the test input
                box = box.translated(float(sample.tir_patch.shape[1]), 0.0)
        else:
            ref_inputs.append(_modality_patch(sample, ref_mod))
            test_inputs.append(_modality_patch(sample, test_mod))
            tags.append((ref_mod, test_mod))
        label_boxes.append(box)
    return BatchInputs(ref_inputs, test_inputs, tags, label_boxes)


# ---------------------------------------------------------------------------
# sample-set helpers used by the trainer and the `pairs` CLI command


def build_samples(loaded_pairs, strategy: str, rng: np.random.Generator,
                  patch_size: int = 64, samples_per_pair: int = 1):
    """Generate PairedSamples from loaded (rgb, tir, boxes) triples."""
    samples = []
    for index, (rgb, tir, boxes) in enumerate(loaded_pairs):
        if strategy == "center_area":
            samples.append(center_area(rgb, tir, patch_size=patch_size, index=index))
        elif strategy == "random_sampling":
            for _ in range(samples_per_pair):
                samples.append(random_sampling(rgb, tir, rng, index=index))
        elif strategy == "detection":
            samples.extend(detection_patches(rgb, tir, boxes, index=index))
        else:
            raise StrategyUnavailableError(f"unknown strategy {strategy!r}")
    return samples


def write_patch_dir(out_dir, samples: list[PairedSample]):
    """Write patch PNGs plus index.jsonl describing every sample."""
    from .data import save_image

    os.makedirs(out_dir, exist_ok=True)
    index_path = os.path.join(out_dir, "index.jsonl")
    with open(index_path, "w", encoding="utf-8") as fh:
        for i, s in enumerate(samples):
            rgb_name = f"patch_{i:05d}_rgb.png"
            tir_name = f"patch_{i:05d}_tir.png"
            save_image(os.path.join(out_dir, rgb_name), s.rgb_patch)
            save_image(os.path.join(out_dir, tir_name), s.tir_patch)
            rect = s.source[1]
            fh.write(json.dumps({
                "rgb_patch": rgb_name,
                "tir_patch": tir_name,
                "pseudo_box": [s.pseudo_box.x, s.pseudo_box.y, s.pseudo_box.w, s.pseudo_box.h],
                "strategy": s.strategy,
                "source": {"index": s.source[0], "crop_rect": [rect.x, rect.y, rect.w, rect.h]},
            }) + "\n")
    return index_path


def load_patch_index(index_path) -> list[PairedSample]:
    from .data import load_image

    base = os.path.dirname(os.path.abspath(index_path))
    samples = []
    with open(index_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            rect = obj["source"]["crop_rect"]
            samples.append(PairedSample(
                rgb_patch=to_3ch(load_image(os.path.join(base, obj["rgb_patch"]))),
                tir_patch=load_image(os.path.join(base, obj["tir_patch"])),
                pseudo_box=Box(*obj["pseudo_box"]),
                strategy=obj["strategy"],
                source=(obj["source"]["index"], Box(*rect)),
            ))
    return samples
