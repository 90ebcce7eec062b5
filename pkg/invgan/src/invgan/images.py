"""Procedural face-like test images.

Each image is a smooth composition of soft-edged shapes on a plain
background: a head ellipse, two eyes, a mouth bar. Ten parameters in
[0, 1] control positions, sizes, and tones, so the image family is a
low-dimensional manifold that a small generator can realistically learn
to traverse. Values are float32 in [0, 1], shape (1, SIZE, SIZE).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

SIZE = 32
PARAM_COUNT = 10

# soft-edge steepness for the shape masks; higher = crisper boundaries
_EDGE = 5.0

_YY, _XX = np.mgrid[0:SIZE, 0:SIZE].astype(np.float64)


def _soft_ellipse(cx, cy, rx, ry):
    """Mask in [0,1] fading smoothly at the ellipse boundary."""
    q = 1.0 - ((_XX - cx) / rx) ** 2 - ((_YY - cy) / ry) ** 2
    # overflow-safe sigmoid
    return 0.5 * (1.0 + np.tanh(0.5 * _EDGE * q * min(rx, ry)))


def _blend(base, mask, tone):
    return base * (1.0 - mask) + tone * mask


def render_face(params: np.ndarray) -> np.ndarray:
    """Render one (1, SIZE, SIZE) image from PARAM_COUNT values in [0, 1]."""
    p = np.asarray(params, dtype=np.float64)
    if p.shape != (PARAM_COUNT,):
        raise ValueError(f"expected {PARAM_COUNT} parameters, got shape {p.shape}")
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("parameters must lie in [0, 1]")

    bg = 0.05 + 0.25 * p[0]
    cx = 13.0 + 6.0 * p[1]
    cy = 13.0 + 6.0 * p[2]
    rx = 7.0 + 4.0 * p[3]
    ry = 8.0 + 4.0 * p[4]
    head_tone = 0.5 + 0.3 * p[5]
    eye_dx = 2.5 + 2.0 * p[6]
    eye_r = 0.9 + 0.8 * p[7]
    mouth_w = 2.0 + 3.0 * p[8]
    mouth_tone = 0.3 * p[9]

    img = np.full((SIZE, SIZE), bg)
    img = _blend(img, _soft_ellipse(cx, cy, rx, ry), head_tone)
    eye_y = cy - 0.35 * ry
    eye_tone = 0.12
    img = _blend(img, _soft_ellipse(cx - eye_dx, eye_y, eye_r, eye_r), eye_tone)
    img = _blend(img, _soft_ellipse(cx + eye_dx, eye_y, eye_r, eye_r), eye_tone)
    mouth_y = cy + 0.45 * ry
    img = _blend(img, _soft_ellipse(cx, mouth_y, mouth_w, 1.1), mouth_tone)
    return np.clip(img, 0.0, 1.0).astype(np.float32)[None, :, :]


def synth_images(count: int, seed: int = 0) -> np.ndarray:
    """A batch of rendered faces, shape (count, 1, SIZE, SIZE)."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)
    params = rng.uniform(0.0, 1.0, size=(count, PARAM_COUNT))
    return np.stack([render_face(p) for p in params])


def save_images(directory: str | Path, images: np.ndarray) -> list[Path]:
    """Write 8-bit grayscale PNGs named face_00000.png, face_00001.png, ..."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, img in enumerate(images):
        arr = np.clip(np.asarray(img)[0] * 255.0, 0.0, 255.0).round().astype(np.uint8)
        path = directory / f"face_{i:05d}.png"
        Image.fromarray(arr, mode="L").save(path)
        paths.append(path)
    return paths


def load_image(path: str | Path) -> np.ndarray:
    """Read one PNG back to float32 in [0, 1], shape (1, SIZE, SIZE)."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float32) / 255.0
    if arr.shape != (SIZE, SIZE):
        raise ValueError(f"{path}: expected {SIZE}x{SIZE}, got {arr.shape}")
    return arr[None, :, :]
