"""Deterministic synthetic test scenes.

Natural-image datasets are not redistributed with the package; these
generators produce 128x128 8b scenes with natural-image-like statistics
(1/f spectral falloff, moderate global contrast) plus a stylized portrait
scene for the RoI fixtures.  Everything is a pure function of the seed.
"""

from __future__ import annotations

import numpy as np

from .constants import ARRAY_SIZE


def texture_image(seed: int, contrast: float = 48.0, mean: float = 120.0,
                  alpha: float = 1.8) -> np.ndarray:
    """1/f^alpha noise field, normalized to the requested mean/contrast."""
    rng = np.random.default_rng(seed)
    n = ARRAY_SIZE
    fy = np.fft.fftfreq(n)[:, None]
    fx = np.fft.rfftfreq(n)[None, :]
    radius = np.hypot(fy, fx)
    radius[0, 0] = 1.0
    spectrum = (rng.standard_normal((n, n // 2 + 1)) + 1j * rng.standard_normal((n, n // 2 + 1)))
    spectrum /= radius**alpha
    spectrum[0, 0] = 0.0
    field = np.fft.irfft2(spectrum, s=(n, n))
    field = (field - field.mean()) / field.std()
    return np.clip(mean + contrast * field, 0, 255).astype(np.uint8)


def gradient_blobs_image(seed: int) -> np.ndarray:
    """Smooth gradient plus a few Gaussian blobs: broad dynamic range."""
    rng = np.random.default_rng(seed)
    n = ARRAY_SIZE
    y, x = np.mgrid[0:n, 0:n].astype(np.float64)
    img = 40.0 + 120.0 * x / n + 30.0 * y / n
    for _ in range(6):
        cy, cx = rng.uniform(10, n - 10, size=2)
        s = rng.uniform(6, 20)
        amp = rng.uniform(-90, 90)
        img += amp * np.exp(-((y - cy) ** 2 + (x - cx) ** 2) / (2 * s**2))
    return np.clip(img, 0, 255).astype(np.uint8)


def face_scene() -> np.ndarray:
    """Stylized portrait on a dim textured background (RoI fixture scene)."""
    n = ARRAY_SIZE
    y, x = np.mgrid[0:n, 0:n].astype(np.float64)
    rng = np.random.default_rng(2024)
    img = 70.0 + 12.0 * rng.standard_normal((n, n))

    def oval(cy, cx, ry, rx):
        return ((y - cy) / ry) ** 2 + ((x - cx) / rx) ** 2 <= 1.0

    img[oval(70, 64, 34, 26)] = 175.0           # head
    img[oval(58, 53, 4.5, 6)] = 80.0            # eyes
    img[oval(58, 75, 4.5, 6)] = 80.0
    img[oval(72, 64, 7, 3.5)] = 140.0           # nose
    img[oval(85, 64, 3.5, 10)] = 95.0           # mouth
    img[oval(100, 64, 22, 18) & (y > 96)] = 120.0  # shoulders
    return np.clip(img, 0, 255).astype(np.uint8)


def test_images(count: int, base_seed: int = 7, contrast: float = 48.0) -> list[np.ndarray]:
    """Mixed bag of textures and blob scenes, natural-image-like contrast."""
    images = []
    for i in range(count):
        if i % 3 == 2:
            images.append(gradient_blobs_image(base_seed + i))
        else:
            images.append(texture_image(base_seed + i, contrast=contrast))
    return images
