"""Color-space conversions: HSB, CIELab (D65), and optical density."""

from __future__ import annotations

import numpy as np

#: Default background (blank slide) intensity per channel.
DEFAULT_I0 = 255.0

#: Floor keeping optical density finite on saturated-black pixels.
OD_EPSILON = 1.0 / 255.0


def rgb_to_hsb(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standard hexcone conversion of 8-bit RGB.

    Returns (hue in degrees [0, 360), saturation [0, 1], brightness [0, 1]);
    the hue of achromatic pixels is defined as 0.  Accepts any leading
    shape with a trailing channel axis of size 3.
    """
    arr = np.asarray(rgb, dtype=np.float64)
    r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
    cmax = np.maximum(np.maximum(r, g), b)
    cmin = np.minimum(np.minimum(r, g), b)
    delta = cmax - cmin

    brightness = cmax / 255.0
    with np.errstate(invalid="ignore", divide="ignore"):
        saturation = np.where(cmax > 0, delta / np.where(cmax > 0, cmax, 1.0), 0.0)

    hue = np.zeros_like(cmax)
    nz = delta > 0
    safe = np.where(nz, delta, 1.0)
    is_r = nz & (cmax == r)
    is_g = nz & ~is_r & (cmax == g)
    is_b = nz & ~is_r & ~is_g
    hue = np.where(is_r, ((g - b) / safe) % 6.0, hue)
    hue = np.where(is_g, (b - r) / safe + 2.0, hue)
    hue = np.where(is_b, (r - g) / safe + 4.0, hue)
    hue = (hue * 60.0) % 360.0
    return hue, saturation, brightness


_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
# White point derived from the matrix itself so pure white maps exactly
# to L=100, a=b=0 (matches the D65 reference to 5 decimals).
_D65_WHITE = _SRGB_TO_XYZ.sum(axis=1)


def rgb_to_lab(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """sRGB (8-bit) -> XYZ(D65) -> CIELab; returns (L, a, b)."""
    arr = np.asarray(rgb, dtype=np.float64) / 255.0
    linear = np.where(arr <= 0.04045, arr / 12.92, ((arr + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _SRGB_TO_XYZ.T
    t = xyz / _D65_WHITE
    delta = 6.0 / 29.0
    f = np.where(t > delta**3, np.cbrt(t), t / (3 * delta**2) + 4.0 / 29.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    return 116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)


def rgb_to_od(image: np.ndarray, i0=DEFAULT_I0, epsilon: float = OD_EPSILON) -> np.ndarray:
    """Per-channel optical density, OD = -log10(max(I, eps) / I0)."""
    i0 = np.asarray(i0, dtype=np.float64)
    if np.any(i0 <= 0):
        raise ValueError("background intensity must be positive")
    intensity = np.maximum(np.asarray(image, dtype=np.float64), epsilon)
    return -np.log10(intensity / i0)


def od_to_rgb(od: np.ndarray, i0=DEFAULT_I0) -> np.ndarray:
    """Inverse of :func:`rgb_to_od` (float output, no quantization)."""
    return np.asarray(i0, dtype=np.float64) * np.power(10.0, -np.asarray(od, dtype=np.float64))


def luminance(rgb: np.ndarray) -> np.ndarray:
    """Rec.601 luma of an RGB image, as float in the input scale."""
    arr = np.asarray(rgb, dtype=np.float64)
    return 0.299 * arr[..., 0] + 0.587 * arr[..., 1] + 0.114 * arr[..., 2]
