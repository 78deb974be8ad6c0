"""8-bit grayscale PNG rendering of volume slices and images."""

import numpy as np
from PIL import Image as PILImage


def _to_uint8(data, lo, hi):
    if hi <= lo:
        return np.zeros(data.shape, dtype=np.uint8)
    scaled = (data - lo) / (hi - lo)
    return np.round(np.clip(scaled, 0.0, 1.0) * 255.0).astype(np.uint8)


def render_slice(vol, axis, index, global_norm=False):
    """One volume slice as a uint8 array, min-max normalized.

    Per-slice normalization by default; ``global_norm`` scales against
    the whole volume's range instead.
    """
    if axis not in (0, 1, 2):
        raise ValueError("axis must be 0, 1 or 2")
    if not 0 <= index < vol.grid.dims[axis]:
        raise ValueError(f"index {index} out of range for axis {axis}")
    data = np.take(vol.values, index, axis=axis)
    if global_norm:
        lo, hi = float(vol.values.min()), float(vol.values.max())
    else:
        lo, hi = float(data.min()), float(data.max())
    # transpose so the second grid axis runs upward in the PNG
    return _to_uint8(data, lo, hi).T[::-1]


def render_image(img):
    """An Image2D as a min-max normalized uint8 array."""
    data = img.values
    return _to_uint8(data, float(data.min()), float(data.max())).T[::-1]


def save_png(path, pixels):
    PILImage.fromarray(pixels, mode="L").save(path, format="PNG")
