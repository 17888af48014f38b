"""Pixel-domain JND estimation (Chou & Li luminance adaptation + texture masking).

The luma JND is computed once and replicated over the image channels.
All 5x5 windows use edge-replicated borders, so a constant image yields
a constant map.
"""

import numpy as np
from scipy import ndimage

from .image_io import Image, JndMap

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

# background luminance: zero centre, 1/2/1 rings, weights sum to 32
BG_KERNEL = np.array(
    [
        [1, 1, 1, 1, 1],
        [1, 2, 2, 2, 1],
        [1, 2, 0, 2, 1],
        [1, 2, 2, 2, 1],
        [1, 1, 1, 1, 1],
    ],
    dtype=np.float64,
)
BG_NORM = 32.0

# directional high-pass operators (horizontal, two diagonals, vertical)
GRADIENT_KERNELS = np.array(
    [
        [
            [0, 0, 0, 0, 0],
            [1, 3, 8, 3, 1],
            [0, 0, 0, 0, 0],
            [-1, -3, -8, -3, -1],
            [0, 0, 0, 0, 0],
        ],
        [
            [0, 0, 1, 0, 0],
            [0, 8, 3, 0, 0],
            [1, 3, 0, -3, -1],
            [0, 0, -3, -8, 0],
            [0, 0, -1, 0, 0],
        ],
        [
            [0, 0, 1, 0, 0],
            [0, 0, 3, 8, 0],
            [-1, -3, 0, 3, 1],
            [0, -8, -3, 0, 0],
            [0, 0, -1, 0, 0],
        ],
        [
            [0, 1, 0, -1, 0],
            [0, 3, 0, -3, 0],
            [0, 8, 0, -8, 0],
            [0, 3, 0, -3, 0],
            [0, 1, 0, -1, 0],
        ],
    ],
    dtype=np.float64,
)
GRADIENT_NORM = 16.0

LA_DARK_GAIN = 17.0
LA_BRIGHT_SLOPE = 3.0 / 128.0
LA_FLOOR = 3.0
LA_MID = 127.0
TEXTURE_ALPHA = 0.117

MAX_THRESHOLD = 64.0


def to_luma(image: Image) -> np.ndarray:
    """Return the ``(height, width)`` float64 luma plane of ``image``.

    Three-channel input uses Y = 0.299 R + 0.587 G + 0.114 B; one-channel
    input passes through unchanged.
    """
    if image.channels == 1:
        return image.data[:, :, 0].astype(np.float64)
    if image.channels == 3:
        return image.data.astype(np.float64) @ LUMA_WEIGHTS
    raise ValueError(f"unsupported channel count {image.channels}")


def background_luminance(luma: np.ndarray) -> np.ndarray:
    return ndimage.correlate(luma, BG_KERNEL, mode="nearest") / BG_NORM


def max_gradient(luma: np.ndarray) -> np.ndarray:
    """Largest absolute response of the four directional operators."""
    responses = [
        np.abs(ndimage.correlate(luma, k, mode="nearest")) for k in GRADIENT_KERNELS
    ]
    return np.maximum.reduce(responses) / GRADIENT_NORM


def luminance_adaptation(bg: np.ndarray) -> np.ndarray:
    bg = np.asarray(bg, dtype=np.float64)
    dark = LA_DARK_GAIN * (1.0 - np.sqrt(np.clip(bg, 0.0, LA_MID) / LA_MID)) + LA_FLOOR
    bright = LA_BRIGHT_SLOPE * (bg - LA_MID) + LA_FLOOR
    return np.where(bg <= LA_MID, dark, bright)


def texture_masking(gradient: np.ndarray) -> np.ndarray:
    return TEXTURE_ALPHA * gradient


def estimate_luma_jnd(luma: np.ndarray) -> np.ndarray:
    """Per-pixel threshold max(LA, TM) for a luma plane."""
    la = luminance_adaptation(background_luminance(luma))
    tm = texture_masking(max_gradient(luma))
    return np.maximum(la, tm)


def estimate_jnd(image: Image) -> JndMap:
    """Estimate a JND map with the same width, height and channels as ``image``."""
    luma_jnd = estimate_luma_jnd(to_luma(image))
    # bounded for 8-bit input (LA <= 20, TM <= 0.117 * 255); the clip only
    # guards against drift if the constants are ever retuned
    luma_jnd = np.clip(luma_jnd, 0.0, MAX_THRESHOLD)
    stacked = np.repeat(luma_jnd[:, :, None], image.channels, axis=2)
    return JndMap(stacked)


def scale_map(jnd: JndMap, gain: float) -> JndMap:
    """Multiply every threshold by ``gain`` (must be positive and finite)."""
    if not np.isfinite(gain) or gain <= 0:
        raise ValueError(f"gain must be positive and finite, got {gain}")
    return JndMap(jnd.data.astype(np.float64) * gain)
