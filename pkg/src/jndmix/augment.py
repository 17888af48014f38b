"""JNDMix sample generation and the two ablation injectors.

A JNDMix sample is built in four steps: draw a scalar ratio ``lambda`` from
the open unit interval, scale the JND map by it, draw a random +1/-1 sign
per sample position, and add ``sign * noise`` to the image. The quality
label is carried over untouched because the perturbation stays below the
visibility threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image_io import Image, JndMap
from .rng import MASK64, make_rng

_TWO_POW_M52 = 2.0 ** -52


@dataclass(frozen=True, eq=False)
class SignField:
    """Per-sample injection direction, int8 values in {+1, -1}."""

    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.int8)
        if data.ndim != 3 or min(data.shape) < 1:
            raise ValueError(f"sign field must be HxWxC with positive sizes, got {data.shape}")
        if not np.all((data == 1) | (data == -1)):
            raise ValueError("sign field values must be +1 or -1")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True, eq=False)
class NoiseField:
    """Non-negative noise magnitudes, float64, shaped like the source map."""

    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise ValueError(f"noise field must be HxWxC, got shape {data.shape}")
        if np.any(data < 0) or not np.all(np.isfinite(data)):
            raise ValueError("noise magnitudes must be finite and non-negative")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True)
class AugmentedSample:
    image: Image
    label: float
    lam: float
    seed: int

    def __eq__(self, other):
        if not isinstance(other, AugmentedSample):
            return NotImplemented
        return (
            self.image == other.image
            and _same_float(self.label, other.label)
            and _same_float(self.lam, other.lam)
            and self.seed == other.seed
        )


def _same_float(a: float, b: float) -> bool:
    return np.float64(a).tobytes() == np.float64(b).tobytes()


def round_half_away(values) -> np.ndarray:
    """Round to the nearest integer, ties away from zero (2.5 -> 3, -2.5 -> -3)."""
    values = np.asarray(values, dtype=np.float64)
    return np.copysign(np.floor(np.abs(values) + 0.5), values)


def _quantize(values: np.ndarray) -> np.ndarray:
    return np.clip(round_half_away(values), 0, 255).astype(np.uint8)


def _check_shapes(**operands):
    shapes = {name: tuple(op.shape) for name, op in operands.items()}
    if len(set(shapes.values())) != 1:
        detail = ", ".join(f"{name}={shape}" for name, shape in shapes.items())
        raise ValueError(f"dimension mismatch: {detail}")


def sample_lambda(rng: np.random.Generator) -> float:
    """Draw lambda uniformly from the open interval (0, 1).

    Uses the top 52 bits of one raw 64-bit draw, offset by half a step.
    With 52 bits every value ``(k + 0.5) / 2**52`` is exact in binary64, so
    neither endpoint is reachable (53 bits would round the top draw to 1.0).
    """
    raw = int(rng.bit_generator.random_raw())
    return ((raw >> 12) + 0.5) * _TWO_POW_M52


def sample_sign_field(rng: np.random.Generator, width: int, height: int, channels: int) -> SignField:
    if width < 1 or height < 1 or channels < 1:
        raise ValueError(f"sign field dimensions must be positive, got {width}x{height}x{channels}")
    bits = rng.integers(0, 2, size=(height, width, channels), dtype=np.int8)
    return SignField(2 * bits - 1)


def make_noise(jnd: JndMap, lam: float) -> NoiseField:
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    return NoiseField(lam * jnd.data.astype(np.float64))


def inject(image: Image, noise: NoiseField, sign: SignField) -> Image:
    """Return ``clamp(round(image + sign * noise), 0, 255)`` element-wise."""
    _check_shapes(image=image, noise=noise, sign=sign)
    shifted = image.data.astype(np.float64) + sign.data * noise.data
    return Image(_quantize(shifted))


def jndmix(image: Image, label: float, jnd: JndMap, seed: int) -> AugmentedSample:
    """Generate one JNDMix sample; a pure function of its arguments."""
    _check_shapes(image=image, jnd=jnd)
    rng = make_rng(seed)
    lam = sample_lambda(rng)
    noise = make_noise(jnd, lam)
    sign = sample_sign_field(rng, image.width, image.height, image.channels)
    return AugmentedSample(inject(image, noise, sign), label, lam, seed)


def full_jnd_inject(image: Image, jnd: JndMap, sign: SignField | None = None) -> Image:
    """Ablation: add the whole JND map, no ratio.

    The default adds with a positive sign everywhere; pass ``sign`` to use
    a random-direction variant instead.
    """
    _check_shapes(image=image, jnd=jnd)
    noise = jnd.data.astype(np.float64)
    if sign is not None:
        _check_shapes(image=image, sign=sign)
        noise = sign.data * noise
    return Image(_quantize(image.data.astype(np.float64) + noise))


def gaussian_inject(image: Image, sigma: float, seed: int) -> Image:
    """Ablation: add i.i.d. Normal(0, sigma^2) noise to every sample."""
    if not np.isfinite(sigma) or sigma <= 0:
        raise ValueError(f"sigma must be positive and finite, got {sigma}")
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    rng = make_rng(seed)
    noise = rng.normal(0.0, sigma, size=image.shape)
    return Image(_quantize(image.data.astype(np.float64) + noise))
