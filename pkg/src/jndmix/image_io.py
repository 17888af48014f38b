"""Image and JND map containers plus their on-disk formats.

Images are 8-bit and always written as PNG. JND maps are written in the
JNDM container, a little-endian header followed by a binary32 payload,
so thresholds survive a round trip bit for bit::

    b"JNDM" | version u16 = 1 | width u32 | height u32 | channels u16 | W*H*C f32

16-bit PNGs are accepted as an import format for maps produced by other
tools (threshold = sample / 256).
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import png
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

JNDM_MAGIC = b"JNDM"
JNDM_VERSION = 1
_JNDM_HEADER = struct.Struct("<4sHIIH")

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
PNG16_SCALE = 256.0


class FormatError(ValueError):
    """A file could not be decoded into an Image or JndMap."""


@dataclass(frozen=True, eq=False)
class Image:
    """8-bit image stored as a ``(height, width, channels)`` uint8 array."""

    data: np.ndarray

    def __post_init__(self):
        data = self.data
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise ValueError(f"image array must be HxWx1 or HxWx3, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("image must have positive dimensions")
        if data.dtype != np.uint8:
            raise ValueError(f"image samples must be uint8, got {data.dtype}")
        data = np.ascontiguousarray(data)
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def from_samples(cls, width: int, height: int, channels: int, samples) -> Image:
        """Build from a flat row-major, channel-interleaved sample sequence."""
        flat = np.asarray(samples)
        if flat.size != width * height * channels:
            raise ValueError(
                f"expected {width * height * channels} samples, got {flat.size}"
            )
        if flat.size and (flat.min() < 0 or flat.max() > 255):
            raise ValueError("samples must lie in [0, 255]")
        return cls(flat.astype(np.uint8).reshape(height, width, channels))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def samples(self) -> list[int]:
        return self.data.ravel().tolist()

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class JndMap:
    """Per-sample visibility thresholds, ``(height, width, channels)`` float32."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3 or data.shape[2] < 1:
            raise ValueError(f"JND map array must be HxWxC, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("JND map must have positive dimensions")
        data = np.ascontiguousarray(data, dtype=np.float32)
        if not np.all(np.isfinite(data)):
            raise ValueError("JND thresholds must be finite")
        if np.any(data < 0):
            raise ValueError("JND thresholds must be non-negative")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def constant(cls, width: int, height: int, channels: int, value: float) -> JndMap:
        return cls(np.full((height, width, channels), value, dtype=np.float32))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, JndMap):
            return NotImplemented
        # bitwise comparison so that -0.0 and 0.0 are distinguished
        return self.shape == other.shape and self.data.tobytes() == other.data.tobytes()


def atomic_write(path, write) -> None:
    """Call ``write(fileobj)`` on a temp file next to ``path``, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _png_bit_depth(path: Path) -> int | None:
    with open(path, "rb") as fh:
        head = fh.read(29)
    if len(head) < 29 or head[:8] != PNG_SIGNATURE or head[12:16] != b"IHDR":
        return None
    return head[24]


def load_image(path) -> Image:
    """Decode a PNG or JPEG into an 8-bit Image.

    Grayscale sources give one channel, everything else three; alpha is
    dropped.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"image not found: {path}")
    depth = _png_bit_depth(path)
    if depth is not None and depth > 8:
        raise FormatError(f"{path}: unsupported bit depth {depth} (max 8)")
    try:
        with PILImage.open(path) as im:
            if im.format not in ("PNG", "JPEG"):
                raise FormatError(f"{path}: unsupported format {im.format}")
            if im.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
                raise FormatError(f"{path}: unsupported bit depth (mode {im.mode})")
            if im.mode in ("1", "L", "LA"):
                arr = np.asarray(im.convert("L"))[:, :, None]
            elif im.mode == "P" and im.palette is not None and im.palette.mode == "L":
                arr = np.asarray(im.convert("L"))[:, :, None]
            else:
                arr = np.asarray(im.convert("RGB"))
    except UnidentifiedImageError as exc:
        raise FormatError(f"{path}: cannot decode image") from exc
    except OSError as exc:
        # truncated or corrupt payloads surface as OSError from the decoder
        raise FormatError(f"{path}: cannot decode image ({exc})") from exc
    return Image(arr.copy())


def save_image(image: Image, path) -> None:
    """Write ``image`` as a lossless PNG. No partial file is left on failure."""
    mode = "L" if image.channels == 1 else "RGB"
    pil = PILImage.fromarray(image.data[:, :, 0] if image.channels == 1 else image.data, mode)
    atomic_write(path, lambda fh: pil.save(fh, format="PNG"))


def encode_jndm(jnd: JndMap) -> bytes:
    header = _JNDM_HEADER.pack(JNDM_MAGIC, JNDM_VERSION, jnd.width, jnd.height, jnd.channels)
    return header + jnd.data.astype("<f4").tobytes()


def decode_jndm(blob: bytes, source="<bytes>") -> JndMap:
    if len(blob) < _JNDM_HEADER.size:
        raise FormatError(f"{source}: truncated JNDM header")
    magic, version, width, height, channels = _JNDM_HEADER.unpack_from(blob)
    if magic != JNDM_MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}")
    if version != JNDM_VERSION:
        raise FormatError(f"{source}: unsupported JNDM version {version}")
    if width == 0 or height == 0 or channels == 0:
        raise FormatError(f"{source}: zero dimension in header ({width}x{height}x{channels})")
    count = width * height * channels
    payload = blob[_JNDM_HEADER.size:]
    if len(payload) != 4 * count:
        raise FormatError(
            f"{source}: header declares {width}x{height}x{channels} = {count} thresholds "
            f"but payload holds {len(payload) / 4:g}"
        )
    data = np.frombuffer(payload, dtype="<f4").astype(np.float32)
    if not np.all(np.isfinite(data)):
        raise FormatError(f"{source}: non-finite threshold in payload")
    if np.any(data < 0):
        raise FormatError(f"{source}: negative threshold in payload")
    return JndMap(data.reshape(height, width, channels))


def _load_png16(path: Path) -> JndMap:
    try:
        width, height, rows, info = png.Reader(filename=str(path)).asDirect()
        arr = np.vstack([np.asarray(row, dtype=np.float64) for row in rows])
    except png.Error as exc:
        raise FormatError(f"{path}: cannot decode PNG ({exc})") from exc
    if info["bitdepth"] != 16:
        raise FormatError(f"{path}: JND PNGs must be 16-bit, got {info['bitdepth']}-bit")
    if info["alpha"]:
        raise FormatError(f"{path}: JND PNGs must not carry alpha")
    planes = info["planes"]
    return JndMap(arr.reshape(height, width, planes) / PNG16_SCALE)


def load_jnd_map(path) -> JndMap:
    """Read a JNDM file, or a 16-bit grayscale/RGB PNG scaled by 1/256."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"JND map not found: {path}")
    blob = path.read_bytes()
    if blob.startswith(PNG_SIGNATURE):
        return _load_png16(path)
    return decode_jndm(blob, source=path)


def save_jnd_map(jnd: JndMap, path) -> None:
    blob = encode_jndm(jnd)
    atomic_write(path, lambda fh: fh.write(blob))
