"""Grayscale image arrays, raster I/O and tile splitting.

Images are plain 2D ``float64`` numpy arrays indexed ``[row, col]`` with
intensities on the [0, 255] scale. Files are 8-bit only at the boundary:
binary PGM (P5) is read and written natively, PNG goes through Pillow, and
signed texture components are stored losslessly in the ``ATXF1`` float
sidecar format.
"""

from __future__ import annotations

import io
import os
from pathlib import Path

import numpy as np

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
FLOAT_MAGIC = b"ATXF1\n"
PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class ImageError(ValueError):
    """Base class for image validation and decoding failures."""


class UnsupportedFormat(ImageError):
    pass


class CorruptData(ImageError):
    pass


class TileTooLarge(ImageError):
    pass


def as_gray(data) -> np.ndarray:
    """Validate ``data`` as a gray image and return it as a float64 array."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ImageError(f"expected a non-empty 2D image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ImageError("image contains NaN or infinite intensities")
    return arr


def to_bytes(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half away from zero into uint8."""
    clamped = np.clip(as_gray(img), 0.0, 255.0)
    # floor(x + 0.5) would round the largest double below 0.5 up to 1
    base = np.floor(clamped)
    return (base + (clamped - base >= 0.5)).astype(np.uint8)


# -- PGM -------------------------------------------------------------------

_WHITESPACE = b" \t\n\v\f\r"


def _pgm_tokens(buf: bytes, count: int, path) -> tuple[list[int], int]:
    """Read ``count`` decimal header tokens after the magic number.

    Returns the tokens and the offset of the single whitespace byte that
    terminates the last one.
    """
    pos = 2
    tokens = []
    while len(tokens) < count:
        if pos >= len(buf):
            raise CorruptData(f"{path}: truncated PGM header")
        c = buf[pos : pos + 1]
        if c in _WHITESPACE:
            pos += 1
        elif c == b"#":
            end = buf.find(b"\n", pos)
            if end < 0:
                raise CorruptData(f"{path}: unterminated comment in PGM header")
            pos = end + 1
        else:
            start = pos
            while pos < len(buf) and buf[pos : pos + 1] not in _WHITESPACE:
                pos += 1
            word = buf[start:pos]
            if not word.isdigit():
                raise CorruptData(f"{path}: bad PGM header token {word!r}")
            tokens.append(int(word))
    if pos >= len(buf):
        raise CorruptData(f"{path}: PGM header not followed by raster")
    return tokens, pos


def _decode_pgm(buf: bytes, path) -> np.ndarray:
    (width, height, maxval), pos = _pgm_tokens(buf, 3, path)
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise CorruptData(f"{path}: invalid PGM dimensions or maxval")
    raster = buf[pos + 1 :]
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    nbytes = width * height * dtype.itemsize
    if len(raster) < nbytes:
        raise CorruptData(f"{path}: PGM raster truncated ({len(raster)} < {nbytes} bytes)")
    pix = np.frombuffer(raster[:nbytes], dtype=dtype).reshape(height, width)
    img = pix.astype(np.float64)
    if maxval != 255:
        img *= 255.0 / maxval
    return img


def _encode_pgm(pix: np.ndarray) -> bytes:
    h, w = pix.shape
    return b"P5\n%d %d\n255\n" % (w, h) + pix.tobytes()


# -- PNG (Pillow) ------------------------------------------------------------


def _luminance(rgb: np.ndarray) -> np.ndarray:
    r, g, b = (rgb[..., i].astype(np.float64) for i in range(3))
    return LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b


def _decode_png(buf: bytes, path) -> np.ndarray:
    from PIL import Image

    try:
        with Image.open(io.BytesIO(buf)) as im:
            im.load()
            mode = im.mode
            if mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
                mode = im.mode
            arr = np.asarray(im)
    except Exception as exc:  # Pillow raises a zoo of exception types
        raise CorruptData(f"{path}: cannot decode PNG ({exc})") from exc

    if mode in ("L", "LA"):
        gray = (arr[..., 0] if arr.ndim == 3 else arr).astype(np.float64)
    elif mode in ("RGB", "RGBA"):
        gray = _luminance(arr)
    elif mode == "1":
        gray = arr.astype(np.float64) * 255.0
    elif mode.startswith("I"):
        gray = arr.astype(np.float64) * (255.0 / 65535.0)
    else:
        raise UnsupportedFormat(f"{path}: unsupported PNG mode {mode}")
    return gray


def load_image(path) -> np.ndarray:
    """Load a PGM (P5) or PNG file as a float64 gray image in [0, 255].

    RGB inputs are reduced with the 0.299/0.587/0.114 luminance weights.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path}: no such file")
    buf = path.read_bytes()
    if buf[:2] == b"P5":
        img = _decode_pgm(buf, path)
    elif buf[:8] == PNG_SIGNATURE:
        img = _decode_png(buf, path)
    else:
        raise UnsupportedFormat(f"{path}: not a binary PGM or PNG file")
    return as_gray(img)


def _atomic_write(path: Path, payload: bytes) -> None:
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    try:
        tmp.write_bytes(payload)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def save_image(img, path) -> None:
    """Write an 8-bit PGM, or PNG when the suffix is ``.png``."""
    path = Path(path)
    pix = to_bytes(img)
    if path.suffix.lower() == ".png":
        from PIL import Image

        out = io.BytesIO()
        Image.fromarray(pix).save(out, format="PNG")
        payload = out.getvalue()
    else:
        payload = _encode_pgm(pix)
    _atomic_write(path, payload)


# -- float sidecar ---------------------------------------------------------


def save_float(img, path) -> None:
    """Persist a signed image losslessly in the ATXF1 sidecar format.

    Layout: ``ATXF1\\n``, then ``<width> <height>\\n`` in ASCII decimal,
    then width*height little-endian float64 values in row-major order.
    """
    arr = as_gray(img)
    h, w = arr.shape
    header = FLOAT_MAGIC + b"%d %d\n" % (w, h)
    _atomic_write(Path(path), header + arr.astype("<f8").tobytes())


def load_float(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path}: no such file")
    buf = path.read_bytes()
    if not buf.startswith(FLOAT_MAGIC):
        raise UnsupportedFormat(f"{path}: missing ATXF1 magic")
    end = buf.find(b"\n", len(FLOAT_MAGIC))
    try:
        w, h = (int(x) for x in buf[len(FLOAT_MAGIC) : end].split())
    except ValueError as exc:
        raise CorruptData(f"{path}: bad ATXF1 size line") from exc
    body = buf[end + 1 :]
    if w < 1 or h < 1 or len(body) != 8 * w * h:
        raise CorruptData(f"{path}: ATXF1 payload size does not match {w}x{h}")
    return as_gray(np.frombuffer(body, dtype="<f8").reshape(h, w).copy())


# -- tiles -----------------------------------------------------------------


def split_tiles(img, tile_w: int, tile_h: int) -> list[np.ndarray]:
    """Cut non-overlapping tiles in row-major grid order.

    Remainder rows/columns that do not fill a whole tile are dropped.
    """
    arr = as_gray(img)
    h, w = arr.shape
    if tile_w < 1 or tile_h < 1:
        raise TileTooLarge(f"tile size must be positive, got {tile_w}x{tile_h}")
    if tile_w > w or tile_h > h:
        raise TileTooLarge(f"tile {tile_w}x{tile_h} exceeds image {w}x{h}")
    return [
        arr[r * tile_h : (r + 1) * tile_h, c * tile_w : (c + 1) * tile_w].copy()
        for r in range(h // tile_h)
        for c in range(w // tile_w)
    ]
