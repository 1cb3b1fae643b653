"""Bit-exact raster I/O: 16-bit label PNGs, 8-bit PNGs and PFM float maps.

Every writer goes through :func:`atomic_write` (temp file + rename) so an
interrupted run never leaves a truncated file behind.
"""

import io
import os
import tempfile

import numpy as np
from PIL import Image

MAX_LABEL = 65535


class FormatError(ValueError):
    """A file exists but is not in the expected raster format."""


def atomic_write(path, data):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _png_bytes(arr):
    buf = io.BytesIO()
    # level 1 trades a little size for much faster batch writes; still lossless
    Image.fromarray(arr).save(buf, format="PNG", compress_level=1)
    return buf.getvalue()


def write_label_png(path, labels):
    lab = np.asarray(labels)
    if lab.ndim != 2:
        raise ValueError("label map must be 2-D")
    if lab.size and (lab.min() < 0 or lab.max() > MAX_LABEL):
        raise ValueError(f"labels must lie in [0, {MAX_LABEL}] for 16-bit PNG")
    atomic_write(path, _png_bytes(lab.astype(np.uint16)))


def _open_png(path):
    try:
        img = Image.open(path)
        img.load()
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise FormatError(f"{path}: not a readable image ({exc})") from exc
    if img.format != "PNG":
        raise FormatError(f"{path}: expected PNG, got {img.format}")
    return img


def read_label_png(path):
    """Read a 16-bit (or 8-bit) grayscale PNG label map as int64."""
    img = _open_png(path)
    if img.mode not in ("I;16", "I;16B", "I", "L"):
        raise FormatError(f"{path}: expected grayscale label PNG, got mode {img.mode}")
    return np.array(img).astype(np.int64)


def write_u8_png(path, arr):
    a = np.asarray(arr)
    if a.dtype != np.uint8:
        raise ValueError("expected uint8 data")
    atomic_write(path, _png_bytes(a))


def read_mask_png(path):
    """Binary mask from any grayscale PNG: nonzero is foreground."""
    img = _open_png(path)
    if img.mode not in ("1", "L", "I;16", "I;16B", "I", "LA"):
        raise FormatError(f"{path}: expected grayscale mask PNG, got mode {img.mode}")
    arr = np.array(img)
    if arr.ndim == 3:
        arr = arr[..., 0]
    return arr != 0


def read_image(path):
    """Read a PNG (gray or RGB, 8/16-bit) or PFM as float in [0, 1].

    Returns ``(H, W)`` for grayscale input and ``(H, W, 3)`` for color.
    """
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head in (b"Pf", b"PF"):
        return read_pfm(path)
    img = _open_png(path)
    if img.mode in ("I;16", "I;16B", "I"):
        return np.array(img).astype(np.float64) / 65535.0
    if img.mode in ("1", "L"):
        return np.array(img.convert("L")).astype(np.float64) / 255.0
    if img.mode in ("RGB", "RGBA", "P", "LA"):
        return np.array(img.convert("RGB")).astype(np.float64) / 255.0
    raise FormatError(f"{path}: unsupported PNG mode {img.mode}")


def write_pfm(path, data):
    """Write a float map as PFM ("Pf" grayscale or "PF" color), little-endian.

    Values are stored as float32, rows bottom-to-top as the format requires.
    """
    arr = np.asarray(data, dtype="<f4")
    if arr.ndim == 2:
        magic = b"Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"PF"
    else:
        raise ValueError(f"PFM holds (H, W) or (H, W, 3) data, got {arr.shape}")
    h, w = arr.shape[:2]
    header = magic + b"\n%d %d\n-1.0\n" % (w, h)
    atomic_write(path, header + np.ascontiguousarray(arr[::-1]).tobytes())


def read_pfm(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        magic, dims, scale, body = raw.split(b"\n", 3)
        w, h = (int(v) for v in dims.split())
        scale = float(scale)
    except ValueError as exc:
        raise FormatError(f"{path}: malformed PFM header") from exc
    if magic == b"Pf":
        shape = (h, w)
    elif magic == b"PF":
        shape = (h, w, 3)
    else:
        raise FormatError(f"{path}: bad PFM magic {magic!r}")
    dtype = "<f4" if scale < 0 else ">f4"
    count = int(np.prod(shape))
    if len(body) != 4 * count:
        raise FormatError(f"{path}: expected {4 * count} data bytes, found {len(body)}")
    arr = np.frombuffer(body, dtype=dtype, count=count).reshape(shape)
    return arr[::-1].astype(np.float32)
