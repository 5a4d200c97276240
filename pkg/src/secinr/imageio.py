"""PNG (8/16-bit) and binary/ASCII netpbm (PGM/PPM) reading and writing.

Images are returned as float64 ``(C, H, W)`` arrays in [0, 1]; alpha
channels are dropped.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import png

from .spectral import as_image


class ImageReadError(ValueError):
    pass


def _read_png(path: Path) -> np.ndarray:
    try:
        width, height, rows, info = png.Reader(filename=str(path)).asDirect()
        data = np.vstack([np.asarray(r, dtype=np.float64) for r in rows])
    except (png.Error, OSError, ValueError) as exc:
        raise ImageReadError(f"cannot decode PNG {path}: {exc}") from exc
    planes = info["planes"]
    maxval = float(2 ** info["bitdepth"] - 1)
    img = data.reshape(height, width, planes).transpose(2, 0, 1) / maxval
    if info.get("alpha"):
        img = img[:-1]
    return img


def _netpbm_tokens(buf: bytes, count: int, pos: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos:pos + 1] == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ImageReadError("truncated netpbm header")
        tokens.append(buf[start:pos])
    return tokens, pos


def _read_netpbm(path: Path) -> np.ndarray:
    buf = path.read_bytes()
    magic = buf[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise ImageReadError(f"{path} is not a PGM/PPM file")
    channels = 3 if magic in (b"P3", b"P6") else 1
    try:
        (w, h, maxval), pos = _netpbm_tokens(buf, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise ImageReadError(f"bad netpbm header in {path}") from exc
    if not (0 < maxval < 65536) or w < 1 or h < 1:
        raise ImageReadError(f"bad netpbm header in {path}")
    count = w * h * channels
    if magic in (b"P5", b"P6"):
        dtype = np.dtype(">u2" if maxval > 255 else "u1")
        body = buf[pos + 1:]
        if len(body) < count * dtype.itemsize:
            raise ImageReadError(f"truncated pixel data in {path}")
        data = np.frombuffer(body, dtype=dtype, count=count).astype(np.float64)
    else:
        try:
            data = np.array(buf[pos:].split()[:count], dtype=np.float64)
        except ValueError as exc:
            raise ImageReadError(f"bad ASCII pixel data in {path}") from exc
        if data.size < count:
            raise ImageReadError(f"truncated pixel data in {path}")
    return data.reshape(h, w, channels).transpose(2, 0, 1) / maxval


def load_image(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise ImageReadError(f"no such file: {path}")
    with path.open("rb") as fh:
        head = fh.read(8)
    if head.startswith(b"\x89PNG"):
        img = _read_png(path)
    elif head[:1] == b"P":
        img = _read_netpbm(path)
    else:
        raise ImageReadError(f"{path}: unsupported image format (PNG, PGM and PPM are accepted)")
    try:
        return as_image(img)
    except ValueError as exc:
        raise ImageReadError(f"{path}: {exc}") from exc


def save_png(image, path, bitdepth: int = 16) -> None:
    """Write a 1- or 3-channel image in [0, 1] as PNG."""
    img = as_image(image)
    c, h, w = img.shape
    if c not in (1, 3):
        raise ValueError("PNG export supports 1 or 3 channels")
    maxval = 2 ** bitdepth - 1
    q = np.round(img * maxval).astype(np.uint16 if bitdepth > 8 else np.uint8)
    rows = q.transpose(1, 2, 0).reshape(h, w * c)
    writer = png.Writer(w, h, greyscale=(c == 1), bitdepth=bitdepth)
    with open(path, "wb") as fh:
        writer.write(fh, rows.tolist())
