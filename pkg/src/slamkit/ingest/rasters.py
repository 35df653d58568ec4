"""Raster reading for dataset conversion.

PGM/PPM (binary P5/P6) are decoded natively so fixture handling is exact and
dependency-free; 16-bit PGM samples are big-endian per the Netpbm spec. Any
other format (the real datasets ship PNG) is delegated to Pillow when it is
installed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class RasterError(Exception):
    pass


def _read_pnm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """First `count` whitespace-separated integer tokens after '#' comments."""
    tokens: list[int] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise RasterError("truncated PNM header")
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        try:
            tokens.append(int(data[start:pos]))
        except ValueError as exc:
            raise RasterError(f"bad PNM header token {data[start:pos]!r}") from exc
    return tokens, pos + 1  # skip the single whitespace after the last token


def read_raster(path: str | Path) -> np.ndarray:
    """Decode an image file to (h, w) uint8/uint16 or (h, w, 3) uint8."""
    path = Path(path)
    data = path.read_bytes()
    magic = data[:2]
    if magic in (b"P5", b"P6"):
        (width, height, maxval), offset = _read_pnm_tokens(data[2:], 3)
        offset += 2
        channels = 3 if magic == b"P6" else 1
        if maxval < 256:
            dtype, itemsize = np.uint8, 1
        elif maxval < 65536:
            dtype, itemsize = ">u2", 2
        else:
            raise RasterError(f"unsupported PNM maxval {maxval}")
        need = width * height * channels * itemsize
        raw = data[offset : offset + need]
        if len(raw) != need:
            raise RasterError(f"{path}: expected {need} pixel bytes, found {len(raw)}")
        img = np.frombuffer(raw, dtype=dtype)
        if channels == 3:
            return img.reshape(height, width, 3)
        if itemsize == 2:
            return img.astype(np.uint16).reshape(height, width)
        return img.reshape(height, width)
    try:
        from PIL import Image
    except ImportError as exc:
        raise RasterError(f"{path}: not a PNM file and Pillow is unavailable") from exc
    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.ndim == 3 and arr.shape[2] == 4:
        arr = arr[:, :, :3]
    if arr.dtype == np.int32:  # Pillow's I mode for 16-bit greyscale
        arr = arr.astype(np.uint16)
    return arr


def write_pgm16(path: str | Path, image: np.ndarray) -> None:
    img = np.asarray(image, dtype=np.uint16)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n65535\n".encode()
    Path(path).write_bytes(header + img.astype(">u2").tobytes())


def write_pgm8(path: str | Path, image: np.ndarray) -> None:
    img = np.asarray(image, dtype=np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode()
    Path(path).write_bytes(header + img.tobytes())


def write_ppm(path: str | Path, image: np.ndarray) -> None:
    img = np.asarray(image, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise RasterError(f"PPM needs (h, w, 3), got {img.shape}")
    header = f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode()
    Path(path).write_bytes(header + img.tobytes())
