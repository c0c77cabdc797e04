"""Small binary file formats used by fixtures and caches.

Raw RGB images: u32-LE width, u32-LE height, then packed row-major RGB
bytes. Tensor files: u32-LE rank, u32-LE dims, then float32-LE values in
row-major order.
"""

import struct
from pathlib import Path

import numpy as np

from .errors import DatasetError, InvalidImageError


def write_rgb_raw(path, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise InvalidImageError(f"expected uint8 (H, W, 3) image, got {img.shape} {img.dtype}")
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", w, h))
        fh.write(img.tobytes())


def read_rgb_raw(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise InvalidImageError(f"{path}: missing width/height header")
    w, h = struct.unpack("<II", data[:8])
    if w < 1 or h < 1:
        raise InvalidImageError(f"{path}: zero image dimension {w}x{h}")
    expected = 8 + w * h * 3
    if len(data) != expected:
        raise InvalidImageError(
            f"{path}: expected {expected} bytes for {w}x{h} RGB, got {len(data)}")
    return np.frombuffer(data[8:], dtype=np.uint8).reshape(h, w, 3).copy()


def save_tensor(path, array: np.ndarray) -> None:
    array = np.ascontiguousarray(array, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", array.ndim))
        fh.write(struct.pack(f"<{array.ndim}I", *array.shape))
        fh.write(array.tobytes())


def load_tensor(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 4:
        raise DatasetError(f"{path}: missing tensor rank header")
    ndim = struct.unpack("<I", data[:4])[0]
    header = 4 + 4 * ndim
    if len(data) < header:
        raise DatasetError(f"{path}: truncated tensor dims header")
    shape = struct.unpack(f"<{ndim}I", data[4:header])
    count = int(np.prod(shape)) if ndim else 0
    if len(data) != header + 4 * count:
        raise DatasetError(f"{path}: tensor payload does not match dims {shape}")
    return np.frombuffer(data[header:], dtype="<f4").reshape(shape).copy()
