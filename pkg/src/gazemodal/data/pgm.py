"""Portable graymap reader and writer (P2 ASCII and P5 binary, maxval 255)."""

from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from gazemodal.errors import DatasetLoadError

PGM_MAXVAL = 255


def _header_tokens(data: bytes, count: int) -> Tuple[List[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    tokens: List[bytes] = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise ValueError("truncated header")
        byte = data[pos : pos + 1]
        if byte.isspace():
            pos += 1
        elif byte == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
                pos += 1
            tokens.append(data[start:pos])
    return tokens, pos


def read_pgm(path: Union[str, Path]) -> np.ndarray:
    """Read a P2 or P5 graymap into a ``uint8`` array of shape ``(height, width)``."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise DatasetLoadError("missing PGM file", path=path) from None

    try:
        (magic, width, height, maxval), pos = _header_tokens(data, 4)
        width, height, maxval = int(width), int(height), int(maxval)
        if width < 1 or height < 1:
            raise ValueError(f"bad dimensions {width}x{height}")
        if maxval != PGM_MAXVAL:
            raise ValueError(f"maxval {maxval} is not {PGM_MAXVAL}")

        if magic == b"P5":
            payload = data[pos + 1 : pos + 1 + width * height]
            if len(payload) != width * height:
                raise ValueError("truncated binary payload")
            values = np.frombuffer(payload, dtype=np.uint8)
        elif magic == b"P2":
            body = b"\n".join(line.split(b"#", 1)[0] for line in data[pos:].splitlines())
            values = np.array([int(tok) for tok in body.split()], dtype=np.int64)
            if values.size != width * height:
                raise ValueError(f"expected {width * height} samples, found {values.size}")
            if values.size and (values.min() < 0 or values.max() > maxval):
                raise ValueError("sample outside [0, maxval]")
            values = values.astype(np.uint8)
        else:
            raise ValueError(f"unsupported magic {magic!r}")
    except ValueError as exc:
        raise DatasetLoadError(f"malformed PGM: {exc}", path=path) from exc

    return values.reshape(height, width).copy()


def write_pgm(path: Union[str, Path], grid: np.ndarray) -> None:
    """Write a 2D grid of integers in [0, 255] as binary P5."""
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ValueError(f"PGM grid must be 2D, got shape {grid.shape}")
    if grid.size and (grid.min() < 0 or grid.max() > PGM_MAXVAL):
        raise ValueError("PGM samples must lie in [0, 255]")
    height, width = grid.shape
    header = f"P5\n{width} {height}\n{PGM_MAXVAL}\n".encode("ascii")
    Path(path).write_bytes(header + grid.astype(np.uint8).tobytes())
