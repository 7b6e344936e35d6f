"""File formats: PGM images, CSV matrices, raw float64 arrays with sidecars."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def read_pgm(path) -> np.ndarray:
    """Read a P2 (ASCII) or P5 (binary) PGM image into floats in [0, 1]."""
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    # header: magic, width, height, maxval; '#' starts a comment line
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    magic = tokens[0].decode()
    width, height, maxval = (int(t) for t in tokens[1:4])
    if magic not in ("P2", "P5"):
        raise ValueError(f"not a PGM file (magic {magic!r})")
    if maxval <= 0 or maxval > 255:
        raise ValueError(f"unsupported PGM maxval {maxval}")
    if magic == "P5":
        pos += 1  # single whitespace byte after maxval
        raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    else:
        raster = np.array(data[pos:].split()[: width * height], dtype=np.uint8)
    if raster.size != width * height:
        raise ValueError("PGM raster truncated")
    return raster.reshape(height, width).astype(float) / maxval


def write_pgm(path, image: np.ndarray, binary: bool = True):
    """Write an image with values in [0, 1] as maxval-255 PGM (clipping)."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError("image must be 2-D")
    raster = np.rint(np.clip(image, 0.0, 1.0) * 255).astype(np.uint8)
    rows, cols = image.shape
    if binary:
        header = f"P5\n{cols} {rows}\n255\n".encode()
        Path(path).write_bytes(header + raster.tobytes())
    else:
        lines = [" ".join(str(v) for v in row) for row in raster]
        Path(path).write_text(f"P2\n{cols} {rows}\n255\n" + "\n".join(lines) + "\n")


def write_csv(path, array: np.ndarray):
    """Write a matrix (row per line) or vector (one value per line) as CSV."""
    array = np.asarray(array, dtype=float)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    np.savetxt(path, array, delimiter=",", fmt="%.17g")


def read_csv(path) -> np.ndarray:
    out = np.loadtxt(path, delimiter=",", ndmin=2)
    if out.shape[1] == 1:
        return out.ravel()
    return out


def write_raw(path, array: np.ndarray):
    """Write little-endian float64 bytes plus a JSON sidecar {rows, cols}."""
    array = np.asarray(array, dtype=float)
    if array.ndim == 1:
        rows, cols = array.shape[0], 1
    elif array.ndim == 2:
        rows, cols = array.shape
    else:
        raise ValueError("only 1-D and 2-D arrays supported")
    path = Path(path)
    array.astype("<f8").tofile(path)
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(json.dumps({"rows": rows, "cols": cols}) + "\n")


def read_raw(path) -> np.ndarray:
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    rows, cols = sidecar["rows"], sidecar["cols"]
    data = np.fromfile(path, dtype="<f8")
    if data.size != rows * cols:
        raise ValueError(f"raw file holds {data.size} values, expected {rows * cols}")
    if cols == 1:
        return data
    return data.reshape(rows, cols)
