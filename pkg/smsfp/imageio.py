"""
Raster and report file formats: PFM, 8/16-bit PNG, JSON and CSV.

Every writer goes through ``atomic_path`` so a reader never sees a partial
file: data lands in a temporary sibling that is renamed over the target.
"""

import csv
import json
import logging
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np
from PIL import Image

from .domain import PolarizedStack
from .exceptions import InvalidInputError

logger = logging.getLogger(__name__)

STACK_NAMES = ("i000", "i045", "i090", "i135")
MASK_NAME = "mask.png"


@contextmanager
def atomic_path(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


# --- PFM ---


def write_pfm(path, array):
    data = np.asarray(array, dtype=float)
    if data.ndim == 2:
        kind = "Pf"
    elif data.ndim == 3 and data.shape[2] == 3:
        kind = "PF"
    else:
        raise InvalidInputError(f"PFM holds (H, W) or (H, W, 3) rasters, got {data.shape}")
    height, width = data.shape[:2]
    header = f"{kind}\n{width} {height}\n-1.0\n".encode("ascii")
    # PFM stores the bottom row first.
    payload = np.ascontiguousarray(np.flipud(data), dtype="<f4").tobytes()
    with atomic_path(path) as tmp:
        with open(tmp, "wb") as handle:
            handle.write(header)
            handle.write(payload)


def read_pfm(path):
    with open(path, "rb") as handle:
        kind = handle.readline().strip()
        if kind not in (b"PF", b"Pf"):
            raise InvalidInputError(f"{path} is not a PFM file")
        try:
            width, height = (int(v) for v in handle.readline().split())
            scale = float(handle.readline().strip())
        except ValueError as exc:
            raise InvalidInputError(f"{path} has a malformed PFM header") from exc
        channels = 3 if kind == b"PF" else 1
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(handle.read(), dtype=dtype)
    expected = width * height * channels
    if data.size != expected:
        raise InvalidInputError(f"{path} holds {data.size} samples, expected {expected}")
    shape = (height, width, 3) if channels == 3 else (height, width)
    return np.flipud(data.reshape(shape)).astype(float)


# --- PNG ---


def read_png(path):
    """Read a grayscale PNG linearized to [0, 1] by its maximum code value."""
    with Image.open(path) as image:
        mode = image.mode
        data = np.array(image)
    if mode == "L":
        return data.astype(float) / 255.0
    if mode in ("I;16", "I;16B", "I;16L", "I"):
        return data.astype(float) / 65535.0
    raise InvalidInputError(f"{path}: expected an 8- or 16-bit grayscale PNG, got mode {mode}")


def write_png16(path, array):
    codes = np.round(np.clip(np.asarray(array, dtype=float), 0.0, 1.0) * 65535.0)
    _save_png(path, Image.fromarray(codes.astype(np.uint16)))


def write_rgb_png(path, rgb):
    codes = np.round(np.clip(np.asarray(rgb, dtype=float), 0.0, 1.0) * 255.0)
    _save_png(path, Image.fromarray(codes.astype(np.uint8)))


def write_mask_png(path, mask):
    _save_png(path, Image.fromarray(np.where(mask, 255, 0).astype(np.uint8)))


def read_mask_png(path):
    with Image.open(path) as image:
        return np.array(image) > 0


def write_labels_png(path, labels):
    labels = np.asarray(labels)
    if labels.max(initial=0) > 65535:
        raise InvalidInputError("more than 65535 regions do not fit a 16-bit label image")
    _save_png(path, Image.fromarray(labels.astype(np.uint16)))


def _save_png(path, image):
    with atomic_path(path) as tmp:
        image.save(tmp, format="PNG")


# --- JSON / CSV ---


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def dumps(data):
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n"


def write_json(path, data):
    with atomic_path(path) as tmp:
        Path(tmp).write_text(dumps(data), encoding="utf-8")


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path} is not valid JSON: {exc}") from exc


def write_csv(path, columns, rows):
    with atomic_path(path) as tmp:
        with open(tmp, "w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=list(columns), lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({key: row[key] for key in columns})


# --- Polarized stacks on disk ---


def save_stack(directory, stack, fmt="pfm"):
    """Write a stack as ``i000 .. i135`` images plus ``mask.png``.

    PNG stacks are normalized by the stack maximum; the scale is returned so
    callers can record it.
    """
    directory = Path(directory)
    scale = 1.0
    if fmt == "png16":
        scale = max(float(np.max(image)) for image in stack.images) or 1.0
    elif fmt != "pfm":
        raise InvalidInputError(f"unknown stack format {fmt!r}")
    for name, image in zip(STACK_NAMES, stack.images):
        if fmt == "pfm":
            write_pfm(directory / f"{name}.pfm", image)
        else:
            write_png16(directory / f"{name}.png", np.asarray(image) / scale)
    write_mask_png(directory / MASK_NAME, stack.mask)
    return scale


def load_stack(directory):
    directory = Path(directory)
    if not directory.is_dir():
        raise InvalidInputError(f"stack directory {directory} does not exist")
    images = []
    for name in STACK_NAMES:
        if (directory / f"{name}.pfm").exists():
            images.append(read_pfm(directory / f"{name}.pfm"))
        elif (directory / f"{name}.png").exists():
            images.append(read_png(directory / f"{name}.png"))
        else:
            raise InvalidInputError(f"{directory} has no {name}.pfm or {name}.png")
    mask_path = directory / MASK_NAME
    if mask_path.exists():
        mask = read_mask_png(mask_path)
    else:
        logger.info("No %s in %s; using the full frame", MASK_NAME, directory)
        mask = np.ones(images[0].shape, dtype=bool)
    return PolarizedStack(images=tuple(images), mask=mask)
