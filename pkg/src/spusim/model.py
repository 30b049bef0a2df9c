"""First-order MRF grid models, binary PGM image I/O, and instance builders.

Random variables live on a ``width x height`` lattice with 4-connected
neighborhoods and are indexed row-major: ``v = y * width + x``.  The energy
of assigning label ``l`` to variable ``v`` is

    E(v, l) = alpha * singleton[v, l] + beta * sum_{u in N(v)} pairwise[l, x_u]

where ``x_u`` are the current labels of the neighbors.  Smoothness terms use
the Potts table by default (0 for equal labels, 1 otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import json
import numpy as np

__all__ = [
    "GridModel",
    "LabelField",
    "PgmFormatError",
    "potts_pairwise",
    "total_energy",
    "label_energies",
    "load_pgm",
    "save_pgm",
    "build_stereo_model",
    "build_synthetic_model",
]

# Singleton energies are clamped to the 8-bit range by the builders so that
# the hardware front end never sees values it cannot represent.
MAX_ENERGY = 255

_WHITESPACE = frozenset(b" \t\r\n\x0b\x0c")


class PgmFormatError(ValueError):
    """Malformed PGM data.  ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def potts_pairwise(label_count: int) -> np.ndarray:
    """Potts smoothness table: 0 on the diagonal, 1 everywhere else."""
    if label_count < 2:
        raise ValueError("label_count must be >= 2")
    return 1.0 - np.eye(label_count)


def _grid_neighbors(width: int, height: int) -> np.ndarray:
    """(n_vars, 4) neighbor indices in order north, south, west, east.

    Missing neighbors (lattice border) are encoded as -1.
    """
    n = width * height
    idx = np.arange(n).reshape(height, width)
    north = np.full((height, width), -1, dtype=np.int64)
    south = np.full((height, width), -1, dtype=np.int64)
    west = np.full((height, width), -1, dtype=np.int64)
    east = np.full((height, width), -1, dtype=np.int64)
    north[1:, :] = idx[:-1, :]
    south[:-1, :] = idx[1:, :]
    west[:, 1:] = idx[:, :-1]
    east[:, :-1] = idx[:, 1:]
    out = np.ascontiguousarray(
        np.stack([north, south, west, east], axis=-1).reshape(n, 4)
    )
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class LabelField:
    """A complete label assignment for a lattice, stored flat (row-major)."""

    labels: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.labels, dtype=np.int16)
        if arr.ndim != 1 or arr.shape[0] != self.width * self.height:
            raise ValueError(
                f"labels must be a flat array of length {self.width * self.height}"
            )
        if arr.size and arr.min() < 0:
            raise ValueError("labels must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    @property
    def n_vars(self) -> int:
        return self.width * self.height

    def grid(self) -> np.ndarray:
        """The assignment reshaped to (height, width)."""
        return self.labels.reshape(self.height, self.width)


@dataclass(frozen=True, eq=False)
class GridModel:
    """An MRF over a 4-connected lattice with per-variable singleton energies.

    ``singleton`` has shape (n_vars, label_count); ``pairwise`` is a symmetric
    (label_count, label_count) table shared by every edge.  Arrays are frozen
    at construction so a model can be shared between threads.
    """

    width: int
    height: int
    label_count: int
    alpha: float
    beta: float
    singleton: np.ndarray
    pairwise: np.ndarray
    name: str = "model"

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        if self.label_count < 2:
            raise ValueError("label_count must be >= 2")
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ValueError("alpha and beta must be finite")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        single = np.ascontiguousarray(self.singleton, dtype=np.float64)
        if single.shape != (self.n_vars, self.label_count):
            raise ValueError(
                f"singleton must have shape {(self.n_vars, self.label_count)}, "
                f"got {single.shape}"
            )
        if not np.isfinite(single).all():
            raise ValueError("singleton energies must be finite")
        if single.size and single.min() < 0:
            raise ValueError("singleton energies must be nonnegative")
        pair = np.ascontiguousarray(self.pairwise, dtype=np.float64)
        if pair.shape != (self.label_count, self.label_count):
            raise ValueError("pairwise table shape does not match label_count")
        if not np.array_equal(pair, pair.T):
            raise ValueError("pairwise table must be symmetric")
        if not np.isfinite(pair).all():
            raise ValueError("pairwise energies must be finite")
        single.setflags(write=False)
        pair.setflags(write=False)
        object.__setattr__(self, "singleton", single)
        object.__setattr__(self, "pairwise", pair)
        object.__setattr__(self, "_neighbors", _grid_neighbors(self.width, self.height))

    @property
    def n_vars(self) -> int:
        return self.width * self.height

    @property
    def neighbors(self) -> np.ndarray:
        """(n_vars, 4) neighbor index table, -1 where a neighbor is missing."""
        return self._neighbors

    def to_json(self) -> str:
        """Canonical JSON form; identical inputs give identical bytes."""
        payload = {
            "width": self.width,
            "height": self.height,
            "label_count": self.label_count,
            "alpha": self.alpha,
            "beta": self.beta,
            "singleton": [_num(x) for x in self.singleton.ravel()],
            "pairwise": [_num(x) for x in self.pairwise.ravel()],
            "name": self.name,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "GridModel":
        d = json.loads(text)
        n = d["width"] * d["height"]
        return cls(
            width=d["width"],
            height=d["height"],
            label_count=d["label_count"],
            alpha=d["alpha"],
            beta=d["beta"],
            singleton=np.asarray(d["singleton"], dtype=np.float64).reshape(
                n, d["label_count"]
            ),
            pairwise=np.asarray(d["pairwise"], dtype=np.float64).reshape(
                d["label_count"], d["label_count"]
            ),
            name=d.get("name", "model"),
        )


def _num(x: float):
    """Render integral floats as ints for compact, stable JSON."""
    f = float(x)
    return int(f) if f.is_integer() else f


def _check_field(model: GridModel, field: LabelField) -> None:
    if field.width != model.width or field.height != model.height:
        raise ValueError("label field dimensions do not match the model")
    if field.labels.size and int(field.labels.max()) >= model.label_count:
        raise ValueError("label field contains labels outside the model range")


def label_energies(model: GridModel, labels: np.ndarray, var: int) -> np.ndarray:
    """Energies of every candidate label at ``var`` given neighbor labels."""
    if not 0 <= var < model.n_vars:
        raise ValueError(f"variable index {var} out of range")
    out = model.alpha * model.singleton[var].copy()
    for nb in model.neighbors[var]:
        if nb >= 0:
            out += model.beta * model.pairwise[:, labels[nb]]
    return out


def total_energy(model: GridModel, state: LabelField, var: int, label: int) -> float:
    """Energy of assigning ``label`` to ``var`` under the current ``state``."""
    _check_field(model, state)
    if not 0 <= label < model.label_count:
        raise ValueError(f"label {label} out of range")
    return float(label_energies(model, state.labels, var)[label])


# ---------------------------------------------------------------------------
# PGM image I/O (binary "P5" flavor only)
# ---------------------------------------------------------------------------

def load_pgm(path) -> np.ndarray:
    """Read a binary PGM file into a (height, width) uint8 array.

    Only the P5 format with maxval <= 255 is accepted.  Header comments
    (``#`` to end of line) are allowed.  Malformed input raises
    :class:`PgmFormatError` carrying the byte offset of the problem.
    """
    data = Path(path).read_bytes()
    pos = 0

    def next_token():
        nonlocal pos
        while pos < len(data):
            c = data[pos]
            if c in _WHITESPACE:
                pos += 1
            elif c == 0x23:  # '#' comment runs to end of line
                while pos < len(data) and data[pos] not in (0x0A, 0x0D):
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and data[pos] not in _WHITESPACE:
            pos += 1
        if start == pos:
            raise PgmFormatError("unexpected end of header", start)
        return data[start:pos], start

    def int_token(what, minimum):
        tok, off = next_token()
        if not tok.isdigit():
            raise PgmFormatError(f"{what} is not a decimal integer: {tok!r}", off)
        value = int(tok)
        if value < minimum:
            raise PgmFormatError(f"{what} must be >= {minimum}, got {value}", off)
        return value, off

    magic, off = next_token()
    if magic != b"P5":
        detail = "ASCII PGM (P2) is not supported" if magic == b"P2" else f"bad magic {magic!r}"
        raise PgmFormatError(f"{detail}, expected binary PGM (P5)", off)
    width, _ = int_token("width", 1)
    height, _ = int_token("height", 1)
    maxval, off = int_token("maxval", 1)
    if maxval > 255:
        raise PgmFormatError(f"maxval {maxval} exceeds 255 (16-bit PGM unsupported)", off)
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise PgmFormatError("missing whitespace after maxval", pos)
    pos += 1
    need = width * height
    raster = data[pos : pos + need]
    if len(raster) < need:
        raise PgmFormatError(
            f"truncated raster: expected {need} bytes, got {len(raster)}",
            pos + len(raster),
        )
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def save_pgm(path, pixels: np.ndarray) -> None:
    """Write a (height, width) uint8 array as a binary PGM file."""
    arr = np.asarray(pixels)
    if arr.ndim != 2:
        raise ValueError("PGM output requires a 2-D array")
    if arr.dtype != np.uint8:
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("pixel values must fit in [0, 255]")
        arr = arr.astype(np.uint8)
    height, width = arr.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (width, height))
        fh.write(arr.tobytes())


# ---------------------------------------------------------------------------
# Instance builders
# ---------------------------------------------------------------------------

def build_stereo_model(
    left: np.ndarray,
    right: np.ndarray,
    label_count: int,
    alpha: float = 1.0,
    beta: float = 2.0,
    name: str = "stereo",
) -> GridModel:
    """Disparity-estimation MRF from a rectified grayscale image pair.

    The singleton cost of disparity ``d`` at pixel (y, x) is the absolute
    intensity difference ``|left[y, x] - right[y, max(x - d, 0)]|``; the
    left border clamps rather than wrapping.  Costs already fit in [0, 255].
    """
    left = np.asarray(left)
    right = np.asarray(right)
    if left.ndim != 2 or left.shape != right.shape:
        raise ValueError("left and right must be 2-D arrays of the same shape")
    height, width = left.shape
    if label_count < 2:
        raise ValueError("label_count must be >= 2")
    if label_count > width:
        raise ValueError("label_count (disparity range) cannot exceed image width")
    li = left.astype(np.int64)
    ri = right.astype(np.int64)
    singleton = np.empty((height * width, label_count), dtype=np.float64)
    cols = np.arange(width)
    for d in range(label_count):
        shifted = ri[:, np.maximum(cols - d, 0)]
        singleton[:, d] = np.abs(li - shifted).reshape(-1)
    np.clip(singleton, 0, MAX_ENERGY, out=singleton)
    return GridModel(
        width=width,
        height=height,
        label_count=label_count,
        alpha=alpha,
        beta=beta,
        singleton=singleton,
        pairwise=potts_pairwise(label_count),
        name=name,
    )


def _box_smooth(a: np.ndarray, radius: int) -> np.ndarray:
    """Mean filter with edge padding; small kernels only."""
    padded = np.pad(a.astype(np.float64), radius, mode="edge")
    h, w = a.shape
    out = np.zeros((h, w), dtype=np.float64)
    k = 2 * radius + 1
    for dy in range(k):
        for dx in range(k):
            out += padded[dy : dy + h, dx : dx + w]
    return out / (k * k)


def build_synthetic_model(
    kind: str,
    size,
    seed: int,
    alpha: float = 1.0,
    beta: float = 1.0,
    noise_rate: float = 0.1,
    label_count: int = 4,
    shift: int = 2,
):
    """Build a reproducible test instance with known ground truth.

    Returns ``(model, truth)`` where ``truth`` is a :class:`LabelField`.

    Kinds:

    ``two-label-denoise``
        A blobby binary image is corrupted by flipping each pixel with
        probability ``noise_rate``; the singleton cost is 0 for agreeing
        with the observation and 1 otherwise.  Ground truth is the clean
        image (equal to the observation when ``noise_rate`` is 0).

    ``shifted-stereo``
        A smooth random texture forms the right image; the left image is
        the same texture shifted ``shift`` columns, so the true disparity
        is ``shift`` everywhere away from the clamped left border.
    """
    if isinstance(size, int):
        height = width = size
    else:
        height, width = size
    if height < 8 or width < 8:
        raise ValueError("synthetic instances must be at least 8x8")
    rng = np.random.default_rng(seed)
    if kind == "two-label-denoise":
        if not 0.0 <= noise_rate <= 1.0:
            raise ValueError("noise_rate must be in [0, 1]")
        field = _box_smooth(rng.random((height, width)), 2)
        truth = (field > np.median(field)).astype(np.int16)
        flips = rng.random((height, width)) < noise_rate
        observed = truth ^ flips
        n = height * width
        singleton = np.ones((n, 2), dtype=np.float64)
        singleton[np.arange(n), observed.reshape(-1)] = 0.0
        model = GridModel(
            width=width,
            height=height,
            label_count=2,
            alpha=alpha,
            beta=beta,
            singleton=singleton,
            pairwise=potts_pairwise(2),
            name=f"two-label-denoise-{height}x{width}-seed{seed}",
        )
        return model, LabelField(truth.reshape(-1), width, height)
    if kind == "shifted-stereo":
        if label_count < 2:
            raise ValueError("label_count must be >= 2")
        if not 0 <= shift < label_count:
            raise ValueError("shift must lie inside the disparity range")
        texture = _box_smooth(rng.integers(0, 192, (height, width)), 1)
        right = np.round(texture).astype(np.uint8)
        cols = np.maximum(np.arange(width) - shift, 0)
        left = right[:, cols]
        model = build_stereo_model(
            left,
            right,
            label_count,
            alpha=alpha,
            beta=beta,
            name=f"shifted-stereo-{height}x{width}-seed{seed}",
        )
        truth = np.full(height * width, shift, dtype=np.int16)
        return model, LabelField(truth, width, height)
    raise ValueError(f"unknown synthetic kind {kind!r}")
