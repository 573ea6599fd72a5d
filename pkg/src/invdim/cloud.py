"""Ambient spaces, point clouds, and their on-disk formats."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

MAGIC = b"IDIM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sBIQ")


class AmbientKind(str, Enum):
    EUCLIDEAN = "Euclidean"
    FLAT_TORUS = "FlatTorus"


@dataclass(frozen=True)
class AmbientSpace:
    """Euclidean R^n or the flat torus [0, 1)^n with the wraparound metric."""

    kind: AmbientKind
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidInputError("ambient dimension must be positive")

    @classmethod
    def euclidean(cls, dim: int) -> "AmbientSpace":
        return cls(AmbientKind.EUCLIDEAN, dim)

    @classmethod
    def torus(cls, dim: int) -> "AmbientSpace":
        return cls(AmbientKind.FLAT_TORUS, dim)

    @property
    def is_torus(self) -> bool:
        return self.kind is AmbientKind.FLAT_TORUS

    def wrap(self, x: np.ndarray) -> np.ndarray:
        """Reduce torus coordinates into [0, 1); identity on R^n."""
        if not self.is_torus:
            return x
        y = np.mod(x, 1.0)
        # mod of a tiny negative number rounds to exactly 1.0
        return np.where(y >= 1.0, 0.0, y)

    def difference(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Shortest displacement a - b (nearest lattice translate on the torus)."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        if self.is_torus:
            d = d - np.round(d)
        return d

    def distance(self, a, b) -> np.ndarray:
        return np.linalg.norm(self.difference(a, b), axis=-1)

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        ok = np.all(np.isfinite(x), axis=-1)
        if self.is_torus:
            ok &= np.all((x >= 0.0) & (x < 1.0), axis=-1)
        return ok

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "dim": self.dim}


@dataclass
class SymbolicOrbitData:
    """Branch codes behind symbolically generated points.

    ``codes[i, k]`` is the branch visited by point ``i`` at forward time ``k``;
    ``tail`` is the seed value the code was applied to. Systems that sample
    this way rebuild exact forward orbits from shifted codes instead of
    iterating an expanding map numerically.
    """

    codes: np.ndarray
    tail: np.ndarray


@dataclass
class PointCloud:
    """Finite sample of an invariant set."""

    ambient: AmbientSpace
    points: np.ndarray
    meta: dict = field(default_factory=dict)
    symbolic: SymbolicOrbitData | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1) if self.ambient.dim == 1 else pts.reshape(1, -1)
        if pts.ndim != 2 or pts.shape[1] != self.ambient.dim:
            raise InvalidInputError(
                f"points of shape {pts.shape} do not match ambient dimension {self.ambient.dim}"
            )
        if not np.all(self.ambient.contains(pts)):
            raise InvalidInputError("cloud has points outside the ambient domain")
        self.points = pts

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.ambient.dim

    def subset(self, index) -> "PointCloud":
        sym = None
        if self.symbolic is not None:
            sym = SymbolicOrbitData(self.symbolic.codes[index], self.symbolic.tail[index])
        return PointCloud(self.ambient, self.points[index], dict(self.meta), sym)


def coordinate_names(dim: int) -> list[str]:
    return ["x", "y", "z"][:dim] if dim <= 3 else [f"x{i}" for i in range(dim)]


def write_csv(cloud: PointCloud, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(coordinate_names(cloud.dim))
        for row in cloud.points:
            writer.writerow([repr(float(v)) for v in row])


def read_csv(path, ambient: AmbientSpace | None = None) -> PointCloud:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise InvalidInputError(f"{path}: empty CSV")
        rows = [[float(v) for v in row] for row in reader if row]
    dim = len(header)
    ambient = ambient or AmbientSpace.euclidean(dim)
    if ambient.dim != dim:
        raise InvalidInputError(f"{path}: {dim} columns but ambient dimension {ambient.dim}")
    pts = np.asarray(rows, dtype=float).reshape(-1, dim)
    return PointCloud(ambient, pts, {"method": "file", "source": str(path)})


def write_binary(cloud: PointCloud, path) -> None:
    """IDIM format: magic, version byte, u32 dim, u64 count, little-endian f64 data."""
    count, dim = cloud.points.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, dim, count))
        fh.write(np.ascontiguousarray(cloud.points, dtype="<f8").tobytes())


def read_binary(path, ambient: AmbientSpace | None = None) -> PointCloud:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise InvalidInputError(f"{path}: truncated header")
    magic, version, dim, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise InvalidInputError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise InvalidInputError(f"{path}: unsupported format version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * dim * count:
        raise InvalidInputError(f"{path}: expected {count} x {dim} floats, got {len(body)} bytes")
    pts = np.frombuffer(body, dtype="<f8").reshape(count, dim).astype(float)
    ambient = ambient or AmbientSpace.euclidean(dim)
    return PointCloud(ambient, pts, {"method": "file", "source": str(path)})
