"""Empirical upper box dimension: grid counting and the neighbourhood-volume route.

Axis-aligned grid boxes stand in for the balls of the covering-number
definition. A ball of radius delta meets at most 3^n grid cells of side
delta and a cell of side delta sits inside a ball of radius delta*sqrt(n),
so both counts have the same log-log slope as delta -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import parallel
from .cloud import PointCloud
from .errors import InsufficientScalesError, InvalidInputError

SATURATION = 0.1
MIN_SCALES = 3
# deepest scale probed when sliding the default window
MAX_SCALES = 40
VOLUME_CELLS_PER_RADIUS = 4


@dataclass(frozen=True)
class ScaleSchedule:
    deltas: tuple

    def __post_init__(self):
        d = tuple(float(x) for x in self.deltas)
        if not d:
            raise InvalidInputError("empty scale schedule")
        if any(not math.isfinite(x) or x <= 0 for x in d):
            raise InvalidInputError("scales must be positive and finite")
        if any(b >= a for a, b in zip(d, d[1:])):
            raise InvalidInputError("scales must be strictly decreasing")
        object.__setattr__(self, "deltas", d)

    @classmethod
    def geometric(cls, delta_max: float, ratio: float = 0.5, count: int = 8) -> "ScaleSchedule":
        if not 0.0 < ratio < 1.0:
            raise InvalidInputError("schedule ratio must lie in (0, 1)")
        if count < 1:
            raise InvalidInputError("schedule needs at least one scale")
        return cls(tuple(delta_max * ratio**k for k in range(count)))

    def check_domain(self, diameter: float) -> None:
        if self.deltas[0] > diameter:
            raise InvalidInputError(f"largest scale {self.deltas[0]} exceeds domain diameter {diameter}")

    def __len__(self):
        return len(self.deltas)


def domain_diameter(system=None, cloud: PointCloud | None = None) -> float:
    """Longest side of the declared domain box (or of the cloud's bounding box)."""
    if system is not None:
        return float(np.max(system.box[1] - system.box[0]))
    if cloud is None:
        raise InvalidInputError("need a system or a cloud to size the schedule")
    if cloud.ambient.is_torus:
        return 1.0
    ext = float(np.max(cloud.points.max(axis=0) - cloud.points.min(axis=0)))
    return ext if ext > 0 else 1.0


def default_schedule(system=None, cloud=None, ratio=0.5, count=8, saturation=SATURATION) -> ScaleSchedule:
    """``count`` geometric scales starting no higher than diameter / 4.

    With a cloud, the window slides toward small scales until its finest
    scale is the last one below the saturation cutoff: coarse scales of
    lacunar sets (ratios like 1/5 against a dyadic grid) are far from the
    small-scale limit and bias a short fit.
    """
    top = domain_diameter(system, cloud) / 4.0
    if cloud is None:
        return ScaleSchedule.geometric(top, ratio, count)
    finest = 0
    for k in range(MAX_SCALES):
        if _saturated(box_count(cloud, top * ratio**k), len(cloud), saturation):
            break
        finest = k
    start = max(0, finest - count + 1)
    return ScaleSchedule.geometric(top * ratio**start, ratio, count)


@dataclass
class FitResult:
    kind: str
    slope: float
    intercept: float
    residual_rms: float
    dimension: float
    deltas: list
    values: list
    used: list
    two_point_slopes: list = field(default_factory=list)

    @property
    def scales_used(self) -> list:
        return [d for d, u in zip(self.deltas, self.used) if u]

    def to_dict(self) -> dict:
        key = "count" if self.kind == "box" else "volume"
        return {
            "kind": self.kind,
            "slope": self.slope,
            "intercept": self.intercept,
            "residual_rms": self.residual_rms,
            "dimension": self.dimension,
            "scales": [
                {"delta": d, key: v, "used": u} for d, v, u in zip(self.deltas, self.values, self.used)
            ],
            "two_point_slopes": self.two_point_slopes,
        }


# ---------------------------------------------------------------------------
# cell bookkeeping


def _count_unique_rows(idx: np.ndarray) -> int:
    return len(_unique_rows(idx))


def _unique_rows(idx: np.ndarray) -> np.ndarray:
    if idx.shape[1] == 1:
        return np.unique(idx[:, 0])[:, None]
    lo = idx.min(axis=0)
    span = idx.max(axis=0) - lo + 1
    if np.prod(span.astype(float)) < 2**62:
        strides = np.cumprod(np.concatenate([[1], span[:0:-1]]))[::-1]
        keys = (idx - lo) @ strides
        _, first = np.unique(keys, return_index=True)
        return idx[first]
    return np.unique(idx, axis=0)


def _torus_cells(delta: float) -> int:
    # guard 1/delta landing a hair above an integer
    return max(1, math.ceil(round(1.0 / delta, 9)))


def box_count(cloud: PointCloud, delta: float) -> int:
    """Number of occupied grid cells of side ``delta``."""
    if not delta > 0 or not math.isfinite(delta):
        raise InvalidInputError(f"box size must be positive, got {delta}")
    if len(cloud) == 0:
        raise InvalidInputError("empty cloud")
    if cloud.ambient.is_torus:
        cells = _torus_cells(delta)
        idx = np.floor(cloud.points * cells).astype(np.int64) % cells
    else:
        idx = np.floor(cloud.points / delta).astype(np.int64)
    return _count_unique_rows(idx)


def neighborhood_volume(cloud: PointCloud, r: float) -> float:
    """Volume of the r-neighbourhood {x : d(x, a) < r for some a in the cloud}.

    Counts fine grid cells (side r/4, or the next finer divisor of 1 on the
    torus) whose centres lie within r of a cloud point.
    """
    if not r > 0 or not math.isfinite(r):
        raise InvalidInputError(f"radius must be positive, got {r}")
    if len(cloud) == 0:
        raise InvalidInputError("empty cloud")
    torus = cloud.ambient.is_torus
    n = cloud.dim
    if torus:
        cells = math.ceil(round(VOLUME_CELLS_PER_RADIUS / r, 9))
        h = 1.0 / cells
    else:
        h = r / VOLUME_CELLS_PER_RADIUS
    reach = math.ceil(r / h) + 1
    occupied = _unique_rows(np.floor(cloud.points / h).astype(np.int64))
    blocks = _unique_rows(np.floor_divide(occupied, reach))
    offsets = np.stack(np.meshgrid(*([np.arange(-1, 2)] * n), indexing="ij"), -1).reshape(-1, n)
    blocks = _unique_rows((blocks[:, None, :] + offsets[None, :, :]).reshape(-1, n))
    inner = np.stack(np.meshgrid(*([np.arange(reach)] * n), indexing="ij"), -1).reshape(-1, n)
    candidates = (blocks[:, None, :] * reach + inner[None, :, :]).reshape(-1, n)
    if torus:
        candidates = _unique_rows(candidates % cells)
    centres = (candidates + 0.5) * h
    tree = cKDTree(cloud.points, boxsize=1.0 if torus else None)
    inside = 0
    for sl in parallel.chunk_slices(len(centres), 1 << 18):
        dist, _ = tree.query(centres[sl], k=1, distance_upper_bound=r)
        inside += int(np.count_nonzero(dist < r))
    return inside * h**n


# ---------------------------------------------------------------------------
# fits


def _saturated(count: int, size: int, saturation: float) -> bool:
    return count > max(1.0, saturation * size)


def _fit(kind, deltas, values, used, offset):
    x = -np.log(np.asarray(deltas, dtype=float)[used])
    y = np.log(np.asarray([v for v, u in zip(values, used) if u], dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    pair = [float((y[i + 1] - y[i]) / (x[i + 1] - x[i])) for i in range(len(x) - 1)]
    return FitResult(
        kind=kind,
        slope=float(slope),
        intercept=float(intercept),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        dimension=float(offset + slope),
        deltas=list(deltas),
        values=list(values),
        used=list(used),
        two_point_slopes=pair,
    )


def _usable(cloud, schedule, counts, saturation, kind, values):
    used = [not _saturated(c, len(cloud), saturation) for c in counts]
    if sum(used) < MIN_SCALES:
        raise InsufficientScalesError(
            f"{kind}: only {sum(used)} of {len(schedule)} scales below the saturation cutoff "
            f"({saturation:g} x {len(cloud)} points); need {MIN_SCALES}",
            diagnostics={"deltas": list(schedule.deltas), "counts": list(counts), "values": list(values)},
        )
    return used


def estimate_box_dimension(cloud: PointCloud, schedule: ScaleSchedule, saturation: float = SATURATION) -> FitResult:
    """Least-squares slope of log N_delta against -log delta.

    Scales with more occupied cells than ``saturation`` times the cloud
    size are dropped: there the finite sample undercounts the cover.
    """
    counts = parallel.ordered_map(lambda d: box_count(cloud, d), schedule.deltas)
    used = _usable(cloud, schedule, counts, saturation, "box", counts)
    return _fit("box", schedule.deltas, counts, used, 0.0)


def lemma21_estimate(cloud: PointCloud, schedule: ScaleSchedule, saturation: float = SATURATION) -> FitResult:
    """Dimension estimate n + slope of log vol(B_r) against -log r.

    Uses the same saturation cutoff as grid counting, evaluated with boxes
    of side r.
    """
    counts = parallel.ordered_map(lambda d: box_count(cloud, d), schedule.deltas)
    used = _usable(cloud, schedule, counts, saturation, "lemma21", counts)
    # saturated scales are never fitted; skip their (most expensive) volumes
    volumes = parallel.ordered_map(
        lambda du: neighborhood_volume(cloud, du[0]) if du[1] else None, zip(schedule.deltas, used)
    )
    return _fit("lemma21", schedule.deltas, volumes, used, float(cloud.dim))
