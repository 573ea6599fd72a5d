"""Upper box dimension of invariant sets: empirical estimates and Jacobian-based bounds."""

from .bounds import (
    BoundResult,
    Direction,
    GrowthRates,
    compute_bounds,
    degree_check,
    growth_rates,
    remark24_bound,
    thm11_min_d,
    thm12_bound,
    thm25_bound,
)
from .boxdim import (
    FitResult,
    ScaleSchedule,
    box_count,
    default_schedule,
    estimate_box_dimension,
    lemma21_estimate,
    neighborhood_volume,
)
from .cloud import AmbientSpace, PointCloud
from .errors import InvdimError
from .report import DimensionReport, RunConfig, build_report, sweep
from .systems import REGISTRY, Invariance, System, make_system, sample_invariant_set

__version__ = "0.1.0"

__all__ = [
    "AmbientSpace",
    "BoundResult",
    "DimensionReport",
    "Direction",
    "FitResult",
    "GrowthRates",
    "Invariance",
    "InvdimError",
    "PointCloud",
    "REGISTRY",
    "RunConfig",
    "ScaleSchedule",
    "System",
    "box_count",
    "build_report",
    "compute_bounds",
    "default_schedule",
    "degree_check",
    "estimate_box_dimension",
    "growth_rates",
    "lemma21_estimate",
    "make_system",
    "neighborhood_volume",
    "remark24_bound",
    "sample_invariant_set",
    "sweep",
    "thm11_min_d",
    "thm12_bound",
    "thm25_bound",
]
