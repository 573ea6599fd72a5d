"""Upper bounds on the upper box dimension of invariant sets.

Extrema over K are taken over the sampled cloud, the only computable
stand-in; every result says so in its inputs. Sample minima of |det| can
overestimate the true minimum, so the bounds are estimates, not certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import linalg, parallel
from .cloud import PointCloud
from .errors import (
    InvalidInputError,
    InvdimError,
    NearCriticalValueError,
    OrbitEscapeError,
    UnsupportedOperationError,
)
from .systems import Invariance, System, escaped

DEFAULT_M_MAX = 32
NEWTON_TOL = 1e-10
NEWTON_STEPS = 50
DEDUP_RADIUS = 1e-6
CRITICAL_DET = 1e-8


class Direction(str, Enum):
    FORWARD = "Forward"
    INVERSE = "Inverse"


THM11, THM12, THM25, RMK24 = "Thm11", "Thm12", "Thm25", "Rmk24"


@dataclass
class GrowthRates:
    """Per-m growth sequences and their running-extremum limits.

    ``c_over_m[i]`` is (1/m) log min |det D f^{+-m}| and ``a_over_m[i]`` is
    (1/m) log max ||D f^{+-m}||, both over the sample, at ``m_values[i]``.
    """

    direction: Direction
    m_values: list
    c_over_m: list
    a_over_m: list
    norm_product_over_m: list
    points_used: list
    sample_size: int
    dropped: int
    method: str
    nonsingular: bool = True

    @property
    def b_hat(self) -> float:
        # superadditive sequence: its limit is the supremum
        return max(self.c_over_m)

    @property
    def s_hat(self) -> float:
        # subadditive sequence: its limit is the infimum
        return min(self.a_over_m)

    def to_dict(self) -> dict:
        return {
            "direction": self.direction.value,
            "method": self.method,
            "m_values": list(self.m_values),
            "c_over_m": list(self.c_over_m),
            "a_over_m": list(self.a_over_m),
            "norm_product_over_m": list(self.norm_product_over_m),
            "points_used": list(self.points_used),
            "sample_size": self.sample_size,
            "dropped": self.dropped,
            "nonsingular": self.nonsingular,
            "b_hat": self.b_hat,
            "s_hat": self.s_hat,
        }


@dataclass
class BoundResult:
    theorem: str
    applicable: bool
    value: float | None = None
    reason: str | None = None
    inputs: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "applicable": self.applicable,
            "value": self.value,
            "reason": self.reason,
            "inputs": self.inputs,
            "notes": list(self.notes),
        }


def _inapplicable(theorem, reasons, inputs=None) -> BoundResult:
    return BoundResult(theorem, False, None, "; ".join(reasons), inputs or {})


def _clamp(value: float, n: int, notes: list) -> float:
    if value > n:
        notes.append(f"raw value {value:.12g} exceeds n = {n}; clamped to n")
        return float(n)
    if value < 0:
        notes.append(f"raw value {value:.12g} is negative; clamped to 0")
        return 0.0
    return float(value)


def _approximation_note(size: int) -> str:
    return f"approximation: extrema over {size} sample points"


def _live_jacobians(system: System, pts: np.ndarray, inverse: bool = False) -> np.ndarray:
    jac = system.inverse_jacobian(pts) if inverse else system.jacobian(pts)
    return jac[~np.isnan(jac).any(axis=(1, 2))]


# ---------------------------------------------------------------------------
# closed-form minimal d


def thm11_min_d(system: System, cloud: PointCloud) -> BoundResult:
    """Smallest d with (max |det Df|) (min S_n(Df))^(d - n) <= 1.

    The left side decreases in d when min S_n < 1, so the admissible set is
    [d*, n] with d* = n + log(max |det|) / (-log min S_n).
    """
    n = system.dim
    jac = _live_jacobians(system, cloud.points)
    if not len(jac):
        raise OrbitEscapeError(f"{system.name}: no cloud point lies in the domain of f")
    _, logdet = linalg.log_abs_det(jac)
    smallest = linalg.singular_values(jac)[:, -1]
    log_det_max = float(np.max(logdet))
    sigma_min = float(np.min(smallest))
    inputs = {
        "max_abs_det": math.exp(log_det_max),
        "log_max_abs_det": log_det_max,
        "min_smallest_singular_value": sigma_min,
        "sample_size": int(len(jac)),
        "note": _approximation_note(len(jac)),
    }
    reasons = []
    if not 0.0 < sigma_min < 1.0:
        reasons.append("hypothesis 0 < min S_n < 1 fails")
    if log_det_max > 0.0:
        reasons.append("no d <= n satisfies the inequality (max |det| > 1)")
    if not system.is_diffeomorphism:
        reasons.append("f is not a diffeomorphism onto its image")
    if not system.invariance.backward:
        reasons.append("K is not backward invariant")
    if reasons:
        return _inapplicable(THM11, reasons, inputs)
    log_sigma = math.log(sigma_min)
    d_star = n + log_det_max / -log_sigma
    inputs["d_star"] = d_star
    notes = []
    value = _clamp(d_star, n, notes)
    margin = log_det_max + (value - n) * log_sigma
    # strictness margin of the inequality at the reported d, for the strict-inequality variant
    inputs["log_lhs_at_value"] = margin
    return BoundResult(THM11, True, value, None, inputs, notes)


# ---------------------------------------------------------------------------
# growth rates


def m_schedule(m_max: int) -> list:
    if int(m_max) != m_max or m_max < 1:
        raise InvalidInputError(f"m_max must be a positive integer, got {m_max}")
    out, m = [], 1
    while m < m_max:
        out.append(m)
        m *= 2
    out.append(int(m_max))
    return out


def _inverse_orbit(system: System, cloud: PointCloud, steps: int) -> np.ndarray:
    out = np.empty((steps + 1, len(cloud), system.dim))
    out[0] = cloud.points
    for k in range(steps):
        out[k + 1] = system.inverse_evaluate(out[k])
    return out


def _chunk_rates(system, chunk, m_values, method):
    """Per-m extrema for one chunk of base points."""
    m_max = m_values[-1]
    n = system.dim
    count = len(chunk)
    if method == "inverse-orbit":
        orbit = _inverse_orbit(system, chunk, m_max)
    else:
        orbit = system.forward_orbit(chunk, m_max)
    prod = np.broadcast_to(np.eye(n), (count, n, n)).copy()
    log_scale = np.zeros(count)
    log_det = np.zeros(count)
    log_norms = np.zeros(count)
    alive = ~escaped(orbit[0])
    singular = np.zeros(count, dtype=bool)
    records = {}
    for k in range(1, m_max + 1):
        if method == "forward-orbit":
            jac = system.jacobian(orbit[k - 1])
        elif method == "inverse-orbit":
            jac = system.inverse_jacobian(orbit[k - 1])
        else:  # reversed forward orbit: D_{z_k} f^-k = Dinv(z_1) ... Dinv(z_k)
            jac = system.inverse_jacobian(orbit[k])
            alive &= ~escaped(orbit[k])
        bad = np.isnan(jac).any(axis=(1, 2))
        alive &= ~bad
        jac[~alive] = np.eye(n)
        sign, ld = linalg.log_abs_det(jac)
        singular |= alive & (sign == 0)
        log_det += np.where(sign == 0, 0.0, ld)
        log_norms += np.log(linalg.operator_norm(jac))
        if method == "reversed-orbit":
            prod = linalg.matmul(prod, jac)
        else:
            prod = linalg.matmul(jac, prod)
        scale = np.abs(prod).max(axis=(1, 2))
        scale = np.where(scale > 0, scale, 1.0)
        prod /= scale[:, None, None]
        log_scale += np.log(scale)
        if k in m_values:
            live = alive.copy()
            if live.any():
                norm = np.log(linalg.operator_norm(prod[live])) + log_scale[live]
                c = -np.inf if (singular & live).any() else float(np.min(log_det[live])) / k
                records[k] = (c, float(np.max(norm)) / k, float(np.max(log_norms[live])) / k, int(live.sum()))
            else:
                records[k] = (None, None, None, 0)
    return records, int(count - alive.sum()), bool(singular.any())


def growth_rates(
    system: System,
    cloud: PointCloud,
    m_max: int = DEFAULT_M_MAX,
    direction: Direction | str = Direction.FORWARD,
    method: str = "auto",
) -> GrowthRates:
    """Growth rates of |det| and operator norm along m-fold (inverse) iterates.

    Jacobian products are accumulated along each orbit with the running
    product renormalised every step; log|det| is a running sum. For the
    inverse direction on a set with f(K) = K, the default reads forward
    orbits backwards (``reversed-orbit``): if z_k = f^k(z_0) then
    D_{z_k} f^-k = Dinv(z_1) ... Dinv(z_k), and z_k ranges over K as z_0 does.
    That avoids iterating f^-1 numerically, which is unstable on attractors.
    """
    direction = Direction(direction)
    m_values = m_schedule(m_max)
    if direction is Direction.INVERSE:
        if not system.has_inverse:
            raise UnsupportedOperationError(f"{system.name} has no inverse; inverse growth rates undefined")
        if method == "auto":
            method = "reversed-orbit" if system.invariance is Invariance.BOTH else "inverse-orbit"
        if method not in ("reversed-orbit", "inverse-orbit"):
            raise InvalidInputError(f"unknown inverse method {method!r}")
    else:
        if method not in ("auto", "forward-orbit"):
            raise InvalidInputError(f"unknown forward method {method!r}")
        method = "forward-orbit"
    chunks = [cloud.subset(sl) for sl in parallel.chunk_slices(len(cloud))]
    results = parallel.ordered_map(lambda ch: _chunk_rates(system, ch, m_values, method), chunks)
    c_over_m, a_over_m, prod_over_m, used = [], [], [], []
    for m in m_values:
        vals = [r[0][m] for r in results if r[0][m][3] > 0]
        if not vals:
            raise OrbitEscapeError(f"{system.name}: every orbit escaped before m = {m}")
        c_over_m.append(min(v[0] for v in vals))
        a_over_m.append(max(v[1] for v in vals))
        prod_over_m.append(max(v[2] for v in vals))
        used.append(sum(v[3] for v in vals))
    return GrowthRates(
        direction=direction,
        m_values=m_values,
        c_over_m=c_over_m,
        a_over_m=a_over_m,
        norm_product_over_m=prod_over_m,
        points_used=used,
        sample_size=len(cloud),
        dropped=sum(r[1] for r in results),
        method=method,
        nonsingular=not any(r[2] for r in results),
    )


# ---------------------------------------------------------------------------
# growth-rate bounds


def _rates_inputs(rates: GrowthRates) -> dict:
    return {
        "b_hat": rates.b_hat,
        "s_hat": rates.s_hat,
        "direction": rates.direction.value,
        "m_max": rates.m_values[-1],
        "sample_size": rates.sample_size,
        "note": _approximation_note(rates.sample_size),
    }


def _growth_bound(theorem, rates, n, log_degree=0.0, extra_inputs=None) -> BoundResult:
    inputs = _rates_inputs(rates)
    inputs.update(extra_inputs or {})
    b, s = rates.b_hat, rates.s_hat
    if not b > 0:
        return _inapplicable(theorem, ["hypothesis b > 0 fails"], inputs)
    if not s > 0:
        raise InvdimError(f"{theorem}: b_hat = {b} > 0 but s_hat = {s} <= 0; growth rates inconsistent")
    notes = []
    raw = n - (b - log_degree) / s
    inputs["raw_value"] = raw
    return BoundResult(theorem, True, _clamp(raw, n, notes), None, inputs, notes)


def _require_direction(rates, expected):
    if rates.direction is not expected:
        raise InvalidInputError(f"expected {expected.value} growth rates, got {rates.direction.value}")


def thm25_bound(rates: GrowthRates, n: int) -> BoundResult:
    """n - b/s from inverse-iterate growth rates (backward invariant K)."""
    _require_direction(rates, Direction.INVERSE)
    return _growth_bound(THM25, rates, n)


def remark24_bound(rates: GrowthRates, n: int) -> BoundResult:
    """n - b/s from forward-iterate growth rates (forward invariant K)."""
    _require_direction(rates, Direction.FORWARD)
    return _growth_bound(RMK24, rates, n)


def thm12_bound(rates: GrowthRates, degree: int, n: int) -> BoundResult:
    """n - (b - log deg)/s for a map of Brouwer degree ``deg``."""
    _require_direction(rates, Direction.FORWARD)
    if int(degree) != degree or degree < 1:
        raise InvalidInputError(f"degree must be a positive integer, got {degree}")
    if not rates.nonsingular:
        return _inapplicable(THM12, ["Jacobian determinant vanishes on the sample"], _rates_inputs(rates))
    log_degree = math.log(degree)
    result = _growth_bound(THM12, rates, n, log_degree, {"degree": int(degree)})
    if result.applicable and rates.b_hat <= log_degree:
        result.notes.append("b_hat <= log degree: the bound does not fall strictly below n")
    return result


# ---------------------------------------------------------------------------
# Brouwer degree


def locate_preimages(system: System, y, grid_resolution: int = 32) -> np.ndarray:
    """All preimages of y found by Newton's method from a uniform seed grid."""
    if not system.ambient.is_torus:
        raise UnsupportedOperationError("degree_check needs a closed manifold (flat torus) ambient")
    n = system.dim
    target = np.asarray(y, dtype=float).reshape(n)
    axis = (np.arange(grid_resolution) + 0.5) / grid_resolution
    x = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), -1).reshape(-1, n)
    amb = system.ambient
    for _ in range(NEWTON_STEPS):
        resid = amb.difference(system.evaluate(x), target)
        if np.all(np.linalg.norm(resid, axis=1) < NEWTON_TOL):
            break
        step = np.linalg.solve(system.jacobian(x), resid[:, :, None])[:, :, 0]
        x = amb.wrap(x - step)
    resid = np.linalg.norm(amb.difference(system.evaluate(x), target), axis=1)
    roots = x[resid < NEWTON_TOL]
    found = []
    for r in roots:
        if not found or np.min(amb.distance(np.asarray(found), r)) > DEDUP_RADIUS:
            found.append(r)
    return np.asarray(found).reshape(-1, n)


def degree_check(system: System, y, grid_resolution: int = 32) -> int:
    """Signed count of preimages of a regular value y."""
    roots = locate_preimages(system, y, grid_resolution)
    if not len(roots):
        raise NearCriticalValueError(f"no preimage of {list(np.ravel(y))} located; refine the seed grid")
    sign, logmag = linalg.log_abs_det(system.jacobian(roots))
    if np.any(sign == 0) or np.any(logmag <= math.log(CRITICAL_DET)):
        raise NearCriticalValueError(
            f"a preimage of {list(np.ravel(y))} has |det Df| <= {CRITICAL_DET}; pick another value y"
        )
    return int(np.sum(sign))


# ---------------------------------------------------------------------------
# orchestration


def compute_bounds(system: System, cloud: PointCloud, m_max: int = DEFAULT_M_MAX) -> dict:
    """Every bound the system's structure permits, plus the growth rates used."""
    n = system.dim
    rates = {}
    out = [thm11_min_d(system, cloud)]
    forward = growth_rates(system, cloud, m_max, Direction.FORWARD)
    rates["Forward"] = forward
    if system.degree is None:
        out.append(_inapplicable(THM12, ["no Brouwer degree (ambient is not a closed manifold)"]))
    elif not system.invariance.forward:
        out.append(_inapplicable(THM12, ["K is not forward invariant"]))
    else:
        out.append(thm12_bound(forward, system.degree, n))
    if system.has_inverse:
        inverse = growth_rates(system, cloud, m_max, Direction.INVERSE)
        rates["Inverse"] = inverse
        if system.invariance.backward:
            out.append(thm25_bound(inverse, n))
        else:
            out.append(_inapplicable(THM25, ["K is not backward invariant"]))
    else:
        out.append(_inapplicable(THM25, ["f has no inverse"]))
    if not system.is_diffeomorphism:
        out.append(_inapplicable(RMK24, ["f is not a diffeomorphism onto its image"], _rates_inputs(forward)))
    elif not system.invariance.forward:
        out.append(_inapplicable(RMK24, ["K is not forward invariant"]))
    else:
        out.append(remark24_bound(forward, n))
    return {"bounds": out, "rates": rates}
