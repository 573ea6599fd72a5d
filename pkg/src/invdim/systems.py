"""Built-in maps with exact Jacobians, inverses, and invariant-set samplers.

Maps are vectorised over point stacks of shape ``(N, n)``. A point outside
the domain of definition maps to a row of NaN; that is the escape signal,
callers test it with :func:`escaped`.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np
from scipy.spatial import cKDTree

from . import parallel
from .cloud import AmbientSpace, PointCloud, SymbolicOrbitData
from .errors import InvalidInputError, SamplerError, UnsupportedOperationError

DEFAULT_TRANSIENT = 1000
ESCAPE_RETRIES = 100
# orbit length that symbolic clouds can reproduce exactly, beyond their precision depth
ORBIT_RESERVE = 64
SAMPLER_CHUNK = 4096


class Invariance(str, Enum):
    FORWARD = "Forward"
    BACKWARD = "Backward"
    BOTH = "Both"

    @property
    def forward(self) -> bool:
        return self in (Invariance.FORWARD, Invariance.BOTH)

    @property
    def backward(self) -> bool:
        return self in (Invariance.BACKWARD, Invariance.BOTH)


def escaped(x: np.ndarray) -> np.ndarray:
    return np.isnan(x).any(axis=-1)


def _as_points(x, dim: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    arr = arr.reshape(-1, dim) if not single else arr.reshape(1, dim)
    return arr, single


def _precision_depth(ratio: float, digits: float = 17.0) -> int:
    """Number of contractions by ``ratio`` needed to shrink 1 below 10**-digits."""
    return int(math.ceil(digits / -math.log10(ratio)))


class System:
    """A smooth map f: U -> M together with what the bounds need to know about it.

    Subclasses implement the raw vectorised pieces (``_map``, ``_jacobian``,
    ``_in_domain`` and optionally the inverse) and a sampler.
    """

    name = "system"
    sampler_method = "forward-iteration"
    invariance = Invariance.BOTH
    degree: int | None = None
    reference_dimension: float | None = None
    reference_note = ""
    has_inverse = False
    # True when f is injective on its domain (a diffeomorphism onto its image)
    is_diffeomorphism = False

    def __init__(self, ambient: AmbientSpace, params: dict, box):
        self.ambient = ambient
        self.params = dict(params)
        self.box = np.asarray(box, dtype=float).reshape(2, ambient.dim)

    @property
    def dim(self) -> int:
        return self.ambient.dim

    def __repr__(self):
        args = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.name}({args})"

    # -- raw pieces, overridden per system ---------------------------------
    def _in_domain(self, x):
        return np.ones(x.shape[0], dtype=bool)

    def _map(self, x):
        raise NotImplementedError

    def _jacobian(self, x):
        raise NotImplementedError

    def _in_inverse_domain(self, x):
        return np.ones(x.shape[0], dtype=bool)

    def _inverse(self, x):
        raise UnsupportedOperationError(f"{self.name} has no inverse")

    def _inverse_jacobian(self, x):
        raise UnsupportedOperationError(f"{self.name} has no inverse")

    # -- public vectorised API ------------------------------------------------
    def _apply(self, x, fn, domain, wrap=True):
        pts, single = _as_points(x, self.dim)
        ok = domain(pts) & ~escaped(pts)
        out = np.full(pts.shape, np.nan)
        if ok.any():
            y = fn(pts[ok])
            out[ok] = self.ambient.wrap(y) if wrap else y
        return out[0] if single else out

    def _apply_jac(self, x, fn, domain):
        pts, single = _as_points(x, self.dim)
        ok = domain(pts) & ~escaped(pts)
        out = np.full((pts.shape[0], self.dim, self.dim), np.nan)
        if ok.any():
            out[ok] = fn(pts[ok])
        return out[0] if single else out

    def evaluate(self, x):
        return self._apply(x, self._map, self._in_domain)

    def jacobian(self, x):
        return self._apply_jac(x, self._jacobian, self._in_domain)

    def inverse_evaluate(self, x):
        self._require_inverse()
        return self._apply(x, self._inverse, self._in_inverse_domain)

    def inverse_jacobian(self, x):
        self._require_inverse()
        return self._apply_jac(x, self._inverse_jacobian, self._in_inverse_domain)

    def _require_inverse(self):
        if not self.has_inverse:
            raise UnsupportedOperationError(f"{self.name} is not invertible; no inverse map")

    # -- sampling and orbits -------------------------------------------------
    def sample(self, budget: int, seed: int, **options) -> PointCloud:
        raise NotImplementedError

    def forward_orbit(self, cloud: PointCloud, steps: int) -> np.ndarray:
        """Orbit points z_0..z_steps, shape ``(steps + 1, N, n)``; NaN after escape."""
        out = np.empty((steps + 1, len(cloud), self.dim))
        out[0] = cloud.points
        for k in range(steps):
            out[k + 1] = self.evaluate(out[k])
        return out

    def describe(self) -> dict:
        return {
            "name": self.name,
            "ambient": self.ambient.to_dict(),
            "params": dict(self.params),
            "invariance": self.invariance.value,
            "degree": self.degree,
            "has_inverse": self.has_inverse,
            "diffeomorphism": self.is_diffeomorphism,
            "sampler": self.sampler_method,
            "reference_dimension": self.reference_dimension,
            "reference_note": self.reference_note,
        }


# ---------------------------------------------------------------------------
# shared samplers


def _integer_root(budget: int, dim: int) -> int:
    k = max(1, int(round(budget ** (1.0 / dim))))
    while k**dim > budget and k > 1:
        k -= 1
    while (k + 1) ** dim <= budget:
        k += 1
    return k


def grid_cloud(ambient: AmbientSpace, budget: int, seed: int) -> PointCloud:
    """Cell-centred uniform grid filling the torus; K is the whole space."""
    k = _integer_root(budget, ambient.dim)
    axis = (np.arange(k) + 0.5) / k
    mesh = np.meshgrid(*([axis] * ambient.dim), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    meta = {
        "method": "grid",
        "seed": int(seed),
        "budget": int(budget),
        "transient": 0,
        "resolution": math.sqrt(ambient.dim) / (2 * k),
    }
    return PointCloud(ambient, pts, meta)


def covering_resolution(ambient: AmbientSpace, pts: np.ndarray) -> float:
    """Largest nearest-neighbour distance inside the sample."""
    uniq, counts = np.unique(pts, axis=0, return_counts=True)
    if len(uniq) < 2:
        return 0.0
    # duplicated points have a zero-distance neighbour
    lonely = uniq[counts == 1]
    if not len(lonely):
        return 0.0
    box = 1.0 if ambient.is_torus else None
    tree = cKDTree(uniq, boxsize=box)
    dist, _ = tree.query(lonely, k=2)
    return float(dist[:, 1].max())


class _SymbolicSampler:
    """Mixin for sets generated by composing contracting inverse branches.

    ``_branch(code, x)`` applies inverse branch ``code`` to the expanding
    coordinate. A point is ``g_{c0} o g_{c1} o ... o g_{c(L-1)}(tail)``; the
    forward map shifts the code, so orbit points come from a single backward
    pass over the code instead of from repeated expansion.
    """

    n_branches = 2

    def _branch(self, code, x):
        raise NotImplementedError

    def _contraction(self) -> float:
        raise NotImplementedError

    def _suffix_decode(self, codes, tail) -> np.ndarray:
        """Decoded values of every code suffix: row k is the point coded by codes[:, k:]."""
        length = codes.shape[1]
        out = np.empty((length + 1, codes.shape[0]))
        out[length] = tail
        for k in range(length - 1, -1, -1):
            out[k] = self._branch(codes[:, k], out[k + 1])
        return out

    def _decode(self, codes, tail) -> np.ndarray:
        x = np.array(tail, dtype=float)
        for k in range(codes.shape[1] - 1, -1, -1):
            x = self._branch(codes[:, k], x)
        return x

    def _draw_codes(self, budget, seed, depth):
        length = depth + ORBIT_RESERVE
        codes, tails = [], []
        for idx, sl in enumerate(parallel.chunk_slices(budget, SAMPLER_CHUNK)):
            rng = np.random.default_rng([seed, idx])
            count = sl.stop - sl.start
            codes.append(rng.integers(0, self.n_branches, size=(count, length), dtype=np.int8))
            tails.append(rng.random(count))
        return np.concatenate(codes), np.concatenate(tails)

    def _default_depth(self) -> int:
        return _precision_depth(self._contraction())


# ---------------------------------------------------------------------------
# torus systems


class _LinearTorusMap(System):
    sampler_method = "grid"

    def __init__(self, matrix, params):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        dim = matrix.shape[0]
        super().__init__(AmbientSpace.torus(dim), params, [[0.0] * dim, [1.0] * dim])
        self.matrix = matrix

    def _map(self, x):
        return x @ self.matrix.T

    def _jacobian(self, x):
        return np.broadcast_to(self.matrix, (x.shape[0], self.dim, self.dim)).copy()

    def sample(self, budget: int, seed: int, **options) -> PointCloud:
        _check_budget(budget)
        return grid_cloud(self.ambient, budget, seed)


class CatMap(_LinearTorusMap):
    """Arnold cat map (x, y) -> (2x + y, x + y) mod 1."""

    name = "cat_map"
    degree = 1
    has_inverse = True
    is_diffeomorphism = True
    reference_dimension = 2.0
    reference_note = "K is the whole torus T^2"

    def __init__(self):
        super().__init__([[2.0, 1.0], [1.0, 1.0]], {})
        self.inverse_matrix = np.array([[1.0, -1.0], [-1.0, 2.0]])

    def _inverse(self, x):
        return x @ self.inverse_matrix.T

    def _inverse_jacobian(self, x):
        return np.broadcast_to(self.inverse_matrix, (x.shape[0], 2, 2)).copy()


class ToralEndomorphism(_LinearTorusMap):
    """Diagonal expanding endomorphism (x, y) -> (p x, q y) mod 1, degree p q."""

    name = "toral_endomorphism"
    reference_dimension = 2.0
    reference_note = "K is the whole torus T^2"

    def __init__(self, p=2, q=3):
        p, q = _integer_param("p", p, 1), _integer_param("q", q, 1)
        super().__init__(np.diag([float(p), float(q)]), {"p": p, "q": q})
        self.degree = p * q
        self.has_inverse = self.is_diffeomorphism = self.degree == 1

    def _inverse(self, x):
        return x

    def _inverse_jacobian(self, x):
        return np.broadcast_to(np.eye(2), (x.shape[0], 2, 2)).copy()


class CircleExpanding(_SymbolicSampler, System):
    """Circle map theta -> k theta mod 1; K = S^1 sampled through random preimage branches."""

    name = "circle_expanding"
    sampler_method = "inverse-branch"
    reference_dimension = 1.0
    reference_note = "K is the whole circle"

    def __init__(self, k=3):
        k = _integer_param("k", k, 2)
        super().__init__(AmbientSpace.torus(1), {"k": k}, [[0.0], [1.0]])
        self.k = k
        self.degree = k
        self.n_branches = k

    def _map(self, x):
        return self.k * x

    def _jacobian(self, x):
        return np.full((x.shape[0], 1, 1), float(self.k))

    def _branch(self, code, x):
        return (x + code) / self.k

    def _contraction(self):
        return 1.0 / self.k

    def sample(self, budget: int, seed: int, depth: int | None = None, **options) -> PointCloud:
        return _symbolic_cloud(self, budget, seed, depth)

    def forward_orbit(self, cloud, steps):
        return _symbolic_orbit(self, cloud, steps)


# ---------------------------------------------------------------------------
# Euclidean systems


class CookieCutter(_SymbolicSampler, System):
    """Middle-alpha cookie-cutter: two expanding affine branches onto [0, 1].

    With alpha = 1/3 this is x -> 3x mod 1 restricted to [0, 1/3] u [2/3, 1];
    the non-escaping set is the middle-thirds Cantor set.
    """

    name = "cookie_cutter"
    sampler_method = "inverse-branch"

    def __init__(self, alpha=1.0 / 3.0):
        alpha = float(alpha)
        if not 0.0 < alpha < 1.0:
            raise InvalidInputError("cookie_cutter requires alpha in (0, 1)")
        super().__init__(AmbientSpace.euclidean(1), {"alpha": alpha}, [[0.0], [1.0]])
        self.ratio = (1.0 - alpha) / 2.0
        self.reference_dimension = math.log(2.0) / -math.log(self.ratio)
        self.reference_note = "self-similar Cantor set: log 2 / log(2 / (1 - alpha))"

    def _in_domain(self, x):
        v = x[:, 0]
        return ((v >= 0.0) & (v <= self.ratio)) | ((v >= 1.0 - self.ratio) & (v <= 1.0))

    def _map(self, x):
        r = self.ratio
        return np.where(x <= r, x / r, (x - (1.0 - r)) / r)

    def _jacobian(self, x):
        return np.full((x.shape[0], 1, 1), 1.0 / self.ratio)

    def _branch(self, code, x):
        return np.where(code == 0, self.ratio * x, 1.0 - self.ratio + self.ratio * x)

    def _contraction(self):
        return self.ratio

    def sample(self, budget: int, seed: int, depth: int | None = None, **options) -> PointCloud:
        return _symbolic_cloud(self, budget, seed, depth)

    def forward_orbit(self, cloud, steps):
        return _symbolic_orbit(self, cloud, steps)


class LinearHorseshoe(_SymbolicSampler, System):
    """Affine horseshoe on the unit square.

    Two horizontal strips H0 = {y <= 1/mu} and H1 = {y >= 1 - 1/mu} are
    mapped by (x, y) -> (lam x, mu y) and (x, y) -> (1 - lam x, mu (1 - y)).
    The non-escaping set is Cantor(lam) x Cantor(1/mu). Coordinate x is
    contracted, y expanded.
    """

    name = "linear_horseshoe"
    sampler_method = "symbolic"
    has_inverse = True
    is_diffeomorphism = True

    def __init__(self, lam=0.2, mu=4.0):
        lam, mu = float(lam), float(mu)
        if not 0.0 < lam < 0.5:
            raise InvalidInputError("linear_horseshoe requires lam in (0, 1/2)")
        if not mu > 2.0:
            raise InvalidInputError("linear_horseshoe requires mu > 2")
        super().__init__(AmbientSpace.euclidean(2), {"lam": lam, "mu": mu}, [[0.0, 0.0], [1.0, 1.0]])
        self.lam, self.mu = lam, mu
        self.reference_dimension = math.log(2.0) / math.log(mu) + math.log(2.0) / -math.log(lam)
        self.reference_note = "product of Cantor sets: log 2 / log mu + log 2 / log(1 / lam)"

    def _square(self, x):
        return np.all((x >= 0.0) & (x <= 1.0), axis=1)

    def _in_domain(self, x):
        y = x[:, 1]
        return self._square(x) & ((y <= 1.0 / self.mu) | (y >= 1.0 - 1.0 / self.mu))

    def _in_inverse_domain(self, x):
        u = x[:, 0]
        return self._square(x) & ((u <= self.lam) | (u >= 1.0 - self.lam))

    def _map(self, x):
        low = x[:, 1] <= 1.0 / self.mu
        return np.column_stack([
            np.where(low, self.lam * x[:, 0], 1.0 - self.lam * x[:, 0]),
            np.where(low, self.mu * x[:, 1], self.mu * (1.0 - x[:, 1])),
        ])

    def _jacobian(self, x):
        sgn = np.where(x[:, 1] <= 1.0 / self.mu, 1.0, -1.0)
        jac = np.zeros((x.shape[0], 2, 2))
        jac[:, 0, 0] = sgn * self.lam
        jac[:, 1, 1] = sgn * self.mu
        return jac

    def _inverse(self, x):
        left = x[:, 0] <= self.lam
        return np.column_stack([
            np.where(left, x[:, 0] / self.lam, (1.0 - x[:, 0]) / self.lam),
            np.where(left, x[:, 1] / self.mu, 1.0 - x[:, 1] / self.mu),
        ])

    def _inverse_jacobian(self, x):
        sgn = np.where(x[:, 0] <= self.lam, 1.0, -1.0)
        jac = np.zeros((x.shape[0], 2, 2))
        jac[:, 0, 0] = sgn / self.lam
        jac[:, 1, 1] = sgn / self.mu
        return jac

    # y is the expanding coordinate: its inverse branches carry the code
    def _branch(self, code, y):
        return np.where(code == 0, y / self.mu, 1.0 - y / self.mu)

    def _contraction(self):
        return 1.0 / self.mu

    def _x_branch(self, code, x):
        return np.where(code == 0, self.lam * x, 1.0 - self.lam * x)

    def sample(self, budget: int, seed: int, depth: int | None = None, **options) -> PointCloud:
        _check_budget(budget)
        depth_y = depth or self._default_depth()
        depth_x = depth or _precision_depth(self.lam)
        codes, tails = self._draw_codes(budget, seed, depth_y)
        ys = self._decode(codes, tails)
        # x carries the past: decode an independent backward code through the contracting branches
        xs = np.empty(budget)
        for idx, sl in enumerate(parallel.chunk_slices(budget, SAMPLER_CHUNK)):
            rng = np.random.default_rng([seed, idx, 1])
            past = rng.integers(0, 2, size=(sl.stop - sl.start, depth_x), dtype=np.int8)
            x = rng.random(sl.stop - sl.start)
            for k in range(depth_x - 1, -1, -1):
                x = self._x_branch(past[:, k], x)
            xs[sl] = x
        pts = np.column_stack([xs, ys])
        meta = _meta(self, "symbolic", seed, budget, 0, pts)
        meta["depth"] = int(max(depth_x, depth_y))
        return PointCloud(self.ambient, pts, meta, SymbolicOrbitData(codes, tails))

    def forward_orbit(self, cloud, steps):
        if cloud.symbolic is None:
            return System.forward_orbit(self, cloud, steps)
        codes = cloud.symbolic.codes
        exact = min(steps, codes.shape[1] - self._default_depth())
        ys = self._suffix_decode(codes, cloud.symbolic.tail)
        out = np.empty((steps + 1, len(cloud), 2))
        out[0] = cloud.points
        for k in range(exact):
            out[k + 1, :, 0] = self._x_branch(codes[:, k], out[k, :, 0])
            out[k + 1, :, 1] = ys[k + 1]
        for k in range(exact, steps):
            out[k + 1] = self.evaluate(out[k])
        return out


class Henon(System):
    """Henon map (x, y) -> (1 - a x^2 + y, b x)."""

    name = "henon"
    has_inverse = True
    is_diffeomorphism = True
    reference_note = "no closed form; box counting gives roughly 1.2-1.3 at a=1.4, b=0.3"
    escape_radius = 100.0

    def __init__(self, a=1.4, b=0.3):
        a, b = float(a), float(b)
        if b == 0.0:
            raise InvalidInputError("henon requires b != 0 for invertibility")
        super().__init__(AmbientSpace.euclidean(2), {"a": a, "b": b}, [[-1.5, -1.5], [1.5, 1.5]])
        self.a, self.b = a, b
        self.seed_box = np.array([[-0.5, -0.15], [0.5, 0.15]])

    def _in_domain(self, x):
        return np.all(np.abs(x) < self.escape_radius, axis=1)

    _in_inverse_domain = _in_domain

    def _map(self, x):
        return np.column_stack([1.0 - self.a * x[:, 0] ** 2 + x[:, 1], self.b * x[:, 0]])

    def _jacobian(self, x):
        jac = np.zeros((x.shape[0], 2, 2))
        jac[:, 0, 0] = -2.0 * self.a * x[:, 0]
        jac[:, 0, 1] = 1.0
        jac[:, 1, 0] = self.b
        return jac

    def _inverse(self, x):
        u = x[:, 1] / self.b
        return np.column_stack([u, x[:, 0] - 1.0 + self.a * u**2])

    def _inverse_jacobian(self, x):
        jac = np.zeros((x.shape[0], 2, 2))
        jac[:, 0, 1] = 1.0 / self.b
        jac[:, 1, 0] = 1.0
        jac[:, 1, 1] = 2.0 * self.a * x[:, 1] / self.b**2
        return jac

    def sample(self, budget, seed, transient=DEFAULT_TRANSIENT, orbits=64, **options):
        return _attractor_cloud(self, budget, seed, transient, orbits)


class ContractingAffine(System):
    """Affine contraction x -> A x + c on R^2; K is its fixed point."""

    name = "contracting_affine"
    reference_dimension = 0.0
    reference_note = "K is a single fixed point"

    def __init__(self, a11=0.5, a12=0.0, a21=0.0, a22=0.5, c1=0.0, c2=0.0):
        params = {"a11": a11, "a12": a12, "a21": a21, "a22": a22, "c1": c1, "c2": c2}
        params = {k: float(v) for k, v in params.items()}
        super().__init__(AmbientSpace.euclidean(2), params, [[-1.0, -1.0], [1.0, 1.0]])
        self.matrix = np.array([[params["a11"], params["a12"]], [params["a21"], params["a22"]]])
        self.offset = np.array([params["c1"], params["c2"]])
        if np.linalg.norm(self.matrix, 2) >= 1.0:
            raise InvalidInputError("contracting_affine requires operator norm of A below 1")
        det = float(np.linalg.det(self.matrix))
        self.has_inverse = self.is_diffeomorphism = det != 0.0
        self.inverse_matrix = np.linalg.inv(self.matrix) if self.has_inverse else None
        self.fixed_point = np.linalg.solve(np.eye(2) - self.matrix, self.offset)
        self.seed_box = np.array([self.fixed_point - 1.0, self.fixed_point + 1.0])
        self.box = self.seed_box.copy()

    def _map(self, x):
        return x @ self.matrix.T + self.offset

    def _jacobian(self, x):
        return np.broadcast_to(self.matrix, (x.shape[0], 2, 2)).copy()

    def _inverse(self, x):
        return (x - self.offset) @ self.inverse_matrix.T

    def _inverse_jacobian(self, x):
        return np.broadcast_to(self.inverse_matrix, (x.shape[0], 2, 2)).copy()

    def sample(self, budget, seed, transient=DEFAULT_TRANSIENT, orbits=64, **options):
        return _attractor_cloud(self, budget, seed, transient, orbits)


# ---------------------------------------------------------------------------
# sampler implementations


def _check_budget(budget):
    if int(budget) != budget or budget < 1:
        raise InvalidInputError(f"budget must be a positive integer, got {budget}")


def _integer_param(name, value, minimum):
    if float(value) != int(float(value)) or int(float(value)) < minimum:
        raise InvalidInputError(f"parameter {name} must be an integer >= {minimum}, got {value}")
    return int(float(value))


def _meta(system, method, seed, budget, transient, pts):
    return {
        "method": method,
        "seed": int(seed),
        "budget": int(budget),
        "transient": int(transient),
        "resolution": covering_resolution(system.ambient, pts),
    }


def _symbolic_cloud(system, budget, seed, depth):
    _check_budget(budget)
    depth = depth or system._default_depth()
    codes, tails = system._draw_codes(budget, seed, depth)
    values = system.ambient.wrap(system._decode(codes, tails))
    pts = values.reshape(-1, 1)
    meta = _meta(system, system.sampler_method, seed, budget, 0, pts)
    meta["depth"] = int(depth)
    return PointCloud(system.ambient, pts, meta, SymbolicOrbitData(codes, tails))


def _symbolic_orbit(system, cloud, steps):
    if cloud.symbolic is None:
        return System.forward_orbit(system, cloud, steps)
    codes = cloud.symbolic.codes
    exact = min(steps, codes.shape[1] - system._default_depth())
    decoded = system.ambient.wrap(system._suffix_decode(codes, cloud.symbolic.tail))
    out = np.empty((steps + 1, len(cloud), 1))
    out[0] = cloud.points
    out[1:exact + 1, :, 0] = decoded[1:exact + 1]
    for k in range(exact, steps):
        out[k + 1] = system.evaluate(out[k])
    return out


def _attractor_cloud(system, budget, seed, transient, orbits):
    """Independent forward orbits after a transient; orbit i is seeded by (seed, i)."""
    _check_budget(budget)
    orbits = int(min(orbits, budget))
    per_orbit = -(-budget // orbits)
    lo, hi = system.seed_box
    starts = np.empty((orbits, system.dim))
    attempts = np.zeros(orbits, dtype=int)
    for i in range(orbits):
        starts[i] = np.random.default_rng([seed, i, 0]).uniform(lo, hi)
    pending = np.arange(orbits)
    collected = np.empty((orbits, per_orbit, system.dim))
    while pending.size:
        x = starts[pending].copy()
        for _ in range(transient):
            x = system.evaluate(x)
        for j in range(per_orbit):
            collected[pending, j] = x
            x = system.evaluate(x)
        bad = escaped(collected[pending]).any(axis=1)
        pending = pending[bad]
        for i in pending:
            attempts[i] += 1
            if attempts[i] > ESCAPE_RETRIES:
                last = starts[i]
                raise SamplerError(
                    f"{system.name}: orbit {i} escaped {ESCAPE_RETRIES} times; last start {last.tolist()}",
                    escape_point=last,
                )
            starts[i] = np.random.default_rng([seed, i, int(attempts[i])]).uniform(lo, hi)
    pts = collected.reshape(-1, system.dim)[:budget]
    meta = _meta(system, "forward-iteration", seed, budget, transient, pts)
    meta["orbits"] = orbits
    return PointCloud(system.ambient, pts, meta)


# ---------------------------------------------------------------------------
# registry and module-level API

REGISTRY = {
    "cat_map": CatMap,
    "toral_endomorphism": ToralEndomorphism,
    "circle_expanding": CircleExpanding,
    "linear_horseshoe": LinearHorseshoe,
    "cookie_cutter": CookieCutter,
    "henon": Henon,
    "contracting_affine": ContractingAffine,
}


def make_system(name: str, **params) -> System:
    try:
        cls = REGISTRY[name]
    except KeyError:
        raise InvalidInputError(f"unknown system {name!r}; known: {', '.join(sorted(REGISTRY))}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise InvalidInputError(f"bad parameters for {name}: {exc}") from None


def evaluate(system: System, x):
    return system.evaluate(x)


def jacobian(system: System, x):
    return system.jacobian(x)


def inverse_evaluate(system: System, x):
    return system.inverse_evaluate(x)


def inverse_jacobian(system: System, x):
    return system.inverse_jacobian(x)


def sample_invariant_set(system: System, budget: int, seed: int, **options) -> PointCloud:
    return system.sample(budget, seed, **options)


def invariance_defect(system: System, cloud: PointCloud, inverse: bool = False) -> float:
    """Directed Hausdorff distance from f(cloud) (or f^-1(cloud)) to the cloud."""
    image = system.inverse_evaluate(cloud.points) if inverse else system.evaluate(cloud.points)
    if escaped(image).any():
        return math.inf
    box = 1.0 if system.ambient.is_torus else None
    tree = cKDTree(cloud.points, boxsize=box)
    dist, _ = tree.query(image, k=1)
    return float(dist.max())
