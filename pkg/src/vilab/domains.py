"""Feasible sets: probability simplex, Euclidean ball, box, and products.

Every domain is a compact convex subset of R^dim and offers the same small
toolkit: membership, Euclidean projection, diameter, a linear minimization
oracle (LMO), vertex enumeration where finite, covering-number upper bounds,
and uniform sampling. All point-valued operations accept batches: arrays of
shape (..., dim) are handled along the last axis.

Conventions
-----------
* Simplex(d) is the standard d-simplex embedded in R^{d+1}:
  {z : z >= 0, sum z = 1}, vertices e_1 .. e_{d+1}.
* contains(z, tol) means Euclidean distance from z to the set is <= tol.
* LMO(g) returns argmin_{u in Z} <g, u> with deterministic tie-breaking
  (lowest vertex index on the simplex, lower corner on boxes, center for
  g = 0 on balls).
* covering_number_upper(r, norm) never underestimates the true covering
  number N(Z, r, norm); constructions witnessing the box/ball counts are
  available via covering_points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import VertexEnumerationError

VERTEX_CAP = 20

_NORMS = ("l1", "l2", "linf")


def _check_norm(norm: str) -> None:
    if norm not in _NORMS:
        raise ValueError(f"unsupported norm {norm!r}, expected one of {_NORMS}")


def _as_points(z, dim: int) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape[-1:] != (dim,):
        raise ValueError(f"dimension mismatch: point has shape {z.shape}, domain dim is {dim}")
    return z


def _simplex_project(v: np.ndarray) -> np.ndarray:
    # Euclidean projection onto {x >= 0, sum x = 1}, batched on the last axis.
    # Sort descending, find the largest k with u_k > (cumsum_k - 1)/k, clip.
    m = v.shape[-1]
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    ks = np.arange(1, m + 1, dtype=float)
    cond = u - css / ks > 0.0
    rho = np.count_nonzero(cond, axis=-1)
    theta = np.take_along_axis(css, rho[..., None] - 1, axis=-1) / rho[..., None]
    return np.maximum(v - theta, 0.0)


class Domain:
    """Common interface; concrete variants carry the geometry."""

    dim: int

    # membership / projection -------------------------------------------------

    def distance(self, z) -> np.ndarray:
        """Euclidean distance from z (batched) to the set."""
        z = _as_points(z, self.dim)
        return np.linalg.norm(z - self.project(z), axis=-1)

    def contains(self, z, tol: float = 1e-9):
        """True where z is within tol of the set in the Euclidean norm."""
        return self.distance(z) <= tol

    def project(self, z) -> np.ndarray:
        raise NotImplementedError

    def contains_interior(self, z, margin: float):
        """True where z sits at least margin inside the boundary."""
        raise NotImplementedError

    # geometry ----------------------------------------------------------------

    def diameter(self, norm: str = "l2") -> float:
        raise NotImplementedError

    def center(self) -> np.ndarray:
        raise NotImplementedError

    def max_point_norm(self) -> float:
        """Exact max_{z in Z} ||z||_2 (vertices where finite, else closed form)."""
        raise NotImplementedError

    def lmo(self, g) -> np.ndarray:
        """Linear minimization oracle: argmin_{u in Z} <g, u>, batched."""
        raise NotImplementedError

    def vertices(self) -> Optional[list]:
        """Finite vertex list, or None when the set has no finite vertex set."""
        return None

    # covering ----------------------------------------------------------------

    def covering_number_upper(self, r: float, norm: str = "l2") -> int:
        raise NotImplementedError

    def covering_points(self, r: float, norm: str = "l2") -> np.ndarray:
        """An explicit cover at radius r. For Box/Ball its size equals
        covering_number_upper; for Simplex it is merely a valid cover."""
        raise NotImplementedError

    # sampling ----------------------------------------------------------------

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        raise NotImplementedError

    def sample_uniform(self, seed: int) -> np.ndarray:
        """One uniform draw from a generator seeded with `seed`."""
        return self.sample(np.random.default_rng(seed))


def _positive_radius(r: float) -> float:
    r = float(r)
    if not r > 0.0:
        raise ValueError(f"covering radius must be positive, got {r}")
    return r


@dataclass(eq=False)
class Simplex(Domain):
    """Standard d-simplex in R^{d+1}."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"simplex order must be >= 1, got {self.d}")
        self.dim = self.d + 1

    def project(self, z) -> np.ndarray:
        return _simplex_project(_as_points(z, self.dim))

    def contains_interior(self, z, margin: float):
        z = _as_points(z, self.dim)
        on_plane = np.abs(z.sum(axis=-1) - 1.0) <= 1e-9
        return on_plane & np.all(z >= margin, axis=-1)

    def diameter(self, norm: str = "l2") -> float:
        _check_norm(norm)
        # max over vertex pairs: ||e_i - e_j||
        return {"l1": 2.0, "l2": math.sqrt(2.0), "linf": 1.0}[norm]

    def center(self) -> np.ndarray:
        return np.full(self.dim, 1.0 / self.dim)

    def max_point_norm(self) -> float:
        return 1.0

    def lmo(self, g) -> np.ndarray:
        g = _as_points(g, self.dim)
        idx = np.argmin(g, axis=-1)  # lowest index on ties
        out = np.zeros(g.shape, dtype=float)
        np.put_along_axis(out, idx[..., None], 1.0, axis=-1)
        return out

    def vertices(self) -> list:
        return [np.eye(self.dim)[i] for i in range(self.dim)]

    def tangent_projector(self) -> np.ndarray:
        """Orthogonal projector onto the sum-zero subspace of the hull."""
        m = self.dim
        return np.eye(m) - np.full((m, m), 1.0 / m)

    def tangent_basis(self) -> np.ndarray:
        """Rows: an orthonormal basis of the sum-zero subspace, shape (d, d+1)."""
        ones = np.ones((1, self.dim))
        _, _, vh = np.linalg.svd(ones, full_matrices=True)
        return vh[1:]

    def covering_number_upper(self, r: float, norm: str = "l2") -> int:
        r = _positive_radius(r)
        _check_norm(norm)
        # volumetric bound inside the d-dimensional affine hull; the hull ball
        # has circumradius sqrt(d/(d+1)). l1 balls of radius r contain l2
        # balls of radius r/sqrt(d+1); linf covering is no harder than l2.
        radius = math.sqrt(self.d / (self.d + 1))
        eff = r / math.sqrt(self.dim) if norm == "l1" else r
        return int(math.ceil(1.0 + 2.0 * radius / eff)) ** self.d

    def covering_points(self, r: float, norm: str = "l2") -> np.ndarray:
        r = _positive_radius(r)
        _check_norm(norm)
        # barycentric grid: coordinates k/m with sum k = m. Rounding any
        # simplex point to the grid errs by at most 1/m per coordinate, so the
        # l1 covering radius is (d+1)/m and l2/linf radii are no larger.
        m = max(1, math.ceil(self.dim / r))
        pts = []

        def rec(prefix, remaining, slots):
            if slots == 1:
                pts.append(prefix + [remaining])
                return
            for k in range(remaining + 1):
                rec(prefix + [k], remaining - k, slots - 1)

        rec([], m, self.dim)
        return np.array(pts, dtype=float) / m

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        shape = (self.dim,) if size is None else (size, self.dim)
        e = rng.exponential(size=shape)
        return e / e.sum(axis=-1, keepdims=True)


@dataclass(eq=False)
class Ball(Domain):
    """Euclidean ball {z : ||z - center|| <= radius}."""

    center_point: np.ndarray
    radius: float

    def __post_init__(self):
        self.center_point = np.atleast_1d(np.asarray(self.center_point, dtype=float))
        self.radius = float(self.radius)
        if self.radius <= 0.0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        self.dim = self.center_point.shape[0]

    def project(self, z) -> np.ndarray:
        z = _as_points(z, self.dim)
        delta = z - self.center_point
        dist = np.linalg.norm(delta, axis=-1, keepdims=True)
        scale = np.where(dist > self.radius, self.radius / np.maximum(dist, 1e-300), 1.0)
        return self.center_point + delta * scale

    def contains_interior(self, z, margin: float):
        z = _as_points(z, self.dim)
        return np.linalg.norm(z - self.center_point, axis=-1) <= self.radius - margin

    def diameter(self, norm: str = "l2") -> float:
        _check_norm(norm)
        if norm == "l1":
            return 2.0 * self.radius * math.sqrt(self.dim)
        if norm == "linf":
            return 2.0 * self.radius
        return 2.0 * self.radius

    def center(self) -> np.ndarray:
        return self.center_point.copy()

    def max_point_norm(self) -> float:
        return float(np.linalg.norm(self.center_point)) + self.radius

    def lmo(self, g) -> np.ndarray:
        g = _as_points(g, self.dim)
        nrm = np.linalg.norm(g, axis=-1, keepdims=True)
        safe = np.maximum(nrm, 1e-300)
        step = np.where(nrm > 0.0, -self.radius * g / safe, 0.0)
        return self.center_point + step

    def covering_number_upper(self, r: float, norm: str = "l2") -> int:
        r = _positive_radius(r)
        _check_norm(norm)
        # standard volumetric bound for l2; linf covering is no harder; l1
        # balls of radius r contain l2 balls of radius r/sqrt(d).
        eff = r / math.sqrt(self.dim) if norm == "l1" else r
        return int(math.ceil(1.0 + 2.0 * self.radius / eff)) ** self.dim

    def covering_points(self, r: float, norm: str = "l2") -> np.ndarray:
        r = _positive_radius(r)
        _check_norm(norm)
        eff = r / math.sqrt(self.dim) if norm == "l1" else r
        per_axis = int(math.ceil(1.0 + 2.0 * self.radius / eff))
        # per_axis points spaced across [c-R, c+R] leave per-axis gaps of
        # R/ (per_axis-1) <= eff/... ; validated against a dense grid in tests.
        axes = []
        for i in range(self.dim):
            c = self.center_point[i]
            if per_axis == 1:
                axes.append(np.array([c]))
            else:
                axes.append(np.linspace(c - self.radius, c + self.radius, per_axis))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        n = 1 if size is None else size
        x = rng.standard_normal((n, self.dim))
        x /= np.maximum(np.linalg.norm(x, axis=-1, keepdims=True), 1e-300)
        u = rng.random(n) ** (1.0 / self.dim)
        pts = self.center_point + self.radius * u[:, None] * x
        return pts[0] if size is None else pts


@dataclass(eq=False)
class Box(Domain):
    """Axis-aligned box {z : lower <= z <= upper}."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape:
            raise ValueError("box bounds must share a shape")
        if not np.all(self.lower < self.upper):
            raise ValueError("box requires lower < upper coordinatewise")
        self.dim = self.lower.shape[0]

    def project(self, z) -> np.ndarray:
        return np.clip(_as_points(z, self.dim), self.lower, self.upper)

    def contains_interior(self, z, margin: float):
        z = _as_points(z, self.dim)
        return np.all((z >= self.lower + margin) & (z <= self.upper - margin), axis=-1)

    def diameter(self, norm: str = "l2") -> float:
        _check_norm(norm)
        sides = self.upper - self.lower
        if norm == "l1":
            return float(sides.sum())
        if norm == "linf":
            return float(sides.max())
        return float(np.linalg.norm(sides))

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def max_point_norm(self) -> float:
        return float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))

    def lmo(self, g) -> np.ndarray:
        g = _as_points(g, self.dim)
        # negative coefficients push to the upper face, ties go to lower
        return np.where(g < 0.0, self.upper, self.lower * np.ones_like(g))

    def vertices(self, cap: int = VERTEX_CAP) -> list:
        if self.dim > cap:
            raise VertexEnumerationError(
                f"vertex enumeration infeasible: box dimension {self.dim} exceeds cap {cap}"
            )
        corners = []
        for mask in range(2 ** self.dim):
            bits = (mask >> np.arange(self.dim)) & 1
            corners.append(np.where(bits == 1, self.upper, self.lower).astype(float))
        return corners

    def covering_number_upper(self, r: float, norm: str = "l2") -> int:
        r = _positive_radius(r)
        _check_norm(norm)
        sides = self.upper - self.lower
        scale = {"linf": 1.0, "l2": math.sqrt(self.dim), "l1": float(self.dim)}[norm]
        counts = np.maximum(1, np.ceil(sides * scale / (2.0 * r)).astype(int))
        return int(np.prod(counts))

    def covering_points(self, r: float, norm: str = "l2") -> np.ndarray:
        r = _positive_radius(r)
        _check_norm(norm)
        sides = self.upper - self.lower
        scale = {"linf": 1.0, "l2": math.sqrt(self.dim), "l1": float(self.dim)}[norm]
        counts = np.maximum(1, np.ceil(sides * scale / (2.0 * r)).astype(int))
        axes = []
        for i in range(self.dim):
            k = counts[i]
            step = sides[i] / k
            axes.append(self.lower[i] + step * (0.5 + np.arange(k)))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        shape = (self.dim,) if size is None else (size, self.dim)
        return self.lower + rng.random(shape) * (self.upper - self.lower)


@dataclass(eq=False)
class Product(Domain):
    """Cartesian product of factor domains, concatenated coordinates."""

    factors: tuple

    def __post_init__(self):
        self.factors = tuple(self.factors)
        if not self.factors:
            raise ValueError("product needs at least one factor")
        dims = [f.dim for f in self.factors]
        self.dim = int(sum(dims))
        offs = np.concatenate([[0], np.cumsum(dims)])
        self.slices = tuple(slice(int(a), int(b)) for a, b in zip(offs[:-1], offs[1:]))

    def split(self, z) -> list:
        z = _as_points(z, self.dim)
        return [z[..., s] for s in self.slices]

    def join(self, parts) -> np.ndarray:
        return np.concatenate([np.asarray(p, dtype=float) for p in parts], axis=-1)

    def project(self, z) -> np.ndarray:
        return self.join([f.project(p) for f, p in zip(self.factors, self.split(z))])

    def contains_interior(self, z, margin: float):
        parts = self.split(z)
        ok = self.factors[0].contains_interior(parts[0], margin)
        for f, p in zip(self.factors[1:], parts[1:]):
            ok = ok & f.contains_interior(p, margin)
        return ok

    def diameter(self, norm: str = "l2") -> float:
        _check_norm(norm)
        ds = [f.diameter(norm) for f in self.factors]
        if norm == "l2":
            return math.sqrt(sum(d * d for d in ds))
        if norm == "l1":
            return float(sum(ds))
        return float(max(ds))

    def center(self) -> np.ndarray:
        return self.join([f.center() for f in self.factors])

    def max_point_norm(self) -> float:
        return math.sqrt(sum(f.max_point_norm() ** 2 for f in self.factors))

    def lmo(self, g) -> np.ndarray:
        return self.join([f.lmo(p) for f, p in zip(self.factors, self.split(g))])

    def covering_number_upper(self, r: float, norm: str = "l2") -> int:
        r = _positive_radius(r)
        _check_norm(norm)
        k = len(self.factors)
        if norm == "l2":
            sub = r / math.sqrt(k)
        elif norm == "l1":
            sub = r / k
        else:
            sub = r
        out = 1
        for f in self.factors:
            out *= f.covering_number_upper(sub, norm)
        return out

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        parts = [f.sample(rng, size) for f in self.factors]
        return self.join(parts)
