"""Implicit submanifolds of Euclidean space and the catalog surfaces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import ScalarField

TOL_CONSTRAINT = 1e-10


class RankDeficient(ArithmeticError):
    pass


class NoConvergence(ArithmeticError):
    pass


@dataclass(frozen=True)
class AmbientPoint:
    coords: np.ndarray
    on_manifold_residual: float

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


@dataclass(frozen=True)
class ImplicitManifold:
    """``M = {c_1 = ... = c_k = 0}`` in R^N with the induced metric.

    Orientation: a tangent basis ``T`` is positive when
    ``det[T | grad c_1 .. grad c_k] > 0``.
    """

    ambient_dim: int
    constraints: tuple
    catalog_id: str | None = None
    params: dict = field(default_factory=dict, compare=False)
    euler_characteristic: int | None = None
    tol_constraint: float = TOL_CONSTRAINT

    @property
    def dim(self) -> int:
        return self.ambient_dim - len(self.constraints)

    # -- constraint services ---------------------------------------------

    def constraint_values(self, p) -> np.ndarray:
        return np.array([c.value(p) for c in self.constraints])

    def residual(self, p) -> float:
        return float(np.max(np.abs(self.constraint_values(p)))) if self.constraints else 0.0

    def jacobian(self, p) -> np.ndarray:
        return np.array([c.value_grad(p)[1] for c in self.constraints])

    def _values_jacobian(self, p):
        vals, rows = [], []
        for c in self.constraints:
            v, g = c.value_grad(p)
            vals.append(v)
            rows.append(g)
        return np.array(vals), np.array(rows)

    def tangent_project(self, p, v) -> np.ndarray:
        """Orthogonal projection of the ambient vector ``v`` onto ``T_pM``."""
        J = self.jacobian(p)
        v = np.asarray(v, dtype=float)
        return _project(J, v)

    def tangent_basis(self, p) -> np.ndarray:
        """Positively oriented orthonormal basis of ``T_pM`` as columns."""
        J = self.jacobian(p)
        _check_rank(J)
        k = J.shape[0]
        # complete the normal span to an orthonormal basis of R^N
        q, _ = np.linalg.qr(np.concatenate([J.T, np.eye(self.ambient_dim)], axis=1))
        T = q[:, k:self.ambient_dim]
        if np.linalg.det(np.concatenate([T, J.T], axis=1)) < 0:
            T = T.copy()
            T[:, -1] *= -1
        return T

    def orientation_sign(self, p, frame: np.ndarray) -> int:
        """+1 if the tangent vectors (columns of ``frame``) are positively oriented."""
        J = self.jacobian(p)
        return 1 if np.linalg.det(np.concatenate([frame, J.T], axis=1)) > 0 else -1

    def retract(self, p, *, check_basin: bool = True, max_newton_iters: int = 50) -> AmbientPoint:
        """Project ``p`` onto ``M`` by minimal-norm Gauss-Newton steps."""
        x = np.array(p, dtype=float)
        if not self.constraints:
            return AmbientPoint(x, 0.0)
        vals, J = self._values_jacobian(x)
        if check_basin and np.max(np.abs(vals)) >= 0.1:
            raise NoConvergence(f"point {tuple(x)} outside retraction basin (residual {np.max(np.abs(vals)):.3g})")
        for _ in range(max_newton_iters):
            res = float(np.max(np.abs(vals)))
            if res < 0.01 * self.tol_constraint:
                break
            _check_rank(J)
            x = x - J.T @ np.linalg.solve(J @ J.T, vals)
            vals, J = self._values_jacobian(x)
        res = float(np.max(np.abs(vals)))
        if res >= self.tol_constraint:
            raise NoConvergence(f"retraction did not converge from {tuple(p)} (residual {res:.3g})")
        return AmbientPoint(x, res)

    def retract_array(self, x: np.ndarray) -> np.ndarray:
        """Fast retraction used inside integrators; returns bare coordinates."""
        if len(self.constraints) == 1:
            return self._retract_hypersurface(x)
        vals, J = self._values_jacobian(x)
        for _ in range(20):
            if np.max(np.abs(vals)) < 0.01 * self.tol_constraint:
                return x
            x = x - J.T @ np.linalg.solve(J @ J.T, vals)
            vals, J = self._values_jacobian(x)
        if np.max(np.abs(vals)) >= self.tol_constraint:
            raise NoConvergence(f"retraction stalled at {tuple(x)}")
        return x

    def _retract_hypersurface(self, x):
        cg = self.constraints[0].compiled(1)
        t = x.tolist()
        tol = self.tol_constraint
        for _ in range(20):
            c, n = cg(t)
            if abs(c) < 0.01 * tol:
                return np.array(t)
            nn = sum(a * a for a in n)
            if nn == 0.0:
                raise RankDeficient("constraint gradient vanishes")
            s = c / nn
            t = [a - s * b for a, b in zip(t, n)]
        if abs(cg(t)[0]) >= tol:
            raise NoConvergence(f"retraction stalled at {tuple(t)}")
        return np.array(t)

    # -- catalog services --------------------------------------------------

    def seed_points(self, density: int) -> np.ndarray:
        """Deterministic seeds covering ``M`` (catalog manifolds only)."""
        if self.catalog_id == "sphere":
            return _sphere_seeds(self.ambient_dim, density)
        if self.catalog_id == "torus":
            u, v = np.meshgrid(
                (np.arange(density) + 0.5) * 2 * np.pi / density,
                (np.arange(density) + 0.25) * 2 * np.pi / density,
                indexing="ij",
            )
            return self.torus_point(u.ravel(), v.ravel())
        raise NotImplementedError("seed points need a catalog manifold")

    def random_points(self, count: int, rng: np.random.Generator) -> np.ndarray:
        if self.catalog_id == "sphere":
            x = rng.normal(size=(count, self.ambient_dim))
            return x / np.linalg.norm(x, axis=1, keepdims=True)
        if self.catalog_id == "torus":
            return self.torus_point(rng.uniform(0, 2 * np.pi, count), rng.uniform(0, 2 * np.pi, count))
        raise NotImplementedError("random points need a catalog manifold")

    # torus helpers: axis-adapted coordinates (a, b, c) with ``a`` the axis

    def _torus_perm(self):
        axis = self.params.get("axis", "z")
        return {"x": (1, 2, 0), "y": (0, 2, 1), "z": (0, 1, 2)}[axis]

    def torus_point(self, u, v) -> np.ndarray:
        """Point with longitude ``u`` (around the axis) and meridian angle ``v``."""
        R, r = self.params["R"], self.params["r"]
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        rho = R + r * np.cos(v)
        local = np.stack([rho * np.cos(u), rho * np.sin(u), r * np.sin(v)], axis=-1)
        i, j, k = self._torus_perm()
        out = np.empty_like(local)
        out[..., i] = local[..., 0]
        out[..., j] = local[..., 1]
        out[..., k] = local[..., 2]
        return out

    def torus_angles(self, p) -> np.ndarray:
        """Inverse of :meth:`torus_point`: ``(u, v)`` in ``(-pi, pi]``."""
        p = np.asarray(p, dtype=float)
        i, j, k = self._torus_perm()
        a, b, c = p[..., i], p[..., j], p[..., k]
        u = np.arctan2(b, a)
        v = np.arctan2(c, np.hypot(a, b) - self.params["R"])
        return np.stack([u, v], axis=-1)

    def chart(self, p) -> np.ndarray:
        """2D display/winding coordinates for catalog surfaces."""
        p = np.asarray(p, dtype=float)
        if self.catalog_id == "torus":
            return self.torus_angles(p)
        if self.catalog_id == "sphere" and self.ambient_dim == 3:
            lon = np.arctan2(p[..., 1], p[..., 0])
            lat = np.arcsin(np.clip(p[..., 2], -1.0, 1.0))
            return np.stack([lon, lat], axis=-1)
        raise NotImplementedError("no chart for this manifold")


def _project(J, v):
    if J.shape[0] == 1:
        n = J[0]
        nn = n @ n
        if nn == 0.0:
            raise RankDeficient("constraint gradient vanishes")
        return v - (n @ v) / nn * n
    _check_rank(J)
    return v - J.T @ np.linalg.solve(J @ J.T, J @ v)


def _check_rank(J):
    if J.shape[0] and np.linalg.matrix_rank(J) < J.shape[0]:
        raise RankDeficient("constraint Jacobian is rank deficient")


def _sphere_seeds(N, density):
    if N == 3:
        # Fibonacci lattice with ~density^2 points
        count = max(8, density * density)
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        phi = math.pi * (1 + 5 ** 0.5) * i
        rr = np.sqrt(1 - z * z)
        return np.stack([rr * np.cos(phi), rr * np.sin(phi), z], axis=1)
    # cube-surface grid projected radially
    g = np.linspace(-1, 1, max(3, density // 6))
    pts = []
    for axis in range(N):
        for sign in (-1.0, 1.0):
            grids = np.meshgrid(*([g] * (N - 1)), indexing="ij")
            face = np.stack([m.ravel() for m in grids], axis=1)
            full = np.insert(face, axis, sign, axis=1)
            pts.append(full)
    pts = np.unique(np.round(np.concatenate(pts), 12), axis=0)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def sphere(n: int = 2) -> ImplicitManifold:
    N = n + 1
    expr = " + ".join(f"x{i + 1}^2" for i in range(N)) + " - 1"
    return ImplicitManifold(
        ambient_dim=N,
        constraints=(ScalarField(expr, N, name="sphere"),),
        catalog_id="sphere",
        params={"n": n},
        euler_characteristic=2 if n % 2 == 0 else 0,
    )


def torus(R: float = 2.0, r: float = 1.0, axis: str = "z") -> ImplicitManifold:
    """Torus of revolution about coordinate ``axis`` (default z)."""
    if not R > r > 0:
        raise ValueError("torus needs R > r > 0")
    if axis not in ("x", "y", "z"):
        raise ValueError(f"axis must be x, y or z, got {axis!r}")
    others = [a for a in "xyz" if a != axis]
    expr = f"(sqrt({others[0]}^2 + {others[1]}^2) - {R!r})^2 + {axis}^2 - {r * r!r}"
    return ImplicitManifold(
        ambient_dim=3,
        constraints=(ScalarField(expr, 3, name="torus"),),
        catalog_id="torus",
        params={"R": float(R), "r": float(r), "axis": axis},
        euler_characteristic=0,
    )


CATALOG = {"sphere": sphere, "torus": torus}


def catalog_manifold(kind: str, **params) -> ImplicitManifold:
    if kind not in CATALOG:
        raise KeyError(kind)
    return CATALOG[kind](**params)
