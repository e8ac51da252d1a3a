"""Critical points of a field restricted to an implicit manifold."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..geometry import ImplicitManifold, NoConvergence, RankDeficient, ScalarField, UndefinedAtPoint
from .config import FlowConfig

log = logging.getLogger(__name__)


class DegenerateCritical(ArithmeticError):
    def __init__(self, location, eigenvalue):
        self.location = tuple(float(c) for c in location)
        self.eigenvalue = float(eigenvalue)
        super().__init__(f"degenerate critical point at {self.location} (eigenvalue {self.eigenvalue:.3g})")


@dataclass(frozen=True, eq=False)
class CriticalPoint:
    """A nondegenerate critical point with oriented eigenframes.

    Frames are ambient column matrices.  ``[unstable_frame | stable_frame]``
    is always a positive basis of the tangent space; ``stable_orientation``
    is the extra sign token fixing the orientation of the stable manifold.
    """

    id: str
    location: np.ndarray
    value: float
    index: int
    unstable_frame: np.ndarray
    stable_frame: np.ndarray
    eigenvalues: np.ndarray
    stable_orientation: int = 1
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def dim(self) -> int:
        return self.unstable_frame.shape[1] + self.stable_frame.shape[1]

    def unstable_coords(self, x) -> np.ndarray:
        return self.unstable_frame.T @ (np.asarray(x) - self.location)

    def stable_coords(self, x) -> np.ndarray:
        return self.stable_frame.T @ (np.asarray(x) - self.location)

    def summary(self) -> dict:
        return {
            "id": self.id,
            "index": self.index,
            "value": round(float(self.value), 10),
            "location": [round(float(c), 10) for c in self.location],
        }


def riemannian_gradient(m: ImplicitManifold, f: ScalarField, p) -> np.ndarray:
    _, g = f.value_grad(p)
    return m.tangent_project(p, np.array(g))


def tangential_hessian(m: ImplicitManifold, f: ScalarField, p):
    """Hessian of ``f|M`` at a critical point, in an oriented tangent basis.

    Uses ``Hess f - sum_i lambda_i Hess c_i`` with Lagrange multipliers from
    ``grad f = J^T lambda``.  Returns ``(H, T, lambda)`` with ``T`` the basis.
    """
    _, g, H = f.jet(p, 2)
    J = m.jacobian(p)
    lam = np.linalg.lstsq(J.T, g, rcond=None)[0] if J.shape[0] else np.zeros(0)
    for li, c in zip(lam, m.constraints):
        H = H - li * c.jet(p, 2)[2]
    T = m.tangent_basis(p)
    HT = T.T @ H @ T
    return 0.5 * (HT + HT.T), T, lam


def _newton(m, f, x, cfg: FlowConfig, max_iter=60):
    N, k = m.ambient_dim, len(m.constraints)
    _, g = f.value_grad(x)
    J = m.jacobian(x)
    lam = np.linalg.lstsq(J.T, np.array(g), rcond=None)[0]
    for _ in range(max_iter):
        _, g, H = f.jet(x, 2)
        J = m.jacobian(x)
        cvals = m.constraint_values(x)
        resid = g - J.T @ lam
        if np.linalg.norm(m.tangent_project(x, g)) < 0.1 * cfg.tol_crit and np.max(np.abs(cvals)) < m.tol_constraint:
            return x
        Hl = H.copy()
        for li, c in zip(lam, m.constraints):
            Hl -= li * c.jet(x, 2)[2]
        K = np.zeros((N + k, N + k))
        K[:N, :N] = Hl
        K[:N, N:] = -J.T
        K[N:, :N] = J
        rhs = -np.concatenate([resid, cvals])
        try:
            step = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            return None
        dx = step[:N]
        norm = np.linalg.norm(dx)
        if norm > 0.25:
            step *= 0.25 / norm
            dx = step[:N]
        x = x + dx
        lam = lam + step[N:]
        if np.linalg.norm(x) > 1e6:
            return None
        try:
            x = m.retract_array(x)
        except (NoConvergence, np.linalg.LinAlgError):
            return None
    return x


def _frames(m, p, H, T, cfg):
    w, V = np.linalg.eigh(H)
    small = np.abs(w) < cfg.tol_degenerate
    if np.any(small):
        raise DegenerateCritical(p, w[np.argmin(np.abs(w))])
    vecs = T @ V
    # deterministic eigenvector signs: largest component positive
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            vecs[:, j] = -col
    neg = w < 0
    U = vecs[:, neg]
    S = vecs[:, ~neg]
    full = np.concatenate([U, S], axis=1)
    if m.orientation_sign(p, full) < 0:
        # flip the last unstable vector when possible, else the last stable one
        if U.shape[1]:
            U = U.copy()
            U[:, -1] *= -1
        else:
            S = S.copy()
            S[:, -1] *= -1
    return w, U, S


def classify(m: ImplicitManifold, f: ScalarField, p, cfg: FlowConfig, ident: str = "?") -> CriticalPoint:
    p = np.asarray(p, dtype=float)
    H, T, lam = tangential_hessian(m, f, p)
    w, U, S = _frames(m, p, H, T, cfg)
    return CriticalPoint(
        id=ident,
        location=p,
        value=f.value(p),
        index=int(U.shape[1]),
        unstable_frame=U,
        stable_frame=S,
        eigenvalues=np.sort(w),
        multipliers=lam,
    )


def find_critical_points(m: ImplicitManifold, f: ScalarField, cfg: FlowConfig | None = None) -> list[CriticalPoint]:
    """Seeded Newton search for all critical points of ``f`` on ``m``.

    Returned points are sorted by index, then by decreasing value; ids are
    ``c{index}.{k}``.
    """
    cfg = cfg or FlowConfig()
    found: list[np.ndarray] = []
    for seed in m.seed_points(cfg.seed_grid_density):
        try:
            x = _newton(m, f, np.array(seed, dtype=float), cfg)
        except (UndefinedAtPoint, RankDeficient, np.linalg.LinAlgError):
            continue
        if x is None:
            continue
        if np.linalg.norm(riemannian_gradient(m, f, x)) >= cfg.tol_crit:
            continue
        if all(np.linalg.norm(x - y) > 10 * cfg.tol_crit for y in found):
            found.append(x)
    raw = [classify(m, f, x, cfg) for x in found]
    raw.sort(key=lambda c: (c.index, -round(c.value, 9), tuple(np.round(c.location, 9))))
    out = []
    counts: dict[int, int] = {}
    for c in raw:
        k = counts.get(c.index, 0)
        counts[c.index] = k + 1
        out.append(_with_id(c, f"c{c.index}.{k}"))
    defect = poincare_hopf_defect(m, out)
    if defect:
        log.warning("Poincare-Hopf audit failed for %s: sum (-1)^index differs from chi by %d", f.name, defect)
    return out


def _with_id(c: CriticalPoint, ident: str) -> CriticalPoint:
    return CriticalPoint(
        id=ident,
        location=c.location,
        value=c.value,
        index=c.index,
        unstable_frame=c.unstable_frame,
        stable_frame=c.stable_frame,
        eigenvalues=c.eigenvalues,
        stable_orientation=c.stable_orientation,
        multipliers=c.multipliers,
    )


def poincare_hopf_defect(m: ImplicitManifold, crits) -> int:
    """``sum (-1)^index - chi(M)``; zero when the audit passes or chi is unknown."""
    if m.euler_characteristic is None:
        return 0
    return sum((-1) ** c.index for c in crits) - m.euler_characteristic


def by_id(crits) -> dict:
    return {c.id: c for c in crits}
