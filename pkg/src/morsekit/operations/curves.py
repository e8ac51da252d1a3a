"""Curves on surfaces: separatrix tracing and transverse polyline intersections."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dynamics import CriticalPoint, FlowConfig, integrate_flow
from ..geometry import ImplicitManifold, ScalarField


class NonTransverse(ArithmeticError):
    pass


@dataclass(frozen=True)
class Crossing:
    point: np.ndarray
    i: int  # segment index on the first curve
    j: int  # segment index on the second curve
    sign: int  # orientation of (tangent_a, tangent_b, outward normal)
    sin_angle: float


def separatrices(
    m: ImplicitManifold,
    f: ScalarField,
    p: CriticalPoint,
    crits,
    cfg: FlowConfig,
    kind: str = "unstable",
) -> list[np.ndarray]:
    """The two flow lines leaving (``unstable``) or entering (``stable``) an index-1 point.

    Each is returned as a polyline starting at ``p`` and ending at the
    critical point it limits to, oriented away from ``p``.  Tracing
    ending anywhere but a sink of the flow direction raises.
    """
    if p.index != 1:
        raise ValueError("separatrices are traced from index-1 points")
    frame = p.unstable_frame if kind == "unstable" else p.stable_frame
    direction = "forward" if kind == "unstable" else "backward"
    sink = 0 if kind == "unstable" else m.dim
    sinks = [c.id for c in crits if c.index == sink]
    by_id = {c.id: c for c in crits}
    out = []
    for e in (1.0, -1.0):
        x0 = m.retract_array(p.location + e * cfg.shooting_radius * frame[:, 0])
        tr = integrate_flow(m, f, x0, direction, cfg, crits, stop=sinks)
        end = tr.omega_limit if kind == "unstable" else tr.alpha_limit
        if end not in sinks or tr.budget_exhausted:
            raise NonTransverse(f"{kind} separatrix of {p.id} ends at {end!r} instead of a sink")
        out.append(np.vstack([p.location[None, :], tr.points, by_id[end].location[None, :]]))
    return out


def crossings(m: ImplicitManifold, a: np.ndarray, b: np.ndarray, min_sin: float = 1e-3) -> list[Crossing]:
    """Transverse crossings of two polylines on ``m``.

    Each candidate segment pair is projected onto the tangent plane at its
    midpoint and intersected there; the lifted points must agree in space,
    which rules out pairs that only overlap in projection.  Parameters are
    half-open so a crossing at a shared vertex counts once.  A crossing at
    an angle with ``|sin| < min_sin`` raises :class:`NonTransverse`.
    """
    if len(a) < 2 or len(b) < 2:
        return []
    a0, a1 = a[:-1], a[1:]
    b0, b1 = b[:-1], b[1:]
    la = np.linalg.norm(a1 - a0, axis=1)
    lb = np.linalg.norm(b1 - b0, axis=1)
    lo_a, hi_a = np.minimum(a0, a1), np.maximum(a0, a1)
    lo_b, hi_b = np.minimum(b0, b1), np.maximum(b0, b1)
    # coarse filter on bounding boxes, padded for chord-versus-surface sag
    pad = (0.1 * (la[:, None] + lb[None, :]) + 1e-12)[..., None]
    ok = np.all(lo_a[:, None, :] <= hi_b[None, :, :] + pad, axis=2) & np.all(
        lo_b[None, :, :] <= hi_a[:, None, :] + pad, axis=2
    )
    out = []
    for i, j in zip(*np.nonzero(ok)):
        p0, p1, q0, q1 = a0[i], a1[i], b0[j], b1[j]
        mid = 0.25 * (p0 + p1 + q0 + q1)
        pm = m.retract_array(mid)
        T = m.tangent_basis(pm)
        e1, e2 = T[:, 0], T[:, 1]
        P0 = np.array([p0 @ e1, p0 @ e2])
        P1 = np.array([p1 @ e1, p1 @ e2])
        Q0 = np.array([q0 @ e1, q0 @ e2])
        Q1 = np.array([q1 @ e1, q1 @ e2])
        r, s = P1 - P0, Q1 - Q0
        den = r[0] * s[1] - r[1] * s[0]
        if den == 0.0:
            continue
        w = Q0 - P0
        t = (w[0] * s[1] - w[1] * s[0]) / den
        u = (w[0] * r[1] - w[1] * r[0]) / den
        if not (0.0 <= t < 1.0 and 0.0 <= u < 1.0):
            continue
        X = p0 + t * (p1 - p0)
        Y = q0 + u * (q1 - q0)
        if np.linalg.norm(X - Y) > 0.1 * (la[i] + lb[j]) + 1e-12:
            continue
        ta, tb = (p1 - p0) / la[i], (q1 - q0) / lb[j]
        normal = m.jacobian(pm)[0]
        normal = normal / np.linalg.norm(normal)
        det = float(np.cross(ta, tb) @ normal)
        sin = abs(det)
        if sin < min_sin:
            raise NonTransverse(f"curves cross tangentially at {tuple(np.round(X, 6))}")
        out.append(Crossing(0.5 * (X + Y), int(i), int(j), 1 if det > 0 else -1, sin))
    out.sort(key=lambda c: (c.i, c.j))
    return out


def check_clear(point, crit_sets, radius: float, what: str):
    """Raise :class:`NonTransverse` when ``point`` is within ``radius`` of a critical point."""
    for crits in crit_sets:
        for c in crits:
            if np.linalg.norm(np.asarray(point) - c.location) < radius:
                raise NonTransverse(f"{what} at {tuple(np.round(point, 6))} is within {radius} of {c.id}")


def winding(m: ImplicitManifold, loop: np.ndarray) -> tuple[int, int]:
    """Winding numbers ``(w_u, w_v)`` of a closed polyline on the catalog torus.

    Both torus angles are unwrapped along the polyline; a step of more than
    ``pi/2`` in either angle means the polyline is too coarse to lift.
    """
    if m.catalog_id != "torus":
        raise ValueError("winding numbers need the catalog torus")
    if np.linalg.norm(loop[0] - loop[-1]) > 1e-9:
        raise ValueError("polyline is not closed")
    ang = m.torus_angles(loop)
    steps = np.diff(ang, axis=0)
    steps = (steps + np.pi) % (2 * np.pi) - np.pi
    if len(steps) and np.max(np.abs(steps)) > np.pi / 2:
        raise ValueError("polyline too coarse to lift to the universal cover")
    total = steps.sum(axis=0) / (2 * np.pi)
    w = np.rint(total)
    if np.max(np.abs(total - w)) > 1e-6:
        raise ValueError(f"lifted loop does not close: {total}")
    return int(w[0]), int(w[1])
