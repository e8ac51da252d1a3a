"""Negative gradient flow on an implicit manifold.

Dormand-Prince 5(4) steps on the ambient vector field ``-P_T grad f``,
each accepted step retracted back onto the manifold.  A step is only
accepted when ``f`` strictly decreases (increases for backward flows).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import ImplicitManifold, ScalarField
from .config import FlowConfig
from .critical import CriticalPoint, find_critical_points

_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))
_A_ROWS = [np.array(a) for a in _A]
_B5_ROW = np.array(_B5[:6])
_E_ROW = np.array(_E)


class StepSizeUnderflow(ArithmeticError):
    pass


@dataclass(frozen=True)
class Pass:
    """A trajectory entering and leaving the basin of a critical point."""

    crit: str
    side: int  # sign of the first unstable coordinate on exit
    closest: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    points: np.ndarray
    f_values: np.ndarray
    direction: str = "forward"
    alpha_limit: str | None = None
    omega_limit: str | None = None
    budget_exhausted: bool = False
    passes: tuple = field(default_factory=tuple)

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def flow_ordered(self) -> "Trajectory":
        """The same trajectory listed in the direction of the negative flow."""
        if self.direction == "forward":
            return self
        return Trajectory(
            points=self.points[::-1].copy(),
            f_values=self.f_values[::-1].copy(),
            direction="forward",
            alpha_limit=self.alpha_limit,
            omega_limit=self.omega_limit,
            budget_exhausted=self.budget_exhausted,
            passes=tuple(reversed(self.passes)),
        )


def flow_field(m: ImplicitManifold, f: ScalarField, sign: float):
    """Ambient vector field ``sign * P_T grad f`` as a fast closure."""
    fgrad = f.value_grad
    cons = m.constraints
    if len(cons) == 1:
        fg = f.compiled(1)
        cg = cons[0].compiled(1)

        def V(x):
            t = x.tolist()
            try:
                g = fg(t)[1]
                n = cg(t)[1]
            except (ZeroDivisionError, OverflowError, ValueError):
                f.value_grad(t)
                cons[0].value_grad(t)
                raise
            c = sum(a * b for a, b in zip(n, g)) / sum(a * a for a in n)
            return np.array([sign * (a - c * b) for a, b in zip(g, n)])

        return V

    def V(x):
        g = np.array(fgrad(tuple(x))[1])
        return sign * m.tangent_project(x, g)

    return V


def integrate_flow(
    m: ImplicitManifold,
    f: ScalarField,
    x0,
    direction: str = "forward",
    cfg: FlowConfig | None = None,
    crits: list[CriticalPoint] | None = None,
    stop=None,
    alpha_limit: str | None = None,
    omega_limit: str | None = None,
) -> Trajectory:
    """Integrate ``x' = -grad f`` (``+grad f`` when backward) from ``x0``.

    The run ends when it enters the basin of a critical point in ``stop``
    (default: all of ``crits``) moving inside that point's stable cone
    (unstable cone for backward runs), or when the step budget runs out.
    Sinks of the chosen direction are always terminal.  Basins of the
    other critical points are recorded in ``passes`` as they are crossed.
    """
    cfg = cfg or FlowConfig()
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    if crits is None:
        crits = find_critical_points(m, f, cfg)
    forward = direction == "forward"
    sgn = -1.0 if forward else 1.0
    V = flow_field(m, f, sgn)
    sink_index = 0 if forward else m.dim
    stop_ids = {c.id for c in crits} if stop is None else set(stop)
    stop_ids |= {c.id for c in crits if c.index == sink_index}

    locs = np.array([c.location for c in crits]) if crits else np.zeros((0, m.ambient_dim))
    cone = math.cos(math.radians(cfg.stable_cone_deg))
    r_b = cfg.basin_radius

    x = np.array(x0, dtype=float)
    fx = f.value(x)
    v = V(x)
    if np.linalg.norm(v) < cfg.tol_crit:
        hit = _nearest(locs, x, r_b)
        cid = crits[hit].id if hit is not None else None
        return Trajectory(np.array([x]), np.array([fx]), direction, cid, cid, False, ())

    points = [x]
    values = [fx]
    passes: list[Pass] = []
    inside: dict[int, float] = {}
    # a basin we start in (usually the source of a shot) is not a pass
    leaving = set(np.nonzero(np.sqrt(np.sum((locs - x) ** 2, axis=1)) < r_b)[0]) if len(locs) else set()
    h = cfg.initial_step
    tol = cfg.local_error_tol
    terminal = None
    exhausted = True

    for _ in range(cfg.max_steps):
        # -- one adaptive step --------------------------------------------
        stalled = False
        while True:
            if h < 1e-13:
                stalled = True
                break
            K = np.empty((7, x.size))
            K[0] = v
            for j in range(1, 7):
                K[j] = V(x + h * (_A_ROWS[j] @ K[:j]))
            y5 = x + h * (_B5_ROW @ K[:6])
            err = float(np.max(np.abs(h * (_E_ROW @ K))))
            ratio = err / tol
            if ratio <= 1.0:
                y = m.retract_array(y5)
                fy = f.value(y)
                if (fy < fx) if forward else (fy > fx):
                    break
                h *= 0.5
                continue
            h *= max(0.2, 0.9 * ratio ** -0.2)
        if stalled:
            # no representable descent left: only legitimate while converging
            # onto a critical point whose basin we are already inside
            if inside:
                terminal = crits[min(inside, key=inside.get)].id
                exhausted = False
                break
            raise StepSizeUnderflow(f"step size underflow at {tuple(x)}")
        factor = 5.0 if ratio == 0 else min(5.0, max(0.2, 0.9 * ratio ** -0.2))
        h = min(cfg.max_step, h * factor)
        x, fx = y, fy
        v = V(x)
        points.append(x)
        values.append(fx)

        # -- basin bookkeeping --------------------------------------------
        if len(locs):
            d = np.sqrt(np.sum((locs - x) ** 2, axis=1))
            leaving = {i for i in leaving if d[i] < r_b}
            for i in np.nonzero(d < r_b)[0]:
                c = crits[i]
                if i in leaving and c.id not in stop_ids:
                    continue
                if c.id in stop_ids:
                    frame = c.stable_frame if forward else c.unstable_frame
                    vn = np.linalg.norm(v)
                    if vn == 0.0 or np.linalg.norm(frame.T @ v) >= cone * vn:
                        terminal = c.id
                        break
                else:
                    inside[i] = min(inside.get(i, np.inf), float(d[i]))
            if terminal is not None:
                exhausted = False
                break
            for i in [i for i in inside if d[i] >= r_b]:
                c = crits[i]
                frame = c.unstable_frame if forward else c.stable_frame
                coord = frame.T @ (x - c.location)
                side = int(np.sign(coord[0])) if coord.size else 0
                passes.append(Pass(c.id, side, inside.pop(i)))

    if forward:
        alpha, omega = alpha_limit, terminal if terminal is not None else omega_limit
    else:
        alpha, omega = terminal if terminal is not None else alpha_limit, omega_limit
    return Trajectory(
        points=np.array(points),
        f_values=np.array(values),
        direction=direction,
        alpha_limit=alpha,
        omega_limit=omega,
        budget_exhausted=exhausted,
        passes=tuple(passes),
    )


def _nearest(locs, x, radius):
    if not len(locs):
        return None
    d = np.sqrt(np.sum((locs - x) ** 2, axis=1))
    i = int(np.argmin(d))
    return i if d[i] < radius else None
