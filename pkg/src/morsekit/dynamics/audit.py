"""Falsification audit for the Morse-Smale condition on surfaces."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..geometry import ImplicitManifold, ScalarField
from .config import FlowConfig
from .critical import CriticalPoint
from .flow import integrate_flow


@dataclass(frozen=True)
class Violation:
    source: str
    target: str
    direction: str

    def to_dict(self):
        return {"source": self.source, "target": self.target, "direction": self.direction}


@dataclass
class MorseSmaleReport:
    violations: list = field(default_factory=list)
    connection_counts: dict = field(default_factory=dict)
    rerun_counts: list = field(default_factory=list)
    checked: bool = True

    @property
    def stable(self) -> bool:
        return all(c == self.connection_counts for c in self.rerun_counts)

    @property
    def ok(self) -> bool:
        return not self.violations and self.stable

    def to_dict(self):
        return {
            "ok": self.ok,
            "checked": self.checked,
            "stable": self.stable,
            "violations": [v.to_dict() for v in self.violations],
            "connection_counts": {f"{k[0]}->{k[1]}": n for k, n in sorted(self.connection_counts.items())},
        }


def _shoot_saddles(m, f, crits, cfg):
    counts: dict = {}
    violations = []
    for s in crits:
        if s.index == 0 or s.index == m.dim:
            continue
        for direction, frame in (("forward", s.unstable_frame), ("backward", s.stable_frame)):
            for sign in (1.0, -1.0):
                x0 = m.retract_array(s.location + sign * cfg.shooting_radius * frame[:, 0])
                tr = integrate_flow(m, f, x0, direction, cfg, crits)
                end = tr.omega_limit if direction == "forward" else tr.alpha_limit
                if end is None:
                    continue
                target = next(c for c in crits if c.id == end)
                key = (s.id, end) if direction == "forward" else (end, s.id)
                counts[key] = counts.get(key, 0) + 1
                if target.index == s.index and target.id != s.id:
                    violations.append(Violation(s.id, end, direction))
    return counts, violations


def morse_smale_audit(
    m: ImplicitManifold,
    f: ScalarField,
    crits: list[CriticalPoint],
    cfg: FlowConfig | None = None,
    reruns: int = 3,
) -> MorseSmaleReport:
    """Shoot every saddle's separatrices and look for equal-index connections.

    Only surfaces are checked; in other dimensions the report is returned
    with ``checked=False``.  Connection counts are recomputed ``reruns``
    times with perturbed shooting radii and must agree.
    """
    cfg = cfg or FlowConfig()
    report = MorseSmaleReport()
    if m.dim != 2:
        report.checked = False
        return report
    counts, violations = _shoot_saddles(m, f, crits, cfg)
    report.connection_counts = counts
    # one record per unordered connection
    seen = set()
    for v in violations:
        key = tuple(sorted((v.source, v.target)))
        if key not in seen:
            seen.add(key)
            report.violations.append(v)
    for k in range(reruns):
        scale = 1.0 + 0.25 * (k + 1) * (-1) ** k
        rc, _ = _shoot_saddles(m, f, crits, replace(cfg, shooting_radius=cfg.shooting_radius * scale))
        report.rerun_counts.append(rc)
    return report


def unstable_shots(m: ImplicitManifold, p: CriticalPoint, radius: float) -> list[tuple[float, np.ndarray]]:
    """Points of the radius-``radius`` unstable 0-sphere of an index-1 point."""
    if p.index != 1:
        raise ValueError("needs an index-1 critical point")
    return [(s, m.retract_array(p.location + s * radius * p.unstable_frame[:, 0])) for s in (1.0, -1.0)]
