from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class FlowConfig:
    """Numerical knobs shared by critical-point search, flows and moduli.

    ``max_steps`` is the step budget of one trajectory; a trajectory that
    exhausts it is returned with ``budget_exhausted`` set.
    """

    initial_step: float = 0.05
    max_step: float = 0.5
    local_error_tol: float = 1e-9
    basin_radius: float = 0.05
    max_steps: int = 20000
    tol_crit: float = 1e-9
    tol_degenerate: float = 1e-6
    seed_grid_density: int = 24
    stable_cone_deg: float = 45.0
    shooting_radius: float = 1e-3
    chart_resolution: int = 64
    bisection_tol: float = 1e-10
    level_fraction: float = 0.1

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value <= 0:
                raise ValueError(f"FlowConfig.{f.name} must be positive, got {value!r}")
        if not self.basin_radius > self.tol_crit:
            raise ValueError("basin_radius must exceed tol_crit")
        if self.initial_step > self.max_step:
            raise ValueError("initial_step must not exceed max_step")

    def halved(self) -> "FlowConfig":
        """All integration tolerances halved."""
        return replace(self, local_error_tol=self.local_error_tol / 2, tol_crit=self.tol_crit / 2)

    def with_resolution(self, factor: int) -> "FlowConfig":
        return replace(self, chart_resolution=self.chart_resolution * factor)

    def override(self, **changes) -> "FlowConfig":
        known = {f.name for f in fields(self)}
        unknown = set(changes) - known
        if unknown:
            raise KeyError(f"unknown FlowConfig fields: {sorted(unknown)}")
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)
