import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morsekit.dynamics import (
    DegenerateCritical,
    FlowConfig,
    classify,
    find_critical_points,
    integrate_flow,
    morse_smale_audit,
    riemannian_gradient,
)
from morsekit.geometry import ScalarField, sphere, torus

from conftest import BUMPY_F, TORUS_F


def _indices(crits):
    return sorted(c.index for c in crits)


class TestCriticalPoints:
    def test_height_on_sphere(self, S2):
        crits = find_critical_points(S2, ScalarField("z", 3))
        assert _indices(crits) == [0, 2]
        by_index = {c.index: c for c in crits}
        assert np.allclose(by_index[0].location, (0, 0, -1), atol=1e-9)
        assert np.allclose(by_index[2].location, (0, 0, 1), atol=1e-9)
        assert by_index[2].value == pytest.approx(1.0, abs=1e-12)

    def test_ids_are_index_ordered(self, S2):
        crits = find_critical_points(S2, ScalarField(BUMPY_F, 3))
        assert [c.id for c in crits] == ["c0.0", "c1.0", "c2.0", "c2.1"]

    def test_tilted_torus(self, T2):
        assert _indices(find_critical_points(T2, ScalarField(TORUS_F, 3))) == [0, 1, 1, 2]

    def test_three_sphere(self):
        crits = find_critical_points(sphere(3), ScalarField("x4", 4))
        assert _indices(crits) == [0, 3]

    def test_circle_of_critical_points_is_degenerate(self):
        with pytest.raises(DegenerateCritical):
            find_critical_points(torus(2.0, 1.0, "z"), ScalarField("z", 3))

    def test_classify_saddle_frames(self, T2):
        f = ScalarField(TORUS_F, 3)
        s = next(c for c in find_critical_points(T2, f) if c.index == 1)
        c = classify(T2, f, s.location, FlowConfig(), "s")
        assert c.index == 1
        frame = np.hstack([c.unstable_frame, c.stable_frame])
        assert np.allclose(frame.T @ frame, np.eye(2), atol=1e-9)

    def test_gradient_vanishes_at_critical_points(self, T2):
        f = ScalarField(TORUS_F, 3)
        for c in find_critical_points(T2, f):
            assert np.linalg.norm(riemannian_gradient(T2, f, c.location)) < 1e-9

    @settings(max_examples=30, deadline=None)
    @given(theta=st.floats(0.05, math.pi - 0.05), phi=st.floats(0, 2 * math.pi))
    def test_gradient_is_tangent(self, theta, phi):
        S = sphere(2)
        p = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
        g = riemannian_gradient(S, ScalarField(BUMPY_F, 3), p)
        assert abs(float(g @ p)) < 1e-12


class TestFlows:
    def test_flow_reaches_minimum(self, S2):
        f = ScalarField("z", 3)
        crits = find_critical_points(S2, f)
        tr = integrate_flow(S2, f, S2.retract_array(np.array([1.0, 0.0, 0.001])), crits=crits)
        assert tr.omega_limit == "c0.0"
        assert not tr.budget_exhausted
        assert np.linalg.norm(tr.end - (0, 0, -1)) < FlowConfig().basin_radius

    def test_flow_from_critical_point_is_constant(self, S2):
        f = ScalarField("z", 3)
        crits = find_critical_points(S2, f)
        tr = integrate_flow(S2, f, (0.0, 0.0, 1.0), crits=crits)
        assert len(tr.points) == 1
        assert tr.alpha_limit == tr.omega_limit == "c2.0"

    def test_backward_flow_reaches_maximum(self, S2):
        f = ScalarField("z", 3)
        crits = find_critical_points(S2, f)
        tr = integrate_flow(S2, f, S2.retract_array(np.array([0.3, 0.9, -0.2])), "backward", crits=crits)
        assert tr.alpha_limit == "c2.0"

    def test_bad_direction(self, S2):
        with pytest.raises(ValueError):
            integrate_flow(S2, ScalarField("z", 3), (1.0, 0.0, 0.0), "sideways", crits=[])

    @settings(max_examples=15, deadline=None)
    @given(theta=st.floats(0.3, math.pi - 0.3), phi=st.floats(0, 2 * math.pi))
    def test_value_decreases_and_points_stay_on_manifold(self, theta, phi):
        S = sphere(2)
        f = ScalarField(BUMPY_F, 3)
        crits = _bumpy_crits()
        p = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
        tr = integrate_flow(S, f, p, crits=crits)
        assert np.all(np.diff(tr.f_values) < 0)
        assert max(S.residual(q) for q in tr.points) < 1e-10
        assert tr.omega_limit is not None


_CACHE = {}


def _bumpy_crits():
    if "bumpy" not in _CACHE:
        _CACHE["bumpy"] = find_critical_points(sphere(2), ScalarField(BUMPY_F, 3))
    return _CACHE["bumpy"]


class TestMorseSmaleAudit:
    def test_upright_torus_has_saddle_connection(self):
        T = torus(2.0, 1.0, "x")
        f = ScalarField("z", 3)
        rep = morse_smale_audit(T, f, find_critical_points(T, f))
        assert not rep.ok
        assert {(v.source, v.target) for v in rep.violations} <= {("c1.0", "c1.1"), ("c1.1", "c1.0")}
        assert rep.violations

    def test_tilted_torus_is_morse_smale(self, T2):
        f = ScalarField(TORUS_F, 3)
        rep = morse_smale_audit(T2, f, find_critical_points(T2, f))
        assert rep.ok and rep.stable
        # every saddle sends two separatrices down and two up
        down = sum(n for (a, b), n in rep.connection_counts.items() if b == "c0.0")
        assert down == 4

    def test_non_surface_is_unchecked(self):
        S3 = sphere(3)
        f = ScalarField("x4", 4)
        rep = morse_smale_audit(S3, f, find_critical_points(S3, f))
        assert rep.checked is False and rep.ok


class TestFlowConfig:
    def test_defaults_valid(self):
        cfg = FlowConfig()
        assert cfg.basin_radius > cfg.tol_crit

    @pytest.mark.parametrize("changes", [{"tol_crit": 0.0}, {"basin_radius": -1.0}, {"basin_radius": 1e-12}, {"initial_step": 5.0}])
    def test_rejects_bad_values(self, changes):
        with pytest.raises(ValueError):
            FlowConfig(**changes)

    def test_override_unknown_key(self):
        with pytest.raises(KeyError):
            FlowConfig().override(bogus=1)

    def test_halved_and_resolution(self):
        cfg = FlowConfig()
        h = cfg.halved()
        assert h.local_error_tol == cfg.local_error_tol / 2 and h.tol_crit == cfg.tol_crit / 2
        assert cfg.with_resolution(2).chart_resolution == 2 * cfg.chart_resolution
        assert FlowConfig(**cfg.to_dict()) == cfg
