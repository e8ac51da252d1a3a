import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morsekit.geometry import ScalarField, sphere
from morsekit.moduli import FlowContext
from morsekit.operations import (
    DimensionMismatch,
    NonTransverse,
    TripleIntersectionProblem,
    crossings,
    densify,
    represent_T_class,
    triple_count,
    unstable_loop,
    winding,
)


def great_circle(normal, n=200, phase=0.0):
    normal = np.asarray(normal, float) / np.linalg.norm(normal)
    a = np.cross(normal, [0.3, 0.5, 0.7])
    a /= np.linalg.norm(a)
    b = np.cross(normal, a)
    s = np.linspace(0.0, 2 * math.pi, n) + phase
    pts = np.cos(s)[:, None] * a + np.sin(s)[:, None] * b
    pts[-1] = pts[0]
    return pts


class TestCrossings:
    def test_two_great_circles(self, S2):
        out = crossings(S2, great_circle((0, 0, 1)), great_circle((1, 0, 0)))
        assert len(out) == 2
        assert sorted(c.sign for c in out) == [-1, 1]
        for c in out:
            assert abs(c.point[0]) < 1e-2 and abs(c.point[2]) < 1e-2
            assert c.sin_angle == pytest.approx(1.0, abs=1e-3)

    def test_sign_flips_with_orientation(self, S2):
        a, b = great_circle((0, 0, 1)), great_circle((1, 0, 0))
        fwd = {tuple(np.round(c.point, 2)): c.sign for c in crossings(S2, a, b)}
        rev = {tuple(np.round(c.point, 2)): c.sign for c in crossings(S2, a, b[::-1])}
        swap = {tuple(np.round(c.point, 2)): c.sign for c in crossings(S2, b, a)}
        assert fwd.keys() == rev.keys() == swap.keys()
        assert all(rev[k] == -fwd[k] == swap[k] for k in fwd)

    @settings(max_examples=30, deadline=None)
    @given(nx=st.floats(-1, 1), ny=st.floats(-1, 1), phase=st.floats(0, 6.28))
    def test_great_circles_cross_twice_with_zero_sum(self, nx, ny, phase):
        S = sphere(2)
        n2 = np.array([nx, ny, 0.6])
        tilt = np.linalg.norm(np.cross(n2 / np.linalg.norm(n2), [0, 0, 1]))
        if tilt < 0.2:
            return
        out = crossings(S, great_circle((0, 0, 1), 150), great_circle(n2, 170, phase))
        assert len(out) == 2
        assert sum(c.sign for c in out) == 0

    def test_shared_vertex_counts_once(self, S2):
        # both polylines pass through (1, 0, 0) as a vertex
        a = np.array([[1, -0.1, 0], [1, 0, 0], [1, 0.1, 0]], float)
        b = np.array([[1, 0, -0.1], [1, 0, 0], [1, 0, 0.1]], float)
        a = np.array([S2.retract_array(p) for p in a])
        b = np.array([S2.retract_array(p) for p in b])
        assert len(crossings(S2, a, b)) == 1

    def test_tangential_crossing_raises(self, S2):
        eps = 2e-4
        with pytest.raises(NonTransverse):
            crossings(S2, great_circle((0, 0, 1), 400), great_circle((0, math.sin(eps), math.cos(eps)), 400))

    def test_disjoint_and_short(self, S2):
        far = np.array([[0, 0, 1.0], [0, 0.1, 0.995]])
        assert crossings(S2, great_circle((0, 0, 1)), far) == []
        assert crossings(S2, far[:1], far) == []

    def test_densify_keeps_points_on_manifold(self, S2):
        c, s = math.cos(0.3), math.sin(0.3)
        pts = np.array([[1, 0, 0], [c, s, 0], [c, 0, s]], float)
        d = densify(S2, pts, 0.05)
        assert len(d) == 3 + 5 + 8
        # retraction stretches chords only slightly on a short arc
        assert np.max(np.linalg.norm(np.diff(d, axis=0), axis=1)) <= 0.05 * 1.02
        assert max(S2.residual(p) for p in d) < 1e-10


class TestRepresentingCycles:
    def test_round_sphere_top_class(self, s2_ctx, s2_g):
        cyc = represent_T_class(s2_ctx, "c2.0", "c0.0", s2_g)
        assert cyc.degree == 2
        assert cyc.coefficients == {"c2.0": 1}
        assert cyc.is_cycle and cyc.homology_nonzero
        assert cyc.fundamental_pairing() == 1

    def test_bumpy_degree_one_cycles_are_exact(self, bumpy_ctx, bumpy_g):
        for x, y in [("c2.0", "c1.0"), ("c2.1", "c1.0"), ("c1.0", "c0.0")]:
            cyc = represent_T_class(bumpy_ctx, x, y, bumpy_g)
            assert cyc.is_cycle and not cyc.homology_nonzero

    def test_bumpy_degree_two_chains_split_the_class(self, bumpy_ctx, bumpy_g):
        a = represent_T_class(bumpy_ctx, "c2.0", "c0.0", bumpy_g, require_cycle=False)
        b = represent_T_class(bumpy_ctx, "c2.1", "c0.0", bumpy_g, require_cycle=False)
        # neither chain is a cycle, but together every maximum of g is hit once
        assert not a.is_cycle and not b.is_cycle
        total = {s: (a.coefficients[s] + b.coefficients[s]) % 2 for s in a.coefficients}
        assert total == {"c2.0": 1, "c2.1": 1}
        assert a.fundamental_pairing() + b.fundamental_pairing() == 1
        with pytest.raises(ArithmeticError):
            represent_T_class(bumpy_ctx, "c2.0", "c0.0", bumpy_g)

    def test_index_gap_checked(self, s2_ctx, s2_g):
        with pytest.raises(ValueError):
            represent_T_class(s2_ctx, "c0.0", "c0.0", s2_g)

    def test_fields_must_share_manifold(self, s2_ctx):
        other = FlowContext(sphere(2), ScalarField("z", 3))
        with pytest.raises(ValueError):
            represent_T_class(s2_ctx, "c2.0", "c0.0", other)


TRIPLES = [
    ("c1.0", "c1.1", 1),
    ("c1.1", "c1.0", 1),
    ("c1.0", "c1.0", 0),
    ("c1.1", "c1.1", 0),
]


class TestTripleCounts:
    @pytest.mark.parametrize("x, y, want", TRIPLES)
    def test_counts_match_winding_oracle(self, triple_ctxs, x, y, want):
        res = triple_count(TripleIntersectionProblem(triple_ctxs, x, y, "c0.0"))
        assert res.mod2 == want
        assert res.signed == res.oracle
        assert res.mod2 == res.oracle % 2
        assert len(res.points) % 2 == res.mod2

    def test_swap_keeps_parity(self, triple_ctxs):
        a = triple_count(TripleIntersectionProblem(triple_ctxs, "c1.0", "c1.1", "c0.0"))
        swapped = (triple_ctxs[1], triple_ctxs[0], triple_ctxs[2])
        b = triple_count(TripleIntersectionProblem(swapped, "c1.1", "c1.0", "c0.0"))
        assert a.mod2 == b.mod2
        assert a.signed == -b.signed

    def test_unstable_loops_generate(self, triple_ctxs):
        ctx = triple_ctxs[0]
        w = {x: winding(ctx.m, unstable_loop(ctx, x)) for x in ("c1.0", "c1.1")}
        det = w["c1.0"][0] * w["c1.1"][1] - w["c1.0"][1] * w["c1.1"][0]
        assert abs(det) == 1

    def test_points_lie_on_the_surface(self, triple_ctxs):
        res = triple_count(TripleIntersectionProblem(triple_ctxs, "c1.0", "c1.0", "c0.0"))
        for p in res.points:
            # crossings are located on chords of 0.05 so they sit within the sag of the surface
            assert triple_ctxs[0].m.residual(p) < 1e-3

    def test_dimension_mismatch(self, triple_ctxs):
        with pytest.raises(DimensionMismatch):
            TripleIntersectionProblem(triple_ctxs, "c1.0", "c1.1", "c1.0")

    def test_dimension_mismatch_on_sphere(self, s2_ctx, s2_g):
        with pytest.raises(DimensionMismatch):
            TripleIntersectionProblem((s2_ctx, s2_g, s2_ctx), "c2.0", "c2.0", "c0.0")
        with pytest.raises(NotImplementedError):
            triple_count(TripleIntersectionProblem((s2_ctx, s2_g, s2_ctx), "c2.0", "c0.0", "c0.0"))

    def test_needs_three_fields(self, triple_ctxs):
        with pytest.raises(ValueError):
            TripleIntersectionProblem(triple_ctxs[:2], "c1.0", "c1.1", "c0.0")
