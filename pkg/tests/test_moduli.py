from collections import Counter

import numpy as np
import pytest

from morsekit.algebra import homology
from morsekit.dynamics import integrate_flow
from morsekit.moduli import (
    BrokenTrajectory,
    InconsistentBoundary,
    ConnectingManifold1D,
    all_moduli,
    check_boundary,
    compactified_unstable,
    connecting_0d,
    connecting_1d,
    extract_loop,
    flow_base_path,
    level_distance,
    morse_complex,
)


class TestZeroDimensional:
    @pytest.mark.parametrize("pair", [("c1.0", "c0.0"), ("c1.1", "c0.0"), ("c2.0", "c1.0"), ("c2.0", "c1.1")])
    def test_torus_orbits_cancel_in_pairs(self, torus_moduli, pair):
        mod = torus_moduli.zero[pair]
        assert mod.count == 2
        assert mod.signed == 0
        assert mod.mod2 == 0
        assert len({o.key for o in mod.orbits}) == 2

    def test_bumpy_counts(self, bumpy_moduli):
        assert bumpy_moduli.zero[("c1.0", "c0.0")].count == 2
        assert bumpy_moduli.zero[("c2.0", "c1.0")].count == 1
        assert bumpy_moduli.zero[("c2.1", "c1.0")].count == 1

    def test_orbits_connect_their_endpoints(self, torus_ctx, torus_moduli):
        r = torus_ctx.cfg.basin_radius
        for (p, q), mod in torus_moduli.zero.items():
            for o in mod.orbits:
                tr = o.trajectory.flow_ordered()
                assert np.linalg.norm(tr.points[0] - torus_ctx.crit(p).location) < r
                assert np.linalg.norm(tr.points[-1] - torus_ctx.crit(q).location) < r
                assert np.all(np.diff(tr.f_values) < 0)

    def test_index_gap_enforced(self, torus_ctx):
        with pytest.raises(ValueError):
            connecting_0d(torus_ctx.crit("c2.0"), torus_ctx.crit("c0.0"), torus_ctx.chart("c2.0"))

    def test_morse_complex_homology(self, torus_ctx, torus_moduli, bumpy_ctx, bumpy_moduli):
        assert homology(morse_complex(torus_ctx, torus_moduli)).betti_list(2) == [1, 2, 1]
        assert homology(morse_complex(torus_ctx, torus_moduli, "Z2")).betti_list(2) == [1, 2, 1]
        assert homology(morse_complex(bumpy_ctx, bumpy_moduli)).betti_list(2) == [1, 0, 1]


class TestOneDimensional:
    def test_torus_arcs_and_ends(self, torus_ctx, torus_moduli):
        mod = torus_moduli.one[("c2.0", "c0.0")]
        assert len(mod.arcs) == 4
        assert len(mod.boundary_ends) == 8
        assert mod.closed_components == 0
        # two orbits into each saddle, two out of each: 2*2 + 2*2 broken ends
        want = Counter()
        for s in ("c1.0", "c1.1"):
            for a in torus_moduli.zero[("c2.0", s)].orbits:
                for b in torus_moduli.zero[(s, "c0.0")].orbits:
                    want[(a.key, b.key)] += 1
        assert mod.boundary_multiset() == want

    def test_ends_are_distinct_and_signs_cancel_on_each_arc(self, torus_moduli):
        mod = torus_moduli.one[("c2.0", "c0.0")]
        assert len(set(mod.boundary_multiset())) == 8
        for arc in mod.arcs:
            assert arc.lower.sign + arc.upper.sign == 0

    @pytest.mark.parametrize("top", ["c2.0", "c2.1"])
    def test_bumpy_arcs(self, bumpy_moduli, top):
        mod = bumpy_moduli.one[(top, "c0.0")]
        assert len(mod.arcs) == 1
        assert len(mod.boundary_ends) == 2
        assert {e.via for e in mod.boundary_ends} == {"c1.0"}

    def test_sphere_height_is_one_closed_circle(self, s2_ctx):
        mod = connecting_1d(s2_ctx.crit("c2.0"), s2_ctx.crit("c0.0"), s2_ctx.chart("c2.0"))
        assert mod.arcs == () and mod.closed_components == 1

    def test_wrong_boundary_is_detected(self, torus_ctx, torus_moduli):
        mod = torus_moduli.one[("c2.0", "c0.0")]
        broken = ConnectingManifold1D(mod.source, mod.target, mod.arcs[1:], 0)
        with pytest.raises(InconsistentBoundary):
            check_boundary(torus_ctx, broken)

    def test_arc_interior_points_flow_to_target(self, torus_ctx, torus_moduli):
        chart = torus_ctx.chart("c2.0")
        for arc in torus_moduli.one[("c2.0", "c0.0")].arcs:
            mid = arc.lo + 0.5 * ((arc.hi - arc.lo) % (2 * np.pi))
            assert chart.shot(mid % (2 * np.pi)).omega == "c0.0"


class TestLoops:
    def _base(self, ctx, moduli):
        orbits = [o for mod in moduli.zero.values() for o in mod.orbits]
        return flow_base_path(ctx.crits, orbits)

    def test_base_tree_reaches_every_point(self, torus_ctx, torus_moduli):
        w = self._base(torus_ctx, torus_moduli)
        for c in torus_ctx.crits:
            route = w.path_to(c.id)
            assert np.allclose(route[0], torus_ctx.crit(w.base).location)
            assert np.linalg.norm(route[-1] - c.location) < torus_ctx.cfg.basin_radius

    def test_constant_loop(self, torus_ctx, torus_moduli):
        w = self._base(torus_ctx, torus_moduli)
        c = torus_ctx.crit("c1.0")
        tr = integrate_flow(torus_ctx.m, torus_ctx.f, c.location, crits=torus_ctx.crits)
        loop = extract_loop(tr, w)
        assert loop.is_constant and loop.closed

    def test_loops_close_at_base_point(self, torus_ctx, torus_moduli):
        w = self._base(torus_ctx, torus_moduli)
        for mod in torus_moduli.zero.values():
            for o in mod.orbits:
                loop = extract_loop(o, w)
                assert loop.closed
                assert np.array_equal(loop.polyline[0], torus_ctx.crit(w.base).location)
                assert np.all(np.diff(loop.param) > 0)

    def test_broken_loop_is_concatenation(self, torus_ctx, torus_moduli):
        w = self._base(torus_ctx, torus_moduli)
        end = torus_moduli.one[("c2.0", "c0.0")].arcs[0].lower
        assert isinstance(end, BrokenTrajectory)
        whole = extract_loop(end, w)
        parts = extract_loop(end.first, w).concatenate(extract_loop(end.second, w))
        assert np.array_equal(whole.core, parts.core)
        assert np.array_equal(whole.param, parts.param)
        with pytest.raises(ValueError):
            extract_loop(end.second, w).concatenate(extract_loop(end.first, w))

    def test_level_distance_zero_on_itself(self, torus_moduli):
        tr = torus_moduli.zero[("c1.0", "c0.0")].orbits[0].trajectory
        other = torus_moduli.zero[("c1.0", "c0.0")].orbits[1].trajectory
        assert level_distance(tr, tr) == pytest.approx(0.0, abs=1e-12)
        assert level_distance(tr, other) > 0.1


class TestCompactification:
    @pytest.mark.parametrize("cid", ["c0.0", "c1.0", "c1.1", "c2.0"])
    def test_torus_cells_are_contractible(self, torus_ctx, cid):
        cu = compactified_unstable(cid, torus_ctx)
        assert cu.euler_characteristic == 1
        assert cu.index == torus_ctx.crit(cid).index

    def test_top_cell_of_torus(self, torus_ctx):
        cu = compactified_unstable("c2.0", torus_ctx)
        assert [len(cu.cells(k)) for k in range(3)] == [8, 8, 1]
        assert cu.boundary_index_set == frozenset({"c0.0", "c1.0", "c1.1"})

    def test_bumpy_maxima(self, bumpy_ctx):
        for top in ("c2.0", "c2.1"):
            cu = compactified_unstable(top, bumpy_ctx)
            assert cu.euler_characteristic == 1
            assert "c1.0" in cu.boundary_index_set
