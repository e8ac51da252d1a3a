import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from morsekit.geometry import (
    ExprSyntaxError,
    NoConvergence,
    ScalarField,
    UndefinedAtPoint,
    catalog_manifold,
    parse,
    sphere,
    torus,
)

EXPRESSIONS = [
    "z",
    "x^2 + y^2",
    "z + 0.4*x^2*z",
    "sin(x)*exp(y) - cos(z)^3",
    "sqrt(x^2 + y^2 + 4) / (1 + z^2)",
    "(sqrt(x^2 + y^2) - 2)^2 + z^2 - 1",
    "-x*y*z + 2^x",
]

coords = st.floats(min_value=-1.5, max_value=1.5, allow_nan=False)


def _sympy_jet(expr: str, p):
    x, y, z = sympy.symbols("x y z")
    e = sympy.sympify(expr.replace("^", "**"), locals={"x": x, "y": y, "z": z})
    sub = dict(zip((x, y, z), p))
    grad = [float(sympy.diff(e, v).subs(sub)) for v in (x, y, z)]
    hess = [[float(sympy.diff(e, a, b).subs(sub)) for b in (x, y, z)] for a in (x, y, z)]
    return float(e.subs(sub)), np.array(grad), np.array(hess)


class TestExpressions:
    def test_linear_field(self):
        v, g, _ = ScalarField("z", 3).jet((0, 0, 1))
        assert v == 1.0
        assert np.array_equal(g, [0, 0, 1])

    def test_quadratic_field(self):
        v, g, h = ScalarField("x^2 + y^2", 3).jet((1, 1, 0))
        assert v == 2.0
        assert np.array_equal(g, [2, 2, 0])
        assert np.array_equal(h, np.diag([2.0, 2.0, 0.0]))

    def test_syntax_error_position(self):
        with pytest.raises(ExprSyntaxError) as exc:
            ScalarField("z +", 3)
        assert exc.value.position == 3

    def test_unknown_name_position(self):
        with pytest.raises(ExprSyntaxError) as exc:
            parse("x + foo(y)")
        assert exc.value.position == 4

    def test_variable_beyond_ambient(self):
        with pytest.raises(ExprSyntaxError):
            ScalarField("x4", 3)

    def test_numbered_and_alias_variables_agree(self):
        a = ScalarField("x1*x2 + x3^2", 3)
        b = ScalarField("x*y + z^2", 3)
        p = (0.3, -1.2, 0.7)
        assert a.jet(p)[0] == b.jet(p)[0]

    def test_undefined_point(self):
        with pytest.raises(UndefinedAtPoint):
            ScalarField("1/x", 3).value((0.0, 1.0, 1.0))

    @pytest.mark.parametrize("expr", EXPRESSIONS)
    @settings(max_examples=15, deadline=None)
    @given(p=st.tuples(coords, coords, coords))
    def test_jet_matches_symbolic_derivatives(self, expr, p):
        if "sqrt(x^2 + y^2) -" in expr and math.hypot(p[0], p[1]) < 0.05:
            return  # sqrt is not smooth on the axis
        v, g, h = ScalarField(expr, 3).jet(p)
        sv, sg, sh = _sympy_jet(expr, p)
        assert v == pytest.approx(sv, rel=1e-12, abs=1e-12)
        assert np.allclose(g, sg, rtol=1e-10, atol=1e-10)
        assert np.allclose(h, sh, rtol=1e-9, atol=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(p=st.tuples(coords, coords, coords))
    def test_hessian_is_finite_difference_of_gradient(self, p):
        f = ScalarField("sin(x)*exp(y) - cos(z)^3 + x*y*z", 3)
        _, _, h = f.jet(p)
        eps = 1e-6
        fd = np.zeros((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = eps
            fd[:, j] = (np.array(f.value_grad(np.add(p, e))[1]) - np.array(f.value_grad(np.subtract(p, e))[1])) / (2 * eps)
        assert np.allclose(h, fd, atol=1e-6)

    def test_shifted_adds(self):
        f = ScalarField("z", 3).shifted("0.5*x")
        assert f.value((1.0, 0.0, 2.0)) == 2.5


class TestManifolds:
    def test_torus_constraint_vanishes_on_outer_equator(self):
        T = torus(2.0, 1.0)
        assert T.constraints[0].value((3.0, 0.0, 0.0)) == 0.0

    def test_dimensions_and_euler(self):
        assert sphere(2).dim == 2 and sphere(2).euler_characteristic == 2
        assert sphere(3).dim == 3 and sphere(3).euler_characteristic == 0
        assert torus().euler_characteristic == 0

    def test_catalog_rejects_unknown(self):
        with pytest.raises(KeyError):
            catalog_manifold("klein")

    def test_torus_parameters_validated(self):
        with pytest.raises(ValueError):
            torus(1.0, 2.0)

    @pytest.mark.parametrize(
        "p, v, want",
        [((0, 0, 1), (1, 0, 0), (1, 0, 0)), ((0, 0, 1), (0, 0, 5), (0, 0, 0)), ((1, 0, 0), (0, 0, 1), (0, 0, 1))],
    )
    def test_tangent_projection(self, p, v, want):
        assert np.allclose(sphere(2).tangent_project(p, v), want, atol=1e-15)

    def test_retraction_examples(self):
        S = sphere(2)
        assert np.allclose(S.retract((0, 0, 1.01)).coords, (0, 0, 1), atol=1e-12)
        assert np.allclose(S.retract((0.6, 0, 0.8)).coords, (0.6, 0, 0.8), atol=1e-15)
        assert np.allclose(S.retract((0, 0, 2), check_basin=False).coords, (0, 0, 1), atol=1e-12)
        with pytest.raises(NoConvergence):
            S.retract((0, 0, 2))

    @settings(max_examples=40, deadline=None)
    @given(p=st.tuples(coords, coords, coords))
    def test_tangent_basis_orthonormal_and_oriented(self, p):
        S = sphere(2)
        if np.linalg.norm(p) < 0.2:
            return
        x = np.asarray(p) / np.linalg.norm(p)
        T = S.tangent_basis(x)
        assert np.allclose(T.T @ T, np.eye(2), atol=1e-12)
        assert np.allclose(T.T @ x, 0, atol=1e-12)
        assert S.orientation_sign(x, T) == 1

    @settings(max_examples=40, deadline=None)
    @given(u=st.floats(0, 2 * math.pi), v=st.floats(0, 2 * math.pi))
    def test_torus_angles_round_trip(self, u, v):
        T = torus(2.0, 1.0, "x")
        p = T.torus_point(u, v)
        assert abs(T.constraints[0].value(p)) < 1e-12
        back = T.torus_point(*T.torus_angles(p))
        assert np.allclose(back, p, atol=1e-12)

    def test_seed_points_lie_near_manifold(self):
        for m in (sphere(2), torus(2.0, 1.0, "x")):
            pts = m.seed_points(8)
            fixed = np.array([m.retract_array(p) for p in pts])
            assert max(m.residual(p) for p in fixed) < 1e-10
