"""Session-wide scenes shared by the numerical tests (each is computed once)."""

import math

import pytest

from morsekit.geometry import ScalarField, sphere, torus
from morsekit.moduli import FlowContext, all_moduli

TILT_30 = f"{math.cos(math.pi / 6)!r}*z + {math.sin(math.pi / 6)!r}*x"
BUMPY_F = "z + x^2"
BUMPY_G = "0.36*x + 0.48*y + 0.8*z + (0.8*x - 0.6*y)^2"
TORUS_F = "z + 0.1*x"


def tilted_height(beta: float) -> str:
    return f"{math.cos(beta)!r}*z + {math.sin(beta)!r}*y + 0.1*x"


TRIPLE_TILTS = (0.0, 0.9, 2.1)


@pytest.fixture(scope="session")
def S2():
    return sphere(2)


@pytest.fixture(scope="session")
def T2():
    return torus(2.0, 1.0, "x")


@pytest.fixture(scope="session")
def s2_ctx(S2):
    return FlowContext(S2, ScalarField("z", 3))


@pytest.fixture(scope="session")
def s2_g(S2):
    return FlowContext(S2, ScalarField(TILT_30, 3, name="g"))


@pytest.fixture(scope="session")
def bumpy_ctx(S2):
    return FlowContext(S2, ScalarField(BUMPY_F, 3))


@pytest.fixture(scope="session")
def bumpy_g(S2):
    return FlowContext(S2, ScalarField(BUMPY_G, 3, name="g"))


@pytest.fixture(scope="session")
def torus_ctx(T2):
    return FlowContext(T2, ScalarField(TORUS_F, 3))


@pytest.fixture(scope="session")
def torus_moduli(torus_ctx):
    return all_moduli(torus_ctx, one=True)


@pytest.fixture(scope="session")
def bumpy_moduli(bumpy_ctx):
    return all_moduli(bumpy_ctx, one=True)


@pytest.fixture(scope="session")
def triple_ctxs(T2, torus_ctx):
    out = [torus_ctx]
    for beta in TRIPLE_TILTS[1:]:
        out.append(FlowContext(T2, ScalarField(tilted_height(beta), 3)))
    return tuple(out)


# -- acceptance report -------------------------------------------------------

_CRITERIA: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    rep = outcome.get_result()
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "ok": True, "seconds": None})
    for key, value in item.user_properties:
        if key == "seconds":
            entry["seconds"] = value
    if rep.failed or (rep.when == "call" and rep.skipped):
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["ok"] else "FAIL"
        timing = f"  ({e['seconds']:.1f} s)" if e["seconds"] is not None else ""
        terminalreporter.write_line(f"criterion {n}: {status}  {e['title']}{timing}")
