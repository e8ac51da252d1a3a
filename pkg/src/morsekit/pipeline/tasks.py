"""Task implementations: each turns a scene into a JSON-ready result with invariant checks."""

from __future__ import annotations

import random
import threading
from collections import Counter

import numpy as np

from ..algebra import (
    FilteredComplex,
    FreeChainComplex,
    compare_pages,
    homology,
    spectral_sequence,
    truncate_table,
    verify_d_squared,
)
from ..discrete import corpus, discrete_morse_complex, greedy_discrete_gradient, random_discrete_gradient
from ..dynamics import morse_smale_audit
from ..dynamics.critical import poincare_hopf_defect
from ..geometry import ScalarField
from ..loops import (
    CoefficientClass,
    GroupRingModel,
    LeibnizViolation,
    NotConsecutive,
    assemble_extended_complex,
    base_change_factors,
    coefficient_class_0d,
    coefficient_class_1d,
    path_loop_pages,
    rebase_class,
    relative_class_1d,
    sphere_loop_model,
)
from ..moduli import (
    FlowContext,
    InconsistentBoundary,
    all_moduli,
    chart_base_path,
    check_boundary,
    connecting_1d,
    expected_boundary,
    flow_base_path,
    morse_complex,
)
from ..operations import TripleIntersectionProblem, represent_T_class, separatrices, triple_count

# perturbations of the scene fields used for rerun certificates
PERTURBATIONS = ("0.001*y", "-0.001*z", "0.001*x")
POLYLINE_DIGITS = 8


class MorseSmaleViolation(ArithmeticError):
    pass


def _r(x, digits=10):
    return round(float(x), digits)


def polyline(points, max_points: int = 400) -> list:
    pts = np.asarray(points, dtype=float)
    if len(pts) > max_points:
        idx = np.unique(np.r_[np.linspace(0, len(pts) - 1, max_points).round().astype(int), len(pts) - 1])
        pts = pts[idx]
    return [[_r(c, POLYLINE_DIGITS) for c in p] for p in pts]


def check(name: str, ok: bool, detail="") -> dict:
    return {"name": name, "ok": bool(ok), "detail": str(detail)}


class Session:
    """In-memory state shared by the tasks of one run; built lazily."""

    def __init__(self, spec):
        self.spec = spec
        self.cfg = spec.flow_config()
        self.results: dict = {}
        self.numeric = threading.RLock()
        self._m = None
        self._ctx: dict = {}
        self._zero: dict = {}

    @property
    def m(self):
        if self._m is None:
            self._m = self.spec.build_manifold()
        return self._m

    def field(self, name: str, extra: str | None = None) -> ScalarField:
        f = ScalarField(self.spec.fields[name], self.m.ambient_dim, name=name)
        return f.shifted(extra) if extra else f

    def ctx(self, name: str, extra: str | None = None) -> FlowContext:
        key = (name, extra)
        if key not in self._ctx:
            self._ctx[key] = FlowContext(self.m, self.field(name, extra), cfg=self.cfg)
        return self._ctx[key]

    def moduli0(self, name: str):
        if name not in self._zero:
            self._zero[name] = all_moduli(self.ctx(name), one=False)
        return self._zero[name]

    def param(self, task: str, key: str, default=None):
        return self.spec.task_params(task).get(key, default)

    def main_field(self, task: str) -> str:
        return self.param(task, "field", "f")


# -- numerical tasks -------------------------------------------------------------


def task_critical(s: Session) -> dict:
    name = s.main_field("critical")
    ctx = s.ctx(name)
    m = s.m
    top = m.dim
    by_index = [sum(1 for c in ctx.crits if c.index == k) for k in range(top + 1)]
    res = {
        "field": name,
        "expression": s.spec.fields[name],
        "count": len(ctx.crits),
        "by_index": by_index,
        "points": [c.summary() for c in ctx.crits],
    }
    checks = []
    defect = poincare_hopf_defect(m, ctx.crits)
    checks.append(check("poincare-hopf", defect == 0, f"sum (-1)^index - chi = {defect}"))
    expect = s.param("critical", "expect_counts")
    if expect is not None:
        checks.append(check("critical-counts", list(expect) == by_index, f"got {by_index}, expected {list(expect)}"))
    if m.dim == 2:
        audit = morse_smale_audit(m, ctx.f, ctx.crits, s.cfg)
        res["morse_smale"] = audit.to_dict()
        want = bool(s.param("critical", "expect_morse_smale", True))
        checks.append(check("morse-smale", audit.ok == want, f"audit ok={audit.ok}, expected {want}"))
        checks.append(check("audit-stable", audit.stable, "connection counts agree over reruns"))
    res["checks"] = checks
    return res


def _require_morse_smale(s: Session, task: str):
    ms = s.results.get("critical", {}).get("morse_smale")
    if ms is not None and not ms["ok"]:
        raise MorseSmaleViolation(f"{task} needs a Morse-Smale flow; the audit found {ms['violations']}")


def task_flow(s: Session) -> dict:
    name = s.main_field("flow")
    ctx = s.ctx(name)
    if s.m.dim != 2:
        return {"field": name, "separatrices": [], "note": "flow lines are traced on surfaces", "checks": []}
    lines, geometry, checks = [], [], []
    for p in ctx.crits:
        if p.index != 1:
            continue
        for kind in ("unstable", "stable"):
            for branch, pts in zip("+-", separatrices(s.m, ctx.f, p, ctx.crits, ctx.cfg, kind=kind)):
                end = _nearest(ctx.crits, pts[-1])
                lines.append({"crit": p.id, "kind": kind, "branch": branch, "end": end})
                geometry.append({"id": f"{p.id}:{kind}{branch}", "kind": "separatrix", "label": kind, "points": polyline(pts)})
    sinks = Counter((ln["crit"], ln["kind"], ln["end"]) for ln in lines)
    res = {"field": name, "separatrices": lines, "endpoint_counts": {f"{a}:{b}->{c}": n for (a, b, c), n in sorted(sinks.items())}}
    res["geometry"] = {"polylines": geometry, "markers": _crit_markers(ctx)}
    res["checks"] = checks
    return res


def _nearest(crits, x) -> str:
    return min(crits, key=lambda c: float(np.linalg.norm(c.location - x))).id


def _crit_markers(ctx) -> list:
    return [{"kind": "critical", "label": f"{c.id}", "index": c.index, "point": polyline([c.location])[0]} for c in ctx.crits]


def task_complex(s: Session) -> dict:
    _require_morse_smale(s, "complex")
    name = s.main_field("complex")
    ctx = s.ctx(name)
    mods = s.moduli0(name)
    CZ = morse_complex(ctx, mods, "Z")
    C2 = morse_complex(ctx, mods, "Z2")
    checks = []
    for C in (CZ, C2):
        w = verify_d_squared(C)
        checks.append(check(f"d-squared-{C.ring}", w is None, w or "d o d = 0"))
    return {
        "field": name,
        "complex_Z": CZ.to_dict(),
        "complex_Z2": C2.to_dict(),
        "moduli_0d": mods.to_dict()["zero"],
        "checks": checks,
    }


def reference_complex(m):
    """Simplicial model of a catalog manifold, the homology oracle."""
    from ..discrete import sphere_boundary, torus7

    if m.catalog_id == "sphere":
        return sphere_boundary(m.params["n"])
    if m.catalog_id == "torus":
        return torus7()
    return None


def task_homology(s: Session) -> dict:
    cres = s.results["complex"]
    out, checks = {"field": cres["field"]}, []
    K = reference_complex(s.m)
    for ring in ("Z", "Z2"):
        C = FreeChainComplex.from_dict(cres[f"complex_{ring}"])
        H = homology(C)
        out[ring] = H.to_dict()
        if K is not None:
            HK = homology(K.chain_complex(ring))
            same = H.betti_list(s.m.dim) == HK.betti_list(s.m.dim) and _tors(H) == _tors(HK)
            checks.append(check(f"homology-{ring}", same, f"Morse {H.betti_list(s.m.dim)}, simplicial {HK.betti_list(s.m.dim)}"))
    out["betti_Z2"] = [out["Z2"]["betti"].get(str(k), 0) for k in range(s.m.dim + 1)]
    out["checks"] = checks
    return out


def _tors(H):
    return {k: v for k, v in H.torsion.items() if v}


def task_moduli(s: Session) -> dict:
    _require_morse_smale(s, "moduli")
    name = s.main_field("moduli")
    ctx = s.ctx(name)
    if s.m.dim != 2:
        return {"field": name, "moduli_1d": [], "note": "moduli are computed on surfaces", "checks": []}
    entries, polys, markers, checks = [], [], [], []
    for P in ctx.crits:
        for Q in ctx.crits:
            if P.index - Q.index != 2:
                continue
            mod = connecting_1d(P, Q, ctx.chart(P))
            d = mod.to_dict()
            got, want = mod.boundary_multiset(), expected_boundary(ctx, P, Q)
            d["boundary_matches"] = got == want
            d["expected_ends"] = sum(want.values())
            d["end_sign_sum_per_arc"] = [a.lower.sign + a.upper.sign for a in mod.arcs]
            entries.append(d)
            try:
                check_boundary(ctx, mod)
                checks.append(check(f"boundary {P.id}->{Q.id}", got == want, f"{len(mod.boundary_ends)} ends, {len(mod.arcs)} arcs"))
            except InconsistentBoundary as exc:
                checks.append(check(f"boundary {P.id}->{Q.id}", False, exc))
            chart = ctx.chart(P)
            for i, a in enumerate(mod.arcs):
                mid = 0.5 * (a.lo + a.hi)
                pts = chart.shot(mid).trajectory.points
                polys.append({"id": f"{P.id}->{Q.id}:arc{i}", "kind": "arc", "label": a.lower.via, "points": polyline(pts)})
                for end, t in ((a.lower, a.lo), (a.upper, a.hi)):
                    markers.append({"kind": "end", "label": end.via, "point": polyline([chart.shot_point(t)])[0]})
            if mod.closed_components and not mod.arcs:
                pts = chart.shot(chart.parameters()[0]).trajectory.points
                polys.append({"id": f"{P.id}->{Q.id}:closed", "kind": "closed", "label": "closed", "points": polyline(pts)})
    res = {"field": name, "moduli_1d": entries}
    res["geometry"] = {"polylines": polys, "markers": markers + _crit_markers(ctx)}
    res["checks"] = checks
    return res


def task_extended(s: Session) -> dict:
    _require_morse_smale(s, "extended")
    name = s.main_field("extended")
    cap = int(s.param("extended", "cap", 6))
    m = s.m
    ctx = s.ctx(name)
    checks, notes = [], []
    if m.catalog_id == "torus":
        return _extended_torus(s, ctx, name, cap)
    if m.catalog_id != "sphere":
        raise NotImplementedError("extended complexes are assembled for catalog spheres and tori")
    n = m.params["n"]
    model = sphere_loop_model(n, cap)
    if m.dim != 2:
        indices = sorted(c.index for c in ctx.crits)
        if indices != [0, n]:
            raise NotImplementedError("off surfaces only the two-critical-point sphere is supported")
        lo, hi = (c.id for c in sorted(ctx.crits, key=lambda c: c.index))
        classes = [{"source": hi, "target": lo, "degree": n - 1, "value": "u", "source_kind": "catalog"}]
        notes.append("moduli sphere of dimension n-1 taken as the generator u")
        E = assemble_extended_complex({lo: 0, hi: n}, [CoefficientClass(hi, lo, n - 1, model.element("u"))], model, cap)
    else:
        aux = s.param("extended", "aux")
        classes_obj, classes = [], []
        for (P, Q), mod in sorted(s.moduli0(name).zero.items()):
            c = coefficient_class_0d(ctx, P, Q, model)
            classes_obj.append(c)
            classes.append({**c.to_dict(model), "source_kind": "orbit count"})
        for P in ctx.crits:
            for Q in ctx.crits:
                if P.index - Q.index != 2:
                    continue
                if aux is None:
                    raise ValueError("degree-1 classes on the sphere need an auxiliary field ('aux')")
                gctx = s.ctx(aux)
                try:
                    c = coefficient_class_1d(ctx, P, Q, gctx, model)
                    kind = "representing cycle"
                except NotConsecutive:
                    c = relative_class_1d(ctx, P, Q, gctx, model)
                    kind = "relative chain"
                classes_obj.append(c)
                classes.append({**c.to_dict(model), "source_kind": kind})
        try:
            E = assemble_extended_complex(ctx.crits, classes_obj, model, cap)
        except LeibnizViolation as exc:
            return {"field": name, "model": model.to_dict(), "classes": classes, "complex": None,
                    "checks": [check("A-squared", False, exc)]}
    checks.append(check("A-squared", not E.a_squared(), "A^2 = 0 in the model"))
    return {
        "field": name,
        "model": model.to_dict(),
        "cap": cap,
        "classes": classes,
        "nonzero_classes": [c for c in classes if c["value"] not in ("0", "")],
        "complex": E.filtered.to_dict(),
        "notes": notes,
        "checks": checks,
    }


def _extended_torus(s: Session, ctx, name, cap) -> dict:
    G = GroupRingModel()
    mods = s.moduli0(name)
    orbits = [o for k in sorted(mods.zero) for o in mods.zero[k].orbits]
    paths = {"flow tree": flow_base_path(ctx.crits, orbits), "chart tree": chart_base_path(s.m, ctx.crits)}
    results, checks = {}, []
    for label, w in paths.items():
        cls = [coefficient_class_0d(ctx, P, Q, G, w) for (P, Q) in sorted(mods.zero)]
        E = assemble_extended_complex(ctx.crits, cls, G, cap)
        results[label] = (cls, E)
    cls, E = results["flow tree"]
    other, E2 = results["chart tree"]
    delta = base_change_factors(s.m, paths["flow tree"], paths["chart tree"])
    predicted = [rebase_class(c, G, delta) for c in cls]
    same = [a.value == b.value for a, b in zip(predicted, other)]
    checks.append(check("A-squared", not E.a_squared() and not E2.a_squared(), "A^2 = 0 over Z/2[t1, t2, inverses]"))
    checks.append(check("base-path change", all(same), f"{sum(same)}/{len(same)} classes match the predicted change of basis"))
    unit = next(iter(G.one()))
    idx = {p.id: p.index for p in ctx.crits}
    for c in cls:
        if idx[c.source] == 1:
            extra = c.value - G.one()
            ok = unit in c.value and len(extra) == 1 and next(iter(extra)) != unit
            checks.append(check(f"d({c.source}) = (1 + t^g) m", ok, G.format(c.value)))
    H = homology(E.augmented())
    checks.append(check("augmented homology", H.betti_list(2) == [1, 2, 1], H.betti_list(2)))
    return {
        "field": name,
        "model": G.to_dict(),
        "cap": cap,
        "classes": [c.to_dict(G) for c in cls],
        "classes_second_base": [c.to_dict(G) for c in other],
        "base_change": {k: list(v) for k, v in sorted(delta.items())},
        "augmented_betti": H.betti_list(2),
        "complex": None,
        "checks": checks,
    }


def task_ss(s: Session) -> dict:
    ext = s.results["extended"]
    if ext.get("complex") is None:
        raise TypeError("the spectral sequence needs a Pontryagin-model extended complex")
    fc = FilteredComplex.from_dict(ext["complex"])
    r_max = int(s.param("ss", "r_max", 20))
    pages = spectral_sequence(fc, r_max=r_max)
    cap = ext["cap"]
    top = cap - 1
    table = pages.to_table()
    checks = [check("convergence", pages.convergence_ok(), "E^infinity matches total homology")]
    tot = {int(k): v for k, v in pages.total_homology.items()}
    point = all(tot.get(k, 0) == (1 if k == 0 else 0) for k in range(top + 1))
    checks.append(check("total homology is a point", point, f"through total degree {top}: {[tot.get(k, 0) for k in range(top + 1)]}"))
    res = {"table": table, "r_stab": pages.r_stab, "total_homology": {str(k): v for k, v in sorted(tot.items())}}
    if s.m.catalog_id == "sphere":
        n = s.m.params["n"]
        expected = path_loop_pages(n, cap)
        # the model agrees with the path-loop fibration from the second page on
        expected = {"pages": [p for p in expected["pages"] if p["r"] >= 2], "r_stab": expected["r_stab"]}
        diffs = compare_pages(truncate_table(table, top), expected)
        res["page_diffs"] = diffs
        checks.append(check("path-loop page table", not diffs, diffs[0] if diffs else f"E^2..E^{n + 1} agree"))
        checks.append(check("stabilization page", pages.r_stab == n + 1, f"r_stab = {pages.r_stab}"))
    res["checks"] = checks
    return res


def _match(crit, ctx) -> str:
    same = [c for c in ctx.crits if c.index == crit.index]
    return min(same, key=lambda c: float(np.linalg.norm(c.location - crit.location))).id


def task_ops(s: Session) -> dict:
    _require_morse_smale(s, "ops")
    name = s.main_field("ops")
    reruns = int(s.param("ops", "reruns", 3))
    res, checks = {"field": name}, []
    aux = s.param("ops", "aux")
    pairs = s.param("ops", "represent", [])
    if pairs and aux is None:
        raise ValueError("representing cycles need an auxiliary field ('aux')")
    cycles = []
    for x, y in pairs:
        fctx, gctx = s.ctx(name), s.ctx(aux)
        cyc = represent_T_class(fctx, x, y, gctx)
        d = cyc.to_dict()
        d["fundamental_pairing"] = cyc.fundamental_pairing()
        d["rerun_pairings"] = []
        for extra in PERTURBATIONS[:reruns]:
            g2 = s.ctx(aux, extra)
            d["rerun_pairings"].append(represent_T_class(fctx, x, y, g2).fundamental_pairing())
        cycles.append(d)
        checks.append(check(f"cycle {x}->{y}", cyc.is_cycle, d["cycle_defect"]))
        checks.append(check(f"pairing stable {x}->{y}", all(p == d["fundamental_pairing"] for p in d["rerun_pairings"]), d["rerun_pairings"]))
        want = s.param("ops", "expect_nonzero", {}).get(f"{x}->{y}")
        if want is not None:
            checks.append(check(f"class {x}->{y} nonzero", cyc.homology_nonzero == bool(want), cyc.homology_nonzero))
    res["representing_cycles"] = cycles
    tri = s.param("ops", "triple")
    triples = []
    if tri:
        names = tri["fields"]
        for case in tri.get("cases", []):
            prob = TripleIntersectionProblem(tuple(s.ctx(f) for f in names), case["x"], case["y"], case["z"])
            t = triple_count(prob)
            for extra in PERTURBATIONS[:reruns]:
                ctxs = tuple(s.ctx(f, extra) for f in names)
                ids = [_match(prob.contexts[i].crit(c), ctxs[i]) for i, c in enumerate((case["x"], case["y"], case["z"]))]
                r = triple_count(TripleIntersectionProblem(ctxs, *ids))
                t.reruns.append((r.mod2, r.signed))
            d = {"x": case["x"], "y": case["y"], "z": case["z"], **t.to_dict()}
            triples.append(d)
            label = f"triple {case['x']},{case['y']}->{case['z']}"
            if t.oracle is not None:
                checks.append(check(f"{label} oracle", t.mod2 == t.oracle % 2 and t.signed == t.oracle, f"count {t.signed}, oracle {t.oracle}"))
            checks.append(check(f"{label} stable", t.stable, t.reruns))
            if "expect" in case:
                checks.append(check(f"{label} expected", t.mod2 == case["expect"], f"mod 2 count {t.mod2}"))
        res["triple"] = {"fields": names, "cases": triples}
    res["checks"] = checks
    return res


# -- combinatorial tasks ---------------------------------------------------------


def task_dmt(s: Session) -> dict:
    K_all = corpus()
    names = s.param("dmt", "complexes", sorted(K_all))
    count = int(s.param("dmt", "random", 50))
    p_crit = float(s.param("dmt", "p_critical", 0.15))
    rows, checks = [], []
    for name in names:
        if name not in K_all:
            raise KeyError(f"unknown complex {name!r}")
        K = K_all[name]
        row = {"complex": name, "f_vector": K.f_vector, "euler": K.euler_characteristic}
        try:
            V = greedy_discrete_gradient(K)
            C = discrete_morse_complex(V, "Z")
            row["greedy_critical"] = V.critical_counts()
            H = homology(C)
            row["homology_Z"] = H.to_dict()
            row["betti_Z2"] = homology(discrete_morse_complex(V, "Z2")).betti_list(K.dim)
            rng = random.Random(f"{s.spec.seed}:{name}")
            hist = Counter()
            for _ in range(count):
                W = random_discrete_gradient(K, rng, p_crit)
                discrete_morse_complex(W, "Z")
                hist[tuple(W.critical_counts())] += 1
            row["random"] = {"count": count, "critical_counts": [[list(k), v] for k, v in sorted(hist.items())]}
            checks.append(check(f"{name}", True, f"greedy {V.critical_counts()}, {count} random matchings"))
        except (ArithmeticError, ValueError) as exc:
            checks.append(check(f"{name}", False, exc))
        rows.append(row)
    return {"complexes": rows, "seed": s.spec.seed, "checks": checks}


def task_verify_all(s: Session) -> dict:
    n, violations = 0, []
    for task, res in s.results.items():
        if task == "verify-all":
            continue
        for c in res.get("checks", []):
            n += 1
            if not c["ok"]:
                violations.append(f"{task}: {c['name']}: {c['detail']}")
    return {"checks": n, "violations": violations}


TASK_FUNCS = {
    "critical": task_critical,
    "flow": task_flow,
    "complex": task_complex,
    "homology": task_homology,
    "moduli": task_moduli,
    "extended": task_extended,
    "ss": task_ss,
    "ops": task_ops,
    "dmt": task_dmt,
    "verify-all": task_verify_all,
}

# tasks that read or mutate the shared flow contexts
NUMERIC = {"critical", "flow", "complex", "homology", "moduli", "extended", "ops"}
