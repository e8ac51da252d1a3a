import json
import re
import time

import pytest

from morsekit.pipeline import (
    Cache,
    NoGeometry,
    PlotOptions,
    SceneError,
    SceneSyntaxError,
    TaskError,
    UnknownManifold,
    UnresolvedReference,
    bundled_scene,
    bundled_scene_names,
    emit_plots,
    parse_scene,
    parse_scene_text,
    read_polylines_csv,
    resolve_tasks,
    run_pipeline,
    write_report,
)
from morsekit.pipeline.cli import main
from morsekit.pipeline.plots import polyline_rows

MINIMAL = """\
name = "mini"
tasks = ["critical", "complex", "homology"]

[manifold]
kind = "sphere"
n = 2

[fields]
f = "z"
"""


class TestSceneParsing:
    def test_bundled_height_scene(self):
        spec = bundled_scene("s2_height")
        assert list(spec.fields) == ["f"]
        assert spec.tasks == ["critical", "complex", "homology"]
        assert spec.manifold == {"kind": "sphere", "n": 2}

    def test_all_bundled_scenes_parse(self):
        names = bundled_scene_names()
        assert {"s2_height", "s2_loops", "s2_bumpy", "torus_tilted", "dmt_corpus"} <= set(names)
        for name in names:
            assert bundled_scene(name).name == name

    def test_undefined_field(self):
        text = MINIMAL + '\n[homology]\nfield = "h"\n'
        with pytest.raises(UnresolvedReference) as exc:
            parse_scene_text(text, "bad.toml")
        assert exc.value.name == "h"
        assert exc.value.line == text.splitlines().index('field = "h"') + 1
        assert "'h'" in str(exc.value)

    def test_expression_syntax_error_has_column(self):
        text = MINIMAL.replace('f = "z"', 'f = "z +"')
        with pytest.raises(SceneSyntaxError) as exc:
            parse_scene_text(text, "bad.toml")
        # line of the field; column just past "z +" inside the quotes
        assert exc.value.line == 9
        assert exc.value.col == len('f = "z +') + 1
        assert str(exc.value).startswith("bad.toml:9:")

    def test_toml_error_has_location(self):
        with pytest.raises(SceneSyntaxError) as exc:
            parse_scene_text(MINIMAL + "oops = = 1\n", "bad.toml")
        assert exc.value.line == len(MINIMAL.splitlines()) + 1 and exc.value.col is not None

    def test_unknown_manifold(self):
        with pytest.raises(UnknownManifold) as exc:
            parse_scene_text(MINIMAL.replace('"sphere"', '"klein"'), "bad.toml")
        assert exc.value.line == 5

    def test_prerequisites_must_come_first(self):
        with pytest.raises(SceneError, match="needs 'complex'"):
            parse_scene_text(MINIMAL.replace('["critical", "complex", "homology"]', '["critical", "homology"]'))

    def test_unknown_config_key(self):
        with pytest.raises(UnresolvedReference):
            parse_scene_text(MINIMAL + "\n[config]\nwiggle = 3\n")

    def test_resolve_tasks_adds_prerequisites(self):
        assert resolve_tasks(["ss"]) == ["critical", "complex", "extended", "ss"]
        assert resolve_tasks(["verify-all", "moduli"]) == ["critical", "moduli", "verify-all"]
        with pytest.raises(SceneError):
            resolve_tasks(["teleport"])

    def test_content_hash_tracks_inputs(self):
        a = parse_scene_text(MINIMAL)
        assert a.content_hash() == parse_scene_text(MINIMAL).content_hash()
        assert a.with_overrides(seed=5).content_hash() != a.content_hash()
        assert a.with_overrides(config={"tol_crit": 1e-10}).content_hash() != a.content_hash()

    def test_missing_file(self, tmp_path):
        with pytest.raises(SceneError):
            parse_scene(tmp_path / "nope.toml")


@pytest.fixture(scope="module")
def height_run(tmp_path_factory):
    cache = tmp_path_factory.mktemp("cache")
    spec = bundled_scene("s2_height").with_overrides(tasks=["critical", "flow", "complex", "homology", "moduli"])
    return spec, cache, run_pipeline(spec, cache_dir=cache)


class TestPipeline:
    def test_height_scene_results(self, height_run):
        _, _, rep = height_run
        assert rep.tasks["critical"]["count"] == 2
        assert rep.tasks["homology"]["betti_Z2"] == [1, 0, 1]
        assert rep.tasks["moduli"]["moduli_1d"][0]["closed_components"] == 1
        assert rep.violations == []
        assert not any(rep.cache_hits.values())

    def test_rerun_hits_cache(self, height_run):
        spec, cache, first = height_run
        t0 = time.perf_counter()
        again = run_pipeline(spec, cache_dir=cache)
        assert time.perf_counter() - t0 < 1.0
        assert all(again.cache_hits.values())
        assert again.to_json() == first.to_json()

    def test_cache_off_matches(self, height_run):
        spec, _, first = height_run
        assert run_pipeline(spec, use_cache=False).to_json() == first.to_json()

    def test_task_order_and_parallel_runs(self, height_run, tmp_path):
        spec, _, first = height_run
        assert list(first.tasks) == ["critical", "flow", "complex", "homology", "moduli"]
        assert run_pipeline(spec, cache_dir=tmp_path, jobs=3).to_json() == first.to_json()

    def test_report_files(self, height_run, tmp_path):
        _, _, rep = height_run
        path = write_report(rep, tmp_path)
        data = json.loads(path.read_text())
        assert data["scene_hash"] == rep.scene_hash and "timings" not in data
        timings = json.loads((tmp_path / "s2_height.timings.json").read_text())
        assert set(timings["seconds"]) == set(rep.tasks)

    def test_cache_entries_are_atomic_and_tolerant(self, tmp_path):
        c = Cache(tmp_path)
        key = "ab" + "0" * 62
        c.put(key, {"x": [1, 2]})
        assert c.get(key) == {"x": [1, 2]}
        assert not list(tmp_path.rglob(".tmp-*"))
        c.path(key).write_text("{ not json")
        assert c.get(key) is None
        assert c.get("cd" + "1" * 62) is None

    def test_task_error_carries_location(self):
        spec = bundled_scene("torus_upright").with_overrides(tasks=["critical", "complex"])
        with pytest.raises(TaskError) as exc:
            run_pipeline(spec, use_cache=False)
        assert exc.value.task == "complex"
        assert exc.value.location.startswith("scenes/torus_upright.toml")


@pytest.fixture(scope="module")
def torus_moduli_report():
    spec = bundled_scene("torus_tilted").with_overrides(tasks=["critical", "moduli"])
    return run_pipeline(spec, use_cache=False)


class TestPlots:
    def test_torus_svg(self, torus_moduli_report, tmp_path):
        files = emit_plots(torus_moduli_report, PlotOptions(out_dir=str(tmp_path)))
        svg = (tmp_path / "torus_tilted.svg").read_text()
        assert len(re.findall(r'<polyline class="arc"', svg)) == 4
        assert len(re.findall(r'<circle class="end"', svg)) == 8
        assert sorted(p.rsplit("/", 1)[1] for p in files) == ["torus_tilted.polylines.csv", "torus_tilted.svg"]

    def test_csv_round_trip(self, torus_moduli_report, tmp_path):
        emit_plots(torus_moduli_report, PlotOptions(out_dir=str(tmp_path), svg=False))
        back = read_polylines_csv(tmp_path / "torus_tilted.polylines.csv")
        rows = list(polyline_rows(torus_moduli_report))
        assert sum(len(v["points"]) for v in back.values()) == len(rows)
        for pid, task, kind, label, i, x, y, z in rows:
            assert back[pid]["points"][i] == [x, y, z]
            assert back[pid]["kind"] == kind and back[pid]["label"] == label

    def test_no_geometry(self, height_run, tmp_path):
        spec, cache, _ = height_run
        rep = run_pipeline(spec.with_overrides(tasks=["homology"]), cache_dir=cache)
        with pytest.raises(NoGeometry):
            emit_plots(rep, PlotOptions(out_dir=str(tmp_path)))


class TestCli:
    def test_success(self, tmp_path, capsys):
        assert main(["homology", "s2_height", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "s2_height.report.json").exists()
        assert "cache hit" in capsys.readouterr().out

    def test_plot_files_listed_in_appendix(self, tmp_path):
        assert main(["flow", "s2_height", "--out", str(tmp_path), "--svg", "--csv"]) == 0
        data = json.loads((tmp_path / "s2_height.report.json").read_text())
        assert data["appendix"]["files"] == ["s2_height.polylines.csv", "s2_height.svg"]

    def test_violation_exit_code(self, tmp_path):
        scene = tmp_path / "wrong.toml"
        scene.write_text(MINIMAL + "\n[critical]\nexpect_counts = [1, 1, 1]\n")
        assert main(["critical", str(scene), "--out", str(tmp_path), "--no-cache"]) == 1

    def test_failed_task_exit_code(self, tmp_path, capsys):
        assert main(["complex", "torus_upright", "--out", str(tmp_path)]) == 1
        assert "task 'complex' failed" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "argv",
        [
            ["teleport", "s2_height"],
            ["critical", "no_such_scene"],
            ["critical"],
            ["homology", "s2_height", "--svg"],
            ["critical", "s2_height", "--basin-radius", "-1"],
        ],
        ids=["bad-task", "missing-scene", "no-scene", "no-geometry", "bad-config"],
    )
    def test_usage_errors(self, tmp_path, argv):
        try:
            code = main(argv + ["--out", str(tmp_path)])
        except SystemExit as exc:
            code = exc.code
        assert code == 2

    def test_parse_error_reports_location(self, tmp_path, capsys):
        scene = tmp_path / "bad.toml"
        scene.write_text(MINIMAL.replace('f = "z"', 'f = "z +"'))
        assert main(["critical", str(scene), "--out", str(tmp_path)]) == 2
        assert f"{scene}:9:" in capsys.readouterr().err
