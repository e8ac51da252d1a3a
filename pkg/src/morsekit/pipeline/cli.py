"""``morse`` command line: run scene tasks, write reports and plots.

Exit codes: 0 success, 1 invariant violation or failed task, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .plots import NoGeometry, PlotOptions, emit_plots
from .run import TaskError, run_corpus, run_pipeline, write_report
from .scene import TASKS, SceneError, bundled_scene, bundled_scene_names, parse_scene

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

# FlowConfig fields surfaced as flags
CONFIG_FLAGS = {
    "tol_crit": float,
    "basin_radius": float,
    "grid_density": int,
    "chart_resolution": int,
    "local_error_tol": float,
    "max_step": float,
}
FLAG_TO_FIELD = {"grid_density": "seed_grid_density"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"morse: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="morse", description="Computational Morse theory on declarative scenes.")
    p.add_argument("task", choices=TASKS)
    p.add_argument("scene", nargs="?", help="scene TOML file or bundled scene name (verify-all: omit for the whole corpus)")
    p.add_argument("--out", default="morse-out", help="output directory for reports and plots")
    p.add_argument("--no-cache", action="store_true", help="recompute every task")
    p.add_argument("--cache-dir", default=None, help="cache directory (default OUT/cache)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--svg", action="store_true", help="write an SVG projection of the geometric payloads")
    p.add_argument("--csv", action="store_true", help="write the polylines as CSV")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for independent tasks")
    p.add_argument("-v", "--verbose", action="store_true")
    for flag, typ in CONFIG_FLAGS.items():
        p.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=typ, default=None)
    return p


def _load(scene: str):
    path = Path(scene)
    if path.is_file():
        return parse_scene(path)
    if scene in bundled_scene_names():
        return bundled_scene(scene)
    raise SceneError(f"no scene file or bundled scene named {scene!r}", scene)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    config = {FLAG_TO_FIELD.get(k, k): getattr(args, k) for k in CONFIG_FLAGS if getattr(args, k) is not None}
    out = Path(args.out)
    cache_dir = None if args.no_cache else Path(args.cache_dir or out / "cache")
    use_cache = not args.no_cache
    try:
        if args.task == "verify-all" and args.scene is None:
            corpus = run_corpus(cache_dir=cache_dir, use_cache=use_cache, jobs=args.jobs,
                                overrides={"seed": args.seed, "config": config})
            out.mkdir(parents=True, exist_ok=True)
            path = out / "corpus.report.json"
            path.write_text(corpus.to_json())
            for name, rep in corpus.reports.items():
                write_report(rep, out)
                print(f"{name}: {len(rep.violations)} violation(s)")
            print(f"report: {path}")
            for v in corpus.violations:
                print(f"VIOLATION {v}", file=sys.stderr)
            return EXIT_VIOLATION if corpus.violations else EXIT_OK
        if args.scene is None:
            raise SceneError(f"task {args.task!r} needs a scene")
        spec = _load(args.scene).with_overrides(seed=args.seed, config=config)
        tasks = list(spec.tasks) + ["verify-all"] if args.task == "verify-all" else [args.task]
        report = run_pipeline(spec, tasks, cache_dir, use_cache, args.jobs)
    except SceneError as exc:
        print(f"morse: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KeyError, ValueError) as exc:
        print(f"morse: bad option: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TaskError as exc:
        print(f"morse: {exc}", file=sys.stderr)
        return EXIT_VIOLATION

    if args.svg or args.csv:
        try:
            files = emit_plots(report, PlotOptions(out_dir=str(out), svg=args.svg, csv=args.csv))
        except NoGeometry as exc:
            print(f"morse: {exc}", file=sys.stderr)
            return EXIT_USAGE
        report.appendix = {"files": sorted(Path(f).name for f in files)}
    path = write_report(report, out)
    hits = sum(report.cache_hits.values())
    print(f"{spec.name}: {len(report.tasks)} task(s), {hits} cache hit(s), report {path}")
    for v in report.violations:
        print(f"VIOLATION {v}", file=sys.stderr)
    return EXIT_VIOLATION if report.violations else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
