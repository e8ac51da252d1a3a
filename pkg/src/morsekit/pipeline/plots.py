"""SVG projections and CSV polyline dumps of the geometric payloads in a report."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
INDEX_COLORS = ("#2166ac", "#1a9850", "#b2182b", "#762a83")
CSV_HEADER = ("polyline", "task", "kind", "label", "vertex", "x", "y", "z")


class NoGeometry(ValueError):
    pass


@dataclass(frozen=True)
class PlotOptions:
    out_dir: str = "."
    svg: bool = True
    csv: bool = True
    size: int = 640
    azimuth_deg: float = 35.0
    elevation_deg: float = 25.0


def _report_dict(report) -> dict:
    return report.to_dict() if hasattr(report, "to_dict") else report


def collect_geometry(report) -> list[tuple[str, dict]]:
    """``(task, geometry)`` payloads in task order."""
    rep = _report_dict(report)
    return [(t, res["geometry"]) for t, res in rep["tasks"].items() if res.get("geometry")]


def _view(az: float, el: float) -> np.ndarray:
    a, e = math.radians(az), math.radians(el)
    right = np.array([-math.sin(a), math.cos(a), 0.0])
    up = np.array([-math.cos(a) * math.sin(e), -math.sin(a) * math.sin(e), math.cos(e)])
    return np.stack([right, up])


def _project(pts, V) -> np.ndarray:
    P = np.asarray(pts, dtype=float)
    if P.shape[1] > 3:
        P = P[:, -3:]  # higher ambient dimension: show the last three coordinates
    elif P.shape[1] < 3:
        P = np.pad(P, ((0, 0), (0, 3 - P.shape[1])))
    return P @ V.T


def render_svg(report, opts: PlotOptions = PlotOptions()) -> str:
    payloads = collect_geometry(report)
    if not payloads:
        raise NoGeometry("report has no geometric payload (run flow or moduli)")
    V = _view(opts.azimuth_deg, opts.elevation_deg)
    everything = [p for _, g in payloads for pl in g.get("polylines", []) for p in pl["points"]]
    everything += [m["point"] for _, g in payloads for m in g.get("markers", [])]
    xy = _project(everything, V)
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 24
    scale = (opts.size - 2 * pad) / span

    def to_px(points):
        q = _project(points, V)
        x = pad + (q[:, 0] - lo[0]) * scale
        y = opts.size - pad - (q[:, 1] - lo[1]) * scale
        return x, y

    labels = sorted({pl["label"] for _, g in payloads for pl in g.get("polylines", []) if pl["kind"] == "arc"}
                    | {m["label"] for _, g in payloads for m in g.get("markers", []) if m["kind"] == "end"})
    color = {lab: PALETTE[i % len(PALETTE)] for i, lab in enumerate(labels)}
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{opts.size}" height="{opts.size}" viewBox="0 0 {opts.size} {opts.size}">',
        f'<rect width="{opts.size}" height="{opts.size}" fill="white"/>',
    ]
    for task, g in payloads:
        out.append(f'<g id="{task}">')
        for pl in g.get("polylines", []):
            x, y = to_px(pl["points"])
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(x, y))
            stroke = color.get(pl["label"], "#888888") if pl["kind"] == "arc" else "#888888"
            width = 2.0 if pl["kind"] == "arc" else 1.0
            out.append(f'<polyline class="{pl["kind"]}" data-id="{pl["id"]}" data-label="{pl["label"]}" '
                       f'points="{pts}" fill="none" stroke="{stroke}" stroke-width="{width}"/>')
        for mk in g.get("markers", []):
            x, y = to_px([mk["point"]])
            if mk["kind"] == "end":
                out.append(f'<circle class="end" data-label="{mk["label"]}" cx="{x[0]:.2f}" cy="{y[0]:.2f}" r="3.5" '
                           f'fill="none" stroke="{color.get(mk["label"], "#000000")}" stroke-width="1.5"/>')
            else:
                c = INDEX_COLORS[min(mk.get("index", 0), len(INDEX_COLORS) - 1)]
                out.append(f'<circle class="critical" data-label="{mk["label"]}" cx="{x[0]:.2f}" cy="{y[0]:.2f}" r="4" fill="{c}"/>')
        out.append("</g>")
    if labels:
        for i, lab in enumerate(labels):
            out.append(f'<text x="{pad}" y="{pad + 14 * i}" font-size="11" fill="{color[lab]}">via {lab}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def polyline_rows(report):
    for task, g in collect_geometry(report):
        for pl in g.get("polylines", []):
            for i, p in enumerate(pl["points"]):
                q = list(p) + [0.0] * (3 - len(p))
                yield (pl["id"], task, pl["kind"], pl["label"], i, *q[:3])


def write_polylines_csv(report, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in polyline_rows(report):
            w.writerow([*row[:5], *(repr(float(c)) for c in row[5:])])
    return path


def read_polylines_csv(path) -> dict:
    """``{polyline id: {"task", "kind", "label", "points"}}`` from a CSV written by :func:`emit_plots`."""
    out: dict = {}
    with Path(path).open(newline="") as fh:
        r = csv.DictReader(fh)
        for row in r:
            d = out.setdefault(row["polyline"], {"task": row["task"], "kind": row["kind"], "label": row["label"], "points": []})
            if int(row["vertex"]) != len(d["points"]):
                raise ValueError(f"polyline {row['polyline']} has out-of-order vertices")
            d["points"].append([float(row["x"]), float(row["y"]), float(row["z"])])
    return out


def emit_plots(report, opts: PlotOptions = PlotOptions()) -> list[str]:
    """Write the SVG and/or CSV files for a report and return their paths."""
    if not collect_geometry(report):
        raise NoGeometry("report has no geometric payload (run flow or moduli)")
    rep = _report_dict(report)
    out = Path(opts.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    if opts.svg:
        p = out / f"{rep['scene']}.svg"
        p.write_text(render_svg(rep, opts))
        files.append(str(p))
    if opts.csv:
        files.append(str(write_polylines_csv(rep, out / f"{rep['scene']}.polylines.csv")))
    return files
