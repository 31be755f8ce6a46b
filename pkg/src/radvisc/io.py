"""Atomic artifact writers: CSV tables, JSON manifests and SVG log-log plots."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import tempfile
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

REPORT_COLUMNS = ("eps", "quantity", "value", "nodes", "a", "b", "delta", "rho_bar")


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file in the same directory and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def trajectory_csv(traj):
    """Long format, one row per snapshot and node: ``t, r, rho, m``."""
    r = traj.grid.nodes
    rows = (
        (float(t), float(r[i]), float(traj.rho[k, i]), float(traj.m[k, i]))
        for k, t in enumerate(traj.times)
        for i in range(r.size)
    )
    return csv_text(("t", "r", "rho", "m"), rows)


def report_csv(report):
    return csv_text(REPORT_COLUMNS, ([row[c] for c in REPORT_COLUMNS] for row in report.rows))


def criteria_csv(criteria):
    return csv_text(("criterion", "passed", "detail"), ((c.name, int(c.passed), c.detail) for c in criteria))


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def json_text(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=False) + "\n"


def trajectory_summary(traj):
    return {
        "E0": traj.E0,
        "final_energy": float(traj.energy[-1]),
        "dissipation_acc": [float(v) for v in traj.dissipation[-1]],
        "steps": traj.steps,
        "status": traj.status,
        "c_eps": traj.c_eps,
        "snapshots": len(traj.times),
        "solver": traj.config.to_dict(),
    }


def manifest(kind, cfg, levels, report, seed, extra=None):
    out = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "seed": seed,
        "passed": report.passed,
        "config": cfg.to_dict(),
        "levels": [
            {
                "eps": lv.eps,
                "status": lv.status,
                "error": lv.error,
                "params": lv.params,
                "grid": lv.grid,
                "steps": lv.steps,
                "seconds": lv.seconds,
            }
            for lv in levels
        ],
        "slopes": report.slopes,
        "criteria": [
            {"name": c.name, "passed": c.passed, "detail": c.detail, "value": c.value} for c in report.criteria
        ],
        "failures": {repr(k): v for k, v in report.failures.items()},
    }
    out.update(extra or {})
    return out


# plots ----------------------------------------------------------------------


def safe_name(quantity):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", quantity)


def loglog_svg(x, y, title, slope=float("nan"), width=420, height=320):
    """A minimal log-log scatter plot with a least-squares line and slope annotation.

    Non-positive values are plotted by magnitude; an empty plot is emitted
    if nothing is plottable.
    """
    x = np.asarray(x, float)
    y = np.abs(np.asarray(y, float))
    ok = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    ml, mr, mt, mb = 60, 20, 30, 45
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="12">{_esc(title)}</text>',
        f'<rect x="{ml}" y="{mt}" width="{width - ml - mr}" height="{height - mt - mb}" fill="none" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 8}" text-anchor="middle">eps</text>',
    ]
    if ok.any():
        lx, ly = np.log10(x[ok]), np.log10(y[ok])
        x0, x1 = _range(lx)
        y0, y1 = _range(ly)
        px = lambda v: ml + (v - x0) / (x1 - x0) * (width - ml - mr)  # noqa: E731
        py = lambda v: height - mb - (v - y0) / (y1 - y0) * (height - mt - mb)  # noqa: E731
        for e in range(math.ceil(x0), math.floor(x1) + 1):
            parts.append(f'<text x="{px(e):.1f}" y="{height - mb + 14}" text-anchor="middle">1e{e}</text>')
        for e in (y0, y1):
            parts.append(f'<text x="{ml - 4}" y="{py(e) + 4:.1f}" text-anchor="end">{10**e:.2g}</text>')
        for a, b in zip(lx, ly):
            parts.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3.5" fill="steelblue"/>')
        if ok.sum() >= 2 and math.isfinite(slope):
            c = float(np.mean(ly - slope * lx))
            xa, xb = lx.min(), lx.max()
            parts.append(
                f'<line x1="{px(xa):.2f}" y1="{py(slope * xa + c):.2f}" x2="{px(xb):.2f}" '
                f'y2="{py(slope * xb + c):.2f}" stroke="firebrick" stroke-dasharray="4 3"/>'
            )
        label = f"slope {slope:.3g}" if math.isfinite(slope) else "slope n/a"
        parts.append(f'<text x="{ml + 6}" y="{mt + 14}" fill="firebrick">{label}</text>')
    else:
        parts.append(f'<text x="{width / 2:.1f}" y="{height / 2:.1f}" text-anchor="middle">no positive data</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _range(v):
    lo, hi = float(v.min()), float(v.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.08 * (hi - lo)
    return lo - pad, hi + pad


def _esc(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_plots(report, out_dir):
    """One SVG per tracked quantity; returns the written paths."""
    out_dir = Path(out_dir)
    paths = []
    for q in report.quantities():
        svg = loglog_svg(report.eps, report.values(q), q, report.slopes.get(q, float("nan")))
        paths.append(write_atomic(out_dir / f"{safe_name(q)}.svg", svg))
    return paths
