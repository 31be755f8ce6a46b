import json
import os

import numpy as np
import pytest

from radvisc import io as rio
from radvisc.harness import EstimateReport


def test_write_atomic_replaces_and_leaves_no_temp(tmp_path):
    p = tmp_path / "sub" / "a.csv"
    rio.write_atomic(p, "x\n")
    rio.write_atomic(p, "y\n")
    assert p.read_text() == "y\n"
    assert os.listdir(p.parent) == ["a.csv"]


def test_write_atomic_failure_keeps_old_file(tmp_path, monkeypatch):
    p = tmp_path / "a.csv"
    rio.write_atomic(p, "old\n")

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr(rio.os, "replace", boom)
    with pytest.raises(OSError):
        rio.write_atomic(p, "new\n")
    assert p.read_text() == "old\n"
    assert os.listdir(tmp_path) == ["a.csv"]


def test_csv_floats_round_trip_exactly():
    vals = [0.1, 1 / 3, 1e-300, np.float64(2.5e-17)]
    text = rio.csv_text(("v",), ([v] for v in vals))
    back = [float(x) for x in text.splitlines()[1:]]
    assert back == [float(v) for v in vals]


def test_trajectory_csv_shape(small_bump):
    lines = rio.trajectory_csv(small_bump).splitlines()
    assert lines[0] == "t,r,rho,m"
    assert len(lines) == 1 + small_bump.rho.size


def test_json_cleans_nonfinite():
    obj = json.loads(rio.json_text({"a": float("inf"), "b": np.float64("nan"), "c": np.int64(3), "d": np.bool_(True)}))
    assert obj == {"a": "inf", "b": "nan", "c": 3, "d": True}


def test_svg_plot_per_quantity(tmp_path):
    rep = EstimateReport(eps=[0.1, 0.01, 0.001])
    for q, p in (("q1", 0.5), ("q/2", -1.0)):
        for e in rep.eps:
            rep.rows.append({"eps": e, "quantity": q, "value": e**p})
        rep.slopes[q] = p
    paths = rio.write_plots(rep, tmp_path)
    assert sorted(x.name for x in paths) == ["q1.svg", "q_2.svg"]
    svg = paths[0].read_text()
    assert svg.startswith("<svg") and "slope 0.5" in svg and svg.count("<circle") == 3


def test_svg_without_data():
    assert "no positive data" in rio.loglog_svg([0.1], [0.0], "z")
