import csv
import json
import math
from pathlib import Path

import pytest

from radvisc.cli import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, main
from radvisc.config import load

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

FAST_SWEEP = """\
problem: {profile: gaussian_bump, gamma: 2.0, n_dim: 3, T: 0.3}
schedule: {eps: [1.0e-1, 5.0e-2, 2.0e-2]}
solver: {h: 8.0e-3, n_snapshots: 31}
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_constant_state_run_passes(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(CONFIGS / "constant.yaml"), "--out", str(out)]) == EXIT_PASS
    rows = read_rows(out / "report.csv")
    for row in rows:
        if row["quantity"].startswith(("cont_viscous", "mom_viscous", "mom_delta", "sup_energy", "dissipation")):
            assert abs(float(row["value"])) <= 1e-10, row
    assert all(r["passed"] == "1" for r in read_rows(out / "criteria.csv"))


def test_eps_one_is_schedule_error(tmp_path, caplog):
    cfg = write(tmp_path, "c.yaml", "schedule: {eps: [1.0]}\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_ERROR
    assert "eps" in caplog.text


def test_malformed_config_exit_and_diagnostic(tmp_path, caplog):
    cfg = write(tmp_path, "c.yaml", "problem:\n  gamma: 2\n  T: [\n")
    assert main(["run", str(cfg)]) == EXIT_ERROR
    assert "line" in caplog.text
    cfg = write(tmp_path, "d.yaml", "solver:\n  hh: 1\n")
    assert main(["sweep", str(cfg)]) == EXIT_ERROR
    assert "solver.hh" in caplog.text


def test_missing_file_and_bad_flags(tmp_path):
    assert main(["run", str(tmp_path / "nope.yaml")]) == EXIT_ERROR
    assert main(["run", str(CONFIGS / "constant.yaml"), "--seed", "-1"]) == EXIT_ERROR
    assert main(["sweep", str(CONFIGS / "constant.yaml"), "--jobs", "0"]) == EXIT_ERROR


def test_bump_run_manifest_echoes_params(tmp_path):
    cfg = write(tmp_path, "c.yaml", FAST_SWEEP)
    out = tmp_path / "out"
    code = main(["run", str(cfg), "--out", str(out)])
    assert code in (EXIT_PASS, EXIT_FAIL)
    for f in ("trajectory.csv", "report.csv", "criteria.csv", "manifest.json"):
        assert (out / f).is_file()
    man = json.loads((out / "manifest.json").read_text())
    assert man["schema_version"] == 1 and man["kind"] == "run"
    params = man["levels"][0]["params"]
    eps = 0.1
    assert params["eps"] == eps
    assert params["a"] == pytest.approx(eps ** (1 / 3), rel=1e-14)
    assert params["b"] == pytest.approx(eps ** (-1 / 12), rel=1e-14)
    assert params["delta"] == pytest.approx(eps**3, rel=1e-14)
    rho_bar = min(eps ** (1 / 4), abs(math.log(eps)) ** (-2 / 0.5))
    assert params["rho_bar"] == pytest.approx(rho_bar, rel=1e-14)
    assert man["config"] == load(cfg).with_eps([eps]).to_dict()
    assert (code == EXIT_PASS) == man["passed"]


@pytest.fixture(scope="module")
def fast_sweep(tmp_path_factory):
    d = tmp_path_factory.mktemp("sweep")
    cfg = write(d, "c.yaml", FAST_SWEEP)
    codes = [main(["sweep", str(cfg), "--out", str(d / name), "--jobs", jobs]) for name, jobs in (("a", "1"), ("b", "3"))]
    return d, codes


def test_sweep_plots_one_per_quantity(fast_sweep):
    d, codes = fast_sweep
    assert all(c in (EXIT_PASS, EXIT_FAIL) for c in codes)
    quantities = {r["quantity"] for r in read_rows(d / "a" / "report.csv")}
    plots = list((d / "a" / "plots").glob("*.svg"))
    assert len(plots) == len(quantities) > 0
    summary = json.loads((d / "a" / "summary.json").read_text())
    assert summary["schema_version"] == 1 and len(summary["levels"]) == 3


def test_sweep_bit_identical_across_reruns_and_jobs(fast_sweep):
    d, codes = fast_sweep
    assert codes[0] == codes[1]
    for f in ("report.csv", "criteria.csv"):
        assert (d / "a" / f).read_bytes() == (d / "b" / f).read_bytes()


def test_single_eps_sweep_matches_run(tmp_path):
    cfg = write(tmp_path, "c.yaml", FAST_SWEEP.replace("[1.0e-1, 5.0e-2, 2.0e-2]", "[1.0e-1]"))
    main(["run", str(cfg), "--out", str(tmp_path / "r")])
    main(["sweep", str(cfg), "--out", str(tmp_path / "s")])
    for f in ("report.csv", "criteria.csv"):
        assert (tmp_path / "r" / f).read_bytes() == (tmp_path / "s" / f).read_bytes()
