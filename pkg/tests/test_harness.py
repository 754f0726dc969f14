from __future__ import annotations

import csv
import io

import numpy as np
import pytest

from mdauction.cli import main
from mdauction.harness import (
    ConfigError,
    ExperimentError,
    build_setting,
    describe_spec,
    heatmap_text,
    is_lower_left_rectangle,
    load_config,
    masks_fuzzy_equal,
    parse_config,
    run_experiment,
    shipped_configs,
)
from mdauction.typespace import Beta, Box, Mixture, Product, TableDensity, TruncNormal, Uniform, build_grid

SETTING1 = """
# two grades, uniform values
name = setting1
N = 2
J = 2
lower = 2, 2
upper = 3, 3
costs = 0, 0
T = 20
dist.kind = uniform
"""

SMALL = """
name = small
N = 1, 2
lower = 0, 0
upper = 1, 1
costs = 0, 0
T = 4
dist.kind = uniform
"""


def test_parse_setting1():
    c = parse_config(SETTING1)
    assert c.name == "setting1" and c.N_list == (2,) and c.J == 2
    assert c.box == Box((2, 2), (3, 3))
    assert c.costs == (0, 0) and c.T == 20
    assert isinstance(c.dist, Uniform)
    assert c.solver.max_inner == 200 and c.tau == 1e-6


def test_T_zero_rejected():
    with pytest.raises(ConfigError, match="T must be >= 1") as info:
        parse_config(SETTING1.replace("T = 20", "T = 0"))
    assert info.value.line == 9


def test_costs_length_checked():
    with pytest.raises(ConfigError, match="costs"):
        parse_config(SETTING1.replace("costs = 0, 0", "costs = 0"))


def test_unknown_key_has_line_number():
    with pytest.raises(ConfigError) as info:
        parse_config(SETTING1 + "colour = blue\n")
    assert info.value.line == 11 and "colour" in str(info.value)


def test_malformed_line():
    with pytest.raises(ConfigError, match="line 3"):
        parse_config("name = x\nN = 1\nthis is not a pair\n")


def test_duplicate_and_missing_keys():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(SETTING1 + "N = 3\n")
    with pytest.raises(ConfigError, match="dist.kind"):
        parse_config(SETTING1.replace("dist.kind = uniform", ""))
    with pytest.raises(ConfigError, match="N"):
        parse_config(SETTING1.replace("N = 2", "N = 0"))


def test_inapplicable_dist_key_rejected():
    with pytest.raises(ConfigError, match="dist.a"):
        parse_config(SETTING1 + "dist.a = 2\n")


def test_mixture_with_plain_alpha():
    text = SMALL.replace("dist.kind = uniform", "alpha = 0.5\ndist.kind = mixture\ndist.first.kind = uniform\n"
                         "dist.second.kind = beta\ndist.second.a = 1\ndist.second.b = 2")
    c = parse_config(text)
    assert c.dist == Mixture(0.5, Uniform(), Beta(1, 2))


def test_fractions_and_products():
    text = SMALL.replace("dist.kind = uniform", "dist.kind = mixture\ndist.alpha = 1/3\ndist.first.kind = product\n"
                         "dist.first.d1.kind = uniform\ndist.first.d2.kind = truncnormal\ndist.first.d2.stddev = 0.1\n"
                         "dist.second.kind = uniform")
    c = parse_config(text)
    assert c.dist.alpha == pytest.approx(1 / 3)
    assert c.dist.first == Product((Uniform(), TruncNormal(stddev=(0.1,))))


def test_table_density():
    text = SMALL.replace("T = 4", "T = 1").replace("dist.kind = uniform", "dist.kind = table\ndist.values = 1 2 3 4")
    c = parse_config(text)
    assert isinstance(c.dist, TableDensity)
    assert build_setting(c, 1).f.tolist() == [0.1, 0.2, 0.3, 0.4]
    with pytest.raises(ConfigError, match="dist.values"):
        parse_config(text.replace("1 2 3 4", "1 2 3"))


def test_solver_overrides():
    c = parse_config(SETTING1 + "solver.max_inner = 50\ntau = 1e-5\nsolver.violation_tol = 1e-8\n")
    assert c.solver.max_inner == 50 and c.tau == 1e-5 and c.solver.violation_tol == 1e-8
    with pytest.raises(ConfigError):
        parse_config(SETTING1 + "tau = 1e-12\n")  # must exceed the LP tolerance


def test_shipped_configs_parse():
    names = shipped_configs()
    assert {"myerson_j1", "setting1", "setting2_n1", "setting2_n2"} <= set(names)
    assert sum(n.startswith("setting3") for n in names) == 9
    for n in names:
        load_config(n)
    assert load_config("setting2_n2").costs == (0.9, 5)
    assert describe_spec(load_config("setting3a_truncnormal").dist, Box((0, 0), (1, 1))).startswith(
        "truncnormal(mean=[0.5 0.5],stddev=[0.25 0.25])")


def test_missing_config():
    with pytest.raises(FileNotFoundError):
        load_config("no_such_setting")


# -- artifacts ------------------------------------------------------------------

def _pixels(text):
    lines = text.splitlines()
    assert lines[0] == "P2" and lines[2] == "255"
    w, h = map(int, lines[1].split())
    rows = [list(map(int, l.split())) for l in lines[3:]]
    assert len(rows) == h and all(len(r) == w for r in rows)
    return np.array(rows)


def test_heatmap_levels():
    assert np.all(_pixels(heatmap_text(np.ones(6), (2, 3))) == 255)
    assert np.all(_pixels(heatmap_text(np.zeros(6), (2, 3))) == 0)
    assert np.all(_pixels(heatmap_text(np.full(6, 0.5), (2, 3))) == 128)
    assert np.all(_pixels(heatmap_text(np.array([2.0, -1, 0, 0, 0, 0]), (2, 3)))[[-1, -1], [0, 1]] == [255, 0])


def test_heatmap_orientation():
    # value = index; grid (n1=2, n2=3): top row is highest v2
    px = _pixels(heatmap_text(np.arange(6) / 5, (2, 3)))
    assert px.shape == (3, 2)
    assert px[0].tolist() == [round(255 * 2 / 5), 255]
    assert px[-1].tolist() == [0, round(255 * 3 / 5)]


def test_heatmap_needs_two_dimensions():
    with pytest.raises(ValueError):
        heatmap_text(np.zeros(3), (3,))


def test_rectangle_test():
    g = build_grid(Box((0, 0), (1, 1)), 4)
    rect = np.all(g.points <= [0.5, 0.25], axis=1)
    assert is_lower_left_rectangle(rect, g)
    assert is_lower_left_rectangle(np.zeros(g.size, bool), g)
    tri = g.points.sum(axis=1) <= 0.5
    assert not is_lower_left_rectangle(tri, g)


def test_fuzzy_mask_equality():
    shape = (5, 5)
    a = np.zeros(shape, bool)
    a[:2, :2] = True
    b = a.copy()
    b[2, 0] = True
    c = a.copy()
    c[4, 4] = True
    assert masks_fuzzy_equal(a.ravel(), b.ravel(), shape)
    assert not masks_fuzzy_equal(a.ravel(), c.ravel(), shape)


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    return run_experiment(parse_config(SMALL), out), out


def test_run_writes_artifacts(small_run):
    report, out = small_run
    for N in (1, 2):
        d = out / f"N{N}"
        assert {p.name for p in d.iterdir()} == {
            "solution.csv", "Q1.pgm", "Q2.pgm", "exclusion.pgm", "report.txt", "report.csv"}
        rows = list(csv.reader(io.StringIO((d / "solution.csv").read_text())))
        assert rows[0] == ["v_1", "v_2", "Q_1", "Q_2", "U", "M", "excluded"]
        assert len(rows) - 1 == 25
        assert not any(cell == "-0" for row in rows for cell in row)
    assert (out / "report.txt").exists() and (out / "report.csv").exists()
    assert report.ok


def test_report_gap_identity(small_run):
    _, out = small_run
    kv = dict(csv.reader(io.StringIO((out / "report.csv").read_text())))
    for N in (1, 2):
        total, ebm, gap = (float(kv[f"N{N}.{k}"]) for k in ("total_revenue", "ebm_revenue", "gap"))
        assert abs((total - ebm) / total - gap) <= 1e-12


def test_mask_verdict(small_run):
    report, _ = small_run
    assert report.masks_identical is not None
    assert report.mask_verdict.startswith("invariant across N: ")


def test_rerun_is_byte_identical(small_run, tmp_path):
    _, out = small_run
    run_experiment(parse_config(SMALL), tmp_path)
    for rel in ("N1/solution.csv", "N2/solution.csv", "N2/report.csv", "N2/Q1.pgm", "N2/exclusion.pgm", "report.csv"):
        assert (out / rel).read_bytes() == (tmp_path / rel).read_bytes(), rel


def test_errors_name_setting_and_N():
    cfg = parse_config(SMALL + "solver.max_inner = 1\n")
    report = run_experiment(cfg, solve=True, ebm=False)
    # an iteration limit keeps the uncertified incumbent and flags the run
    assert not report.ok
    assert all(r.error for r in report.runs)
    bad = parse_config(SMALL)
    bad.ebm_resolution = 0
    with pytest.raises(ExperimentError, match="small, N=1"):
        run_experiment(bad, solve=False, ebm=True)


def test_setting2_verdict_both_empty(tmp_path):
    cfg = parse_config(
        "name = s2\nN = 1, 2\nlower = 6, 9\nupper = 8, 11\ncosts = 0.9, 5\nT = 20\ndist.kind = uniform\n")
    report = run_experiment(cfg, solve=True, ebm=False)
    assert report.mask_verdict == "invariant across N: yes (both empty)"


# -- command line ----------------------------------------------------------------

def test_cli_list(capsys):
    assert main(["list"]) == 0
    assert "setting1" in capsys.readouterr().out.split()


def test_cli_solve_and_formats(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL)
    assert main(["solve", str(cfg), "--out", str(tmp_path / "o"), "--format", "csv"]) == 0
    files = {p.name for p in (tmp_path / "o" / "N2").iterdir()}
    assert "solution.csv" in files and "Q1.pgm" not in files
    assert "certified" in capsys.readouterr().out


def test_cli_ebm_and_compare(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL)
    assert main(["ebm", str(cfg)]) == 0
    assert "EBM" in capsys.readouterr().out
    assert main(["compare", str(cfg), "--tol", "1e-7", "--seed", "3", "--threads", "2"]) == 0
    assert "gap" in capsys.readouterr().out


def test_cli_exclusion(tmp_path, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL)
    assert main(["exclusion", str(cfg), "--out", str(tmp_path / "x")]) == 0
    assert "invariant across N" in capsys.readouterr().out


def test_cli_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(SMALL.replace("T = 4", "T = 0"))
    assert main(["solve", str(cfg)]) == 2
    assert "T must be >= 1" in capsys.readouterr().err
    assert main(["solve", "nowhere"]) == 2


def test_cli_uncertified_exit_status(tmp_path):
    cfg = tmp_path / "tight.cfg"
    cfg.write_text(SMALL + "solver.max_inner = 1\n")
    assert main(["solve", str(cfg)]) == 1


def test_cli_validate_quick(capsys):
    code = main(["validate", "--quick", "--trials", "50"])
    out = capsys.readouterr().out
    assert "checks passed" in out
    assert code == 0, out
