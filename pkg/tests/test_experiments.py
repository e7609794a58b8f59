import csv
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from asis_panel.experiments import (ExperimentGrid, load_grid_config, pattern_parameters, run_grid,
                                    write_grid_outputs)
from asis_panel.samplers import Scheme


class TestPatterns:
    def test_boundary_pattern(self):
        pp = pattern_parameters(3, 10)
        assert pp.sigma_eps == math.sqrt(10) and pp.sigma_alpha == 1.0
        assert pp.sigma_eps_sq == 10 * pp.sigma_alpha_sq

    def test_long_panel_noise(self):
        assert pattern_parameters(2, 100).sigma_eps == math.sqrt(1000)

    @pytest.mark.parametrize("T, expect", [
        (10, [(1, 1), (10, 1), (math.sqrt(10), 1)]),
        (100, [(math.sqrt(10), 1), (math.sqrt(1000), 1), (10, 1)]),
    ])
    def test_published_table_notes(self, T, expect):
        for pid, (se, sa) in enumerate(expect, 1):
            pp = pattern_parameters(pid, T)
            assert pp.sigma_eps == pytest.approx(se, rel=1e-15)
            assert pp.sigma_alpha == sa

    def test_inequalities(self):
        for T in (1, 10, 100, 333):
            assert pattern_parameters(1, T).sigma_eps_sq < T
            assert pattern_parameters(2, T).sigma_eps_sq > T
            assert pattern_parameters(3, T).sigma_eps_sq == T

    @pytest.mark.parametrize("bad", [0, 4, "x"])
    def test_unknown(self, bad):
        with pytest.raises(ValueError):
            pattern_parameters(bad, 10)


def small_grid(**kw):
    base = ExperimentGrid(panel_sizes=[(10, 10), (20, 5)], patterns=[1, 2], iterations=400,
                          burn_in=50, replications=3, base_seed=7, max_lag=10)
    return replace(base, **kw)


class TestGrid:
    def test_defaults(self):
        g = ExperimentGrid()
        assert (g.iterations, g.burn_in, g.replications) == (10_000, 1_000, 100)
        assert g.panel_sizes == [(10, 10), (10, 100), (500, 10), (500, 100)]
        assert g.schemes == [Scheme.SA, Scheme.AA, Scheme.ASIS_SA_AA]

    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentGrid(burn_in=10_000)
        with pytest.raises(ValueError):
            ExperimentGrid(patterns=[5])

    def test_deterministic_and_thread_independent(self):
        a = run_grid(small_grid(), threads=1)
        b = run_grid(small_grid(), threads=2)
        assert a.rows == b.rows
        for k in a.acf_curves:
            np.testing.assert_array_equal(a.acf_curves[k], b.acf_curves[k])

    def test_adding_cells_keeps_existing(self):
        a = run_grid(small_grid(panel_sizes=[(10, 10)]), threads=1)
        b = run_grid(small_grid(), threads=1)
        for r in a.rows:
            assert b.row(r.N, r.T, r.pattern, r.scheme) == r

    def test_seed_changes_results(self):
        a = run_grid(small_grid(panel_sizes=[(10, 10)], patterns=[1]), threads=1)
        b = run_grid(small_grid(panel_sizes=[(10, 10)], patterns=[1], base_seed=8), threads=1)
        assert a.rows[0].mean_mcse != b.rows[0].mean_mcse

    def test_rows_sorted_and_positive(self):
        res = run_grid(small_grid(), threads=1)
        assert [r.key for r in res.rows] == sorted(r.key for r in res.rows)
        assert all(r.mean_mcse > 0 and r.n_replications == 3 for r in res.rows)
        assert len(res.rows) == 2 * 2 * 3

    def test_outputs(self, tmp_path):
        res = run_grid(small_grid(), threads=1)
        paths = write_grid_outputs(res, tmp_path)
        names = sorted(p.name for p in paths)
        assert names == ["acf_10_10.csv", "acf_20_5.csv", "summary.json", "table_10_10.csv",
                         "table_20_5.csv", "tables.csv"]
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["asis_order"] == ["asis-sa-aa"]
        assert summary["grid"]["base_seed"] == 7
        with open(tmp_path / "acf_10_10.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2 * 3 * 11
        assert {float(r["acf"]) for r in rows if r["lag"] == "0"} == {1.0}


def test_config_file(tmp_path):
    p = tmp_path / "grid.cfg"
    p.write_text("# reduced grid\npanel_sizes = 10x10, 500x100\npatterns = 2\n"
                 "replications = 5\nschemes = sa,aa,asis-aa-sa\ntau_alpha_sq = 50\n")
    g = load_grid_config(p)
    assert g.panel_sizes == [(10, 10), (500, 100)]
    assert g.patterns == [2] and g.replications == 5 and g.tau_alpha_sq == 50.0
    assert g.schemes[-1] is Scheme.ASIS_AA_SA
    p.write_text("bogus = 1\n")
    with pytest.raises(ValueError, match="bogus"):
        load_grid_config(p)
