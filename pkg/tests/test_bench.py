"""Benchmark families, the campaign runner and performance profiles."""

import numpy as np
import pytest

from screlax import (
    ExperimentConfig,
    ProfilePoint,
    ResultRow,
    SolverConfig,
    build_instance,
    dolan_more,
    duality_gap,
    gen_dictionary,
    gen_observation,
    read_config,
    read_results,
    run_experiment,
    solve,
    write_profile,
    write_results,
)
from screlax.bench import SETUPS, _dct_matrix


class TestDictionaries:
    @pytest.mark.parametrize("setup", SETUPS)
    def test_unit_columns(self, setup):
        A = gen_dictionary(setup, 20, 30, seed=5)
        np.testing.assert_allclose(
            np.linalg.norm(A, axis=0), np.ones(30), atol=1e-12
        )

    def test_deterministic(self):
        for setup in SETUPS:
            a = gen_dictionary(setup, 15, 25, seed=9)
            b = gen_dictionary(setup, 15, 25, seed=9)
            np.testing.assert_array_equal(a, b)
            if setup != "toeplitz":  # toeplitz is seed-independent
                c = gen_dictionary(setup, 15, 25, seed=10)
                assert not np.array_equal(a, c)

    def test_unknown_setup(self):
        with pytest.raises(ValueError, match="unknown setup"):
            gen_dictionary("hadamard", 10, 10, seed=0)

    def test_dct_square_is_orthonormal(self):
        A = gen_dictionary("dct", 32, 32, seed=1)
        np.testing.assert_allclose(A.T @ A, np.eye(32), atol=1e-10)
        d = _dct_matrix(32)
        np.testing.assert_allclose(d @ d.T, np.eye(32), atol=1e-10)

    def test_dct_needs_m_at_most_n(self):
        with pytest.raises(ValueError):
            gen_dictionary("dct", 33, 32, seed=0)

    def test_toeplitz_columns_are_shifts(self):
        m, n = 40, 20
        A = gen_dictionary("toeplitz", m, n, seed=0)
        # interior columns far from the window edge are exact one-sample
        # shifts of each other (column l+1 peaks one sample later)
        np.testing.assert_allclose(A[:-1, n // 2], A[1:, n // 2 + 1], atol=1e-12)

    def test_toeplitz_pulse_sigma(self):
        wide = gen_dictionary("toeplitz", 40, 10, seed=0, pulse_sigma=8.0)
        narrow = gen_dictionary("toeplitz", 40, 10, seed=0, pulse_sigma=1.0)
        # wider pulses are more coherent
        assert (wide[:, 0] @ wide[:, 1]) > (narrow[:, 0] @ narrow[:, 1])

    def test_coherence_ordering(self):
        # uniform and toeplitz dictionaries are markedly more coherent
        # than gaussian ones (their tests should fire later)
        def median_coherence(setup):
            vals = []
            for seed in range(20):
                A = gen_dictionary(setup, 20, 30, seed=seed)
                g = np.abs(A.T @ A)
                np.fill_diagonal(g, 0.0)
                vals.append(g.max())
            return float(np.median(vals))

        base = median_coherence("gaussian")
        assert median_coherence("uniform") > base
        assert median_coherence("toeplitz") > base


class TestObservations:
    @pytest.mark.parametrize("setup", SETUPS)
    def test_unit_norm_and_orthant(self, setup):
        y = gen_observation(setup, 25, seed=3)
        assert np.linalg.norm(y) == pytest.approx(1.0, abs=1e-12)
        if setup in ("uniform", "toeplitz"):
            assert y.min() >= 0.0

    def test_deterministic(self):
        a = gen_observation("gaussian", 25, seed=3)
        b = gen_observation("gaussian", 25, seed=3)
        np.testing.assert_array_equal(a, b)


class TestBuildInstance:
    def test_weights_scale_with_lambda_max(self):
        p = build_instance("gaussian", 15, 25, 0, 1, 0.2, 0.5)
        lmax = float(np.max(p.A.T @ p.y))
        np.testing.assert_allclose(p.lam, 0.2 * lmax, rtol=1e-14)
        assert p.eps == pytest.approx(0.5 * lmax, rel=1e-14)

    def test_lambda_frac_above_one_certifies_immediately(self):
        p = build_instance("gaussian", 15, 25, 4, 5, 1.5, 0.5)
        for variant in ("apg", "apgs", "apgr", "sr"):
            x, trace = solve(p, SolverConfig(variant=variant))
            assert trace.status == "optimal"
            assert trace.final.gap == 0.0
            np.testing.assert_array_equal(x, np.zeros(p.n))


class TestExperimentConfig:
    def kw(self, **over):
        base = dict(setup="gaussian", m=10, n=15, lambda_frac=0.2,
                    epsilon_frac=0.5, n_instances=2, flop_budget=50_000, seed=0)
        base.update(over)
        return base

    def test_validation(self):
        ExperimentConfig(**self.kw())
        with pytest.raises(ValueError, match="setup"):
            ExperimentConfig(**self.kw(setup="fourier"))
        with pytest.raises(ValueError, match="lambda_frac"):
            ExperimentConfig(**self.kw(lambda_frac=1.0))
        with pytest.raises(ValueError, match="epsilon_frac"):
            ExperimentConfig(**self.kw(epsilon_frac=0.0))
        with pytest.raises(ValueError, match=">= 1"):
            ExperimentConfig(**self.kw(n_instances=0))
        with pytest.raises(ValueError, match="tau_grid"):
            ExperimentConfig(**self.kw(tau_grid=()))


class TestRunExperiment:
    CFG = ExperimentConfig(
        setup="gaussian", m=10, n=15, lambda_frac=0.2, epsilon_frac=0.5,
        n_instances=3, flop_budget=40_000, seed=100,
    )

    def test_row_count_and_keys(self):
        rows = run_experiment(self.CFG)
        assert len(rows) == 3 * 4
        assert {r.variant for r in rows} == {"apg", "apgs", "apgr", "sr"}
        assert {r.seed for r in rows} == {100, 102, 104}
        assert all(r.setup == "gaussian" and r.flops_budget == 40_000
                   for r in rows)

    def test_reproducible(self):
        a = run_experiment(self.CFG)
        b = run_experiment(self.CFG)
        assert a == b

    def test_workers_do_not_change_rows(self):
        a = run_experiment(self.CFG, workers=1)
        b = run_experiment(self.CFG, workers=2)
        assert a == b

    def test_zero_budget_reports_initial_gap(self):
        cfg = ExperimentConfig(
            setup="gaussian", m=10, n=15, lambda_frac=0.2, epsilon_frac=0.5,
            n_instances=2, flop_budget=0, seed=100,
        )
        rows = run_experiment(cfg)
        for i in range(2):
            p = build_instance("gaussian", 10, 15, 100 + 2 * i, 101 + 2 * i,
                               0.2, 0.5)
            expect = duality_gap(p, np.zeros(p.n), p.y)
            for r in rows:
                if r.seed == 100 + 2 * i:
                    assert r.final_gap == pytest.approx(expect, rel=1e-12)


class TestDolanMore:
    def rows(self, gaps, variant="sr"):
        return [ResultRow("gaussian", 2 * i, variant, 1000, g)
                for i, g in enumerate(gaps)]

    def test_pinned_fraction(self):
        pts = dolan_more(self.rows([1e-2, 1e-6, 1e-10]), tau_grid=(1e-4,))
        assert len(pts) == 1
        assert pts[0].rho == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_all_zero_gaps(self):
        pts = dolan_more(self.rows([0.0, 0.0]), tau_grid=(1e-16, 1e-8, 1.0))
        assert all(p.rho == 1.0 for p in pts)

    def test_nondecreasing_in_tau(self):
        rng = np.random.default_rng(0)
        rows = self.rows(10.0 ** rng.uniform(-14, 0, 50))
        pts = dolan_more(rows)
        rhos = [p.rho for p in pts]
        assert all(b >= a for a, b in zip(rhos, rhos[1:]))

    def test_groups_by_variant(self):
        rows = self.rows([1e-3], "apg") + self.rows([1e-9], "sr")
        pts = dolan_more(rows, tau_grid=(1e-6,))
        byv = {p.variant: p.rho for p in pts}
        assert byv == {"apg": 0.0, "sr": 1.0}

    def test_empty_results(self):
        with pytest.raises(ValueError, match="empty"):
            dolan_more([])

    def test_profile_point_range(self):
        with pytest.raises(ValueError, match="rho"):
            ProfilePoint("sr", 1e-6, 1.5)


class TestFiles:
    def test_config_round_trip(self, tmp_path):
        path = tmp_path / "campaign.cfg"
        path.write_text(
            "# gaussian smoke campaign\n"
            "setup = gaussian\n"
            "m = 10\n"
            "n = 15\n"
            "lambda_frac = 0.2\n"
            "epsilon_frac = 0.5\n"
            "n_instances = 3\n"
            "flop_budget = 2e6\n"
            "seed = 100  # instance stream base\n"
            "tau_grid = 1e-8, 1e-4, 1\n"
        )
        cfg = read_config(path)
        assert cfg.setup == "gaussian" and cfg.flop_budget == 2_000_000
        assert cfg.tau_grid == (1e-8, 1e-4, 1.0)

    def test_config_errors_carry_line_numbers(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("setup = gaussian\nm 10\n")
        with pytest.raises(ValueError, match="line 2"):
            read_config(path)
        path.write_text("setup = gaussian\nwidth = 10\n")
        with pytest.raises(ValueError, match="line 2: unknown key"):
            read_config(path)
        path.write_text("setup = gaussian\nm = ten\n")
        with pytest.raises(ValueError, match="line 2: bad value"):
            read_config(path)
        path.write_text("setup = gaussian\nm = 10\n")
        with pytest.raises(ValueError, match="incomplete"):
            read_config(path)

    def test_results_round_trip(self, tmp_path):
        rows = [
            ResultRow("gaussian", 100, "sr", 2_000_000, 1.2345e-9),
            ResultRow("dct", 102, "apg", 2_000_000, 0.125),
        ]
        path = tmp_path / "results.csv"
        write_results(rows, path)
        assert read_results(path) == rows

    def test_results_malformed(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("setup,seed,gap\n")
        with pytest.raises(ValueError, match="header"):
            read_results(path)
        path.write_text(
            "setup,seed,variant,flops_budget,final_gap\ngaussian,0,sr,10\n"
        )
        with pytest.raises(ValueError, match="line 2"):
            read_results(path)
        path.write_text(
            "setup,seed,variant,flops_budget,final_gap\ngaussian,x,sr,10,0.5\n"
        )
        with pytest.raises(ValueError, match="line 2: malformed"):
            read_results(path)

    def test_profile_file(self, tmp_path):
        pts = [ProfilePoint("sr", 1e-6, 0.5), ProfilePoint("apg", 1e-6, 0.25)]
        path = tmp_path / "profile.csv"
        write_profile(pts, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "variant,tau,rho"
        assert lines[1].startswith("sr,") and lines[2].startswith("apg,")
