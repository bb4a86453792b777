import math

import numpy as np
import pytest

from randpf.experiments import (
    CSV_HEADER,
    ConfigError,
    CountStats,
    ExperimentConfig,
    ResultTable,
    default_config,
    diagonal_union_bound_demo,
    ghz_counterexample,
    loglog_slope,
    many_body_lower_bound,
    max_phase_error,
    random_product_state,
    run_error_vs_gatecount,
    run_error_vs_systemsize,
    run_experiment,
    saturation_many_body,
    saturation_single_site,
    single_site_error,
    single_site_lower_bound,
    suzuki_comparison,
    tail_dominance_study,
)
from randpf.formulas import ProductFormulaPlan, SeededRng, diagonal_phases, first_order_plan, qdrift_sample, realize_unitary
from randpf.hamiltonian import all_z_strings, dense, single_site_z
from randpf.linalg import expm_hermitian, operator_norm


class TestProductState:
    def test_norm(self):
        psi = random_product_state(5, SeededRng(1))
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)

    def test_bloch_mean(self):
        gen = np.random.default_rng(3)
        bloch = []
        for _ in range(10_000):
            a, b = random_product_state(1, gen)
            bloch.append([2 * (np.conj(a) * b).real, 2 * (np.conj(a) * b).imag, abs(a) ** 2 - abs(b) ** 2])
        bloch = np.array(bloch)
        se = bloch.std(axis=0) / math.sqrt(len(bloch))
        assert np.all(np.abs(bloch.mean(axis=0)) <= 3 * se)

    def test_reproducible(self):
        np.testing.assert_array_equal(random_product_state(4, SeededRng(9, (1,))), random_product_state(4, SeededRng(9, (1,))))


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigError) as err:
            ExperimentConfig("x", reps=0).validate()
        assert err.value.flag == "reps"
        with pytest.raises(ConfigError):
            ExperimentConfig("x", N_grid=(10, 0)).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig("x", method="magic").validate()

    def test_round_trip(self):
        cfg = default_config("fig3-gatecount", reps=3)
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"experiment": "x", "colour": 1})


class TestGatecount:
    def test_zero_time(self):
        table = run_error_vs_gatecount(default_config("fig3-gatecount", t=0.0, N_grid=(10, 20), reps=3))
        assert np.all(table.values("worst_case") == pytest.approx(0.0, abs=1e-12))
        assert np.all(table.values("fixed_input") == pytest.approx(0.0, abs=1e-12))

    def test_fixed_input_below_worst_case(self):
        table = run_error_vs_gatecount(default_config("fig3-gatecount", N_grid=(10, 40, 160), reps=10))
        for N in (10, 40, 160):
            assert table.value("fixed_input_mean", 4, N) <= table.value("worst_case_mean", 4, N)

    def test_error_ordering_per_rep(self):
        cfg = default_config("fig3-gatecount", N_grid=(40,), reps=10, metrics=("worst_case", "fixed_input", "fixed_input_trace"))
        table = run_error_vs_gatecount(cfg)
        w, f, tr = (table.values(m) for m in ("worst_case", "fixed_input", "fixed_input_trace"))
        assert np.all(f <= w + 1e-12)
        assert np.all(tr <= f + 1e-12)

    def test_fixed_input_only_path(self):
        a = run_error_vs_gatecount(default_config("fig3-gatecount", N_grid=(20,), reps=4, metrics=("fixed_input",)))
        b = run_error_vs_gatecount(default_config("fig3-gatecount", N_grid=(20,), reps=4))
        np.testing.assert_allclose(a.values("fixed_input"), b.values("fixed_input"), atol=1e-12)

    def test_std_shrinks_with_N(self):
        table = run_error_vs_gatecount(default_config("fig3-gatecount", N_grid=(80, 160, 320, 640), reps=50))
        stds = [table.value("fixed_input_std", 4, N) for N in (80, 160, 320, 640)]
        assert np.median(np.diff(stds)) < 0

    def test_other_methods(self):
        cfg = default_config("fig3-gatecount", n=3, N_grid=(12,), reps=2, method="first-order")
        table = run_error_vs_gatecount(cfg)
        vals = table.values("worst_case")
        assert vals[0] == vals[1] > 0
        cfg = default_config("fig3-gatecount", n=3, N_grid=(24,), reps=2, method="permuted-suzuki")
        assert len(run_error_vs_gatecount(cfg).values("worst_case")) == 2


class TestSystemsize:
    def test_reference_ratio_is_one(self):
        table = run_error_vs_systemsize(default_config("fig3-systemsize", n_grid=(4, 5), reps=4))
        assert table.value("worst_case_ratio", 4, 160) == 1.0
        assert table.value("fixed_input_ratio", 4, 160) == 1.0
        assert table.value("reference_sqrt_n_ratio", 5, 160) == pytest.approx(math.sqrt(5 / 4))


class TestGhz:
    def test_three_sites_of_eight(self):
        plan = ProductFormulaPlan([0, 1, 2, 1, 0], [math.pi / 5] * 5, [True] * 5)
        psi, dist = ghz_counterexample(8, plan)
        assert dist == pytest.approx(1.0, abs=1e-9)
        assert np.linalg.norm(psi) == pytest.approx(1.0)

    def test_all_sites_first_order_exact(self):
        H = single_site_z(2, 0.5)
        _, dist = ghz_counterexample(2, first_order_plan(H, math.pi, 2), strict=False)
        assert dist == pytest.approx(0.0, abs=1e-7)

    def test_strict_rejects_wide_plans(self):
        plan = ProductFormulaPlan([0, 1, 2, 3], [0.1] * 4, [True] * 4)
        with pytest.raises(ValueError):
            ghz_counterexample(8, plan)

    def test_hidden_phase(self):
        n = 8
        S = diagonal_phases(single_site_z(n, 1 / n), t=math.pi)
        ghz_bits = sum(1 << (n - 1 - k) for k in range(4))
        rel = np.exp(-1j * (S[ghz_bits] - S[0]))
        assert rel == pytest.approx(np.exp(2j * math.pi / n) ** (n // 2))
        assert rel == pytest.approx(-1)

    def test_experiment(self):
        table = run_experiment(default_config("ghz", reps=3))
        np.testing.assert_allclose(table.values("trace_distance"), 1.0, atol=1e-9)
        assert np.all(table.values("sites_touched") < 4)


class TestDiagonalDemo:
    def test_walsh_sum(self):
        S = diagonal_phases(all_z_strings(4, weight=1 / 16), t=1.0)
        np.testing.assert_allclose(S, np.eye(16)[0], atol=1e-14)

    def test_large_N_concentrates(self):
        table = diagonal_union_bound_demo(default_config("diagonal-union", N=100_000, reps=10))
        assert np.all(table.values("max_deviation") < 0.05)

    def test_union_bound_regime(self):
        table = diagonal_union_bound_demo(default_config("diagonal-union"))
        assert table.value("max_exceed_fraction") <= 0.5
        assert table.value("fixed_exceed_fraction") <= table.value("max_exceed_fraction")


class TestTails:
    def test_beyond_range(self):
        cfg = default_config("tails", reps=50, eps_grid=(2.5, 3.0, 5.0))
        table = tail_dominance_study(cfg)
        for eps in (2.5, 3.0, 5.0):
            assert table.value(f"survival_fluctuation@eps={eps!r}") == 0.0

    def test_doubling_N_shrinks_median(self):
        a = tail_dominance_study(default_config("tails", N=160, reps=200, eps_grid=(1.0,)))
        b = tail_dominance_study(default_config("tails", N=320, reps=200, eps_grid=(1.0,)))
        ratio = a.value("median_fluctuation") / b.value("median_fluctuation")
        assert 1.2 <= ratio <= 1.7


class TestSaturation:
    def test_max_phase_error_small_and_wrapped(self):
        assert max_phase_error([0.1, -0.2]) == pytest.approx(2 * math.sin(0.15))
        # sum of |theta| beyond pi: best signed sum is pi - 0.1 away from zero
        theta = [2.0, 1.2, 0.1]
        sums = [s1 * 2.0 + s2 * 1.2 + s3 * 0.1 for s1 in (1, -1) for s2 in (1, -1) for s3 in (1, -1)]
        assert max_phase_error(theta) == pytest.approx(max(2 * abs(math.sin(s / 2)) for s in sums))

    @pytest.mark.parametrize("seed", range(5))
    def test_single_site_matches_dense(self, seed):
        n, t, N = 3, 1.5, 7
        H = single_site_z(n)
        plan = qdrift_sample(H, t, N, SeededRng(seed))
        fast = single_site_error(CountStats.from_plan(plan, H).m, n, t, N)
        slow = operator_norm(realize_unitary(plan, H) - expm_hermitian(dense(H), t))
        assert fast == pytest.approx(slow, abs=1e-9)

    def test_counts(self):
        H = all_z_strings(3)
        stats = CountStats.from_plan(qdrift_sample(H, 1.0, 500, SeededRng(0)), H)
        assert stats.N == 500
        assert stats.s.sum() == pytest.approx(0.0, abs=1e-12)

    def test_many_body_matches_dense(self):
        cfg = default_config("saturation-many", n=3, t=0.4, N=9, reps=4)
        res = saturation_many_body(cfg)
        H = all_z_strings(3)
        U = expm_hermitian(dense(H), 0.4)
        for rep, val in enumerate(res.table.values("error")):
            plan = qdrift_sample(H, 0.4, 9, SeededRng(cfg.seed, (__import__("randpf.experiments").experiments.stream_id("saturation-many"), 3, 9, rep, 0)))
            assert val == pytest.approx(operator_norm(realize_unitary(plan, H) - U), abs=1e-9)

    def test_bounds_arithmetic(self):
        assert single_site_lower_bound(8, 1.0, 10_000) == pytest.approx(0.14648, abs=1e-5)
        assert many_body_lower_bound(6, 0.15625, 10_000) == pytest.approx(0.5 * math.sqrt(0.06) - 13 * 0.01)

    def test_single_site_vanishes_with_N(self):
        small = saturation_single_site(default_config("saturation-single", n=4, N=10**6, reps=20))
        big = saturation_single_site(default_config("saturation-single", n=4, N=10**4, reps=20))
        assert small.mean < big.mean / 5


class TestSuzukiComparison:
    def test_single_term_exact(self):
        from randpf import experiments

        table = suzuki_comparison(default_config("suzuki", model="single-site-z", n=1, reps=2))
        for m in table.metrics():
            if not m.endswith("_std"):
                np.testing.assert_allclose(table.values(m, rep="all"), 0.0, atol=1e-10)

    def test_randomness(self):
        table = suzuki_comparison(default_config("suzuki", reps=6))
        assert table.value("suzuki2_deterministic_std") == 0.0
        assert table.value("suzuki2_permuted_std") > 0.0


class TestTable:
    def test_csv_round_trip(self):
        table = run_experiment(default_config("ghz", reps=2))
        text = table.to_csv()
        assert text.splitlines()[0] == ",".join(CSV_HEADER)
        assert ResultTable.from_csv(text).to_csv() == text

    def test_summary_shape(self):
        table = run_experiment(default_config("ghz", reps=2))
        s = table.summary()
        assert set(s) >= {"config", "metrics"}
        assert set(next(iter(s["metrics"].values()))) == {"mean", "std", "count"}

    @pytest.mark.parametrize("name", ["fig3-gatecount", "diagonal-union", "saturation-single", "suzuki"])
    def test_workers_do_not_change_output(self, name):
        cfg = default_config(name, reps=4)
        if name == "fig3-gatecount":
            cfg.N_grid = (10, 40)
        serial = run_experiment(cfg).to_csv()
        cfg.workers = 2
        assert run_experiment(cfg).to_csv() == serial


def test_loglog_slope():
    x = np.array([1.0, 2.0, 4.0])
    assert loglog_slope(x, 3 * x**-0.5) == pytest.approx(-0.5)
