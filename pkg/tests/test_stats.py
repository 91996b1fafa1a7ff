import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maser.errors import ValidationError
from maser.stats import (
    bootstrap_diff,
    chi_square,
    mann_whitney_u,
    mcnemar,
    two_proportion_z,
)
from oracles import exact_mwu_pvalue, u_statistic_by_counting


class TestChiSquare:
    def test_perfect_homogeneity(self):
        r = chi_square([[10, 10], [10, 10]])
        assert r.statistic == 0.0 and r.p_value == 1.0

    def test_hand_computed_2x2(self):
        # expected counts 12/18/28/42 give sum (O-E)^2/E = 50/63
        r = chi_square([[10, 20], [30, 40]])
        assert r.statistic == pytest.approx(0.7936507936507936, abs=1e-12)
        assert r.detail["df"] == 1

    def test_table_equal_to_expected(self):
        # outer product of margins / total: statistic exactly 0
        r = chi_square([[12, 18], [28, 42]])
        assert r.statistic == pytest.approx(0.0, abs=1e-12)

    def test_zero_marginal_errors(self):
        with pytest.raises(ValidationError):
            chi_square([[0, 0], [10, 10]])
        with pytest.raises(ValidationError):
            chi_square([[0, 10], [0, 10]])

    def test_matches_squared_z_on_2x2(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n1, n2 = rng.integers(5, 200, size=2)
            s1 = int(rng.integers(1, n1))
            s2 = int(rng.integers(1, n2))
            table = [[s1, n1 - s1], [s2, n2 - s2]]
            chi = chi_square(table)
            z = two_proportion_z(s1, int(n1), s2, int(n2))
            assert chi.statistic == pytest.approx(z.statistic**2, abs=1e-9)


class TestMannWhitney:
    def test_exhaustive_small_case(self):
        # all 20 assignments of 3-of-6 ranks; only one reaches U=0
        r = mann_whitney_u([1, 2, 3], [4, 5, 6])
        assert r.detail["U"] == 0.0
        assert r.p_value == pytest.approx(0.1, abs=1e-12)

    def test_identical_multisets_symmetric_u(self):
        x = [3, 1, 4, 1, 5]
        r = mann_whitney_u(x, list(x))
        assert r.detail["U"] == pytest.approx(len(x) * len(x) / 2)

    def test_single_swap_changes_u_by_one(self):
        # pairwise recount: ([1,4],[2,3]) has U=2; swapping 4 and 3 gives U=1
        u_before = u_statistic_by_counting([1, 4], [2, 3])
        u_after = u_statistic_by_counting([1, 3], [2, 4])
        assert u_before - u_after == 1.0
        assert mann_whitney_u([1, 4], [2, 3]).detail["U"] == u_before
        assert mann_whitney_u([1, 3], [2, 4]).detail["U"] == u_after

    def test_u_matches_pairwise_counting_with_ties(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            x = rng.integers(0, 6, size=rng.integers(2, 12)).astype(float)
            y = rng.integers(0, 6, size=rng.integers(2, 12)).astype(float)
            assert mann_whitney_u(x, y).detail["U"] == pytest.approx(
                u_statistic_by_counting(x, y)
            )

    def test_exact_path_matches_enumeration_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            x = rng.integers(0, 8, size=4).astype(float)
            y = rng.integers(0, 8, size=5).astype(float)
            r = mann_whitney_u(x, y, method="exact")
            assert r.p_value == pytest.approx(exact_mwu_pvalue(x, y), abs=1e-12)

    def test_relabeling_swaps_u_preserves_p(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            x = rng.normal(size=rng.integers(3, 12))
            y = rng.normal(size=rng.integers(3, 12))
            a = mann_whitney_u(x, y)
            b = mann_whitney_u(y, x)
            assert a.detail["U"] + b.detail["U"] == pytest.approx(len(x) * len(y))
            assert a.p_value == pytest.approx(b.p_value, abs=1e-12)

    def test_all_identical_zero_variance(self):
        r = mann_whitney_u([2, 2, 2], [2, 2])
        assert r.p_value == 1.0 and r.detail["zero_variance"]

    def test_exact_vs_normal_agreement_8_8(self):
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(1000):
            x = rng.normal(size=8)
            y = rng.normal(loc=rng.uniform(-1, 1), size=8)
            pe = mann_whitney_u(x, y, method="exact").p_value
            pn = mann_whitney_u(x, y, method="normal").p_value
            worst = max(worst, abs(pe - pn))
        assert worst < 0.02


class TestTwoProportionZ:
    def test_equal_proportions(self):
        r = two_proportion_z(50, 100, 50, 100)
        assert r.statistic == 0.0 and r.p_value == 1.0

    def test_hand_computed(self):
        r = two_proportion_z(40, 100, 30, 100)
        assert r.statistic == pytest.approx(1.4824986333222024, abs=1e-9)

    def test_antisymmetry(self):
        a = two_proportion_z(40, 100, 30, 90)
        b = two_proportion_z(30, 90, 40, 100)
        assert a.statistic == pytest.approx(-b.statistic)
        assert a.p_value == pytest.approx(b.p_value)

    def test_degenerate_pooled(self):
        assert two_proportion_z(0, 10, 0, 20).p_value == 1.0
        assert two_proportion_z(10, 10, 20, 20).p_value == 1.0

    def test_bad_inputs(self):
        with pytest.raises(ValidationError):
            two_proportion_z(5, 4, 1, 10)


class TestMcNemar:
    def test_symmetric_discordance(self):
        r = mcnemar(5, 5)
        assert r.statistic == 0.0 and r.p_value == 1.0

    def test_direct_formula(self):
        r = mcnemar(10, 20)
        assert r.statistic == pytest.approx(100 / 30, abs=1e-12)

    def test_continuity_correction(self):
        r = mcnemar(10, 20, corrected=True)
        assert r.statistic == pytest.approx(81 / 30, abs=1e-12)

    def test_degenerate(self):
        r = mcnemar(0, 0)
        assert r.p_value == 1.0 and r.detail["degenerate"]

    @given(st.integers(0, 500), st.integers(0, 500))
    def test_exchange_symmetry(self, b, c):
        assert mcnemar(b, c).statistic == mcnemar(c, b).statistic
        assert mcnemar(b, c).p_value == mcnemar(c, b).p_value


class TestBootstrap:
    @staticmethod
    def mean_metric(labels, values):
        return float(np.mean(values))

    def test_identical_groups_null(self):
        labels = np.ones(50)
        values = np.linspace(0, 1, 50)
        r = bootstrap_diff(self.mean_metric, (labels, values), (labels, values),
                           n_boot=500, seed=7)
        assert r.detail["ci_low"] <= 0 <= r.detail["ci_high"]
        assert r.p_value > 0.5

    def test_zero_variance_groups(self):
        a = (np.ones(4), np.ones(4))
        b = (np.zeros(4), np.zeros(4))
        r = bootstrap_diff(self.mean_metric, a, b, n_boot=200, seed=1)
        assert r.statistic == 1.0
        assert r.detail["ci_low"] == 1.0 and r.detail["ci_high"] == 1.0
        assert r.p_value == pytest.approx(2 / 200)

    def test_bit_reproducible(self):
        rng = np.random.default_rng(5)
        a = (rng.integers(0, 2, 30), rng.normal(size=30))
        b = (rng.integers(0, 2, 30), rng.normal(size=30))
        r1 = bootstrap_diff(self.mean_metric, a, b, n_boot=300, seed=42)
        r2 = bootstrap_diff(self.mean_metric, a, b, n_boot=300, seed=42)
        assert r1.detail["ci_low"] == r2.detail["ci_low"]
        assert r1.detail["ci_high"] == r2.detail["ci_high"]
        assert r1.p_value == r2.p_value

    def test_undefined_on_observed_data(self):
        def fussy(labels, values):
            if labels.sum() == 0:
                return None
            return float(values.mean())

        a = (np.zeros(5), np.ones(5))
        b = (np.ones(5), np.ones(5))
        with pytest.raises(ValidationError, match="observed"):
            bootstrap_diff(fussy, a, b, n_boot=100, seed=0)

    def test_redraw_budget_exhausted(self):
        calls = {"n": 0}

        def flaky(labels, values):
            calls["n"] += 1
            if calls["n"] <= 2:  # the two observed evaluations succeed
                return 0.0
            return None  # every resample is undefined

        a = (np.ones(5), np.ones(5))
        b = (np.ones(5), np.ones(5))
        with pytest.raises(ValidationError, match="budget"):
            bootstrap_diff(flaky, a, b, n_boot=100, seed=0)

    def test_n_boot_minimum(self):
        with pytest.raises(ValidationError):
            bootstrap_diff(self.mean_metric, (np.ones(3), np.ones(3)),
                           (np.ones(3), np.ones(3)), n_boot=50, seed=0)
