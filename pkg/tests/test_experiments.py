import json

import pytest

from fchaos.experiments import UnknownExperimentError, experiment_names, run_experiment
from fchaos.reports import all_pass, failed_checks, render_csv, render_json

ALL_NAMES = [
    "counterexample-3.1",
    "fourth-moment-6.1",
    "freeness-battery",
    "gue-crosscheck",
    "joint-convergence-4.5",
    "multivariate-6.4",
    "sequence-4",
    "transfer-5.2",
    "transfer-battery",
]


def stripped(report):
    doc = json.loads(render_json(report))
    del doc["runtime_ms"]
    return doc


class TestRegistry:
    def test_names_are_sorted_and_complete(self):
        assert experiment_names() == ALL_NAMES

    def test_unknown_name_lists_the_registry(self):
        with pytest.raises(UnknownExperimentError) as err:
            run_experiment("no-such-thing")
        for name in ALL_NAMES:
            assert name in str(err.value)

    def test_unknown_option_is_rejected_by_field(self):
        with pytest.raises(ValueError, match="order: not an option"):
            run_experiment("transfer-5.2", order=2)

    def test_none_options_fall_back_to_defaults(self):
        a = run_experiment("transfer-5.2")
        b = run_experiment("transfer-5.2", T=None, N=None, tol=None)
        assert stripped(a) == stripped(b)

    def test_reports_reproduce_bit_for_bit_except_runtime(self):
        a = run_experiment("counterexample-3.1")
        b = run_experiment("counterexample-3.1")
        assert stripped(a) == stripped(b)


class TestCounterexample:
    def test_passes_with_the_advertised_numbers(self):
        r = run_experiment("counterexample-3.1")
        assert all_pass(r), failed_checks(r)
        assert r.values["norm_f_cont1_g"] == 0.0
        assert abs(r.values["phi_F7"]) <= 1e-9
        assert abs(r.values["phi_G7"]) <= 1e-9
        assert r.values["phi_F7G7"] >= 32.0
        assert r.values["peak_tensor_entries"] == 2**21
        by_name = {v["name"]: v for v in r.verdicts}
        assert not by_name["alternating_word"]["is_free"]
        assert by_name["alternating_word"]["conclusive"]
        assert not by_name["permuted_contraction"]["conclusive"]


class TestFreenessBattery:
    def test_four_methods_agree_on_the_corpus(self):
        r = run_experiment("freeness-battery")
        assert all_pass(r), failed_checks(r)
        assert r.values["pair_count"] == 50
        assert r.values["free_pairs"] == 25
        assert r.values["tied_pairs"] == 25
        assert r.values["disagreeing_pairs"] == []
        assert len(r.verdicts) == 200
        assert r.values["max_gradient_two_path_gap"] <= 1e-9


class TestSequence:
    def test_staircase_rates_and_grid_independence(self):
        r = run_experiment("sequence-4")
        assert all_pass(r), failed_checks(r)
        assert r.values["ks"] == [2, 4, 8, 16, 32]
        assert r.values["full_contraction"] == r.values["full_contraction_refined_grid"]
        assert r.values["first_contraction_trending_to_zero"]
        assert not r.values["full_contraction_trending_to_zero"]
        assert r.trace is not None
        header = render_csv(r).splitlines()[0]
        assert header.startswith("index,")
        assert "contraction_norm_p1" in header

    @pytest.mark.parametrize("bad_n", [16, 48])
    def test_grid_must_resolve_every_staircase(self, bad_n):
        with pytest.raises(ValueError, match="N:"):
            run_experiment("sequence-4", N=bad_n)


class TestJointConvergence:
    def test_wigner_hypotheses_hold(self):
        r = run_experiment("joint-convergence-4.5")
        assert all_pass(r), failed_checks(r)
        assert r.values["cross_moments"] == [0.0] * 4
        assert r.values["square_covariances"] == [0.0] * 4
        assert "pass_fourth_moments_approach_two" in r.values
        assert len(r.verdicts) == 4
        assert all(v["is_free"] and v["conclusive"] for v in r.verdicts)

    def test_free_poisson_side_skips_the_wigner_rate(self):
        r = run_experiment("joint-convergence-4.5", kind="free_poisson")
        assert all_pass(r), failed_checks(r)
        assert "pass_fourth_moments_approach_two" not in r.values

    def test_validation(self):
        with pytest.raises(ValueError, match="kind:"):
            run_experiment("joint-convergence-4.5", kind="gauss")
        with pytest.raises(ValueError, match="N:"):
            run_experiment("joint-convergence-4.5", N=24)


class TestTransfer:
    def test_example_pair_splits_the_kinds(self):
        r = run_experiment("transfer-5.2")
        assert all_pass(r), failed_checks(r)
        assert r.values["wigner_free"] is True
        assert r.values["poisson_free"] is False
        assert abs(r.values["inner_product"]) <= 1e-3
        assert r.values["star1_norm"] >= 0.01

    def test_battery_sees_one_way_transfer_only(self):
        r = run_experiment("transfer-battery")
        assert all_pass(r), failed_checks(r)
        assert r.values["pair_count"] == 40
        assert r.values["wigner_only"] == 20
        assert r.values["poisson_only"] == 0
        assert r.values["both_free"] == 20

    def test_validation(self):
        with pytest.raises(ValueError, match="T, N"):
            run_experiment("transfer-5.2", N=1)
        with pytest.raises(ValueError, match="N:"):
            run_experiment("transfer-battery", N=2)


class TestFourthMoment:
    def test_identity_holds_across_kinds_and_orders(self):
        r = run_experiment("fourth-moment-6.1")
        assert all_pass(r), failed_checks(r)
        for kind in ("wigner", "free_poisson"):
            for order in (1, 2, 3):
                assert abs(r.values[f"{kind}_order{order}_gap"]) <= 1e-9

    def test_options_narrow_the_sweep(self):
        r = run_experiment("fourth-moment-6.1", kind="wigner", order=2)
        assert all_pass(r), failed_checks(r)
        assert "wigner_order2_gap" in r.values
        assert "wigner_order1_gap" not in r.values
        assert "free_poisson_order2_gap" not in r.values

    def test_validation(self):
        with pytest.raises(ValueError, match="order:"):
            run_experiment("fourth-moment-6.1", order=5)
        with pytest.raises(ValueError, match="kind:"):
            run_experiment("fourth-moment-6.1", kind="gauss")


class TestMultivariate:
    def test_default_dimension_two(self):
        r = run_experiment("multivariate-6.4")
        assert all_pass(r), failed_checks(r)
        assert r.values["norm_fourth_moment"] == pytest.approx(6.0, abs=1e-9)
        assert abs(r.values["identity_gap_wigner"]) <= 1e-9
        assert abs(r.values["identity_gap_free_poisson"]) <= 1e-9

    def test_scalar_case_reduces_to_the_fourth_moment(self):
        r = run_experiment("multivariate-6.4", d=1)
        assert r.values["norm_fourth_target"] == 2.0
        assert all_pass(r), failed_checks(r)

    def test_validation(self):
        with pytest.raises(ValueError, match="d:"):
            run_experiment("multivariate-6.4", d=9)


class TestGueCrosscheck:
    def test_small_scale_run_stays_within_bounds(self):
        r = run_experiment("gue-crosscheck", d=80, trials=4, k_max=3)
        assert all_pass(r), failed_checks(r)
        assert r.values["kernel_count"] == 20
        assert r.values["failures"] == []

    def test_validation(self):
        with pytest.raises(ValueError, match="d, trials"):
            run_experiment("gue-crosscheck", trials=1)
