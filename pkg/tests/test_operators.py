import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from softorder import oracle
from softorder.operators import (
    SoftOpResult,
    argsort,
    batched,
    hard_rank,
    hard_sort,
    jvp_soft,
    soft_rank,
    soft_rank_kl_direct,
    soft_sort,
    vjp_soft,
)
from softorder.projection import epsilon_min
from helpers import jacobian_from_jvp, jacobian_from_vjp, rel_error, tie_free


def sort_recovery_epsilon(theta):
    w = np.sort(theta)[::-1]
    rho = np.arange(len(theta), 0.0, -1.0)
    return 0.5 * epsilon_min(rho, w)


def rank_recovery_epsilon(theta):
    s = np.sort(-np.asarray(theta))[::-1]
    rho = np.arange(len(theta), 0.0, -1.0)
    return 0.5 * epsilon_min(s, rho)


class TestHardOperators:
    def test_argsort_unsorted_triple(self):
        assert_array_equal(argsort([1.0, 0.5, 2.0]).forward, [2, 0, 1])

    def test_argsort_stable_on_constant(self):
        assert_array_equal(argsort([4.0, 4.0, 4.0]).forward, [0, 1, 2])

    def test_argsort_direct_descending(self):
        assert_array_equal(argsort([2.9, 0.1, 1.2]).forward, [0, 2, 1])

    def test_hard_sort_and_rank_triple(self):
        assert_array_equal(hard_sort([1.0, 0.5, 2.0]), [2.0, 1.0, 0.5])
        assert_array_equal(hard_rank([1.0, 0.5, 2.0]), [2, 3, 1])

    def test_hard_rank_fig_one(self):
        assert_array_equal(hard_rank([2.9, 0.1, 1.2]), [1, 3, 2])

    def test_hard_rank_sorted_input_is_identity(self):
        assert_array_equal(hard_rank([9.0, 4.0, 1.0, 0.5]), [1, 2, 3, 4])

    def test_hard_rank_dtype_and_tie_policy(self):
        ranks = hard_rank([1.0, 2.0, 2.0, 0.0])
        assert ranks.dtype == np.int64
        assert_array_equal(ranks, [3, 1, 2, 4])


class TestSoftSort:
    def test_exact_recovery_regime(self):
        rng = np.random.default_rng(21)
        for reg in ("q", "e"):
            for _ in range(20):
                theta = tie_free(rng, 7)
                eps = sort_recovery_epsilon(theta)
                result = soft_sort(theta, eps, reg)
                assert_allclose(result.values, hard_sort(theta), atol=1e-9)

    def test_large_epsilon_collapses_to_mean(self):
        theta = np.array([0.4, -1.0, 2.2, 0.0])
        result = soft_sort(theta, 1e8, "q")
        assert_allclose(result.values, np.full(4, theta.mean()), atol=1e-6)

    def test_single_element_any_epsilon(self):
        for eps in (1e-6, 1.0, 1e6):
            assert_array_equal(soft_sort([3.7], eps).values, [3.7])

    def test_descending_values_non_increasing(self):
        rng = np.random.default_rng(22)
        for reg in ("q", "e"):
            for _ in range(50):
                theta = rng.standard_normal(6)
                values = soft_sort(theta, float(10 ** rng.uniform(-2, 2)), reg).values
                assert np.all(np.diff(values) <= 0)

    def test_ascending_mode_negates(self):
        theta = np.array([0.4, -1.0, 2.2, 0.0])
        asc = soft_sort(theta, 0.7, "q", "asc")
        desc = soft_sort(-theta, 0.7, "q", "desc")
        assert_array_equal(asc.values, -desc.values)
        assert np.all(np.diff(asc.values) >= 0)
        assert asc.direction == "asc"

    def test_sum_hyperplane_quadratic(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            theta = rng.standard_normal(8) * 3
            values = soft_sort(theta, float(10 ** rng.uniform(-2, 2)), "q").values
            assert_allclose(values.sum(), theta.sum(), rtol=1e-9, atol=1e-9)

    def test_exp_sum_hyperplane_entropic(self):
        rng = np.random.default_rng(24)
        for _ in range(30):
            theta = rng.standard_normal(8)
            values = soft_sort(theta, float(10 ** rng.uniform(-2, 2)), "e").values
            assert_allclose(np.exp(values).sum(), np.exp(theta).sum(), rtol=1e-9)


class TestSoftRank:
    def test_fig_one_exact(self):
        result = soft_rank([2.9, 0.1, 1.2], 1.0, "q")
        assert_allclose(result.values, [1.0, 3.0, 2.0], atol=1e-12)

    def test_exact_recovery_regime(self):
        rng = np.random.default_rng(25)
        for reg in ("q", "e"):
            for _ in range(20):
                theta = tie_free(rng, 7)
                eps = rank_recovery_epsilon(theta)
                result = soft_rank(theta, eps, reg)
                assert_allclose(result.values, hard_rank(theta), atol=1e-9)

    def test_large_epsilon_collapses_to_mid_rank(self):
        theta = np.array([0.4, -1.0, 2.2, 0.0, 1.0])
        result = soft_rank(theta, 1e8, "q")
        assert_allclose(result.values, np.full(5, 3.0), atol=1e-6)

    def test_values_stay_in_rank_interval_and_sum(self):
        rng = np.random.default_rng(26)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            theta = rng.standard_normal(n)
            values = soft_rank(theta, float(10 ** rng.uniform(-2, 2)), "q").values
            assert np.all(values >= 1.0 - 1e-9)
            assert np.all(values <= n + 1e-9)
            assert_allclose(values.sum(), n * (n + 1) / 2, rtol=1e-6)

    def test_rank_consistency_with_hard_rank(self):
        rng = np.random.default_rng(27)
        for reg in ("q", "e"):
            for _ in range(30):
                theta = tie_free(rng, 7)
                soft = soft_rank(theta, 0.3, reg).values
                assert_array_equal(np.argsort(soft, kind="stable"),
                                   np.argsort(hard_rank(theta), kind="stable"))

    def test_scale_absorption_identity(self):
        rng = np.random.default_rng(28)
        for reg in ("q", "e"):
            theta = rng.standard_normal(6)
            for eps in (0.25, 4.0):
                a = soft_rank(theta, eps, reg).values
                b = soft_rank(theta / eps, 1.0, reg).values
                assert_array_equal(a, b)

    def test_ascending_mode(self):
        theta = np.array([2.9, 0.1, 1.2])
        asc = soft_rank(theta, 0.1, "q", "asc")
        assert_allclose(asc.values, [3.0, 1.0, 2.0], atol=1e-9)
        assert_array_equal(asc.values, soft_rank(-theta, 0.1, "q", "desc").values)


class TestKlDirectRank:
    def test_sum_is_rank_total(self):
        rng = np.random.default_rng(29)
        for _ in range(30):
            n = int(rng.integers(1, 9))
            values = soft_rank_kl_direct(rng.standard_normal(n), 1.0).values
            assert_allclose(values.sum(), n * (n + 1) / 2, rtol=1e-6)

    def test_small_epsilon_recovers_hard_ranks(self):
        rng = np.random.default_rng(30)
        for _ in range(10):
            theta = tie_free(rng, 6)
            hard = hard_rank(theta)
            eps = 1.0
            for _ in range(60):
                values = soft_rank_kl_direct(theta, eps).values
                if np.max(np.abs(values - hard)) <= 1e-9:
                    break
                eps *= 0.5
            else:
                raise AssertionError("no epsilon reached the hard ranks")
            # threshold form: below eps_min of (sorted -theta, log rho) the
            # inner projection is exactly the permuted log-rank vector
            s = np.sort(-theta)[::-1]
            log_rho = np.log(np.arange(len(theta), 0.0, -1.0))
            exact = soft_rank_kl_direct(theta, 0.5 * epsilon_min(s, log_rho)).values
            assert_allclose(exact, hard, atol=1e-9)

    def test_single_element(self):
        assert_allclose(soft_rank_kl_direct([5.0], 2.0).values, [1.0], atol=1e-15)

    def test_metadata(self):
        result = soft_rank_kl_direct([1.0, 0.0], 2.0)
        assert result.kind == "rank-kl-direct"
        assert result.regularizer == "e"
        assert result.epsilon == 2.0


class TestGradients:
    def test_sort_gradient_of_sum_is_ones_in_recovery(self):
        rng = np.random.default_rng(31)
        theta = tie_free(rng, 6)
        result = soft_sort(theta, sort_recovery_epsilon(theta), "q")
        assert_array_equal(vjp_soft(result, np.ones(6)), np.ones(6))

    def test_large_epsilon_rank_jacobian_vanishes(self):
        theta = np.array([0.4, -1.0, 2.2, 0.0, 1.0])
        result = soft_rank(theta, 1e8, "q")
        for k in range(5):
            probe = np.zeros(5)
            probe[k] = 1.0
            assert np.max(np.abs(vjp_soft(result, probe))) <= 1e-6
            assert np.max(np.abs(jvp_soft(result, probe))) <= 1e-6

    @pytest.mark.parametrize("reg", ["q", "e"])
    @pytest.mark.parametrize("op", ["sort", "rank"])
    def test_matches_finite_differences(self, op, reg):
        rng = np.random.default_rng(32)
        make = soft_sort if op == "sort" else soft_rank

        def forward(t):
            return make(t, 1.0, reg).values

        def signature(t):
            r = make(t, 1.0, reg)
            return (
                tuple(r.context.sigma.forward.tolist()),
                tuple(r.context.solution.partition.starts.tolist()),
            )

        checked = 0
        attempts = 0
        while checked < 15 and attempts < 300:
            attempts += 1
            theta = rng.standard_normal(8)
            if not oracle.partition_stable(signature, theta, h=1e-6):
                continue
            fd = oracle.finite_difference_jacobian(forward, theta, h=1e-6)
            result = make(theta, 1.0, reg)
            assert rel_error(jacobian_from_jvp(lambda p: jvp_soft(result, p), 8), fd) <= 1e-5
            assert rel_error(jacobian_from_vjp(lambda p: vjp_soft(result, p), 8), fd) <= 1e-5
            checked += 1
        assert checked == 15

    def test_ascending_gradients_match_finite_differences(self):
        rng = np.random.default_rng(33)
        for make in (soft_sort, soft_rank):
            theta = tie_free(rng, 6)

            def forward(t, make=make):
                return make(t, 0.7, "q", "asc").values

            fd = oracle.finite_difference_jacobian(forward, theta, h=1e-6)
            result = make(theta, 0.7, "q", "asc")
            assert rel_error(jacobian_from_jvp(lambda p: jvp_soft(result, p), 6), fd) <= 1e-5
            assert rel_error(jacobian_from_vjp(lambda p: vjp_soft(result, p), 6), fd) <= 1e-5

    def test_kl_direct_gradients_match_finite_differences(self):
        rng = np.random.default_rng(34)
        theta = tie_free(rng, 6)

        def forward(t):
            return soft_rank_kl_direct(t, 0.8).values

        fd = oracle.finite_difference_jacobian(forward, theta, h=1e-6)
        result = soft_rank_kl_direct(theta, 0.8)
        assert rel_error(jacobian_from_jvp(lambda p: jvp_soft(result, p), 6), fd) <= 1e-5
        assert rel_error(jacobian_from_vjp(lambda p: vjp_soft(result, p), 6), fd) <= 1e-5

    def test_adjoint_identity(self):
        rng = np.random.default_rng(35)
        theta = rng.standard_normal(7)
        for result in (
            soft_sort(theta, 0.9, "e"),
            soft_rank(theta, 0.9, "q"),
            soft_rank_kl_direct(theta, 0.9),
        ):
            u, t = rng.standard_normal(7), rng.standard_normal(7)
            lhs = float(np.dot(u, jvp_soft(result, t)))
            rhs = float(np.dot(vjp_soft(result, u), t))
            assert_allclose(lhs, rhs, rtol=1e-11, atol=1e-11)

    def test_cotangent_length_mismatch_rejected(self):
        result = soft_rank([1.0, 0.0], 1.0)
        for fn in (vjp_soft, jvp_soft):
            with pytest.raises(ValueError):
                fn(result, [1.0, 2.0, 3.0])


class TestValidationAndMetadata:
    @pytest.mark.parametrize("eps", [0.0, -1.0, np.nan, np.inf])
    def test_bad_epsilon_rejected(self, eps):
        for fn in (soft_sort, soft_rank, soft_rank_kl_direct):
            with pytest.raises(ValueError):
                fn([1.0, 0.0], eps)

    def test_bad_direction_rejected(self):
        with pytest.raises(ValueError):
            soft_sort([1.0, 0.0], 1.0, "q", "up")

    def test_bad_regularizer_rejected(self):
        with pytest.raises(ValueError):
            soft_rank([1.0, 0.0], 1.0, "entropy")

    def test_non_finite_theta_rejected(self):
        with pytest.raises(ValueError):
            soft_sort([1.0, np.inf], 1.0)

    def test_result_is_frozen_with_read_only_values(self):
        result = soft_rank([2.9, 0.1, 1.2], 1.0)
        assert isinstance(result, SoftOpResult)
        with pytest.raises(AttributeError):
            result.values = np.zeros(3)
        with pytest.raises(ValueError):
            result.values[0] = 9.0

    def test_tag_case_is_canonicalized(self):
        a = soft_rank([1.0, 0.0, 2.0], 1.0, "Q").values
        b = soft_rank([1.0, 0.0, 2.0], 1.0, "q").values
        assert_array_equal(a, b)


class TestBatched:
    def test_identical_rows_give_identical_outputs(self):
        row = np.array([0.3, -0.7, 1.1])
        out = batched("rank", np.tile(row, (4, 1)), 0.5, "q")
        for i in range(1, 4):
            assert_array_equal(out[i], out[0])

    def test_single_row_matches_unbatched_bitwise(self):
        row = np.array([0.3, -0.7, 1.1, 0.0])
        for op, make in (("sort", soft_sort), ("rank", soft_rank)):
            for reg in ("q", "e"):
                out = batched(op, row[None, :], 0.7, reg)
                assert_array_equal(out[0], make(row, 0.7, reg).values)

    def test_batch_equals_sequential_loop(self):
        rng = np.random.default_rng(36)
        data = rng.standard_normal((32, 20))
        out = batched("rank", data, 1.3, "e")
        for i in range(32):
            assert_array_equal(out[i], soft_rank(data[i], 1.3, "e").values)

    def test_kl_direct_routing(self):
        rng = np.random.default_rng(37)
        data = rng.standard_normal((5, 6))
        out = batched("rank", data, 0.9, "kl-direct")
        for i in range(5):
            assert_array_equal(out[i], soft_rank_kl_direct(data[i], 0.9).values)
        asc = batched("rank", data, 0.9, "kl-direct", "asc")
        for i in range(5):
            assert_array_equal(asc[i], soft_rank_kl_direct(-data[i], 0.9).values)

    def test_kl_direct_sort_rejected(self):
        with pytest.raises(ValueError):
            batched("sort", np.zeros((1, 3)), 1.0, "kl-direct")

    def test_ragged_input_rejected(self):
        with pytest.raises(ValueError):
            batched("sort", [[1.0, 2.0], [3.0]], 1.0)

    def test_bad_op_rejected(self):
        with pytest.raises(ValueError):
            batched("median", np.zeros((1, 3)), 1.0)

    def test_flags_validated_even_for_empty_batch(self):
        empty = np.zeros((0, 4))
        with pytest.raises(ValueError):
            batched("sort", empty, -1.0)
        with pytest.raises(ValueError):
            batched("sort", empty, 1.0, "huber")
        with pytest.raises(ValueError):
            batched("sort", empty, 1.0, "q", "sideways")
