import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from coopnoma.channel import (
    ComplexChannelMatrix,
    cdf_first_hop,
    cdf_ordered,
    cdf_ordered_series,
    cdf_unordered,
    make_hop_stats,
    order_coefficient,
    pdf_ordered,
    pdf_unordered,
    sample_channel_matrix,
    sample_gains,
    select_receive_antenna,
    sf_selected,
)
from coopnoma.specfun import regularized_lower_gamma

from oracles import order_stat_cdf, selected_cdf


def unit_stats(m=1, n_t=1, n_r=1, omega_hat=1.0):
    # d = 1 gives omega = 1; epsilon scales omega_hat
    return make_hop_stats(1.0, 4.0, 1.0 - omega_hat, m, n_t, n_r)


def ks_distance(samples, cdf):
    xs = np.sort(samples)
    n = xs.size
    F = cdf(xs)
    hi = np.arange(1, n + 1) / n
    return float(max(np.max(np.abs(hi - F)), np.max(np.abs(hi - 1.0 / n - F))))


class TestHopStats:
    def test_half_distance(self):
        h = make_hop_stats(0.5, 4, 0.0, 1, 1, 1)
        assert (h.omega, h.omega_hat, h.sigma_e2) == (16.0, 16.0, 0.0)

    def test_unit_distance_even_split(self):
        h = make_hop_stats(1.0, 4, 0.5, 1, 1, 1)
        assert (h.omega, h.omega_hat, h.sigma_e2) == (1.0, 0.5, 0.5)

    def test_error_variance(self):
        assert make_hop_stats(0.5, 4, 0.005, 1, 1, 1).sigma_e2 == pytest.approx(0.08, rel=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(d=st.floats(0.05, 5), eps=st.floats(0, 0.99))
    def test_power_split(self, d, eps):
        h = make_hop_stats(d, 4, eps, 1, 1, 1)
        assert h.omega_hat + h.sigma_e2 == pytest.approx(h.omega, rel=1e-14)

    @pytest.mark.parametrize(
        "kw",
        [dict(m=1.5), dict(m=0), dict(n_t=0), dict(n_r=2.5), dict(epsilon=1.0), dict(epsilon=-0.1), dict(d=0.0)],
    )
    def test_rejects_invalid(self, kw):
        args = dict(d=0.5, alpha=4, epsilon=0.0, m=1, n_t=1, n_r=1)
        args.update(kw)
        with pytest.raises(ValueError):
            make_hop_stats(**args)


class TestDistributions:
    def test_cdf_at_zero(self):
        h = unit_stats(2, 2, 2)
        assert cdf_first_hop(h, 0.0) == 0.0
        assert cdf_unordered(h, 0.0) == 0.0

    def test_max_of_two_exponentials(self):
        assert cdf_first_hop(unit_stats(n_r=2), 1.0) == pytest.approx((1 - math.exp(-1)) ** 2, rel=1e-14)
        assert cdf_first_hop(unit_stats(n_r=2), 1.0) == pytest.approx(0.399576, abs=5e-7)

    @pytest.mark.parametrize("m,n_t", [(1, 1), (2, 1), (2, 3)])
    def test_single_receive_antenna_reduces_to_gamma(self, m, n_t):
        h = make_hop_stats(0.7, 3.0, 0.01, m, n_t, 1)
        x = np.linspace(0, 20, 50)
        np.testing.assert_allclose(cdf_first_hop(h, x), regularized_lower_gamma(m * n_t, m * x / h.omega_hat), rtol=1e-13)

    def test_exponential_density(self):
        h = unit_stats(omega_hat=0.5)  # rate 2
        h2 = make_hop_stats(1.0, 4, 0.0, 1, 1, 1)
        x = np.linspace(0.01, 10, 30)
        # omega_hat = 2 via distance: d^-4 = 2
        h3 = make_hop_stats(2 ** -0.25, 4, 0.0, 1, 1, 1)
        np.testing.assert_allclose(pdf_unordered(h3, x), np.exp(-x / 2) / 2, rtol=1e-12)
        assert pdf_unordered(h2, 1.0) == pytest.approx(math.exp(-1), rel=1e-14)
        assert pdf_unordered(h, 1.0) == pytest.approx(2 * math.exp(-2), rel=1e-14)

    @pytest.mark.parametrize("m,n_t,n_r", [(1, 1, 1), (1, 2, 2), (2, 2, 2), (3, 1, 4)])
    def test_pdf_normalized(self, m, n_t, n_r):
        h = make_hop_stats(0.5, 4, 0.005, m, n_t, n_r)
        total, _ = integrate.quad(lambda x: pdf_unordered(h, x), 0, np.inf, epsabs=1e-12, limit=200)
        assert total == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("l", [1, 2, 3])
    @pytest.mark.parametrize("m,n_t,n_r", [(1, 1, 1), (2, 2, 2)])
    def test_ordered_pdf_normalized(self, l, m, n_t, n_r):
        h = make_hop_stats(0.5, 4, 0.005, m, n_t, n_r)
        total, _ = integrate.quad(lambda x: pdf_ordered(h, l, 3, x), 0, np.inf, epsabs=1e-12, limit=200)
        assert total == pytest.approx(1.0, abs=1e-7)

    def test_ordered_pdf_is_cdf_derivative(self):
        h = make_hop_stats(0.5, 4, 0.005, 2, 2, 2)
        x, dx = 3.0, 1e-5
        num = (cdf_ordered(h, 2, 3, x + dx) - cdf_ordered(h, 2, 3, x - dx)) / (2 * dx)
        assert pdf_ordered(h, 2, 3, x) == pytest.approx(num, rel=1e-6)

    def test_single_user_is_unordered(self):
        h = make_hop_stats(0.5, 4, 0.01, 2, 1, 2)
        x = np.linspace(0, 5, 40)
        np.testing.assert_allclose(cdf_ordered(h, 1, 1, x), cdf_unordered(h, x), rtol=1e-14)

    def test_minimum_and_maximum_of_three(self):
        h = make_hop_stats(0.5, 4, 0.01, 1, 2, 2)
        x = np.linspace(0.01, 5, 40)
        F = cdf_unordered(h, x)
        # the oracle cancels at small F, so compare absolutely
        np.testing.assert_allclose(cdf_ordered(h, 1, 3, x), 1 - (1 - F) ** 3, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(cdf_ordered(h, 3, 3, x), F**3, rtol=1e-12)

    @pytest.mark.parametrize("l", [1, 2, 3])
    def test_alternating_series_agrees(self, l):
        h = make_hop_stats(0.5, 4, 0.005, 1, 2, 2)
        x = np.linspace(0.5, 30, 25)
        np.testing.assert_allclose(cdf_ordered_series(h, l, 3, x), cdf_ordered(h, l, 3, x), rtol=1e-10)

    def test_binomial_tail_oracle(self):
        h = make_hop_stats(0.5, 4, 0.005, 2, 2, 1)
        F = selected_cdf(2, 2, 1, h.omega_hat, 4.0)
        for l in (1, 2, 3):
            assert cdf_ordered(h, l, 3, 4.0) == pytest.approx(order_stat_cdf(F, l, 3), rel=1e-13)

    def test_survival_complements_cdf(self):
        h = make_hop_stats(0.5, 4, 0.0, 1, 2, 2)
        x = np.geomspace(1e-3, 1e3, 40)
        np.testing.assert_allclose(sf_selected(h, x) + cdf_first_hop(h, x), 1.0, atol=1e-14)

    def test_order_coefficient(self):
        assert [order_coefficient(l, 3) for l in (1, 2, 3)] == [3, 6, 3]
        with pytest.raises(ValueError):
            order_coefficient(4, 3)

    @settings(max_examples=60, deadline=None)
    @given(
        m=st.integers(1, 3),
        n_t=st.integers(1, 3),
        n_r=st.integers(1, 3),
        L=st.integers(1, 5),
        x=st.floats(0, 200),
    )
    def test_stochastic_ordering(self, m, n_t, n_r, L, x):
        h = make_hop_stats(0.5, 4, 0.005, m, n_t, n_r)
        vals = [cdf_ordered(h, l, L, x) for l in range(1, L + 1)]
        assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
        assert all(0.0 <= v <= 1.0 for v in vals)


class TestSampling:
    def test_mean_power(self):
        rng = np.random.default_rng(11)
        h = make_hop_stats(0.5, 4, 0.005, 2, 1, 1)
        g = sample_gains(rng, h, 1_000_000)
        assert np.mean(np.abs(g) ** 2) == pytest.approx(h.omega_hat, rel=0.01)

    def test_rayleigh_power_is_exponential(self):
        rng = np.random.default_rng(12)
        h = make_hop_stats(1.0, 4, 0.2, 1, 1, 1)
        g = sample_gains(rng, h, 1_000_000)
        assert ks_distance(np.abs(g) ** 2, lambda x: 1 - np.exp(-x / h.omega_hat)) < 0.002

    def test_fixed_seed_repeats(self):
        h = make_hop_stats(0.5, 4, 0.005, 2, 2, 3)
        a = sample_channel_matrix(np.random.default_rng(5), h)
        b = sample_channel_matrix(np.random.default_rng(5), h)
        assert a.entries.shape == (2, 3)
        np.testing.assert_array_equal(a.entries, b.entries)

    def test_uniform_phase(self):
        g = sample_gains(np.random.default_rng(3), make_hop_stats(0.5, 4, 0.0, 2, 1, 1), 200_000)
        assert abs(np.mean(g)) < 0.02 * np.sqrt(np.mean(np.abs(g) ** 2))

    def test_select_single_column(self):
        col = np.array([[1 + 1j], [0.5]])
        idx, gain, vec = select_receive_antenna(ComplexChannelMatrix(col))
        assert idx == 1
        assert gain == pytest.approx(2.25)
        np.testing.assert_array_equal(vec, col[:, 0])

    def test_select_best_column(self):
        m = ComplexChannelMatrix(np.array([[math.sqrt(0.4), math.sqrt(0.9)]]))
        idx, gain, _ = select_receive_antenna(m)
        assert idx == 2
        assert gain == pytest.approx(0.9)

    def test_ties_pick_lowest_index(self):
        idx, _, _ = select_receive_antenna(ComplexChannelMatrix(np.ones((2, 3), dtype=complex)))
        assert idx == 1

    @pytest.mark.parametrize("m,n_t,n_r", [(1, 1, 2), (2, 2, 2)])
    def test_selected_gain_distribution(self, m, n_t, n_r):
        rng = np.random.default_rng(100 + 10 * m + n_t)
        h = make_hop_stats(0.5, 4, 0.005, m, n_t, n_r)
        g = sample_gains(rng, h, (1_000_000, n_t, n_r))
        gain = np.max(np.sum(np.abs(g) ** 2, axis=1), axis=1)
        assert ks_distance(gain, lambda x: cdf_first_hop(h, x)) < 0.002

    def test_selected_gain_via_matrix_api(self):
        rng = np.random.default_rng(8)
        h = make_hop_stats(0.5, 4, 0.005, 1, 2, 2)
        gains = [select_receive_antenna(sample_channel_matrix(rng, h))[1] for _ in range(20_000)]
        assert ks_distance(np.array(gains), lambda x: cdf_first_hop(h, x)) < 0.015

    @pytest.mark.parametrize("l", [1, 2, 3])
    def test_sorted_users_follow_order_statistics(self, l):
        rng = np.random.default_rng(40 + l)
        h = make_hop_stats(0.5, 4, 0.005, 1, 2, 2)
        g = sample_gains(rng, h, (1_000_000, 3, 2, 2))
        per_user = np.max(np.sum(np.abs(g) ** 2, axis=2), axis=2)
        ranked = np.sort(per_user, axis=1)[:, l - 1]
        assert ks_distance(ranked, lambda x: cdf_ordered(h, l, 3, x)) < 0.003
