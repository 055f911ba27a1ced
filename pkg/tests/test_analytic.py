import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from coopnoma import analytic
from coopnoma.analytic import (
    NumericalInstabilityWarning,
    SystemScenario,
    asymptotic_terms,
    decode_targets,
    diversity_array_gain,
    error_floor,
    make_scenario,
    op_asymptotic,
    op_bounds,
    op_closed_form,
    op_oma,
    op_quadrature,
    oma_threshold,
    outage_report,
)
from coopnoma.channel import cdf_first_hop, cdf_ordered, make_hop_stats

from oracles import op_by_double_integral, order_stat_cdf, selected_cdf

DB = lambda v: 10.0 ** (v / 10.0)


def independent_op(sc, snr, l):
    """Outage from scipy-only CDFs and a density obtained by differencing."""
    h1, h2 = sc.hop1, sc.hop2
    zeta = 18.0
    q1, c1 = h1.m * h1.n_t, h1.m / h1.omega_hat

    def f1_cdf(u):
        return special.gammainc(q1, c1 * u) ** h1.n_r

    def f1_pdf(u):
        dens = c1 * special.gammainc(q1, c1 * u) ** (h1.n_r - 1) * h1.n_r
        return dens * math.exp(q1 * math.log(c1 * u) - c1 * u - math.lgamma(q1)) / (c1 * u) if u > 0 else 0.0

    def f2_cdf(v):
        F = selected_cdf(h2.m, h2.n_t, h2.n_r, h2.omega_hat, v)
        return order_stat_cdf(float(F), l, sc.L)

    return op_by_double_integral(snr, zeta, h1.sigma_e2, h2.sigma_e2, f1_pdf, f1_cdf, f2_cdf)


class TestScenario:
    def test_default_targets(self):
        dt = decode_targets(make_scenario(), 100.0)
        assert dt.zeta == pytest.approx((18.0, 18.0, 18.0), rel=1e-12)
        assert dt.mu == pytest.approx((0.18, 0.18, 0.18), rel=1e-12)
        assert dt.sigma_j == pytest.approx((0.5, 1 / 6, 0.0), abs=1e-15)

    def test_infeasible_users(self):
        sc = make_scenario(alloc=(0.6, 0.4), thresholds=(2.0, 1.0))
        dt = decode_targets(sc, 10.0)
        assert dt.mu == (None, None)
        assert dt.feasible == (False, False)
        for fn in (op_closed_form, op_quadrature):
            assert fn(sc, 10.0, 1) == 1.0
            assert fn(sc, 10.0, 2) == 1.0
        assert op_bounds(sc, 10.0, 2) == (1.0, 1.0)

    def test_large_threshold_is_infeasible(self):
        sc = make_scenario(thresholds=(0.9, 1.5, 2.0)).__class__(
            3, make_hop_stats(0.5, 4, 0, 1, 1, 1), make_hop_stats(0.5, 4, 0, 1, 1, 1), (0.5, 1 / 3, 1 / 6), (5.0, 1.5, 2.0)
        )
        assert op_quadrature(sc, 1e4, 3) == 1.0

    @pytest.mark.parametrize(
        "alloc,th",
        [((0.5, 0.5, 0.2), (1, 1, 1)), ((0.2, 0.3, 0.5), (1, 1, 1)), ((0.5, 0.5), (1, -1)), ((0.5, 0.5), (1,))],
    )
    def test_rejects_bad_allocation(self, alloc, th):
        with pytest.raises(ValueError):
            make_scenario(alloc=alloc, thresholds=th)

    def test_snr_must_be_positive(self):
        with pytest.raises(ValueError):
            decode_targets(make_scenario(), 0.0)

    def test_user_index_checked(self):
        with pytest.raises(ValueError):
            op_closed_form(make_scenario(), 10.0, 4)


CONFIGS = [
    ((1, 1, 1, 1), (1, 1)),
    ((1, 2, 1, 2), (2, 1)),
    ((2, 2, 2, 2), (1, 1)),
    ((2, 2, 2, 2), (2, 2)),
]


class TestClosedForm:
    @pytest.mark.parametrize("ant,m", CONFIGS)
    @pytest.mark.parametrize("eps", [0.0, 0.005])
    @pytest.mark.parametrize("db", [0.0, 15.0, 30.0])
    def test_matches_independent_integral(self, ant, m, eps, db):
        sc = make_scenario(*ant, *m, eps_sr=eps, eps_l=eps)
        for l in (1, 3):
            want = independent_op(sc, DB(db), l)
            got = op_closed_form(sc, DB(db), l)
            assert got == pytest.approx(want, rel=1e-7, abs=1e-15)

    @pytest.mark.parametrize("ant,m", CONFIGS)
    @pytest.mark.parametrize("eps", [0.0, 0.005, 0.05])
    def test_matches_quadrature(self, ant, m, eps):
        sc = make_scenario(*ant, *m, eps_sr=eps, eps_l=eps)
        for db in (0.0, 20.0, 40.0):
            for l in (1, 2, 3):
                q = op_quadrature(sc, DB(db), l)
                c = op_closed_form(sc, DB(db), l)
                if q >= 1e-12:
                    assert abs(c - q) / q <= 1e-6

    def test_unequal_distances_and_hops(self):
        sc = make_scenario(2, 1, 1, 3, 1, 2, d1=0.3, d2=0.8, alpha=3.0, eps_sr=0.01, eps_l=0.002)
        for l in (1, 2, 3):
            assert op_closed_form(sc, DB(12), l) == pytest.approx(op_quadrature(sc, DB(12), l), rel=1e-8)

    def test_two_user_allocation(self):
        sc = make_scenario(1, 2, 2, 1, 1, 1, alloc=(0.8, 0.2), thresholds=(1.0, 1.0), eps_sr=0.005, eps_l=0.005)
        for l in (1, 2):
            assert op_closed_form(sc, DB(10), l) == pytest.approx(op_quadrature(sc, DB(10), l), rel=1e-8)

    def test_falls_back_to_quadrature_when_precision_is_lost(self, monkeypatch):
        sc = make_scenario(1, 2, 1, 2, 1, 1, eps_sr=0.005, eps_l=0.005)
        monkeypatch.setattr(analytic, "_closed_form_value", lambda *a: (123.0, False))
        with pytest.warns(NumericalInstabilityWarning):
            v = op_closed_form(sc, DB(10), 2)
        assert v == op_quadrature(sc, DB(10), 2)

    def test_clamp_warns_outside_unit_interval(self):
        with pytest.warns(NumericalInstabilityWarning):
            assert analytic._clamp(1.01, "probe") == 1.0
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert analytic._clamp(-1e-12, "probe") == 0.0


class TestQuadrature:
    def test_vanishes_at_infinite_snr(self):
        assert op_quadrature(make_scenario(2, 2, 2, 2), 1e12, 3) < 1e-20

    @settings(max_examples=25, deadline=None)
    @given(db=st.floats(-5, 45), step=st.floats(0.5, 10), l=st.integers(1, 3))
    def test_non_increasing_in_snr(self, db, step, l):
        sc = make_scenario(1, 2, 1, 2, 1, 1)
        assert op_quadrature(sc, DB(db + step), l) <= op_quadrature(sc, DB(db), l) * (1 + 1e-9)

    @pytest.mark.parametrize("axis", range(4))
    def test_more_antennas_never_hurt(self, axis):
        base = [1, 1, 1, 1]
        more = list(base)
        more[axis] = 2
        for l in (1, 2, 3):
            assert op_quadrature(make_scenario(*more), DB(15), l) <= op_quadrature(make_scenario(*base), DB(15), l)

    @pytest.mark.parametrize("ant,m", CONFIGS)
    def test_user_ordering(self, ant, m):
        sc = make_scenario(*ant, *m, eps_sr=0.005, eps_l=0.005)
        for db in range(0, 41, 10):
            ops = [op_quadrature(sc, DB(db), l) for l in (1, 2, 3)]
            assert ops[0] >= ops[1] >= ops[2]


class TestBounds:
    @pytest.mark.parametrize("ant,m", CONFIGS)
    @pytest.mark.parametrize("eps", [0.0, 0.01])
    def test_sandwich_on_snr_grid(self, ant, m, eps):
        sc = make_scenario(*ant, *m, eps_sr=eps, eps_l=eps)
        for db in np.linspace(0, 40, 20):
            for l in (1, 2, 3):
                lo, up = op_bounds(sc, DB(db), l)
                q = op_quadrature(sc, DB(db), l)
                assert lo <= q * (1 + 1e-12) and q <= up * (1 + 1e-12)
                assert lo <= up

    def test_zero_at_vanishing_target(self):
        lo, up = op_bounds(make_scenario(), 1e40, 1)
        assert lo == pytest.approx(0.0, abs=1e-30) and up == pytest.approx(0.0, abs=1e-30)

    def test_lower_bound_formula(self):
        sc = make_scenario(1, 2, 1, 2, 1, 1, eps_sr=0.005, eps_l=0.005)
        dt = decode_targets(sc, DB(10))
        a = float(cdf_first_hop(sc.hop1, dt.alpha2 * dt.mu[2]))
        b = float(cdf_ordered(sc.hop2, 3, 3, dt.alpha1 * dt.mu[2]))
        assert op_bounds(sc, DB(10), 3)[0] == pytest.approx(a + b - a * b, rel=1e-14)


class TestErrorFloor:
    def test_no_floor_without_estimation_error(self):
        assert error_floor(make_scenario(2, 2, 2, 2), 2) == (0.0, 0.0)

    def test_single_antenna_value(self):
        sc = make_scenario(eps_sr=0.005, eps_l=0.005)
        # sigma_e^2 zeta = 0.08 * 18 = 1.44, omega_hat = 16 * 0.995
        x = 1.44
        a = 1 - math.exp(-x / 15.92)
        b = a**3
        want = a + b - a * b
        lo, up = error_floor(sc, 3)
        assert lo == pytest.approx(want, rel=1e-12)
        assert lo == pytest.approx(8.7e-2, rel=0.02)
        assert up > lo

    @pytest.mark.parametrize("ant,m", CONFIGS)
    def test_saturation(self, ant, m):
        sc = make_scenario(*ant, *m, eps_sr=0.01, eps_l=0.01)
        for l in (1, 3):
            lo, up = error_floor(sc, l)
            a, b = op_quadrature(sc, 1e5, l), op_quadrature(sc, 1e7, l)
            assert b == pytest.approx(a, rel=0.01)
            assert lo <= b <= up


class TestAsymptotics:
    @pytest.mark.parametrize(
        "ant,m,l,tau", [((1, 1, 1, 1), (1, 1), 1, 1), ((2, 2, 2, 2), (1, 1), 3, 4), ((1, 2, 1, 2), (2, 1), 1, 2)]
    )
    def test_diversity_order(self, ant, m, l, tau):
        d, gain = diversity_array_gain(make_scenario(*ant, *m), l)
        assert d == tau
        assert gain > 0

    @pytest.mark.parametrize("l", [1, 2, 3])
    @pytest.mark.parametrize("m,n_t,n_r", [(1, 1, 1), (1, 2, 2), (2, 1, 2)])
    def test_ordered_cdf_leading_term(self, l, m, n_t, n_r):
        sc = make_scenario(1, 1, n_t, n_r, 1, m)
        _, _, tau2, a2 = asymptotic_terms(sc, l)
        x = 1e-4
        assert cdf_ordered(sc.hop2, l, 3, x) == pytest.approx(a2 * x**tau2, rel=0.01)

    def test_first_hop_leading_term(self):
        sc = make_scenario(2, 2, 1, 1, 2, 1)
        tau1, a1, _, _ = asymptotic_terms(sc, 1)
        x = 1e-4
        assert cdf_first_hop(sc.hop1, x) == pytest.approx(a1 * x**tau1, rel=0.01)

    @pytest.mark.parametrize(
        "ant,m,l", [((1, 1, 1, 1), (1, 1), 1), ((2, 2, 2, 2), (1, 1), 3), ((1, 2, 1, 2), (2, 1), 1), ((1, 2, 1, 2), (1, 1), 2)]
    )
    def test_slope_and_ratio(self, ant, m, l):
        sc = make_scenario(*ant, *m)
        tau, _ = diversity_array_gain(sc, l)
        dbs = np.arange(0, 121, 1.0)
        ops = np.array([op_quadrature(sc, DB(v), l) for v in dbs])
        sel = (ops >= 1e-8) & (ops <= 1e-3)
        slope = -np.polyfit(dbs[sel] / 10, np.log10(ops[sel]), 1)[0]
        assert slope == pytest.approx(tau, rel=0.05)
        deep = np.argmax(ops <= 1e-6)
        assert op_asymptotic(sc, DB(dbs[deep]), l) / ops[deep] == pytest.approx(1.0, abs=0.1)

    def test_requires_perfect_estimates(self):
        sc = make_scenario(eps_sr=0.005, eps_l=0.005)
        with pytest.raises(ValueError):
            op_asymptotic(sc, 10.0, 1)
        with pytest.raises(ValueError):
            diversity_array_gain(sc, 1)


class TestOMA:
    def test_threshold_values(self):
        assert oma_threshold((0.9, 1.5, 2)) == 13.25
        assert oma_threshold((3.7,)) == pytest.approx(3.7, rel=1e-15)
        assert oma_threshold((1, 1)) == 3

    def test_closed_matches_quadrature(self):
        sc = make_scenario(2, 2, 2, 2, 2, 1, eps_sr=0.005, eps_l=0.005)
        for db in (0, 10, 25):
            assert op_oma(sc, DB(db)) == pytest.approx(op_oma(sc, DB(db), method="quadrature"), rel=1e-8)
        with pytest.raises(ValueError):
            op_oma(sc, 10.0, method="nope")

    def test_is_single_user_link(self):
        sc = make_scenario(1, 2, 1, 2, eps_sr=0.005, eps_l=0.005)
        single = SystemScenario(1, sc.hop1, sc.hop2, (1.0,), (13.25,))
        assert op_oma(sc, DB(10)) == pytest.approx(op_quadrature(single, DB(10), 1), rel=1e-8)


def test_outage_report_fields():
    rep = outage_report(make_scenario(1, 2, 1, 2), DB(20))
    assert [r.user for r in rep] == [1, 2, 3]
    for r in rep:
        assert r.op_lower_bound <= r.op_quadrature <= r.op_upper_bound
        assert r.op_asymptotic is not None
    rep = outage_report(make_scenario(eps_sr=0.01, eps_l=0.01), DB(20))
    assert all(r.op_asymptotic is None and r.ef_lower > 0 for r in rep)
