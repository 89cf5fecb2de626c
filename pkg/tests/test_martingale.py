"""Superhedging duality, FTAP equivalence, frictions, arbitrage detection."""

import numpy as np
import pytest

from motkit.martingale import (
    Market,
    _build_superhedge,
    classify_arbitrage,
    feasibility_residual,
    frictionless_limit_check,
    ftap_check,
    primal_mot,
    superhedge_dual,
    superhedging_duality_report,
)
from motkit.model import (
    Coupling,
    DiscreteAxis,
    DiscreteMeasure,
    Instance,
    MarginalConstraint,
    Payoff,
)
from motkit.transport import dual_transport

from generators import arbitrage_free_market, random_market, random_payoff_table

GAP_TOL = 1e-7


def _market(axis_specs, s0, epsilons):
    """axis_specs: list of (points, weights) with d = 1 points."""
    axes = []
    cons = []
    for t, (pts, wts) in enumerate(axis_specs):
        ax = DiscreteAxis(t + 1, np.asarray(pts, dtype=float))
        axes.append(ax)
        cons.append(MarginalConstraint.exact(
            DiscreteMeasure(ax, np.asarray(wts, dtype=float))))
    inst = Instance(tuple(axes), tuple(cons))
    return Market(inst, np.atleast_1d(np.asarray(s0, dtype=float)),
                  np.atleast_1d(np.asarray(epsilons, dtype=float)))


def straddle_market(epsilons=0.0):
    return _market([([1.0], [1.0]), ([0.0, 2.0], [0.5, 0.5])], [1.0], [epsilons])


class TestSuperhedgeDual:
    def test_straddle_priced_by_unique_coupling(self):
        market = straddle_market()
        payoff = Payoff.named("straddle", n=1, m=2)
        res = superhedge_dual(market, payoff)
        assert res.status == "optimal"
        assert res.value == pytest.approx(1.0, abs=1e-9)
        outcome = res.strategy.outcome(market)
        table = payoff.table_for(market.instance)
        assert float((outcome - table).min()) >= -1e-8
        assert res.strategy.cost(market) == pytest.approx(res.value, abs=1e-9)

    def test_constant_payoff_cash_replication(self):
        market = straddle_market()
        res = superhedge_dual(market, Payoff.constant(3.25, market.instance))
        assert res.value == pytest.approx(3.25, abs=1e-9)

    def test_large_costs_reduce_to_static_only(self):
        market = straddle_market(epsilons=0.5)
        table = market.instance.coordinate_values(1)[:, 0] - 1.0  # x2 - 1
        payoff = Payoff.dense(table)
        with_dynamics = superhedge_dual(market, payoff)
        static_only = dual_transport(market.instance, payoff)
        assert with_dynamics.status == "optimal"
        assert with_dynamics.value == pytest.approx(static_only.value, abs=1e-8)


class TestPrimalMot:
    def test_straddle_unique_martingale_coupling(self):
        market = straddle_market()
        payoff = Payoff.named("straddle", n=1, m=2)
        res = primal_mot(market, payoff)
        assert res.status == "optimal"
        assert res.value == pytest.approx(1.0, abs=1e-9)
        assert np.allclose(res.coupling.weights, [0.5, 0.5], atol=1e-9)

    def test_barycenter_obstruction(self):
        market = _market([([0.0, 2.0], [0.5, 0.5])], [0.9], [0.0])
        res = primal_mot(market, Payoff.constant(0.0, market.instance))
        assert res.status == "infeasible"

    def test_wide_band_restores_feasibility(self):
        market = _market([([0.0, 2.0], [0.5, 0.5])], [0.9], [0.2])
        res = primal_mot(market, Payoff.constant(0.0, market.instance))
        assert res.status == "optimal"
        assert feasibility_residual(market, res.coupling) <= 1e-8


class TestClassifyArbitrage:
    def test_arbitrage_free_market(self):
        verdict = classify_arbitrage(straddle_market())
        assert verdict.kind == "no_arbitrage"
        assert verdict.uniform_value == pytest.approx(0.0, abs=1e-9)
        assert verdict.strict_value > 1e-9

    def test_spot_mismatch_detected_with_witness(self):
        market = _market([([0.0, 2.0], [0.5, 0.5])], [0.9], [0.0])
        verdict = classify_arbitrage(market)
        assert verdict.arbitrage_exists
        strategy = verdict.strategy
        assert strategy is not None
        outcome = strategy.outcome(market)
        cost = strategy.cost(market)
        if verdict.kind == "uniform":
            assert cost < -1e-9
            assert float(outcome.min()) >= -1e-9
        else:
            assert cost <= 1e-9
            assert float(outcome.min()) > 0.0
        # consistent with the empty martingale set
        assert primal_mot(market, Payoff.constant(0.0, market.instance)
                          ).status == "infeasible"

    def test_reversed_convex_order_not_arbitrage_free(self):
        market = _market([([0.0, 2.0], [0.5, 0.5]), ([1.0], [1.0])], [1.0], [0.0])
        verdict = classify_arbitrage(market)
        assert verdict.arbitrage_exists
        assert primal_mot(market, Payoff.constant(0.0, market.instance)
                          ).status == "infeasible"


class TestFtap:
    def test_constructed_markets_are_arbitrage_free(self):
        rng = np.random.default_rng(0)
        for _ in range(8):
            market = arbitrage_free_market(rng, horizon=2, d=1)
            report = ftap_check(market)
            assert report.equivalent
            assert report.no_uniform and report.no_model_independent
            assert report.martingale_set_nonempty

    def test_three_conditions_agree_on_random_markets(self):
        rng = np.random.default_rng(1)
        seen = {True: 0, False: 0}
        for trial in range(40):
            eps = [0.0, 0.01, 0.1][trial % 3]
            if trial % 2 == 0:
                market = arbitrage_free_market(rng, horizon=2, d=1, epsilons=[eps])
            else:
                market = random_market(rng, horizon=2, d=1, epsilons=[eps])
            report = ftap_check(market)
            assert report.equivalent, (
                f"FTAP disagreement: mia-free {report.no_model_independent}, "
                f"ua-free {report.no_uniform}, "
                f"nonempty {report.martingale_set_nonempty}")
            seen[report.martingale_set_nonempty] += 1
        assert min(seen.values()) >= 5, seen

    def test_wide_bands_make_product_measure_consistent(self):
        market = _market([([0.5, 2.0], [0.5, 0.5]), ([0.5, 1.0, 2.0], [0.25, 0.5, 0.25])],
                         [1.0], [3.0])
        product = Coupling.product(market.instance)
        assert feasibility_residual(market, product) <= 1e-9
        report = ftap_check(market)
        assert report.equivalent
        assert report.martingale_set_nonempty


class TestSuperhedgingDuality:
    def test_straddle_both_sides_one(self):
        report = superhedging_duality_report(straddle_market(),
                                             Payoff.named("straddle", n=1, m=2))
        assert report.primal_value == pytest.approx(1.0, abs=1e-8)
        assert report.dual_value == pytest.approx(1.0, abs=1e-8)
        assert report.gap <= GAP_TOL

    def test_zero_payoff_normalization(self):
        market = straddle_market()
        report = superhedging_duality_report(market, Payoff.constant(0.0, market.instance))
        assert report.primal_value == pytest.approx(0.0, abs=1e-9)
        assert report.dual_value == pytest.approx(0.0, abs=1e-9)

    def test_zero_gap_on_random_arbitrage_free_markets(self):
        rng = np.random.default_rng(2)
        for trial in range(20):
            eps = [0.0, 0.01, 0.1][trial % 3]
            d = 2 if trial % 4 == 0 else 1
            market = arbitrage_free_market(rng, horizon=2, d=d,
                                           epsilons=np.full(d, eps),
                                           hull_prob=0.4 if trial % 5 == 0 else 0.0)
            payoff = Payoff.dense(random_payoff_table(rng, market.instance))
            report = superhedging_duality_report(market, payoff)
            scale = max(1.0, abs(report.dual_value))
            assert report.gap <= GAP_TOL * scale, (
                f"trial {trial}: gap {report.gap} at eps {eps}")
            assert report.residuals["superreplication_min"] >= -1e-8
            assert report.residuals["coupling_feasibility"] <= 1e-7

    def test_arbitrage_market_rejected(self):
        market = _market([([0.0, 2.0], [0.5, 0.5])], [0.9], [0.0])
        with pytest.raises(ValueError, match="arbitrage"):
            superhedging_duality_report(market, Payoff.constant(0.0, market.instance))


class TestWeakDuality:
    def test_coupling_expectation_below_strategy_cost(self):
        rng = np.random.default_rng(3)
        for trial in range(10):
            eps = [0.0, 0.1][trial % 2]
            market = arbitrage_free_market(rng, horizon=2, d=1, epsilons=[eps])
            f = Payoff.dense(random_payoff_table(rng, market.instance))
            f_other = Payoff.dense(random_payoff_table(rng, market.instance))
            strategy = superhedge_dual(market, f).strategy
            other = primal_mot(market, f_other)
            assert other.status == "optimal"
            lhs = float(f.table_for(market.instance) @ other.coupling.weights)
            assert lhs <= strategy.cost(market) + 1e-8


class TestFrictionlessReduction:
    def test_no_trade_columns_without_costs(self):
        market = straddle_market()
        builder, _, _, columns = _build_superhedge(
            market, np.zeros(market.instance.n_paths))
        assert not columns.trade_vars
        assert columns.h_vars

    def test_forced_trade_machinery_matches_position_machinery(self):
        rng = np.random.default_rng(4)
        for trial in range(10):
            d = 2 if trial % 3 == 0 else 1
            market = arbitrage_free_market(rng, horizon=2, d=d)
            payoff = Payoff.dense(random_payoff_table(rng, market.instance))
            plain = superhedge_dual(market, payoff)
            forced = superhedge_dual(market, payoff, force_frictional=True)
            assert plain.status == forced.status == "optimal"
            assert forced.value == pytest.approx(plain.value, abs=1e-10)

    def test_builder_is_deterministic_across_equal_markets(self):
        market = straddle_market()
        table = np.zeros(market.instance.n_paths)
        lp1 = _build_superhedge(market, table)[0].build()
        lp2 = _build_superhedge(market.with_epsilons(np.zeros(1)), table)[0].build()
        assert np.array_equal(lp1.a, lp2.a)
        assert np.array_equal(lp1.objective, lp2.objective)
        assert lp1.relations == lp2.relations
        assert np.array_equal(lp1.rhs, lp2.rhs)


class TestFrictionlessLimit:
    def test_straddle_values_fall_to_one(self):
        market = straddle_market()
        report = frictionless_limit_check(market, Payoff.named("straddle", n=1, m=2),
                                          [0.1, 0.01, 0.001, 0.0])
        assert report.monotone
        assert report.converged
        assert report.values[-1] == pytest.approx(1.0, abs=1e-9)
        assert report.values[0] >= report.values[-1] - 1e-12

    def test_static_replicable_payoff_constant_sequence(self):
        market = straddle_market()
        payoff = Payoff.separable([np.array([0.5]), np.array([0.25, 0.75])])
        report = frictionless_limit_check(market, payoff, [0.1, 0.01, 0.0])
        assert report.monotone
        assert max(report.values) - min(report.values) <= 1e-9

    def test_random_markets_monotone(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            market = arbitrage_free_market(rng, horizon=2, d=1)
            payoff = Payoff.dense(random_payoff_table(rng, market.instance))
            report = frictionless_limit_check(market, payoff, [0.2, 0.05, 0.01, 0.0])
            assert report.monotone
            assert report.converged


class TestStrategyStructure:
    def test_tables_are_indexed_by_prefixes(self):
        rng = np.random.default_rng(6)
        market = arbitrage_free_market(rng, horizon=3, d=1, epsilons=[0.05])
        payoff = Payoff.dense(random_payoff_table(rng, market.instance))
        res = superhedge_dual(market, payoff)
        instance = market.instance
        for leg in res.strategy.legs:
            assert 1 <= leg.maturity <= market.horizon
            assert len(leg.h) == leg.maturity
            for n, table in enumerate(leg.h, start=1):
                assert table.shape == (instance.n_prefixes(n - 1), market.d)
            assert leg.u is not None
            for u_tab, h_tab in zip(leg.u, leg.h):
                assert u_tab.shape == h_tab.shape
                assert np.all(u_tab >= -1e-12)

    def test_turnover_dominates_position_changes(self):
        from motkit.martingale import _ancestor_prefix
        rng = np.random.default_rng(7)
        market = arbitrage_free_market(rng, horizon=3, d=1, epsilons=[0.05])
        payoff = Payoff.dense(random_payoff_table(rng, market.instance))
        res = superhedge_dual(market, payoff)
        instance = market.instance
        for leg in res.strategy.legs:
            for n in range(1, leg.maturity + 1):
                if n == 1:
                    prev_rows = np.zeros((instance.n_prefixes(0), market.d))
                else:
                    anc = _ancestor_prefix(instance, n - 1, n - 2)
                    prev_rows = leg.h[n - 2][anc]
                delta = leg.h[n - 1] - prev_rows
                assert np.all(leg.u[n - 1] >= np.abs(delta) - 1e-8)

    def test_outcome_depends_only_on_prefix(self):
        rng = np.random.default_rng(8)
        market = arbitrage_free_market(rng, horizon=2, d=1, epsilons=[0.05])
        payoff = Payoff.dense(random_payoff_table(rng, market.instance))
        res = superhedge_dual(market, payoff)
        instance = market.instance
        gains = res.strategy.dynamic_gains(market)
        # paths sharing the level-1 prefix use the same h_2 row: the gains
        # difference equals the position times the price move difference
        pid = instance.prefix_ids(1)
        s = market.price_paths()
        for p in range(instance.n_prefixes(1)):
            members = np.flatnonzero(pid == p)
            if members.size < 2:
                continue
            i, j = members[:2]
            move_diff = (s[2][i] - s[2][j])
            table_rows = [leg.h[1][p] for leg in res.strategy.legs
                          if leg.maturity >= 2]
            expected = sum(float(row @ move_diff) for row in table_rows)
            assert gains[i] - gains[j] == pytest.approx(expected, abs=1e-9)


class TestEarlyMaturityArbitrage:
    def test_band_violated_only_at_maturity_one(self):
        """Detection must range over every valuation date.

        With s0 = 1 and eps = 0.1, nu1 on {0.5, 1.8} (barycenter 1.15)
        breaks the date-1 ask band, while nu2 on {0.4, 1.7} admits a
        kernel satisfying every date-2 band (conditional means 0.46 and
        1.64, unconditional 1.05).  Trades valued only at the horizon
        cannot monetize the mispricing; a date-1 forward can.
        """
        ax1 = DiscreteAxis(1, np.array([[0.5], [1.8]]))
        ax2 = DiscreteAxis(2, np.array([[0.4], [1.7]]))
        inst = Instance(
            (ax1, ax2),
            (MarginalConstraint.exact(DiscreteMeasure(ax1, np.array([0.5, 0.5]))),
             MarginalConstraint.exact(DiscreteMeasure(ax2, np.array([0.5, 0.5])))))
        market = Market(inst, np.array([1.0]), np.array([0.1]))

        # the date-2 bands alone are satisfiable: exhibit the kernel
        a_low = (1.7 - 0.46) / 1.3
        a_high = (1.7 - 1.64) / 1.3
        w = np.array([0.5 * a_low, 0.5 * (1 - a_low),
                      0.5 * a_high, 0.5 * (1 - a_high)])
        s2 = np.array([0.4, 1.7, 0.4, 1.7])
        s1 = np.array([0.5, 0.5, 1.8, 1.8])
        for state, lo in ((0.5, a_low), (1.8, a_high)):
            mean = 0.4 * lo + 1.7 * (1 - lo)
            assert (1 - 0.1) * state - 1e-12 <= mean <= (1 + 0.1) * state + 1e-12
        assert abs(w @ s2 - 1.05) < 1e-12
        assert np.allclose([w[(s1 == x)].sum() for x in (0.5, 1.8)], 0.5)

        verdict = classify_arbitrage(market)
        assert verdict.arbitrage_exists
        strategy = verdict.strategy
        assert strategy is not None
        # the witness trades toward the early valuation date
        early = [leg for leg in strategy.legs
                 if leg.maturity == 1 and any(np.any(h != 0.0) for h in leg.h)]
        assert early, "expected a maturity-1 dynamic leg in the witness"
        assert float(strategy.outcome(market).min()) >= -1e-9

        ftap = ftap_check(market)
        assert ftap.equivalent
        assert not ftap.martingale_set_nonempty
        assert primal_mot(market, Payoff.constant(0.0, inst)).status == "infeasible"


class TestLargerMarket:
    def test_two_assets_three_periods_mixed_frictions(self):
        from generators import binomial_market
        rng = np.random.default_rng(10)
        market = binomial_market(rng, horizon=3, d=2, epsilons=[0.1, 0.0])
        payoff = Payoff.dense(random_payoff_table(rng, market.instance))
        report = superhedging_duality_report(market, payoff)
        assert report.gap <= GAP_TOL * max(1.0, abs(report.dual_value))
        assert report.residuals["superreplication_min"] >= -1e-8
        assert report.residuals["coupling_feasibility"] <= 1e-7
        ftap = ftap_check(market)
        assert ftap.equivalent and ftap.martingale_set_nonempty


class TestDualValueMapProperties:
    def test_translation_and_monotonicity(self):
        rng = np.random.default_rng(9)
        market = arbitrage_free_market(rng, horizon=2, d=1, epsilons=[0.05])
        f = random_payoff_table(rng, market.instance)
        bump = np.abs(random_payoff_table(rng, market.instance))
        phi = lambda t: superhedge_dual(market, Payoff.dense(t)).value
        base = phi(f)
        assert phi(f + 0.75) == pytest.approx(base + 0.75, abs=1e-8)
        assert phi(f + bump) >= base - 1e-8
        # positive homogeneity holds exactly on the conic strategy space
        assert phi(2.0 * f) == pytest.approx(2.0 * base, abs=1e-8)
