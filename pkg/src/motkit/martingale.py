"""Semi-static superhedging, martingale-constrained primals, bid-ask
transaction costs, and arbitrage classification on finite price grids.

Strategy space
--------------
A semi-static strategy holds cash m, nonnegative static option legs g_n
priced at the (sub)linear marginal price, and dynamic positions in the
underlying.  Frictionless assets trade through one adapted position table
per period (gains sum h_n . (S_n - S_{n-1})).  Assets with proportional
costs eps_i trade through nonnegative buy/sell forward trades per
(maturity N, period n <= N, prefix): a buy pays off  S_N - (1+eps) S_{n-1}
and a sell  (1-eps) S_{n-1} - S_N.  Ranging over all maturities N <= T
matches the bid-ask consistency bands "for all N and n <= N" on the primal
side, which a single terminal-maturity position table cannot reproduce;
strategies are reported as per-maturity position/turnover tables.

The coupling side constrains, per asset, either per-prefix martingale
equalities (eps_i = 0) or the full family of bid-ask bands
(1-eps) S_n <= E[S_N | F_n] <= (1+eps) S_n for all N <= T, n < N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import LpBuilder, LpError, solve
from .model import (
    VALUE_TOL,
    Coupling,
    Instance,
    Payoff,
    marginal_of,
    sublinear_price,
)
from .transport import (
    DualityReport,
    _add_marginal_rows,
    _add_path_variables,
    _add_static_leg_columns,
    _separation_value,
    _superreplication_rows,
)

__all__ = [
    "Market",
    "DynamicLeg",
    "SemiStaticStrategy",
    "SuperhedgeResult",
    "MotPrimalResult",
    "ArbitrageVerdict",
    "FtapReport",
    "FrictionlessLimitReport",
    "superhedge_dual",
    "primal_mot",
    "classify_arbitrage",
    "ftap_check",
    "superhedging_duality_report",
    "frictionless_limit_check",
    "feasibility_residual",
]

ARBITRAGE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Market:
    """Price grids plus spot, per-asset proportional costs and horizon."""

    instance: Instance
    s0: np.ndarray
    epsilons: np.ndarray

    def __post_init__(self):
        d = self.instance.axes[0].d
        for ax in self.instance.axes:
            if ax.d != d:
                raise ValueError("all axes must share the asset dimension")
        if not self.instance.nonnegative:
            raise ValueError("market grids must have nonnegative coordinates")
        s0 = np.atleast_1d(np.asarray(self.s0, dtype=float))
        eps = np.asarray(self.epsilons, dtype=float)
        if eps.ndim == 0:
            eps = np.full(d, float(eps))
        if s0.shape != (d,) or eps.shape != (d,):
            raise ValueError("s0 and epsilons must have one entry per asset")
        if np.any(s0 < 0) or np.any(eps < 0):
            raise ValueError("s0 and epsilons must be nonnegative")
        s0.setflags(write=False)
        eps.setflags(write=False)
        object.__setattr__(self, "s0", s0)
        object.__setattr__(self, "epsilons", eps)

    @property
    def d(self) -> int:
        return self.instance.axes[0].d

    @property
    def horizon(self) -> int:
        return self.instance.horizon

    @property
    def frictionless(self) -> bool:
        return bool(np.all(self.epsilons == 0.0))

    def with_epsilons(self, epsilons) -> "Market":
        return Market(self.instance, self.s0, np.asarray(epsilons, dtype=float))

    def price_paths(self) -> list[np.ndarray]:
        """S_n along every path for n = 0..T; each entry is (n_paths, d)."""
        n_paths = self.instance.n_paths
        out = [np.broadcast_to(self.s0, (n_paths, self.d))]
        for pos in range(self.horizon):
            out.append(self.instance.coordinate_values(pos))
        return out


@dataclass(frozen=True, eq=False)
class DynamicLeg:
    """Adapted positions (and turnover bounds) valued at one maturity.

    h[n-1] has shape (#prefixes of length n-1, d); u matches h and is
    present only when some asset carries transaction costs.
    """

    maturity: int
    h: tuple[np.ndarray, ...]
    u: tuple[np.ndarray, ...] | None = None


@dataclass(frozen=True, eq=False)
class SemiStaticStrategy:
    m: float
    g: tuple[np.ndarray, ...]
    legs: tuple[DynamicLeg, ...]

    def cost(self, market: Market) -> float:
        total = self.m
        for pos, constraint in enumerate(market.instance.constraints):
            total += sublinear_price(constraint, self.g[pos])
        return float(total)

    def dynamic_gains(self, market: Market) -> np.ndarray:
        """Trading gains net of friction along every path."""
        instance = market.instance
        s = market.price_paths()
        eps = market.epsilons
        total = np.zeros(instance.n_paths)
        for leg in self.legs:
            for n in range(1, leg.maturity + 1):
                pid = instance.prefix_ids(n - 1)
                h_n = leg.h[n - 1][pid]  # (n_paths, d)
                total += np.einsum("pd,pd->p", h_n, s[n] - s[n - 1])
                if leg.u is not None:
                    u_n = leg.u[n - 1][pid]
                    total -= np.einsum("pd,pd->p", u_n * eps, s[n - 1])
        return total

    def outcome(self, market: Market, payoff_table=None) -> np.ndarray:
        """m + static legs + dynamic gains along every path."""
        instance = market.instance
        indices = instance.point_indices()
        static = np.full(instance.n_paths, self.m)
        for pos in range(instance.horizon):
            static = static + self.g[pos][indices[pos]]
        return static + self.dynamic_gains(market)


@dataclass(frozen=True, eq=False)
class SuperhedgeResult:
    status: str  # "optimal" | "unbounded"
    value: float
    strategy: SemiStaticStrategy | None
    ray: SemiStaticStrategy | None = None


class _StrategyColumns:
    """Catalog of the dynamic-trading columns of the superhedge LP.

    ``force_frictional`` routes zero-cost assets through the per-maturity
    trade columns as well; the LP value is unchanged (a maturity-N trade is
    a telescoping sum of one-step positions when trading is free), which is
    exactly the frictionless-reduction check.
    """

    def __init__(self, builder: LpBuilder, market: Market,
                 force_frictional: bool = False):
        instance = market.instance
        t_horizon = market.horizon
        self.market = market
        self.s = market.price_paths()
        self.prefix = [instance.prefix_ids(level) for level in range(t_horizon)]
        # frictionless assets: positions h[(asset, n)] -> ids per prefix
        self.h_vars: dict[tuple[int, int], np.ndarray] = {}
        # frictional assets: trades (asset, N, n) -> (buy ids, sell ids)
        self.trade_vars: dict[tuple[int, int, int], tuple[np.ndarray, np.ndarray]] = {}
        for a in range(market.d):
            if market.epsilons[a] == 0.0 and not force_frictional:
                for n in range(1, t_horizon + 1):
                    count = instance.n_prefixes(n - 1)
                    ids = np.array([builder.add_variable(f"h[{a},{n},{p}]", lower=-np.inf)
                                    for p in range(count)])
                    self.h_vars[(a, n)] = ids
            else:
                for mat in range(1, t_horizon + 1):
                    for n in range(1, mat + 1):
                        count = instance.n_prefixes(n - 1)
                        buys = np.array([builder.add_variable(
                            f"buy[{a},{mat},{n},{p}]", lower=0.0) for p in range(count)])
                        sells = np.array([builder.add_variable(
                            f"sell[{a},{mat},{n},{p}]", lower=0.0) for p in range(count)])
                        self.trade_vars[(a, mat, n)] = (buys, sells)

    def path_coefficients(self, i: int) -> list[tuple[int, float]]:
        """Dynamic-outcome coefficients of path i for the superhedge rows."""
        market = self.market
        s = self.s
        coeffs: list[tuple[int, float]] = []
        for (a, n), ids in self.h_vars.items():
            delta = s[n][i, a] - s[n - 1][i, a]
            if delta != 0.0:
                coeffs.append((int(ids[self.prefix[n - 1][i]]), delta))
        for (a, mat, n), (buys, sells) in self.trade_vars.items():
            e = market.epsilons[a]
            buy_coef = s[mat][i, a] - (1.0 + e) * s[n - 1][i, a]
            sell_coef = (1.0 - e) * s[n - 1][i, a] - s[mat][i, a]
            p = self.prefix[n - 1][i]
            if buy_coef != 0.0:
                coeffs.append((int(buys[p]), buy_coef))
            if sell_coef != 0.0:
                coeffs.append((int(sells[p]), sell_coef))
        return coeffs

    def extract_legs(self, x: np.ndarray) -> tuple[DynamicLeg, ...]:
        market = self.market
        instance = market.instance
        t_horizon = market.horizon
        has_trades = bool(self.trade_vars)
        with_u = bool(np.any(market.epsilons > 0.0))
        maturities = range(1, t_horizon + 1) if has_trades else [t_horizon]
        legs = []
        for mat in maturities:
            h = [np.zeros((instance.n_prefixes(n - 1), market.d))
                 for n in range(1, mat + 1)]
            u = [np.zeros_like(tab) for tab in h] if with_u else None
            empty = True
            for (a, n), ids in self.h_vars.items():
                if mat == t_horizon:
                    h[n - 1][:, a] = x[ids]
                    empty = empty and not np.any(x[ids])
            for (a, m2, n), (buys, sells) in self.trade_vars.items():
                if m2 != mat:
                    continue
                delta = x[buys] - x[sells]
                turnover = x[buys] + x[sells]
                # positions accumulate the trades along ancestor prefixes
                for k in range(n, mat + 1):
                    ancestors = _ancestor_prefix(instance, k - 1, n - 1)
                    h[k - 1][:, a] += delta[ancestors]
                if u is not None:
                    u[n - 1][:, a] += turnover
                empty = empty and not np.any(turnover) and not np.any(delta)
            if mat == t_horizon or not empty:
                legs.append(DynamicLeg(mat, tuple(h), tuple(u) if u else None))
        return tuple(legs)


def _ancestor_prefix(instance: Instance, level: int, ancestor_level: int) -> np.ndarray:
    """Map prefix ids at `level` to their ancestor ids at `ancestor_level`."""
    stride = int(np.prod(instance.shape[ancestor_level:level], initial=1))
    return np.arange(instance.n_prefixes(level)) // stride


def _build_superhedge(market: Market, table: np.ndarray,
                      force_frictional: bool = False):
    builder = LpBuilder("min")
    m_var, g_vars, _ = _add_static_leg_columns(builder, market.instance)
    columns = _StrategyColumns(builder, market, force_frictional=force_frictional)
    _superreplication_rows(builder, market.instance, table, m_var, g_vars,
                           extra_coeffs=columns.path_coefficients)
    return builder, m_var, g_vars, columns


def _strategy_from_vector(x: np.ndarray, m_var, g_vars, columns) -> SemiStaticStrategy:
    g = tuple(np.array([x[v] for v in leg]) for leg in g_vars)
    return SemiStaticStrategy(m=float(x[m_var]), g=g, legs=columns.extract_legs(x))


def superhedge_dual(market: Market, payoff: Payoff,
                    force_frictional: bool = False) -> SuperhedgeResult:
    """Cheapest semi-static superhedge of the payoff.

    Unbounded means a uniform arbitrage exists; the improving ray is
    returned as a strategy-space direction.
    """
    table = payoff.table_for(market.instance)
    builder, m_var, g_vars, columns = _build_superhedge(
        market, table, force_frictional=force_frictional)
    sol = solve(builder.build())
    if sol.status == "optimal":
        strategy = _strategy_from_vector(sol.x, m_var, g_vars, columns)
        return SuperhedgeResult("optimal", sol.value, strategy)
    if sol.status == "unbounded":
        ray = _strategy_from_vector(np.asarray(sol.ray), m_var, g_vars, columns)
        return SuperhedgeResult("unbounded", -np.inf, None, ray=ray)
    raise LpError(f"superhedge LP unexpectedly {sol.status}")  # pragma: no cover


@dataclass(frozen=True, eq=False)
class MotPrimalResult:
    status: str  # "optimal" | "infeasible"
    value: float
    coupling: Coupling | None


def _mot_primal_builder(market: Market, table: np.ndarray) -> LpBuilder:
    instance = market.instance
    builder = LpBuilder("max")
    path_vars = _add_path_variables(builder, instance, table)
    _add_marginal_rows(builder, instance, path_vars)
    s = market.price_paths()
    t_horizon = market.horizon
    for a in range(market.d):
        e = market.epsilons[a]
        if e == 0.0:
            for n in range(t_horizon):
                pid = instance.prefix_ids(n)
                delta = s[n + 1][:, a] - s[n][:, a]
                for p in range(instance.n_prefixes(n)):
                    members = np.flatnonzero(pid == p)
                    coeffs = [(path_vars[i], float(delta[i])) for i in members
                              if delta[i] != 0.0]
                    builder.add_row(coeffs, "=", 0.0, f"mart[{a},{n},{p}]")
        else:
            for mat in range(1, t_horizon + 1):
                for n in range(mat):
                    pid = instance.prefix_ids(n)
                    up = s[mat][:, a] - (1.0 + e) * s[n][:, a]
                    dn = (1.0 - e) * s[n][:, a] - s[mat][:, a]
                    for p in range(instance.n_prefixes(n)):
                        members = np.flatnonzero(pid == p)
                        builder.add_row([(path_vars[i], float(up[i])) for i in members],
                                        "<=", 0.0, f"ask[{a},{mat},{n},{p}]")
                        builder.add_row([(path_vars[i], float(dn[i])) for i in members],
                                        "<=", 0.0, f"bid[{a},{mat},{n},{p}]")
    return builder


def primal_mot(market: Market, payoff: Payoff) -> MotPrimalResult:
    """Maximize <f, mu> over marginal-feasible couplings that price the
    underlying consistently (martingale when eps = 0, bid-ask bands else)."""
    instance = market.instance
    table = payoff.table_for(instance)
    builder = _mot_primal_builder(market, table)
    sol = solve(builder.build())
    if sol.status == "optimal":
        return MotPrimalResult("optimal", sol.value,
                               Coupling(instance, sol.x[: instance.n_paths]))
    if sol.status == "infeasible":
        return MotPrimalResult("infeasible", float("nan"), None)
    raise LpError(f"martingale primal unexpectedly {sol.status}")  # pragma: no cover


def feasibility_residual(market: Market, coupling: Coupling) -> float:
    """Direct evaluation of every pricing-consistency constraint at the
    coupling: marginal separation plus worst band/martingale violation."""
    instance = market.instance
    worst = abs(coupling.total_mass - 1.0)
    for pos, constraint in enumerate(instance.constraints):
        mu_n = marginal_of(coupling, instance.axes[pos].index).weights
        sep, _ = _separation_value(constraint, mu_n)
        worst = max(worst, sep)
    s = market.price_paths()
    w = coupling.weights
    for a in range(market.d):
        e = market.epsilons[a]
        horizon = market.horizon
        for mat in range(1, horizon + 1):
            for n in range(mat):
                if e == 0.0 and mat != n + 1:
                    continue  # one-step equalities imply the rest
                pid = instance.prefix_ids(n)
                up = w * (s[mat][:, a] - (1.0 + e) * s[n][:, a])
                dn = w * ((1.0 - e) * s[n][:, a] - s[mat][:, a])
                for p in range(instance.n_prefixes(n)):
                    members = pid == p
                    if e == 0.0:
                        worst = max(worst, abs(float(up[members].sum())))
                    else:
                        worst = max(worst, float(up[members].sum()),
                                    float(dn[members].sum()))
    return float(worst)


@dataclass(frozen=True, eq=False)
class ArbitrageVerdict:
    """Classification with a validated witness strategy where applicable.

    kind "uniform": witness cost < -1e-9, outcome >= -1e-9 on every path.
    kind "model_independent": witness cost <= 1e-9, outcome >= 1 - 1e-9
    pointwise (the scalable surrogate for strict positivity).
    """

    kind: str  # "no_arbitrage" | "uniform" | "model_independent"
    strategy: SemiStaticStrategy | None
    uniform_value: float
    strict_value: float

    @property
    def arbitrage_exists(self) -> bool:
        return self.kind != "no_arbitrage"


def classify_arbitrage(market: Market) -> ArbitrageVerdict:
    """Uniform arbitrage first (cost < 0, outcome >= 0), then the
    model-independent surrogate (cost <= 0, outcome >= 1)."""
    instance = market.instance
    zero = Payoff.constant(0.0, instance)
    ua = superhedge_dual(market, zero)
    if ua.status == "unbounded" or ua.value < -ARBITRAGE_TOL:
        witness = ua.ray if ua.status == "unbounded" else ua.strategy
        return ArbitrageVerdict("uniform", witness, -np.inf if ua.status == "unbounded"
                                else ua.value, -np.inf)
    one = Payoff.constant(1.0, instance)
    mia = superhedge_dual(market, one)
    if mia.status == "unbounded" or mia.value <= ARBITRAGE_TOL:
        witness = mia.ray if mia.status == "unbounded" else mia.strategy
        return ArbitrageVerdict("model_independent", witness, ua.value,
                                -np.inf if mia.status == "unbounded" else mia.value)
    return ArbitrageVerdict("no_arbitrage", None, ua.value, mia.value)


@dataclass(frozen=True, eq=False)
class FtapReport:
    no_model_independent: bool
    no_uniform: bool
    martingale_set_nonempty: bool
    equivalent: bool
    uniform_value: float
    strict_value: float
    coupling: Coupling | None
    witness: SemiStaticStrategy | None


def ftap_check(market: Market) -> FtapReport:
    """Evaluate the three no-arbitrage conditions independently and flag
    any disagreement (each is checked by its own LP)."""
    instance = market.instance
    ua = superhedge_dual(market, Payoff.constant(0.0, instance))
    mia = superhedge_dual(market, Payoff.constant(1.0, instance))
    feas = primal_mot(market, Payoff.constant(0.0, instance))
    no_uniform = ua.status == "optimal" and ua.value >= -ARBITRAGE_TOL
    no_mia = mia.status == "optimal" and mia.value > ARBITRAGE_TOL
    nonempty = feas.status == "optimal"
    witness = None
    if not no_uniform:
        witness = ua.ray if ua.status == "unbounded" else ua.strategy
    elif not no_mia:
        witness = mia.ray if mia.status == "unbounded" else mia.strategy
    return FtapReport(
        no_model_independent=no_mia,
        no_uniform=no_uniform,
        martingale_set_nonempty=nonempty,
        equivalent=(no_mia == no_uniform == nonempty),
        uniform_value=ua.value,
        strict_value=mia.value,
        coupling=feas.coupling,
        witness=witness,
    )


def superhedging_duality_report(market: Market, payoff: Payoff) -> DualityReport:
    """Primal martingale value vs superhedging cost; requires no arbitrage."""
    primal = primal_mot(market, payoff)
    dual = superhedge_dual(market, payoff)
    if primal.status != "optimal" or dual.status != "optimal":
        raise ValueError(
            "superhedging duality needs an arbitrage-free market "
            f"(primal {primal.status}, dual {dual.status})")
    table = payoff.table_for(market.instance)
    outcome = dual.strategy.outcome(market)
    residuals = {
        "superreplication_min": float((outcome - table).min()),
        "strategy_cost_identity": abs(dual.strategy.cost(market) - dual.value),
        "coupling_feasibility": feasibility_residual(market, primal.coupling),
    }
    return DualityReport(primal_value=primal.value, dual_value=dual.value,
                         gap=abs(primal.value - dual.value),
                         coupling=primal.coupling, dual=dual.strategy,
                         residuals=residuals)


@dataclass(frozen=True, eq=False)
class FrictionlessLimitReport:
    epsilons: tuple[float, ...]
    values: tuple[float, ...]
    frictionless_value: float
    monotone: bool
    converged: bool


def frictionless_limit_check(market: Market, payoff: Payoff,
                             eps_sequence) -> FrictionlessLimitReport:
    """Superhedge values along a decreasing cost schedule; they must fall
    monotonically (within 1e-9) to the frictionless value."""
    eps_sequence = [float(e) for e in eps_sequence]
    if any(b > a for a, b in zip(eps_sequence, eps_sequence[1:])):
        raise ValueError("eps_sequence must be nonincreasing")
    values = []
    for e in eps_sequence:
        res = superhedge_dual(market.with_epsilons(np.full(market.d, e)), payoff)
        if res.status != "optimal":
            raise ValueError(f"market with eps={e} admits a uniform arbitrage")
        values.append(res.value)
    base = superhedge_dual(market.with_epsilons(np.zeros(market.d)), payoff)
    if base.status != "optimal":
        raise ValueError("frictionless market admits a uniform arbitrage")
    monotone = all(b <= a + VALUE_TOL for a, b in zip(values, values[1:]))
    tail = values[-1] if values else base.value
    converged = (abs(tail - base.value) <= VALUE_TOL if eps_sequence and eps_sequence[-1] == 0.0
                 else tail >= base.value - VALUE_TOL)
    return FrictionlessLimitReport(tuple(eps_sequence), tuple(values),
                                   base.value, monotone, converged)
