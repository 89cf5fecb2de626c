"""The Bernoulli-product duality gap, reproduced at finite depth.

On the infinite product of fair coin flips with every marginal fixed at
(1/2, 1/2), the payoff f = liminf_n x_n has superreplication value 1 but
no coupling prices it above 1/2.  Both sides reduce to exact finite
computations:

* the dual side is forced by setting the unmodeled tail to all-ones, which
  costs nothing extra and pins the depth-N subreplication LP at exactly 1;
* the primal side is the two-point measure (all-ones + all-zeros)/2, which
  evaluates to 1/2, together with the depth-N LP bound max E[x_N] = 1/2.

The gap 1/2 persists at every depth; the cylinder payoff (without tail
forcing) shows zero gap at each finite depth, isolating the gap as a pure
limit phenomenon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import LpBuilder, LpError, solve
from .model import Coupling, DiscreteAxis, DiscreteMeasure, Instance, MarginalConstraint

__all__ = [
    "BernoulliGapReport",
    "bernoulli_instance",
    "tail_forced_dual_bound",
    "liminf_primal_value",
    "gap_report",
    "two_point_measure",
    "window_min_expectations",
]

DUAL_TOL = 1e-9


def bernoulli_instance(depth: int) -> Instance:
    """depth axes {0, 1}, each with the exact fair-coin marginal."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    axes = []
    constraints = []
    for n in range(1, depth + 1):
        ax = DiscreteAxis(index=n, points=np.array([[0.0], [1.0]]))
        axes.append(ax)
        constraints.append(MarginalConstraint.exact(
            DiscreteMeasure(ax, np.array([0.5, 0.5]))))
    return Instance(tuple(axes), tuple(constraints), label=f"bernoulli-{depth}")


def two_point_measure(depth: int) -> Coupling:
    """(delta_all_ones + delta_all_zeros) / 2 truncated to the given depth."""
    instance = bernoulli_instance(depth)
    w = np.zeros(instance.n_paths)
    w[0] = 0.5            # all-zeros path (row-major, axis 1 slowest)
    w[-1] = 0.5           # all-ones path
    return Coupling(instance, w)


def tail_forced_dual_bound(depth: int) -> tuple[float, float, tuple[np.ndarray, ...]]:
    """Value of the depth-N subreplication LP with the tail set to all-ones.

    Any cash-plus-legs position (m, g) that dominates the liminf payoff
    must in particular cover the paths that end in ones forever, which
    forces m + sum_{n<=N} g_n(y_n) >= 1 on every depth-N prefix.  The LP

        min  m + sum_n (g_n(0) + g_n(1)) / 2
        s.t. m + sum_n g_n(y_n) >= 1  for all y in {0,1}^N,  g >= 0

    has value exactly 1 for every depth.  Returns (value, certificate m,
    certificate legs).
    """
    instance = bernoulli_instance(depth)
    builder = LpBuilder("min")
    m_var = builder.add_variable("m", lower=-np.inf, objective=1.0)
    g_vars = [[builder.add_variable(f"g[{n},{j}]", lower=0.0, objective=0.5)
               for j in range(2)] for n in range(depth)]
    indices = instance.point_indices()
    for i in range(instance.n_paths):
        coeffs = [(m_var, 1.0)]
        coeffs += [(g_vars[n][indices[n, i]], 1.0) for n in range(depth)]
        builder.add_row(coeffs, ">=", 1.0, f"prefix[{i}]")
    sol = solve(builder.build())
    if sol.status != "optimal":
        raise LpError(f"tail-forced dual LP unexpectedly {sol.status}")
    legs = tuple(np.array([sol.x[v] for v in g_vars[n]]) for n in range(depth))
    return sol.value, float(sol.x[m_var]), legs


def liminf_primal_value(depth: int) -> tuple[float, float]:
    """(candidate value, LP upper bound) for the primal at the given depth.

    The candidate is <f, mu*> = 1/2 for the explicit two-point measure;
    the bound is the LP value of max E[x_N] over feasible couplings, which
    realizes the liminf bound <f, mu> <= liminf_n E[x_n] = 1/2.
    """
    mu_star = two_point_measure(depth)
    candidate = 0.5 * 1.0 + 0.5 * 0.0  # f = liminf is 1 on ones, 0 on zeros
    instance = mu_star.instance
    builder = LpBuilder("max")
    last = instance.coordinate_values(depth - 1)[:, 0]
    path_vars = [builder.add_variable(f"mu[{i}]", lower=0.0, objective=float(last[i]))
                 for i in range(instance.n_paths)]
    from .transport import _add_marginal_rows
    _add_marginal_rows(builder, instance, path_vars)
    sol = solve(builder.build())
    if sol.status != "optimal":
        raise LpError(f"liminf bound LP unexpectedly {sol.status}")
    return candidate, sol.value


def window_min_expectations(depth: int, start: int = 1) -> np.ndarray:
    """E[min_{start<=n<=j} x_n] under the product measure for j = start..depth.

    Computed by exhaustive path enumeration; the values 2^-(j-start+1) fall
    monotonically to 0, which is why the liminf integrates to 0 against the
    product measure.
    """
    if not 1 <= start <= depth:
        raise ValueError("need 1 <= start <= depth")
    out = []
    for j in range(start, depth + 1):
        instance = bernoulli_instance(j)
        coords = np.stack([instance.coordinate_values(pos)[:, 0]
                           for pos in range(start - 1, j)])
        window_min = coords.min(axis=0)
        product = Coupling.product(instance)
        out.append(float(window_min @ product.weights))
    return np.array(out)


@dataclass(frozen=True, eq=False)
class BernoulliGapReport:
    """Dual and primal values at one truncation depth.

    dual_value is the tail-forced LP lower bound; dual_upper_bound = 1 is
    the cost of the trivial cover (m, g) = (1, 0), so the superreplication
    value is exactly 1.  primal_candidate_value is attained by the
    two-point measure; primal_upper_bound is the depth-N LP bound.
    """

    depth: int
    dual_value: float
    dual_upper_bound: float
    primal_candidate_value: float
    primal_upper_bound: float
    gap: float
    certificate_m: float
    certificate_legs: tuple[np.ndarray, ...]
    attaining_measure: Coupling

    def __post_init__(self):
        if not self.dual_value >= 1.0 - DUAL_TOL:
            raise ValueError(f"dual bound lost: {self.dual_value}")
        if not self.primal_candidate_value <= self.primal_upper_bound + 1e-12:
            raise ValueError("primal candidate exceeds its upper bound")


def gap_report(depth: int) -> BernoulliGapReport:
    """Assemble the per-depth gap table row; the gap is 1/2 at every depth."""
    dual_value, cert_m, cert_legs = tail_forced_dual_bound(depth)
    candidate, upper = liminf_primal_value(depth)
    return BernoulliGapReport(
        depth=depth,
        dual_value=dual_value,
        dual_upper_bound=1.0,
        primal_candidate_value=candidate,
        primal_upper_bound=upper,
        gap=dual_value - candidate,
        certificate_m=cert_m,
        certificate_legs=cert_legs,
        attaining_measure=two_point_measure(depth),
    )
