"""Transport duality on finite grids, end to end.

Builds a two-period instance, solves the coupling (primal) and
subreplication (dual) linear programs, and shows that the values coincide;
then repeats with a convex-hull marginal where option prices are only
known up to a set of candidate measures.

Run:  python3 demos/transport_duality.py
"""

import numpy as np

from motkit import (
    Coupling,
    DiscreteAxis,
    DiscreteMeasure,
    Instance,
    MarginalConstraint,
    Payoff,
    conjugate_membership,
    dual_transport,
    evaluate_expectation,
    primal_transport,
)

# --- exact marginals: match the diagonal as well as possible ---------------

ax1 = DiscreteAxis(index=1, points=np.array([[0.0], [1.0]]))
ax2 = DiscreteAxis(index=2, points=np.array([[0.0], [1.0]]))
fair = np.array([0.5, 0.5])
instance = Instance(
    axes=(ax1, ax2),
    constraints=(
        MarginalConstraint.exact(DiscreteMeasure(ax1, fair)),
        MarginalConstraint.exact(DiscreteMeasure(ax2, fair)),
    ),
    label="two fair coins",
)

# payoff 1{x1 = x2}, tabulated row-major with axis 1 slowest
agree = Payoff.dense(np.array([1.0, 0.0, 0.0, 1.0]))

value, coupling = primal_transport(instance, agree)
print("primal (best coupling) value:", value)
print("attaining coupling:", np.round(coupling.weights, 6))

dual = dual_transport(instance, agree)
print("dual (cheapest superreplication) value:", dual.value)
print("cash m =", round(dual.m, 6), " legs:", [np.round(g, 6) for g in dual.g])
print("duality gap:", abs(value - dual.value))

# The comonotone coupling achieves the dual bound; the product coupling
# stays strictly below it.
product = Coupling.product(instance)
print("product-coupling expectation:", evaluate_expectation(product, agree))

# Couplings outside the feasible set are certified by a direction along
# which the conjugate blows up.
skewed = Coupling(instance, np.outer([0.9, 0.1], fair).ravel())
verdict = conjugate_membership(instance, skewed)
print("membership of a skewed coupling:", verdict.value, type(verdict.witness).__name__)

# --- convex-hull marginals: prices known only up to a measure set ----------

candidates = tuple(
    DiscreteMeasure(ax2, w)
    for w in (np.array([0.5, 0.5]), np.array([0.25, 0.75]), np.array([0.75, 0.25]))
)
hull_instance = Instance(
    axes=(ax1, ax2),
    constraints=(
        MarginalConstraint.exact(DiscreteMeasure(ax1, fair)),
        MarginalConstraint.convex_hull(candidates),
    ),
    label="uncertain second marginal",
)

value_h, _ = primal_transport(hull_instance, agree)
dual_h = dual_transport(hull_instance, agree)
print("\nhull instance primal:", value_h, " dual:", dual_h.value)
print("mixture weights on the hull vertices:", np.round(dual_h.mixtures[1], 6))
print("gap:", abs(value_h - dual_h.value))
