"""Worst-case valuation of action portfolios over sets of couplings.

The package values lotteries over portfolios of state-contingent actions
by the minimum expected utility across a convex set of joint
distributions whose per-class marginals are pinned to a common measure,
checks the behavioral axioms that characterize such valuations on finite
menus, and solves a two-state exchange economy where one asset's
correlation with the endowment is misunderstood.
"""

__version__ = "0.1.0"

from .errors import (
    CcrError,
    DemandError,
    DomainError,
    InfeasibleError,
    ResourceCapError,
    SolverError,
    ValidationError,
)
from .model import (
    Action,
    Lottery,
    OutcomeLottery,
    Profile,
    StateSpace,
    UtilityIndex,
    induced_lottery,
    mix,
    plausible_realizations,
    realization_count,
)
from .priors import (
    Coupling,
    FrechetClass,
    Hull,
    JointIndex,
    LinearConstraint,
    Polytope,
    Singleton,
    diagonal_pushforward,
    enumerate_vertices,
    is_member,
    min_over_prior_set,
    product_measure,
)
from .valuation import (
    CcrModel,
    Preference,
    UtilityAct,
    certainty_equivalent,
    lift,
    misperception_witness,
    prefer,
    value,
)
from .assets import (
    Economy,
    EquilibriumPrices,
    PortfolioPoint,
    Prices,
    cross_term,
    demand,
    equilibrium_prices,
    nonparticipation_interval,
    portfolio_gradient,
    portfolio_value,
    subgradient_segment,
    sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
