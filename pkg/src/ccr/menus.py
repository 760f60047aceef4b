"""Generators for models, menus, and bet grids used by the axiom lab.

Randomized menus draw from a caller-supplied ``numpy.random.Generator``
so every report is replayable from its recorded seed.  Exhaustive menus
for the if-and-only-if checks are built from small payoff grids rather
than sampled: the converse directions need a violating instance to
*exist* in the searched family, and two-value bets on a grid contain
the constructions that produce one.

Scenario-local action synthesis is deliberate: checks that need sum
actions, certainty-equivalent constants, or bet grids extend the model's
declared action table on the fly.
"""
from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .model import Action, Lottery, Profile, StateSpace, UtilityIndex
from .priors import (
    Coupling,
    FrechetClass,
    Hull,
    JointIndex,
    LinearConstraint,
    Polytope,
    Singleton,
)
from .valuation import CcrModel, certainty_equivalent

#: mixing-weight grid used by the independence-style checks
DEFAULT_ALPHAS = (0.1, 0.25, 0.5, 0.75, 0.9)

#: payoff grid for the exhaustive two-value-bet menus
BET_PAYOFF_GRID = (-100.0, -50.0, 0.0, 50.0, 100.0)


def random_coupling(space: StateSpace, index: JointIndex, rng: np.random.Generator) -> Coupling:
    """A marginal-valid coupling via iterative proportional fitting."""
    shape = (index.n_states,) * index.n_classes
    table = rng.uniform(0.5, 1.5, size=shape)
    mu = space.mu_array()
    for _ in range(500):
        worst = 0.0
        for axis in range(index.n_classes):
            axes = tuple(j for j in range(index.n_classes) if j != axis)
            marg = table.sum(axis=axes) if axes else table
            worst = max(worst, float(np.max(np.abs(marg - mu))))
            ratio = np.where(marg > 0.0, mu / np.where(marg > 0.0, marg, 1.0), 0.0)
            table = table * ratio.reshape(
                [-1 if j == axis else 1 for j in range(index.n_classes)]
            )
        if worst <= 1e-13:
            break
    return Coupling(index, table.reshape(-1))


def random_state_space(rng: np.random.Generator, n_states: int) -> StateSpace:
    weights = rng.uniform(0.2, 1.0, size=n_states)
    mu = weights / weights.sum()
    labels = [f"s{i}" for i in range(n_states)]
    return StateSpace(labels, mu)


def random_utility(rng: np.random.Generator) -> UtilityIndex:
    kind = rng.integers(0, 4)
    if kind == 0:
        return UtilityIndex.linear()
    if kind == 1:
        return UtilityIndex.cara(float(rng.uniform(0.005, 0.05)))
    if kind == 2:
        return UtilityIndex.log(shift=float(rng.uniform(120.0, 300.0)))
    xs = np.cumsum(rng.uniform(20.0, 80.0, size=4)) - 150.0
    vs = np.cumsum(rng.uniform(5.0, 40.0, size=4)) - 60.0
    return UtilityIndex.piecewise(zip(xs, vs))


def random_actions(
    rng: np.random.Generator,
    space: StateSpace,
    classes: Sequence[str],
    count: int,
    *,
    max_range: int = 3,
) -> list[Action]:
    """Actions with small ranges so realization enumeration stays cheap."""
    out = []
    for i in range(count):
        n_values = int(rng.integers(1, max_range + 1))
        values = np.round(rng.uniform(-10.0, 10.0, size=n_values), 3)
        payoffs = values[rng.integers(0, n_values, size=space.n_states)]
        class_id = classes[int(rng.integers(0, len(classes)))]
        out.append(Action(f"a{i}", payoffs, class_id))
    return out


def random_prior_set(
    rng: np.random.Generator,
    space: StateSpace,
    index: JointIndex,
    kind: str | None = None,
):
    if kind is None:
        kind = ("frechet", "singleton", "polytope", "hull")[int(rng.integers(0, 4))]
    if kind == "frechet":
        return FrechetClass(index, space)
    if kind == "singleton":
        return Singleton(random_coupling(space, index, rng))
    if kind == "hull":
        count = int(rng.integers(2, 5))
        return Hull([random_coupling(space, index, rng) for _ in range(count)])
    if kind == "polytope":
        # box rows straddle a known member, so the set is never empty
        witness = random_coupling(space, index, rng)
        rows = []
        for _ in range(int(rng.integers(1, 3))):
            cell = int(rng.integers(0, index.size))
            coeffs = np.zeros(index.size)
            coeffs[cell] = 1.0
            slack = float(rng.uniform(0.02, 0.1))
            rows.append(LinearConstraint(coeffs, "<=", witness.mass[cell] + slack))
            rows.append(
                LinearConstraint(coeffs, ">=", max(0.0, witness.mass[cell] - slack))
            )
        return Polytope(index, space, tuple(rows))
    raise ValidationError(f"unknown prior-set kind {kind!r}")


def random_model(
    rng: np.random.Generator,
    *,
    n_states: int | None = None,
    n_classes: int | None = None,
    n_actions: int | None = None,
    prior_kind: str | None = None,
    u: UtilityIndex | None = None,
) -> CcrModel:
    K = n_states if n_states is not None else int(rng.integers(2, 4))
    m = n_classes if n_classes is not None else int(rng.integers(1, 4))
    count = n_actions if n_actions is not None else int(rng.integers(3, 7))
    space = random_state_space(rng, K)
    classes = [f"C{j}" for j in range(m)]
    index = JointIndex(classes, K)
    actions = random_actions(rng, space, classes, count)
    pi_set = random_prior_set(rng, space, index, prior_kind)
    util = u if u is not None else random_utility(rng)
    if util.domain_floor is not None:
        # payoff sums stay above the domain floor by construction
        max_profile = 3
        low = sum(sorted(min(a.payoffs) for a in actions)[:max_profile])
        if low <= util.domain_floor:
            util = UtilityIndex.log(shift=abs(low) + 50.0)
    return CcrModel(space, actions, util, pi_set)


def random_lottery(
    model: CcrModel,
    rng: np.random.Generator,
    *,
    action_only: bool = False,
    max_support: int = 3,
    max_profile: int = 3,
) -> Lottery:
    ids = [a.id for a in model.actions]
    n_support = int(rng.integers(1, max_support + 1))
    pairs = []
    for _ in range(n_support):
        size = 1 if action_only else int(rng.integers(1, max_profile + 1))
        chosen = [ids[int(rng.integers(0, len(ids)))] for _ in range(size)]
        pairs.append(Profile(chosen))
    weights = rng.uniform(0.1, 1.0, size=len(pairs))
    probs = weights / weights.sum()
    return Lottery(list(zip(pairs, probs)))


def random_menu(
    model: CcrModel, rng: np.random.Generator, size: int, **kwargs
) -> list[Lottery]:
    return [random_lottery(model, rng, **kwargs) for _ in range(size)]


def constant_action(aid: str, outcome: float, model: CcrModel) -> Action:
    """A constant action; its class assignment never affects values."""
    cls = model.index.classes[0]
    return Action(aid, (outcome,) * model.space.n_states, cls)


def with_certainty_equivalents(
    model: CcrModel, menu: Sequence[Lottery]
) -> tuple[CcrModel, list[Lottery], list[Lottery]]:
    """Extend the model with one constant action per menu entry's CE.

    Returns the extended model, the menu re-expressed against it, and the
    list of degenerate CE lotteries (useful as action-lottery candidates
    for independence-style premises).
    """
    extras = []
    ce_lotteries = []
    for i, lottery in enumerate(menu):
        ce = certainty_equivalent(lottery, model)
        extras.append(constant_action(f"_ce{i}", ce, model))
    extended = model.with_extra_actions(extras)
    for action in extras:
        ce_lotteries.append(Lottery.sure(Profile.of(action.id)))
    return extended, list(menu), ce_lotteries


# ----------------------------------------------------------------------
# exhaustive two-value-bet constructions
# ----------------------------------------------------------------------


def bet_actions(
    space: StateSpace,
    class_id: str,
    payoff_grid: Sequence[float] = BET_PAYOFF_GRID,
    *,
    prefix: str,
) -> list[Action]:
    """All two-value bets on a 2-state space with payoffs from the grid."""
    if space.n_states != 2:
        raise ValidationError("bet grids are defined for two-state spaces")
    out = []
    for hi, lo in itertools.permutations(payoff_grid, 2):
        out.append(Action(f"{prefix}_{hi:g}_{lo:g}", (hi, lo), class_id))
    return out


def two_class_bet_model(
    space: StateSpace,
    u: UtilityIndex,
    t_lo: float,
    t_hi: float,
    payoff_grid: Sequence[float] = BET_PAYOFF_GRID,
) -> CcrModel:
    """A 2-class, 2-state model with an off-diagonal-mass interval prior.

    The prior set is the Frechet class intersected with
    ``t_lo <= mass(s0, s1) <= t_hi`` where ``mass(s0, s1)`` is the upper
    off-diagonal cell; on a 2x2 table both off-diagonal cells carry the
    same mass, so this pins the whole coupling.
    """
    classes = ("C1", "C2")
    index = JointIndex(classes, 2)
    cell = index.ravel((0, 1))
    coeffs = np.zeros(index.size)
    coeffs[cell] = 1.0
    constraints = (
        LinearConstraint(coeffs, ">=", t_lo),
        LinearConstraint(coeffs, "<=", t_hi),
    )
    pi_set = Polytope(index, space, constraints)
    actions = bet_actions(space, "C1", payoff_grid, prefix="b1") + bet_actions(
        space, "C2", payoff_grid, prefix="b2"
    )
    # sum actions: one single-class action per cross-class bet pair,
    # paying the statewise sum (the simple side of the complexity menu)
    sums = []
    seen = set()
    for a1 in bet_actions(space, "C1", payoff_grid, prefix="b1"):
        for a2 in bet_actions(space, "C2", payoff_grid, prefix="b2"):
            payoffs = tuple(x + y for x, y in zip(a1.payoffs, a2.payoffs))
            aid = f"sum_{payoffs[0]:g}_{payoffs[1]:g}"
            if aid in seen:
                continue
            seen.add(aid)
            sums.append(Action(aid, payoffs, "C1"))
    return CcrModel(space, actions + sums, u, pi_set)


def complexity_menu(model: CcrModel) -> list[tuple[Lottery, Lottery]]:
    """Pairs (single sum action, cross-class bet profile), statewise equal."""
    bets1 = sorted(a.id for a in model.actions if a.id.startswith("b1_"))
    bets2 = sorted(a.id for a in model.actions if a.id.startswith("b2_"))
    table = {a.id: a for a in model.actions}
    pairs = []
    for id1 in bets1:
        for id2 in bets2:
            payoffs = tuple(
                x + y for x, y in zip(table[id1].payoffs, table[id2].payoffs)
            )
            sum_id = f"sum_{payoffs[0]:g}_{payoffs[1]:g}"
            pairs.append(
                (Lottery.sure(Profile.of(sum_id)), Lottery.sure(Profile.of(id1, id2)))
            )
    return pairs


def cross_class_bet_pairs(model: CcrModel) -> list[tuple[str, str]]:
    """All (class-1 bet, class-2 bet) id pairs declared in a bet model."""
    bets1 = sorted(a.id for a in model.actions if a.id.startswith("b1_"))
    bets2 = sorted(a.id for a in model.actions if a.id.startswith("b2_"))
    return [(id1, id2) for id1 in bets1 for id2 in bets2]


# ----------------------------------------------------------------------
# the canonical temperature scenario
# ----------------------------------------------------------------------


def temperature_space() -> StateSpace:
    return StateSpace(("cold", "hot"), (0.6, 0.4))


def temperature_actions() -> list[Action]:
    """Bets on tomorrow's temperature quoted in two unit systems.

    ``below30C`` pays 100 when the day is cold; ``atleast86F`` pays 100
    when it is hot; the two thresholds coincide physically, but a holder
    who cannot convert units may treat their realizations as unrelated.
    """
    return [
        Action("sure100", (100.0, 100.0), "celsius"),
        Action("below30C", (100.0, 0.0), "celsius"),
        Action("atleast86F", (0.0, 100.0), "fahrenheit"),
        Action("short86F", (0.0, -100.0), "fahrenheit"),
        Action("coldbet", (100.0, -100.0), "celsius"),
    ]


def temperature_model(
    u: UtilityIndex | None = None,
    *,
    t_lo: float | None = None,
    t_hi: float | None = None,
) -> CcrModel:
    """The two-class temperature model.

    With no interval arguments the prior set is the full Frechet class;
    otherwise it is the polytope pinning the off-diagonal mass to
    ``[t_lo, t_hi]``.
    """
    space = temperature_space()
    index = JointIndex(("celsius", "fahrenheit"), 2)
    if t_lo is None and t_hi is None:
        pi_set = FrechetClass(index, space)
    else:
        cell = index.ravel((0, 1))
        coeffs = np.zeros(index.size)
        coeffs[cell] = 1.0
        pi_set = Polytope(
            index,
            space,
            (
                LinearConstraint(coeffs, ">=", 0.0 if t_lo is None else t_lo),
                LinearConstraint(coeffs, "<=", 0.4 if t_hi is None else t_hi),
            ),
        )
    util = u if u is not None else UtilityIndex.cara(0.01)
    return CcrModel(space, temperature_actions(), util, pi_set)


def temperature_menu() -> list[Lottery]:
    """The four-lottery menu of the canonical scenario."""
    return [
        Lottery.sure(Profile.of("sure100")),
        Lottery.sure(Profile.of("below30C", "atleast86F")),
        Lottery.sure(Profile.of("coldbet")),
        Lottery.sure(Profile.of("below30C", "short86F")),
    ]
