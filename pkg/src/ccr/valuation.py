"""Worst-case valuation of lotteries over a prior set of couplings.

A model bundles a state space, a declared action table with class
assignments, a utility index, and a prior set over the joint space with
one coordinate per class.  A lottery lifts to a utility act on that
joint space; its value is the act's minimum expectation over the prior
set, and preferences compare values with a fixed indifference band.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ValidationError
from .model import Action, Lottery, OutcomeLottery, Profile, StateSpace, UtilityIndex
from .priors import (
    Coupling,
    JointIndex,
    MinResult,
    PriorSet,
    Singleton,
    min_over_prior_set,
    validate_prior_set,
)

#: absolute indifference band on the utility scale
PREFERENCE_TOL = 1e-9


class Preference(enum.Enum):
    FIRST = "strictly-first"
    SECOND = "strictly-second"
    INDIFFERENT = "indifferent"


@dataclass(frozen=True, eq=False)
class UtilityAct:
    """A utility value per joint state."""

    index: JointIndex
    values: np.ndarray

    def __init__(self, index: JointIndex, values):
        arr = np.asarray(values, dtype=float).reshape(-1).copy()
        if arr.shape != (index.size,):
            raise ValidationError(
                f"act needs {index.size} values (got {arr.shape[0]})"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError("act values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True, eq=False)
class CcrModel:
    """State space, declared actions, utility index, and prior set."""

    space: StateSpace
    actions: tuple[Action, ...]
    u: UtilityIndex
    pi_set: PriorSet

    def __init__(
        self,
        space: StateSpace,
        actions: Iterable[Action],
        u: UtilityIndex,
        pi_set: PriorSet,
    ):
        acts = tuple(sorted(actions, key=lambda a: a.id))
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "actions", acts)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "pi_set", pi_set)
        index = pi_set.index
        by_id: dict[str, Action] = {}
        for a in acts:
            if a.id in by_id:
                raise ValidationError(f"duplicate action id {a.id!r}")
            if len(a.payoffs) != space.n_states:
                raise ValidationError(
                    f"action {a.id!r} has {len(a.payoffs)} payoffs for "
                    f"{space.n_states} states"
                )
            if a.class_id not in index.classes:
                raise ValidationError(
                    f"action {a.id!r} uses undeclared class {a.class_id!r}"
                )
            by_id[a.id] = a
        validate_prior_set(pi_set, space)
        object.__setattr__(self, "_by_id", by_id)

    @property
    def index(self) -> JointIndex:
        return self.pi_set.index

    @property
    def action_table(self) -> dict[str, Action]:
        return dict(self._by_id)

    def action(self, aid: str) -> Action:
        try:
            return self._by_id[aid]
        except KeyError:
            raise DomainError(f"action {aid!r} is not declared in the model") from None

    def with_extra_actions(self, extra: Iterable[Action]) -> "CcrModel":
        """A copy of the model with additional declared actions."""
        return CcrModel(self.space, self.actions + tuple(extra), self.u, self.pi_set)


def lift(p: Lottery, model: CcrModel) -> UtilityAct:
    """The utility act of ``p`` on the joint state space.

    At each joint state the act averages, over supported profiles, the
    utility of the profile's payoff sum with every action read off its
    own class coordinate.
    """
    index = model.index
    coords = index.coordinates()
    values = np.zeros(index.size)
    for profile, prob in p.support:
        sums = np.zeros(index.size)
        for aid in profile.action_ids:
            action = model.action(aid)
            pos = index.class_position(action.class_id)
            sums += action.payoff_array()[coords[pos]]
        values += prob * model.u(sums)
    return UtilityAct(index, values)


@dataclass(frozen=True, eq=False)
class ValueResult:
    value: float
    minimizer: Coupling


def value(p: Lottery, model: CcrModel) -> ValueResult:
    """Worst-case expected utility of ``p`` and a coupling attaining it.

    The returned coupling is *a* minimizer (the deterministic tie-break
    choice of the solver), not a canonical one.
    """
    act = lift(p, model)
    result: MinResult = min_over_prior_set(act.values, model.pi_set)
    return ValueResult(result.value, result.minimizer)


def prefer(
    p: Lottery, q: Lottery, model: CcrModel, tol: float = PREFERENCE_TOL
) -> Preference:
    """Compare two lotteries with an absolute indifference band."""
    vp = value(p, model).value
    vq = value(q, model).value
    if vp > vq + tol:
        return Preference.FIRST
    if vq > vp + tol:
        return Preference.SECOND
    return Preference.INDIFFERENT


def certainty_equivalent(p: Lottery, model: CcrModel) -> float:
    """The sure outcome whose utility equals the lottery's value."""
    return model.u.inverse(value(p, model).value)


def outcome_lottery_value(ol: OutcomeLottery, model: CcrModel) -> float:
    """Value of a lottery over sure outcomes (prior set is irrelevant)."""
    return ol.expected_utility(model.u)


def statewise_sums(profile: Profile, model: CcrModel) -> tuple[float, ...]:
    """Per-state payoff sum of a profile under the true state space.

    Summation follows the canonical action order, so equal multisets give
    bit-identical sums.
    """
    totals = [0.0] * model.space.n_states
    for aid in profile.action_ids:
        payoffs = model.action(aid).payoffs
        for s in range(model.space.n_states):
            totals[s] += payoffs[s]
    return tuple(totals)


def misperception_witness(
    model: CcrModel, menu: Sequence[Profile], tol: float = PREFERENCE_TOL
) -> tuple[Profile, Profile] | None:
    """A pair of statewise-equivalent profiles that are not indifferent.

    Statewise sums are compared with exact float equality (the premise is
    constructed, not measured); returns None when no pair qualifies.
    """
    sums = [statewise_sums(profile, model) for profile in menu]
    for i in range(len(menu)):
        for j in range(i + 1, len(menu)):
            if sums[i] != sums[j]:
                continue
            verdict = prefer(Lottery.sure(menu[i]), Lottery.sure(menu[j]), model, tol)
            if verdict is not Preference.INDIFFERENT:
                return menu[i], menu[j]
    return None


def seu_value(p: Lottery, model: CcrModel) -> float:
    """Expected utility under the true marginal, ignoring the prior set.

    Evaluates each profile's statewise payoff sum against mu directly;
    used as an independent check for single-class lotteries, whose
    worst-case value is pinned to this number by marginal agreement.
    """
    mu = model.space.mu
    total = 0.0
    for profile, prob in p.support:
        sums = statewise_sums(profile, model)
        total += prob * math.fsum(mu[s] * model.u(sums[s]) for s in range(len(mu)))
    return total


def is_singleton_prior(model: CcrModel) -> bool:
    return isinstance(model.pi_set, Singleton)
