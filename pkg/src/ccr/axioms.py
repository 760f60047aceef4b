"""Axiom checks over finite menus, with machine-checkable witnesses.

Each check quantifies an axiom's premise over a finite menu, tests the
conclusion through the valuation (or an injected value function, so that
non-worst-case valuations can be probed too), and reports either
``holds-on-menu`` or ``violated`` with a witness.  A witness always
carries the two compared lotteries and their values, so a violation can
be re-verified independently with :func:`reverify`.

Implication checking uses a strict-premise margin of 1e-6 and a
conclusion band of 1e-9: the axioms are universally quantified, and
testing them at float knife-edges would manufacture false positives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import DomainError
from .model import (
    REALIZATION_CAP,
    Action,
    Lottery,
    OutcomeLottery,
    Profile,
    induced_lottery,
    mix,
    plausible_realizations,
)
from .menus import DEFAULT_ALPHAS
from .valuation import CcrModel, statewise_sums, value

#: float guard when testing a weak premise inequality
WEAK_GUARD = 1e-12
STRICT_MARGIN = 1e-6
CONCLUSION_TOL = 1e-9

HOLDS = "holds-on-menu"
VIOLATED = "violated"

ValueFn = Callable[[Lottery, CcrModel], float]


@dataclass(frozen=True, eq=False)
class Witness:
    """A single failed implication: ``lhs`` had to be weakly preferred."""

    lhs: Lottery | OutcomeLottery
    rhs: Lottery | OutcomeLottery
    lhs_value: float
    rhs_value: float
    required: str  # "weak" or "strict"
    context: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        """Amount by which the required inequality failed."""
        return self.rhs_value - self.lhs_value

    def describe(self) -> dict:
        return {
            "lhs": str(self.lhs),
            "rhs": str(self.rhs),
            "lhs_value": self.lhs_value,
            "rhs_value": self.rhs_value,
            "required": self.required,
            "margin": self.margin,
            "context": dict(self.context),
        }


@dataclass(eq=False)
class AxiomReport:
    axiom: str
    verdict: str
    witness: Witness | None
    margins: dict[str, float]
    checked: int

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def to_payload(self) -> dict:
        return {
            "axiom": self.axiom,
            "verdict": self.verdict,
            "checked": self.checked,
            "margins": dict(sorted(self.margins.items())),
            "witness": self.witness.describe() if self.witness else None,
        }


def reverify(witness: Witness, model: CcrModel, value_fn: ValueFn | None = None) -> float:
    """Recompute the witness margin from scratch."""
    vf = _valuer(model, value_fn)

    def side(obj) -> float:
        if isinstance(obj, OutcomeLottery):
            return obj.expected_utility(model.u)
        return vf(obj)

    return side(witness.rhs) - side(witness.lhs)


def _valuer(model: CcrModel, value_fn: ValueFn | None) -> Callable[[Lottery], float]:
    if value_fn is None:
        cache: dict[tuple, float] = {}

        def vf(lottery: Lottery) -> float:
            key = tuple((p.action_ids, pr) for p, pr in lottery.support)
            if key not in cache:
                cache[key] = value(lottery, model).value
            return cache[key]

        return vf
    return lambda lottery: value_fn(lottery, model)


def _conclude(
    report_state: dict,
    lhs,
    rhs,
    lhs_value: float,
    rhs_value: float,
    strict: bool,
    tol: float,
    context: dict,
) -> Witness | None:
    report_state["checked"] += 1
    gap = lhs_value - rhs_value
    report_state["worst_gap"] = min(report_state.get("worst_gap", math.inf), gap)
    bad = (gap <= tol) if strict else (gap < -tol)
    if bad:
        return Witness(
            lhs=lhs,
            rhs=rhs,
            lhs_value=lhs_value,
            rhs_value=rhs_value,
            required="strict" if strict else "weak",
            context=context,
        )
    return None


def _report(axiom: str, state: dict, witness: Witness | None) -> AxiomReport:
    margins = {}
    if "worst_gap" in state:
        margins["worst_conclusion_gap"] = state["worst_gap"]
    return AxiomReport(
        axiom=axiom,
        verdict=VIOLATED if witness else HOLDS,
        witness=witness,
        margins=margins,
        checked=state["checked"],
    )


# ----------------------------------------------------------------------
# monotonicity-style checks
# ----------------------------------------------------------------------


def _premise_over_realizations(
    p: Lottery,
    q: Lottery,
    model: CcrModel,
    realizations,
    strict_margin: float,
) -> tuple[bool, bool, float]:
    """(weak premise, strict premise, min induced gap) over realizations."""
    weak = True
    strict = True
    min_gap = math.inf
    seen = False
    for x in realizations:
        seen = True
        gap = induced_lottery(p, x).expected_utility(model.u) - induced_lottery(
            q, x
        ).expected_utility(model.u)
        min_gap = min(min_gap, gap)
        if gap < -WEAK_GUARD:
            return False, False, min_gap
        if gap < strict_margin:
            strict = False
    if not seen:
        return False, False, math.inf
    return weak, strict, min_gap


def check_weak_monotonicity(
    model: CcrModel,
    menu: Sequence[Lottery],
    *,
    cap: int = REALIZATION_CAP,
    strict_margin: float = STRICT_MARGIN,
    tol: float = CONCLUSION_TOL,
    value_fn: ValueFn | None = None,
) -> AxiomReport:
    """Dominance under every plausible realization forces preference.

    For each ordered menu pair whose induced lotteries weakly (resp.
    strictly, with margin) favor the first for *every* plausible
    realization, the valuation must weakly (resp. strictly) prefer it.
    Pairs whose premise fails impose nothing and are skipped.
    """
    vf = _valuer(model, value_fn)
    actions = model.action_table
    state = {"checked": 0}
    for i, p in enumerate(menu):
        for j, q in enumerate(menu):
            if i == j:
                continue
            realizations = plausible_realizations(p, q, actions, cap=cap)
            weak, strict, min_gap = _premise_over_realizations(
                p, q, model, realizations, strict_margin
            )
            if not weak:
                continue
            witness = _conclude(
                state,
                p,
                q,
                vf(p),
                vf(q),
                strict,
                tol,
                {"pair": (i, j), "min_induced_gap": min_gap},
            )
            if witness:
                return _report("weak-monotonicity", state, witness)
    return _report("weak-monotonicity", state, None)


def check_simple_monotonicity(
    model: CcrModel,
    action_pairs: Sequence[tuple[str, str]],
    *,
    tol: float = CONCLUSION_TOL,
    value_fn: ValueFn | None = None,
) -> AxiomReport:
    """Statewise-dominant single actions must be preferred."""
    vf = _valuer(model, value_fn)
    state = {"checked": 0}
    for aid, bid in action_pairs:
        a = model.action(aid)
        b = model.action(bid)
        diffs = [x - y for x, y in zip(a.payoffs, b.payoffs)]
        if min(diffs) < 0.0:
            continue  # no dominance, nothing to check
        strict = min(diffs) > 0.0
        p = Lottery.sure(Profile.of(aid))
        q = Lottery.sure(Profile.of(bid))
        witness = _conclude(
            state, p, q, vf(p), vf(q), strict, tol, {"pair": (aid, bid)}
        )
        if witness:
            return _report("simple-monotonicity", state, witness)
    return _report("simple-monotonicity", state, None)


# ----------------------------------------------------------------------
# independence-style checks
# ----------------------------------------------------------------------


def _mixture_check(
    axiom: str,
    model: CcrModel,
    menu: Sequence[Lottery],
    alphas: Sequence[float],
    r_menu: Sequence[Lottery] | None,
    restrict_q_to_actions: bool,
    tol: float,
    value_fn: ValueFn | None,
) -> AxiomReport:
    vf = _valuer(model, value_fn)
    rs = list(menu) if r_menu is None else list(r_menu)
    state = {"checked": 0}
    base = {id(lot): vf(lot) for lot in list(menu) + rs}
    for i, p in enumerate(menu):
        for j, q in enumerate(menu):
            if i == j:
                continue
            if restrict_q_to_actions and not q.is_action_lottery():
                continue
            if base[id(p)] < base[id(q)] - tol:
                continue  # premise p >= q fails
            for k, r in enumerate(rs):
                for alpha in alphas:
                    lhs = mix(p, r, alpha)
                    rhs = mix(q, r, alpha)
                    witness = _conclude(
                        state,
                        lhs,
                        rhs,
                        vf(lhs),
                        vf(rhs),
                        False,
                        tol,
                        {
                            "pair": (i, j),
                            "r": k,
                            "alpha": alpha,
                            "premise_gap": base[id(p)] - base[id(q)],
                        },
                    )
                    if witness:
                        return _report(axiom, state, witness)
    return _report(axiom, state, None)


def check_nui(
    model: CcrModel,
    menu: Sequence[Lottery],
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    r_menu: Sequence[Lottery] | None = None,
    *,
    tol: float = CONCLUSION_TOL,
    value_fn: ValueFn | None = None,
) -> AxiomReport:
    """Mixing never reverses a preference over an action lottery.

    The premise's worse lottery is restricted to action lotteries in the
    menu; the conclusion is checked for every third lottery and mixing
    weight supplied.
    """
    return _mixture_check(
        "negative-uncorrelated-independence",
        model,
        menu,
        alphas,
        r_menu,
        True,
        tol,
        value_fn,
    )


def check_independence(
    model: CcrModel,
    menu: Sequence[Lottery],
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    r_menu: Sequence[Lottery] | None = None,
    *,
    tol: float = CONCLUSION_TOL,
    value_fn: ValueFn | None = None,
) -> AxiomReport:
    """Full independence: mixing never reverses any preference."""
    return _mixture_check(
        "independence", model, menu, alphas, r_menu, False, tol, value_fn
    )


# ----------------------------------------------------------------------
# special-case axioms
# ----------------------------------------------------------------------


def check_complexity_aversion(
    model: CcrModel,
    menu: Sequence[Lottery],
    *,
    tol: float = CONCLUSION_TOL,
    value_fn: ValueFn | None = None,
) -> AxiomReport:
    """Statewise-dominant action lotteries beat profile lotteries.

    For each pair (p, q) with p an action lottery: when p's outcome
    distribution is weakly better than q's under the true state in every
    state, p must not be strictly worse.
    """
    vf = _valuer(model, value_fn)
    state = {"checked": 0}
    sums = {}
    for lot in menu:
        sums[id(lot)] = [statewise_sums(profile, model) for profile, _ in lot.support]
    for i, p in enumerate(menu):
        if not p.is_action_lottery():
            continue
        for j, q in enumerate(menu):
            ok = True
            for s in range(model.space.n_states):
                lhs = math.fsum(
                    prob * model.u(sums[id(p)][k][s])
                    for k, (_, prob) in enumerate(p.support)
                )
                rhs = math.fsum(
                    prob * model.u(sums[id(q)][k][s])
                    for k, (_, prob) in enumerate(q.support)
                )
                if lhs < rhs - WEAK_GUARD:
                    ok = False
                    break
            if not ok:
                continue
            witness = _conclude(
                state, p, q, vf(p), vf(q), False, tol, {"pair": (i, j)}
            )
            if witness:
                return _report("complexity-aversion", state, witness)
    return _report("complexity-aversion", state, None)


def _bet_high_low(action: Action) -> tuple[float, float]:
    values = action.range_values()
    if len(values) != 2:
        raise DomainError(
            f"action {action.id!r} is not a two-value bet (range size {len(values)})"
        )
    return values[1], values[0]


def check_default_to_independence(
    model: CcrModel,
    bet_pairs: Sequence[tuple[str, str]],
    weights: Sequence[float] | None = None,
    *,
    tol: float = CONCLUSION_TOL,
    value_fn: ValueFn | None = None,
) -> AxiomReport:
    """The independent-product outcome lottery beats the paired bets.

    Each pair must consist of two-value bets in different classes.  Every
    bet is matched to the two-outcome lottery it is indifferent to, the
    per-pair product lotteries are mixed with the given weights (each
    pair alone when ``weights`` is None), and the result must be weakly
    preferred to the corresponding lottery over bet profiles.

    Requires a risk-averse index: concavity is asserted by a midpoint
    test on the hull of the referenced payoff sums.
    """
    vf = _valuer(model, value_fn)
    state = {"checked": 0}

    resolved = []
    outcomes: list[float] = []
    for id1, id2 in bet_pairs:
        b1 = model.action(id1)
        b2 = model.action(id2)
        if b1.class_id == b2.class_id:
            raise DomainError(
                f"bets {id1!r} and {id2!r} must lie in different classes"
            )
        x1, y1 = _bet_high_low(b1)
        x2, y2 = _bet_high_low(b2)
        resolved.append((b1, b2, x1, y1, x2, y2))
        outcomes += [x1 + x2, x1 + y2, y1 + x2, y1 + y2]
    if resolved and not model.u.is_concave_on(min(outcomes), max(outcomes)):
        raise DomainError(
            "default-to-independence requires a risk-averse index on the bet hull"
        )

    if weights is None:
        collections = [([pair], (1.0,)) for pair in resolved]
    else:
        if len(weights) != len(resolved):
            raise DomainError("one weight per bet pair is required")
        collections = [(resolved, tuple(float(w) for w in weights))]

    for pairs, wts in collections:
        product_pairs: list[tuple[float, float]] = []
        profile_pairs: list[tuple[Profile, float]] = []
        for (b1, b2, x1, y1, x2, y2), w in zip(pairs, wts):
            p1 = _indifference_probability(model, vf, b1, x1, y1)
            p2 = _indifference_probability(model, vf, b2, x2, y2)
            product_pairs += [
                (x1 + x2, w * p1 * p2),
                (x1 + y2, w * p1 * (1.0 - p2)),
                (y1 + x2, w * (1.0 - p1) * p2),
                (y1 + y2, w * (1.0 - p1) * (1.0 - p2)),
            ]
            profile_pairs.append((Profile.of(b1.id, b2.id), w))
        product = OutcomeLottery(product_pairs)
        profile_lottery = Lottery(profile_pairs)
        witness = _conclude(
            state,
            product,
            profile_lottery,
            product.expected_utility(model.u),
            vf(profile_lottery),
            False,
            tol,
            {"pairs": [(b1.id, b2.id) for b1, b2, *_ in pairs], "weights": list(wts)},
        )
        if witness:
            return _report("default-to-independence", state, witness)
    return _report("default-to-independence", state, None)


def _indifference_probability(model, vf, bet: Action, hi: float, lo: float) -> float:
    """p solving  bet ~ (p, hi; 1-p, lo)."""
    v = vf(Lottery.sure(Profile.of(bet.id)))
    p = (v - model.u(lo)) / (model.u(hi) - model.u(lo))
    return min(1.0, max(0.0, p))


def check_understanding(
    model: CcrModel,
    action_ids: Sequence[str],
    menu: Sequence[Lottery],
    *,
    cap: int = REALIZATION_CAP,
    strict_margin: float = STRICT_MARGIN,
    tol: float = CONCLUSION_TOL,
    value_fn: ValueFn | None = None,
) -> AxiomReport:
    """Dominance over synchronized realizations forces preference.

    A realization is synchronous for the candidate set when some true
    state generates its components on every candidate action; the premise
    quantifies over those realizations only.
    """
    vf = _valuer(model, value_fn)
    candidate = sorted(set(action_ids))
    for aid in candidate:
        model.action(aid)  # raises on undeclared ids
    actions = model.action_table
    state = {"checked": 0}
    for i, p in enumerate(menu):
        for j, q in enumerate(menu):
            if i == j:
                continue
            relevant = sorted(set(p.action_ids()) | set(q.action_ids()))
            inside = [aid for aid in candidate if aid in set(relevant)]
            patterns = {
                tuple(actions[aid].payoffs[s] for aid in inside)
                for s in range(model.space.n_states)
            }
            realizations = (
                x
                for x in plausible_realizations(p, q, actions, cap=cap)
                if tuple(x[aid] for aid in inside) in patterns
            )
            weak, strict, min_gap = _premise_over_realizations(
                p, q, model, realizations, strict_margin
            )
            if not weak:
                continue
            witness = _conclude(
                state,
                p,
                q,
                vf(p),
                vf(q),
                strict,
                tol,
                {"pair": (i, j), "set": candidate, "min_induced_gap": min_gap},
            )
            if witness:
                return _report("understanding", state, witness)
    return _report("understanding", state, None)
