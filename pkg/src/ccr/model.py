"""States, actions, profiles, lotteries, and utility indexes.

Every type here is an immutable value object: construction validates the
invariants once, and all operations are pure functions, so instances are
safe to share across threads.

Conventions used throughout the package:

* outcomes and probabilities are double-precision floats;
* probability vectors must sum to one within ``PROB_TOL`` (1e-12);
* a profile is a multiset of action ids in canonical (sorted) order;
* an action's range is the set of distinct payoff values it attains,
  deduplicated with exact float equality.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DomainError, ResourceCapError, ValidationError

PROB_TOL = 1e-12

#: default cap on the number of plausible realizations enumerated
REALIZATION_CAP = 10**6


@dataclass(frozen=True)
class StateSpace:
    """A finite state space with its marginal probability measure."""

    labels: tuple[str, ...]
    mu: tuple[float, ...]

    def __init__(self, labels: Iterable[str], mu: Iterable[float]):
        object.__setattr__(self, "labels", tuple(str(s) for s in labels))
        object.__setattr__(self, "mu", tuple(float(p) for p in mu))
        if len(self.labels) < 1:
            raise ValidationError("state space must contain at least one state")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("state labels must be distinct")
        if len(self.mu) != len(self.labels):
            raise ValidationError(
                f"mu has {len(self.mu)} entries for {len(self.labels)} states"
            )
        if any(p < 0.0 or not math.isfinite(p) for p in self.mu):
            raise ValidationError("mu entries must be finite and nonnegative")
        total = math.fsum(self.mu)
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(f"mu sum must be 1 within {PROB_TOL} (got {total!r})")

    @property
    def n_states(self) -> int:
        return len(self.labels)

    def mu_array(self) -> np.ndarray:
        out = np.array(self.mu, dtype=float)
        out.setflags(write=False)
        return out


@dataclass(frozen=True)
class Action:
    """A state-contingent payoff with an understanding-class assignment."""

    id: str
    payoffs: tuple[float, ...]
    class_id: str

    def __init__(self, id: str, payoffs: Iterable[float], class_id: str):
        object.__setattr__(self, "id", str(id))
        object.__setattr__(self, "payoffs", tuple(float(v) for v in payoffs))
        object.__setattr__(self, "class_id", str(class_id))
        if not self.payoffs:
            raise ValidationError(f"action {self.id!r} has no payoffs")
        if any(not math.isfinite(v) for v in self.payoffs):
            raise ValidationError(f"action {self.id!r} has non-finite payoffs")

    def range_values(self) -> tuple[float, ...]:
        """Distinct attainable payoffs, ascending (exact float dedup)."""
        return tuple(sorted(set(self.payoffs)))

    def payoff_array(self) -> np.ndarray:
        out = np.array(self.payoffs, dtype=float)
        out.setflags(write=False)
        return out


@dataclass(frozen=True)
class Profile:
    """A multiset of action ids, canonicalized by sorting.

    Two profiles holding the same actions in any order compare equal.
    """

    action_ids: tuple[str, ...]

    def __init__(self, action_ids: Iterable[str]):
        ids = tuple(sorted(str(a) for a in action_ids))
        if not ids:
            raise ValidationError("a profile must contain at least one action")
        object.__setattr__(self, "action_ids", ids)

    @staticmethod
    def of(*action_ids: str) -> "Profile":
        return Profile(action_ids)

    def __len__(self) -> int:
        return len(self.action_ids)

    def __str__(self) -> str:
        return "<" + ",".join(self.action_ids) + ">"


def _canonical_support(
    pairs: Iterable[tuple[Profile, float]],
) -> tuple[tuple[Profile, float], ...]:
    merged: dict[tuple[str, ...], float] = {}
    for profile, prob in pairs:
        p = float(prob)
        if not math.isfinite(p):
            raise ValidationError("lottery probabilities must be finite")
        if p < 0.0:
            raise ValidationError(f"negative probability {p!r} for profile {profile}")
        key = profile.action_ids
        merged[key] = merged.get(key, 0.0) + p
    support = tuple(
        (Profile(key), prob) for key, prob in sorted(merged.items()) if prob > 0.0
    )
    if not support:
        raise ValidationError("lottery support is empty")
    total = math.fsum(prob for _, prob in support)
    if abs(total - 1.0) > PROB_TOL:
        raise ValidationError(
            f"lottery probabilities must sum to 1 within {PROB_TOL} (got {total!r})"
        )
    return support


@dataclass(frozen=True)
class Lottery:
    """A finite-support probability distribution over profiles.

    Construction merges duplicate profiles, drops zero-mass entries, and
    sorts the support, so equal distributions compare equal.
    """

    support: tuple[tuple[Profile, float], ...]

    def __init__(self, support: Iterable[tuple[Profile, float]]):
        object.__setattr__(self, "support", _canonical_support(support))

    @staticmethod
    def sure(profile: Profile) -> "Lottery":
        """The degenerate lottery assigning probability one to ``profile``."""
        return Lottery([(profile, 1.0)])

    def probability(self, profile: Profile) -> float:
        for prof, prob in self.support:
            if prof == profile:
                return prob
        return 0.0

    def action_ids(self) -> tuple[str, ...]:
        """Sorted distinct ids of all actions referenced with positive mass."""
        ids: set[str] = set()
        for profile, _ in self.support:
            ids.update(profile.action_ids)
        return tuple(sorted(ids))

    def is_action_lottery(self) -> bool:
        """True when every supported profile holds a single action."""
        return all(len(profile) == 1 for profile, _ in self.support)

    def __str__(self) -> str:
        parts = [f"{prob:g}:{profile}" for profile, prob in self.support]
        return "{" + ", ".join(parts) + "}"


def mix(p: Lottery, q: Lottery, alpha: float) -> Lottery:
    """The compound lottery ``alpha * p + (1 - alpha) * q``."""
    a = float(alpha)
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"mixture weight must lie in [0, 1] (got {a!r})")
    pairs = [(profile, a * prob) for profile, prob in p.support]
    pairs += [(profile, (1.0 - a) * prob) for profile, prob in q.support]
    return Lottery(pairs)


@dataclass(frozen=True)
class OutcomeLottery:
    """A finite-support distribution over sure outcomes.

    This is what a lottery over profiles collapses to once a realization
    fixes the outcome of every action; support outcomes are distinct
    (merged with exact float equality) and sorted ascending.
    """

    support: tuple[tuple[float, float], ...]

    def __init__(self, support: Iterable[tuple[float, float]]):
        merged: dict[float, float] = {}
        for outcome, prob in support:
            x = float(outcome)
            pr = float(prob)
            if not math.isfinite(x):
                raise ValidationError("outcomes must be finite")
            if pr < 0.0:
                raise ValidationError(f"negative probability {pr!r}")
            merged[x] = merged.get(x, 0.0) + pr
        canon = tuple((x, pr) for x, pr in sorted(merged.items()) if pr > 0.0)
        if not canon:
            raise ValidationError("outcome lottery support is empty")
        total = math.fsum(pr for _, pr in canon)
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(
                f"outcome probabilities must sum to 1 within {PROB_TOL} (got {total!r})"
            )
        object.__setattr__(self, "support", canon)

    def expected_utility(self, u: "UtilityIndex") -> float:
        return math.fsum(prob * u(outcome) for outcome, prob in self.support)

    def outcomes(self) -> tuple[float, ...]:
        return tuple(x for x, _ in self.support)


#: a plausible realization: one attained outcome per referenced action
Realization = Mapping[str, float]


def realization_count(
    lotteries: Sequence[Lottery], actions: Mapping[str, Action]
) -> int:
    """Number of plausible realizations of the given lotteries."""
    count = 1
    for aid in _referenced_ids(lotteries):
        count *= len(_resolve(actions, aid).range_values())
    return count


def plausible_realizations(
    p: Lottery,
    q: Lottery | None,
    actions: Mapping[str, Action],
    *,
    cap: int = REALIZATION_CAP,
) -> Iterator[dict[str, float]]:
    """Enumerate the product of the ranges of every referenced action.

    The full count is checked against ``cap`` before anything is yielded.
    Enumeration order is deterministic: actions sorted by id, each range
    ascending, with the last action varying fastest.
    """
    lots = [p] if q is None else [p, q]
    ids = _referenced_ids(lots)
    ranges = [_resolve(actions, aid).range_values() for aid in ids]
    count = 1
    for r in ranges:
        count *= len(r)
    if count > cap:
        raise ResourceCapError(
            f"{count} plausible realizations exceed the cap of {cap}",
            count=count,
            cap=cap,
        )
    return (dict(zip(ids, combo)) for combo in itertools.product(*ranges))


def induced_lottery(p: Lottery, realization: Realization) -> OutcomeLottery:
    """Collapse ``p`` under a realization fixing each action's outcome.

    Each profile is replaced by the sure outcome equal to the sum of its
    actions' realized values (summed in canonical id order), and masses
    on coinciding sums merge.
    """
    pairs = []
    for profile, prob in p.support:
        total = 0.0
        for aid in profile.action_ids:
            if aid not in realization:
                raise DomainError(f"realization has no value for action {aid!r}")
            total += realization[aid]
        pairs.append((total, prob))
    return OutcomeLottery(pairs)


def _referenced_ids(lotteries: Sequence[Lottery]) -> tuple[str, ...]:
    ids: set[str] = set()
    for lot in lotteries:
        ids.update(lot.action_ids())
    return tuple(sorted(ids))


def _resolve(actions: Mapping[str, Action], aid: str) -> Action:
    try:
        return actions[aid]
    except KeyError:
        raise DomainError(f"unknown action {aid!r}") from None


_FAMILIES = ("linear", "cara", "crra", "log", "piecewise_linear")


@dataclass(frozen=True)
class UtilityIndex:
    """A strictly increasing, continuous map from outcomes to utility.

    Families:

    ``linear``
        u(x) = x.
    ``cara``
        u(x) = (1 - exp(-alpha x)) / alpha, alpha != 0.  Concave for
        alpha > 0.
    ``crra``
        u(x) = ((x + shift)^(1-gamma) - 1) / (1 - gamma) on x + shift > 0,
        gamma > 0, gamma != 1.
    ``log``
        u(x) = ln(x + shift) on x + shift > 0.
    ``piecewise_linear``
        linear interpolation through knots strictly increasing in both
        coordinates, extended beyond the outer knots with the end-segment
        slopes (so the index stays strictly increasing on all of R).
    """

    family: str
    alpha: float = 0.0
    gamma: float = 0.0
    shift: float = 0.0
    knots: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValidationError(f"unknown utility family {self.family!r}")
        if self.family == "cara" and abs(self.alpha) < 1e-12:
            raise ValidationError("cara requires alpha != 0")
        if self.family == "crra":
            if self.gamma <= 0.0 or abs(self.gamma - 1.0) < 1e-12:
                raise ValidationError("crra requires gamma > 0, gamma != 1 (use log)")
        if self.family == "piecewise_linear":
            k = self.knots
            if len(k) < 2:
                raise ValidationError("piecewise_linear requires at least two knots")
            xs = [x for x, _ in k]
            vs = [v for _, v in k]
            if any(b <= a for a, b in zip(xs, xs[1:])) or any(
                b <= a for a, b in zip(vs, vs[1:])
            ):
                raise ValidationError(
                    "piecewise_linear knots must be strictly increasing in both coordinates"
                )

    # -- constructors -------------------------------------------------
    @staticmethod
    def linear() -> "UtilityIndex":
        return UtilityIndex("linear")

    @staticmethod
    def cara(alpha: float) -> "UtilityIndex":
        return UtilityIndex("cara", alpha=float(alpha))

    @staticmethod
    def crra(gamma: float, shift: float = 0.0) -> "UtilityIndex":
        return UtilityIndex("crra", gamma=float(gamma), shift=float(shift))

    @staticmethod
    def log(shift: float = 0.0) -> "UtilityIndex":
        return UtilityIndex("log", shift=float(shift))

    @staticmethod
    def piecewise(knots: Iterable[tuple[float, float]]) -> "UtilityIndex":
        return UtilityIndex(
            "piecewise_linear",
            knots=tuple((float(x), float(v)) for x, v in knots),
        )

    # -- evaluation ----------------------------------------------------
    @property
    def domain_floor(self) -> float | None:
        """Open lower bound on admissible outcomes, if any."""
        if self.family in ("crra", "log"):
            return -self.shift
        return None

    def _check_domain(self, x: np.ndarray) -> None:
        floor = self.domain_floor
        if floor is not None and np.any(x <= floor):
            raise DomainError(
                f"outcome out of domain for {self.family} index (requires x > {floor})"
            )

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        self._check_domain(arr)
        if self.family == "linear":
            out = arr.copy()
        elif self.family == "cara":
            out = (1.0 - np.exp(-self.alpha * arr)) / self.alpha
        elif self.family == "log":
            out = np.log(arr + self.shift)
        elif self.family == "crra":
            out = ((arr + self.shift) ** (1.0 - self.gamma) - 1.0) / (1.0 - self.gamma)
        else:
            out = self._piecewise_value(arr)
        if np.ndim(x) == 0:
            return float(out)
        return out

    def _knot_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        kx = np.array([x for x, _ in self.knots])
        kv = np.array([v for _, v in self.knots])
        return kx, kv

    def _piecewise_value(self, arr: np.ndarray) -> np.ndarray:
        kx, kv = self._knot_arrays()
        out = np.interp(arr, kx, kv)
        lo_slope = (kv[1] - kv[0]) / (kx[1] - kx[0])
        hi_slope = (kv[-1] - kv[-2]) / (kx[-1] - kx[-2])
        out = np.where(arr < kx[0], kv[0] + lo_slope * (arr - kx[0]), out)
        out = np.where(arr > kx[-1], kv[-1] + hi_slope * (arr - kx[-1]), out)
        return out

    def inverse(self, v):
        """The outcome with utility ``v``; DomainError if v is out of range."""
        arr = np.asarray(v, dtype=float)
        if self.family == "linear":
            out = arr.copy()
        elif self.family == "cara":
            inner = 1.0 - self.alpha * arr
            if np.any(inner <= 0.0):
                raise DomainError("utility value out of range for cara index")
            out = -np.log(inner) / self.alpha
        elif self.family == "log":
            out = np.exp(arr) - self.shift
        elif self.family == "crra":
            inner = (1.0 - self.gamma) * arr + 1.0
            if np.any(inner <= 0.0):
                raise DomainError("utility value out of range for crra index")
            out = inner ** (1.0 / (1.0 - self.gamma)) - self.shift
        else:
            kx, kv = self._knot_arrays()
            out = np.interp(arr, kv, kx)
            lo_slope = (kx[1] - kx[0]) / (kv[1] - kv[0])
            hi_slope = (kx[-1] - kx[-2]) / (kv[-1] - kv[-2])
            out = np.where(arr < kv[0], kx[0] + lo_slope * (arr - kv[0]), out)
            out = np.where(arr > kv[-1], kx[-1] + hi_slope * (arr - kv[-1]), out)
        if np.ndim(v) == 0:
            return float(out)
        return out

    # -- calculus (smooth families only) -------------------------------
    def derivative(self, x):
        arr = np.asarray(x, dtype=float)
        self._check_domain(arr)
        if self.family == "linear":
            out = np.ones_like(arr)
        elif self.family == "cara":
            out = np.exp(-self.alpha * arr)
        elif self.family == "log":
            out = 1.0 / (arr + self.shift)
        elif self.family == "crra":
            out = (arr + self.shift) ** (-self.gamma)
        else:
            raise DomainError("piecewise_linear index is not differentiable")
        if np.ndim(x) == 0:
            return float(out)
        return out

    def second_derivative(self, x):
        arr = np.asarray(x, dtype=float)
        self._check_domain(arr)
        if self.family == "linear":
            out = np.zeros_like(arr)
        elif self.family == "cara":
            out = -self.alpha * np.exp(-self.alpha * arr)
        elif self.family == "log":
            out = -1.0 / (arr + self.shift) ** 2
        elif self.family == "crra":
            out = -self.gamma * (arr + self.shift) ** (-self.gamma - 1.0)
        else:
            raise DomainError("piecewise_linear index is not differentiable")
        if np.ndim(x) == 0:
            return float(out)
        return out

    def is_concave_on(self, lo: float, hi: float, samples: int = 65) -> bool:
        """Midpoint concavity test on a grid spanning [lo, hi]."""
        if hi < lo:
            lo, hi = hi, lo
        floor = self.domain_floor
        if floor is not None:
            lo = max(lo, floor + 1e-9 * max(1.0, abs(floor)))
            if hi <= lo:
                return True
        grid = np.linspace(lo, hi, samples)
        vals = self(grid)
        a = vals[:, None]
        b = vals[None, :]
        xs = grid[:, None]
        ys = grid[None, :]
        mids = self((xs + ys) / 2.0)
        return bool(np.all(mids >= (a + b) / 2.0 - 1e-12))
