"""Two-state exchange economy with a misunderstood third asset.

The trader holds Arrow securities ``alpha`` (pays in state A) and
``beta`` (pays in state B), a safe asset as numeraire, and can trade
``beta_prime`` — an asset that also pays in state B but whose connection
to the endowed assets she may not perceive.  Her portfolio utility is
the worst case over an interval ``[r_lo, r_hi]`` of off-diagonal
probability mass between the coordinate carrying the endowed assets and
the coordinate carrying ``beta_prime``:

    V(x, y, z, c) = min_r  mu u(x+c) + (1-mu) u(y+z+c) + r K(x, y, z, c)

with the cross-term

    K(x, y, z, c) = u(x+z+c) + u(y+c) - u(x+c) - u(y+z+c).

Since the objective is affine in r, the minimum sits at ``r_lo`` when
K >= 0 and at ``r_hi`` otherwise.  At z = 0 the value function has a
kink; the z-component of its supergradient sweeps an interval as r does,
which is what produces an interval of no-trade prices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DemandError, DomainError, ValidationError
from .model import UtilityIndex

_SMOOTH_FAMILIES = ("cara", "crra", "log")
_OPT_TOL = 1e-8


@dataclass(frozen=True)
class Economy:
    """Primitives: state-A probability, index, r-interval, endowment."""

    mu: float
    u: UtilityIndex
    r_lo: float
    r_hi: float
    endow_alpha: float
    endow_beta: float
    endow_safe: float

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise ValidationError("mu must lie strictly inside (0, 1)")
        if self.u.family not in _SMOOTH_FAMILIES:
            raise ValidationError(
                "economy requires a twice-differentiable index (cara, crra or log)"
            )
        if self.u.family == "cara" and self.u.alpha <= 0.0:
            raise ValidationError("cara economy requires alpha > 0 (strict concavity)")
        cap = min(self.mu, 1.0 - self.mu)
        if not 0.0 <= self.r_lo <= self.r_hi <= cap + 1e-12:
            raise ValidationError(
                f"need 0 <= r_lo <= r_hi <= min(mu, 1-mu) = {cap:g}"
            )
        if self.endow_alpha + self.endow_safe <= 0.0 or self.endow_beta + self.endow_safe <= 0.0:
            raise ValidationError("endowment must leave positive consumption in both states")

    @property
    def endowment(self) -> "PortfolioPoint":
        return PortfolioPoint(self.endow_alpha, self.endow_beta, 0.0, self.endow_safe)


@dataclass(frozen=True)
class PortfolioPoint:
    """Holdings of alpha, beta, beta_prime, and the safe asset."""

    x: float
    y: float
    z: float
    c: float

    def consumption_args(self) -> tuple[float, float, float, float]:
        """The four consumption levels the index is evaluated at."""
        return (
            self.x + self.c,
            self.y + self.z + self.c,
            self.x + self.z + self.c,
            self.y + self.c,
        )


class Prices(NamedTuple):
    alpha: float
    beta: float
    beta_prime: float


class EquilibriumPrices(NamedTuple):
    alpha: float
    beta: float
    beta_prime_lo: float
    beta_prime_hi: float

    @property
    def beta_prime_width(self) -> float:
        return self.beta_prime_hi - self.beta_prime_lo


def _check_point(pt: PortfolioPoint, econ: Economy) -> None:
    floor = econ.u.domain_floor
    limit = floor if floor is not None else 0.0
    for arg in pt.consumption_args():
        if arg <= limit:
            raise DomainError(
                f"consumption argument {arg!r} is not admissible (must exceed {limit!r})"
            )


def cross_term(pt: PortfolioPoint, econ: Economy) -> float:
    """u(x+z+c) + u(y+c) - u(x+c) - u(y+z+c)."""
    _check_point(pt, econ)
    e1, e2, e3, e4 = pt.consumption_args()
    u = econ.u
    return u(e3) + u(e4) - u(e1) - u(e2)


def minimizing_r(pt: PortfolioPoint, econ: Economy) -> float:
    """The off-diagonal mass attaining the worst case (an endpoint)."""
    return econ.r_lo if cross_term(pt, econ) >= 0.0 else econ.r_hi


def portfolio_value(pt: PortfolioPoint, econ: Economy) -> float:
    """Worst-case utility of the portfolio over the r-interval."""
    _check_point(pt, econ)
    e1, e2, _, _ = pt.consumption_args()
    u = econ.u
    base = econ.mu * u(e1) + (1.0 - econ.mu) * u(e2)
    k = cross_term(pt, econ)
    r = econ.r_lo if k >= 0.0 else econ.r_hi
    return base + r * k


def _gradient_at(pt: PortfolioPoint, econ: Economy, r: float) -> np.ndarray:
    e1, e2, e3, e4 = pt.consumption_args()
    du = econ.u.derivative
    t1, t2, t3, t4 = du(e1), du(e2), du(e3), du(e4)
    mu = econ.mu
    gx = mu * t1 + r * (t3 - t1)
    gy = (1.0 - mu) * t2 + r * (t4 - t2)
    gz = (1.0 - mu) * t2 + r * (t3 - t2)
    gc = gx + gy
    return np.array([gx, gy, gz, gc])


def portfolio_gradient(pt: PortfolioPoint, econ: Economy) -> np.ndarray:
    """Gradient of the value at a smooth point (z != 0, or x == y).

    At a kink (z == 0 with x != y and a non-degenerate r-interval) the
    third component is set-valued; use :func:`subgradient_segment` there.
    """
    _check_point(pt, econ)
    kink = (
        pt.z == 0.0
        and pt.x != pt.y
        and econ.r_hi - econ.r_lo > 0.0
    )
    if kink:
        raise DomainError("value is not differentiable at z = 0 with x != y")
    return _gradient_at(pt, econ, minimizing_r(pt, econ))


class SubgradientSegment(NamedTuple):
    """Supergradients of the value at z = 0, parametrized by r."""

    alpha: float
    beta: float
    beta_prime_lo: float
    beta_prime_hi: float
    safe: float


def subgradient_segment(x: float, y: float, c: float, econ: Economy) -> SubgradientSegment:
    """The segment of supergradient vectors at the no-trade point.

    The alpha, beta, and safe components are the ordinary partial
    derivatives; the beta_prime component sweeps an interval as r runs
    over [r_lo, r_hi] (a single point when x == y or the interval is
    degenerate).
    """
    pt = PortfolioPoint(x, y, 0.0, c)
    _check_point(pt, econ)
    du = econ.u.derivative
    ta = du(x + c)
    tb = du(y + c)
    mu = econ.mu
    ends = sorted(
        (1.0 - mu) * tb + r * (ta - tb) for r in (econ.r_lo, econ.r_hi)
    )
    return SubgradientSegment(
        alpha=mu * ta,
        beta=(1.0 - mu) * tb,
        beta_prime_lo=ends[0],
        beta_prime_hi=ends[1],
        safe=mu * ta + (1.0 - mu) * tb,
    )


def equilibrium_prices(econ: Economy) -> EquilibriumPrices:
    """Prices at which the trader consumes her endowment.

    The safe asset is numeraire; alpha and beta are priced by marginal
    utilities at the endowment, and beta_prime has a closed interval of
    market-clearing prices (degenerate when the endowed Arrow holdings
    coincide or the r-interval is a point), endpoints ascending.
    """
    seg = subgradient_segment(econ.endow_alpha, econ.endow_beta, econ.endow_safe, econ)
    return EquilibriumPrices(
        alpha=seg.alpha / seg.safe,
        beta=seg.beta / seg.safe,
        beta_prime_lo=seg.beta_prime_lo / seg.safe,
        beta_prime_hi=seg.beta_prime_hi / seg.safe,
    )


def nonparticipation_interval(
    econ: Economy, x: float, y: float, c: float
) -> tuple[float, float]:
    """Closed range of beta_prime prices at which (x, y, 0, c) is demanded."""
    seg = subgradient_segment(x, y, c, econ)
    return seg.beta_prime_lo / seg.safe, seg.beta_prime_hi / seg.safe


def optimality_residual(pt: PortfolioPoint, prices: Prices, econ: Economy) -> float:
    """Distance (in price units) from the supergradient condition.

    Zero means some admissible r makes the gradient proportional to the
    price vector; at the kink the beta_prime component may fall anywhere
    in its segment.
    """
    _check_point(pt, econ)
    k = cross_term(pt, econ)
    if abs(k) <= 1e-12:
        r_set = (econ.r_lo, econ.r_hi)
    elif k > 0.0:
        r_set = (econ.r_lo, econ.r_lo)
    else:
        r_set = (econ.r_hi, econ.r_hi)
    grads = [_gradient_at(pt, econ, r) for r in r_set]
    price_vec = np.array([prices.alpha, prices.beta, prices.beta_prime, 1.0])
    best = math.inf
    for g in grads:
        lam = g[3]
        best = min(best, float(np.max(np.abs(g / lam - price_vec))))
    # at the kink the z-component ranges over the whole segment
    if pt.z == 0.0:
        g0 = grads[0]
        lam = g0[3]
        lo = min(g[2] for g in grads) / lam
        hi = max(g[2] for g in grads) / lam
        res_xyc = max(
            abs(g0[0] / lam - prices.alpha),
            abs(g0[1] / lam - prices.beta),
        )
        gap_z = max(lo - prices.beta_prime, prices.beta_prime - hi, 0.0)
        best = min(best, max(res_xyc, gap_z))
    return best


# ----------------------------------------------------------------------
# demand
# ----------------------------------------------------------------------


def demand(prices: Prices, econ: Economy, wealth: float) -> PortfolioPoint:
    """The portfolio maximizing worst-case utility in the budget set.

    Solved from the first-order/supergradient conditions: the no-trade
    regime (z = 0) reduces to a safeguarded 1-D root search, and the two
    smooth regimes (r pinned at an endpoint with a consistent cross-term
    sign) to a damped Newton iteration in consumption coordinates.  The
    candidate with the highest worst-case value wins; the returned point
    passes the supergradient optimality test within 1e-8.

    The asset composition is reported with zero safe-asset holdings:
    when alpha and beta prices sum to one the safe split is payoff- and
    budget-irrelevant, and when they do not no optimum exists at all.
    """
    p = Prices(*(float(v) for v in prices))
    if min(p) <= 0.0:
        raise DomainError("prices must be strictly positive")
    if abs(p.alpha + p.beta - 1.0) > 1e-9:
        raise DemandError(
            "no optimum: alpha and beta replicate the numeraire, so their "
            f"prices must sum to 1 (got {p.alpha + p.beta!r})",
            box=(p.alpha, p.beta),
        )
    if wealth <= 0.0:
        raise DomainError("wealth must be positive")

    candidates: list[tuple[float, PortfolioPoint]] = []
    kink = _solve_kink(p, econ, wealth)
    if kink is not None:
        candidates.append((portfolio_value(kink, econ), kink))
    for r, need_sign in ((econ.r_lo, 1.0), (econ.r_hi, -1.0)):
        sol = _solve_smooth(p, econ, wealth, r)
        if sol is None:
            continue
        k = cross_term(sol, econ)
        if k * need_sign < -1e-10:
            continue  # branch inconsistent with its own regime
        candidates.append((portfolio_value(sol, econ), sol))
        if econ.r_hi == econ.r_lo:
            break

    feasible = [
        (val, pt)
        for val, pt in candidates
        if optimality_residual(pt, p, econ) <= _OPT_TOL
    ]
    if not feasible:
        raise DemandError(
            "no interior optimum found in the search box",
            box=_search_box(p, econ, wealth),
        )
    feasible.sort(key=lambda item: -item[0])
    return feasible[0][1]


def _domain_floor(econ: Economy) -> float:
    floor = econ.u.domain_floor
    return floor if floor is not None else 0.0


def _search_box(p: Prices, econ: Economy, wealth: float) -> tuple:
    eps = 1e-9 * wealth
    return (
        (_domain_floor(econ) + eps, wealth / p.alpha),
        (_domain_floor(econ) + eps, wealth / p.beta),
    )


def _solve_kink(p: Prices, econ: Economy, wealth: float) -> PortfolioPoint | None:
    """Optimal consumption with z pinned to 0, then price-interval test."""
    u = econ.u
    floor = _domain_floor(econ)
    eps = 1e-9 * max(1.0, wealth)
    lo = floor + eps
    hi = (wealth - p.beta * (floor + eps)) / p.alpha
    if hi <= lo:
        return None

    def phi(e1: float) -> float:
        e4 = (wealth - p.alpha * e1) / p.beta
        return econ.mu * u.derivative(e1) - (p.alpha / p.beta) * (
            1.0 - econ.mu
        ) * u.derivative(e4)

    # phi is strictly decreasing; without a sign change the optimum is
    # outside the admissible consumption box
    if not (phi(lo) >= 0.0 >= phi(hi)):
        return None
    a, b = lo, hi
    e1 = 0.5 * (a + b)
    for _ in range(200):
        val = phi(e1)
        if val > 0.0:
            a = e1
        else:
            b = e1
        # Newton step, safeguarded by the bracket
        e4 = (wealth - p.alpha * e1) / p.beta
        dphi = econ.mu * u.second_derivative(e1) + (p.alpha / p.beta) ** 2 * (
            1.0 - econ.mu
        ) * u.second_derivative(e4)
        step = e1 - val / dphi if dphi != 0.0 else 0.5 * (a + b)
        e1_next = step if a < step < b else 0.5 * (a + b)
        if abs(e1_next - e1) <= 1e-14 * max(1.0, abs(e1)):
            e1 = e1_next
            break
        e1 = e1_next
    e4 = (wealth - p.alpha * e1) / p.beta
    lo_p, hi_p = nonparticipation_interval(econ, e1, e4, 0.0)
    if not lo_p - _OPT_TOL <= p.beta_prime <= hi_p + _OPT_TOL:
        return None
    return PortfolioPoint(e1, e4, 0.0, 0.0)


def _solve_smooth(
    p: Prices, econ: Economy, wealth: float, r: float
) -> PortfolioPoint | None:
    """Damped Newton on (e1, z) with e4 eliminated by the budget."""
    u = econ.u
    mu = econ.mu
    floor = _domain_floor(econ)
    A = -p.alpha / p.beta
    B = -p.beta_prime / p.beta

    def unpack(e1: float, z: float):
        e4 = (wealth - p.alpha * e1 - p.beta_prime * z) / p.beta
        return e4, e4 + z, e1 + z  # e4, e2, e3

    def in_domain(e1: float, z: float) -> bool:
        e4, e2, e3 = unpack(e1, z)
        return min(e1, e2, e3, e4) > floor

    def objective(e1: float, z: float) -> float:
        e4, e2, e3 = unpack(e1, z)
        return (
            mu * u(e1)
            + (1.0 - mu) * u(e2)
            + r * (u(e3) + u(e4) - u(e1) - u(e2))
        )

    def grad_hess(e1: float, z: float):
        e4, e2, e3 = unpack(e1, z)
        t = [u.derivative(v) for v in (e1, e2, e3, e4)]
        s = [u.second_derivative(v) for v in (e1, e2, e3, e4)]
        g1 = mu * t[0] + (1 - mu) * t[1] * A + r * (t[2] + t[3] * A - t[0] - t[1] * A)
        g2 = (1 - mu) * t[1] * (B + 1) + r * (t[2] + t[3] * B - t[1] * (B + 1))
        h11 = (
            mu * s[0]
            + (1 - mu) * s[1] * A * A
            + r * (s[2] + s[3] * A * A - s[0] - s[1] * A * A)
        )
        h12 = (1 - mu) * s[1] * A * (B + 1) + r * (
            s[2] + s[3] * A * B - s[1] * A * (B + 1)
        )
        h22 = (1 - mu) * s[1] * (B + 1) ** 2 + r * (
            s[2] + s[3] * B * B - s[1] * (B + 1) ** 2
        )
        return np.array([g1, g2]), np.array([[h11, h12], [h12, h22]])

    # start from the riskless split, which is always interior
    e1 = wealth * mu / p.alpha * 0.5 + wealth * 0.25
    e1 = min(max(e1, floor + 0.1 * wealth), wealth / p.alpha * 0.9)
    z = 0.0
    if not in_domain(e1, z):
        e1 = 0.5 * (floor + wealth / (p.alpha + p.beta))
        if not in_domain(e1, z):
            return None

    for _ in range(120):
        g, H = grad_hess(e1, z)
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= 1e-12 * max(1.0, abs(g[0]) + abs(g[1])) or gnorm <= 1e-13:
            break
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = g / max(1.0, gnorm)
        if float(g @ step) < 0.0:  # not an ascent direction; fall back
            step = g / max(1.0, gnorm)
        base = objective(e1, z)
        scale = 1.0
        improved = False
        for _ in range(60):
            n1, nz = e1 + scale * step[0], z + scale * step[1]
            if in_domain(n1, nz) and objective(n1, nz) >= base - 1e-15:
                e1, z = n1, nz
                improved = True
                break
            scale *= 0.5
        if not improved:
            break
    g, _ = grad_hess(e1, z)
    if float(np.max(np.abs(g))) > 1e-9:
        return None
    e4, _, _ = unpack(e1, z)
    return PortfolioPoint(e1, e4, z, 0.0)


# ----------------------------------------------------------------------
# comparative-statics sweep
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    a: float
    b: float
    c_star: float
    r_lo: float
    r_hi: float
    p_alpha: float | None
    p_beta: float | None
    interval_lo: float | None
    interval_hi: float | None
    interval_width: float | None
    status: str


SWEEP_COLUMNS = (
    "a",
    "b",
    "c_star",
    "r_lo",
    "r_hi",
    "p_alpha",
    "p_beta",
    "interval_lo",
    "interval_hi",
    "interval_width",
    "status",
)


def sweep(
    mu: float,
    u: UtilityIndex,
    grid: Iterable[tuple[float, float, float, float, float]],
) -> list[SweepRow]:
    """Equilibrium prices over an (a, b, c_star, r_lo, r_hi) grid.

    Rows whose parameters fail validation (or whose prices hit a domain
    error) are recorded with an error status instead of aborting the
    sweep; row order follows the input grid.
    """
    rows = []
    for a, b, c_star, r_lo, r_hi in grid:
        try:
            econ = Economy(mu, u, r_lo, r_hi, a, b, c_star)
            eq = equilibrium_prices(econ)
            rows.append(
                SweepRow(
                    a,
                    b,
                    c_star,
                    r_lo,
                    r_hi,
                    eq.alpha,
                    eq.beta,
                    eq.beta_prime_lo,
                    eq.beta_prime_hi,
                    eq.beta_prime_width,
                    "ok",
                )
            )
        except (DomainError, ValidationError) as exc:
            rows.append(
                SweepRow(
                    a, b, c_star, r_lo, r_hi, None, None, None, None, None,
                    f"error: {exc}",
                )
            )
    return rows
