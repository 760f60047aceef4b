"""Couplings on a product state space and convex sets of them.

A coupling is a joint probability table over one copy of the state space
per understanding class, and a prior set is a convex set of couplings
whose one-class marginals all equal the marginal measure.  Minimizing a
linear functional over a prior set is the computational heart of the
worst-case valuation: singletons reduce to a dot product, explicit hulls
to a scan of their generators, and the Frechet class and its polytope
refinements to a deterministic simplex solve.

``enumerate_vertices`` provides an independent brute-force route to the
same minimum (exhaustive basis enumeration); it exists so the simplex
path can be cross-checked and must not share code with it beyond the
constraint-matrix builder.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from . import simplex
from .errors import DomainError, ResourceCapError, ValidationError
from .model import StateSpace

# coupling mass entries may undershoot zero by at most this much before
# the drift is considered a solver bug rather than float noise
MASS_DRIFT_TOL = 1e-12
TOTAL_DRIFT_TOL = 1e-9
MEMBER_TOL = 1e-9
VERTEX_DEDUP_TOL = 1e-8


@dataclass(frozen=True)
class JointIndex:
    """Indexing of the product of per-class copies of the state space.

    A joint state is an m-tuple of state indices, linearized
    lexicographically with the last class varying fastest (C order).
    """

    classes: tuple[str, ...]
    n_states: int

    def __init__(self, classes: Iterable[str], n_states: int):
        object.__setattr__(self, "classes", tuple(str(c) for c in classes))
        object.__setattr__(self, "n_states", int(n_states))
        if len(self.classes) < 1:
            raise ValidationError("joint index needs at least one class")
        if len(set(self.classes)) != len(self.classes):
            raise ValidationError("class ids must be distinct")
        if self.n_states < 1:
            raise ValidationError("joint index needs at least one state")

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def size(self) -> int:
        return self.n_states**self.n_classes

    def class_position(self, class_id: str) -> int:
        try:
            return self.classes.index(class_id)
        except ValueError:
            raise DomainError(f"unknown class {class_id!r}") from None

    def coordinates(self) -> np.ndarray:
        """Array of shape (n_classes, size): state index per class and cell."""
        coords = np.indices((self.n_states,) * self.n_classes)
        return coords.reshape(self.n_classes, self.size)

    def ravel(self, joint_state: Sequence[int]) -> int:
        if len(joint_state) != self.n_classes:
            raise DomainError("joint state has wrong arity")
        idx = 0
        for s in joint_state:
            if not 0 <= int(s) < self.n_states:
                raise DomainError(f"state index {s} out of range")
            idx = idx * self.n_states + int(s)
        return idx

    def unravel(self, cell: int) -> tuple[int, ...]:
        if not 0 <= cell < self.size:
            raise DomainError(f"cell {cell} out of range")
        out = []
        for _ in range(self.n_classes):
            out.append(cell % self.n_states)
            cell //= self.n_states
        return tuple(reversed(out))

    def cell_label(self, cell: int, space: StateSpace) -> str:
        return "(" + ",".join(space.labels[s] for s in self.unravel(cell)) + ")"


@dataclass(frozen=True, eq=False)
class Coupling:
    """A probability table over the joint state space.

    Small negative float drift (>= -1e-12) is clamped to zero and the
    table renormalized when the total is within 1e-9 of one; anything
    worse raises, since silently repairing it would mask solver bugs.
    """

    index: JointIndex
    mass: np.ndarray

    def __init__(self, index: JointIndex, mass):
        arr = np.asarray(mass, dtype=float).reshape(-1).copy()
        if arr.shape != (index.size,):
            raise ValidationError(
                f"coupling needs {index.size} masses (got {arr.shape[0]})"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError("coupling masses must be finite")
        low = arr.min()
        if low < -MASS_DRIFT_TOL:
            raise ValidationError(f"coupling has negative mass {low!r}")
        np.clip(arr, 0.0, None, out=arr)
        total = float(arr.sum())
        if abs(total - 1.0) > TOTAL_DRIFT_TOL:
            raise ValidationError(
                f"coupling mass must total 1 within {TOTAL_DRIFT_TOL} (got {total!r})"
            )
        arr /= total
        arr.setflags(write=False)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "mass", arr)

    def as_table(self) -> np.ndarray:
        return self.mass.reshape((self.index.n_states,) * self.index.n_classes)

    def class_marginal(self, position: int) -> np.ndarray:
        axes = tuple(j for j in range(self.index.n_classes) if j != position)
        return self.as_table().sum(axis=axes) if axes else self.as_table().copy()

    def marginal_gap(self, space: StateSpace) -> float:
        """Largest absolute deviation of any one-class marginal from mu."""
        mu = space.mu_array()
        return max(
            float(np.max(np.abs(self.class_marginal(j) - mu)))
            for j in range(self.index.n_classes)
        )


@dataclass(frozen=True, eq=False)
class Singleton:
    """A prior set holding exactly one coupling."""

    coupling: Coupling

    @property
    def index(self) -> JointIndex:
        return self.coupling.index


@dataclass(frozen=True, eq=False)
class FrechetClass:
    """All couplings whose every one-class marginal equals mu."""

    index: JointIndex
    space: StateSpace

    def __post_init__(self):
        if self.space.n_states != self.index.n_states:
            raise ValidationError("state space size does not match joint index")


@dataclass(frozen=True, eq=False)
class LinearConstraint:
    """A user row ``coeffs @ mass  sense  rhs`` over joint-state masses."""

    coeffs: np.ndarray
    sense: str
    rhs: float

    def __init__(self, coeffs, sense: str, rhs: float):
        arr = np.asarray(coeffs, dtype=float).reshape(-1).copy()
        arr.setflags(write=False)
        if sense not in ("<=", "=", ">="):
            raise ValidationError(f"constraint sense must be <=, = or >= (got {sense!r})")
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "sense", sense)
        object.__setattr__(self, "rhs", float(rhs))

    def residual(self, mass: np.ndarray) -> float:
        """Violation amount (0 when satisfied exactly)."""
        lhs = float(self.coeffs @ mass)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass(frozen=True, eq=False)
class Polytope:
    """The Frechet class cut down by additional linear constraints."""

    index: JointIndex
    space: StateSpace
    constraints: tuple[LinearConstraint, ...]

    def __init__(self, index: JointIndex, space: StateSpace, constraints):
        rows = tuple(constraints)
        for row in rows:
            if row.coeffs.shape != (index.size,):
                raise ValidationError("constraint row has wrong length")
        if space.n_states != index.n_states:
            raise ValidationError("state space size does not match joint index")
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "constraints", rows)


@dataclass(frozen=True, eq=False)
class Hull:
    """The convex hull of an explicit finite list of couplings."""

    couplings: tuple[Coupling, ...]

    def __init__(self, couplings: Iterable[Coupling]):
        items = tuple(couplings)
        if not items:
            raise ValidationError("hull prior set needs at least one coupling")
        index = items[0].index
        for cpl in items:
            if cpl.index != index:
                raise ValidationError("hull couplings share one joint index")
        object.__setattr__(self, "couplings", items)

    @property
    def index(self) -> JointIndex:
        return self.couplings[0].index


PriorSet = Union[Singleton, FrechetClass, Polytope, Hull]


def diagonal_pushforward(space: StateSpace, index: JointIndex) -> Coupling:
    """The coupling putting mass mu(w) on the perfectly synchronized cell."""
    mass = np.zeros(index.size)
    for s, p in enumerate(space.mu):
        mass[index.ravel((s,) * index.n_classes)] = p
    return Coupling(index, mass)


def product_measure(space: StateSpace, index: JointIndex) -> Coupling:
    """The independent coupling: cell mass is the product of its mu terms."""
    mu = space.mu_array()
    table = mu
    for _ in range(index.n_classes - 1):
        table = np.multiply.outer(table, mu)
    return Coupling(index, table.reshape(-1))


@dataclass(frozen=True, eq=False)
class MinResult:
    value: float
    minimizer: Coupling
    iterations: int = 0


def min_over_prior_set(values, pi_set: PriorSet) -> MinResult:
    """Minimize ``sum(values * mass)`` over the prior set.

    ``values`` is one utility value per joint state in the prior set's
    index.  Returns the attained minimum together with a minimizer that
    is feasible within tolerance.  Ties among hull generators resolve to
    the first listed; ties among polytope vertices resolve to the vertex
    the deterministic pivot order reaches.
    """
    vals = np.asarray(values, dtype=float).reshape(-1)
    index = _prior_index(pi_set)
    if vals.shape != (index.size,):
        raise DomainError(
            f"act has {vals.shape[0]} entries for a joint space of size {index.size}"
        )
    if not np.all(np.isfinite(vals)):
        raise DomainError("act values must be finite")

    if isinstance(pi_set, Singleton):
        return MinResult(float(vals @ pi_set.coupling.mass), pi_set.coupling)
    if isinstance(pi_set, Hull):
        dots = [float(vals @ cpl.mass) for cpl in pi_set.couplings]
        best = min(range(len(dots)), key=lambda i: (dots[i], i))
        return MinResult(dots[best], pi_set.couplings[best])

    A, b, labels = standard_form(pi_set)
    n_mass = index.size
    cost = np.zeros(A.shape[1])
    cost[:n_mass] = vals
    sol = simplex.solve_min(cost, A, b, row_labels=labels)
    coupling = Coupling(index, sol.x[:n_mass])
    return MinResult(sol.value, coupling, iterations=sol.iterations)


def is_member(pi: Coupling, pi_set: PriorSet, tol: float = MEMBER_TOL) -> bool:
    """Whether the coupling satisfies every defining constraint of the set."""
    index = _prior_index(pi_set)
    if pi.index != index:
        raise DomainError("coupling and prior set use different joint indexes")
    if isinstance(pi_set, Singleton):
        return bool(np.max(np.abs(pi.mass - pi_set.coupling.mass)) <= tol)
    if isinstance(pi_set, Hull):
        return _in_hull(pi, pi_set, tol)
    if pi.marginal_gap(pi_set.space) > tol:
        return False
    if isinstance(pi_set, Polytope):
        return all(row.residual(pi.mass) <= tol for row in pi_set.constraints)
    return True


def _in_hull(pi: Coupling, hull: Hull, tol: float) -> bool:
    # weights lam >= 0 with sum 1 and sum(lam_i * c_i) = pi, as an LP
    # feasibility problem solved by phase 1
    gens = np.stack([cpl.mass for cpl in hull.couplings], axis=1)
    A = np.vstack([gens, np.ones((1, gens.shape[1]))])
    b = np.concatenate([pi.mass, [1.0]])
    try:
        x = simplex.feasible_point(A, b)
    except Exception:
        return False
    residual = float(np.max(np.abs(A @ x - b)))
    return residual <= tol


def standard_form(
    pi_set: FrechetClass | Polytope,
) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    """Equality system ``A x = b, x >= 0`` describing the prior set.

    Columns are the joint masses followed by one slack per inequality
    row.  Marginal rows made redundant by the others (the last state of
    every class after the first) are dropped analytically.
    """
    index = pi_set.index
    space = pi_set.space
    coords = index.coordinates()
    n = index.size
    rows = []
    rhs = []
    labels = []
    for j, class_id in enumerate(index.classes):
        last = index.n_states - 1 if j > 0 else index.n_states
        for s in range(last):
            rows.append((coords[j] == s).astype(float))
            rhs.append(space.mu[s])
            labels.append(f"marginal[{class_id}={space.labels[s]}]")

    user_rows = pi_set.constraints if isinstance(pi_set, Polytope) else ()
    n_slack = sum(1 for row in user_rows if row.sense != "=")
    A = np.zeros((len(rows) + len(user_rows), n + n_slack))
    b = np.zeros(len(rows) + len(user_rows))
    for i, (row, val) in enumerate(zip(rows, rhs)):
        A[i, :n] = row
        b[i] = val
    slack = n
    for k, row in enumerate(user_rows):
        i = len(rows) + k
        A[i, :n] = row.coeffs
        b[i] = row.rhs
        if row.sense == "<=":
            A[i, slack] = 1.0
            slack += 1
        elif row.sense == ">=":
            A[i, slack] = -1.0
            slack += 1
        labels.append(f"user[{k}] ({row.sense} {row.rhs:g})")
    return A, b, tuple(labels)


def validate_prior_set(pi_set: PriorSet, space: StateSpace, tol: float = MEMBER_TOL) -> None:
    """Check marginal agreement and nonemptiness; raise ValidationError."""
    index = _prior_index(pi_set)
    if index.n_states != space.n_states:
        raise ValidationError("prior set and state space disagree on K")
    if isinstance(pi_set, Singleton):
        gap = pi_set.coupling.marginal_gap(space)
        if gap > tol:
            raise ValidationError(
                f"singleton coupling violates marginal agreement by {gap:.3e}"
            )
    elif isinstance(pi_set, Hull):
        for i, cpl in enumerate(pi_set.couplings):
            gap = cpl.marginal_gap(space)
            if gap > tol:
                raise ValidationError(
                    f"hull coupling {i} violates marginal agreement by {gap:.3e}"
                )
    elif isinstance(pi_set, Polytope):
        A, b, labels = standard_form(pi_set)
        try:
            simplex.feasible_point(A, b, row_labels=labels)
        except Exception as exc:
            rows = getattr(exc, "rows", ())
            detail = f" (unsatisfiable rows: {', '.join(rows)})" if rows else ""
            raise ValidationError(f"polytope prior set is empty{detail}") from exc
    # FrechetClass always contains the product measure


def _prior_index(pi_set: PriorSet) -> JointIndex:
    return pi_set.index


# ----------------------------------------------------------------------
# brute-force vertex enumeration (verification oracle)
# ----------------------------------------------------------------------

_MAX_BASES = 5_000_000
_CHUNK = 20_000


def enumerate_vertices(
    pi_set: PriorSet, *, max_dimension: int = 64, max_bases: int = _MAX_BASES
) -> list[Coupling]:
    """All vertices of the prior set, by exhaustive basis enumeration.

    Intended as an independent oracle for ``min_over_prior_set`` at desk
    scale; raises ResourceCapError when the instance is too large.
    Singletons return their coupling; hulls return their extreme
    generators.
    """
    if isinstance(pi_set, Singleton):
        return [pi_set.coupling]
    if isinstance(pi_set, Hull):
        return _hull_extremes(pi_set)

    index = pi_set.index
    small = index.n_classes == 2 and index.n_states <= 4
    A, b, _ = standard_form(pi_set)
    m, n_cols = A.shape
    if not small and n_cols > max_dimension:
        raise ResourceCapError(
            f"LP dimension {n_cols} exceeds the vertex-enumeration cap of {max_dimension}",
            count=n_cols,
            cap=max_dimension,
        )

    rank = int(np.linalg.matrix_rank(A, tol=1e-10))
    n_bases = math.comb(n_cols, rank)
    if n_bases > max_bases:
        raise ResourceCapError(
            f"{n_bases} candidate bases exceed the cap of {max_bases}",
            count=n_bases,
            cap=max_bases,
        )
    A_indep, b_indep = _independent_rows(A, b, rank)

    n_mass = index.size
    collected: list[np.ndarray] = []
    combos = itertools.combinations(range(n_cols), rank)
    while True:
        chunk = list(itertools.islice(combos, _CHUNK))
        if not chunk:
            break
        idx = np.array(chunk)  # (nb, rank)
        mats = A_indep[:, idx].transpose(1, 0, 2)  # (nb, rank, rank)
        ok = np.abs(np.linalg.det(mats)) > 1e-10
        if not np.any(ok):
            continue
        rhs = np.ascontiguousarray(
            np.broadcast_to(b_indep.reshape(1, rank, 1), (int(ok.sum()), rank, 1))
        )
        sols = np.linalg.solve(mats[ok], rhs)[:, :, 0]
        feas = sols.min(axis=1) >= -MEMBER_TOL
        if not np.any(feas):
            continue
        bases = idx[ok][feas]
        xs = np.zeros((bases.shape[0], n_cols))
        xs[np.arange(bases.shape[0])[:, None], bases] = sols[feas]
        # verify against the full original system, catching any
        # ill-conditioned solves or row-reduction slips
        good = np.abs(xs @ A.T - b).max(axis=1) <= 1e-8
        if np.any(good):
            collected.append(np.clip(xs[good][:, :n_mass], 0.0, None))
    if not collected:
        return []
    candidates = np.vstack(collected)
    # cheap pre-merge of float-identical solutions, then the exact
    # pairwise merge at the documented tolerance
    _, first = np.unique(np.round(candidates, 9), axis=0, return_index=True)
    vertices: list[np.ndarray] = []
    kept = np.empty((0, n_mass))
    for i in np.sort(first):
        mass = candidates[i]
        if kept.shape[0] == 0 or np.abs(kept - mass).max(axis=1).min() > VERTEX_DEDUP_TOL:
            vertices.append(mass)
            kept = np.vstack([kept, mass[None, :]])
    return [Coupling(index, mass) for mass in vertices]


def _independent_rows(A: np.ndarray, b: np.ndarray, rank: int) -> tuple[np.ndarray, np.ndarray]:
    """A maximal independent subset of rows, by pivoted elimination."""
    work = A.copy()
    chosen: list[int] = []
    remaining = list(range(A.shape[0]))
    for _ in range(rank):
        norms = np.linalg.norm(work[remaining], axis=1)
        best = int(np.argmax(norms))
        if norms[best] <= 1e-12:
            break
        row_idx = remaining.pop(best)
        chosen.append(row_idx)
        pivot_row = work[row_idx] / np.linalg.norm(work[row_idx])
        for i in remaining:
            work[i] -= (work[i] @ pivot_row) * pivot_row
    chosen.sort()
    return A[chosen], b[chosen]


def _hull_extremes(hull: Hull) -> list[Coupling]:
    out: list[Coupling] = []
    for i, cpl in enumerate(hull.couplings):
        others = [c for j, c in enumerate(hull.couplings) if j != i]
        if not others:
            out.append(cpl)
            continue
        if not _in_hull(cpl, Hull(others), MEMBER_TOL):
            out.append(cpl)
    if not out:  # all generators coincide
        out.append(hull.couplings[0])
    return out
