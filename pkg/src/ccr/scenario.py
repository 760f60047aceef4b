"""Scenario documents: JSON ingestion and validation.

A scenario file declares some subset of: a state space with its marginal
measure, a utility index, understanding classes, actions, a prior set,
named lotteries, an economy block, and a list of command-specific query
blocks.  Probabilities and payoffs may be written as decimal strings
(the shipped fixtures do) so golden reports stay platform-stable.

Validation is eager: every section present is parsed into its domain
object at load time, and errors name the offending field.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assets import Economy
from .errors import CcrError, ValidationError
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
from .valuation import CcrModel


@dataclass(eq=False)
class Scenario:
    raw: dict
    sha256: str
    name: str
    space: StateSpace | None = None
    model: CcrModel | None = None
    lotteries: dict[str, Lottery] = field(default_factory=dict)
    lottery_order: tuple[str, ...] = ()
    economy: Economy | None = None
    queries: tuple[dict, ...] = ()

    def require_model(self) -> CcrModel:
        if self.model is None:
            raise ValidationError(
                "scenario has no states/actions/prior_set sections for this command"
            )
        return self.model

    def require_economy(self) -> Economy:
        if self.economy is None:
            raise ValidationError("scenario has no economy section for this command")
        return self.economy


def load_scenario(path: str | Path) -> Scenario:
    text = Path(path).read_bytes()
    try:
        raw = json.loads(text.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"scenario parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_scenario(raw, sha256=hashlib.sha256(text).hexdigest())


def serialize_scenario(doc: Scenario) -> dict:
    """The canonical document (numbers keep their original spelling)."""
    return doc.raw


def parse_scenario(raw: dict, sha256: str | None = None) -> Scenario:
    if not isinstance(raw, dict):
        raise ValidationError("scenario document must be a JSON object")
    digest = sha256 or hashlib.sha256(
        json.dumps(raw, sort_keys=True).encode("utf-8")
    ).hexdigest()
    doc = Scenario(raw=raw, sha256=digest, name=str(raw.get("name", "scenario")))

    space = None
    if "states" in raw:
        space = _parse_states(raw["states"])
        doc.space = space

    if any(k in raw for k in ("actions", "prior_set", "classes", "lotteries")):
        doc.model = _parse_model(raw, space)
        doc.lotteries, doc.lottery_order = _parse_lotteries(raw, doc.model)

    if "economy" in raw:
        doc.economy = _parse_economy(raw["economy"])

    queries = raw.get("queries", [])
    if not isinstance(queries, list) or any(not isinstance(q, dict) for q in queries):
        raise ValidationError("queries: must be a list of objects")
    doc.queries = tuple(queries)
    return doc


def _num(value, path: str) -> float:
    if isinstance(value, bool) or value is None:
        raise ValidationError(f"{path}: expected a number")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{path}: expected a number (got {value!r})") from None


def _num_list(values, path: str) -> list[float]:
    if not isinstance(values, list):
        raise ValidationError(f"{path}: expected a list of numbers")
    return [_num(v, f"{path}[{i}]") for i, v in enumerate(values)]


def _parse_states(block) -> StateSpace:
    if not isinstance(block, dict):
        raise ValidationError("states: expected an object")
    labels = block.get("labels")
    if not isinstance(labels, list) or not labels:
        raise ValidationError("states.labels: expected a nonempty list")
    mu = _num_list(block.get("mu"), "states.mu")
    try:
        return StateSpace(labels, mu)
    except ValidationError as exc:
        raise ValidationError(f"states.mu: {exc}") from exc


def parse_utility(block, path: str = "utility") -> UtilityIndex:
    if not isinstance(block, dict):
        raise ValidationError(f"{path}: expected an object")
    family = block.get("family")
    try:
        if family == "linear":
            return UtilityIndex.linear()
        if family == "cara":
            return UtilityIndex.cara(_num(block.get("alpha"), f"{path}.alpha"))
        if family == "crra":
            return UtilityIndex.crra(
                _num(block.get("gamma"), f"{path}.gamma"),
                _num(block.get("shift", 0.0), f"{path}.shift"),
            )
        if family == "log":
            return UtilityIndex.log(_num(block.get("shift", 0.0), f"{path}.shift"))
        if family == "piecewise_linear":
            knots = block.get("knots")
            if not isinstance(knots, list):
                raise ValidationError(f"{path}.knots: expected a list of pairs")
            parsed = []
            for i, pair in enumerate(knots):
                if not isinstance(pair, list) or len(pair) != 2:
                    raise ValidationError(f"{path}.knots[{i}]: expected [x, u]")
                parsed.append(
                    (
                        _num(pair[0], f"{path}.knots[{i}][0]"),
                        _num(pair[1], f"{path}.knots[{i}][1]"),
                    )
                )
            return UtilityIndex.piecewise(parsed)
    except ValidationError as exc:
        if str(exc).startswith(path):
            raise
        raise ValidationError(f"{path}: {exc}") from exc
    raise ValidationError(f"{path}.family: unknown utility family {family!r}")


def _parse_model(raw: dict, space: StateSpace | None) -> CcrModel:
    if space is None:
        raise ValidationError("states: section required when actions are declared")
    if "utility" not in raw:
        raise ValidationError("utility: section required when actions are declared")
    u = parse_utility(raw["utility"])

    classes = raw.get("classes")
    if not isinstance(classes, list) or not classes:
        raise ValidationError("classes: expected a nonempty list")
    index = JointIndex([str(c) for c in classes], space.n_states)

    actions_block = raw.get("actions")
    if not isinstance(actions_block, list) or not actions_block:
        raise ValidationError("actions: expected a nonempty list")
    actions = []
    for i, entry in enumerate(actions_block):
        if not isinstance(entry, dict):
            raise ValidationError(f"actions[{i}]: expected an object")
        name = entry.get("name")
        if not name:
            raise ValidationError(f"actions[{i}].name: required")
        cls = entry.get("class")
        if cls not in index.classes:
            raise ValidationError(
                f"actions[{i}].class: {cls!r} is not a declared class"
            )
        payoffs = _num_list(entry.get("payoffs"), f"actions[{i}].payoffs")
        if len(payoffs) != space.n_states:
            raise ValidationError(
                f"actions[{i}].payoffs: expected {space.n_states} entries"
            )
        actions.append(Action(str(name), payoffs, str(cls)))

    pi_set = _parse_prior_set(raw.get("prior_set"), index, space)
    try:
        return CcrModel(space, actions, u, pi_set)
    except CcrError as exc:
        raise ValidationError(f"model: {exc}") from exc


def _parse_prior_set(block, index: JointIndex, space: StateSpace):
    if not isinstance(block, dict):
        raise ValidationError("prior_set: expected an object")
    kind = block.get("kind")
    if kind == "frechet":
        return FrechetClass(index, space)
    if kind == "singleton":
        mass = _num_list(block.get("mass"), "prior_set.mass")
        try:
            return Singleton(Coupling(index, mass))
        except ValidationError as exc:
            raise ValidationError(f"prior_set.mass: {exc}") from exc
    if kind == "hull":
        tables = block.get("couplings")
        if not isinstance(tables, list) or not tables:
            raise ValidationError("prior_set.couplings: expected a nonempty list")
        couplings = []
        for i, table in enumerate(tables):
            mass = _num_list(table, f"prior_set.couplings[{i}]")
            try:
                couplings.append(Coupling(index, mass))
            except ValidationError as exc:
                raise ValidationError(f"prior_set.couplings[{i}]: {exc}") from exc
        return Hull(couplings)
    if kind == "polytope":
        rows = block.get("constraints", [])
        if not isinstance(rows, list):
            raise ValidationError("prior_set.constraints: expected a list")
        constraints = []
        for i, row in enumerate(rows):
            constraints.append(_parse_constraint(row, i, index, space))
        return Polytope(index, space, tuple(constraints))
    raise ValidationError(f"prior_set.kind: unknown kind {kind!r}")


def _parse_constraint(row, i: int, index: JointIndex, space: StateSpace) -> LinearConstraint:
    path = f"prior_set.constraints[{i}]"
    if not isinstance(row, dict):
        raise ValidationError(f"{path}: expected an object")
    sense = row.get("sense")
    if sense not in ("<=", "=", ">="):
        raise ValidationError(f"{path}.sense: expected <=, = or >=")
    rhs = _num(row.get("rhs"), f"{path}.rhs")
    coeffs_block = row.get("coeffs")
    if not isinstance(coeffs_block, dict) or not coeffs_block:
        raise ValidationError(
            f"{path}.coeffs: expected an object keyed by joint-state labels"
        )
    coeffs = np.zeros(index.size)
    for label, coeff in coeffs_block.items():
        coeffs[_parse_cell_label(label, index, space, f"{path}.coeffs")] = _num(
            coeff, f"{path}.coeffs[{label!r}]"
        )
    return LinearConstraint(coeffs, sense, rhs)


def _parse_cell_label(label: str, index: JointIndex, space: StateSpace, path: str) -> int:
    text = str(label).strip()
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    parts = [part.strip() for part in text.split(",")]
    if len(parts) != index.n_classes:
        raise ValidationError(
            f"{path}: label {label!r} needs {index.n_classes} state names"
        )
    states = []
    for part in parts:
        if part not in space.labels:
            raise ValidationError(f"{path}: unknown state label {part!r} in {label!r}")
        states.append(space.labels.index(part))
    return index.ravel(states)


def _parse_lotteries(raw: dict, model: CcrModel) -> tuple[dict[str, Lottery], tuple[str, ...]]:
    block = raw.get("lotteries", [])
    if not isinstance(block, list):
        raise ValidationError("lotteries: expected a list")
    declared = {a.id for a in model.actions}
    out: dict[str, Lottery] = {}
    order: list[str] = []
    for i, entry in enumerate(block):
        if not isinstance(entry, dict):
            raise ValidationError(f"lotteries[{i}]: expected an object")
        name = entry.get("name")
        if not name:
            raise ValidationError(f"lotteries[{i}].name: required")
        if name in out:
            raise ValidationError(f"lotteries[{i}].name: duplicate name {name!r}")
        support_block = entry.get("support")
        if not isinstance(support_block, list) or not support_block:
            raise ValidationError(f"lotteries[{i}].support: expected a nonempty list")
        pairs = []
        for j, item in enumerate(support_block):
            path = f"lotteries[{i}].support[{j}]"
            if not isinstance(item, dict):
                raise ValidationError(f"{path}: expected an object")
            profile_ids = item.get("profile")
            if not isinstance(profile_ids, list) or not profile_ids:
                raise ValidationError(f"{path}.profile: expected a nonempty list")
            for aid in profile_ids:
                if aid not in declared:
                    raise ValidationError(
                        f"{path}.profile: unknown action {aid!r}"
                    )
            pairs.append((Profile(profile_ids), _num(item.get("prob"), f"{path}.prob")))
        try:
            out[str(name)] = Lottery(pairs)
        except ValidationError as exc:
            raise ValidationError(f"lotteries[{i}]: {exc}") from exc
        order.append(str(name))
    return out, tuple(order)


def _parse_economy(block) -> Economy:
    if not isinstance(block, dict):
        raise ValidationError("economy: expected an object")
    u = parse_utility(block.get("utility"), "economy.utility")
    endow = block.get("endowment")
    if not isinstance(endow, dict):
        raise ValidationError("economy.endowment: expected an object")
    try:
        return Economy(
            mu=_num(block.get("mu"), "economy.mu"),
            u=u,
            r_lo=_num(block.get("r_lo"), "economy.r_lo"),
            r_hi=_num(block.get("r_hi"), "economy.r_hi"),
            endow_alpha=_num(endow.get("alpha"), "economy.endowment.alpha"),
            endow_beta=_num(endow.get("beta"), "economy.endowment.beta"),
            endow_safe=_num(endow.get("safe"), "economy.endowment.safe"),
        )
    except ValidationError as exc:
        if str(exc).startswith("economy"):
            raise
        raise ValidationError(f"economy: {exc}") from exc
