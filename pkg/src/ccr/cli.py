"""Command-line interface: scenario ingestion, dispatch, report emission.

Reports are deterministic: identical inputs, seed, and tool version give
byte-identical output.  All numeric leaves are rendered as decimal
strings with 12 significant digits (round-half-even, the platform float
formatting), and randomized menus derive from the recorded seed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .assets import SWEEP_COLUMNS, equilibrium_prices, sweep
from .axioms import (
    check_complexity_aversion,
    check_default_to_independence,
    check_independence,
    check_nui,
    check_simple_monotonicity,
    check_understanding,
    check_weak_monotonicity,
)
from .errors import (
    CcrError,
    DomainError,
    InfeasibleError,
    ResourceCapError,
    SolverError,
    ValidationError,
)
from .menus import DEFAULT_ALPHAS, random_lottery
from .priors import diagonal_pushforward, is_member, product_measure
from .scenario import Scenario, load_scenario
from .valuation import PREFERENCE_TOL, certainty_equivalent, prefer, value

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_SOLVER = 4
EXIT_AXIOM_VIOLATION = 5

COMMANDS = ("evaluate", "compare", "axioms", "membership", "equilibrium", "sweep")

_AXIOM_TAGS = (
    "weak-monotonicity",
    "simple-monotonicity",
    "negative-uncorrelated-independence",
    "independence",
    "complexity-aversion",
    "default-to-independence",
    "understanding",
)


def fmt_number(x: float) -> str:
    v = float(x)
    if v == 0.0:
        v = 0.0  # normalize -0.0
    return f"{v:.12g}"


def _stringify(obj):
    """Recursively render floats as 12-significant-digit strings."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return fmt_number(obj)
    if isinstance(obj, dict):
        return {str(k): _stringify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_stringify(v) for v in obj]
    return str(obj)


def run_command(
    command: str,
    doc: Scenario,
    *,
    seed: int = 0,
    tolerance: float | None = None,
    strict: bool = False,
) -> dict:
    tol = PREFERENCE_TOL if tolerance is None else float(tolerance)
    if command == "evaluate":
        results = _run_evaluate(doc)
    elif command == "compare":
        results = _run_compare(doc, tol)
    elif command == "axioms":
        results = _run_axioms(doc, seed, tol)
    elif command == "membership":
        results = _run_membership(doc)
    elif command == "equilibrium":
        results = _run_equilibrium(doc)
    elif command == "sweep":
        results = _run_sweep(doc)
    else:
        raise ValidationError(f"unknown command {command!r}")
    return {
        "tool": "ccr",
        "version": __version__,
        "command": command,
        "scenario": {"name": doc.name, "sha256": doc.sha256},
        "seed": seed,
        "tolerance": tol,
        "results": results,
    }


def _minimizer_cells(coupling, model) -> dict[str, float]:
    index = coupling.index
    out = {}
    for cell in range(index.size):
        mass = float(coupling.mass[cell])
        if mass > 1e-15:
            out[index.cell_label(cell, model.space)] = mass
    return out


def _run_evaluate(doc: Scenario) -> list[dict]:
    model = doc.require_model()
    names = _query_lotteries(doc, "evaluate")
    results = []
    for name in names:
        lottery = doc.lotteries[name]
        res = value(lottery, model)
        results.append(
            {
                "lottery": name,
                "value": res.value,
                "certainty_equivalent": certainty_equivalent(lottery, model),
                "minimizer": _minimizer_cells(res.minimizer, model),
            }
        )
    return results


def _run_compare(doc: Scenario, tol: float) -> list[dict]:
    model = doc.require_model()
    names = _query_lotteries(doc, "compare")
    results = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            verdict = prefer(
                doc.lotteries[names[i]], doc.lotteries[names[j]], model, tol
            )
            results.append(
                {"first": names[i], "second": names[j], "verdict": verdict.value}
            )
    return results


def _query_lotteries(doc: Scenario, command: str) -> list[str]:
    for query in doc.queries:
        if query.get("command") == command and "lotteries" in query:
            names = query["lotteries"]
            for name in names:
                if name not in doc.lotteries:
                    raise ValidationError(
                        f"queries.{command}.lotteries: unknown lottery {name!r}"
                    )
            return list(names)
    return list(doc.lottery_order)


def _axiom_blocks(doc: Scenario) -> list[dict]:
    for query in doc.queries:
        if query.get("command") == "axioms":
            checks = query.get("checks")
            if not isinstance(checks, list) or not checks:
                raise ValidationError("queries.axioms.checks: expected a nonempty list")
            return checks
    # default battery over the named lotteries
    blocks: list[dict] = [
        {"axiom": "weak-monotonicity"},
        {"axiom": "simple-monotonicity"},
        {"axiom": "negative-uncorrelated-independence"},
        {"axiom": "independence"},
        {"axiom": "complexity-aversion"},
    ]
    return blocks


def _resolve_menu(doc: Scenario, block: dict, model, rng) -> list:
    names = block.get("menu")
    if names is None:
        menu = [doc.lotteries[name] for name in doc.lottery_order]
    else:
        for name in names:
            if name not in doc.lotteries:
                raise ValidationError(f"axioms menu: unknown lottery {name!r}")
        menu = [doc.lotteries[name] for name in names]
    extra = int(block.get("random_lotteries", 0))
    menu += [random_lottery(model, rng) for _ in range(extra)]
    return menu


def _run_axioms(doc: Scenario, seed: int, tol: float) -> list[dict]:
    model = doc.require_model()
    rng = np.random.default_rng(seed)
    results = []
    for block in _axiom_blocks(doc):
        tag = block.get("axiom")
        if tag not in _AXIOM_TAGS:
            raise ValidationError(f"queries.axioms: unknown axiom tag {tag!r}")
        alphas = [float(a) for a in block.get("alphas", DEFAULT_ALPHAS)]
        if tag == "weak-monotonicity":
            report = check_weak_monotonicity(
                model, _resolve_menu(doc, block, model, rng), tol=tol
            )
        elif tag == "simple-monotonicity":
            pairs = block.get("pairs")
            if pairs is None:
                ids = [a.id for a in model.actions]
                pairs = [(a, b) for a in ids for b in ids if a != b]
            report = check_simple_monotonicity(model, pairs, tol=tol)
        elif tag == "negative-uncorrelated-independence":
            report = check_nui(
                model, _resolve_menu(doc, block, model, rng), alphas, tol=tol
            )
        elif tag == "independence":
            report = check_independence(
                model, _resolve_menu(doc, block, model, rng), alphas, tol=tol
            )
        elif tag == "complexity-aversion":
            report = check_complexity_aversion(
                model, _resolve_menu(doc, block, model, rng), tol=tol
            )
        elif tag == "default-to-independence":
            pairs = block.get("bet_pairs")
            if pairs is None:
                pairs = _default_bet_pairs(model)
            weights = block.get("weights")
            if weights is not None:
                weights = [float(w) for w in weights]
            report = check_default_to_independence(
                model, [tuple(p) for p in pairs], weights, tol=tol
            )
        else:  # understanding
            if "actions" in block:
                ids = [str(a) for a in block["actions"]]
            elif "class" in block:
                ids = [a.id for a in model.actions if a.class_id == block["class"]]
                if not ids:
                    raise ValidationError(
                        f"axioms understanding: no actions in class {block['class']!r}"
                    )
            else:
                raise ValidationError(
                    "axioms understanding: needs an 'actions' or 'class' field"
                )
            report = check_understanding(
                model, ids, _resolve_menu(doc, block, model, rng), tol=tol
            )
        results.append(report.to_payload())
    return results


def _default_bet_pairs(model) -> list[tuple[str, str]]:
    bets = [a for a in model.actions if len(a.range_values()) == 2]
    out = []
    for a in bets:
        for b in bets:
            if a.id < b.id and a.class_id != b.class_id:
                out.append((a.id, b.id))
    return out


def _run_membership(doc: Scenario) -> list[dict]:
    model = doc.require_model()
    diag = diagonal_pushforward(model.space, model.index)
    prod = product_measure(model.space, model.index)
    return [
        {"coupling": "diagonal", "member": is_member(diag, model.pi_set)},
        {"coupling": "product", "member": is_member(prod, model.pi_set)},
    ]


def _run_equilibrium(doc: Scenario) -> list[dict]:
    econ = doc.require_economy()
    eq = equilibrium_prices(econ)
    return [
        {
            "p_alpha": eq.alpha,
            "p_beta": eq.beta,
            "p_beta_prime_lo": eq.beta_prime_lo,
            "p_beta_prime_hi": eq.beta_prime_hi,
            "interval_width": eq.beta_prime_width,
        }
    ]


def _sweep_grid(doc: Scenario) -> list[tuple[float, float, float, float, float]]:
    for query in doc.queries:
        if query.get("command") == "sweep":
            grid = query.get("grid")
            if not isinstance(grid, list) or not grid:
                raise ValidationError("queries.sweep.grid: expected a nonempty list")
            rows = []
            for i, row in enumerate(grid):
                if not isinstance(row, list) or len(row) != 5:
                    raise ValidationError(
                        f"queries.sweep.grid[{i}]: expected [a, b, c_star, r_lo, r_hi]"
                    )
                rows.append(tuple(float(v) for v in row))
            return rows
    econ = doc.require_economy()
    return [(econ.endow_alpha, econ.endow_beta, econ.endow_safe, econ.r_lo, econ.r_hi)]


def _run_sweep(doc: Scenario) -> list[dict]:
    econ = doc.require_economy()
    rows = sweep(econ.mu, econ.u, _sweep_grid(doc))
    out = []
    for row in rows:
        out.append({col: getattr(row, col if col != "c_star" else "c_star") for col in SWEEP_COLUMNS})
    return out


# ----------------------------------------------------------------------
# rendering
# ----------------------------------------------------------------------


def render_report(payload: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_stringify(payload), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        if payload["command"] != "sweep":
            raise ValidationError("csv format is only available for the sweep command")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in payload["results"]:
            writer.writerow(
                [
                    "" if row[col] is None else (
                        fmt_number(row[col]) if isinstance(row[col], float) else row[col]
                    )
                    for col in SWEEP_COLUMNS
                ]
            )
        return buf.getvalue()
    if fmt == "text":
        lines: list[str] = []
        _render_text(_stringify(payload), lines, "")
        return "\n".join(lines) + "\n"
    raise ValidationError(f"unknown format {fmt!r}")


def _render_text(obj, lines: list[str], indent: str) -> None:
    if isinstance(obj, dict):
        for key in obj:
            val = obj[key]
            if isinstance(val, (dict, list)):
                lines.append(f"{indent}{key}:")
                _render_text(val, lines, indent + "  ")
            else:
                lines.append(f"{indent}{key}: {val}")
    elif isinstance(obj, list):
        for item in obj:
            if isinstance(item, (dict, list)):
                lines.append(f"{indent}-")
                _render_text(item, lines, indent + "  ")
            else:
                lines.append(f"{indent}- {item}")
    else:
        lines.append(f"{indent}{obj}")


def _has_violation(payload: dict) -> bool:
    if payload["command"] != "axioms":
        return False
    return any(entry.get("verdict") == "violated" for entry in payload["results"])


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccr",
        description=(
            "Worst-case valuation of action portfolios over coupling polytopes: "
            "evaluation, preference comparison, axiom checks, coupling membership "
            "certificates, and two-state asset-pricing equilibria."
        ),
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--scenario", required=True, help="path to a scenario JSON file")
    parser.add_argument("--format", default="json", choices=("json", "csv", "text"))
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized menus")
    parser.add_argument(
        "--tolerance", type=float, default=None, help="preference indifference band"
    )
    parser.add_argument("--out", default=None, help="write the report to this path")
    parser.add_argument(
        "--strict",
        action="store_true",
        help="exit with code 5 when an axiom check reports a violation",
    )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc = load_scenario(args.scenario)
        payload = run_command(
            args.command,
            doc,
            seed=args.seed,
            tolerance=args.tolerance,
            strict=args.strict,
        )
        rendered = render_report(payload, args.format)
    except (ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (SolverError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except CcrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(rendered)
    else:
        sys.stdout.write(rendered)
    if args.strict and _has_violation(payload):
        return EXIT_AXIOM_VIOLATION
    return EXIT_OK


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
