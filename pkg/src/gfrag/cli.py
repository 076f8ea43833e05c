"""Command line front end.

Model files are UTF-8 JSON documents.  Keys:

``r``
    growth speed; a number or a coefficient object such as
    ``{"type": "linear", "c0": 0.0, "c1": 1.0}`` (types: constant,
    linear, power, tabulated).
``a``
    splitting rate, same forms as ``r``.
``kernel``
    daughter-size distribution, e.g. ``{"type": "uniform_binary"}``
    (types: uniform_binary, power_law, shrinking_binary, tabulated).
``beta``
    renewal weight, same forms as ``r``.
``m``
    exponent of the working weight 1 + x^m.
``bc_convention``
    "flux" (default) or "value" for the renewal boundary pairing.
``x_max``
    default domain truncation (overridable with --x-max).
``initial``
    optional coefficient object sampled as the initial datum; the
    default datum is exp(-x).
``support``
    optional splitting-support geometry for the ``irreducible``
    command: ``{"supp_a": [[2.0, "inf"]], "envelope": [{"left": 2.0,
    "right": 4.0, "value_left": 1.0, "value_right": 2.0}], "beta_sup":
    0.5, "tail": {"kind": "envelope_extends"}}``.

Every command needs only ``--model``; outputs are CSV files (RFC 4180,
CRLF line ends, floats at 17 significant digits) plus a short stdout
summary.  Exit codes: 0 success, 1 validation failure or bad input,
2 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .closed_form import (
    binary_params_from_model,
    evaluate_solution,
    is_binary_model,
    moments_from_grid,
    propagate_moments,
)
from .errors import (
    DegenerateModelError,
    GfragError,
    InvalidInputError,
    InvalidModelError,
    MissingTailError,
)
from .irreducibility import compute_c_bar, decide_irreducibility
from .model import (
    GridFunction,
    ModelDefinition,
    boundary_weight_flux,
    coefficient_from_config,
    dual_norm_beta,
    grid_eval,
    linear_growth_bound,
    midpoint_grid,
    model_from_config,
    quad_weights,
    validate_assumptions,
)
from .pde import SolverConfig, solve
from .spectral import aeg_diagnostics, closed_form_eigenpair, perron_eigenpair

__all__ = ["RunConfig", "emit_csv", "main", "run"]

COMMANDS = ("validate", "solve-closed", "solve-pde", "eigen", "irreducible", "aeg")


@dataclass(frozen=True)
class RunConfig:
    """One resolved CLI invocation."""

    command: str
    model_path: str
    output_dir: str = "."
    x_max: float | None = None
    n_cells: int = 2000
    t_end: float = 2.0
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidInputError(f"unknown command {self.command!r}")
        if self.n_cells < 16:
            raise InvalidInputError("need at least 16 cells")
        if self.t_end <= 0.0:
            raise InvalidInputError("time horizon must be positive")


def _fmt(value) -> str:
    return f"{float(value):.17g}"


def emit_csv(path, header, rows) -> None:
    """Write rows as RFC 4180 CSV with a header and 17-digit floats."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _load(cfg: RunConfig) -> tuple[dict, ModelDefinition]:
    path = Path(cfg.model_path)
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidModelError(
                f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    if not isinstance(doc, dict):
        raise InvalidModelError(f"{path}: top-level config must be an object")
    model = model_from_config(doc)
    if cfg.x_max is not None:
        model = replace(model, x_max=float(cfg.x_max))
    return doc, model


def _initial_datum(doc: dict, nodes: np.ndarray) -> GridFunction:
    if doc.get("initial") is not None:
        coeff = coefficient_from_config(doc["initial"])
        vals = np.asarray(grid_eval(coeff, nodes), dtype=float)
    else:
        vals = np.exp(-nodes)
    return GridFunction(nodes, vals)


def _snapshot_rows(nodes: np.ndarray, values: np.ndarray):
    mass = float(np.sum(quad_weights(nodes) * values))
    scale = 1.0 / mass if mass > 0.0 else 0.0
    return [(x, u, u * scale) for x, u in zip(nodes, values)]


def _default_shift(model: ModelDefinition) -> float:
    omega_r = 2.0 * model.m * linear_growth_bound(model.r)
    beta_m = dual_norm_beta(boundary_weight_flux(model), model.m)
    return omega_r + beta_m + 2.0


def _cmd_validate(cfg: RunConfig, doc: dict, model: ModelDefinition, out: Path) -> int:
    report = validate_assumptions(model)
    for line in report.lines():
        print(line)
    print("assumptions " + ("pass" if report.all_pass else "fail"))
    return 0 if report.all_pass else 1


def _cmd_solve_closed(cfg: RunConfig, doc: dict, model: ModelDefinition, out: Path) -> int:
    if not is_binary_model(model):
        raise InvalidModelError(
            "solve-closed needs constant growth, proportional splitting rate, "
            "uniform binary daughters and an affine renewal weight"
        )
    params = binary_params_from_model(model)
    nodes = midpoint_grid(model.x_max, cfg.n_cells)
    u0 = _initial_datum(doc, nodes)
    u_end = np.asarray(evaluate_solution(params, u0, nodes, cfg.t_end), dtype=float)
    emit_csv(out / "snapshot.csv", ("x", "u", "u_normalized"), _snapshot_rows(nodes, u_end))
    m0 = moments_from_grid(u0)
    rows = []
    for t in np.linspace(0.0, cfg.t_end, 11):
        mt = propagate_moments(params, m0, float(t))
        rows.append((t, mt.M0, mt.M1))
    emit_csv(out / "moments.csv", ("t", "M0", "M1"), rows)
    print(f"wrote {out / 'snapshot.csv'} and {out / 'moments.csv'} at t = {_fmt(cfg.t_end)}")
    return 0


def _cmd_solve_pde(cfg: RunConfig, doc: dict, model: ModelDefinition, out: Path) -> int:
    nodes = midpoint_grid(model.x_max, cfg.n_cells)
    u0 = _initial_datum(doc, nodes)
    times = tuple(float(t) for t in np.linspace(0.0, cfg.t_end, 11)[1:])
    solver = SolverConfig(
        x_max=model.x_max, n_cells=cfg.n_cells, cfl=0.5, t_end=cfg.t_end, output_times=times
    )
    states = solve(model, u0, solver)
    final = states[-1]
    emit_csv(
        out / "snapshot.csv", ("x", "u", "u_normalized"), _snapshot_rows(nodes, final.u.values)
    )
    start = moments_from_grid(u0)
    rows = [(0.0, start.M0, start.M1)]
    rows += [(st.t, st.moments.M0, st.moments.M1) for st in states]
    emit_csv(out / "moments.csv", ("t", "M0", "M1"), rows)
    print(f"wrote {out / 'snapshot.csv'} and {out / 'moments.csv'} at t = {_fmt(final.t)}")
    return 0


def _cmd_eigen(cfg: RunConfig, doc: dict, model: ModelDefinition, out: Path) -> int:
    nodes = midpoint_grid(model.x_max, cfg.n_cells)
    tol = float(cfg.tolerances.get("tol", 1e-10))
    pair = perron_eigenpair(model, _default_shift(model), tol=tol, nodes=nodes)
    emit_csv(
        out / "eigen.csv",
        ("x", "v", "w"),
        zip(nodes, pair.v.values, pair.w.values),
    )
    print(f"s0 = {_fmt(pair.s0)}")
    print(f"residual = {_fmt(pair.residual)}")
    print(f"wrote {out / 'eigen.csv'}")
    return 0


def _cmd_irreducible(cfg: RunConfig, doc: dict, model: ModelDefinition, out: Path) -> int:
    if model.support is None:
        raise InvalidModelError("the model file declares no 'support' geometry")
    s = model.support
    top = max(s.breakpoints() + [1.0])
    result = compute_c_bar(s, np.geomspace(0.02, 3.0 * top, 64))
    decision = decide_irreducibility(s, result)
    print(f"c_bar = {_fmt(result.c_bar)} ({result.case})")
    print(str(decision))
    return 0


def _cmd_aeg(cfg: RunConfig, doc: dict, model: ModelDefinition, out: Path) -> int:
    nodes = midpoint_grid(model.x_max, cfg.n_cells)
    u0 = _initial_datum(doc, nodes)
    if is_binary_model(model):
        pair = closed_form_eigenpair(model, nodes)
    else:
        tol = float(cfg.tolerances.get("tol", 1e-10))
        pair = perron_eigenpair(model, _default_shift(model), tol=tol, nodes=nodes)
    times = tuple(float(t) for t in np.linspace(cfg.t_end / 4.0, cfg.t_end, 4))
    report = aeg_diagnostics(model, pair, u0, times)
    emit_csv(out / "aeg.csv", ("t", "deviation"), zip(report.times, report.deviations))
    print(f"fitted_rate = {_fmt(report.fitted_rate)}")
    print(f"fitted_constant = {_fmt(report.fitted_constant)}")
    print("deviations " + ("decreasing" if report.passed else "not decreasing"))
    print(f"wrote {out / 'aeg.csv'}")
    return 0


_DISPATCH = {
    "validate": _cmd_validate,
    "solve-closed": _cmd_solve_closed,
    "solve-pde": _cmd_solve_pde,
    "eigen": _cmd_eigen,
    "irreducible": _cmd_irreducible,
    "aeg": _cmd_aeg,
}


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit code."""
    try:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        doc, model = _load(cfg)
        return _DISPATCH[cfg.command](cfg, doc, model, out)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InvalidInputError, InvalidModelError, MissingTailError, DegenerateModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GfragError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gfrag",
        description="Growth-fragmentation dynamics with renewal boundary conditions.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("validate", "check the standing kernel and coefficient assumptions"),
        ("solve-closed", "closed-form solution of the binary family"),
        ("solve-pde", "finite-volume solution of the dynamics"),
        ("eigen", "dominant eigenvalue and eigenfunctions"),
        ("irreducible", "support-calculus irreducibility decision"),
        ("aeg", "asymptotic exponential growth diagnostics"),
    ):
        q = sub.add_parser(name, help=help_text)
        q.add_argument("--model", required=True, help="path to the JSON model file")
        q.add_argument("--x-max", type=float, default=None, help="domain truncation")
        q.add_argument("--cells", type=int, default=2000, help="number of grid cells")
        q.add_argument("--t-end", type=float, default=2.0, help="time horizon")
        q.add_argument("--out", default=".", help="output directory for CSV files")
        q.add_argument("--tol", type=float, default=None, help="iteration tolerance")
    return p


def main(argv=None) -> None:
    args = _parser().parse_args(argv)
    tolerances = {} if args.tol is None else {"tol": float(args.tol)}
    try:
        cfg = RunConfig(
            command=args.command,
            model_path=args.model,
            output_dir=args.out,
            x_max=args.x_max,
            n_cells=args.cells,
            t_end=args.t_end,
            tolerances=tolerances,
        )
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1)
    raise SystemExit(run(cfg))


if __name__ == "__main__":
    main()
