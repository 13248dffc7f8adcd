"""Command-line front end.

Problem files are JSON with 1-based indices in the orientation the user wrote
the system in; systems with fewer outputs than inputs are transposed
internally (with a notice) and every reported coordinate is mapped back.

Exit codes: 0 success, 2 malformed problem file, 3 infeasible pattern,
4 solver did not converge (partial results still printed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys as _sys
import time
from dataclasses import dataclass

import numpy as np

from .affine import (AffineConfig, history_rows, solve_affine,
                     warm_start_from_structured)
from .errors import (ConvergenceError, InfeasiblePatternError,
                     ProblemFormatError)
from .sparsity import AffinePattern, StructuredPattern
from .structured import SolveOptions, norm_surface, solve_structured
from .system import (ENTIRE_COMPLEX_PLANE, StateSpaceSystem,
                     apply_perturbation, invariant_zeros,
                     normalize_orientation, pencil,
                     weakly_unobservable_subspace)

DEFAULT_OPTIONS = {
    "theta_step": 0.01,
    "tau": 1e-8,
    "eps_zeta": 1e-4,
    "rank_tol": 1e-9,
    "seed": 0,
    "epsilon": None,
    "gamma_points": 200,
    "improve_tol": 1e-6,
    "max_iterations": 60,
    "multistart": 8,
}


@dataclass
class ProblemFile:
    system: StateSpaceSystem
    pattern_kind: str           # "structured" | "affine"
    rows: list                  # 0-based, original orientation (structured)
    cols: list
    cells: list                 # 0-based (row, col) pairs (affine)
    options: dict


def _matrix_from(obj, name, issues):
    if not isinstance(obj, list) or not obj:
        issues.append(f"system.{name}: expected a non-empty nested array")
        return None
    rows = []
    width = None
    for i, row in enumerate(obj):
        if not isinstance(row, list) or not row:
            issues.append(f"system.{name}: row {i + 1} is not a non-empty array")
            return None
        if width is None:
            width = len(row)
        elif len(row) != width:
            issues.append(f"system.{name}: row {i + 1} has {len(row)} entries, "
                          f"expected {width} (ragged array)")
            return None
        for j, v in enumerate(row):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                issues.append(f"system.{name}: entry ({i + 1},{j + 1}) is not a number")
                return None
        rows.append([float(v) for v in row])
    return np.array(rows)


def parse_problem(path):
    """Parse and validate a problem file; raises ProblemFormatError listing
    every schema violation found, not just the first."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ProblemFormatError([f"file not found: {path}"])
    except json.JSONDecodeError as e:
        raise ProblemFormatError([f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}"])

    issues = []
    if not isinstance(data, dict):
        raise ProblemFormatError(["top level must be a JSON object"])

    sysobj = data.get("system")
    mats = {}
    if not isinstance(sysobj, dict):
        issues.append("system: missing or not an object")
    else:
        for name in ("A", "B", "C", "D"):
            if name not in sysobj:
                issues.append(f"system.{name}: missing")
            else:
                M = _matrix_from(sysobj[name], name, issues)
                if M is not None:
                    mats[name] = M

    system = None
    if len(mats) == 4:
        try:
            system = StateSpaceSystem(mats["A"], mats["B"], mats["C"], mats["D"])
        except ValueError as e:
            issues.append(f"system: {e}")

    pat = data.get("pattern")
    kind, rows, cols, cells = None, [], [], []
    if not isinstance(pat, dict):
        issues.append("pattern: missing or not an object")
    else:
        kind = pat.get("kind")
        if kind not in ("structured", "affine"):
            issues.append("pattern.kind: must be 'structured' or 'affine'")
        elif kind == "structured":
            for key in ("rows", "cols"):
                val = pat.get(key)
                if not isinstance(val, list) or not val or \
                        not all(isinstance(v, int) and not isinstance(v, bool) for v in val):
                    issues.append(f"pattern.{key}: expected a non-empty list of integers")
            if not issues and system is not None:
                shape = (system.n + system.m, system.n + system.p)
                bad_r = [r for r in pat["rows"] if not 1 <= r <= shape[0]]
                bad_c = [c for c in pat["cols"] if not 1 <= c <= shape[1]]
                if bad_r:
                    issues.append(f"pattern.rows: out of range {bad_r} (1..{shape[0]})")
                if bad_c:
                    issues.append(f"pattern.cols: out of range {bad_c} (1..{shape[1]})")
                rows = [r - 1 for r in pat["rows"]]
                cols = [c - 1 for c in pat["cols"]]
        else:
            val = pat.get("cells")
            ok = isinstance(val, list) and val and all(
                isinstance(rc, list) and len(rc) == 2
                and all(isinstance(v, int) and not isinstance(v, bool) for v in rc)
                for rc in val)
            if not ok:
                issues.append("pattern.cells: expected a non-empty list of [row, col] pairs")
            elif system is not None:
                shape = (system.n + system.m, system.n + system.p)
                bad = [rc for rc in val
                       if not (1 <= rc[0] <= shape[0] and 1 <= rc[1] <= shape[1])]
                if bad:
                    issues.append(f"pattern.cells: out of range {bad} "
                                  f"(1..{shape[0]} x 1..{shape[1]})")
                cells = [(rc[0] - 1, rc[1] - 1) for rc in val]

    options = dict(DEFAULT_OPTIONS)
    opt = data.get("options", {})
    if opt and not isinstance(opt, dict):
        issues.append("options: must be an object")
    elif isinstance(opt, dict):
        unknown = sorted(set(opt) - set(DEFAULT_OPTIONS))
        if unknown:
            issues.append(f"options: unknown keys {unknown}")
        for key, val in opt.items():
            if key in DEFAULT_OPTIONS:
                options[key] = val

    if issues:
        raise ProblemFormatError(issues)
    return ProblemFile(system=system, pattern_kind=kind, rows=rows, cols=cols,
                       cells=cells, options=options)


# ---------------------------------------------------------------------------
# Orientation bookkeeping
# ---------------------------------------------------------------------------

class _Oriented:
    """Problem mapped into the solver orientation (outputs >= inputs)."""

    def __init__(self, problem):
        self.problem = problem
        self.original = problem.system
        self.sys = normalize_orientation(problem.system)
        self.flipped = self.sys is not self.original
        shape = (self.sys.n + self.sys.m, self.sys.n + self.sys.p)
        if problem.pattern_kind == "structured":
            rows, cols = problem.rows, problem.cols
            if self.flipped:
                rows, cols = cols, rows
            self.structured = StructuredPattern.from_indices(rows, cols, shape)
            self.affine = AffinePattern(
                tuple((r, c) for r in rows for c in cols), shape)
        else:
            cells = problem.cells
            if self.flipped:
                cells = [(c, r) for r, c in cells]
            self.affine = AffinePattern(tuple(cells), shape)
            self.structured = (self.affine.bounding_structured()
                               if self.affine.representable_as_structured else None)

    def delta_to_original(self, delta):
        return delta.T if self.flipped else delta

    def cells_to_original(self, delta):
        """Nonzero cells as 1-based (row, col, value) in the file orientation."""
        d = self.delta_to_original(np.asarray(delta))
        out = []
        for r, c in zip(*np.nonzero(d)):
            out.append([int(r) + 1, int(c) + 1, float(d[r, c])])
        return out


def _verification_block(sys_norm, delta_norm, rank_tol):
    """Zeros / WUS / rank-residual report for a perturbed system.

    Same code path for solver output and the verify command, so re-verifying
    an emitted result reproduces this block exactly.
    """
    perturbed = apply_perturbation(sys_norm, delta_norm)
    zeros = invariant_zeros(perturbed, rank_tol)
    full = perturbed.n + perturbed.p
    if zeros is ENTIRE_COMPLEX_PLANE:
        zero_list = "entire-complex-plane"
        probe = 0.7357
        sv = np.linalg.svd(pencil(perturbed, probe), compute_uv=False)
        residual = float(sv[full - 1] / sv[0])
    else:
        zero_list = [[float(z.real), float(z.imag)] for z in zeros]
        residual = 1.0
        for z in zeros:
            sv = np.linalg.svd(pencil(perturbed, complex(z)), compute_uv=False)
            residual = min(residual, float(sv[full - 1] / sv[0]))
    wus_dim = int(weakly_unobservable_subspace(perturbed, rank_tol).shape[1])
    has_zero = zero_list == "entire-complex-plane" or bool(zero_list)
    return {
        "zeros": zero_list,
        "wus_dimension": wus_dim,
        "rank_residual": residual,
        "opaque": bool(has_zero and wus_dim > 0),
    }


def _workers():
    try:
        return max(1, int(os.environ.get("ZERORADIUS_WORKERS", "1")))
    except ValueError:
        return 1


def _result(command, path, payload, notices, started):
    return {
        "command": command,
        "problem": path,
        "timing": {"seconds": time.monotonic() - started},
        "notices": notices,
        **payload,
    }


def _emit(record, out):
    text = json.dumps(record, indent=2, sort_keys=False)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_zeros(args):
    started = time.monotonic()
    problem = parse_problem(args.problem)
    ori = _Oriented(problem)
    notices = _orientation_notice(ori)
    zeros = invariant_zeros(ori.sys, problem.options["rank_tol"],
                            seed=problem.options["seed"])
    if zeros is ENTIRE_COMPLEX_PLANE:
        payload = {"zeros": "entire-complex-plane"}
    else:
        payload = {"zeros": [[float(z.real), float(z.imag)] for z in zeros]}
    _emit(_result("zeros", args.problem, payload, notices, started), args.out)
    return 0


def _cmd_wus(args):
    started = time.monotonic()
    problem = parse_problem(args.problem)
    ori = _Oriented(problem)
    notices = _orientation_notice(ori)
    basis = weakly_unobservable_subspace(ori.sys, problem.options["rank_tol"])
    payload = {"wus": {"dimension": int(basis.shape[1]),
                       "basis": basis.tolist()}}
    _emit(_result("wus", args.problem, payload, notices, started), args.out)
    return 0


def _orientation_notice(ori):
    if ori.flipped:
        return ["system has fewer outputs than inputs; analysis ran on the "
                "transposed system and all coordinates are reported in the "
                "original orientation"]
    return []


def _structured_payload(ori, sol, rank_tol):
    delta_original = ori.delta_to_original(sol.delta_full)
    return {
        "solution": {
            "s": [float(sol.s_star.real), float(sol.s_star.imag)],
            "norm": float(sol.norm),
            "gamma": float(sol.gamma_star),
            "delta_cells": ori.cells_to_original(sol.delta_full),
            "delta": delta_original.tolist(),
            "witness": [[float(d.real), float(d.imag)] for d in sol.witness],
        },
        "verification": _verification_block(ori.sys, sol.delta_full, rank_tol),
        "orientation_transposed": ori.flipped,
    }


def _cmd_solve_structured(args):
    started = time.monotonic()
    problem = parse_problem(args.problem)
    ori = _Oriented(problem)
    notices = _orientation_notice(ori)
    if ori.structured is None:
        raise InfeasiblePatternError(
            "pattern is not representable with row/column gates; "
            "use solve-affine", reason="not structured-representable")
    opts = problem.options
    options = SolveOptions(theta_step=opts["theta_step"],
                           gamma_points=opts["gamma_points"],
                           rank_tol=opts["rank_tol"],
                           improve_tol=opts["improve_tol"],
                           max_iterations=opts["max_iterations"],
                           seed=opts["seed"], workers=_workers())
    sol = solve_structured(ori.sys, ori.structured, options)
    payload = _structured_payload(ori, sol, opts["rank_tol"])
    _emit(_result("solve-structured", args.problem, payload, notices, started),
          args.out)
    return 0


def _cmd_solve_affine(args):
    started = time.monotonic()
    problem = parse_problem(args.problem)
    ori = _Oriented(problem)
    notices = _orientation_notice(ori)
    opts = problem.options
    tau = args.tau if args.tau is not None else opts["tau"]
    cfg = AffineConfig(tau=tau, eps_zeta=opts["eps_zeta"],
                       multistart=opts["multistart"], seed=opts["seed"])
    init = None
    if args.warm_start_structured:
        if ori.structured is None:
            rect = ori.affine.bounding_structured()
        else:
            rect = ori.structured
        options = SolveOptions(theta_step=opts["theta_step"],
                               gamma_points=opts["gamma_points"],
                               rank_tol=opts["rank_tol"],
                               improve_tol=opts["improve_tol"],
                               max_iterations=opts["max_iterations"],
                               seed=opts["seed"], workers=_workers())
        struct_sol = solve_structured(ori.sys, rect, options)
        init = warm_start_from_structured(struct_sol, ori.affine)
        notices.append("warm-started from the structured solution on the "
                       "bounding rectangle pattern")
    try:
        sol = solve_affine(ori.sys, ori.affine, init=init, cfg=cfg)
    except ConvergenceError as e:
        record = _result("solve-affine", args.problem,
                         {"error": str(e), "partial": True}, notices, started)
        _emit(record, args.out)
        return 4
    if args.history_csv:
        with open(args.history_csv, "w") as fh:
            fh.write("k,F,norm,lambda,mu\n")
            for k, F, nrm, lam, mu in history_rows(sol):
                fh.write(f"{k},{F!r},{nrm!r},{lam!r},{mu!r}\n")
    delta_original = ori.delta_to_original(sol.delta)
    payload = {
        "solution": {
            "s": [sol.lambda_mu[0], sol.lambda_mu[1]],
            "norm": float(sol.norm),
            "status": sol.status,
            "outer_iterations": len(sol.f_history),
            "delta_cells": ori.cells_to_original(sol.delta),
            "delta": delta_original.tolist(),
        },
        "verification": _verification_block(ori.sys, sol.delta,
                                            opts["rank_tol"]),
        "orientation_transposed": ori.flipped,
    }
    record = _result("solve-affine", args.problem, payload, notices, started)
    _emit(record, args.out)
    return 0 if sol.status == "converged" else 4


def _cmd_surface(args):
    started = time.monotonic()
    problem = parse_problem(args.problem)
    ori = _Oriented(problem)
    if ori.structured is None:
        raise InfeasiblePatternError(
            "surface needs a structured (or rectangle-representable) pattern",
            reason="not structured-representable")
    try:
        region = tuple(float(x) for x in args.region.split(","))
        if len(region) != 4:
            raise ValueError
    except ValueError:
        raise ProblemFormatError(
            [f"--region must be re_min,re_max,im_min,im_max, got {args.region!r}"])
    try:
        grid = tuple(int(x) for x in args.grid.split(","))
        if len(grid) != 2:
            raise ValueError
    except ValueError:
        raise ProblemFormatError([f"--grid must be N,M, got {args.grid!r}"])

    re_axis, im_axis, norms = norm_surface(
        ori.sys, ori.structured, region, grid,
        rank_tol=problem.options["rank_tol"],
        gamma_points=problem.options["gamma_points"],
        workers=_workers())
    lines = ["re,im,norm"]
    for i, re in enumerate(re_axis):
        for j, im in enumerate(im_axis):
            v = norms[i, j]
            lines.append(f"{float(re)!r},{float(im)!r},"
                         f"{'' if np.isnan(v) else repr(float(v))}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        _sys.stderr.write(f"surface written to {args.out} "
                          f"({time.monotonic() - started:.1f}s)\n")
    else:
        _sys.stdout.write(text)
    return 0


def _cmd_verify(args):
    started = time.monotonic()
    problem = parse_problem(args.problem)
    ori = _Oriented(problem)
    notices = _orientation_notice(ori)
    try:
        with open(args.delta) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ProblemFormatError([f"file not found: {args.delta}"])
    except json.JSONDecodeError as e:
        raise ProblemFormatError(
            [f"invalid JSON in delta file at line {e.lineno}: {e.msg}"])
    issues = []
    delta = _matrix_from(data.get("delta"), "delta", issues) \
        if isinstance(data, dict) else None
    if delta is None:
        raise ProblemFormatError(issues or ["delta file must be an object "
                                            "with a 'delta' matrix"])
    n0, m0, p0 = ori.original.n, ori.original.m, ori.original.p
    if delta.shape != (n0 + m0, n0 + p0):
        raise ProblemFormatError(
            [f"delta must be {(n0 + m0)}x{(n0 + p0)} in the original "
             f"orientation, got {delta.shape[0]}x{delta.shape[1]}"])
    delta_norm = delta.T if ori.flipped else delta
    block = _verification_block(ori.sys, delta_norm, problem.options["rank_tol"])
    payload = {"verification": block,
               "opaque": block["opaque"],
               "orientation_transposed": ori.flipped}
    if not block["opaque"]:
        notices.append("not opaque: the perturbed system has no invariant "
                       "zero / nontrivial weakly unobservable subspace")
    _emit(_result("verify", args.problem, payload, notices, started), args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zeroradius",
        description="Minimum-norm sparse perturbations that create an "
                    "invariant zero (opacity) in a discrete-time LTI system.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        q = sub.add_parser(name, **kwargs)
        q.add_argument("problem", help="problem JSON file")
        q.add_argument("--out", help="write the JSON/CSV result here instead of stdout")
        q.set_defaults(fn=fn)
        return q

    add("zeros", _cmd_zeros, help="invariant zeros of the system")
    add("wus", _cmd_wus, help="weakly unobservable subspace")
    add("solve-structured", _cmd_solve_structured,
        help="global minimum-norm row/column-gated perturbation")
    q = add("solve-affine", _cmd_solve_affine,
            help="locally optimal cell-wise perturbation")
    q.add_argument("--warm-start-structured", action="store_true",
                   help="initialize from the structured solution on the "
                        "bounding rectangle")
    q.add_argument("--history-csv", help="write the convergence history here")
    q.add_argument("--tau", type=float, default=None,
                   help="override the outer convergence threshold")
    q = add("surface", _cmd_surface,
            help="fixed-s minimum norm over a grid, as CSV")
    q.add_argument("--region", required=True,
                   help="re_min,re_max,im_min,im_max")
    q.add_argument("--grid", required=True, help="N,M grid resolution")
    q = add("verify", _cmd_verify,
            help="check a user-supplied perturbation for opacity")
    q.add_argument("--delta", required=True,
                   help="JSON file with a full-size 'delta' matrix")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ProblemFormatError as e:
        for issue in e.issues:
            _sys.stderr.write(f"error: {issue}\n")
        return 2
    except InfeasiblePatternError as e:
        _sys.stderr.write(f"infeasible: {e}\n")
        return 3
    except ConvergenceError as e:
        _sys.stderr.write(f"no convergence: {e}\n")
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
