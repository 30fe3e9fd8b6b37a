"""Batch runner: ``uhlenbeck <command> [--config PATH] [--out DIR] [--seed N] [--strict]``.

Each command writes ``<command>.csv`` (a ``#`` comment line naming the
generator and seed, then a fixed header) and ``<command>.json`` with a
summary. Without ``--out`` the CSV goes to stdout. Exit codes: 0 when every
row passes (or ``--strict`` is off), 1 on a FAIL row under ``--strict`` or a
numerical error, 2 on a bad configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import orlicz, pointwise, sharpness, solver
from .errors import ConfigError, UhlenbeckError

PRNG_NAME = "numpy.PCG64"
COMMANDS = ("kappa", "identity", "sharpness", "ellipsoid", "orlicz", "solve", "local")


# --------------------------------------------------------------------------
# config handling


class Params:
    """Typed access to a command's parameter block with field-level diagnostics."""

    def __init__(self, command: str, block: dict, allowed: dict[str, Any]):
        if not isinstance(block, dict):
            raise ConfigError(f"{command}: 'params' must be an object")
        unknown = sorted(set(block) - set(allowed))
        if unknown:
            raise ConfigError(f"{command}: unknown field(s) {unknown}; allowed {sorted(allowed)}")
        self.command = command
        self.values = {**allowed, **block}

    def get(self, key: str, kind: type | tuple = (int, float), check: Callable | None = None,
            what: str = ""):
        v = self.values[key]
        ok = isinstance(v, kind) and not isinstance(v, bool) if kind is not bool else isinstance(v, bool)
        if not ok or (check is not None and not check(v)):
            raise ConfigError(f"{self.command}: field '{key}' = {v!r} is invalid"
                              + (f" ({what})" if what else ""))
        return v

    def number_list(self, key: str, what: str = ""):
        v = self.values[key]
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            v = [v]
        if not (isinstance(v, list) and v
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
            raise ConfigError(f"{self.command}: field '{key}' must be a number or list of numbers"
                              + (f" ({what})" if what else ""))
        return [float(x) for x in v]


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return cfg


def coefficient_from(params: Params, key: str = "coefficient") -> orlicz.GrowthCoefficient:
    cfg = params.values.get(key)
    if cfg is None:
        p = params.get("p", (int, float), lambda v: v > 0, "exponent")
        cfg = {"family": "power", "p": p}
    if not isinstance(cfg, dict):
        raise ConfigError(f"{params.command}: field '{key}' must be an object")
    try:
        return orlicz.GrowthCoefficient.from_config(cfg)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{params.command}: field '{key}' = {cfg!r}: {exc}") from exc


def describe(a) -> str:
    params = getattr(a, "params", {}) or {}
    if "points" in params:
        params = {"points": len(params["points"])}
    return a.label + ("" if not params else " " + json.dumps(params, sort_keys=True))


# --------------------------------------------------------------------------
# commands: each returns (header, rows, summary); rows end with a pass flag


Result = tuple[list[str], list[list[Any]], dict]


def cmd_kappa(p: Params, rng) -> Result:
    N = p.get("N", int, lambda v: v >= 1, "component count")
    grid = p.number_list("p_grid", "[start, step, stop]")
    if len(grid) != 3 or grid[1] <= 0 or grid[0] < 1 or grid[2] < grid[0]:
        raise ConfigError("kappa: field 'p_grid' must be [start >= 1, step > 0, stop >= start]")
    start, step, stop = grid
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    ps = start + step * np.arange(count)
    rows, prev = [], None
    sign_change = None
    for q in ps:
        k = pointwise.kappa(N, float(q))
        if prev is not None and prev[1] <= 0 < k and sign_change is None:
            sign_change = (prev[0], float(q))
        rows.append([float(q), N, k, int(np.sign(k)), True])
        prev = (float(q), k)
    summary = {"N": N, "threshold": pointwise.SHARP_THRESHOLD if N >= 2 else 1.0,
               "sign_change_bracket": sign_change}
    return ["p", "N", "kappa", "sign", "pass"], rows, summary


def cmd_identity(p: Params, rng) -> Result:
    trials = p.get("trials", int, lambda v: v >= 1)
    ps = p.number_list("p", "exponents >= 1")
    eps = p.number_list("eps") if p.values["eps"] is not None else []
    tol = p.get("tol", (int, float), lambda v: v > 0)
    dims = p.values["dims"]
    if not (isinstance(dims, list) and dims and all(isinstance(d, int) and d >= 2 for d in dims)):
        raise ConfigError("identity: field 'dims' must be a list of integers >= 2")
    N = p.values["N"]
    if N is not None:
        N = p.get("N", int, lambda v: v >= 1)
    if any(q < 1 for q in ps) or any(e <= 0 for e in eps):
        raise ConfigError("identity: 'p' must be >= 1 and 'eps' > 0")
    coefs = pointwise.sweep_coefficients(ps, eps)
    names = [describe(a) for a in coefs]
    out = pointwise.random_sweep(coefs, trials, rng, dims=tuple(dims), N=N)
    rows = []
    for k, r in enumerate(out):
        ok = r.residual <= tol and r.gap >= -tol
        rows.append([r.trial, names[k % len(coefs)], r.n, r.N,
                     ";".join(repr(v) for v in r.point), r.residual, r.gap, ok])
    summary = {"trials": trials, "coefficients": names,
               "max_residual": max(r.residual for r in out),
               "min_gap": min(r.gap for r in out), "tol": tol}
    return ["trial", "coefficient", "n", "N", "point", "residual", "gap", "pass"], rows, summary


def cmd_sharpness(p: Params, rng) -> Result:
    deltas = p.number_list("delta")
    sigmas = p.values["sigma"]
    sigmas = ([None] * len(deltas) if sigmas is None else p.number_list("sigma"))
    if len(sigmas) == 1 and len(deltas) > 1:
        sigmas = sigmas * len(deltas)
    if len(sigmas) != len(deltas):
        raise ConfigError("sharpness: 'sigma' must match 'delta' in length")
    restarts = p.get("restarts", int, lambda v: v >= 1)
    iterations = p.get("iterations", int, lambda v: v >= 0)
    n = p.get("n", int, lambda v: v >= 2)
    N = p.get("N", int, lambda v: v >= 2)
    tol = p.get("tol", (int, float), lambda v: v >= 0)
    rows = []
    for d, s in zip(deltas, sigmas):
        if s is None:
            s = max(1.0 - d, (d + 1.0) ** 2 / (8.0 * d)) if d > 0 else 1.0
        bound = sharpness.analytic_bound(d, s)
        res = sharpness.global_search(n, N, d, s, restarts, iterations, rng=rng)
        rows.append([d, s, bound, res.best_D, bound - res.best_D, restarts, iterations,
                     res.best_D <= bound + tol])
    summary = {"n": n, "N": N, "max_excess": max(r[3] - r[2] for r in rows)}
    return ["delta", "sigma", "analytic_bound", "best_D", "gap", "restarts", "iterations",
            "pass"], rows, summary


def ellipsoid_trial(rng, n: int) -> tuple[float, bool, float]:
    """One random check: identity residual, membership, preimage error."""
    w = rng.standard_normal(n)
    w /= np.linalg.norm(w)
    H = rng.standard_normal((n, n))
    H = 0.5 * (H + H.T)
    res = abs(sharpness.ellipsoid_identity(w, H))
    member = sharpness.ellipsoid_membership(rng.uniform(0.1, 2.0) * w, H)
    # a point of the ellipsoid t^2 + 2 s^2 <= 1 in the frame (w, w_perp)
    perp = rng.standard_normal(n)
    perp -= (perp @ w) * w
    perp /= np.linalg.norm(perp)
    theta, rad = rng.uniform(0, 2 * math.pi), math.sqrt(rng.uniform())
    x = rad * (math.cos(theta) * w + math.sin(theta) / math.sqrt(2.0) * perp)
    G = sharpness.ellipsoid_preimage(w, x)
    err = max(float(np.linalg.norm(G @ w - x)), float(np.sum(G * G)) - 1.0 - 1e-12, 0.0,
              float(np.max(np.abs(G - G.T))))
    return res, member, err


def cmd_ellipsoid(p: Params, rng) -> Result:
    samples = p.get("samples", int, lambda v: v >= 1)
    n = p.get("n", int, lambda v: v >= 2)
    tol = p.get("tol", (int, float), lambda v: v > 0)
    rows = []
    for k in range(samples):
        res, member, err = ellipsoid_trial(rng, n)
        rows.append([k, res, member, err, res <= tol and member and err <= tol])
    summary = {"samples": samples, "n": n, "max_residual": max(r[1] for r in rows),
               "max_preimage_error": max(r[3] for r in rows)}
    return ["sample", "identity_residual", "member", "preimage_error", "pass"], rows, summary


def cmd_orlicz(p: Params, rng) -> Result:
    cfgs = p.values["coefficients"]
    if not (isinstance(cfgs, list) and cfgs and all(isinstance(c, dict) for c in cfgs)):
        raise ConfigError("orlicz: 'coefficients' must be a non-empty list of objects")
    eps = p.number_list("eps")
    rows = []
    for c in cfgs:
        try:
            a = orlicz.GrowthCoefficient.from_config(c)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"orlicz: coefficient {c!r}: {exc}") from exc
        fam = c.get("family", "power")
        par = json.dumps({k: v for k, v in c.items() if k not in ("family", "points")},
                         sort_keys=True)
        ia, sa, nonfinite = orlicz.compute_indices(a)
        rows.append([fam, par, "i_a", ia, not nonfinite])
        rows.append([fam, par, "s_a", sa, not nonfinite])
        pair = orlicz.build_young_pair(a)
        for r in orlicz.young_checks(a, pair=pair):
            rows.append([fam, par, r.quantity, r.constant, r.passed])
        for e in eps:
            r = orlicz.epsindex_check(a, e)
            rows.append([fam, f"{par} eps={e!r}", r.quantity, r.constant, r.passed])
            for r in orlicz.sandwich_check(a, e, pair=pair):
                rows.append([fam, f"{par} eps={e!r}", r.quantity, r.constant, r.passed])
    summary = {"coefficients": cfgs, "eps": eps}
    return ["family", "parameter", "quantity", "fitted_constant", "pass"], rows, summary


def _solver_inputs(p: Params):
    a = coefficient_from(p)
    N = p.get("N", int, lambda v: v >= 1)
    g = p.values["grid"]
    if isinstance(g, int) and not isinstance(g, bool):
        grid = solver.Grid2.square(g)
    elif isinstance(g, dict) and set(g) <= {"mx", "my", "Lx", "Ly"} and "mx" in g:
        mx = g["mx"]
        my = g.get("my", mx)
        Lx = g.get("Lx", 1.0)
        Ly = g.get("Ly", Lx * (my + 1) / (mx + 1))
        grid = solver.Grid2(float(Lx), float(Ly), int(mx), int(my))
    else:
        raise ConfigError(f"{p.command}: 'grid' must be a node count or {{mx, my[, Lx, Ly]}}")
    f = p.values["f"]
    if isinstance(f, str):
        F = solver.rhs_named(f, grid, N)
    elif isinstance(f, list):
        F = np.asarray(f, dtype=float)
        if F.ndim == 2:
            F = F[None]
        if F.shape != (N, *grid.shape):
            raise ConfigError(f"{p.command}: 'f' table has shape {F.shape}, "
                              f"expected {(N, *grid.shape)}")
    else:
        raise ConfigError(f"{p.command}: 'f' must be a name or a node table")
    k = p.get("eps_k_max", int, lambda v: v >= 0)
    tol = p.get("tol", (int, float), lambda v: v > 0)
    return a, F, grid, k, tol


def cmd_solve(p: Params, rng) -> Result:
    a, F, grid, k, tol = _solver_inputs(p)
    sol = solver.solve(a, F, grid, solver.epsilon_schedule(k), tol)
    rep = solver.norms(sol, F)
    rows = [[eps, its, res, res <= tol] for eps, its, res in sol.trace]
    summary = {"coefficient": describe(a), "N": sol.N, "h": grid.h,
               "nodes": list(grid.shape), "epsilon": sol.epsilon,
               "residual_norm": sol.residual_norm,
               "norms": {"l2_f": rep.l2_f, "l1_f": rep.l1_f, "l2_flux": rep.l2_flux,
                         "l2_grad_flux": rep.l2_grad_flux, "w12_flux": rep.w12_flux,
                         "l1_flux": rep.l1_flux},
               "ratios": rep.ratios}
    return ["eps", "newton_iters", "residual", "pass"], rows, summary


def cmd_local(p: Params, rng) -> Result:
    a, F, grid, k, tol = _solver_inputs(p)
    balls = p.values["balls"]
    if not (isinstance(balls, list) and balls and all(
            isinstance(b, dict) and "center" in b and "R" in b for b in balls)):
        raise ConfigError("local: 'balls' must be a list of {center: [x, y], R}")
    sol = solver.solve(a, F, grid, solver.epsilon_schedule(k), tol)
    rows = []
    for b in balls:
        c = [float(v) for v in b["center"]]
        est = solver.local_estimate_check(sol, F, c, float(b["R"]))
        rows.append([c[0], c[1], float(b["R"]), est.lhs, est.rhs, est.c_fit, est.passed])
    summary = {"coefficient": describe(a), "h": grid.h, "residual_norm": sol.residual_norm}
    return ["center_x", "center_y", "R", "lhs", "rhs", "c_fit", "pass"], rows, summary


_SOLVER_DEFAULTS = {"p": 2.0, "coefficient": None, "N": 1, "grid": 33, "f": "sine",
                    "eps_k_max": 12, "tol": 1e-10}

SCHEMAS: dict[str, tuple[Callable, dict]] = {
    "kappa": (cmd_kappa, {"N": 2, "p_grid": [1.0, 0.01, 4.0]}),
    "identity": (cmd_identity, {"trials": 1000, "p": [1.3, 1.5, 2.0, 3.0, 4.0],
                                "eps": [1e-2, 1.0], "dims": [2, 3], "N": None, "tol": 1e-9}),
    "sharpness": (cmd_sharpness, {"delta": 0.5, "sigma": None, "restarts": 200,
                                  "iterations": 10_000, "n": 2, "N": 2, "tol": 1e-7}),
    "ellipsoid": (cmd_ellipsoid, {"samples": 10_000, "n": 3, "tol": 1e-12}),
    "orlicz": (cmd_orlicz, {"coefficients": [{"family": "power", "p": 1.5}],
                            "eps": [0.25, 1.0]}),
    "solve": (cmd_solve, dict(_SOLVER_DEFAULTS)),
    "local": (cmd_local, {**_SOLVER_DEFAULTS, "balls": [{"center": [0.5, 0.5], "R": 0.2}]}),
}


# --------------------------------------------------------------------------
# output


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "PASS" if v else "FAIL"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_csv(command: str, seed: int, header: list[str], rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    buf.write(f"# uhlenbeck {command} prng={PRNG_NAME} seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def run(command: str, params: dict, seed: int = 0, out: str | None = None,
        strict: bool = False, stdout=None) -> int:
    """Execute one experiment and write its artifacts; returns the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}; choose from {list(COMMANDS)}")
    if not (isinstance(seed, int) and 0 <= seed < 2 ** 64):
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    fn, defaults = SCHEMAS[command]
    rng = np.random.Generator(np.random.PCG64(seed))
    header, rows, summary = fn(Params(command, params, defaults), rng)
    failures = [r for r in rows if not r[-1]]
    text = render_csv(command, seed, header, rows)
    summary = {"command": command, "seed": seed, "prng": PRNG_NAME, "params": params,
               "rows": len(rows), "failures": len(failures),
               "failed_rows": [dict(zip(header, r)) for r in failures[:50]], **summary}
    if out is None:
        stdout.write(text)
    else:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{command}.csv").write_text(text)
        (d / f"{command}.json").write_text(
            json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return 1 if (strict and failures) else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uhlenbeck", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON file: {\"params\": {...}, \"seed\": N} or a bare params object")
    ap.add_argument("--out", help="directory for <command>.csv and <command>.json")
    ap.add_argument("--seed", type=int, default=None, help="PCG64 seed (unsigned 64-bit)")
    ap.add_argument("--strict", action="store_true", help="exit 1 if any row fails")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if "command" in cfg and cfg["command"] != args.command:
            raise ConfigError(f"config is for {cfg['command']!r}, not {args.command!r}")
        params = cfg.get("params", {k: v for k, v in cfg.items() if k not in ("command", "seed")})
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        return run(args.command, params, seed, args.out, args.strict)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except UhlenbeckError as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
