"""Batch experiment runner.

Usage::

    fenchelgame run experiments.ini [--output DIR] [--workers N]
    fenchelgame certify out/entry/trace.csv
    fenchelgame slope out/summary.csv

The output root is ``--output``, else ``$FENCHELGAME_OUTPUT``, else the
current directory. Each config section other than ``[experiment]`` is one
entry and writes ``<root>/<entry>/{trace.csv,certificates.json,summary.csv}``;
a combined ``<root>/summary.csv`` lists every entry. ``run`` and ``certify``
exit 0 only if every certificate passes.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .audit import certify_all, regret_x_path, regret_y_path
from .classical import (
    accel_fw_run,
    accel_prox_run,
    check_equivalence,
    heavy_ball_run,
    nesterov83_run,
    nesterov_1mem_run,
    nesterov_infmem_run,
)
from .core import make_schedule
from .engine import X_STRATEGIES, Y_STRATEGIES, run_game, with_reference
from .errors import DegenerateFit, FenchelGameError
from .learners import ConstantGamma, LearnerConfig, Nesterov83Gamma, corollary_gamma
from .problems import PROBLEMS, get_problem

__all__ = [
    "OUTPUT_ENV",
    "TRACE_HEADER",
    "SUMMARY_HEADER",
    "ConfigError",
    "ExperimentConfig",
    "RateFit",
    "fit_rate_slope",
    "load_config",
    "run_experiment",
    "write_trace_csv",
    "main",
]

OUTPUT_ENV = "FENCHELGAME_OUTPUT"
TRACE_HEADER = ["t", "alpha_t", "A_t", "f_xbar", "gap", "regret_x", "regret_y", "eps_bound"]
SUMMARY_HEADER = ["entry", "method", "T", "gap", "slope"]
EQUIVALENCE_TOL = 1e-9

METHODS = (
    "accelerated",
    "nesterov83",
    "heavy_ball",
    "nesterov_1mem",
    "nesterov_infmem",
    "linear_rate",
    "accel_prox",
    "accel_fw",
    "game",
)

_PROBLEM_KEYS = {
    "quadratic": {"dim": int, "kappa": float},
    "logsumexp": {"dim": int, "temperature": float, "n_random": int,
                  "anchor_decay": float},
    "l1_composite": {"dim": int, "kappa": float, "lam": float},
    "lasso_1d": {"lam": float, "shift": float},
    "ball_quadratic": {"dim": int, "radius": float, "center_norm": float,
                       "kappa": float},
}
_SEEDED = {"quadratic", "logsumexp", "l1_composite", "ball_quadratic"}

_METHOD_KEYS = {
    "gamma": str,
    "eta": float,
    "alpha0": float,
    "x0_scale": float,
    "y_strategy": str,
    "x_strategy": str,
    "schedule": str,
}
_COMMON_KEYS = {"problem": str, "method": str, "rounds": str, "seed": int}
_EXPERIMENT_KEYS = {"workers": int, "seed": int}


def _fmt(v) -> str:
    return "%.17g" % v


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


class ConfigError(FenchelGameError, ValueError):
    """A config problem, located by file, line and field."""

    def __init__(self, message, path=None, line=None, field=None):
        loc = path or "<config>"
        if line is not None:
            loc += f":{line}"
        if field is not None:
            loc += f": field {field!r}"
        super().__init__(f"{loc}: {message}")
        self.line = line
        self.field = field


@dataclass(frozen=True)
class ExperimentConfig:
    """One validated config entry. ``params`` holds typed values."""

    name: str
    problem: str
    method: str
    rounds: tuple
    seed: int
    problem_params: dict
    method_params: dict


def _line_index(text: str) -> dict:
    """Map (section, key) to 1-based line numbers."""
    index, section = {}, None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            index[(section, None)] = no
        elif section is not None:
            for sep in ("=", ":"):
                if sep in line:
                    index[(section, line.split(sep, 1)[0].strip().lower())] = no
                    break
    return index


def _convert(kind, raw, where):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"expected {kind.__name__}, got {raw!r}", **where) from None


def load_config(path: str):
    """Parse and validate a config file.

    Returns
    -------
    entries : list of ExperimentConfig
    workers : int

    Raises
    ------
    ConfigError
        With the offending line and field.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, path)


def parse_config(text: str, path: str = "<config>"):
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], path=path,
                          line=getattr(exc, "lineno", None)) from None
    lines = _line_index(text)

    def where(section, key=None):
        return {"path": path, "line": lines.get((section, key), lines.get((section, None))),
                "field": key}

    workers, default_seed = 0, 0
    if parser.has_section("experiment"):
        for key, raw in parser.items("experiment"):
            if key not in _EXPERIMENT_KEYS:
                raise ConfigError("unknown key", **where("experiment", key))
            val = _convert(_EXPERIMENT_KEYS[key], raw, where("experiment", key))
            if key == "workers":
                workers = val
            else:
                default_seed = val

    entries = []
    for section in parser.sections():
        if section == "experiment":
            continue
        if not section.replace("_", "").replace("-", "").isalnum():
            raise ConfigError("entry names may use letters, digits, '_' and '-'",
                              **where(section))
        items = dict(parser.items(section))
        for req in ("problem", "method", "rounds"):
            if req not in items:
                raise ConfigError("missing required key", **dict(where(section), field=req))
        problem, method = items["problem"], items["method"]
        if problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {problem!r}", **where(section, "problem"))
        if method not in METHODS:
            raise ConfigError(f"unknown method {method!r}", **where(section, "method"))
        allowed_problem = _PROBLEM_KEYS[problem]
        pparams, mparams = {}, {}
        seed = default_seed
        for key, raw in items.items():
            w = where(section, key)
            if key in _COMMON_KEYS:
                if key == "seed":
                    seed = _convert(int, raw, w)
            elif key in allowed_problem:
                pparams[key] = _convert(allowed_problem[key], raw, w)
            elif key in _METHOD_KEYS:
                mparams[key] = _convert(_METHOD_KEYS[key], raw, w)
            else:
                raise ConfigError("unknown key", **w)
        try:
            rounds = tuple(sorted({int(r) for r in items["rounds"].replace(",", " ").split()}))
        except ValueError:
            raise ConfigError("rounds must be integers", **where(section, "rounds")) from None
        if not rounds or rounds[0] < 1:
            raise ConfigError("rounds must be positive integers", **where(section, "rounds"))
        _check_method_params(method, mparams, lambda k: where(section, k))
        if problem in _SEEDED:
            pparams["seed"] = seed
        entries.append(ExperimentConfig(section, problem, method, rounds, seed,
                                        pparams, mparams))
    if not entries:
        raise ConfigError("no experiment entries", path=path)
    return entries, workers


def _check_method_params(method, mp, where):
    if "gamma" in mp and mp["gamma"] not in ("corollary", "nesterov83"):
        _convert(float, mp["gamma"], where("gamma"))
    if method == "game":
        for key, options in (("y_strategy", Y_STRATEGIES), ("x_strategy", X_STRATEGIES)):
            if mp.get(key) not in options:
                raise ConfigError(f"must be one of {options}", **where(key))
        if mp.get("schedule", "linear") not in ("linear", "constant", "exponential"):
            raise ConfigError("must be linear, constant or exponential", **where("schedule"))
    else:
        for key in ("y_strategy", "x_strategy", "schedule"):
            if key in mp:
                raise ConfigError("only valid with method = game", **where(key))


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def _gamma(choice, L):
    if choice is None or choice == "corollary":
        return corollary_gamma(L)
    if choice == "nesterov83":
        return Nesterov83Gamma(L)
    return ConstantGamma(float(choice))


def _build(entry: ExperimentConfig):
    """Problem, game spec and optional classical counterpart for an entry."""
    problem = get_problem(entry.problem, **entry.problem_params)
    obj = problem.objective
    L = obj.smoothness_L
    mp = entry.method_params
    T = max(entry.rounds)
    x0 = None
    if mp.get("x0_scale"):
        x0 = np.random.default_rng(entry.seed + 1).standard_normal(obj.dim) * mp["x0_scale"]
        if not problem.set.unconstrained and not problem.set.contains(x0):
            x0 = x0 * (0.5 / problem.set.gauge(x0))
    eta = mp.get("eta", 1.0 / (4.0 * L))
    constrained = not problem.set.unconstrained
    m = entry.method
    classical = None
    if m in ("accelerated", "nesterov83", "heavy_ball", "nesterov_1mem"):
        gamma = _gamma(mp.get("gamma", "nesterov83" if m == "nesterov83" else None), L)
        xs = "MirrorDescent" if (constrained or m == "nesterov_1mem") else "OGD"
        y = "FTL" if m == "heavy_ball" else "OFTL"
        spec = problem.spec(T, y_strategy=y, x_strategy=xs,
                            learner_config=LearnerConfig(gamma_schedule=gamma), start_x0=x0)
        if m == "nesterov83":
            classical = lambda: ("nesterov83", nesterov83_run(obj, spec.x0, 1.0 / (4.0 * L), T))
        elif m == "heavy_ball":
            classical = lambda: ("heavy_ball", heavy_ball_run(obj, spec.x0, gamma, T=T))
        elif m == "nesterov_1mem":
            classical = lambda: ("nesterov_1mem",
                                 nesterov_1mem_run(obj, problem.set, None, spec.x0, T))
    elif m == "nesterov_infmem":
        spec = problem.spec(T, x_strategy="BTRL", learner_config=LearnerConfig(eta=eta),
                            start_x0=x0)
        classical = lambda: ("nesterov_infmem",
                             nesterov_infmem_run(obj, problem.set, eta, spec.x0, T))
    elif m == "linear_rate":
        sched = make_schedule("exponential", kappa=max(1.0, obj.condition_number),
                              alpha0=mp.get("alpha0", 1.0))
        spec = problem.spec(T, x_strategy="StronglyConvexBTL", schedule=sched)
    elif m == "accel_prox":
        gamma = _gamma(mp.get("gamma"), L)
        spec = problem.spec(T, x_strategy="ProxMD",
                            learner_config=LearnerConfig(gamma_schedule=gamma), start_x0=x0)
        if isinstance(gamma, ConstantGamma):
            classical = lambda: ("accel_prox", accel_prox_run(
                obj, problem.composite_psi, spec.x0, T, gamma.value))
    elif m == "accel_fw":
        spec = problem.spec(T, x_strategy="FWGauge", learner_config=LearnerConfig(eta=eta),
                            start_x0=x0)
        classical = lambda: ("accel_fw", accel_fw_run(obj, problem.set, eta, spec.x0, T))
    else:
        kind = mp.get("schedule", "linear")
        if kind == "exponential":
            sched = make_schedule(kind, kappa=max(1.0, obj.condition_number),
                                  alpha0=mp.get("alpha0", 1.0))
        else:
            sched = make_schedule(kind)
        cfg = LearnerConfig(gamma_schedule=_gamma(mp.get("gamma"), L), eta=eta)
        spec = problem.spec(T, y_strategy=mp["y_strategy"], x_strategy=mp["x_strategy"],
                            schedule=sched, learner_config=cfg, start_x0=x0)
    return problem, with_reference(spec), classical


def write_trace_csv(trace, stream) -> None:
    """Write the per-round CSV with 17 significant digits."""
    gap = trace.f_xbar - trace.f_star
    rx, ry = regret_x_path(trace), regret_y_path(trace)
    eps = (rx + ry) / trace.A
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for i in range(trace.T):
        writer.writerow([str(i + 1)] + [_fmt(v) for v in (
            trace.alpha[i], trace.A[i], trace.f_xbar[i], gap[i], rx[i], ry[i], eps[i])])


def _equivalence_certs(trace, classical):
    name, state = classical
    out = []
    if state.w is not None:
        rep = check_equivalence(state.w, trace.xbar, EQUIVALENCE_TOL)
        out.append(("w_t = xbar_t", rep))
        z = state.z[:-1] if name == "nesterov83" else state.z
        rep = check_equivalence(z, trace.xtilde, EQUIVALENCE_TOL)
        out.append(("z_t = xtilde_t", rep))
    else:
        out.append(("xbar_t", check_equivalence(state.xbar, trace.xbar, EQUIVALENCE_TOL)))
    return [{"name": f"{name}_equivalence[{label}]", "measured": rep.max_deviation,
             "bound": rep.rel_tol, "slack": rep.rel_tol - rep.max_deviation,
             "pass": rep.passed, "statement": f"max_t ||a_t - b_t||/(1+||b_t||) <= {rep.rel_tol:g}",
             "approximate": False} for label, rep in out]


def run_entry(entry: ExperimentConfig, out_dir: str) -> dict:
    """Run one entry and write its three files into ``out_dir``."""
    problem, spec, classical = _build(entry)
    trace = run_game(spec)
    report, all_pass, rows = [], True, []
    gaps = []
    for T in entry.rounds:
        sub = trace.truncate(T)
        certs = [c.as_dict() for c in certify_all(sub)]
        all_pass &= all(c["pass"] for c in certs)
        report.append({"T": T, "certificates": certs})
        gaps.append((T, float(sub.gap)))
    if classical is not None:
        eq = _equivalence_certs(trace, classical())
        all_pass &= all(c["pass"] for c in eq)
        report.append({"T": max(entry.rounds), "certificates": eq})
    try:
        slope = fit_rate_slope(gaps).slope
        slope_text = _fmt(slope)
    except DegenerateFit:
        slope_text = "exact" if any(g <= 1e-15 for _, g in gaps) else "nan"
    for T, g in gaps:
        rows.append([entry.name, entry.method, str(T), _fmt(g), slope_text])

    with open(os.path.join(out_dir, "trace.csv"), "w", encoding="utf-8", newline="") as fh:
        write_trace_csv(trace, fh)
    with open(os.path.join(out_dir, "certificates.json"), "w", encoding="utf-8") as fh:
        json.dump({"entry": entry.name, "method": entry.method, "problem": entry.problem,
                   "comparator_exact": trace.comparator_exact, "all_pass": all_pass,
                   "rounds": report}, fh, indent=2)
        fh.write("\n")
    with open(os.path.join(out_dir, "summary.csv"), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerows(rows)
    return {"name": entry.name, "all_pass": all_pass, "rows": rows}


def _run_entry_to(args):
    entry, root = args
    tmp = tempfile.mkdtemp(prefix=f".{entry.name}-", dir=root)
    try:
        result = run_entry(entry, tmp)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    final = os.path.join(root, entry.name)
    if os.path.isdir(final):
        shutil.rmtree(final)
    os.replace(tmp, final)
    return result


def run_experiment(config_path: str, output_root: Optional[str] = None,
                   workers: Optional[int] = None) -> tuple:
    """Validate the config, run every entry, write artifacts.

    Returns
    -------
    all_pass : bool
    results : list of dict
    """
    entries, cfg_workers = load_config(config_path)
    root = output_root or os.environ.get(OUTPUT_ENV) or os.getcwd()
    os.makedirs(root, exist_ok=True)
    n = workers if workers is not None else cfg_workers
    n = n or min(len(entries), os.cpu_count() or 1)
    jobs = [(e, root) for e in entries]
    if n <= 1 or len(entries) == 1:
        results = [_run_entry_to(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_run_entry_to, jobs))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for r in results:
        w.writerows(r["rows"])
    tmp = os.path.join(root, ".summary.csv.tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, os.path.join(root, "summary.csv"))
    return all(r["all_pass"] for r in results), results


# ---------------------------------------------------------------------------
# slopes and trace certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float


def fit_rate_slope(points, log_x: bool = True) -> RateFit:
    """Least-squares fit of log(gap) against log(T) (or T if ``log_x`` is
    False).

    Raises
    ------
    DegenerateFit
        With fewer than 3 points or any gap <= 1e-15 (solved to machine
        precision; report it as exact rather than fit it).
    """
    pts = [(float(T), float(g)) for T, g in points]
    if len(pts) < 3:
        raise DegenerateFit("need at least 3 points")
    if any(not g > 1e-15 for _, g in pts):
        raise DegenerateFit("a gap is at machine precision")
    T = np.array([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    x = np.log(T) if log_x else T
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss if ss > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2)


def certify_trace_csv(path: str, tol: float = 1e-7):
    """Re-check a written trace: schema, A_t = A_{t-1} + alpha_t, and
    gap <= eps_bound on every row. Returns (passed, messages)."""
    msgs = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER:
            return False, [f"{path}: header must be {','.join(TRACE_HEADER)}"]
        A_prev, ok, n = 0.0, True, 0
        for lineno, row in enumerate(reader, start=2):
            n += 1
            try:
                t = int(row[0])
                alpha, A, _, gap, _, _, eps = (float(v) for v in row[1:])
            except (ValueError, IndexError):
                return False, [f"{path}:{lineno}: malformed row"]
            if t != n:
                ok = False
                msgs.append(f"{path}:{lineno}: round {t} out of order")
            if A != A_prev + alpha:
                ok = False
                msgs.append(f"{path}:{lineno}: A_t != A_(t-1) + alpha_t")
            if eps - gap < -tol * (1.0 + abs(eps)):
                ok = False
                msgs.append(f"{path}:{lineno}: gap {gap:.6g} exceeds eps_bound {eps:.6g}")
            A_prev = A
    if n == 0:
        return False, [f"{path}: no rows"]
    msgs.append(f"{path}: {n} rounds, {'all certificates pass' if ok else 'FAILED'}")
    return ok, msgs


def slopes_from_summary(path: str) -> list:
    """Fit one slope per (entry, method) group of a summary CSV."""
    groups = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"method", "T", "gap"} - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            key = (row.get("entry", ""), row["method"])
            groups.setdefault(key, []).append((int(row["T"]), float(row["gap"])))
    out = []
    for (entry, method), pts in groups.items():
        try:
            out.append((entry, method, fit_rate_slope(pts)))
        except DegenerateFit as exc:
            out.append((entry, method, exc))
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fenchelgame", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    p_run = sub.add_parser("run", help="run the experiments in a config file")
    p_run.add_argument("config")
    p_run.add_argument("--output", help=f"output root (default ${OUTPUT_ENV} or cwd)")
    p_run.add_argument("--workers", type=int)
    p_cert = sub.add_parser("certify", help="re-check a trace CSV")
    p_cert.add_argument("trace")
    p_cert.add_argument("--tol", type=float, default=1e-7)
    p_slope = sub.add_parser("slope", help="fit log-log slopes from a summary CSV")
    p_slope.add_argument("summary")
    args = parser.parse_args(argv)

    if args.verb == "run":
        try:
            ok, results = run_experiment(args.config, args.output, args.workers)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        except (OSError, FenchelGameError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        for r in results:
            print(f"{r['name']}: {'pass' if r['all_pass'] else 'FAIL'}")
        return 0 if ok else 1
    if args.verb == "certify":
        try:
            ok, msgs = certify_trace_csv(args.trace, args.tol)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for m in msgs:
            print(m)
        return 0 if ok else 1
    try:
        fits = slopes_from_summary(args.summary)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for entry, method, fit in fits:
        label = f"{entry} {method}".strip()
        if isinstance(fit, RateFit):
            print(f"{label}: slope {fit.slope:.4f} intercept {fit.intercept:.4f} r2 {fit.r2:.4f}")
        else:
            print(f"{label}: {fit}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
