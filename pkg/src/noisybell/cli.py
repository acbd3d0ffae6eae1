"""Command-line front end.

Exit status: 0 success, 2 usage or configuration error, 3 numerical-domain
error, 4 selfcheck failure.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import operator
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import bell, kernels, montecarlo, quantum, selfcheck
from .distributions import OUTCOMES, JointDistribution16
from .errors import DomainError

SCHEMA_VERSION = 1
EXIT_USAGE, EXIT_DOMAIN, EXIT_SELFCHECK = 2, 3, 4


class UsageError(Exception):
    pass


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub,
           ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}


def parse_number(text) -> float:
    """Parse a float or a small arithmetic expression such as ``2*sqrt(2)``."""
    if isinstance(text, (int, float)):
        return float(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id == "sqrt" and len(node.args) == 1 and not node.keywords):
            return math.sqrt(ev(node.args[0]))
        raise ValueError
    try:
        value = ev(ast.parse(str(text).strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, TypeError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return value


def _fmt(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, int):
        return str(x)
    return f"{x:.12g}"


# ---- sweep ---------------------------------------------------------------------

@dataclass
class SweepConfig:
    gamma: float
    s_values: list[float] = field(default_factory=list)
    n_min: int = 1
    n_max: int = 200
    n_step: int = 1
    outputs: str = "both"
    format: str = "csv"
    gauss_limits: str = "corrected"

    def validate(self) -> None:
        if not self.s_values:
            raise UsageError("no S values given (use --S or --state/--settings)")
        if self.n_min < 1 or self.n_max < self.n_min or self.n_step < 1:
            raise UsageError("need 1 <= n-min <= n-max and n-step >= 1")
        if self.outputs not in ("exact", "gauss", "both"):
            raise UsageError(f"outputs must be exact, gauss or both, got {self.outputs!r}")
        if self.format not in ("csv", "json"):
            raise UsageError(f"format must be csv or json, got {self.format!r}")
        if self.gauss_limits not in ("corrected", "literal"):
            raise UsageError(f"gauss-limits must be corrected or literal, got {self.gauss_limits!r}")
        kernels.GammaFactors.equal(self.gamma)
        for S in self.s_values:
            bell.s_prime_distribution(S, self.gamma)


def _curve_point(task):
    S, N, gamma, outputs, corrected = task
    p_exact = bell.exact_violation_probability(N, S, gamma) if outputs != "gauss" else None
    p_gauss = None
    if outputs != "exact":
        try:
            p_gauss = bell.gaussian_violation_probability(N, S, gamma, corrected)
        except DomainError:
            p_gauss = None
    return {"S": S, "N": N, "p_exact": p_exact, "p_gauss": p_gauss}


def violation_curve(config: SweepConfig, workers: int = 1) -> list[dict]:
    """Rows (S, N, p_exact, p_gauss) sorted by S then N."""
    config.validate()
    corrected = config.gauss_limits == "corrected"
    tasks = [
        (S, N, config.gamma, config.outputs, corrected)
        for S in sorted(set(config.s_values))
        for N in range(config.n_min, config.n_max + 1, config.n_step)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_curve_point, tasks, chunksize=64))
    else:
        rows = [_curve_point(t) for t in tasks]
    return sorted(rows, key=lambda r: (r["S"], r["N"]))


def render_rows(rows: list[dict], fmt: str, meta: dict | None = None) -> str:
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, **(meta or {}), "rows": rows}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["S", "N", "p_exact", "p_gauss"])
    for r in rows:
        w.writerow([_fmt(r["S"]), _fmt(r["N"]), _fmt(r["p_exact"]), _fmt(r["p_gauss"])])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, newline="\n")
    else:
        sys.stdout.write(text)


def _s_from_state(args) -> float | None:
    if args.state is None:
        return None
    state = quantum.resolve_state(_maybe_json(args.state))
    settings = quantum.resolve_settings(_maybe_json(args.settings or "chsh-optimal"))
    return quantum.chsh_value(state, settings)


def _maybe_json(value):
    """A catalog name, or a path to a JSON document describing the object."""
    p = Path(value)
    if value.endswith(".json") or p.is_file():
        try:
            return json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read {value}: {exc}") from None
    return value


def cmd_violation_curve(args) -> int:
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(cfg) - set(SweepConfig.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
    gamma = args.gamma if args.gamma is not None else cfg.get("gamma")
    if gamma is None:
        raise UsageError("--gamma is required")
    s_values = list(args.S or [parse_number(s) for s in cfg.get("s_values", [])])
    s_state = _s_from_state(args)
    if s_state is not None:
        s_values.append(s_state)
    config = SweepConfig(
        gamma=parse_number(gamma),
        s_values=s_values,
        n_min=args.n_min if args.n_min is not None else int(cfg.get("n_min", 1)),
        n_max=args.n_max if args.n_max is not None else int(cfg.get("n_max", 200)),
        n_step=args.n_step if args.n_step is not None else int(cfg.get("n_step", 1)),
        outputs=args.outputs or cfg.get("outputs", "both"),
        format=args.format or cfg.get("format", "csv"),
        gauss_limits=args.gauss_limits or cfg.get("gauss_limits", "corrected"),
    )
    rows = violation_curve(config, workers=args.workers)
    _emit(render_rows(rows, config.format, {"gamma": config.gamma}), args.out)
    return 0


# ---- simulate ------------------------------------------------------------------

def simulation_report(args) -> dict:
    if args.S is not None and args.state is not None:
        raise UsageError("give either --S or --state, not both")
    gamma = args.gamma
    gammas = kernels.GammaFactors.equal(gamma)
    if args.state is not None:
        state = quantum.resolve_state(_maybe_json(args.state))
        settings = quantum.resolve_settings(_maybe_json(args.settings or "chsh-optimal"))
        S = quantum.chsh_value(state, settings)
        source = quantum.noisy_joint_distribution(state, settings, gammas)
        source_name = "joint16"
    elif args.S is not None:
        if len(args.S) != 1:
            raise UsageError("simulate takes a single --S")
        S = args.S[0]
        source = bell.s_prime_distribution(S, gamma)
        source_name = "s_prime"
    else:
        raise UsageError("simulate needs --S or --state")
    spec = montecarlo.SimulationSpec(N=args.N, reps=args.reps, seed=args.seed, source=source)
    res = montecarlo.estimate_violation_rate(spec, gamma, workers=args.workers)
    exact = bell.exact_violation_probability(args.N, S, gamma)
    gap = abs(res.empirical_violation_rate - exact)
    band = montecarlo.three_sigma(exact, args.reps)
    return {
        "schema_version": SCHEMA_VERSION,
        "source": source_name,
        "N": args.N,
        "reps": args.reps,
        "seed": args.seed,
        "gamma": gamma,
        "S": S,
        "violation_count": res.violation_count,
        "empirical_violation_rate": res.empirical_violation_rate,
        "s_prime_mean": res.s_prime_mean,
        "s_prime_min": res.s_prime_min,
        "s_prime_max": res.s_prime_max,
        "exact_violation_probability": exact,
        "gap": gap,
        "three_sigma": band,
        "within_three_sigma": bool(gap <= band),
    }


def _render_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    lines = []
    for k, v in report.items():
        if isinstance(v, list):
            v = " ".join(_fmt(x) for x in v)
        elif isinstance(v, float):
            v = _fmt(v)
        lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    report = simulation_report(args)
    _emit(_render_report(report, args.format or "text"), args.out)
    return 0


# ---- invert --------------------------------------------------------------------

def _load_distribution(path: str) -> JointDistribution16:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read distribution {path}: {exc}") from None
    probs = doc.get("probabilities") if isinstance(doc, dict) else doc
    if probs is None:
        raise UsageError("distribution file needs a 'probabilities' array of 16 numbers")
    return JointDistribution16(probs)


def inversion_report(args) -> dict:
    gammas = kernels.GammaFactors.equal(args.gamma)
    report: dict = {"schema_version": SCHEMA_VERSION, "gamma": args.gamma}
    if args.distribution:
        noisy = _load_distribution(args.distribution)
    elif args.state is not None:
        state = quantum.resolve_state(_maybe_json(args.state))
        settings = quantum.resolve_settings(_maybe_json(args.settings or "chsh-optimal"))
        report["S_state"] = quantum.chsh_value(state, settings)
        noisy = quantum.noisy_joint_distribution(state, settings, gammas)
    else:
        raise UsageError("invert needs --state or --distribution")
    quasi = kernels.invert_joint(noisy, gammas)
    s_vals = [bell.s_of_outcome(xi) for xi in OUTCOMES]
    weights = quasi.weights.tolist()
    S = math.fsum(s * q for s, q in zip(s_vals, weights))
    q_plus = math.fsum(q for s, q in zip(s_vals, weights) if s == 2)
    q_minus = math.fsum(q for s, q in zip(s_vals, weights) if s == -2)
    s_quasi_negative = min(q_plus, q_minus) < -1e-12
    report.update({
        "outcomes": [list(xi) for xi in OUTCOMES],
        "quasi_distribution": weights,
        "min_entry": quasi.min_entry,
        "joint_negative": bool(quasi.is_negative),
        "s_quasi": {"+2": q_plus, "-2": q_minus},
        "S": S,
        "violates_bell_bound": abs(S) > 2 * (1 + bell.BOUND_RTOL),
        "negativity": s_quasi_negative,
    })
    return report


def _render_inversion(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    lines = [f"gamma: {_fmt(report['gamma'])}"]
    if "S_state" in report:
        lines.append(f"S (state): {_fmt(report['S_state'])}")
    lines.append("quasi-distribution p(x, y, u, v):")
    for xi, q in zip(report["outcomes"], report["quasi_distribution"]):
        lines.append("  (" + ", ".join(f"{k:+d}" for k in xi) + f"): {_fmt(q)}")
    lines += [
        f"min entry: {_fmt(report['min_entry'])}",
        f"joint negative: {report['joint_negative']}",
        f"p(s=+2): {_fmt(report['s_quasi']['+2'])}",
        f"p(s=-2): {_fmt(report['s_quasi']['-2'])}",
        f"S: {_fmt(report['S'])}",
        f"|S| > 2: {report['violates_bell_bound']}",
        f"NEGATIVITY: {'yes' if report['negativity'] else 'no'}",
    ]
    return "\n".join(lines) + "\n"


def cmd_invert(args) -> int:
    report = inversion_report(args)
    _emit(_render_inversion(report, args.format or "text"), args.out)
    return 0


def cmd_selfcheck(args) -> int:
    results = selfcheck.run_all()
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} suites passed")
    return EXIT_SELFCHECK if failed else 0


# ---- parser --------------------------------------------------------------------

def _positive_int(text) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisybell",
        description="Finite-N statistics of a CHSH test run through a noisy joint measurement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def state_flags(p):
        p.add_argument("--state", help="catalog name (singlet, 00, maximally-mixed, werner:<p>) or JSON file")
        p.add_argument("--settings", help="catalog name (chsh-optimal, all-z) or JSON file")

    c = sub.add_parser("violation-curve", aliases=["curve"],
                       help="violation probability as a function of N")
    c.add_argument("--gamma", type=parse_number)
    c.add_argument("--S", type=parse_number, action="append", help="CHSH value; repeatable")
    state_flags(c)
    c.add_argument("--n-min", type=_positive_int)
    c.add_argument("--n-max", type=_positive_int)
    c.add_argument("--n-step", type=_positive_int)
    c.add_argument("--outputs", choices=("exact", "gauss", "both"))
    c.add_argument("--gauss-limits", choices=("corrected", "literal"),
                   help="integrate over [n_c-1/2, n_f+1/2] (corrected, default) or [n_c, n_f]")
    c.add_argument("--format", choices=("csv", "json"))
    c.add_argument("--config", help="JSON file with sweep fields")
    c.add_argument("--out")
    c.add_argument("--workers", type=_positive_int, default=1)
    c.set_defaults(func=cmd_violation_curve)

    s = sub.add_parser("simulate", help="Monte Carlo estimate of the violation rate")
    s.add_argument("--N", type=_positive_int, required=True)
    s.add_argument("--reps", type=_positive_int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--gamma", type=parse_number, required=True)
    s.add_argument("--S", type=parse_number, action="append")
    state_flags(s)
    s.add_argument("--format", choices=("text", "json"))
    s.add_argument("--out")
    s.add_argument("--workers", type=_positive_int, default=1)
    s.set_defaults(func=cmd_simulate)

    i = sub.add_parser("invert", help="invert the noisy joint distribution")
    i.add_argument("--gamma", type=parse_number, required=True)
    state_flags(i)
    i.add_argument("--distribution", help="JSON file with 16 noisy probabilities")
    i.add_argument("--format", choices=("text", "json"))
    i.add_argument("--out")
    i.set_defaults(func=cmd_invert)

    k = sub.add_parser("selfcheck", help="run the built-in invariant suites")
    k.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except DomainError as exc:
        print(f"noisybell: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
