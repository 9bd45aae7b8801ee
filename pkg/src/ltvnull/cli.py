"""Command-line front end.

Subcommands: ``canon``, ``nullify``, ``simulate``, ``discretize``, ``sweep``
and ``check``.  Exit status is 0 on success, 1 for invalid input, 2 when an
algorithm stage fails and 3 when ``check`` finds an invariant violation.

CSV layouts::

    nullify   k,x_1..x_n,y,F
    simulate  k,x_1..x_n,y,u
    sweep     delta,k,min_sv,decoupling,verdict
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import itertools
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr

from . import io
from .canonical import (
    NotControllableError,
    apply_equivalence,
    canonical_transform,
    invariance_residual,
    is_canonical_form,
)
from .generators import random_nullifiable
from .nullifier import (
    NullificationError,
    all_states_bound,
    k0_bound,
    nullify_all,
    nullify_state,
    state_bound,
    trace_violations,
)
from .sampling import (
    CtSystem,
    IntegrationError,
    coeff_matrix_det,
    delta_sweep,
    discretize,
    f_derivative_check,
)
from .scalar import FLOAT, RATIONAL, ScalarPolicy, SingularMatrixError, format_number
from .system import FeedbackSchedule, IndexOutOfRange, LtvSystem, simulate

EXIT_OK, EXIT_INPUT, EXIT_STAGE, EXIT_INVARIANT = 0, 1, 2, 3


class InputError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, module: str, message: str):
        self.module = module
        super().__init__(f"[{module}] {message}")


@dataclass
class RunConfig:
    command: str
    mode: str
    tol: float
    seed: int = 0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in (RATIONAL, FLOAT):
            raise InputError(f"unknown mode {self.mode!r}")
        if not self.tol > 0:
            raise InputError("tolerances must be positive")

    @property
    def policy(self) -> ScalarPolicy:
        return ScalarPolicy(self.mode, self.tol)


DEFAULT_MODE = {"canon": RATIONAL, "nullify": RATIONAL, "simulate": RATIONAL,
                "check": RATIONAL, "discretize": FLOAT, "sweep": FLOAT}


def _real(text: str) -> float:
    """A positive real like ``0.5``, ``3/2`` or ``pi/4``."""
    try:
        value = parse_expr(text, local_dict={"pi": sp.pi}, global_dict={
            "Integer": sp.Integer, "Float": sp.Float, "Rational": sp.Rational})
        return float(value)
    except Exception as exc:
        raise InputError(f"cannot read {text!r} as a number") from exc


def _int_pair(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(p) for p in text.split(","))
    except ValueError as exc:
        raise InputError(f"expected 'lo,hi', got {text!r}") from exc
    if lo > hi:
        raise InputError(f"empty range {text!r}")
    return lo, hi


def _vector(text: str, policy: ScalarPolicy, n: int) -> np.ndarray:
    try:
        vals = [policy.scalar(p) for p in text.split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad vector {text!r}") from exc
    if len(vals) != n:
        raise InputError(f"vector {text!r} has {len(vals)} entries, expected {n}")
    return policy.array(vals)


def _load(path, policy: ScalarPolicy, kind):
    try:
        obj = io.load_system(path, policy)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    if not isinstance(obj, kind):
        want = "discrete" if kind is LtvSystem else "continuous"
        raise InputError(f"{path}: expected a {want} system file")
    return obj


def _emit(text: str, path) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _csv(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v) -> str:
    return "" if v is None else format_number(v)


def _trajectory_rows(traj, last_column):
    rows = []
    for i, x in enumerate(traj.states):
        extra = last_column[i] if i < len(last_column) else None
        rows.append([str(traj.k_start + i)] + [_fmt(v) for v in x]
                    + [_fmt(traj.outputs[i]), _fmt(extra)])
    return rows


def _schedule_doc(schedule: FeedbackSchedule, **extra) -> dict:
    return {"k_start": schedule.k_start, "k_end": schedule.k_end,
            "gains": [format_number(g) for g in schedule.gains], **extra}


def cmd_canon(cfg: RunConfig) -> int:
    o = cfg.options
    sysd = _load(o["system"], cfg.policy, LtvSystem)
    k_range = _int_pair(o["k_range"]) if o.get("k_range") else None
    try:
        res = canonical_transform(sysd, k_range)
    except (NotControllableError, IndexOutOfRange) as exc:
        raise StageError("canonical", str(exc)) from exc
    _emit(io.dumps(io.system_to_dict(res.system)), o.get("out"))
    if o.get("transform"):
        io.write_transform(res.transform, o["transform"])
    print(f"canonical form on [{res.system.k_min}, {res.system.k_max}], "
          f"residual {res.residual:.3g}", file=sys.stderr)
    return EXIT_OK


def cmd_nullify(cfg: RunConfig) -> int:
    o = cfg.options
    sysd = _load(o["system"], cfg.policy, LtvSystem)
    n, k = sysd.n, o["time"]
    horizon = o.get("horizon")
    try:
        if o.get("all"):
            res = nullify_all(sysd, k, seed=cfg.seed, horizon=horizon)
            schedule = res.schedule
            zero = all(v == 0 for v in res.product.reshape(-1)) if cfg.policy.exact else None
            doc = _schedule_doc(schedule, mode=cfg.mode, seed=cfg.seed, steps=len(schedule),
                                bound=all_states_bound(n))
            x0 = (_vector(o["state"], cfg.policy, n) if o.get("state")
                  else cfg.policy.array([1] * n))
            peak = float(np.max(np.abs(res.product.astype(float))))
            status = ("exact zero" if zero else f"max |entry| {peak:.3g}")
            verification = f"closed-loop product over {len(schedule)} steps: {status}"
        else:
            if not o.get("state"):
                raise InputError("give --state or --all")
            x0 = _vector(o["state"], cfg.policy, n)
            res = nullify_state(sysd, k, x0, seed=cfg.seed, horizon=horizon)
            schedule = res.schedule
            doc = _schedule_doc(schedule, mode=cfg.mode, seed=cfg.seed, steps=len(schedule),
                                bound=state_bound(n),
                                k0=None if res.k0 is None else res.k0.k0)
            verification = f"final state after {len(schedule)} steps: " + ",".join(
                _fmt(v) for v in res.trajectory.final)
    except NullificationError as exc:
        raise StageError(f"nullifier:{exc.stage}", str(exc)) from exc
    except (NotControllableError, SingularMatrixError, IndexOutOfRange) as exc:
        raise StageError("canonical", str(exc)) from exc
    traj = simulate(sysd, k, x0, feedback=schedule)
    _emit(io.dumps(doc), o.get("schedule"))
    if o.get("out"):
        header = ["k"] + [f"x_{i + 1}" for i in range(n)] + ["y", "F"]
        Path(o["out"]).write_text(_csv(header, _trajectory_rows(traj, schedule.gains)))
    print(verification, file=sys.stderr if o.get("schedule") in (None, "-") else sys.stdout)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    o = cfg.options
    sysd = _load(o["system"], cfg.policy, LtvSystem)
    n, k = sysd.n, o["time"]
    x0 = _vector(o["state"], cfg.policy, n)
    try:
        if o.get("feedback"):
            doc = json.loads(Path(o["feedback"]).read_text())
            schedule = FeedbackSchedule(int(doc["k_start"]),
                                        tuple(cfg.policy.scalar(g) for g in doc["gains"]))
            traj = simulate(sysd, k, x0, feedback=schedule)
        elif o.get("controls"):
            u = [cfg.policy.scalar(p) for p in o["controls"].split(",")]
            traj = simulate(sysd, k, x0, controls=u)
        else:
            traj = simulate(sysd, k, x0, steps=o.get("steps") or 1)
    except (KeyError, ValueError, OSError) as exc:
        raise InputError(str(exc)) from exc
    except IndexOutOfRange as exc:
        raise StageError("system", str(exc)) from exc
    header = ["k"] + [f"x_{i + 1}" for i in range(n)] + ["y", "u"]
    _emit(_csv(header, _trajectory_rows(traj, traj.controls)), o.get("out"))
    return EXIT_OK


def cmd_discretize(cfg: RunConfig) -> int:
    o = cfg.options
    ct = _load(o["system"], cfg.policy, CtSystem)
    delta = _real(o["delta"])
    if not delta > 0:
        raise InputError("--delta must be positive")
    try:
        sampled = discretize(ct, delta, _int_pair(o["k_range"]), cfg.tol, cfg.policy)
    except IntegrationError as exc:
        raise StageError("sampling", str(exc)) from exc
    _emit(io.dumps(io.system_to_dict(sampled.system)), o.get("out"))
    print(f"worst Liouville residual {sampled.worst_liouville:.3g}", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    o = cfg.options
    ct = _load(o["system"], cfg.policy, CtSystem)
    lo, hi, steps = _real(o["delta_min"]), _real(o["delta_max"]), o["steps"]
    if not 0 < lo <= hi or steps < 1:
        raise InputError("need 0 < delta-min <= delta-max and steps >= 1")
    grid = np.linspace(lo, hi, steps) if steps > 1 else np.array([lo])
    report = delta_sweep(ct, grid, _int_pair(o["k_range"]), cfg.tol, rank_tol=cfg.tol,
                         workers=o.get("workers") or 1)
    _emit(_csv(["delta", "k", "min_sv", "decoupling", "verdict"], report.csv_rows()),
          o.get("out"))
    bad = report.failures()
    print(f"{len(grid)} periods, {len(bad)} without full rank"
          + (f": {', '.join(repr(d) for d in bad[:5])}" if bad else ""), file=sys.stderr)
    return EXIT_OK


def _check_system(sysd: LtvSystem, seed: int, out: list) -> None:
    """Canonical structure, invariance and construction claims for one system."""
    n = sysd.n
    canon = canonical_transform(sysd)
    out.append(("canonical structure", is_canonical_form(canon.system)))
    if sysd.policy.exact:
        back = apply_equivalence(sysd, canon.transform)
        same = all((back.A_at(k) == canon.system.A_at(k)).all()
                   and (back.b_at(k) == canon.system.b_at(k)).all()
                   and (back.c_at(k) == canon.system.c_at(k)).all()
                   for k in canon.system.indices())
        out.append(("equivalence residual zero", same))
    res = invariance_residual(sysd, canon.system, canon.transform)
    if sysd.policy.exact:
        ok = all(v == 0 for v in res.values())
    else:
        ok = max(abs(float(v)) for v in res.values()) <= 1e-8
    out.append(("decoupling invariance", ok))
    rng = np.random.default_rng(seed)
    x0 = sysd.policy.array(rng.integers(-3, 4, n))
    if all(v == 0 for v in x0):
        x0[0] = sysd.policy.scalar(1)
    try:
        r = nullify_state(sysd, sysd.k_min, x0, seed=seed, shortest=False)
    except NullificationError:
        out.append(("nullification", False))
        return
    out.append(("nullification within bound", len(r.schedule) <= state_bound(n)))
    if r.trace is not None:
        out.append(("d(k) monotone, d <= n", not trace_violations(r.trace)))
        out.append(("k0 within bound", r.k0.k0 <= k0_bound(n)))


def _check_combinatorics(out: list) -> None:
    ks = [Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2), Fraction(10)]
    positive = True
    for n in range(1, 5):
        for m in itertools.combinations(range(1, 9), n):
            positive &= all(coeff_matrix_det(k, m) > 0 for k in ks)
    out.append(("coeff_matrix_det > 0", positive))
    cases = [(["1", "t"], 0, 3), (["1", "t", "t^2"], 1, 6), (["1 + t", "t^3 - 2*t"], "1/2", 5)]
    out.append(("f-derivative identity",
                all(f_derivative_check(p, k, m).agrees for p, k, m in cases)))


def cmd_check(cfg: RunConfig) -> int:
    o = cfg.options
    results = []
    try:
        if o.get("system"):
            _check_system(_load(o["system"], cfg.policy, LtvSystem), cfg.seed, results)
        else:
            rng = np.random.default_rng(cfg.seed)
            for i in range(o.get("count") or 5):
                sysd = random_nullifiable(rng, int(rng.integers(1, 4))).with_policy(cfg.policy)
                _check_system(sysd, cfg.seed + i, results)
    except (NotControllableError, IndexOutOfRange) as exc:
        raise StageError("canonical", str(exc)) from exc
    _check_combinatorics(results)
    summary = {}
    for name, ok in results:
        summary[name] = summary.get(name, True) and bool(ok)
    for name, ok in summary.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return EXIT_OK if all(summary.values()) else EXIT_INVARIANT


COMMANDS = {"canon": cmd_canon, "nullify": cmd_nullify, "simulate": cmd_simulate,
            "discretize": cmd_discretize, "sweep": cmd_sweep, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ltvnull",
                                description="Canonical forms, output-feedback nullification "
                                            "and sampling of LTV SISO systems")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp_, system_required=True):
        sp_.add_argument("--system", required=system_required, help="system JSON file")
        sp_.add_argument("--mode", choices=[RATIONAL, FLOAT], default=None)
        sp_.add_argument("--tol", type=float, default=1e-10,
                         help="float-mode zero / rank tolerance (default 1e-10)")
        sp_.add_argument("--seed", type=int, default=0)
        return sp_

    c = common(sub.add_parser("canon", help="controller canonical form"))
    c.add_argument("--k-range", help="output range 'lo,hi' (default: largest supported)")
    c.add_argument("--out", help="canonical system file (default stdout)")
    c.add_argument("--transform", help="transform file")

    c = common(sub.add_parser("nullify", help="memoryless output-feedback nullification"))
    c.add_argument("--time", type=int, required=True)
    g = c.add_mutually_exclusive_group(required=True)
    g.add_argument("--all", action="store_true", help="nullify every initial state")
    g.add_argument("--state", help="initial state 'v1,...,vn'")
    c.add_argument("--trajectory-state", dest="traj_state",
                   help="with --all: state whose trajectory goes to --out (default all ones)")
    c.add_argument("--horizon", type=int, default=None)
    c.add_argument("--schedule", help="schedule JSON file (default stdout)")
    c.add_argument("--out", help="trajectory CSV: k,x_1..x_n,y,F")

    c = common(sub.add_parser("simulate", help="open- or closed-loop simulation"))
    c.add_argument("--time", type=int, required=True)
    c.add_argument("--state", required=True)
    g = c.add_mutually_exclusive_group()
    g.add_argument("--controls", help="u values 'u0,u1,...'")
    g.add_argument("--feedback", help="schedule JSON written by nullify")
    c.add_argument("--steps", type=int, help="zero-input steps")
    c.add_argument("--out", help="CSV: k,x_1..x_n,y,u (default stdout)")

    c = common(sub.add_parser("discretize", help="zero-order-hold sampling"))
    c.add_argument("--delta", required=True)
    c.add_argument("--k-range", required=True, help="'lo,hi'")
    c.add_argument("--out")

    c = common(sub.add_parser("sweep", help="controllability over a grid of periods"))
    c.add_argument("--delta-min", required=True)
    c.add_argument("--delta-max", required=True)
    c.add_argument("--steps", type=int, required=True)
    c.add_argument("--k-range", default="0,0")
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--out", help="CSV: delta,k,min_sv,decoupling,verdict (default stdout)")

    c = common(sub.add_parser("check", help="run the invariant suite"), system_required=False)
    c.add_argument("--count", type=int, default=5, help="random systems when no --system")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    opts = {k: v for k, v in vars(args).items() if k not in ("command", "mode", "tol", "seed")}
    if args.command == "nullify" and args.all:
        opts["state"] = opts.pop("traj_state", None)
    return RunConfig(args.command, args.mode or DEFAULT_MODE[args.command], args.tol,
                     args.seed, opts)


def run(cfg: RunConfig) -> int:
    try:
        return COMMANDS[cfg.command](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
