"""Command-line front end: JSON problem ingestion, CSV/JSON emission.

Commands: membership, bounds, fidelity, purity, geometric, certify,
complexity.  Exit codes: 0 success, 2 input error, 3 resource/budget,
4 solver breakdown.  All outputs are deterministic given the inputs and
tolerances, apart from the wall_time_s column.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import applications as apps
from .bounds import bound_report, complexity_estimate, required_N
from .certify import certify
from .extensions import BudgetExceeded, ExtensionQuery, check_membership
from .operators import HermitianOperator, operator_from_json, pure_state
from .solver import SolverBreakdown

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BUDGET = 3
EXIT_SOLVER = 4


class _InputError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything a command run depends on, resolved from the parsed args."""

    command: str
    input_path: str | None
    n_values: tuple[int, ...]
    ppt: str | bool
    delta: float | None
    tol: float
    max_iter: int
    out: str | None
    seed: int
    jobs: int

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        n_raw = getattr(args, "N", None)
        n_values = tuple(_parse_range(n_raw)) if n_raw is not None else ()
        if n_raw is not None and not n_values:
            raise _InputError("N range is empty")
        delta = getattr(args, "delta", None)
        if delta is not None and not 0.0 < delta < 2.0:
            raise _InputError(f"delta {delta} outside (0, 2)")
        return cls(
            command=args.command,
            input_path=getattr(args, "input", None),
            n_values=n_values,
            ppt=getattr(args, "ppt", False),
            delta=delta,
            tol=args.tol,
            max_iter=args.max_iter,
            out=args.out,
            seed=args.seed,
            jobs=args.jobs,
        )


def _parse_range(text: str) -> list[int]:
    """"2..4" -> [2, 3, 4]; "3" -> [3]; "1,4,6" -> [1, 4, 6]."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        if "," in text:
            return [int(t) for t in text.split(",")]
        return [int(text)]
    except ValueError as exc:
        raise _InputError(f"cannot parse N range {text!r}") from exc


def _read_operator(path: str) -> HermitianOperator:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return operator_from_json(fh.read())
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc
    except (ValueError, json.JSONDecodeError) as exc:
        raise _InputError(f"{path}: {exc}") from exc


def _read_state_vector(path: str) -> HermitianOperator:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        dims = tuple(int(d) for d in data["dims"])
        re = np.array(data["re"], dtype=float).ravel()
        im = np.array(data.get("im", np.zeros_like(re).tolist()), dtype=float).ravel()
        return pure_state(re + 1j * im, dims)
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise _InputError(f"{path}: malformed state vector: {exc}") from exc


def _read_ensemble(path: str) -> apps.EstimationProblem:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        entries = []
        for item in data["ensemble"]:
            enc = operator_from_json(json.dumps(item["encoded"]))
            src = operator_from_json(json.dumps(item["source"]))
            entries.append((float(item["p"]), enc, src))
        return apps.EstimationProblem(tuple(entries))
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise _InputError(f"{path}: malformed ensemble: {exc}") from exc


def _emit(text: str, out_path: str | None):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _sweep_rows(points, worker, jobs: int):
    """Run bound computations (possibly in parallel), keep input order."""
    if jobs <= 1:
        return [worker(pt) for pt in points]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, points))


def _bound_sweep_command(config, make_pair):
    ppt_values = [False, True] if config.ppt == "both" else [config.ppt == "true"]
    points = [(n, ppt) for n in config.n_values for ppt in ppt_values]

    budget_hit = False

    def worker(point):
        n, ppt = point
        t0 = time.perf_counter()
        try:
            pair = make_pair(n, ppt)
            wall = time.perf_counter() - t0
            return (n, ppt, _fmt(pair.upper), _fmt(pair.lower), pair.status, wall)
        except BudgetExceeded:
            return (n, ppt, "", "", "budget_exceeded", time.perf_counter() - t0)

    rows = _sweep_rows(points, worker, config.jobs)
    lines = ["N,ppt,upper,lower,status,wall_time_s"]
    for n, ppt, upper, lower, status, wall in rows:
        if status == "budget_exceeded":
            budget_hit = True
        lines.append(f"{n},{str(ppt).lower()},{upper},{lower},{status},{wall:.3f}")
    _emit("\n".join(lines) + "\n", config.out)
    return EXIT_BUDGET if budget_hit else EXIT_OK


def cmd_membership(config, args) -> int:
    rho = _read_operator(config.input_path)
    if abs(rho.trace() - 1.0) > 1e-8:
        raise _InputError("membership input must be a unit-trace state")
    verdicts = {}
    budget_hit = False
    for n in config.n_values:
        try:
            res = check_membership(
                ExtensionQuery(rho=rho, N=n, ppt=bool(config.ppt)),
                tol=config.tol,
                max_iter=config.max_iter,
            )
            verdicts[str(n)] = res.verdict
        except BudgetExceeded:
            verdicts[str(n)] = "budget_exceeded"
            budget_hit = True
    _emit(json.dumps(verdicts, sort_keys=True) + "\n", config.out)
    return EXIT_BUDGET if budget_hit else EXIT_OK


def cmd_bounds(config, args) -> int:
    header = "dA,dB,N,gN,pc_sym,pc_ppt,R_sym,R_ppt,dtr_sym,dtr_ppt"
    delta_cols = config.delta is not None
    if delta_cols:
        header += (
            ",reqN_sym,reqN_ppt,log10_ops_sym,log10_ops_ppt"
            ",log10_simpl_sym,log10_simpl_ppt"
        )
    lines = [header]
    for n in config.n_values:
        r = bound_report(args.dA, args.dB, n)
        row = ",".join(
            [str(args.dA), str(args.dB), str(n)]
            + [
                _fmt(v)
                for v in (
                    r.g_N,
                    r.p_c_sym,
                    r.p_c_ppt,
                    r.robustness_sym,
                    r.robustness_ppt,
                    r.dist_trace_sym,
                    r.dist_trace_ppt,
                )
            ]
        )
        if delta_cols:
            n_sym = required_N(config.delta, args.dB, ppt=False)
            n_ppt = required_N(config.delta, args.dB, ppt=True)
            ops = complexity_estimate(args.dA, args.dB, config.delta)
            row += "," + ",".join([str(n_sym), str(n_ppt)] + [_fmt(v) for v in ops])
        lines.append(row)
    _emit("\n".join(lines) + "\n", config.out)
    return EXIT_OK


def cmd_fidelity(config, args) -> int:
    if args.bb84 is not None:
        problem = apps.bb84_two_copy_problem(args.bb84)
    elif args.qutrit_grid is not None:
        problem = apps.qutrit_grid_problem(args.qutrit_grid)
    elif config.input_path:
        problem = _read_ensemble(config.input_path)
    else:
        raise _InputError("fidelity needs --bb84, --qutrit-grid, or --input")
    return _bound_sweep_command(
        config, lambda n, ppt: apps.fidelity_bounds(problem, n, ppt, tol=config.tol)
    )


def cmd_purity(config, args) -> int:
    if args.channel == "identity-qubit":
        choi = apps.identity_choi(2)
    elif args.channel == "depolarizing-qubit":
        choi = apps.depolarizing_choi(2, args.p)
    elif args.choi:
        choi = _read_operator(args.choi)
    else:
        raise _InputError("purity needs --channel or --choi")
    return _bound_sweep_command(
        config, lambda n, ppt: apps.output_purity_bounds(choi, n, ppt, tol=config.tol)
    )


def cmd_geometric(config, args) -> int:
    if args.state == "ghz":
        psi = apps.ghz_state()
    elif args.state == "w":
        psi = apps.w_state()
    elif config.input_path:
        psi = _read_state_vector(config.input_path)
    else:
        raise _InputError("geometric needs --state ghz|w or --input")
    return _bound_sweep_command(
        config,
        lambda n, ppt: apps.geometric_entanglement_bounds(psi, n, ppt, tol=config.tol),
    )


def cmd_certify(config, args) -> int:
    rho = _read_operator(config.input_path)
    if abs(rho.trace() - 1.0) > 1e-8:
        raise _InputError("certify input must be a unit-trace state")
    result = certify(rho, maxN=args.maxN, delta=config.delta or 1e-7, seed=config.seed)
    _emit(result.to_json() + "\n", config.out)
    return EXIT_OK


def cmd_complexity(config, args) -> int:
    if config.delta is None:
        raise _InputError("complexity requires --delta")
    sym_ops, ppt_ops, sym_s, ppt_s = complexity_estimate(args.dA, args.dB, config.delta)
    payload = {
        "dA": args.dA,
        "dB": args.dB,
        "delta": config.delta,
        "required_N_sym": required_N(config.delta, args.dB, ppt=False),
        "required_N_ppt": required_N(config.delta, args.dB, ppt=True),
        "log10_ops_sym": sym_ops,
        "log10_ops_ppt": ppt_ops,
        "log10_simplified_sym": sym_s,
        "log10_simplified_ppt": ppt_s,
    }
    _emit(json.dumps(payload, sort_keys=True) + "\n", config.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpskit",
        description="Symmetric-extension hierarchy tests, bounds, and sweeps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_n=True):
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--max-iter", dest="max_iter", type=int, default=200)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        if needs_n:
            p.add_argument("--N", default="2", help="a value, range 2..4, or list 2,3")

    p = sub.add_parser("membership", help="(PPT) Bose symmetric extension tests")
    common(p)
    p.add_argument("--input", required=True, help="operator JSON file")
    p.add_argument("--ppt", action="store_true")
    p.set_defaults(func=cmd_membership)

    p = sub.add_parser("bounds", help="closed-form bound table")
    common(p)
    p.add_argument("--dA", type=int, default=2)
    p.add_argument("--dB", type=int, default=2)
    p.add_argument("--delta", type=float, default=None)
    p.set_defaults(func=cmd_bounds)

    for name, fn in (("fidelity", cmd_fidelity), ("purity", cmd_purity),
                     ("geometric", cmd_geometric)):
        p = sub.add_parser(name, help=f"{name} bound sweep")
        common(p)
        p.add_argument("--ppt", choices=["both", "true", "false"], default="both")
        if name == "fidelity":
            p.add_argument("--bb84", type=float, default=None,
                           help="two-copy BB84 generator with this epsilon")
            p.add_argument("--qutrit-grid", dest="qutrit_grid", type=float,
                           default=None, help="36-state qutrit generator")
            p.add_argument("--input", default=None, help="ensemble JSON file")
        elif name == "purity":
            p.add_argument("--channel",
                           choices=["identity-qubit", "depolarizing-qubit"],
                           default=None)
            p.add_argument("--p", type=float, default=0.0,
                           help="depolarizing probability")
            p.add_argument("--choi", default=None, help="Choi operator JSON file")
        else:
            p.add_argument("--state", choices=["ghz", "w"], default=None)
            p.add_argument("--input", default=None, help="pure-state JSON file")
        p.set_defaults(func=fn)

    p = sub.add_parser("certify", help="rank-loop separability certification")
    common(p, needs_n=False)
    p.add_argument("--input", required=True)
    p.add_argument("--maxN", type=int, default=4)
    p.add_argument("--delta", type=float, default=None)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("complexity", help="required N and operation-count estimates")
    common(p, needs_n=False)
    p.add_argument("--dA", type=int, default=2)
    p.add_argument("--dB", type=int, default=2)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=cmd_complexity)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig.from_args(args)
        return args.func(config, args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except SolverBreakdown as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
