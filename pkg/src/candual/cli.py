"""Command-line driver: problem ingestion, experiment orchestration, output.

Exit codes: 0 success, 2 input error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .core import load_problem
from .inner import InfeasibleProblemError
from .instances import planted_quartic
from .outer import (
    HISTORY_COLUMNS,
    OuterConfig,
    SaddleResult,
    Schedule,
    interior_solve,
    solve_and_refine,
)
from .refine import local_minimize
from .snl import (
    build_problem,
    generate_instance,
    instance_to_dict,
    load_instance,
    rmsd,
    save_instance,
    write_positions_csv,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3


def _add_solver_flags(p: argparse.ArgumentParser, max_outer_default: int = 200) -> None:
    p.add_argument("--rho0", type=float, default=0.1, help="proximal weight (default 0.1)")
    p.add_argument(
        "--schedule", choices=("constant", "harmonic"), default="constant",
        help="proximal weight schedule (default constant)",
    )
    p.add_argument("--mu-ratio", type=float, default=0.1, help="cone relaxation ratio mu/rho")
    p.add_argument("--eps", type=float, default=1e-6, help="dual step stopping tolerance")
    p.add_argument("--eps-canonical", type=float, default=1e-4, help="certificate tolerance")
    p.add_argument("--max-outer", type=int, default=max_outer_default, help="outer iteration cap")
    p.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    p.add_argument(
        "--refine", action=argparse.BooleanOptionalAction, default=True,
        help="apply gradient refinement to the solver output (default on)",
    )
    p.add_argument("--fast-path", action="store_true", help="try the interior dual solve first")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")


def _schedule_config(args) -> tuple[Schedule, OuterConfig]:
    schedule = Schedule(kind=args.schedule, rho0=args.rho0, mu_ratio=args.mu_ratio)
    config = OuterConfig(
        eps_step=args.eps, max_outer=args.max_outer, eps_canonical=args.eps_canonical
    )
    return schedule, config


def _result_dict(result: SaddleResult) -> dict:
    return {
        "x": result.x_bar.tolist(),
        "s": result.s_bar.tolist(),
        "primal_value": result.primal_value,
        "primal_raw": result.primal_raw,
        "dual_value": result.dual_value,
        "canonical_residual": result.canonical_residual,
        "equilibrium_residual": result.equilibrium_residual,
        "min_eig_G": result.min_eig_G,
        "degeneracy": result.degeneracy,
        "status": result.status,
        "certificate": result.certificate,
        "outer_iters": result.outer_iters,
        "refine_iters": result.refine_iters,
        "descent_violations": result.descent_violations,
    }


def _write_history(path: Path, result: SaddleResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_COLUMNS)
        for rec in result.history:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in rec.as_tuple()])


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_solve(args) -> int:
    try:
        problem = load_problem(args.problem)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    schedule, config = _schedule_config(args)
    args.out.mkdir(parents=True, exist_ok=True)

    result = None
    if args.fast_path:
        try:
            result = interior_solve(problem)
        except InfeasibleProblemError as exc:
            print(f"error: interior solve failed: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        if result.status == "boundary-detected":
            result = None  # fall back to the perturbed loop
    if result is None:
        try:
            result = solve_and_refine(
                problem,
                schedule,
                config,
                refine="always" if args.refine else "never",
                seed=args.seed,
            )
        except InfeasibleProblemError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_SOLVER

    _write_json(args.out / "result.json", _result_dict(result))
    _write_history(args.out / "history.csv", result)
    if result.status == "diverged":
        print(
            f"solver diverged after {result.outer_iters} iterations "
            f"(|x| exceeded the divergence bound)",
            file=sys.stderr,
        )
        return EXIT_SOLVER
    print(
        f"status={result.status} certificate={result.certificate} "
        f"P={result.primal_value:.6e} outer_iters={result.outer_iters}"
    )
    return EXIT_OK


def cmd_quartic_bench(args) -> int:
    if args.n < 1 or args.m < 1:
        print("error: n and m must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    schedule, config = _schedule_config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    rows = []
    successes = 0
    for seed in range(args.seed, args.seed + args.runs):
        problem, x_true = planted_quartic(args.n, args.m, seed)
        result = solve_and_refine(
            problem, schedule, config, refine="always" if args.refine else "never", seed=seed
        )
        dev = min(
            float(np.max(np.abs(result.x_bar - x_true))),
            float(np.max(np.abs(result.x_bar + x_true))),
        )
        success = dev <= 1e-4
        successes += success
        rows.append(
            {
                "seed": seed,
                "primal_pre": result.primal_raw,
                "primal_post": result.primal_value,
                "max_dev": dev,
                "success": int(success),
                "status": result.status,
            }
        )
    out_csv = args.out / "quartic_bench.csv"
    with open(out_csv, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()}
            )
    rate = successes / len(rows)
    print(f"success rate: {successes}/{len(rows)} = {rate:.2f} (written to {out_csv})")
    return EXIT_OK


def cmd_snl_gen(args) -> int:
    if args.sensors < 1:
        print("error: need at least one sensor", file=sys.stderr)
        return EXIT_INPUT
    inst = generate_instance(
        n_sensors=args.sensors,
        dim=args.dim,
        radio_range=args.range,
        sigma=args.sigma,
        seed=args.seed,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "instance.json"
    save_instance(inst, path)
    if not inst.is_connected():
        print("warning: generated network is not connected to the anchors", file=sys.stderr)
    print(
        f"wrote {path} ({args.sensors} sensors, {len(inst.sensor_edges)} sensor edges, "
        f"{len(inst.anchor_edges)} anchor edges)"
    )
    return EXIT_OK


def cmd_snl_solve(args) -> int:
    try:
        inst = load_instance(args.instance)
        problem = build_problem(inst)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    schedule, config = _schedule_config(args)
    rng = np.random.default_rng(args.seed)
    config = OuterConfig(
        eps_step=config.eps_step,
        max_outer=config.max_outer,
        eps_canonical=config.eps_canonical,
        x0=rng.uniform(0.0, 1.0, size=problem.n),  # sensors live in the unit box
    )
    try:
        result = solve_and_refine(
            problem, schedule, config, refine="always" if args.refine else "never", seed=args.seed
        )
    except InfeasibleProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    args.out.mkdir(parents=True, exist_ok=True)
    estimated = result.x_bar.reshape(inst.n_sensors, inst.dim)
    write_positions_csv(args.out / "positions.csv", estimated, inst.true_positions)
    payload = _result_dict(result)
    if inst.true_positions is not None:
        payload["rmsd"] = rmsd(estimated, inst.true_positions)
    _write_json(args.out / "result.json", payload)
    _write_history(args.out / "history.csv", result)
    if result.status == "diverged":
        print("solver diverged", file=sys.stderr)
        return EXIT_SOLVER
    msg = f"status={result.status} P={result.primal_value:.6e}"
    if "rmsd" in payload:
        msg += f" rmsd={payload['rmsd']:.6e}"
    print(msg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="candual",
        description="Canonical primal-dual solver for composite-quadratic minimization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a problem JSON file")
    p_solve.add_argument("problem", type=Path, help="problem JSON file")
    _add_solver_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("quartic-bench", help="planted quartic benchmark")
    p_bench.add_argument("--n", type=int, required=True, help="primal dimension")
    p_bench.add_argument("--m", type=int, required=True, help="number of quadratic terms")
    p_bench.add_argument("--runs", type=int, default=10, help="number of seeded runs")
    _add_solver_flags(p_bench, max_outer_default=50)
    p_bench.set_defaults(func=cmd_quartic_bench)

    p_snl = sub.add_parser("snl", help="sensor network localization")
    snl_sub = p_snl.add_subparsers(dest="snl_command", required=True)

    p_gen = snl_sub.add_parser("gen", help="generate a random instance")
    p_gen.add_argument("--sensors", type=int, required=True)
    p_gen.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p_gen.add_argument("--range", type=float, default=0.3, help="radio range")
    p_gen.add_argument("--sigma", type=float, default=0.0, help="noise parameter")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", type=Path, default=Path("."))
    p_gen.set_defaults(func=cmd_snl_gen)

    p_ssolve = snl_sub.add_parser("solve", help="solve an instance JSON file")
    p_ssolve.add_argument("instance", type=Path)
    _add_solver_flags(p_ssolve)
    p_ssolve.set_defaults(func=cmd_snl_solve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad flags, which matches our input-error code
        return int(exc.code) if exc.code is not None else EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
