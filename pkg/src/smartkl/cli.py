"""Command-line front end: ``smartkl {generate,solve,compare,certify}``."""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

from . import io as kio
from . import harness
from .solvers import Algorithm, SolverConfig, Termination

_ALG_RE = re.compile(r"^\s*([A-Za-z-]+)\s*(?:[(:]\s*([A-Za-z]+)\s*\)?)?\s*$")
_RUN_KEYS = {"problem", "max_iter", "seed", "manifold", "tol", "out", "algorithm", "algorithms"}

def parse_algorithm(text: str, base: SolverConfig | None = None) -> SolverConfig:
    """'SMART', 'rg-cg', 'RG-CG(PR)' or 'RG-CG:PR' to a config built on ``base``."""
    m = _ALG_RE.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse algorithm {text!r}")
    base = base or SolverConfig()
    try:
        cfg = base.with_(algorithm=Algorithm(m.group(1).upper()))
        if m.group(2):
            if cfg.algorithm is not Algorithm.RG_CG:
                raise ValueError("only RG-CG takes a beta rule")
            cfg = cfg.with_(cg_beta_rule=m.group(2).upper())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{text!r}: {exc}") from None
    return cfg

def _kv(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()

def _load_config(path) -> tuple[dict, dict, dict]:
    """Split a key=value file into run keys, problem params (param.*) and solver options."""
    run, params, solver = {}, {}, {}
    for k, v in (kio.read_metadata(path) if path else {}).items():
        if k.startswith("param."):
            params[k[6:]] = v
        elif k in _RUN_KEYS:
            run[k] = v
        else:
            solver[k] = v
    return run, params, solver

def _experiment(args, algorithms_text: list[str]) -> harness.ExperimentConfig:
    run, params, solver_opts = _load_config(args.config)
    params.update(dict(args.param or []))
    problem = args.problem or run.get("problem", "toy")
    if Path(problem).is_dir():
        params["path"] = problem
        problem = "files"
    base = SolverConfig.from_mapping(solver_opts)
    tol = args.tol if args.tol is not None else run.get("tol")
    if tol is not None:
        base = base.with_(grad_tol=float(tol))
    max_iter = args.max_iter if args.max_iter is not None else run.get("max_iter")
    if not algorithms_text:
        algorithms_text = [a for a in re.split(r"[,\s]+", run.get("algorithms", run.get("algorithm", "SMART"))) if a]
    algs = [parse_algorithm(a, base) for a in algorithms_text]
    seed = args.seed if args.seed is not None else int(run.get("seed", 0))
    return harness.ExperimentConfig(
        problem=problem,
        params=params,
        algorithms=algs,
        max_iter=None if max_iter is None else int(max_iter),
        output_dir=args.out or run.get("out"),
        seed=seed,
        manifold=args.manifold or run.get("manifold"),
        jobs=getattr(args, "jobs", 1),
    )

def _print_summary(report: harness.ComparisonReport, out) -> None:
    out.write(f"instance {report.instance.name or '-'}: m={report.instance.A.shape[0]} "
              f"n={report.instance.A.shape[1]} L={report.instance.problem.L:g} f_best={report.f_best:.6e}\n")
    for label, r in report.runs.items():
        res = r.result
        last = res.trace[-1] if res.trace else None
        parts = [f"{label:<12}", f"{res.termination.value:<14}", f"iters={res.iterations:<6}"]
        if last:
            parts += [f"f={last.objective:.6e}", f"rel={r.relative[-1]:.3e}", f"avg_mv={r.avg_matvec:.3f}"]
        if r.hamming is not None:
            parts.append(f"hamming={r.hamming}")
        if res.message:
            parts.append(f"({res.message})")
        out.write("  ".join(parts) + "\n")
    for row in report.certificates:
        out.write(f"certificate {row['instance']}: gamma_final={row['gamma'][-1]:.4g} "
                  f"first_min_index={row['first_min_index']}\n")
    if report.files:
        out.write(f"wrote {len(report.files)} files to {report.files[0].parent}\n")

def cmd_generate(args) -> int:
    run, params, _ = _load_config(args.config)
    params.update(dict(args.param or []))
    problem = args.problem or run.get("problem", "toy")
    seed = args.seed if args.seed is not None else int(run.get("seed", 0))
    inst = harness.build_instance(problem, params, seed)
    inst = harness.with_manifold(inst, args.manifold)
    out = args.out or run.get("out")
    if not out:
        raise SystemExit("generate needs --out")
    kio.save_instance(inst, out)
    print(f"wrote {problem} instance (m={inst.A.shape[0]}, n={inst.A.shape[1]}, nnz={inst.A.nnz}) to {out}")
    return 0

def cmd_solve(args) -> int:
    report = harness.run_experiment(_experiment(args, [args.algorithm] if args.algorithm else []))
    _print_summary(report, sys.stdout)
    return 0 if all(r.result.termination is not Termination.NUMERICAL_ERROR for r in report.runs.values()) else 2

def cmd_compare(args) -> int:
    algs = [a for chunk in (args.algorithm or []) for a in chunk.split(",") if a]
    report = harness.run_experiment(_experiment(args, algs))
    _print_summary(report, sys.stdout)
    return 0

def cmd_certify(args) -> int:
    cfg = _experiment(args, ["FSMART-E"])
    sweep_key, sweep_vals = (args.sweep or (None, ""))
    values = [v for v in sweep_vals.split(",") if v] or [None]
    rows = []
    for v in values:
        params = dict(cfg.params)
        if sweep_key:
            params[sweep_key] = v
        sub = harness.ExperimentConfig(
            problem=cfg.problem, params=params, algorithms=cfg.algorithms, max_iter=cfg.max_iter,
            seed=cfg.seed, manifold=cfg.manifold,
        )
        rep = harness.run_experiment(sub)
        for row in rep.certificates:
            if sweep_key:
                row["instance"] = f"{row['instance']}[{sweep_key}={v}]"
            rows.append(row)
    for row in rows:
        print(f"{row['instance']}: gamma_0={row['gamma'][0]:g} gamma_final={row['gamma'][-1]:.4g} "
              f"first_min_index={row['first_min_index']}")
    if cfg.output_dir:
        path = Path(cfg.output_dir) / "certificates.csv"
        kio.atomic_write_text(path, harness.certificate_csv(rows))
        print(f"wrote {path}")
    return 0

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smartkl", description="KL regression solvers over the orthant, box and simplex.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--problem", help="toy | expander | tomo | blur | path to an instance directory")
        p.add_argument("--param", action="append", type=_kv, metavar="KEY=VALUE", help="generator parameter")
        p.add_argument("--manifold", choices=["orthant", "box", "simplex"])
        p.add_argument("--max-iter", type=int, dest="max_iter")
        p.add_argument("--tol", type=float, help="gradient-norm tolerance")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--config", help="key=value file (solver options, param.*, run keys)")

    p = sub.add_parser("generate", help="write an instance directory")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="run one algorithm")
    common(p)
    p.add_argument("--algorithm", help="e.g. SMART, FSMART-G, RG-CG(PR)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="run several algorithms from a common start")
    common(p)
    p.add_argument("--algorithm", action="append", help="comma-separated list; may repeat")
    p.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("certify", help="FSMART-E exponent certificates")
    common(p)
    p.add_argument("--sweep", type=_kv, metavar="KEY=V1,V2,...", help="one instance per value")
    p.set_defaults(func=cmd_certify)
    return ap

def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(f"smartkl: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"smartkl: error: {exc}", file=sys.stderr)
        return 1

if __name__ == "__main__":
    sys.exit(main())
