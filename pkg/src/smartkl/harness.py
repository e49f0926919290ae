"""Experiment runner: solve several algorithms on one instance and write CSV reports."""

from __future__ import annotations

import csv
import io as _stdio
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import io as kio
from .geometry import ManifoldKind
from .objective import KlProblem
from .problems import (
    GroundTruthInstance,
    blur_instance,
    expander_instance,
    toy_problem,
    tomography_instance,
)
from .solvers import Algorithm, IterationTrace, SolveResult, SolverConfig, Termination, solve

TRACE_HEADER = "iter,objective,rel_objective,grad_norm,step_size,matvec_count,certificate,inner_backtracks"
SUMMARY_HEADER = (
    "algorithm,termination,iterations,final_objective,final_rel_objective,final_grad_norm,"
    "matvec_count,avg_matvec,hamming,max_abs_error,message"
)
PROBLEM_TAGS = ("toy", "expander", "tomo", "blur", "files")


class CertificateError(ValueError):
    """A trace handed to the certificate report carries no certificate values."""


@dataclass
class ExperimentConfig:
    problem: str = "toy"
    params: dict = field(default_factory=dict)
    algorithms: list[SolverConfig] = field(default_factory=lambda: [SolverConfig()])
    max_iter: int | None = None
    output_dir: Path | None = None
    seed: int = 0
    manifold: ManifoldKind | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.problem not in PROBLEM_TAGS:
            raise ValueError(f"unknown problem {self.problem!r}; expected one of {PROBLEM_TAGS}")
        if not self.algorithms:
            raise ValueError("algorithm list is empty")
        if self.manifold is not None:
            self.manifold = ManifoldKind(self.manifold)
        if self.output_dir is not None:
            self.output_dir = Path(self.output_dir)


@dataclass
class AlgorithmReport:
    label: str
    result: SolveResult
    relative: list[float]
    avg_matvec: float
    hamming: int | None
    max_abs_error: float | None


@dataclass
class ComparisonReport:
    instance: GroundTruthInstance
    x0: np.ndarray
    f_best: float
    runs: dict[str, AlgorithmReport]
    certificates: list[dict] = field(default_factory=list)
    files: list[Path] = field(default_factory=list)

    def relative_table(self) -> dict[str, list[float]]:
        return {k: r.relative for k, r in self.runs.items()}

    def average_matvec_table(self) -> dict[str, float]:
        return {k: r.avg_matvec for k, r in self.runs.items()}


def _int_params(params: Mapping, names) -> dict:
    out = {}
    for k, v in params.items():
        out[k] = int(v) if k in names else float(v) if isinstance(v, str) else v
    return out


def build_instance(tag: str, params: Mapping | None = None, seed: int = 0) -> GroundTruthInstance:
    """Instance for a problem tag; ``files`` loads the directory given as params['path']."""
    params = dict(params or {})
    if tag == "toy":
        return toy_problem()
    if tag == "expander":
        p = _int_params(params, {"m", "n", "col_weight", "sparsity"})
        return expander_instance(seed=seed, **p)
    if tag == "tomo":
        p = _int_params(params, {"image_size", "n_angles"})
        return tomography_instance(seed=seed, **p)
    if tag == "blur":
        p = _int_params(params, {"image_size", "mask"})
        return blur_instance(seed=seed, **p)
    if tag == "files":
        if "path" not in params:
            raise ValueError("problem 'files' needs params['path']")
        return kio.load_instance(params["path"])
    raise ValueError(f"unknown problem {tag!r}")


def with_manifold(inst: GroundTruthInstance, kind: ManifoldKind | str | None) -> GroundTruthInstance:
    if kind is None or ManifoldKind(kind) is inst.problem.kind:
        return inst
    P = KlProblem(inst.problem.A, inst.problem.b, ManifoldKind(kind))
    return GroundTruthInstance(P, inst.x_true, inst.b_clean, inst.noise, inst.seed, inst.name, inst.image_shape, inst.meta)


def relative_history(trace: Sequence[IterationTrace], f_ref: float) -> list[float]:
    """(f_k - f_ref)/(f_0 - f_ref) clamped to [0, 1]; all zeros when f_0 = f_ref."""
    if not trace:
        return []
    f0 = trace[0].objective
    den = f0 - f_ref
    if not den > 0:
        return [0.0] * len(trace)
    return [min(max((t.objective - f_ref) / den, 0.0), 1.0) for t in trace]


def threshold_error(x, x_true) -> int:
    """Hamming distance between (x >= 0.5) and the binary x_true."""
    x = np.asarray(x)
    x_true = np.asarray(x_true)
    if x.shape != x_true.shape:
        raise ValueError(f"length mismatch {x.shape} vs {x_true.shape}")
    return int(np.count_nonzero((x >= 0.5) != (x_true >= 0.5)))


def mean_matvec(trace: Sequence[IterationTrace]) -> float:
    """Counted products per iteration: final matvec_count / iterations."""
    k = len(trace) - 1
    if k <= 0:
        return math.nan
    return trace[-1].matvec_count / k


def average_matvec(traces: Mapping[str, Sequence[IterationTrace]]) -> dict[str, float]:
    return {name: mean_matvec(tr) for name, tr in traces.items()}


def certificate_report(traces: Mapping[str, Sequence[IterationTrace]], gamma_min: float = 1.0) -> list[dict]:
    """Per instance: the gamma series and the first index where gamma reaches ``gamma_min``."""
    rows = []
    for name, tr in traces.items():
        gam = [t.certificate for t in tr]
        if not gam or any(g is None for g in gam):
            raise CertificateError(f"trace {name!r} has iterations without a certificate")
        first = next((i for i, g in enumerate(gam) if g <= gamma_min + 1e-12), None)
        rows.append({"instance": name, "gamma": gam, "first_min_index": first})
    return rows


def certificate_csv(rows: Sequence[dict]) -> str:
    out = _stdio.StringIO()
    out.write("instance,iter,gamma,first_min_index\n")
    for r in rows:
        first = "" if r["first_min_index"] is None else str(r["first_min_index"])
        for k, g in enumerate(r["gamma"]):
            out.write(f"{r['instance']},{k},{g!r},{first}\n")
    return out.getvalue()


def trace_csv(trace: Sequence[IterationTrace], f_ref: float) -> str:
    rel = relative_history(trace, f_ref)
    out = _stdio.StringIO()
    out.write(TRACE_HEADER + "\n")
    for t, r in zip(trace, rel):
        cert = "" if t.certificate is None else repr(float(t.certificate))
        out.write(
            f"{t.iter},{t.objective!r},{r!r},{t.grad_norm!r},{t.step_size!r},"
            f"{t.matvec_count},{cert},{t.inner_backtracks}\n"
        )
    return out.getvalue()


def read_trace_csv(path) -> list[dict]:
    with open(path, newline="", encoding="ascii") as fh:
        return list(csv.DictReader(fh))


def file_label(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", label).strip("_").lower()


def _solve_one(P, x0, cfg):
    try:
        return solve(P, x0, cfg)
    except Exception as exc:  # a failed run must not sink the comparison
        return SolveResult(final_point=np.array(x0), termination=Termination.NUMERICAL_ERROR,
                           algorithm=cfg.label(), message=f"{type(exc).__name__}: {exc}")


def run_experiment(cfg: ExperimentConfig, instance: GroundTruthInstance | None = None) -> ComparisonReport:
    """Solve every configured algorithm from the common barycenter start and write the reports."""
    inst = instance if instance is not None else build_instance(cfg.problem, cfg.params, cfg.seed)
    inst = with_manifold(inst, cfg.manifold)
    P = inst.problem
    x0 = P.manifold.barycenter(P.n)
    configs = [c if cfg.max_iter is None else c.with_(max_iter=cfg.max_iter) for c in cfg.algorithms]
    labels = [c.label() for c in configs]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate algorithm labels in {labels}")
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(lambda c: _solve_one(P, x0, c), configs))
    else:
        results = [_solve_one(P, x0, c) for c in configs]

    finals = [t.objective for r in results for t in r.trace]
    f_best = min(finals) if finals else math.nan
    binary = bool(np.all((inst.x_true == 0) | (inst.x_true == 1)))
    runs = {}
    for label, res in zip(labels, results):
        has_truth = res.trace and np.all(np.isfinite(inst.x_true))
        runs[label] = AlgorithmReport(
            label=label,
            result=res,
            relative=relative_history(res.trace, f_best),
            avg_matvec=mean_matvec(res.trace),
            hamming=threshold_error(res.final_point, inst.x_true) if has_truth and binary else None,
            max_abs_error=float(np.max(np.abs(res.final_point - inst.x_true))) if has_truth else None,
        )

    gamma_min = min((c.e_gamma_min for c in configs if c.algorithm is Algorithm.FSMART_E), default=1.0)
    cert_traces = {
        f"{inst.name or cfg.problem}:{lab}": runs[lab].result.trace
        for lab, c in zip(labels, configs)
        if c.algorithm is Algorithm.FSMART_E and runs[lab].result.trace
    }
    report = ComparisonReport(inst, x0, f_best, runs, certificate_report(cert_traces, gamma_min))
    if cfg.output_dir is not None:
        write_report(report, cfg.output_dir)
    return report


def summary_csv(report: ComparisonReport) -> str:
    out = _stdio.StringIO()
    out.write(SUMMARY_HEADER + "\n")
    for label, r in report.runs.items():
        res = r.result
        last = res.trace[-1] if res.trace else None
        msg = res.message.replace(",", ";").replace("\n", " ")
        cells = [
            label,
            res.termination.value,
            str(res.iterations),
            repr(last.objective) if last else "",
            repr(r.relative[-1]) if r.relative else "",
            repr(last.grad_norm) if last else "",
            str(last.matvec_count) if last else "",
            repr(r.avg_matvec),
            "" if r.hamming is None else str(r.hamming),
            "" if r.max_abs_error is None else repr(r.max_abs_error),
            msg,
        ]
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def write_report(report: ComparisonReport, directory) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    for label, r in report.runs.items():
        p = d / f"trace_{file_label(label)}.csv"
        kio.atomic_write_text(p, trace_csv(r.result.trace, report.f_best))
        written.append(p)
        if report.instance.image_shape is not None:
            p = d / f"recon_{file_label(label)}.pgm"
            kio.write_pgm(p, np.asarray(r.result.final_point).reshape(report.instance.image_shape))
            written.append(p)
    p = d / "summary.csv"
    kio.atomic_write_text(p, summary_csv(report))
    written.append(p)
    if report.certificates:
        p = d / "certificates.csv"
        kio.atomic_write_text(p, certificate_csv(report.certificates))
        written.append(p)
    report.files = written
    return written
