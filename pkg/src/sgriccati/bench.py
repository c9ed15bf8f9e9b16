"""Randomized convergence benchmark on the standard test family.

Each trial draws a time-invariant game problem with m1 = m2 = n and two noise
channels, runs the dual-layer solver, verifies the result and records the
outer-round and inner-iteration counts.
"""
from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import RiccatiError, SingularWeight
from .outer import SolveOptions, solve_game_riccati
from .problem import Problem, constant_problem

log = logging.getLogger(__name__)

CSV_HEADER = ["dim", "trial", "seed", "converged", "outer_rounds", "inner_counts",
              "final_residual", "wall_ms"]
INNER_HEADER = ["dim", "trial", "outer_round", "inner_count"]
R21_MODES = ("symmetrize", "transpose")


def trial_seed(master_seed: int, dim: int, trial: int) -> int:
    """64-bit seed derived from (master seed, dimension, trial index)."""
    ss = np.random.SeedSequence([int(master_seed), int(dim), int(trial)])
    return int(ss.generate_state(1, np.uint64)[0])


def _draw(n, rng, r21_mode):
    A = [rng.standard_normal((n, n)) for _ in range(3)]
    H1, H2 = rng.uniform(0, 1, (n, n)), rng.uniform(0, 1, (n, n))
    B01 = 3 * np.eye(n) - 0.5 * H1
    B02 = 7 * np.eye(n) + 0.5 * H2
    B11, B12, B21, B22 = (rng.uniform(0, 0.01, (n, n)) for _ in range(4))
    U11, U22 = rng.uniform(0, 1, (n, n)), rng.uniform(0, 1, (n, n))
    R11 = -4 * np.eye(n) - U11.T @ U11
    R22 = 5 * np.eye(n) + U22.T @ U22
    R12, R21 = rng.uniform(0, 1, (n, n)), rng.uniform(0, 1, (n, n))
    L = rng.uniform(0, 1, (n, 2 * n))
    U = 0.1 * rng.standard_normal((n, n))
    if r21_mode == "symmetrize":
        R12 = 0.5 * (R12 + R21.T)
    R = np.block([[R11, R12], [R12.T, R22]])
    s = np.linalg.svd(R, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise SingularWeight("sampled R is numerically singular")
    M = U.T @ U + 0.1 * np.eye(n) + L @ np.linalg.solve(R, L.T)
    M = 0.5 * (M + M.T)
    return constant_problem(A, [B01, B11, B21], [B02, B12, B22], M, L[:, :n], L[:, n:],
                            R11, R12, R22)


def random_game_problem(n: int, seed: int, r21_mode: str = "symmetrize") -> Problem:
    """Random time-invariant test problem of state dimension ``n``.

    The off-diagonal weight blocks are drawn independently; ``r21_mode``
    chooses between averaging them (``symmetrize``) and discarding the lower
    one (``transpose``).  A numerically singular weight is redrawn from a
    derived sub-seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if r21_mode not in R21_MODES:
        raise ValueError(f"r21_mode must be one of {R21_MODES}")
    for attempt in range(100):
        key = [int(seed)] if attempt == 0 else [int(seed), attempt]
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
        try:
            return _draw(n, rng, r21_mode)
        except SingularWeight:
            log.info("redrawing singular weight (seed %d, attempt %d)", seed, attempt)
    raise SingularWeight(f"no invertible weight after 100 draws (seed {seed})")


@dataclass
class TrialRecord:
    dim: int
    trial: int
    seed: int
    converged: bool
    outer_rounds: int
    inner_counts: list
    final_residual: float
    wall_ms: float
    x_norm: float = float("nan")
    success: bool = False
    lambda_min_R22: float = float("nan")
    lambda_max_Rsharp: float = float("nan")
    stability_margin: float = float("nan")
    aux_residual: float = float("nan")
    min_z_eig: float = float("nan")
    min_x_eig: float = float("nan")
    violations: int = 0
    error: str = ""


@dataclass
class DimStats:
    dim: int
    trials: int
    converged: int
    outer_histogram: dict
    outer_median: float
    outer_variance: float
    inner_quartiles: list
    inner_total_variance: float

    @property
    def convergence_rate(self) -> float:
        return self.converged / self.trials if self.trials else float("nan")


@dataclass
class BenchStats:
    per_dim: dict = field(default_factory=dict)

    @property
    def trials(self) -> int:
        return sum(s.trials for s in self.per_dim.values())


def _run_one(args):
    dim, trial, master_seed, opts, r21_mode = args
    seed = trial_seed(master_seed, dim, trial)
    t0 = time.perf_counter()
    try:
        p = random_game_problem(dim, seed, r21_mode)
        X, trace, rep = solve_game_riccati(p, opts, keep_states=True)
    except RiccatiError as exc:
        trace = getattr(exc, "trace", None)
        counts = trace.inner_counts if trace is not None else []
        return TrialRecord(dim, trial, seed, False, len(counts), counts, float("nan"),
                           1e3 * (time.perf_counter() - t0),
                           error=f"{type(exc).__name__}: {exc}")
    wall = 1e3 * (time.perf_counter() - t0)
    states = trace.states
    return TrialRecord(
        dim, trial, seed, rep.success, trace.outer_rounds, trace.inner_counts,
        rep.grde_residual, wall, x_norm=rep.x_norm, success=rep.success,
        lambda_min_R22=rep.lambda_min_R22, lambda_max_Rsharp=rep.lambda_max_Rsharp,
        stability_margin=rep.stability_margin, aux_residual=rep.aux_residual,
        min_z_eig=min(Z.min_eig() for _, Z in states),
        min_x_eig=min(X_.min_eig() for X_, _ in states),
        violations=rep.monotonicity_violations,
        error="" if rep.success else "; ".join(rep.messages) or "verification failed")


def _quartiles(values):
    return tuple(float(q) for q in np.percentile(values, [25, 50, 75]))


def bench_stats(records) -> BenchStats:
    """Aggregate records per dimension, in (dim, trial) order."""
    stats = BenchStats()
    for dim in sorted({r.dim for r in records}):
        rs = sorted((r for r in records if r.dim == dim), key=lambda r: r.trial)
        ok = [r for r in rs if r.converged]
        hist = {}
        for r in ok:
            hist[r.outer_rounds] = hist.get(r.outer_rounds, 0) + 1
        failed = len(rs) - len(ok)
        if failed:
            hist["failed"] = failed
        rounds = [r.outer_rounds for r in ok]
        depth = max(rounds, default=0)
        quart = []
        for h in range(depth):
            vals = [r.inner_counts[h] for r in ok if len(r.inner_counts) > h]
            quart.append(_quartiles(vals))
        totals = [sum(r.inner_counts) for r in ok]
        stats.per_dim[dim] = DimStats(
            dim, len(rs), len(ok), dict(sorted(hist.items(), key=lambda kv: str(kv[0]))),
            float(np.median(rounds)) if rounds else float("nan"),
            float(np.var(rounds)) if rounds else float("nan"), quart,
            float(np.var(totals)) if totals else float("nan"))
    return stats


def run_trials(dims, trials: int, master_seed: int, opts: SolveOptions | None = None,
               workers: int = 1, r21_mode: str = "symmetrize"):
    """Run ``trials`` problems per dimension.  Returns ``(records, stats)``.

    Results do not depend on ``workers``: every trial has its own derived
    seed and records are returned in (dim, trial) order.
    """
    opts = opts or SolveOptions()
    jobs = [(int(d), t, int(master_seed), opts, r21_mode) for d in dims for t in range(trials)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        records = [_run_one(j) for j in jobs]
    records.sort(key=lambda r: (r.dim, r.trial))
    return records, bench_stats(records)


# --------------------------------------------------------------------------
# reports

def records_csv(records, timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([r.dim, r.trial, r.seed, int(r.converged), r.outer_rounds,
                    ";".join(str(c) for c in r.inner_counts), repr(float(r.final_residual)),
                    f"{r.wall_ms:.3f}" if timing else "0"])
    return buf.getvalue()


def inner_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(INNER_HEADER)
    for r in records:
        for h, c in enumerate(r.inner_counts, start=1):
            w.writerow([r.dim, r.trial, h, c])
    return buf.getvalue()


def summary_text(stats: BenchStats) -> str:
    lines = []
    for dim, s in stats.per_dim.items():
        lines.append(f"dim {dim}: {s.converged}/{s.trials} converged "
                     f"({100 * s.convergence_rate:.1f}%), median outer rounds {s.outer_median:g}, "
                     f"variance {s.outer_variance:.3g}")
        lines.append("  outer-round histogram: "
                     + ", ".join(f"{k}: {v}" for k, v in s.outer_histogram.items()))
        for h, (q1, q2, q3) in enumerate(s.inner_quartiles, start=1):
            lines.append(f"  round {h:2d} inner iterations q1/median/q3: {q1:g}/{q2:g}/{q3:g}")
        lines.append(f"  variance of total inner iterations: {s.inner_total_variance:.3g}")
    return "\n".join(lines) + "\n"


def emit_reports(records, stats: BenchStats, out=None, inner_out=None, summary=None,
                 timing: bool = True):
    """Write the trial CSV, the long-format inner-count CSV and the summary."""
    for path, text in ((out, records_csv(records, timing)), (inner_out, inner_csv(records)),
                       (summary, summary_text(stats))):
        if path is not None:
            with open(path, "w", newline="") as f:
                f.write(text)
