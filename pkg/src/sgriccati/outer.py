"""Dual-layer iteration for the stabilizing solution of the game Riccati equation.

Round h solves a definite Riccati problem for the increment Z^h around the
accumulated iterate X^h and sets X^{h+1} = X^h + Z^h.  The increments are
positive semidefinite, so the iterates increase monotonically to the
stabilizing solution.
"""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

from .errors import DomainViolation, MaxOuterIterations, RiccatiError
from .inner import InnerOptions, build_initial_spec, build_inner_spec, solve_definite_riccati
from .lyapunov import ClosedLoopCoeffs, ems_stable
from .operators import _F, aux_gains_from_solution, aux_residual, closed_loop, residual_field
from .problem import DEFAULT_NODES, Problem, dom_G_membership, validate_problem
from .solution import PeriodicSymSolution, zeros_like_problem

log = logging.getLogger(__name__)

CHECK_LEVELS = ("off", "cheap", "full")
PSD_TOL = 1e-8
RESIDUAL_RTOL = 1e-6


class InvalidProblem(RiccatiError):
    """The problem fails structural validation."""


@dataclass(frozen=True)
class SolveOptions:
    outer_tolerance: float = 1e-8
    max_outer: int = 50
    nodes: int = DEFAULT_NODES
    inner: InnerOptions = field(default_factory=InnerOptions)
    check_level: str = "cheap"
    # "v": projected previous increment; "defect": residual of the iterate
    source: str = "v"

    def __post_init__(self):
        if not self.outer_tolerance > 0 or not self.inner.tol > 0:
            raise ValueError("tolerances must be positive")
        if self.max_outer < 1 or self.inner.max_iter < 1 or self.nodes < 16:
            raise ValueError("caps must be >= 1 and nodes >= 16")
        if self.check_level not in CHECK_LEVELS:
            raise ValueError(f"check_level must be one of {CHECK_LEVELS}")


@dataclass(frozen=True)
class RoundRecord:
    h: int
    inner_iterations: int
    z_sup_norm: float
    z_min_eig: float
    x_min_eig: float
    residual: float
    in_domain: bool
    initial_gain: str
    wall_time: float


@dataclass
class IterationTrace:
    rounds: list = field(default_factory=list)
    converged: bool = False

    @property
    def outer_rounds(self) -> int:
        return len(self.rounds)

    @property
    def inner_counts(self) -> list:
        return [r.inner_iterations for r in self.rounds]

    def to_dict(self) -> dict:
        return {"converged": self.converged, "rounds": [asdict(r) for r in self.rounds]}


@dataclass
class VerificationReport:
    grde_residual: float
    x_norm: float
    lambda_min_R22: float
    lambda_max_Rsharp: float
    in_domain: bool
    stability_margin: float
    stable: bool
    aux_residual: float
    monotonicity_violations: int = 0
    messages: list = field(default_factory=list)

    @property
    def residual_ok(self) -> bool:
        return self.grde_residual <= RESIDUAL_RTOL * (1.0 + self.x_norm)

    @property
    def success(self) -> bool:
        return bool(self.residual_ok and self.in_domain and self.stable)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["success"] = self.success
        return out


def _nan_report(msg, x_norm=float("nan")):
    nan = float("nan")
    return VerificationReport(nan, x_norm, nan, nan, False, nan, False, nan, 0, [msg])


def verify_solution(p: Problem, X: PeriodicSymSolution, nodes: int = DEFAULT_NODES
                    ) -> VerificationReport:
    """Residual, sign conditions, closed-loop stability and the auxiliary identity.

    Never raises on numerical failure; the report carries it instead.
    """
    if X.n != p.dims.n:
        return _nan_report(f"solution is {X.n}x{X.n}, problem has n={p.dims.n}")
    if (X.period is not None) and (p.period is None or abs(X.period - p.period) > 0):
        return _nan_report("solution period does not match the problem")
    if not X.is_constant:
        nodes = X.nodes
    x_norm = X.sup_norm()
    messages = []
    dom = dom_G_membership(p, X, nodes)
    if dom.diagnostic:
        messages.append(dom.diagnostic)
    try:
        res = residual_field(p, X, nodes, check_domain=False).sup_norm
    except RiccatiError as exc:
        res = float("inf")
        messages.append(f"residual: {exc}")

    try:
        if p.period is None:
            c = p.at(0.0)
            coeffs = ClosedLoopCoeffs.constant(closed_loop(c, _F(c, X.samples)))
        else:
            coeffs = ClosedLoopCoeffs.periodic(
                lambda t: closed_loop(p.at(t), _F(p.at(t), X.at(t))), p.dims.n, p.period)
        cert = ems_stable(coeffs, nodes)
        margin, stable = cert.margin, cert.stable
    except RiccatiError as exc:
        margin, stable = float("nan"), False
        messages.append(f"stability: {exc}")

    try:
        if p.period is None:
            K, W = aux_gains_from_solution(p, 0.0, X.samples)
        else:
            K = lambda t: aux_gains_from_solution(p, t, X.at(t))[0]  # noqa: E731
            W = lambda t: aux_gains_from_solution(p, t, X.at(t))[1]  # noqa: E731
        aux = aux_residual(p, K, W, X, nodes)
    except RiccatiError as exc:
        aux = float("inf")
        messages.append(f"aux: {exc}")
    return VerificationReport(res, x_norm, dom.lambda_min_R22, dom.lambda_max_Rsharp,
                              dom.in_domain, margin, stable, aux, 0, messages)


def runtime_invariants(trace: IterationTrace, states, tol: float = PSD_TOL) -> list:
    """Collect violations of the monotone-iteration invariants.

    ``states`` is a sequence of ``(X_h, Z_h)`` pairs, one per round.
    """
    out = []
    for h, (X, Z) in enumerate(states):
        zmin = Z.min_eig()
        if zmin < -tol:
            out.append(f"round {h}: increment not PSD (min eig {zmin:.3g})")
        xmin = X.min_eig()
        if xmin < -tol:
            out.append(f"round {h}: iterate not PSD (min eig {xmin:.3g})")
    for r in trace.rounds:
        if not r.in_domain:
            out.append(f"round {r.h}: iterate outside the sign-condition domain")
    return out


def solve_game_riccati(p: Problem, opts: SolveOptions | None = None, keep_states: bool = False):
    """Stabilizing periodic solution by the dual-layer iteration.

    Returns ``(X, trace, report)``.  With ``keep_states`` the per-round
    ``(X_h, Z_h)`` pairs are attached to the trace as ``trace.states``.
    """
    opts = opts or SolveOptions()
    problems = validate_problem(p, opts.nodes)
    if problems:
        raise InvalidProblem("; ".join(problems))
    nodes = opts.nodes
    trace = IterationTrace()
    states = []
    X = zeros_like_problem(p.dims.n, p.period, nodes)
    X_prev = Z_prev = None
    result = None
    for h in range(opts.max_outer):
        t0 = time.perf_counter()
        dom = dom_G_membership(p, X, nodes)
        if not dom.in_domain:
            exc = DomainViolation(f"round {h}: iterate outside the domain ({dom.diagnostic})")
            exc.trace = trace
            raise exc
        if h == 0:
            spec = build_initial_spec(p)
        else:
            spec = build_inner_spec(p, X, Z_prev, X_prev, opts.source,
                                    opts.inner.weight_mode, nodes)
        try:
            inner = solve_definite_riccati(spec, opts.inner, nodes)
        except RiccatiError as exc:
            exc.trace = trace
            exc.round = h
            raise
        Z = inner.Z
        residual = float("nan")
        if opts.check_level != "off":
            residual = residual_field(p, X, nodes, check_domain=False).sup_norm
        trace.rounds.append(RoundRecord(
            h=h, inner_iterations=inner.inner_iterations, z_sup_norm=Z.sup_norm(),
            z_min_eig=Z.min_eig(), x_min_eig=X.min_eig(), residual=residual,
            in_domain=dom.in_domain, initial_gain=inner.initial_gain,
            wall_time=time.perf_counter() - t0))
        states.append((X, Z))
        log.debug("round %d: %d inner steps, |Z| = %.3e", h, inner.inner_iterations,
                  trace.rounds[-1].z_sup_norm)
        if opts.check_level == "full":
            bad = runtime_invariants(IterationTrace([trace.rounds[-1]]), [(X, Z)])
            for msg in bad:
                log.warning(msg)
        if trace.rounds[-1].z_sup_norm < opts.outer_tolerance:
            result = X + Z
            break
        X_prev, Z_prev = X, Z
        X = X + Z
    if result is None:
        exc = MaxOuterIterations(f"no convergence in {opts.max_outer} outer rounds")
        exc.trace = trace
        raise exc
    trace.converged = True
    if keep_states:
        trace.states = states
    report = verify_solution(p, result, nodes)
    if opts.check_level != "off":
        viol = runtime_invariants(trace, states)
        report.monotonicity_violations = len(viol)
        report.messages.extend(viol)
    return result, trace, report


def one_round_increment(p: Problem, X: PeriodicSymSolution, opts: SolveOptions | None = None):
    """Increment produced by one outer round started at ``X`` with the defect source.

    At a fixed point of the iteration it vanishes.
    """
    opts = opts or SolveOptions()
    spec = build_inner_spec(p, X, X.scaled(0.0), X, "defect", opts.inner.weight_mode, opts.nodes)
    return solve_definite_riccati(spec, opts.inner, opts.nodes).Z

