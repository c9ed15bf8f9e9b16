import numpy as np
import pytest
import scipy.linalg as sla

from conftest import random_psd, scalar_problem
from sgriccati.bench import random_game_problem
from sgriccati.errors import DriftUnstable, MaxInnerIterations, SourceNotPSD
from sgriccati.inner import (DefiniteRiccatiSpec, InnerOptions, build_initial_spec,
                             build_inner_spec, inner_residual, solve_definite_riccati)
from sgriccati.lyapunov import ClosedLoopCoeffs, ems_stable
from sgriccati.operators import feedback_gain
from sgriccati.solution import PeriodicSymSolution


def scalar_spec(a=-1.0, b2=1.0, w=1.0, q=1.0, noise=()):
    """noise: list of (a_k, b2_k)."""
    drift = [[[a]]] + [[[c[0]]] for c in noise]
    inputs = [[[b2]]] + [[[c[1]]] for c in noise]
    return DefiniteRiccatiSpec.constant(drift, inputs, [[w]], [[q]])


def test_initial_spec_examples(p1, random_problems):
    p = scalar_problem(a=-0.5, m=3.0, noise=[(0.2, 0.1, 0.3)])
    s = build_initial_spec(p)
    assert np.allclose(s.drift.at(0.0)[0], -0.5) and np.allclose(s.drift.at(0.0)[1], 0.2)
    assert np.allclose(s.source(0.0), 3.0)
    for q in random_problems.values():
        assert np.linalg.eigvalsh(build_initial_spec(q).source(0.0)).min() >= 0.1 - 1e-10
    s = build_initial_spec(p1)
    assert np.allclose(s.source(0.0), 2.0) and np.allclose(s.drift.at(0.0)[0], -1.0)


def test_inner_spec_source_examples():
    p = random_game_problem(2, 5)
    X = PeriodicSymSolution.constant(0.05 * np.eye(2))
    zero = PeriodicSymSolution.constant(np.zeros((2, 2)))
    assert np.allclose(build_inner_spec(p, X, zero, zero).source(0.0), 0.0)

    # scalar with one noise channel: Q = -v^2 / rho#
    q = scalar_problem(a=-1.0, b1=2.0, b2=3.0, l1=0.1, l2=0.2, r11=-4.0, r12=0.5, r22=5.0,
                       noise=[(0.3, 0.1, 0.2)])
    Xh, Xp, Zp = 0.2, 0.1, 0.1
    F = feedback_gain(q, 0.0, [[Xp]])[:, 0]
    b0, b1, a1 = np.array([2.0, 3.0]), np.array([0.1, 0.2]), 0.3
    N = b0 * Zp + b1 * Zp * (a1 + b1 @ F)
    Rx = np.array([[-4.0, 0.5], [0.5, 5.0]]) + Xh * np.outer(b1, b1)
    v = N[0] - Rx[0, 1] / Rx[1, 1] * N[1]
    rho = Rx[0, 0] - Rx[0, 1] ** 2 / Rx[1, 1]
    spec = build_inner_spec(q, PeriodicSymSolution.constant([[Xh]]),
                            PeriodicSymSolution.constant([[Zp]]),
                            PeriodicSymSolution.constant([[Xp]]))
    assert rho < 0
    assert np.isclose(spec.source(0.0)[0, 0], -v * v / rho, rtol=1e-13)


def test_defect_source_matches_v_source():
    p = random_game_problem(3, 8)
    X0 = PeriodicSymSolution.constant(np.zeros((3, 3)))
    Z0 = solve_definite_riccati(build_initial_spec(p)).Z
    v = build_inner_spec(p, Z0, Z0, X0, "v").source(0.0)
    d = build_inner_spec(p, Z0, Z0, X0, "defect").source(0.0)
    assert np.allclose(v, d, atol=1e-11 * (1 + np.abs(v).max()))


def test_zero_source_gives_zero():
    res = solve_definite_riccati(scalar_spec(q=0.0))
    assert res.inner_iterations == 1
    assert np.all(res.Z.samples == 0.0)
    assert np.all(res.gain(0.0) == 0.0)


def test_scalar_deterministic_oracle():
    res = solve_definite_riccati(scalar_spec())
    assert abs(res.Z.samples[0, 0] - (np.sqrt(2) - 1)) <= 1e-12
    T = res.gain(0.0)[0, 0]
    assert abs(T - (1 - np.sqrt(2))) <= 1e-12
    assert np.isclose(-1.0 + T, -np.sqrt(2))


def test_scalar_stochastic_oracle():
    res = solve_definite_riccati(scalar_spec(noise=[(1.0, 0.0)]))
    assert abs(res.Z.samples[0, 0] - (np.sqrt(5) - 1) / 2) <= 1e-12


def test_newton_monotone_and_superlinear():
    for seed in range(5):
        p = random_game_problem(4, seed)
        res = solve_definite_riccati(build_initial_spec(p))
        Zs = [z.samples for z in res.iterates]
        scale = 1 + np.abs(Zs[-1]).max()
        for a, b in zip(Zs[1:], Zs[2:]):
            assert np.linalg.eigvalsh(b - a).max() <= 1e-9 * scale
        d = res.defects
        tail = [x for x in d[-4:-1] if x > 1e-14]
        ratios = [b / a for a, b in zip(tail, tail[1:])]
        assert all(r < 0.5 for r in ratios)
        assert all(r2 < r1 for r1, r2 in zip(ratios, ratios[1:]))
        assert res.stability_margin < -1e-8


def hamiltonian_care(A, B, Q, R):
    """Stabilizing ARE root from the stable invariant subspace of the Hamiltonian."""
    n = A.shape[0]
    H = np.block([[A, -B @ np.linalg.solve(R, B.T)], [-Q, -A.T]])
    w, V = np.linalg.eig(H)
    U = V[:, w.real < 0]
    return np.real(U[n:] @ np.linalg.inv(U[:n]))


def test_maximal_solution_matches_hamiltonian_oracle():
    rng = np.random.default_rng(7)
    for _ in range(10):
        n = int(rng.integers(1, 4))
        A = rng.standard_normal((n, n)) - 2.0 * np.eye(n)
        B = rng.standard_normal((n, 2))
        W = random_psd(rng, 2) + np.eye(2)
        Q = random_psd(rng, n)
        res = solve_definite_riccati(DefiniteRiccatiSpec.constant([A], [B], W, Q))
        Zh = hamiltonian_care(A, B, Q, W)
        assert np.abs(res.Z.samples - Zh).max() <= 1e-8 * (1 + np.abs(Zh).max())


def test_unstable_drift_uses_care_gain_or_raises():
    spec = scalar_spec(a=1.0)
    res = solve_definite_riccati(spec)
    assert res.initial_gain.startswith("care")
    # -> 2Z + 1 - Z^2 = 0, stabilizing root 1 + sqrt(2)
    assert np.isclose(res.Z.samples[0, 0], 1 + np.sqrt(2), rtol=1e-12)
    with pytest.raises(DriftUnstable):
        solve_definite_riccati(spec, InnerOptions(initial_gain="zero"))
    with pytest.raises(DriftUnstable):
        solve_definite_riccati(scalar_spec(a=1.0, b2=0.0))


def test_error_paths():
    with pytest.raises(SourceNotPSD):
        solve_definite_riccati(scalar_spec(q=-1.0))
    with pytest.raises(MaxInnerIterations):
        solve_definite_riccati(scalar_spec(q=5.0), InnerOptions(max_iter=1))


def test_periodic_inner_with_constant_data_matches_ti():
    ti = solve_definite_riccati(scalar_spec(noise=[(0.5, 0.2)]))
    spec = DefiniteRiccatiSpec(
        ClosedLoopCoeffs.periodic(lambda t: [np.full(np.shape(t) + (1, 1), -1.0),
                                             np.full(np.shape(t) + (1, 1), 0.5)], 1, 1.0),
        lambda t: [np.ones((1, 1)), np.full((1, 1), 0.2)], lambda t: np.ones((1, 1)),
        lambda t: np.ones((1, 1)), 1)
    per = solve_definite_riccati(spec, nodes=32)
    assert np.abs(per.Z.samples - ti.Z.samples).max() < 1e-10
    assert inner_residual(spec, per.Z) < 1e-10
    T = per.gain(per.Z.node_times())
    cl = ClosedLoopCoeffs.periodic(lambda t: [-1.0 + per.gain(t), 0.5 + 0.2 * per.gain(t)], 1, 1.0)
    assert ems_stable(cl, 32).stable and T.shape[-2:] == (1, 1)


def test_care_helper_is_not_the_oracle():
    # sanity for the oracle itself against scipy
    A = np.array([[-1.0]])
    B = np.array([[1.0]])
    assert np.allclose(hamiltonian_care(A, B, np.eye(1), np.eye(1)),
                       sla.solve_continuous_are(A, B, np.eye(1), np.eye(1)))
