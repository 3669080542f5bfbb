import numpy as np
import pytest

from irsifc.conic import cones, hsde
from irsifc.conic.cones import Dims, hermitian_to_real, real_to_hermitian, smat, svec
from irsifc.conic.feasibility import (FEASIBLE, INFEASIBLE, SdpFeasibilityProblem,
                                      SocFeasibilityProblem, SocUser, solve_sdp_feasibility,
                                      solve_soc_feasibility)

from conftest import cn

cp = pytest.importorskip("cvxpy")


def random_interior(dims, rng):
    parts = []
    for kind, sl, m in dims.blocks():
        if kind == "l":
            parts.append(rng.uniform(0.1, 2.0, sl.stop - sl.start))
        elif kind == "q":
            x1 = rng.standard_normal(m - 1)
            parts.append(np.concatenate([[np.linalg.norm(x1) + rng.uniform(0.1, 1)], x1]))
        else:
            B = rng.standard_normal((m, m))
            parts.append(svec(B @ B.T + 0.1 * np.eye(m)))
    return np.concatenate(parts)


DIMS = Dims(l=3, q=(3, 4), s=(3,))


def test_svec_round_trip(rng):
    B = rng.standard_normal((4, 4))
    S = B + B.T
    np.testing.assert_allclose(smat(svec(S), 4), S, atol=1e-14)
    # svec preserves the trace inner product
    C = rng.standard_normal((4, 4))
    C = C + C.T
    assert svec(S) @ svec(C) == pytest.approx(np.trace(S @ C))


def test_hermitian_lift(rng):
    B = cn(rng, 3, 3)
    H = B @ B.conj().T
    S = hermitian_to_real(H)
    assert np.linalg.eigvalsh(S).min() >= -1e-12
    np.testing.assert_allclose(real_to_hermitian(S), H, atol=1e-14)
    A = cn(rng, 3, 3)
    A = A + A.conj().T
    # Tr(A H) = Tr(lift(A) lift(H)) / 2
    assert np.trace(A @ H).real == pytest.approx(0.5 * np.trace(hermitian_to_real(A) @ S))


def test_nt_scaling_identities(rng):
    s, z = random_interior(DIMS, rng), random_interior(DIMS, rng)
    sc = cones.nt_scaling(DIMS, s, z)
    np.testing.assert_allclose(sc.W(z), sc.lam, atol=1e-10)
    np.testing.assert_allclose(sc.WinvT(s), sc.lam, atol=1e-10)
    x = rng.standard_normal(DIMS.size)
    np.testing.assert_allclose(sc.Winv(sc.W(x)), x, atol=1e-10)
    np.testing.assert_allclose(sc.WinvT(sc.WT(x)), x, atol=1e-10)
    u = sc.lam_solve(x)
    np.testing.assert_allclose(cones.jordan(DIMS, sc.lam, u), x, atol=1e-9)


def test_max_step_boundary(rng):
    x = cones.identity(DIMS)
    d = rng.standard_normal(DIMS.size)
    a = cones.max_step(DIMS, x, d)
    assert cones.in_interior(DIMS, x + 0.999 * a * d)
    assert not cones.in_interior(DIMS, x + 1.001 * a * d)


def _cvx_reference(c, G, h, dims, A=None, b=None):
    x = cp.Variable(len(c))
    s = h - G @ x
    cons = []
    for kind, sl, m in dims.blocks():
        if kind == "l":
            cons.append(s[sl] >= 0)
        elif kind == "q":
            cons.append(cp.SOC(s[sl.start], s[sl.start + 1:sl.stop]))
        else:
            X = cp.Variable((m, m), symmetric=True)
            rows, cols = np.tril_indices(m)
            entries = cp.hstack([X[i, j] for i, j in zip(cols, rows)])
            scale = np.where(rows == cols, 1.0, np.sqrt(2.0))
            cons += [X >> 0, cp.multiply(scale, entries) == s[sl]]
    if A is not None:
        cons.append(A @ x == b)
    prob = cp.Problem(cp.Minimize(c @ x), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.value


def test_matches_cvxpy_on_random_programs(rng):
    for trial in range(6):
        n = 4
        G = rng.standard_normal((DIMS.size, n))
        # h strictly interior at x=0 and a bounded objective from a dual interior point
        h = random_interior(DIMS, rng)
        c = -G.T @ random_interior(DIMS, rng)
        sol = hsde.solve(c, G, h, DIMS)
        assert sol.status == hsde.OPTIMAL
        ref = _cvx_reference(c, G, h, DIMS)
        assert sol.primal_objective == pytest.approx(ref, rel=1e-5, abs=1e-6)


def test_equality_constrained_lp():
    # minimize x1 + 2 x2  s.t. x1 + x2 = 1, x >= 0
    c = np.array([1.0, 2.0])
    G = -np.eye(2)
    sol = hsde.solve(c, G, np.zeros(2), Dims(l=2), np.ones((1, 2)), np.ones(1))
    assert sol.status == hsde.OPTIMAL
    np.testing.assert_allclose(sol.x, [1.0, 0.0], atol=1e-7)


def test_detects_infeasible():
    # x >= 1 and x <= -1
    sol = hsde.solve(np.array([1.0]), np.array([[-1.0], [1.0]]), np.array([-1.0, -1.0]), Dims(l=2))
    assert sol.status == hsde.PRIMAL_INFEASIBLE


def test_detects_unbounded():
    sol = hsde.solve(np.array([-1.0]), np.array([[-1.0]]), np.array([0.0]), Dims(l=1))
    assert sol.status == hsde.DUAL_INFEASIBLE


# -- SOC feasibility ----------------------------------------------------------

def single_user_soc(R, g=(1.0, 0.0), P=1.0, sigma=1.0):
    g = np.asarray(g, dtype=complex)
    u = SocUser(0, g, 1.0 / np.sqrt(2.0 ** R - 1.0), {}, sigma)
    return SocFeasibilityProblem(1, len(g), np.array([P]), [0], [u])


def test_soc_single_user_threshold():
    # feasible iff 2^R - 1 <= P |g|^2 / sigma^2 = 1
    assert solve_soc_feasibility(single_user_soc(0.99)).status == FEASIBLE
    assert solve_soc_feasibility(single_user_soc(1.01)).status == INFEASIBLE
    v = solve_soc_feasibility(single_user_soc(0.5))
    w = v.witness[0]
    assert np.linalg.norm(w) <= 1 + 1e-7
    assert w[0].real / np.sqrt(2 ** 0.5 - 1) >= 1 - 1e-6


def test_soc_empty():
    p = SocFeasibilityProblem(2, 2, np.ones(2), [], [])
    v = solve_soc_feasibility(p)
    assert v.feasible and np.all(v.witness == 0)


def test_soc_margin_monotone(rng):
    g = cn(rng, 2, 2, 3)
    margins = []
    for R in np.linspace(0.5, 6, 8):
        users = [SocUser(k, g[k, k], 1 / np.sqrt(2 ** R - 1), {1 - k: g[k, 1 - k]}, 0.3)
                 for k in range(2)]
        margins.append(solve_soc_feasibility(SocFeasibilityProblem(2, 3, np.ones(2), [0, 1], users)).margin)
    assert np.all(np.diff(margins) <= 1e-7)


def test_soc_witness_valid(rng):
    g = cn(rng, 2, 2, 3)
    users = [SocUser(k, g[k, k], 1 / np.sqrt(2 ** 1.0 - 1), {1 - k: g[k, 1 - k]}, 0.3)
             for k in range(2)]
    p = SocFeasibilityProblem(2, 3, np.ones(2), [0, 1], users)
    v = solve_soc_feasibility(p)
    assert v.feasible
    assert p.user_margins(v.witness).min() >= -10 * 1e-7


def power_grid_feasible(g, gamma, sigma2, P=1.0, n=401):
    """M=1: feasibility reduces to a power split p in [0, P]^2."""
    p = np.linspace(0, P, n)
    p1, p2 = np.meshgrid(p, p, indexing="ij")
    a = np.abs(g) ** 2
    ok1 = p1 * a[0, 0] >= gamma[0] * (p2 * a[0, 1] + sigma2)
    ok2 = p2 * a[1, 1] >= gamma[1] * (p1 * a[1, 0] + sigma2)
    return bool(np.any(ok1 & ok2))


def test_soc_power_grid_oracle(rng):
    agree = total = 0
    for _ in range(40):
        g = cn(rng, 2, 2)
        sigma2 = 0.1
        zeta = rng.dirichlet([2, 2])
        # bracket the boundary along the profile direction with the oracle itself
        lo, hi = 0.0, 20.0
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            gam = 2 ** (zeta * mid) - 1
            lo, hi = (mid, hi) if power_grid_feasible(g, gam, sigma2) else (lo, mid)
        for R in lo * np.array([0.9, 0.97, 1.03, 1.1]):
            gam = 2 ** (zeta * R) - 1
            users = [SocUser(k, g[k, k][None], 1 / np.sqrt(gam[k]), {1 - k: g[k, 1 - k][None]},
                             np.sqrt(sigma2)) for k in range(2)]
            v = solve_soc_feasibility(SocFeasibilityProblem(2, 1, np.ones(2), [0, 1], users))
            agree += v.feasible == power_grid_feasible(g, gam, sigma2)
            total += 1
    assert agree / total >= 0.99


# -- SDP feasibility ----------------------------------------------------------

def test_sdp_no_constraints():
    p = SdpFeasibilityProblem(np.zeros((1, 1, 3, 3), dtype=complex), {}, 1.0)
    v = solve_sdp_feasibility(p)
    assert v.feasible
    np.testing.assert_array_equal(v.witness, np.eye(3))


def test_sdp_two_by_two_analytic(rng):
    # max Tr(b b^H V) over unit-diagonal PSD V is (|b1| + |b2|)^2
    for _ in range(5):
        b = cn(rng, 2)
        Q = np.outer(b, b.conj())[None, None]
        best = (abs(b[0]) + abs(b[1])) ** 2
        for c, expect in ((0.98 * best, True), (1.02 * best, False)):
            # constraint Tr(Q V) / thr >= sigma2 with thr = 1
            v = solve_sdp_feasibility(SdpFeasibilityProblem(Q, {0: 1.0}, c))
            assert v.feasible is expect
            if v.feasible:
                assert np.linalg.eigvalsh(v.witness).min() >= -1e-7
                np.testing.assert_allclose(np.diag(v.witness).real, 1.0, atol=1e-6)


def test_sdp_matches_cvxpy_margin(rng):
    n, K = 4, 2
    b = cn(rng, K, K, n)
    Q = np.einsum("kja,kjb->kjab", b, b.conj())
    p = SdpFeasibilityProblem(Q, {0: 1.5, 1: 0.8}, 0.05)
    v = solve_sdp_feasibility(p)
    V = cp.Variable((n, n), hermitian=True)
    t = cp.Variable()
    A = p.constraint_matrices()
    cons = [V >> 0, cp.real(cp.diag(V)) == 1] + [cp.real(cp.trace(A[k] @ V)) - 1 >= t for k in A]
    prob = cp.Problem(cp.Maximize(t), cons)
    prob.solve(solver=cp.CLARABEL)
    assert v.margin == pytest.approx(prob.value, rel=1e-5, abs=1e-6)
    if v.feasible:
        assert p.margins(v.witness).min() >= v.margin - 1e-6
