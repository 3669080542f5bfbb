"""Max-margin feasibility oracles for the beamforming subproblems.

Both oracles maximize a common slack ``t`` added to every inequality and
report ``feasible`` when the optimal slack is at least ``-feas_tol``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import hsde
from .cones import Dims, hermitian_to_real, real_to_hermitian, smat, svec

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"

DEFAULT_FEAS_TOL = 1e-7


@dataclass
class FeasibilityVerdict:
    status: str
    margin: float
    witness: object = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def feasible(self):
        return self.status == FEASIBLE


def _verdict(margin, witness, feas_tol, diagnostics):
    status = FEASIBLE if margin >= -feas_tol else INFEASIBLE
    return FeasibilityVerdict(status, float(margin), witness, diagnostics)


def _encode(arr):
    arr = np.asarray(arr)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


# -- second-order cone -------------------------------------------------------

@dataclass
class SocUser:
    """``scale * Re(signal^H w_k) >= || [g_kj^H w_j]_{j != k}, sigma ||``."""

    k: int
    signal: np.ndarray
    scale: float
    interference: dict
    sigma: float


@dataclass
class SocFeasibilityProblem:
    K: int
    M: int
    P: np.ndarray
    blocks: list                 # transmitters whose beamformer is a variable
    users: list
    trivially_infeasible: bool = False

    def to_dict(self):
        return {
            "K": self.K, "M": self.M, "P": list(map(float, self.P)), "blocks": list(self.blocks),
            "users": [{"k": u.k, "signal": _encode(u.signal), "scale": u.scale, "sigma": u.sigma,
                       "interference": {str(j): _encode(g) for j, g in u.interference.items()}}
                      for u in self.users],
            "trivially_infeasible": self.trivially_infeasible,
        }

    def user_margins(self, w):
        """Normalized slack of every user cone and power ball at ``w`` (K x M)."""
        w = np.asarray(w, dtype=complex)
        out = []
        for u in self.users:
            lhs = u.scale * np.vdot(u.signal, w[u.k]).real
            terms = [np.vdot(g, w[j]) for j, g in u.interference.items()] + [u.sigma]
            out.append((lhs - np.linalg.norm(terms)) / u.sigma)
        for j in self.blocks:
            out.append(1.0 - np.linalg.norm(w[j]) / np.sqrt(self.P[j]))
        return np.asarray(out)


def _soc_conic_data(p: SocFeasibilityProblem):
    M = p.M
    pos = {j: idx for idx, j in enumerate(p.blocks)}
    nvar = 2 * M * len(p.blocks) + 1
    it = nvar - 1
    rows_G, rows_h, qdims = [], [], []

    def lin(j, g, part):
        # coefficients of Re/Im(g^H u_j) on the stacked real variables
        row = np.zeros(nvar)
        base = 2 * M * pos[j]
        if part == "re":
            row[base:base + M] = g.real
            row[base + M:base + 2 * M] = g.imag
        else:
            row[base:base + M] = -g.imag
            row[base + M:base + 2 * M] = g.real
        return row

    for u in p.users:
        sqP = np.sqrt(p.P[u.k])
        first = -lin(u.k, u.signal, "re") * (u.scale * sqP / u.sigma)
        first[it] = 1.0
        block = [first]
        for j, g in u.interference.items():
            if j not in pos:
                continue
            coef = np.sqrt(p.P[j]) / u.sigma
            block.append(-lin(j, g, "re") * coef)
            block.append(-lin(j, g, "im") * coef)
        block.append(np.zeros(nvar))
        rows_G.extend(block)
        rows_h.extend([0.0] * (len(block) - 1) + [1.0])
        qdims.append(len(block))
    for j in p.blocks:
        first = np.zeros(nvar)
        first[it] = 1.0
        block = [first]
        base = 2 * M * pos[j]
        for m in range(2 * M):
            row = np.zeros(nvar)
            row[base + m] = -1.0
            block.append(row)
        rows_G.extend(block)
        rows_h.extend([1.0] + [0.0] * (2 * M))
        qdims.append(len(block))
    c = np.zeros(nvar)
    c[it] = -1.0
    return c, np.array(rows_G), np.array(rows_h), Dims(q=qdims), pos


def solve_soc_feasibility(p: SocFeasibilityProblem, feas_tol=DEFAULT_FEAS_TOL,
                          options: hsde.SolverOptions | None = None) -> FeasibilityVerdict:
    w0 = np.zeros((p.K, p.M), dtype=complex)
    if p.trivially_infeasible:
        return FeasibilityVerdict(INFEASIBLE, -np.inf, None, {"reason": "zero desired channel"})
    if not p.users:
        return FeasibilityVerdict(FEASIBLE, np.inf, w0, {"reason": "no rate constraints"})
    c, G, h, dims, pos = _soc_conic_data(p)
    sol = hsde.solve(c, G, h, dims, options=options)
    diag = {"solver_status": sol.status, "iterations": sol.iterations,
            "pres": sol.pres, "dres": sol.dres, "gap": sol.gap}
    if sol.status not in (hsde.OPTIMAL, hsde.INACCURATE):
        return FeasibilityVerdict(NUMERICAL_FAILURE, np.nan, None, diag)
    M = p.M
    w = w0.copy()
    for j, idx in pos.items():
        u = sol.x[2 * M * idx:2 * M * (idx + 1)]
        w[j] = np.sqrt(p.P[j]) * (u[:M] + 1j * u[M:])
    margin = 0.5 * (-sol.primal_objective - sol.dual_objective)
    return _verdict(margin, w, feas_tol, diag)


# -- semidefinite ------------------------------------------------------------

@dataclass
class SdpFeasibilityProblem:
    """Find Hermitian ``V >= 0`` with unit diagonal such that, for each active k,
    ``Tr(Q_kk V) / thresholds[k] >= sum_{j != k} Tr(Q_kj V) + sigma2``."""

    Q: np.ndarray                # (K, K, n, n)
    thresholds: dict             # k -> 2**(zeta_k R) - 1, active users only
    sigma2: float

    @property
    def n(self):
        return self.Q.shape[-1]

    def constraint_matrices(self):
        """Normalized ``A_k`` with constraint ``Tr(A_k V) - 1 >= 0``."""
        K = self.Q.shape[0]
        out = {}
        for k, thr in self.thresholds.items():
            A = self.Q[k, k] / thr - (self.Q[k].sum(axis=0) - self.Q[k, k])
            out[k] = 0.5 * (A + A.conj().T) / self.sigma2
        return out

    def margins(self, V):
        return np.array([np.trace(A @ V).real - 1.0 for A in self.constraint_matrices().values()])

    def to_dict(self):
        return {"Q": _encode(self.Q), "sigma2": self.sigma2,
                "thresholds": {str(k): v for k, v in self.thresholds.items()}}


def solve_sdp_feasibility(p: SdpFeasibilityProblem, feas_tol=DEFAULT_FEAS_TOL,
                          options: hsde.SolverOptions | None = None) -> FeasibilityVerdict:
    """Solved through its dual, which has only ``n + #users`` variables:

        minimize 1'y - 1'lam   s.t.  Diag(y) - sum_k lam_k A_k >= 0,
                                     lam >= 0, 1'lam = 1,

    whose optimal value is the max margin and whose PSD multiplier is V.
    """
    n = p.n
    A_k = p.constraint_matrices()
    if not A_k:
        return FeasibilityVerdict(FEASIBLE, np.inf, np.eye(n, dtype=complex),
                                  {"reason": "no rate constraints"})
    users = list(A_k)
    nl = len(users)
    nvar = n + nl
    dim_s = svec(np.zeros((2 * n, 2 * n))).size
    G = np.zeros((nl + dim_s, nvar))
    G[:nl, n:] = -np.eye(nl)
    for i in range(n):
        E = np.zeros(2 * n)
        E[i] = E[n + i] = 1.0
        G[nl:, i] = -svec(np.diag(E))
    for col, k in enumerate(users):
        G[nl:, n + col] = svec(hermitian_to_real(A_k[k]))
    h = np.zeros(nl + dim_s)
    c = np.concatenate([np.ones(n), -np.ones(nl)])
    A_eq = np.concatenate([np.zeros(n), np.ones(nl)])[None, :]
    sol = hsde.solve(c, G, h, Dims(l=nl, s=(2 * n,)), A_eq, np.ones(1), options=options)
    diag = {"solver_status": sol.status, "iterations": sol.iterations,
            "pres": sol.pres, "dres": sol.dres, "gap": sol.gap}
    if sol.status not in (hsde.OPTIMAL, hsde.INACCURATE):
        return FeasibilityVerdict(NUMERICAL_FAILURE, np.nan, None, diag)
    V = 2.0 * real_to_hermitian(smat(sol.z[nl:], 2 * n))
    V = 0.5 * (V + V.conj().T)
    margin = 0.5 * (sol.primal_objective + sol.dual_objective)
    return _verdict(margin, V, feas_tol, diag)
