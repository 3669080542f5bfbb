"""Transmit beamforming for fixed reflection: SOCP feasibility plus bisection."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .conic.feasibility import (DEFAULT_FEAS_TOL, NUMERICAL_FAILURE, SocFeasibilityProblem,
                                SocUser, solve_soc_feasibility)
from .rate import BeamformingState, as_profile, effective_channels, profile_objective, rates

log = logging.getLogger(__name__)


def build_soc_problem(cs: ChannelSet, v, zeta, R, P=None, sigma2=None) -> SocFeasibilityProblem:
    """SOC form of the per-user SINR targets ``2**(zeta_k R) - 1``.

    Users with ``zeta_k = 0`` are dropped and their beamformers pinned to
    zero.  The desired term ``g_kk^H w_k`` is taken real without loss of
    generality, so each target becomes
    ``Re(g_kk^H w_k) / sqrt(2**(zeta_k R) - 1) >= ||[g_kj^H w_j]_{j!=k}, sigma||``.
    """
    zeta = as_profile(zeta).array
    P = cs.P if P is None else np.broadcast_to(np.asarray(P, dtype=float), (cs.K,))
    sigma2 = cs.sigma2 if sigma2 is None else sigma2
    if R < 0:
        raise ValueError("rate target must be nonnegative")
    g = effective_channels(cs, v)
    active = [k for k in range(cs.K) if zeta[k] > 0]
    if R == 0:
        return SocFeasibilityProblem(cs.K, cs.M, P, active, [])
    users = []
    trivial = False
    for k in active:
        if not np.any(g[k, k]):
            trivial = True
        threshold = 2.0 ** (zeta[k] * R) - 1.0
        users.append(SocUser(k, g[k, k], 1.0 / np.sqrt(threshold),
                             {j: g[k, j] for j in active if j != k}, np.sqrt(sigma2)))
    return SocFeasibilityProblem(cs.K, cs.M, P, active, users, trivial)


def normalize_phases(cs: ChannelSet, v, w):
    """Rotate each ``w_k`` so that ``g_kk^H w_k`` is real and nonnegative."""
    g = effective_channels(cs, v)
    w = np.array(w, dtype=complex)
    for k in range(cs.K):
        inner = np.vdot(g[k, k], w[k])
        if inner != 0:
            w[k] *= np.exp(-1j * np.angle(inner))
    return w


def _clip_power(w, P):
    w = np.array(w, dtype=complex)
    norms = np.linalg.norm(w, axis=1)
    over = norms ** 2 > P
    w[over] *= (np.sqrt(P[over]) / norms[over])[:, None]
    return w


@dataclass
class TxResult:
    R: float                   # lower end of the final bisection bracket
    w: np.ndarray
    achieved: float            # min_k R_k / zeta_k of the returned beamformers
    rates: np.ndarray
    trace: list = field(default_factory=list)      # (R, status, margin) per probe
    failures: list = field(default_factory=list)


def max_rate_tx(cs: ChannelSet, v, zeta, eps_bisect=1e-4, R_max=None, R_lo=0.0, w_init=None,
                feas_tol=DEFAULT_FEAS_TOL, options=None) -> TxResult:
    """Largest common rate target reachable by transmit beamforming alone.

    ``R_lo`` must be achievable (e.g. by ``w_init``); ``R_max`` must be an
    upper bound.  The returned beamformers are never worse, in
    ``min_k R_k / zeta_k``, than ``w_init``.
    """
    profile = as_profile(zeta)
    if R_max is None:
        from .driver import initial_Rmax
        R_max = initial_Rmax(cs, profile)
    v = np.asarray(v, dtype=complex).reshape(cs.K, cs.N)
    best_w = np.zeros((cs.K, cs.M), dtype=complex) if w_init is None else np.array(w_init, dtype=complex)
    best_rates = rates(cs, BeamformingState(best_w, v))
    best_obj = profile_objective(best_rates, profile)
    lo, hi = float(R_lo), float(R_max)
    trace, failures = [], []
    while hi - lo > eps_bisect:
        R = 0.5 * (lo + hi)
        verdict = solve_soc_feasibility(build_soc_problem(cs, v, profile, R), feas_tol, options)
        trace.append((R, verdict.status, verdict.margin))
        if verdict.status == NUMERICAL_FAILURE:
            failures.append({"stage": "tx", "R": R, **verdict.diagnostics})
            log.warning("SOCP numerical failure at R=%.6g: %s", R, verdict.diagnostics)
        if not verdict.feasible:
            hi = R
            continue
        lo = R
        w = normalize_phases(cs, v, _clip_power(verdict.witness, cs.P))
        cand_rates = rates(cs, BeamformingState(w, v))
        obj = profile_objective(cand_rates, profile)
        if obj >= best_obj:
            best_w, best_rates, best_obj = w, cand_rates, obj
    return TxResult(lo, best_w, best_obj, best_rates, trace, failures)
