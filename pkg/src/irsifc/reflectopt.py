"""Reflective beamforming for fixed transmit beamformers.

The phases of all IRSs are stacked into ``vbar = [1; v_1; ...; v_K]`` and
lifted to ``V = vbar vbar^H``; dropping rank one leaves an SDP whose
solutions are rounded back to unit modulus by Gaussian randomization.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .conic.feasibility import (DEFAULT_FEAS_TOL, NUMERICAL_FAILURE, SdpFeasibilityProblem,
                                solve_sdp_feasibility)
from .rate import BeamformingState, as_profile, profile_objective, rates

log = logging.getLogger(__name__)

RANK_ONE_RATIO = 1e-8


@dataclass
class ReflectiveLift:
    """``b[k, j] = [h_kj^H w_j; Gamma_k1j w_j; ...; Gamma_kKj w_j]`` and ``Q = b b^H``."""

    b: np.ndarray          # (K, K, KN+1)
    sigma2: float

    @property
    def Q(self):
        return np.einsum("kja,kjb->kjab", self.b, self.b.conj())

    def gains(self, vbar):
        """``|b_kj^H vbar|^2`` for one vector (n,) or a batch (S, n)."""
        return np.abs(np.einsum("kja,...a->...kj", self.b.conj(), vbar)) ** 2

    def sinrs(self, vbar):
        g = self.gains(vbar)
        signal = np.diagonal(g, axis1=-2, axis2=-1)
        return signal / (g.sum(axis=-1) - signal + self.sigma2)

    def scores(self, vbar, zeta):
        """``min_k R_k / zeta_k`` over active users."""
        z = as_profile(zeta).array
        active = z > 0
        r = np.log2(1.0 + self.sinrs(vbar))
        return np.min(r[..., active] / z[active], axis=-1)


def build_lift(cs: ChannelSet, w) -> ReflectiveLift:
    w = np.asarray(w, dtype=complex).reshape(cs.K, cs.M)
    a = np.einsum("kjm,jm->kj", cs.h.conj(), w)
    gamma = np.einsum("kijnm,jm->kjin", cs.Gamma, w).reshape(cs.K, cs.K, cs.K * cs.N)
    return ReflectiveLift(np.concatenate([a[:, :, None], gamma], axis=-1), cs.sigma2)


def stack_v(v):
    v = np.asarray(v, dtype=complex)
    return np.concatenate([[1.0 + 0j], v.ravel()])


def unstack_v(vbar, K, N):
    return np.asarray(vbar)[1:].reshape(K, N)


def project_unit(x):
    """Entry-wise unit-modulus projection rotated so the first entry is 1."""
    x = np.asarray(x, dtype=complex)
    mag = np.abs(x)
    u = np.where(mag > 0, x / np.where(mag > 0, mag, 1.0), 1.0)
    return u * np.conj(u[..., :1])


def build_sdp_problem(lift: ReflectiveLift, zeta, R) -> SdpFeasibilityProblem:
    z = as_profile(zeta).array
    thresholds = {k: 2.0 ** (z[k] * R) - 1.0 for k in np.flatnonzero(z > 0)}
    return SdpFeasibilityProblem(lift.Q, thresholds, lift.sigma2)


def gaussian_randomize(V, lift: ReflectiveLift, zeta, n_rand, rng: np.random.Generator):
    """Best of ``n_rand`` unit-modulus roundings of samples from CN(0, V).

    Returns ``(vbar, score)``; ties go to the lowest sample index.
    """
    if n_rand < 1:
        raise ValueError("n_rand must be >= 1")
    n = V.shape[0]
    # eigen-factor with clipped spectrum; unlike a regularized Cholesky it
    # is exact for rank-deficient V
    evals, evecs = np.linalg.eigh(0.5 * (V + V.conj().T))
    L = evecs * np.sqrt(np.clip(evals, 0.0, None))
    xi = (rng.standard_normal((n_rand, n)) + 1j * rng.standard_normal((n_rand, n))) / np.sqrt(2.0)
    samples = project_unit(xi @ L.T)
    scores = lift.scores(samples, zeta)
    best = int(np.argmax(scores))
    return samples[best], float(scores[best])


def dominant_vector(V):
    """Unit-modulus rounding of the principal eigenvector, and the eigenvalues (descending)."""
    evals, evecs = np.linalg.eigh(V)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    return project_unit(np.sqrt(max(evals[0], 0.0)) * evecs[:, 0]), evals


@dataclass
class ReflectProbe:
    R: float
    status: str
    relaxed_margin: float
    rank_one: bool = False
    candidate_score: float = float("nan")
    candidate_margin: float = float("nan")   # relaxed-constraint margin of vbar vbar^H
    accepted: bool = False
    iteration: int = 0                       # outer BCD iteration, set by the driver


@dataclass
class ReflectResult:
    R: float                   # certified min_k R_k / zeta_k of the returned phases
    v: np.ndarray
    rates: np.ndarray
    bracket: tuple
    relaxed_margin: float      # relaxed SDP margin at the last accepted probe
    probes: list = field(default_factory=list)
    failures: list = field(default_factory=list)


def max_rate_reflect(cs: ChannelSet, w, zeta, eps_bisect=1e-4, R_max=None, n_rand=200,
                     rng: np.random.Generator | None = None, R_lo=0.0, v_init=None,
                     feas_tol=DEFAULT_FEAS_TOL, options=None) -> ReflectResult:
    """Bisection over the rate target using the relaxed SDP as oracle.

    A probe is accepted only when a unit-modulus vector is actually
    recovered whose true rates meet the target; the best recovered vector
    over all probes is returned together with its certified rate.
    """
    profile = as_profile(zeta)
    if R_max is None:
        from .driver import initial_Rmax
        R_max = initial_Rmax(cs, profile)
    rng = np.random.default_rng(0) if rng is None else rng
    w = np.asarray(w, dtype=complex).reshape(cs.K, cs.M)
    lift = build_lift(cs, w)
    v_best = np.ones((cs.K, cs.N), dtype=complex) if v_init is None else np.array(v_init, dtype=complex)
    score_best = float(lift.scores(stack_v(v_best), profile))
    lo, hi = float(R_lo), float(R_max)
    if score_best < hi:
        lo = max(lo, score_best)
    probes, failures = [], []
    relaxed_margin = float("nan")
    while hi - lo > eps_bisect:
        R = 0.5 * (lo + hi)
        problem = build_sdp_problem(lift, profile, R)
        verdict = solve_sdp_feasibility(problem, feas_tol, options)
        probe = ReflectProbe(R, verdict.status, verdict.margin)
        probes.append(probe)
        if verdict.status == NUMERICAL_FAILURE:
            failures.append({"stage": "reflect", "R": R, **verdict.diagnostics})
            log.warning("SDP numerical failure at R=%.6g: %s", R, verdict.diagnostics)
        if not verdict.feasible:
            hi = R
            continue
        V = verdict.witness
        cand, evals = dominant_vector(V)
        score = float(lift.scores(cand, profile))
        probe.rank_one = bool(evals[1] <= RANK_ONE_RATIO * evals[0])
        if not probe.rank_one or score < R:
            r_cand, r_score = gaussian_randomize(V, lift, profile, n_rand, rng)
            if r_score > score:
                cand, score = r_cand, r_score
        probe.candidate_score = score
        probe.candidate_margin = float(problem.margins(np.outer(cand, cand.conj())).min())
        if score > score_best:
            v_best, score_best = unstack_v(cand, cs.K, cs.N), score
        if score >= R:
            probe.accepted = True
            relaxed_margin = verdict.margin
            lo = R
        else:
            hi = R
        if score_best < hi:
            lo = max(lo, score_best)
    final_rates = rates(cs, BeamformingState(w, v_best))
    return ReflectResult(profile_objective(final_rates, profile), v_best, final_rates, (lo, hi),
                         relaxed_margin, probes, failures)
