"""Alternating transmit/reflective optimization and Pareto-boundary sweeps."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .channel import ChannelSet, stream
from .rate import BeamformingState, RateProfile, as_profile, check_profile, profile_objective, rates
from .reflectopt import max_rate_reflect
from .singleuser import coordinate_ascent
from .txopt import max_rate_tx

log = logging.getLogger(__name__)

PROPOSED = "proposed"
RANDOM_REFLECTIVE = "random-reflective"
NO_IRS = "no-irs"
SCHEMES = (PROPOSED, RANDOM_REFLECTIVE, NO_IRS)


@dataclass
class BcdOptions:
    eps: float = 1e-3
    eps_bisect: float = 1e-4
    n_rand: int = 200
    max_outer: int = 30
    v_init: object = "ones"        # "ones" | "random" | "singleuser" | array (K, N)
    seed: int = 0                  # algorithm seed (randomization, random init)
    feas_tol: float = 1e-7

    def to_dict(self):
        d = asdict(self)
        if not isinstance(self.v_init, str):
            d["v_init"] = "array"
        return d


@dataclass
class BcdReport:
    R_trace: list
    state: BeamformingState
    rates: np.ndarray
    iterations: int
    converged: bool
    failures: list = field(default_factory=list)
    stage_trace: list = field(default_factory=list)    # (iteration, stage, objective)
    probes: list = field(default_factory=list)         # ReflectProbe records

    @property
    def R(self):
        return self.R_trace[-1] if self.R_trace else 0.0


@dataclass
class ParetoPoint:
    zeta: tuple
    R: float
    rates: np.ndarray
    scheme: str
    seed: int
    status: str = "ok"
    state: BeamformingState | None = None
    report: BcdReport | None = None


def zeta_key(zeta):
    return "/".join(repr(float(z)) for z in as_profile(zeta).zeta)


def initial_Rmax(cs: ChannelSet, zeta, P=None, sigma2=None) -> float:
    """Upper bound on any achievable common rate target.

    For unit-modulus ``v`` the reflected term obeys
    ``||Gamma^H v|| <= sum_n ||Gamma[n, :]||``, so the interference-free
    SNR of user k is at most ``P_k/sigma2 * (||h_kk|| + sum_i row_sum_i)^2``.
    """
    z = as_profile(zeta).array
    P = cs.P if P is None else np.broadcast_to(np.asarray(P, dtype=float), (cs.K,))
    sigma2 = cs.sigma2 if sigma2 is None else sigma2
    bounds = []
    for k in np.flatnonzero(z > 0):
        amp = np.linalg.norm(cs.h[k, k]) + np.linalg.norm(cs.Gamma[k, :, k], axis=-1).sum()
        bounds.append(np.log2(1.0 + P[k] / sigma2 * amp ** 2) / z[k])
    return float(min(bounds))


def _initial_v(cs: ChannelSet, profile: RateProfile, opts: BcdOptions, rng):
    if not isinstance(opts.v_init, str):
        return np.array(opts.v_init, dtype=complex).reshape(cs.K, cs.N)
    if opts.v_init == "ones":
        return np.ones((cs.K, cs.N), dtype=complex)
    if opts.v_init == "random":
        return np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=(cs.K, cs.N)))
    if opts.v_init == "singleuser":
        k = int(np.argmax(profile.array))
        return coordinate_ascent(cs, k).v_opt
    raise ValueError(f"unknown v_init {opts.v_init!r}")


def bcd_solve(cs: ChannelSet, zeta, opts: BcdOptions | None = None) -> BcdReport:
    """Alternate transmit (SOCP) and reflective (SDR) bisections.

    The lower bracket end is carried from one bisection into the next while
    the upper end restarts at ``initial_Rmax``; stops once an outer
    iteration gains less than ``opts.eps``.
    """
    opts = opts or BcdOptions()
    profile = as_profile(zeta)
    rng = stream(opts.seed, f"bcd/{zeta_key(profile)}")
    R_max = initial_Rmax(cs, profile)
    v = _initial_v(cs, profile, opts, rng)
    w = np.zeros((cs.K, cs.M), dtype=complex)
    R_L = 0.0
    prev = 0.0
    R_trace, stage_trace, failures, probes = [], [], [], []
    converged = False
    it = 0
    for it in range(1, opts.max_outer + 1):
        tx = max_rate_tx(cs, v, profile, opts.eps_bisect, R_max, R_lo=R_L, w_init=w,
                         feas_tol=opts.feas_tol)
        w, R_L = tx.w, tx.R
        failures.extend(tx.failures)
        stage_trace.append((it, "tx", tx.achieved))
        rf = max_rate_reflect(cs, w, profile, opts.eps_bisect, R_max, opts.n_rand, rng,
                              R_lo=R_L, v_init=v, feas_tol=opts.feas_tol)
        v, R_L = rf.v, rf.bracket[0]
        failures.extend(rf.failures)
        for probe in rf.probes:
            probe.iteration = it
        probes.extend(rf.probes)
        stage_trace.append((it, "reflect", rf.R))
        R_trace.append(rf.R)
        log.debug("BCD iteration %d: R=%.6f", it, rf.R)
        if rf.R - prev < opts.eps:
            converged = True
            break
        prev = rf.R
    state = BeamformingState(w, v)
    final_rates = rates(cs, state)
    if R_trace and not check_profile(final_rates, profile, R_trace[-1]):
        raise RuntimeError("BCD output violates its own rate profile")
    return BcdReport(R_trace, state, final_rates, it, converged, failures, stage_trace, probes)


def _point(cs, profile, scheme, seed, state, failures, report=None):
    r = rates(cs, state)
    R = profile_objective(r, profile)
    return ParetoPoint(profile.zeta, R, r, scheme, seed,
                       "numerical-failure" if failures else "ok", state, report)


def scheme_proposed(cs: ChannelSet, zeta, opts: BcdOptions | None = None) -> ParetoPoint:
    opts = opts or BcdOptions()
    profile = as_profile(zeta)
    report = bcd_solve(cs, profile, opts)
    return _point(cs, profile, PROPOSED, opts.seed, report.state, report.failures, report)


def random_phases(cs: ChannelSet, seed: int):
    """Reflection with i.i.d. uniform phases, shared by every profile of a sweep."""
    rng = stream(seed, "random-reflective")
    return np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=(cs.K, cs.N)))


def scheme_random_reflective(cs: ChannelSet, zeta, opts: BcdOptions | None = None,
                             rng=None) -> ParetoPoint:
    opts = opts or BcdOptions()
    profile = as_profile(zeta)
    if rng is None:
        v = random_phases(cs, opts.seed)
    else:
        v = np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=(cs.K, cs.N)))
    tx = max_rate_tx(cs, v, profile, opts.eps_bisect, initial_Rmax(cs, profile),
                     feas_tol=opts.feas_tol)
    return _point(cs, profile, RANDOM_REFLECTIVE, opts.seed, BeamformingState(tx.w, v), tx.failures)


def scheme_no_irs(cs: ChannelSet, zeta, opts: BcdOptions | None = None) -> ParetoPoint:
    opts = opts or BcdOptions()
    profile = as_profile(zeta)
    bare = cs.without_irs()
    v = np.ones((cs.K, cs.N), dtype=complex)
    tx = max_rate_tx(bare, v, profile, opts.eps_bisect, initial_Rmax(bare, profile),
                     feas_tol=opts.feas_tol)
    point = _point(bare, profile, NO_IRS, opts.seed, BeamformingState(tx.w, v), tx.failures)
    return point


_SCHEME_FUNCS = {
    PROPOSED: scheme_proposed,
    RANDOM_REFLECTIVE: scheme_random_reflective,
    NO_IRS: scheme_no_irs,
}


def run_scheme(cs: ChannelSet, zeta, scheme: str, opts: BcdOptions | None = None) -> ParetoPoint:
    if scheme not in _SCHEME_FUNCS:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    try:
        return _SCHEME_FUNCS[scheme](cs, zeta, opts)
    except (np.linalg.LinAlgError, FloatingPointError, RuntimeError) as exc:
        log.error("%s at zeta=%s failed: %s", scheme, zeta, exc)
        z = as_profile(zeta)
        return ParetoPoint(z.zeta, float("nan"), np.full(cs.K, np.nan), scheme,
                           (opts or BcdOptions()).seed, "numerical-failure")


def _run_task(args):
    return run_scheme(*args)


def zeta_grid(points: int, K: int = 2):
    """Evenly spaced two-user profiles from (1, 0) to (0, 1)."""
    if K != 2:
        raise ValueError("evenly spaced grids are defined for K=2; pass profiles explicitly")
    if points < 2:
        raise ValueError("need at least two grid points")
    return [RateProfile((1.0 - i / (points - 1), i / (points - 1))) for i in range(points)]


def pareto_sweep(cs: ChannelSet, zeta_list, opts: BcdOptions | None = None,
                 schemes=SCHEMES, jobs: int = 1) -> list:
    """One point per (profile, scheme), ordered profile-major.

    Points are independent; with ``jobs > 1`` they run in worker processes
    but the returned order never depends on scheduling.
    """
    opts = opts or BcdOptions()
    tasks = [(cs, as_profile(z), s, opts) for z in zeta_list for s in schemes]
    if jobs is None or jobs <= 0:
        jobs = os.cpu_count() or 1
    if jobs == 1 or len(tasks) == 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks))
