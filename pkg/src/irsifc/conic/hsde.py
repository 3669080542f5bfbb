"""Primal-dual interior-point solver on the homogeneous self-dual embedding.

Solves the standard-form pair::

    minimize    c'x                 maximize   -h'z - b'y
    subject to  G x + s = h         subject to  G'z + A'y + c = 0
                A x = b                         z in K
                s in K

for K a product of nonnegative, second-order and PSD cones (see
:mod:`.cones`).  Search directions use Nesterov-Todd scaling with a
Mehrotra predictor-corrector; the reduced KKT system is dense.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .cones import Dims, identity, jordan, max_step, nt_scaling

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal_infeasible"
DUAL_INFEASIBLE = "dual_infeasible"
INACCURATE = "optimal_inaccurate"
FAILED = "failed"


@dataclass
class ConeSolution:
    status: str
    x: np.ndarray
    s: np.ndarray
    z: np.ndarray
    y: np.ndarray
    primal_objective: float
    dual_objective: float
    iterations: int
    pres: float
    dres: float
    gap: float


@dataclass
class SolverOptions:
    max_iters: int = 200
    feastol: float = 1e-8
    abstol: float = 1e-9
    reltol: float = 1e-8
    inaccurate_tol: float = 1e-6
    step_fraction: float = 0.99


def _kkt_factor(G_scaled, A, reg=1e-14):
    H = G_scaled.T @ G_scaled
    n = H.shape[0]
    H[np.diag_indices(n)] += reg * max(1.0, np.abs(np.diag(H)).max())
    if A.shape[0] == 0:
        return ("chol", sla.cho_factor(H), n)
    p = A.shape[0]
    K = np.zeros((n + p, n + p))
    K[:n, :n] = H
    K[:n, n:] = A.T
    K[n:, :n] = A
    K[n:, n:] = -reg * np.eye(p)
    return ("lu", sla.lu_factor(K), n)


def _kkt_solve_once(fac, G_scaled, scaling, ux, uy, uz):
    kind, F, n = fac
    uz_t = scaling.WinvT(uz)
    rhs_x = ux + G_scaled.T @ uz_t
    if kind == "chol":
        dx = sla.cho_solve(F, rhs_x)
        dy = np.zeros(0)
    else:
        sol = sla.lu_solve(F, np.concatenate([rhs_x, uy]))
        dx, dy = sol[:n], sol[n:]
    dz = scaling.Winv(G_scaled @ dx - uz_t)
    return dx, dy, dz


def _kkt_solve(fac, G_scaled, scaling, G, A, ux, uy, uz, refine=2):
    """Solve [0 A' G'; A 0 0; G 0 -W'W] [dx; dy; dz] = [ux; uy; uz].

    The reduced system loses accuracy as the iterates approach the cone
    boundary, so a couple of refinement steps are run on the full system.
    """
    dx, dy, dz = _kkt_solve_once(fac, G_scaled, scaling, ux, uy, uz)
    scale = max(np.abs(ux).max(initial=0.0), np.abs(uy).max(initial=0.0), np.abs(uz).max(initial=0.0))
    for _ in range(refine):
        rx = ux - A.T @ dy - G.T @ dz
        ry = uy - A @ dx
        rz = uz - G @ dx + scaling.WT(scaling.W(dz))
        err = max(np.abs(rx).max(initial=0.0), np.abs(ry).max(initial=0.0), np.abs(rz).max(initial=0.0))
        if err <= 1e-14 * max(scale, 1.0):
            break
        ex, ey, ez = _kkt_solve_once(fac, G_scaled, scaling, rx, ry, rz)
        dx, dy, dz = dx + ex, dy + ey, dz + ez
    return dx, dy, dz


def solve(c, G, h, dims: Dims, A=None, b=None, options: SolverOptions | None = None) -> ConeSolution:
    opts = options or SolverOptions()
    c = np.asarray(c, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    n = c.size
    if A is None:
        A = np.zeros((0, n))
        b = np.zeros(0)
    A = np.asarray(A, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float)
    if G.shape != (dims.size, n) or h.shape != (dims.size,):
        raise ValueError(f"G must be {(dims.size, n)}, got {G.shape}")

    e = identity(dims)
    nu = dims.degree
    x = np.zeros(n)
    y = np.zeros(A.shape[0])
    s = e.copy()
    z = e.copy()
    tau = kappa = 1.0
    norm_c = max(1.0, np.linalg.norm(c))
    norm_b = max(1.0, np.linalg.norm(b)) if b.size else 1.0
    norm_h = max(1.0, np.linalg.norm(h))

    def measures():
        xs, ys, zs, ss = x / tau, y / tau, z / tau, s / tau
        pres = np.linalg.norm(G @ xs + ss - h) / norm_h
        if A.shape[0]:
            pres = max(pres, np.linalg.norm(A @ xs - b) / norm_b)
        dres = np.linalg.norm(G.T @ zs + A.T @ ys + c) / norm_c
        pcost = c @ xs
        dcost = -h @ zs - b @ ys
        gap = ss @ zs
        return pres, dres, pcost, dcost, gap

    def finish(status, it):
        pres, dres, pcost, dcost, gap = measures()
        if status in (PRIMAL_INFEASIBLE, DUAL_INFEASIBLE):
            return ConeSolution(status, x, s, z, y, pcost, dcost, it, pres, dres, gap)
        return ConeSolution(status, x / tau, s / tau, z / tau, y / tau, pcost, dcost, it,
                            pres, dres, gap)

    best = None
    for it in range(opts.max_iters + 1):
        pres, dres, pcost, dcost, gap = measures()
        relgap = gap / max(abs(pcost), abs(dcost), 1e-300)
        log.debug("%3d pres=%.2e dres=%.2e gap=%.2e tau=%.2e kappa=%.2e pcost=%.9g",
                  it, pres, dres, gap, tau, kappa, pcost)
        if pres <= opts.feastol and dres <= opts.feastol and (
                gap <= opts.abstol or relgap <= opts.reltol):
            return finish(OPTIMAL, it)
        if max(pres, dres, min(gap, relgap)) <= opts.inaccurate_tol:
            best = (it, x.copy(), y.copy(), s.copy(), z.copy(), tau, kappa)
        hz_by = h @ z + b @ y
        if hz_by < 0:
            pinf = np.linalg.norm(G.T @ z + A.T @ y) / -hz_by
            if pinf <= opts.feastol:
                return finish(PRIMAL_INFEASIBLE, it)
        cx = c @ x
        if cx < 0:
            dinf = max(np.linalg.norm(G @ x + s) / norm_h,
                       np.linalg.norm(A @ x) / norm_b if A.shape[0] else 0.0) / -cx
            if dinf <= opts.feastol:
                return finish(DUAL_INFEASIBLE, it)
        if it == opts.max_iters:
            break

        r_x = A.T @ y + G.T @ z + c * tau
        r_y = A @ x - b * tau
        r_z = s + G @ x - h * tau
        r_t = kappa + c @ x + b @ y + h @ z
        mu = (s @ z + tau * kappa) / (nu + 1)

        try:
            W = nt_scaling(dims, s, z)
            if not dims.s:
                W.densify()
            lam = W.lam
            G_scaled = W.WinvT(G)
            fac = _kkt_factor(G_scaled, A)
            x1, y1, z1 = _kkt_solve(fac, G_scaled, W, G, A, -c, b, h)
            denom_t = c @ x1 + b @ y1 + h @ z1 - kappa / tau

            def direction(sig, rhs_s, rhs_t):
                q = W.lam_solve(rhs_s)
                WTq = W.WT(q)
                x0, y0, z0 = _kkt_solve(fac, G_scaled, W, G, A, -(1 - sig) * r_x,
                                        -(1 - sig) * r_y, -(1 - sig) * r_z - WTq)
                dt = (-(1 - sig) * r_t - rhs_t / tau - c @ x0 - b @ y0 - h @ z0) / denom_t
                dx, dy, dz = x0 + dt * x1, y0 + dt * y1, z0 + dt * z1
                ds = WTq - W.WT(W.W(dz))
                dk = (rhs_t - kappa * dt) / tau
                return dx, dy, dz, ds, dt, dk

            def step_length(ds, dz, dt, dk):
                a = min(max_step(dims, s, ds), max_step(dims, z, dz))
                if dt < 0:
                    a = min(a, -tau / dt)
                if dk < 0:
                    a = min(a, -kappa / dk)
                return a

            lam_lam = jordan(dims, lam, lam)
            aff = direction(0.0, -lam_lam, -tau * kappa)
            alpha_aff = min(1.0, step_length(aff[3], aff[2], aff[4], aff[5]))
            sig = (1.0 - alpha_aff) ** 3
            corr = jordan(dims, W.WinvT(aff[3]), W.W(aff[2]))
            dx, dy, dz, ds, dt, dk = direction(
                sig, -lam_lam - corr + sig * mu * e, -tau * kappa - aff[4] * aff[5] + sig * mu)
            alpha = min(1.0, opts.step_fraction * step_length(ds, dz, dt, dk))
        except (np.linalg.LinAlgError, sla.LinAlgError, FloatingPointError, ValueError) as exc:
            log.debug("IPM stopped at iteration %d: %r", it, exc)
            break
        if not np.isfinite(alpha) or alpha < 1e-12:
            log.debug("IPM stalled at iteration %d (alpha=%g)", it, alpha)
            break
        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * ds
        tau = tau + alpha * dt
        kappa = kappa + alpha * dk

    if best is not None:
        it, x, y, s, z, tau, kappa = best
        return finish(INACCURATE, it)
    return finish(FAILED, opts.max_iters)
