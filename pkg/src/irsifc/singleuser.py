"""Single-user maximum-rate point: MRT plus element-wise phase alignment."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .rate import BeamformingState, rate_from_sinr

TWO_PI = 2.0 * np.pi


class DegenerateChannelError(ValueError):
    """Effective channel is identically zero; MRT direction undefined."""


@dataclass
class CoordinateAscentReport:
    v_opt: np.ndarray
    snr_trace: list
    sweeps: int
    converged: bool
    update_trace: list = field(default_factory=list)

    @property
    def snr(self):
        return self.snr_trace[-1]


def _combined_channel(cs: ChannelSet, v, k):
    v = np.asarray(v, dtype=complex).reshape(cs.K, cs.N)
    return cs.h[k, k] + np.einsum("inm,in->m", cs.Gamma[k, :, k].conj(), v)


def mrt(cs: ChannelSet, v, k: int) -> np.ndarray:
    g = _combined_channel(cs, v, k)
    norm = np.linalg.norm(g)
    if norm == 0.0:
        raise DegenerateChannelError(f"effective channel of user {k} is zero")
    return np.sqrt(cs.P[k]) * g / norm


def snr_objective(cs: ChannelSet, v, k: int) -> float:
    g = _combined_channel(cs, v, k)
    return float(cs.P[k] / cs.sigma2 * np.vdot(g, g).real)


def phase_update(g_bar, r) -> float:
    """Phase maximizing ``Re{exp(j*phi) * g_bar^H r}``, in [0, 2*pi)."""
    c = np.vdot(g_bar, r)
    if c == 0:
        return 0.0
    return float(np.mod(-np.angle(c), TWO_PI))


def coordinate_ascent(cs: ChannelSet, k: int, v_init=None, eps=1e-8, max_sweeps=500,
                      record_updates=False) -> CoordinateAscentReport:
    """Maximize user ``k``'s MRT SNR over all reflective phases.

    Elements are visited in lexicographic (IRS, element) order; each visit
    sets the element to its closed-form maximizer with all others fixed.
    Stops once a full sweep gains less than ``eps`` in SNR.
    """
    K, N = cs.K, cs.N
    v = np.ones((K, N), dtype=complex) if v_init is None else np.array(v_init, dtype=complex).reshape(K, N)
    scale = cs.P[k] / cs.sigma2
    # r[i, n] is column n of Gamma_kik^H
    r = cs.Gamma[k, :, k].conj()
    snr_trace = [snr_objective(cs, v, k)]
    updates = []
    converged = False
    sweeps = 0
    while sweeps < max_sweeps:
        e = _combined_channel(cs, v, k)
        for i in range(K):
            for n in range(N):
                g_bar = e - r[i, n] * v[i, n]
                v[i, n] = np.exp(1j * phase_update(g_bar, r[i, n]))
                e = g_bar + r[i, n] * v[i, n]
                if record_updates:
                    updates.append(scale * np.vdot(e, e).real)
        sweeps += 1
        snr_trace.append(snr_objective(cs, v, k))
        if snr_trace[-1] - snr_trace[-2] < eps:
            converged = True
            break
    return CoordinateAscentReport(v, snr_trace, sweeps, converged, updates)


def corner_point(cs: ChannelSet, k: int, v_init=None, eps=1e-8, max_sweeps=500):
    """Single-user maximum-rate point of user ``k``.

    Every other transmitter stays silent.  Returns ``(state, rate, report)``.
    """
    report = coordinate_ascent(cs, k, v_init, eps, max_sweeps)
    w = np.zeros((cs.K, cs.M), dtype=complex)
    w[k] = mrt(cs, report.v_opt, k)
    state = BeamformingState(w, report.v_opt)
    return state, float(rate_from_sinr(report.snr)), report
