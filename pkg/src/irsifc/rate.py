"""Effective channels, SINR and achievable rates (bits/s/Hz)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet

ALGEBRA_TOL = 1e-12
CONSTRAINT_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class BeamformingState:
    """Transmit beamformers ``w[j]`` (K x M) and reflective vectors ``v[i]`` (K x N)."""

    w: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", np.array(self.w, dtype=complex, ndmin=2))
        object.__setattr__(self, "v", np.array(self.v, dtype=complex, ndmin=2))

    def validate(self, P, tol=1e-9):
        power = np.sum(np.abs(self.w) ** 2, axis=1)
        if np.any(power > np.asarray(P) + tol):
            raise ValueError(f"beamformer power {power} exceeds budget {P}")
        if np.any(np.abs(np.abs(self.v) - 1.0) > tol):
            raise ValueError("reflective vectors must be unit modulus")
        return self

    @classmethod
    def unit(cls, cs: ChannelSet, w=None):
        """All-ones reflection, zero (or given) beamformers."""
        if w is None:
            w = np.zeros((cs.K, cs.M), dtype=complex)
        return cls(w, np.ones((cs.K, cs.N), dtype=complex))


@dataclass(frozen=True)
class RateProfile:
    zeta: tuple

    def __post_init__(self):
        z = np.asarray(self.zeta, dtype=float).ravel()
        if z.size == 0 or np.any(z < 0) or not np.all(np.isfinite(z)):
            raise ValueError(f"rate profile must be nonnegative, got {self.zeta}")
        if abs(z.sum() - 1.0) > 1e-12:
            raise ValueError(f"rate profile must sum to 1, got sum {z.sum()!r}")
        object.__setattr__(self, "zeta", tuple(float(x) for x in z))

    @classmethod
    def from_weights(cls, weights):
        """Normalize arbitrary nonnegative weights onto the simplex."""
        w = np.asarray(weights, dtype=float)
        return cls(tuple(w / w.sum()))

    @property
    def array(self):
        return np.asarray(self.zeta)

    @property
    def active(self):
        return np.flatnonzero(self.array > 0)

    def __len__(self):
        return len(self.zeta)


def as_profile(zeta) -> RateProfile:
    return zeta if isinstance(zeta, RateProfile) else RateProfile(tuple(zeta))


def effective_channels(cs: ChannelSet, v) -> np.ndarray:
    """All effective channels ``g[k, j] = h[k, j] + sum_i Gamma[k, i, j]^H v_i``."""
    v = np.asarray(v, dtype=complex).reshape(cs.K, cs.N)
    return cs.h + np.einsum("kijnm,in->kjm", cs.Gamma.conj(), v)


def effective_channel(cs: ChannelSet, v, k: int, j: int) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(cs.K, cs.N)
    return cs.h[k, j] + np.einsum("inm,in->m", cs.Gamma[k, :, j].conj(), v)


def link_gains(cs: ChannelSet, state: BeamformingState) -> np.ndarray:
    """``|g_kj^H w_j|^2`` for every receiver k and transmitter j."""
    g = effective_channels(cs, state.v)
    return np.abs(np.einsum("kjm,jm->kj", g.conj(), state.w)) ** 2


def sinrs(cs: ChannelSet, state: BeamformingState) -> np.ndarray:
    gains = link_gains(cs, state)
    signal = np.diag(gains).copy()
    interference = gains.sum(axis=1) - signal
    return signal / (interference + cs.sigma2)


def sinr(cs: ChannelSet, state: BeamformingState, k: int) -> float:
    return float(sinrs(cs, state)[k])


def rate_from_sinr(x):
    return np.log2(1.0 + np.asarray(x, dtype=float))


def rates(cs: ChannelSet, state: BeamformingState) -> np.ndarray:
    return rate_from_sinr(sinrs(cs, state))


def rate(cs: ChannelSet, state: BeamformingState, k: int) -> float:
    return float(rates(cs, state)[k])


def profile_objective(user_rates, zeta) -> float:
    """Largest R with ``R_k >= zeta_k R`` for every active user."""
    z = as_profile(zeta).array
    active = z > 0
    return float(np.min(np.asarray(user_rates)[active] / z[active]))


def check_profile(user_rates, zeta, R, tol=CONSTRAINT_TOL) -> bool:
    user_rates = np.asarray(user_rates, dtype=float)
    z = as_profile(zeta).array
    if user_rates.shape != z.shape:
        raise ValueError("rates and profile lengths differ")
    return bool(np.all(user_rates >= z * R - tol))
