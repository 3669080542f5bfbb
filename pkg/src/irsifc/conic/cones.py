"""Cone algebra for products of nonnegative, second-order and PSD cones.

Vectors are laid out as ``[nonneg | soc_1 | ... | psd_1 | ...]``.  PSD
blocks are stored with :func:`svec` (lower triangle, off-diagonals scaled
by sqrt(2)) so the Euclidean inner product of two svec's equals the trace
inner product of the matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

SQRT2 = np.sqrt(2.0)


@lru_cache(maxsize=None)
def _tril(m):
    i, j = np.tril_indices(m)
    scale = np.where(i == j, 1.0, SQRT2)
    return i, j, scale


def svec_dim(m):
    return m * (m + 1) // 2


def svec(X):
    """Stack the lower triangle of symmetric ``X`` (..., m, m) -> (..., m(m+1)/2)."""
    X = np.asarray(X)
    i, j, scale = _tril(X.shape[-1])
    return X[..., i, j] * scale


def smat(x, m=None):
    """Inverse of :func:`svec`."""
    x = np.asarray(x)
    if m is None:
        m = int((np.sqrt(8 * x.shape[-1] + 1) - 1) / 2)
    i, j, scale = _tril(m)
    X = np.zeros(x.shape[:-1] + (m, m))
    vals = x / scale
    X[..., i, j] = vals
    X[..., j, i] = vals
    return X


def hermitian_to_real(H):
    """Real symmetric embedding ``[[Re H, -Im H], [Im H, Re H]]``."""
    H = np.asarray(H)
    re, im = H.real, H.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def real_to_hermitian(S):
    """Project a real symmetric 2n x 2n matrix back onto a Hermitian n x n one.

    Averages the two copies, so it inverts :func:`hermitian_to_real` exactly.
    """
    S = np.asarray(S)
    n = S.shape[-1] // 2
    a, b = S[..., :n, :n], S[..., :n, n:]
    c, d = S[..., n:, :n], S[..., n:, n:]
    return 0.5 * (a + d) + 0.5j * (c - b)


@dataclass(frozen=True)
class Dims:
    l: int = 0
    q: tuple = ()
    s: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(int(x) for x in self.q))
        object.__setattr__(self, "s", tuple(int(x) for x in self.s))
        if any(x < 1 for x in self.q) or any(x < 1 for x in self.s) or self.l < 0:
            raise ValueError(f"invalid cone dimensions {self}")

    @property
    def size(self):
        return self.l + sum(self.q) + sum(svec_dim(m) for m in self.s)

    @property
    def degree(self):
        return self.l + len(self.q) + sum(self.s)

    def blocks(self):
        """Yield ``(kind, slice, dim)`` for every cone block."""
        start = 0
        if self.l:
            yield "l", slice(0, self.l), self.l
            start = self.l
        for m in self.q:
            yield "q", slice(start, start + m), m
            start += m
        for m in self.s:
            d = svec_dim(m)
            yield "s", slice(start, start + d), m
            start += d


def identity(dims: Dims):
    e = np.zeros(dims.size)
    for kind, sl, m in dims.blocks():
        if kind == "l":
            e[sl] = 1.0
        elif kind == "q":
            e[sl.start] = 1.0
        else:
            e[sl] = svec(np.eye(m))
    return e


def jordan(dims: Dims, x, y):
    """Jordan product ``x o y``."""
    out = np.empty(dims.size)
    for kind, sl, m in dims.blocks():
        a, b = x[sl], y[sl]
        if kind == "l":
            out[sl] = a * b
        elif kind == "q":
            out[sl.start] = a @ b
            out[sl.start + 1:sl.stop] = a[0] * b[1:] + b[0] * a[1:]
        else:
            A, B = smat(a, m), smat(b, m)
            AB = A @ B
            out[sl] = svec(0.5 * (AB + AB.T))
    return out


def in_interior(dims: Dims, x):
    for kind, sl, m in dims.blocks():
        a = x[sl]
        if kind == "l":
            if np.any(a <= 0):
                return False
        elif kind == "q":
            if a[0] <= np.linalg.norm(a[1:]):
                return False
        else:
            try:
                np.linalg.cholesky(smat(a, m))
            except np.linalg.LinAlgError:
                return False
    return True


def _jnorm(x):
    r = np.linalg.norm(x[1:])
    return np.sqrt((x[0] - r) * (x[0] + r))


def _soc_step(x, d):
    J_xx = _jnorm(x) ** 2
    J_xd = x[0] * d[0] - x[1:] @ d[1:]
    J_dd = d[0] ** 2 - d[1:] @ d[1:]
    disc = max(J_xd ** 2 - J_dd * J_xx, 0.0)
    root = np.sqrt(disc)
    if J_dd < 0 or J_xd < 0:
        denom = -J_xd + root
        return J_xx / denom if denom > 0 else np.inf
    return np.inf


def max_step(dims: Dims, x, d):
    """Largest ``alpha`` with ``x + alpha d`` in the cone (``x`` interior)."""
    alpha = np.inf
    for kind, sl, m in dims.blocks():
        a, b = x[sl], d[sl]
        if kind == "l":
            neg = b < 0
            if np.any(neg):
                alpha = min(alpha, np.min(-a[neg] / b[neg]))
        elif kind == "q":
            alpha = min(alpha, _soc_step(a, b))
        else:
            L = np.linalg.cholesky(smat(a, m))
            Linv = sla.solve_triangular(L, np.eye(m), lower=True)
            lam = np.linalg.eigvalsh(Linv @ smat(b, m) @ Linv.T)
            if lam[0] < 0:
                alpha = min(alpha, -1.0 / lam[0])
    return alpha


@dataclass
class Scaling:
    """Nesterov-Todd scaling ``W`` with ``W z = W^{-T} s = lam``."""

    dims: Dims
    lam: np.ndarray
    d_l: np.ndarray = None
    soc: list = field(default_factory=list)    # (W, W^{-1}) per block
    psd: list = field(default_factory=list)    # (R, R^{-1}, eigenvalues) per block
    dense: dict = field(default_factory=dict)

    def densify(self):
        """Cache the four operators as dense matrices (cheap at these sizes)."""
        eye = np.eye(self.dims.size)
        self.dense = {w: self._apply(eye, w) for w in ("W", "WT", "Winv", "WinvT")}
        return self

    def _apply(self, x, which):
        if which in self.dense:
            return self.dense[which] @ x
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        qi = si = 0
        for kind, sl, m in self.dims.blocks():
            a = x[sl]
            if kind == "l":
                out[sl] = (self.d_l if which in ("W", "WT") else 1.0 / self.d_l).reshape(
                    (-1,) + (1,) * (a.ndim - 1)) * a
            elif kind == "q":
                W, Winv = self.soc[qi]
                qi += 1
                out[sl] = (W if which in ("W", "WT") else Winv) @ a
            else:
                R, Rinv, _ = self.psd[si]
                si += 1
                X = smat(a.T if a.ndim > 1 else a, m)
                if which == "W":
                    Y = R.T @ X @ R
                elif which == "WT":
                    Y = R @ X @ R.T
                elif which == "Winv":
                    Y = Rinv.T @ X @ Rinv
                else:
                    Y = Rinv @ X @ Rinv.T
                y = svec(Y)
                out[sl] = y.T if a.ndim > 1 else y
        return out

    def W(self, x):
        return self._apply(x, "W")

    def WT(self, x):
        return self._apply(x, "WT")

    def Winv(self, x):
        return self._apply(x, "Winv")

    def WinvT(self, x):
        return self._apply(x, "WinvT")

    def lam_solve(self, r):
        """Solve ``lam o u = r`` for ``u``."""
        out = np.empty(self.dims.size)
        si = 0
        for kind, sl, m in self.dims.blocks():
            lam, b = self.lam[sl], r[sl]
            if kind == "l":
                out[sl] = b / lam
            elif kind == "q":
                l0, l1 = lam[0], lam[1:]
                det = l0 ** 2 - l1 @ l1
                u0 = (l0 * b[0] - l1 @ b[1:]) / det
                out[sl.start] = u0
                out[sl.start + 1:sl.stop] = (b[1:] - u0 * l1) / l0
            else:
                ev = self.psd[si][2]
                si += 1
                out[sl] = svec(2.0 * smat(b, m) / (ev[:, None] + ev[None, :]))
        return out


def nt_scaling(dims: Dims, s, z) -> Scaling:
    lam = np.empty(dims.size)
    sc = Scaling(dims, lam)
    for kind, sl, m in dims.blocks():
        a, b = s[sl], z[sl]
        if kind == "l":
            sc.d_l = np.sqrt(a / b)
            lam[sl] = np.sqrt(a * b)
        elif kind == "q":
            J = -np.eye(m)
            J[0, 0] = 1.0
            s_n = _jnorm(a)
            z_n = _jnorm(b)
            s_bar, z_bar = a / s_n, b / z_n
            gamma = np.sqrt(0.5 * (1.0 + s_bar @ z_bar))
            w_bar = (s_bar + J @ z_bar) / (2.0 * gamma)
            eta = np.sqrt(s_n / z_n)
            w0, w1 = w_bar[0], w_bar[1:]
            W = np.empty((m, m))
            W[0, 0] = w0
            W[0, 1:] = W[1:, 0] = w1
            W[1:, 1:] = np.eye(m - 1) + np.outer(w1, w1) / (1.0 + w0)
            Winv = J @ W @ J / eta
            W *= eta
            sc.soc.append((W, Winv))
            lam[sl] = W @ b
        else:
            Ls = np.linalg.cholesky(smat(a, m))
            Lz = np.linalg.cholesky(smat(b, m))
            U, ev, Vt = np.linalg.svd(Lz.T @ Ls)
            R = Ls @ Vt.T / np.sqrt(ev)
            Rinv = (U.T / np.sqrt(ev)[:, None]) @ Lz.T
            sc.psd.append((R, Rinv, ev))
            lam[sl] = svec(np.diag(ev))
    return sc
