"""Channel synthesis for the IRS-aided MISO interference channel.

Index conventions used throughout the package::

    h[k, j]         direct channel, transmitter j -> receiver k      (M,)
    G[i, j]         transmitter j -> IRS i                           (N, M)
    f[k, i]         IRS i -> receiver k                              (N,)
    Gamma[k, i, j]  cascaded channel diag(conj(f[k, i])) @ G[i, j]   (N, M)

so that the composite link through IRS ``i`` reads ``v_i^H Gamma[k, i, j]``.
"""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

FILE_FORMAT = "irsifc-channels"
FILE_VERSION = 1


class GeometryError(ValueError):
    """Two nodes that share a link are co-located."""


class ChannelFileError(ValueError):
    """Malformed or dimensionally inconsistent channel file."""


@dataclass(frozen=True)
class SystemConfig:
    K: int
    M: int
    N: int
    P: tuple
    sigma2: float
    seed: int = 0

    def __post_init__(self):
        P = tuple(float(p) for p in np.broadcast_to(np.asarray(self.P, dtype=float), (self.K,)))
        object.__setattr__(self, "P", P)
        if self.K < 1 or self.M < 1 or self.N < 1:
            raise ValueError(f"K, M, N must be >= 1, got {(self.K, self.M, self.N)}")
        if any(p <= 0 for p in P):
            raise ValueError(f"power budgets must be positive, got {P}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def power(self) -> np.ndarray:
        return np.asarray(self.P)


@dataclass(frozen=True)
class Geometry:
    tx_pos: tuple
    rx_pos: tuple
    irs_pos: tuple

    def __post_init__(self):
        for name in ("tx_pos", "rx_pos", "irs_pos"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise ValueError(f"{name} must be a list of planar points")
            object.__setattr__(self, name, tuple(tuple(map(float, p)) for p in arr))
        if not len(self.tx_pos) == len(self.rx_pos) == len(self.irs_pos):
            raise ValueError("tx_pos, rx_pos and irs_pos must have one entry per pair")

    def distances(self):
        """Return (d_tx_rx[k, j], d_tx_irs[i, j], d_irs_rx[k, i])."""
        tx, rx, irs = (np.asarray(p) for p in (self.tx_pos, self.rx_pos, self.irs_pos))
        d_direct = np.linalg.norm(rx[:, None, :] - tx[None, :, :], axis=-1)
        d_tx_irs = np.linalg.norm(irs[:, None, :] - tx[None, :, :], axis=-1)
        d_irs_rx = np.linalg.norm(rx[:, None, :] - irs[None, :, :], axis=-1)
        for name, d in (("tx-rx", d_direct), ("tx-irs", d_tx_irs), ("irs-rx", d_irs_rx)):
            if np.any(d <= 0):
                raise GeometryError(f"zero {name} distance in geometry")
        return d_direct, d_tx_irs, d_irs_rx


@dataclass(frozen=True)
class PathLossModel:
    C0: float = 1e-3
    d0: float = 1.0
    beta_direct: float = 3.6
    beta_tx_irs: float = 2.0
    beta_irs_rx: float = 2.5

    def __post_init__(self):
        if not (self.C0 > 0 and self.d0 > 0):
            raise ValueError("C0 and d0 must be positive")
        if min(self.beta_direct, self.beta_tx_irs, self.beta_irs_rx) < 0:
            raise ValueError("path-loss exponents must be nonnegative")

    def gain(self, d, beta):
        """Average power gain C0 * (d/d0)^(-beta) of a link of length ``d``."""
        return self.C0 * (np.asarray(d, dtype=float) / self.d0) ** (-beta)


@dataclass(frozen=True, eq=False)
class ChannelSet:
    config: SystemConfig
    h: np.ndarray
    G: np.ndarray
    f: np.ndarray
    geometry: Geometry | None = None
    pathloss: PathLossModel | None = None
    Gamma: np.ndarray = field(init=False)

    def __post_init__(self):
        K, M, N = self.config.K, self.config.M, self.config.N
        h = np.array(self.h, dtype=complex)
        G = np.array(self.G, dtype=complex)
        f = np.array(self.f, dtype=complex)
        expect = {"h": (K, K, M), "G": (K, K, N, M), "f": (K, K, N)}
        for name, arr in (("h", h), ("G", G), ("f", f)):
            if arr.shape != expect[name]:
                raise ValueError(f"{name} has shape {arr.shape}, expected {expect[name]}")
        Gamma = np.conj(f)[:, :, None, :, None] * G[None, :, :, :, :]
        for name, arr in (("h", h), ("G", G), ("f", f), ("Gamma", Gamma)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def K(self):
        return self.config.K

    @property
    def M(self):
        return self.config.M

    @property
    def N(self):
        return self.config.N

    @property
    def sigma2(self):
        return self.config.sigma2

    @property
    def P(self):
        return self.config.power

    def without_irs(self) -> "ChannelSet":
        """Same direct links with every IRS->receiver channel zeroed."""
        return ChannelSet(self.config, self.h, self.G, np.zeros_like(self.f),
                          self.geometry, self.pathloss)

    def equals(self, other: "ChannelSet") -> bool:
        return (self.config == other.config
                and self.geometry == other.geometry
                and self.pathloss == other.pathloss
                and all(np.array_equal(getattr(self, a), getattr(other, a))
                        for a in ("h", "G", "f")))


def cascade(f_ki, G_ij):
    """Cascaded channel ``diag(conj(f_ki)) @ G_ij``."""
    f_ki = np.asarray(f_ki, dtype=complex)
    G_ij = np.atleast_2d(np.asarray(G_ij, dtype=complex))
    if f_ki.ndim != 1 or G_ij.shape[0] != f_ki.shape[0]:
        raise ValueError(f"cannot cascade f of shape {f_ki.shape} with G of shape {G_ij.shape}")
    return np.conj(f_ki)[:, None] * G_ij


def stream(seed: int, name: str) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream name)."""
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), key])))


def _cscg(rng, shape, variance):
    scale = np.sqrt(variance / 2.0)
    z = rng.standard_normal(shape + (2,))
    return scale * (z[..., 0] + 1j * z[..., 1])


def generate_channels(config: SystemConfig, geom: Geometry, plm: PathLossModel) -> ChannelSet:
    """Draw Rayleigh-faded channels with distance-dependent path loss.

    Every link gets its own named random stream, so enlarging K, M or N
    leaves the draws of unrelated links unchanged.
    """
    K, M, N = config.K, config.M, config.N
    if len(geom.tx_pos) != K:
        raise ValueError(f"geometry describes {len(geom.tx_pos)} pairs, config has K={K}")
    d_direct, d_tx_irs, d_irs_rx = geom.distances()
    seed = config.seed
    h = np.empty((K, K, M), dtype=complex)
    G = np.empty((K, K, N, M), dtype=complex)
    f = np.empty((K, K, N), dtype=complex)
    for k in range(K):
        for j in range(K):
            var = plm.gain(d_direct[k, j], plm.beta_direct)
            h[k, j] = _cscg(stream(seed, f"h/{k}/{j}"), (M,), var)
    for i in range(K):
        for j in range(K):
            var = plm.gain(d_tx_irs[i, j], plm.beta_tx_irs)
            G[i, j] = _cscg(stream(seed, f"G/{i}/{j}"), (N, M), var)
    for k in range(K):
        for i in range(K):
            var = plm.gain(d_irs_rx[k, i], plm.beta_irs_rx)
            f[k, i] = _cscg(stream(seed, f"f/{k}/{i}"), (N,), var)
    return ChannelSet(config, h, G, f, geom, plm)


# -- presets -----------------------------------------------------------------

PRESETS = {
    "paper": dict(K=2, M=32, N=256),
    "desk": dict(K=2, M=4, N=8),
}

TX_POS = ((0.0, 50.0), (50.0, 50.0))
RX_POS = ((0.0, 0.0), (50.0, 0.0))


def noise_power(snr_db, P, plm: PathLossModel | None = None, distance=None, reference="direct"):
    """Noise power that realizes ``snr_db`` for a transmitter of power ``P``.

    ``reference="transmit"`` gives sigma2 = P / snr.  ``reference="direct"``
    additionally folds in the average direct-link gain at ``distance``, so
    that ``snr_db`` is the mean received per-antenna SNR of that link.
    """
    snr = 10.0 ** (snr_db / 10.0)
    if reference == "transmit":
        return P / snr
    if reference == "direct":
        return P * float(plm.gain(distance, plm.beta_direct)) / snr
    raise ValueError(f"unknown SNR reference {reference!r}")


def preset(name="desk", seed=0, snr_db=20.0, snr_reference="direct", P=1.0, plm=None, **overrides):
    """Return (config, geometry, pathloss) for the two-pair layout.

    Transmitters sit at (0, 50) and (50, 50), receivers at (0, 0) and
    (50, 0); each IRS is dropped uniformly at random in the 50 m x 50 m
    rectangle they span, from its own stream so the drop depends only on
    ``seed``.
    """
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    dims = dict(PRESETS[name])
    dims.update({k: v for k, v in overrides.items() if k in ("M", "N")})
    plm = plm or PathLossModel()
    rng = stream(seed, "irs_pos")
    irs = rng.uniform(0.0, 50.0, size=(2, 2))
    geom = Geometry(TX_POS, RX_POS, irs)
    d_pair = float(np.linalg.norm(np.subtract(RX_POS[0], TX_POS[0])))
    sigma2 = noise_power(snr_db, P, plm, d_pair, snr_reference)
    config = SystemConfig(K=dims["K"], M=dims["M"], N=dims["N"], P=(P,) * dims["K"],
                          sigma2=sigma2, seed=seed)
    return config, geom, plm


# -- serialization -----------------------------------------------------------

def _encode(arr):
    arr = np.asarray(arr)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _decode(obj, name):
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ChannelFileError(f"{name}: ragged or non-numeric tensor") from exc
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise ChannelFileError(f"{name}: complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def channels_to_dict(cs: ChannelSet) -> dict:
    cfg = asdict(cs.config)
    cfg["P"] = list(cs.config.P)
    return {
        "format": FILE_FORMAT,
        "version": FILE_VERSION,
        "config": cfg,
        "geometry": None if cs.geometry is None else {
            "tx_pos": [list(p) for p in cs.geometry.tx_pos],
            "rx_pos": [list(p) for p in cs.geometry.rx_pos],
            "irs_pos": [list(p) for p in cs.geometry.irs_pos],
        },
        "pathloss": None if cs.pathloss is None else asdict(cs.pathloss),
        "h": _encode(cs.h),
        "G": _encode(cs.G),
        "f": _encode(cs.f),
    }


def channels_from_dict(data: dict) -> ChannelSet:
    if not isinstance(data, dict) or data.get("format") != FILE_FORMAT:
        raise ChannelFileError("not a channel file")
    try:
        cfg = data["config"]
        config = SystemConfig(K=int(cfg["K"]), M=int(cfg["M"]), N=int(cfg["N"]),
                              P=tuple(cfg["P"]), sigma2=float(cfg["sigma2"]),
                              seed=int(cfg.get("seed", 0)))
        geom = None if data.get("geometry") is None else Geometry(**data["geometry"])
        plm = None if data.get("pathloss") is None else PathLossModel(**data["pathloss"])
        h, G, f = (_decode(data[name], name) for name in ("h", "G", "f"))
    except KeyError as exc:
        raise ChannelFileError(f"missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ChannelFileError):
            raise
        raise ChannelFileError(str(exc)) from exc
    try:
        return ChannelSet(config, h, G, f, geom, plm)
    except ValueError as exc:
        raise ChannelFileError(f"dimension inconsistency: {exc}") from exc


def save_channels(cs: ChannelSet, path) -> None:
    Path(path).write_text(json.dumps(channels_to_dict(cs)) + "\n")


def load_channels(path) -> ChannelSet:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ChannelFileError(f"{path}: {exc}") from exc
    return channels_from_dict(data)
