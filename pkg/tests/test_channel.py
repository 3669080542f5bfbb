import json

import numpy as np
import pytest

from irsifc.channel import (ChannelFileError, Geometry, GeometryError, PathLossModel, SystemConfig,
                            cascade, channels_from_dict, channels_to_dict, generate_channels,
                            load_channels, noise_power, preset, save_channels)

from conftest import cn, make_cs, random_cs


def test_cascade_identity(rng):
    for _ in range(50):
        N, M = rng.integers(1, 6, size=2)
        f, G, v = cn(rng, N), cn(rng, N, M), np.exp(1j * rng.uniform(0, 6.3, N))
        # v^H Gamma is linear in conj(v), so the reflection matrix that
        # reproduces it is diag(conj(v))
        lhs = f.conj() @ np.diag(v.conj()) @ G
        rhs = v.conj() @ cascade(f, G)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(lhs)))


def test_cascade_conjugation():
    np.testing.assert_array_equal(cascade(np.array([1j]), np.array([[1.0]])), [[-1j]])


def test_cascade_matches_stored_gamma(rng):
    cs = random_cs(rng, K=2, M=3, N=4)
    for k in range(2):
        for i in range(2):
            for j in range(2):
                np.testing.assert_allclose(cs.Gamma[k, i, j], cascade(cs.f[k, i], cs.G[i, j]),
                                           atol=1e-15)


def test_config_validation():
    with pytest.raises(ValueError):
        SystemConfig(0, 1, 1, 1.0, 1.0)
    with pytest.raises(ValueError):
        SystemConfig(1, 1, 1, -1.0, 1.0)
    with pytest.raises(ValueError):
        SystemConfig(1, 1, 1, 1.0, 0.0)
    assert SystemConfig(3, 1, 1, 2.0, 1.0).P == (2.0, 2.0, 2.0)


def test_colocated_nodes_raise():
    cfg = SystemConfig(1, 1, 1, 1.0, 1.0)
    geom = Geometry(((0, 0),), ((0, 0),), ((1, 1),))
    with pytest.raises(GeometryError):
        generate_channels(cfg, geom, PathLossModel())


def test_same_seed_identical_channels():
    a = generate_channels(*preset("desk", seed=5)[:3])
    b = generate_channels(*preset("desk", seed=5)[:3])
    c = generate_channels(*preset("desk", seed=6)[:3])
    assert a.equals(b)
    assert not a.equals(c)


def test_link_draws_are_independent_of_dimensions():
    # per-link streams: the direct channel does not depend on N
    cfg, geom, plm = preset("desk", seed=2)
    small = generate_channels(cfg, geom, plm)
    big = generate_channels(SystemConfig(cfg.K, cfg.M, 2 * cfg.N, cfg.P, cfg.sigma2, cfg.seed), geom, plm)
    np.testing.assert_array_equal(small.h, big.h)


def test_channel_variance_follows_pathloss():
    plm = PathLossModel()
    geom = Geometry(((0, 0),), ((30, 0),), ((10, 5),))
    cfg = SystemConfig(1, 100, 100, 1.0, 1.0, seed=11)
    cs = generate_channels(cfg, geom, plm)
    d_direct, d_ti, d_ir = geom.distances()
    for arr, expect in ((cs.h, plm.gain(d_direct[0, 0], 3.6)), (cs.G, plm.gain(d_ti[0, 0], 2.0)),
                        (cs.f, plm.gain(d_ir[0, 0], 2.5))):
        assert arr.size >= 100
        emp = np.mean(np.abs(arr) ** 2)
        tol = 0.05 if arr.size >= 10_000 else 0.3
        assert abs(emp / expect - 1) < tol


def test_large_draw_variance_within_five_percent():
    plm = PathLossModel()
    geom = Geometry(((0, 0),), ((20, 0),), ((10, 5),))
    cs = generate_channels(SystemConfig(1, 128, 128, 1.0, 1.0, seed=3), geom, plm)
    d_ti = geom.distances()[1][0, 0]
    assert cs.G.size >= 10_000
    assert abs(np.mean(np.abs(cs.G) ** 2) / plm.gain(d_ti, 2.0) - 1) < 0.05


def test_noise_power_references():
    plm = PathLossModel()
    assert noise_power(20.0, 1.0, reference="transmit") == pytest.approx(1e-2)
    assert noise_power(0.0, 1.0, plm, 50.0, "direct") == pytest.approx(1e-3 * 50.0 ** -3.6)


def test_round_trip(tmp_path, rng):
    cs = generate_channels(*preset("desk", seed=9)[:3])
    path = tmp_path / "c.json"
    save_channels(cs, path)
    back = load_channels(path)
    assert back.equals(cs)
    np.testing.assert_array_equal(back.Gamma, cs.Gamma)


def test_mismatched_dimensions_rejected(rng):
    cs = random_cs(rng, K=1, M=2, N=3)
    data = channels_to_dict(cs)
    data["config"]["N"] = 4
    with pytest.raises(ChannelFileError):
        channels_from_dict(data)


def test_hand_written_file(tmp_path):
    doc = {"format": "irsifc-channels", "version": 1,
           "config": {"K": 1, "M": 1, "N": 1, "P": [1.0], "sigma2": 1.0, "seed": 0},
           "h": [[[[1.0, 0.0]]]], "G": [[[[[0.0, 2.0]]]]], "f": [[[[3.0, 0.0]]]]}
    path = tmp_path / "hand.json"
    path.write_text(json.dumps(doc))
    cs = load_channels(path)
    assert cs.h[0, 0, 0] == 1
    assert cs.Gamma[0, 0, 0, 0, 0] == 6j


def test_garbage_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ChannelFileError):
        load_channels(path)


def test_gamma_is_read_only(rng):
    cs = random_cs(rng)
    with pytest.raises(ValueError):
        cs.Gamma[0, 0, 0, 0, 0] = 1.0


def test_make_cs_helper():
    cs = make_cs(np.ones((1, 1, 1)), np.zeros((1, 1, 1, 1)), np.zeros((1, 1, 1)))
    assert (cs.K, cs.M, cs.N) == (1, 1, 1)
