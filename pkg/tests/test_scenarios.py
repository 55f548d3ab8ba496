import math

import numpy as np
import pytest

from oneshotnet import scenarios as sc
from oneshotnet.bounds import bundle_bounds
from oneshotnet.network import error_probability_ideal, validate

from instances import bsc, micro_instances, pdcf_instance


def role_joint(b, names):
    """Dense joint of the named roles, built directly from the ideal-joint atoms."""
    ij = b.ideal_joint()
    cols, sizes = ij.table.columns, ij.table.sizes
    vals = [b.roles[n].values(cols) for n in names]
    shape = [b.roles[n].size(sizes) for n in names]
    flat = np.ravel_multi_index(vals, shape)
    return np.bincount(flat, weights=ij.table.prob, minlength=math.prod(shape)).reshape(shape)


@pytest.fixture(scope="module")
def micro():
    out = micro_instances()
    out["pdcf"] = pdcf_instance()
    return out


def test_all_presets_validate(micro):
    for b in micro.values():
        assert validate(b.spec, b.aux, b.error_set) == []
        assert b.ideal_joint().table.total() == pytest.approx(1.0, abs=1e-12)


def test_channel_coding_joint():
    ch = np.array([[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]])
    b = sc.channel_coding([0.4, 0.6], ch, 3)
    assert np.allclose(role_joint(b, ["m"]), 1 / 3)
    assert np.allclose(role_joint(b, ["x", "y"]), np.array([0.4, 0.6])[:, None] * ch)
    assert np.allclose(role_joint(b, ["m", "x"]), np.outer([1 / 3] * 3, [0.4, 0.6]))


def test_channel_coding_single_message():
    b = sc.channel_coding([0.5, 0.5], bsc(0.3), 1)
    assert b.aux.node(2).d == 0
    assert error_probability_ideal(b.ideal_joint(), b.error_set) == 0
    assert bundle_bounds(b)[0].value == 0


def test_gp_joint():
    p_s = np.array([0.3, 0.7])
    p_u_s = np.array([[0.9, 0.1], [0.2, 0.8]])
    xf = np.array([[0, 1], [1, 0]])
    ch = np.stack([bsc(0.02), bsc(0.1)], 1)
    b = sc.gelfand_pinsker(p_s, p_u_s, xf, ch, 3)
    expect = np.zeros((2, 2, 2, 2))
    for s in range(2):
        for u in range(2):
            expect[s, u, xf[u, s]] += p_s[s] * p_u_s[s, u] * ch[xf[u, s], s]
    assert np.allclose(role_joint(b, ["s", "u", "x", "y"]), expect)


def test_wz_and_computing_joint(micro):
    b = micro["wz"]
    j = role_joint(b, ["x", "t", "u", "z"])
    expect = np.einsum("x,xt,xu->xtu", [0.5, 0.5], bsc(0.1), bsc(0.05))
    assert np.allclose(j.sum(3), expect)
    assert np.allclose(j[..., 0] + j[..., 1], expect)
    assert np.all(j[:, :, 0, 1] == 0) and np.all(j[:, :, 1, 0] == 0)
    assert error_probability_ideal(b.ideal_joint(), b.error_set) == pytest.approx(0.05)
    c = micro["computing"]
    assert error_probability_ideal(c.ideal_joint(), c.error_set) > 0


def test_lossless_and_lossy():
    b = sc.lossless_source([0.5, 0.25, 0.25], 2)
    assert b.kind == "wz" and b.name == "lossless_source"
    assert error_probability_ideal(b.ideal_joint(), b.error_set) == 0
    b = sc.lossy_source([0.5, 0.5], bsc(0.2), [0, 1], 2, 1 - np.eye(2), 0)
    assert error_probability_ideal(b.ideal_joint(), b.error_set) == pytest.approx(0.2)


def test_mac_joint(micro):
    b = micro["mac"]
    ch = b.recipe[1]["ch"]
    assert np.allclose(role_joint(b, ["x1", "x2", "y"]), 0.25 * ch)
    assert b.aux.node(3).decode == (2, 1) and b.aux.node(3).d_unique == 2


def test_broadcast_joint_and_swap():
    p = np.array([[0.4, 0.1], [0.2, 0.3]])
    xf = np.array([[0, 1], [1, 0]])
    ch = np.einsum("xa,xb->xab", bsc(0.05), bsc(0.2))
    for swap in (False, True):
        b = sc.broadcast(p, xf, ch, 2, 3, swap=swap)
        assert validate(b.spec, b.aux, b.error_set) == []
        j = role_joint(b, ["u1", "u2", "x", "y1", "y2"])
        chx = np.swapaxes(ch, 1, 2) if swap else ch
        expect = np.zeros((2, 2, 2, 2, 2))
        for a in range(2):
            for c in range(2):
                expect[a, c, xf[a, c]] += p[a, c] * chx[xf[a, c]]
        assert np.allclose(j, expect)


def test_relay_joints(micro):
    b = micro["relay"]
    kw = b.recipe[1]
    j = role_joint(b, ["x", "yr", "u", "xr", "y"])
    expect = np.zeros(j.shape)
    for x, yr, u in np.ndindex(2, 2, 2):
        xr = kw["xr_func"][yr, u]
        expect[x, yr, u, xr] += 0.5 * kw["ch_r"][x, yr] * kw["p_u_yr"][yr, u] * kw["ch"][x, yr, xr]
    assert np.allclose(j, expect)
    b = micro["primitive_relay"]
    kw = b.recipe[1]
    j = role_joint(b, ["x", "yr", "u", "xr", "y1", "y2"])
    expect = np.einsum("x,xr,ru,q,xra,qb->xruqab", kw["p_x"], kw["ch_r"], kw["p_u_yr"], kw["p_xr"], kw["ch1"],
                       kw["ch2"])
    assert np.allclose(j, expect)


def test_pdcf_joint_and_message_split():
    b = pdcf_instance(L=4, J=2)
    kw = b.recipe[1]
    j = role_joint(b, ["x", "v", "yr", "u", "xr", "y"])
    expect = np.zeros(j.shape)
    for x, v, yr, u in np.ndindex(2, 2, 2, 2):
        xr = kw["xr_func"][yr, u, v]
        expect[x, v, yr, u, xr] += (kw["p_xv"][x, v] * kw["ch_r"][x, v, yr] * kw["p_u_yrv"][yr, v, u]
                                    * kw["ch"][x, yr, xr])
    assert np.allclose(j, expect)
    assert b.aux.node(4).decode == (2, 3, 1)
    with pytest.raises(ValueError):
        pdcf_instance(L=4, J=3)


def test_input_validation():
    with pytest.raises(ValueError):
        sc.channel_coding([0.5, 0.6], bsc(0.1), 2)
    with pytest.raises(ValueError):
        sc.channel_coding([0.5, 0.5], [[0.5, 0.4], [0.5, 0.5]], 2)
    with pytest.raises(ValueError):
        sc.channel_coding([0.5, 0.5], bsc(0.1), 0)
    with pytest.raises(ValueError):
        sc.wyner_ziv([0.5, 0.5], bsc(0.1), bsc(0.1), np.array([[0, 3], [1, 1]]), 2, 1 - np.eye(2), 0)
    # kernel rows are accepted within 1e-9 of unit mass
    sc.channel_coding([0.5, 0.5], bsc(0.1) + [[1e-10, 0], [0, 0]], 2)


def test_distortion_power():
    d = np.array([[0, 1], [2, 0]], dtype=float)
    d2 = sc.distortion_power(d, 2)
    for a, b, c, e in np.ndindex(2, 2, 2, 2):
        assert d2[a * 2 + b, c * 2 + e] == (d[a, c] + d[b, e]) / 2


def test_nfold(micro):
    for name in ("gp", "relay", "mac", "broadcast", "wz", "computing", "primitive_relay"):
        b = micro[name]
        b2 = sc.nfold(b, 2)
        assert b2.params["n"] == 2 and b2.kind == b.kind
        assert validate(b2.spec, b2.aux, b2.error_set) == []
    b = micro["gp"]
    b2 = sc.nfold(b, 2)
    i1 = b.ideal_joint().table.mutual_info("U1", "Y2")
    # the message component is shared, so compare the auxiliary components only
    j1, j2 = role_joint(b, ["u", "y"]), role_joint(b2, ["u", "y"])
    mi = lambda j: float(np.sum(j[j > 0] * np.log2(j[j > 0] / np.outer(j.sum(1), j.sum(0))[j > 0])))
    assert mi(j2) == pytest.approx(2 * mi(j1), abs=1e-12)
    assert i1 > 0
    b4 = sc.nfold(sc.channel_coding([0.5, 0.5], bsc(0.11), 2), 3, L=5)
    assert b4.params == {"L": 5, "n": 3}
    assert sc.nfold(b, 1) is b
    with pytest.raises(ValueError):
        sc.nfold(b, 0)
