import numpy as np
import pytest

from oneshotnet.errors import CapacityExceededError
from oneshotnet.finite_prob import Kernel
from oneshotnet.network import (AuxStructure, ErrorSet, NetworkSpec, Node, NodeAux, Ref, build_ideal_joint,
                                error_probability_ideal, function_power, kernel_power, tensor_power, validate)

from instances import bsc, micro_instances
from nets import chain_network, identity_coding


def two_node(decode=(1,), d_unique=1, out_parents=("U1",), ch_parents=("X1",)):
    spec, aux, e = identity_coding(2)
    a2 = aux.node(2)
    n2 = spec.node(2)
    aux = AuxStructure([aux.node(1), NodeAux(a2.u_size, a2.aux_kernel, a2.out_kernel, a2.aux_parents,
                                             out_parents, decode, d_unique)])
    spec = NetworkSpec([spec.node(1), Node(n2.x_size, n2.y_size, n2.channel, ch_parents)])
    return spec, aux, e


def test_validate_accepts_presets():
    for b in micro_instances().values():
        assert validate(b.spec, b.aux, b.error_set) == []
    assert validate(*chain_network()) == []


def test_validate_diagnostics():
    spec, aux, e = two_node(decode=(2,))
    assert any("decode index 2 not in [i-1]" in m for m in validate(spec, aux))
    spec, aux, e = two_node(d_unique=2)
    assert any("d' = 2" in m for m in validate(spec, aux))
    spec, aux, e = two_node(ch_parents=("Y2",))
    assert any("not an earlier X or Y" in m for m in validate(spec, aux))
    spec, aux, e = two_node(decode=(), d_unique=0)
    assert any("output kernel parent U1" in m for m in validate(spec, aux))
    spec, aux, e = two_node()
    assert any("not an X or Y" in m for m in validate(spec, aux, ErrorSet.message_mismatch([("U1", "Y1")])))
    assert any("radix" in m for m in validate(spec, aux, ErrorSet.message_mismatch([(Ref("Y1", (3, 2), 0), "X2")])))
    bad = Node(2, 2, Kernel.from_table(np.full((3, 2), 0.5)), ("X1",))
    assert any("kernel shape" in m for m in validate(NetworkSpec([spec.node(1), bad]), aux))
    assert validate(NetworkSpec([spec.node(1)]), aux)[0].startswith("aux structure has 2 nodes")


def test_validate_capacity():
    spec, aux, e = identity_coding(4)
    assert any("atom cap" in m for m in validate(spec, aux, e, cap=3))


def test_ideal_joint_matches_dense_product():
    p = 0.1
    spec, aux, e = identity_coding(2)
    n2 = Node(2, 2, Kernel.from_table(bsc(p)), ("X1",))
    spec = NetworkSpec([spec.node(1), n2])
    ij = build_ideal_joint(spec, aux)
    assert ij.table.total() == pytest.approx(1.0, abs=1e-15)
    # Y1=m uniform; U1=(x,m) with x uniform; X1=x; Y2 ~ BSC(x); X2 = m
    dense = np.zeros((2, 4, 2, 2, 2))
    for m in range(2):
        for x in range(2):
            for y in range(2):
                dense[m, x * 2 + m, x, y, m] = 0.25 * bsc(p)[x, y]
    assert np.allclose(ij.dense(["Y1", "U1", "X1", "Y2", "X2"]), dense)
    assert error_probability_ideal(ij, e) == 0.0
    assert error_probability_ideal(ij, ErrorSet.full()) == pytest.approx(1.0)
    assert error_probability_ideal(ij, ErrorSet.message_mismatch([("Y2", "X1")])) == pytest.approx(p)


def test_ideal_joint_capacity():
    spec, aux, e = identity_coding(4)
    with pytest.raises(CapacityExceededError):
        build_ideal_joint(spec, aux, cap=10)


def test_error_set_kinds():
    cols = {"X1": np.array([0, 1, 2, 3]), "Y1": np.array([0, 1, 1, 3])}
    assert ErrorSet.message_mismatch([("X1", "Y1")]).evaluate(cols).tolist() == [False, False, True, False]
    d = np.abs(np.subtract.outer(np.arange(4), np.arange(4)))
    assert ErrorSet.distortion("X1", "Y1", d, 0.5).evaluate(cols).tolist() == [False, False, True, False]
    f = np.array([[0, 1], [1, 0]])
    es = ErrorSet.function_mismatch([Ref("X1", (2, 2), 0), Ref("X1", (2, 2), 1)], f, Ref("Y1", (2, 2), 1),
                                    1 - np.eye(2), 0)
    assert es.evaluate(cols).tolist() == [False, False, False, True]
    assert ErrorSet.empty().evaluate(cols).sum() == 0
    assert es.variables() == {"X1", "Y1"}


def test_kernel_power():
    k = bsc(0.1)
    assert np.allclose(kernel_power(k, 2), np.kron(k, k))
    t = np.random.default_rng(0).random((2, 3, 2))
    t /= t.sum(-1, keepdims=True)
    k2 = kernel_power(t, 2)
    assert k2.shape == (4, 9, 4)
    for a in np.ndindex(2, 2, 3, 3, 2, 2):
        x1, x2, y1, y2, z1, z2 = a
        assert k2[x1 * 2 + x2, y1 * 3 + y2, z1 * 2 + z2] == pytest.approx(t[x1, y1, z1] * t[x2, y2, z2])
    f = np.array([[0, 2], [1, 1]])
    f2 = function_power(f, 3, 2)
    assert f2[1 * 2 + 0, 0 * 2 + 1] == f[1, 0] * 3 + f[0, 1]
    with pytest.raises(CapacityExceededError):
        kernel_power(t, 3, cap=100)


def test_tensor_power_doubles_information():
    spec, aux, e = identity_coding(2)
    spec = NetworkSpec([spec.node(1), Node(2, 2, Kernel.from_table(bsc(0.2)), ("X1",))])
    s2, a2 = tensor_power(spec, aux, 2)
    ij1, ij2 = build_ideal_joint(spec, aux), build_ideal_joint(s2, a2)
    assert s2.node(2).y_size == 4 and a2.node(1).u_size == 16
    assert ij2.table.mutual_info("X1", "Y2") == pytest.approx(2 * ij1.table.mutual_info("X1", "Y2"), abs=1e-12)
    assert ij2.n_atoms == ij1.n_atoms ** 2
