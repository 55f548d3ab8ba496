"""Preset networks for the standard one-shot settings.

Each builder returns a :class:`ScenarioBundle` holding the network, its
auxiliary structure, the error set, the closed-form bound kind and a set of
*roles*: named views (e.g. ``"x"``, ``"yr"``) onto the network variables used
by the closed-form evaluators. Composite variables are flattened row-major
with the message always as the trailing component, e.g. ``U1 = (X, M)`` is
stored as ``x * L + m``.

Array conventions: distributions are 1-D (or joint n-D) arrays, kernels are
tables ``P(out | in...)`` with the output on the last axis, functions are
integer lookup tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .finite_prob import Kernel
from .network import (AuxStructure, ErrorSet, IdealJoint, NetworkSpec, Node, NodeAux, Ref, build_ideal_joint,
                      function_power, kernel_power)

KERNEL_ATOL = 1e-9


def _kernel(table) -> Kernel:
    return Kernel.from_table(np.asarray(table, dtype=float), atol=KERNEL_ATOL)


def _det(f, out_size) -> Kernel:
    return Kernel.deterministic(np.asarray(f, dtype=np.int64), out_size)


def _const(size: int, value: int = 0) -> Kernel:
    t = np.zeros(size)
    t[value] = 1.0
    return _kernel(t)


def _uniform(size: int) -> Kernel:
    return _kernel(np.full(size, 1.0 / size))


def _trivial_aux() -> tuple:
    return 1, _kernel(np.ones(1))


def _pmf(p, name):
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1) > KERNEL_ATOL:
        raise ValueError(f"{name} is not a probability vector")
    return p


def _cond(t, name):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.abs(t.sum(axis=-1) - 1) > KERNEL_ATOL):
        raise ValueError(f"{name} rows must be probability vectors")
    return t


@dataclass
class ScenarioBundle:
    name: str
    spec: NetworkSpec
    aux: AuxStructure
    error_set: ErrorSet
    kind: str
    params: dict
    roles: dict
    recipe: tuple = ()
    _ij: IdealJoint | None = field(default=None, repr=False)

    def ideal_joint(self, cap: int | None = None) -> IdealJoint:
        if self._ij is None:
            self._ij = build_ideal_joint(self.spec, self.aux, cap)
        return self._ij


# -- point-to-point channel coding ---------------------------------------------

def _message_encoder(p_x, L):
    """Node 1 of every channel-coding style preset: ``Y1 = M``, ``U1 = (X, M)``, ``X1 = X``."""
    nx = p_x.size
    aux = np.zeros((L, nx * L))
    for m in range(L):
        aux[m, np.arange(nx) * L + m] = p_x
    node = Node(nx, L, _uniform(L), ())
    nax = NodeAux(nx * L, _kernel(aux), _det(np.arange(nx * L) // L, nx), ("Y1",), ("U1",))
    return node, nax


def channel_coding(p_x, ch, L: int) -> ScenarioBundle:
    """Message ``M ~ Unif[L]`` sent over ``ch`` with codebook distribution ``p_x``.

    With ``L = 1`` there is nothing to decode and the decoder outputs 0.
    """
    p_x, ch, L = _pmf(p_x, "P_X"), _cond(ch, "channel"), int(L)
    if L < 1:
        raise ValueError("L must be >= 1")
    nx, ny = ch.shape
    n1, a1 = _message_encoder(p_x, L)
    n2 = Node(L, ny, _kernel(ch), ("X1",))
    us, uk = _trivial_aux()
    if L == 1:
        a2 = NodeAux(us, uk, _const(1), (), ())
    else:
        a2 = NodeAux(us, uk, _det(np.arange(nx * L) % L, L), (), ("U1",), decode=(1,), d_unique=1)
    e = ErrorSet.message_mismatch([("X2", "Y1")])
    roles = {"x": Ref("X1"), "y": Ref("Y2"), "m": Ref("Y1")}
    recipe = ("channel_coding", {"p_x": p_x, "ch": ch, "L": L})
    return ScenarioBundle("channel_coding", NetworkSpec([n1, n2]), AuxStructure([a1, a2]), e, "p2p",
                          {"L": L}, roles, recipe)


# -- Gelfand-Pinsker --------------------------------------------------------------

def gelfand_pinsker(p_s, p_u_s, x_func, ch, L: int) -> ScenarioBundle:
    """Channel with state ``S`` known at the encoder.

    ``p_u_s[s, u]``, ``x_func[u, s]`` and ``ch[x, s, y]``. ``Y1 = (S, M)``,
    ``U1 = (U, M)``, ``X1 = x(U, S)``; node 2 decodes ``U1`` and outputs ``M``.
    """
    p_s, p_u_s, ch, L = _pmf(p_s, "P_S"), _cond(p_u_s, "P_U|S"), _cond(ch, "channel"), int(L)
    x_func = np.asarray(x_func, dtype=np.int64)
    ns, nu = p_u_s.shape
    nx, _, ny = ch.shape
    y1 = np.repeat(p_s, L) / L
    aux = np.zeros((ns * L, nu * L))
    for s in range(ns):
        for m in range(L):
            aux[s * L + m, np.arange(nu) * L + m] = p_u_s[s]
    y1v, u1v = np.meshgrid(np.arange(ns * L), np.arange(nu * L), indexing="ij")
    n1 = Node(nx, ns * L, _kernel(y1), ())
    a1 = NodeAux(nu * L, _kernel(aux), _det(x_func[u1v // L, y1v // L], nx), ("Y1",), ("Y1", "U1"))
    n2 = Node(L, ny, _kernel(np.repeat(ch, L, axis=1)), ("X1", "Y1"))
    us, uk = _trivial_aux()
    if L == 1:
        a2 = NodeAux(us, uk, _const(1))
    else:
        a2 = NodeAux(us, uk, _det(np.arange(nu * L) % L, L), (), ("U1",), decode=(1,), d_unique=1)
    e = ErrorSet.message_mismatch([("X2", Ref("Y1", (ns, L), 1))])
    roles = {"s": Ref("Y1", (ns, L), 0), "u": Ref("U1", (nu, L), 0), "x": Ref("X1"), "y": Ref("Y2")}
    recipe = ("gelfand_pinsker", {"p_s": p_s, "p_u_s": p_u_s, "x_func": x_func, "ch": ch, "L": L})
    return ScenarioBundle("gelfand_pinsker", NetworkSpec([n1, n2]), AuxStructure([a1, a2]), e, "gp",
                          {"L": L}, roles, recipe)


# -- source coding family ---------------------------------------------------------

def _source_pair(p_x, p_t_x, p_u_x, z_func, L, nz):
    """Encoder sees ``X``, sends ``M``; decoder sees ``(T, M)`` and outputs ``z(U, T)``."""
    nx, nt = p_t_x.shape
    nu = p_u_x.shape[1]
    aux = np.repeat(p_u_x, L, axis=1) / L
    n1 = Node(L, nx, _kernel(p_x), ())
    a1 = NodeAux(nu * L, _kernel(aux), _det(np.arange(nu * L) % L, L), ("Y1",), ("U1",))
    ch = np.zeros((nx, L, nt * L))
    for m in range(L):
        ch[:, m, np.arange(nt) * L + m] = p_t_x
    y2v, u1v = np.meshgrid(np.arange(nt * L), np.arange(nu * L), indexing="ij")
    n2 = Node(nz, nt * L, _kernel(ch), ("Y1", "X1"))
    us, uk = _trivial_aux()
    a2 = NodeAux(us, uk, _det(z_func[u1v // L, y2v // L], nz), (), ("Y2", "U1"), decode=(1,), d_unique=1)
    roles = {"x": Ref("Y1"), "t": Ref("Y2", (nt, L), 0), "u": Ref("U1", (nu, L), 0), "z": Ref("X2"),
             "m": Ref("X1")}
    return NetworkSpec([n1, n2]), AuxStructure([a1, a2]), roles


def _z_table(z_func, d_table, nu, nt):
    z = np.asarray(z_func, dtype=np.int64)
    if z.ndim == 1:
        z = np.repeat(z[:, None], nt, axis=1)
    if z.shape != (nu, nt):
        raise ValueError(f"z function shape {z.shape}, expected {(nu, nt)}")
    if z.min() < 0 or z.max() >= d_table.shape[1]:
        raise ValueError("z function exceeds the reconstruction alphabet")
    return z


def wyner_ziv(p_x, p_t_x, p_u_x, z_func, L: int, d_table, D: float) -> ScenarioBundle:
    """Lossy source coding with decoder side information ``T``.

    ``p_t_x[x, t]``, ``p_u_x[x, u]``, ``z_func[u, t]``, ``d_table[x, z]``;
    error when ``d(X, Z) > D``.
    """
    p_x, p_t_x, p_u_x = _pmf(p_x, "P_X"), _cond(p_t_x, "P_T|X"), _cond(p_u_x, "P_U|X")
    d_table, L = np.asarray(d_table, dtype=float), int(L)
    z = _z_table(z_func, d_table, p_u_x.shape[1], p_t_x.shape[1])
    spec, aux, roles = _source_pair(p_x, p_t_x, p_u_x, z, L, d_table.shape[1])
    e = ErrorSet.distortion("Y1", "X2", d_table, D)
    recipe = ("wyner_ziv", {"p_x": p_x, "p_t_x": p_t_x, "p_u_x": p_u_x, "z_func": z, "L": L,
                            "d_table": d_table, "D": float(D)})
    return ScenarioBundle("wyner_ziv", spec, aux, e, "wz", {"L": L, "D": float(D)}, roles, recipe)


def lossy_source(p_x, p_u_x, z_func, L: int, d_table, D: float) -> ScenarioBundle:
    """Wyner-Ziv without side information (``|T| = 1``); ``z_func[u]``."""
    p_x = _pmf(p_x, "P_X")
    z = np.asarray(z_func, dtype=np.int64).reshape(-1, 1)
    b = wyner_ziv(p_x, np.ones((p_x.size, 1)), p_u_x, z, L, d_table, D)
    b.name = "lossy_source"
    b.recipe = ("lossy_source", {"p_x": p_x, "p_u_x": np.asarray(p_u_x, dtype=float), "z_func": z[:, 0],
                                 "L": int(L), "d_table": np.asarray(d_table, dtype=float), "D": float(D)})
    return b


def lossless_source(p_x, L: int) -> ScenarioBundle:
    """Fixed-length lossless coding: ``U = Z = X``, Hamming distortion, ``D = 0``."""
    p_x = _pmf(p_x, "P_X")
    n = p_x.size
    b = lossy_source(p_x, np.eye(n), np.arange(n), L, 1.0 - np.eye(n), 0.0)
    b.name = "lossless_source"
    b.recipe = ("lossless_source", {"p_x": p_x, "L": int(L)})
    return b


def coding_for_computing(p_x, p_t_x, p_u_x, f, z_func, L: int, d_table, D: float) -> ScenarioBundle:
    """Decoder with side information ``T`` estimates ``f(X, T)``.

    ``f[x, t]`` and ``z_func[u, t]`` index rows and columns of ``d_table``;
    error when ``d(f(X, T), Z) > D``.
    """
    p_x, p_t_x, p_u_x = _pmf(p_x, "P_X"), _cond(p_t_x, "P_T|X"), _cond(p_u_x, "P_U|X")
    d_table, L, f = np.asarray(d_table, dtype=float), int(L), np.asarray(f, dtype=np.int64)
    nt = p_t_x.shape[1]
    z = _z_table(z_func, d_table, p_u_x.shape[1], nt)
    spec, aux, roles = _source_pair(p_x, p_t_x, p_u_x, z, L, d_table.shape[1])
    e = ErrorSet.function_mismatch(("Y1", Ref("Y2", (nt, L), 0)), f, "X2", d_table, D)
    roles["f"] = f
    recipe = ("coding_for_computing", {"p_x": p_x, "p_t_x": p_t_x, "p_u_x": p_u_x, "f": f, "z_func": z,
                                       "L": L, "d_table": d_table, "D": float(D)})
    return ScenarioBundle("coding_for_computing", spec, aux, e, "computing", {"L": L, "D": float(D)}, roles,
                          recipe)


# -- multiple access ----------------------------------------------------------------

def mac(p_x1, p_x2, ch, L1: int, L2: int) -> ScenarioBundle:
    """Two-user multiple access channel ``ch[x1, x2, y]``.

    Node 3 decodes with order ``(U2, U1)`` and both uniquely: ``U1`` is
    refined softly while ``U2`` is decoded, then ``U1`` is decoded given
    ``U2``.
    """
    p_x1, p_x2, ch = _pmf(p_x1, "P_X1"), _pmf(p_x2, "P_X2"), _cond(ch, "channel")
    L1, L2 = int(L1), int(L2)
    n1, a1 = _message_encoder(p_x1, L1)
    n2, a2 = _message_encoder(p_x2, L2)
    n2 = Node(n2.x_size, n2.y_size, n2.channel, ())
    a2 = NodeAux(a2.u_size, a2.aux_kernel, a2.out_kernel, ("Y2",), ("U2",))
    nx1, nx2, ny = ch.shape
    u1v, u2v = np.meshgrid(np.arange(nx1 * L1), np.arange(nx2 * L2), indexing="ij")
    n3 = Node(L1 * L2, ny, _kernel(ch), ("X1", "X2"))
    us, uk = _trivial_aux()
    a3 = NodeAux(us, uk, _det((u1v % L1) * L2 + u2v % L2, L1 * L2), (), ("U1", "U2"), decode=(2, 1), d_unique=2)
    e = ErrorSet.message_mismatch([(Ref("X3", (L1, L2), 0), "Y1"), (Ref("X3", (L1, L2), 1), "Y2")])
    roles = {"x1": Ref("X1"), "x2": Ref("X2"), "y": Ref("Y3")}
    recipe = ("mac", {"p_x1": p_x1, "p_x2": p_x2, "ch": ch, "L1": L1, "L2": L2})
    return ScenarioBundle("mac", NetworkSpec([n1, n2, n3]), AuxStructure([a1, a2, a3]), e, "mac",
                          {"L1": L1, "L2": L2}, roles, recipe)


# -- broadcast ----------------------------------------------------------------------

def broadcast(p_u1u2, x_func, ch, L1: int, L2: int, swap: bool = False) -> ScenarioBundle:
    """Two-receiver broadcast channel ``ch[x, y1, y2]`` with superposition-free binning.

    The encoder is split in two nodes: node 1 picks ``(U1, M1)``, node 2 picks
    ``(U2, M2)`` given ``U1`` and sends ``x(U1, U2)``. Receiver 1 (node 3)
    sees ``Y1`` and decodes ``U1``; receiver 2 (node 4) sees ``Y2`` and
    decodes ``U2``. ``swap`` exchanges the receivers, giving the other
    corner point.
    """
    p, ch = np.asarray(p_u1u2, dtype=float), np.asarray(ch, dtype=float)
    _cond(ch.reshape(ch.shape[0], -1), "channel")
    if abs(p.sum() - 1) > KERNEL_ATOL or np.any(p < 0):
        raise ValueError("P_U1U2 is not a probability table")
    x_func = np.asarray(x_func, dtype=np.int64)
    L1, L2 = int(L1), int(L2)
    chx = np.swapaxes(ch, 1, 2) if swap else ch
    n_u1, n_u2 = p.shape
    nx, ny1, ny2 = chx.shape
    p1 = p.sum(axis=1)
    p2_1 = np.divide(p, p1[:, None], out=np.full_like(p, 1.0 / n_u2), where=p1[:, None] > 0)
    n1, a1 = _message_encoder(p1, L1)
    y2 = np.zeros((n_u1, n_u1 * L2))
    for u in range(n_u1):
        y2[u, u * L2 + np.arange(L2)] = 1.0 / L2
    aux2 = np.zeros((n_u1 * L2, n_u2 * L2))
    for u in range(n_u1):
        for m in range(L2):
            aux2[u * L2 + m, np.arange(n_u2) * L2 + m] = p2_1[u]
    y2v, u2v = np.meshgrid(np.arange(n_u1 * L2), np.arange(n_u2 * L2), indexing="ij")
    n2 = Node(nx, n_u1 * L2, _kernel(y2), ("X1",))
    a2 = NodeAux(n_u2 * L2, _kernel(aux2), _det(x_func[y2v // L2, u2v // L2], nx), ("Y2",), ("Y2", "U2"))
    py1 = chx.sum(axis=2)
    py2 = np.divide(chx, py1[:, :, None], out=np.full_like(chx, 1.0 / ny2), where=py1[:, :, None] > 0)
    us, uk = _trivial_aux()
    n3 = Node(L1, ny1, _kernel(py1), ("X2",))
    a3 = NodeAux(us, uk, _det(np.arange(n_u1 * L1) % L1, L1), (), ("U1",), decode=(1,), d_unique=1)
    n4 = Node(L2, ny2, _kernel(py2), ("X2", "Y3"))
    a4 = NodeAux(us, uk, _det(np.arange(n_u2 * L2) % L2, L2), (), ("U2",), decode=(2,), d_unique=1)
    e = ErrorSet.message_mismatch([("X3", "Y1"), ("X4", Ref("Y2", (n_u1, L2), 1))])
    roles = {"u1": Ref("U1", (n_u1, L1), 0), "u2": Ref("U2", (n_u2, L2), 0), "x": Ref("X2"),
             "y1": Ref("Y3"), "y2": Ref("Y4")}
    recipe = ("broadcast", {"p_u1u2": p, "x_func": x_func, "ch": ch, "L1": L1, "L2": L2, "swap": bool(swap)})
    return ScenarioBundle("broadcast", NetworkSpec([n1, n2, n3, n4]), AuxStructure([a1, a2, a3, a4]), e,
                          "broadcast", {"L1": L1, "L2": L2, "swap": bool(swap)}, roles, recipe)


# -- relay channels -------------------------------------------------------------------

def relay(p_x, ch_r, p_u_yr, xr_func, ch, L: int) -> ScenarioBundle:
    """Compress-forward style one-shot relay channel.

    ``ch_r[x, yr]``, ``p_u_yr[yr, u]``, ``xr_func[yr, u]``,
    ``ch[x, yr, xr, y]``. The decoder (node 3) uses order ``(U1, U2)`` and
    decodes only ``U1`` uniquely.
    """
    p_x, ch_r, p_u_yr, ch = _pmf(p_x, "P_X"), _cond(ch_r, "P_Yr|X"), _cond(p_u_yr, "P_U|Yr"), _cond(ch, "channel")
    xr_func, L = np.asarray(xr_func, dtype=np.int64), int(L)
    nx, nyr = ch_r.shape
    nu = p_u_yr.shape[1]
    nxr = ch.shape[2]
    n1, a1 = _message_encoder(p_x, L)
    n2 = Node(nxr, nyr, _kernel(ch_r), ("X1",))
    a2 = NodeAux(nu, _kernel(p_u_yr), _det(xr_func, nxr), ("Y2",), ("Y2", "U2"))
    n3 = Node(L, ch.shape[3], _kernel(ch), ("X1", "Y2", "X2"))
    us, uk = _trivial_aux()
    a3 = NodeAux(us, uk, _det(np.arange(nx * L) % L, L), (), ("U1",), decode=(1, 2), d_unique=1)
    e = ErrorSet.message_mismatch([("X3", "Y1")])
    roles = {"x": Ref("X1"), "yr": Ref("Y2"), "u": Ref("U2"), "xr": Ref("X2"), "y": Ref("Y3")}
    recipe = ("relay", {"p_x": p_x, "ch_r": ch_r, "p_u_yr": p_u_yr, "xr_func": xr_func, "ch": ch, "L": L})
    return ScenarioBundle("relay", NetworkSpec([n1, n2, n3]), AuxStructure([a1, a2, a3]), e, "relay",
                          {"L": L}, roles, recipe)


def primitive_relay(p_x, ch_r, p_u_yr, ch1, p_xr, ch2, L: int) -> ScenarioBundle:
    """Relay with an orthogonal relay-to-destination link.

    The destination sees ``(Y', Y'')`` with ``ch1[x, yr, y']`` and
    ``ch2[xr, y'']``. The relay picks ``U2 = (U', Xr)`` from
    ``p_u_yr[yr, u'] * p_xr[xr]`` and transmits the ``Xr`` component.
    """
    p_x, ch_r, p_u_yr = _pmf(p_x, "P_X"), _cond(ch_r, "P_Yr|X"), _cond(p_u_yr, "P_U'|Yr")
    ch1, p_xr, ch2, L = _cond(ch1, "P_Y'|X,Yr"), _pmf(p_xr, "P_Xr"), _cond(ch2, "P_Y''|Xr"), int(L)
    nx, nyr = ch_r.shape
    nu = p_u_yr.shape[1]
    nxr, ny2 = ch2.shape
    ny1 = ch1.shape[2]
    n1, a1 = _message_encoder(p_x, L)
    aux2 = (p_u_yr[:, :, None] * p_xr[None, None, :]).reshape(nyr, nu * nxr)
    n2 = Node(nxr, nyr, _kernel(ch_r), ("X1",))
    a2 = NodeAux(nu * nxr, _kernel(aux2), _det(np.arange(nu * nxr) % nxr, nxr), ("Y2",), ("U2",))
    ch3 = (ch1[:, :, None, :, None] * ch2[None, None, :, None, :]).reshape(nx, nyr, nxr, ny1 * ny2)
    n3 = Node(L, ny1 * ny2, _kernel(ch3), ("X1", "Y2", "X2"))
    us, uk = _trivial_aux()
    a3 = NodeAux(us, uk, _det(np.arange(nx * L) % L, L), (), ("U1",), decode=(1, 2), d_unique=1)
    e = ErrorSet.message_mismatch([("X3", "Y1")])
    roles = {"x": Ref("X1"), "yr": Ref("Y2"), "u": Ref("U2", (nu, nxr), 0), "xr": Ref("X2"),
             "y1": Ref("Y3", (ny1, ny2), 0), "y2": Ref("Y3", (ny1, ny2), 1)}
    recipe = ("primitive_relay", {"p_x": p_x, "ch_r": ch_r, "p_u_yr": p_u_yr, "ch1": ch1, "p_xr": p_xr,
                                  "ch2": ch2, "L": L})
    return ScenarioBundle("primitive_relay", NetworkSpec([n1, n2, n3]), AuxStructure([a1, a2, a3]), e,
                          "primitive_relay", {"L": L}, roles, recipe)


def pdcf_relay(p_xv, ch_r, p_u_yrv, xr_func, ch, L: int, J: int) -> ScenarioBundle:
    """Partial decode-forward with compression at the relay.

    The message is split into ``M1 ~ Unif[J]`` (decoded by the relay) and
    ``M2 ~ Unif[L/J]``. The encoder is split into node 1 (picks
    ``(V, M1)``) and node 2 (picks ``(X, M1, M2)`` given ``V``). Node 3 is
    the relay, node 4 the destination with order ``(U2, U3, U1)`` and only
    ``U2`` unique.

    ``p_xv[x, v]``, ``ch_r[x, v, yr]``, ``p_u_yrv[yr, v, u]``,
    ``xr_func[yr, u, v]``, ``ch[x, yr, xr, y]``.
    """
    L, J = int(L), int(J)
    if J < 1 or L % J:
        raise ValueError("J must divide L")
    K = L // J
    p_xv = np.asarray(p_xv, dtype=float)
    if abs(p_xv.sum() - 1) > KERNEL_ATOL or np.any(p_xv < 0):
        raise ValueError("P_XV is not a probability table")
    ch_r, p_u_yrv, ch = _cond(ch_r, "P_Yr|X,V"), _cond(p_u_yrv, "P_U|Yr,V"), _cond(ch, "channel")
    xr_func = np.asarray(xr_func, dtype=np.int64)
    nx, nv = p_xv.shape
    nyr = ch_r.shape[2]
    nu = p_u_yrv.shape[2]
    nxr, ny = ch.shape[2], ch.shape[3]
    p_v = p_xv.sum(axis=0)
    p_x_v = np.divide(p_xv.T, p_v[:, None], out=np.full((nv, nx), 1.0 / nx), where=p_v[:, None] > 0)

    n1, a1 = _message_encoder(p_v, J)
    y2 = np.zeros((nv, J, nv * J * K))
    for v in range(nv):
        for m1 in range(J):
            y2[v, m1, (v * J + m1) * K + np.arange(K)] = 1.0 / K
    aux2 = np.zeros((nv * J * K, nx * J * K))
    for v in range(nv):
        for mm in range(J * K):
            aux2[v * J * K + mm, np.arange(nx) * J * K + mm] = p_x_v[v]
    n2 = Node(nx, nv * J * K, _kernel(y2), ("X1", "Y1"))
    a2 = NodeAux(nx * J * K, _kernel(aux2), _det(np.arange(nx * J * K) // (J * K), nx), ("Y2",), ("U2",))

    aux3 = np.zeros((nyr, nv * J, nu * J))
    for v in range(nv):
        for m1 in range(J):
            aux3[:, v * J + m1, np.arange(nu) * J + m1] = p_u_yrv[:, v, :]
    yv, u3v, u1v = np.meshgrid(np.arange(nyr), np.arange(nu * J), np.arange(nv * J), indexing="ij")
    n3 = Node(nxr, nyr, _kernel(ch_r), ("X2", "X1"))
    us, uk = _trivial_aux()
    a3 = NodeAux(nu * J, _kernel(aux3), _det(xr_func[yv, u3v // J, u1v // J], nxr), ("Y3", "U1"),
                 ("Y3", "U3", "U1"), decode=(1,), d_unique=1)
    n4 = Node(L, ny, _kernel(ch), ("X2", "Y3", "X3"))
    a4 = NodeAux(us, uk, _det(np.arange(nx * J * K) % (J * K), L), (), ("U2",), decode=(2, 3, 1), d_unique=1)
    e = ErrorSet.message_mismatch([(Ref("X4", (J, K), 0), "Y1"), (Ref("X4", (J, K), 1), Ref("Y2", (nv, J, K), 2))])
    roles = {"x": Ref("X2"), "v": Ref("X1"), "yr": Ref("Y3"), "u": Ref("U3", (nu, J), 0), "xr": Ref("X3"),
             "y": Ref("Y4")}
    recipe = ("pdcf_relay", {"p_xv": p_xv, "ch_r": ch_r, "p_u_yrv": p_u_yrv, "xr_func": xr_func, "ch": ch,
                             "L": L, "J": J})
    return ScenarioBundle("pdcf_relay", NetworkSpec([n1, n2, n3, n4]), AuxStructure([a1, a2, a3, a4]), e,
                          "pdcf", {"L": L, "J": J}, roles, recipe)


# -- n-fold lifting -----------------------------------------------------------------

BUILDERS = {
    "channel_coding": channel_coding,
    "gelfand_pinsker": gelfand_pinsker,
    "wyner_ziv": wyner_ziv,
    "lossy_source": lossy_source,
    "lossless_source": lossless_source,
    "coding_for_computing": coding_for_computing,
    "mac": mac,
    "broadcast": broadcast,
    "relay": relay,
    "primitive_relay": primitive_relay,
    "pdcf_relay": pdcf_relay,
}

# how each recipe argument lifts to n-fold: "pmf" and "kernel" take tensor
# powers, ("func", arg, axis) lifts a lookup table whose output alphabet is
# the size of ``arg`` along ``axis``, "dist" averages a distortion measure
_LIFT = {
    "p_x": "pmf", "p_s": "pmf", "p_x1": "pmf", "p_x2": "pmf", "p_xr": "pmf", "p_xv": "pmf", "p_u1u2": "pmf",
    "ch": "kernel", "ch_r": "kernel", "ch1": "kernel", "ch2": "kernel", "p_u_s": "kernel", "p_t_x": "kernel",
    "p_u_x": "kernel", "p_u_yr": "kernel", "p_u_yrv": "kernel",
    "d_table": "dist",
}
_FUNC_OUT = {
    ("gelfand_pinsker", "x_func"): ("ch", 0),
    ("broadcast", "x_func"): ("ch", 0),
    ("relay", "xr_func"): ("ch", 2),
    ("pdcf_relay", "xr_func"): ("ch", 2),
    ("wyner_ziv", "z_func"): ("d_table", 1),
    ("lossy_source", "z_func"): ("d_table", 1),
    ("coding_for_computing", "z_func"): ("d_table", 1),
    ("coding_for_computing", "f"): ("d_table", 0),
}


def distortion_power(d_table, n: int) -> np.ndarray:
    """Average per-letter distortion on ``n``-tuples, row-major composite indices."""
    d = np.asarray(d_table, dtype=float)
    out = d
    for _ in range(n - 1):
        out = np.add.outer(out, d)
    perm = [c * 2 + v for v in range(2) for c in range(n)]
    out = np.transpose(out, perm)
    return out.reshape(d.shape[0] ** n, d.shape[1] ** n) / n


def nfold(bundle: ScenarioBundle, n: int, cap: int | None = None, **overrides) -> ScenarioBundle:
    """The ``n``-letter version of a preset: every alphabet to the ``n``-th power.

    Message sizes are kept unless overridden (e.g. ``L=16``); distortion
    becomes the per-letter average and the threshold is kept.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    name, kwargs = bundle.recipe
    if n == 1 and not overrides:
        return bundle
    lifted = {}
    for k, v in kwargs.items():
        kind = _LIFT.get(k)
        if kind in ("pmf", "kernel"):
            lifted[k] = kernel_power(v, n, cap)
        elif kind == "dist":
            lifted[k] = distortion_power(v, n)
        elif (name, k) in _FUNC_OUT:
            src, axis = _FUNC_OUT[(name, k)]
            lifted[k] = function_power(v, np.asarray(kwargs[src]).shape[axis], n)
        else:
            lifted[k] = v
    lifted.update(overrides)
    out = BUILDERS[name](**lifted)
    out.params = dict(out.params, n=n)
    return out
