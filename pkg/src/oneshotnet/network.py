"""Acyclic discrete networks, auxiliary coding structures and ideal joints.

Variables are named ``X{i}``, ``Y{i}``, ``U{i}`` with 1-based node labels.
Every kernel names its parents explicitly; a channel may only look at
earlier ``X``/``Y`` variables, an auxiliary kernel at ``Y{i}`` and the
uniquely decoded auxiliaries, an output kernel additionally at ``U{i}``.
A kernel that ignores some allowed variable simply does not list it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityExceededError
from .finite_prob import AtomTable, Kernel, check_capacity, component


def xname(i: int) -> str:
    return f"X{i}"


def yname(i: int) -> str:
    return f"Y{i}"


def uname(i: int) -> str:
    return f"U{i}"


def _node_of(name: str) -> tuple[str, int]:
    return name[0], int(name[1:])


@dataclass(frozen=True)
class Node:
    """One node: alphabets and the channel producing its observation ``Y_i``."""

    x_size: int
    y_size: int
    channel: Kernel
    parents: tuple = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))


@dataclass(frozen=True)
class NetworkSpec:
    nodes: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))

    @property
    def N(self) -> int:
        return len(self.nodes)

    def node(self, i: int) -> Node:
        return self.nodes[i - 1]

    def sizes(self) -> dict:
        out = {}
        for i, nd in enumerate(self.nodes, start=1):
            out[xname(i)] = nd.x_size
            out[yname(i)] = nd.y_size
        return out


@dataclass(frozen=True)
class NodeAux:
    """Coding parameters of one node.

    ``decode`` is the decoding order ``a_{i,1..d_i}``; the first
    ``d_unique`` entries are decoded uniquely, the rest only softly.
    """

    u_size: int
    aux_kernel: Kernel
    out_kernel: Kernel
    aux_parents: tuple = ()
    out_parents: tuple = ()
    decode: tuple = ()
    d_unique: int = 0

    def __post_init__(self):
        object.__setattr__(self, "decode", tuple(int(a) for a in self.decode))
        object.__setattr__(self, "aux_parents", tuple(self.aux_parents))
        object.__setattr__(self, "out_parents", tuple(self.out_parents))

    @property
    def d(self) -> int:
        return len(self.decode)

    @property
    def unique(self) -> tuple:
        return self.decode[: self.d_unique]


@dataclass(frozen=True)
class AuxStructure:
    nodes: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))

    def node(self, i: int) -> NodeAux:
        return self.nodes[i - 1]

    def sizes(self) -> dict:
        return {uname(i): a.u_size for i, a in enumerate(self.nodes, start=1)}


def all_sizes(spec: NetworkSpec, aux: AuxStructure) -> dict:
    s = spec.sizes()
    s.update(aux.sizes())
    return s


# -- error sets --------------------------------------------------------------

@dataclass(frozen=True)
class Ref:
    """A variable, or one component of a row-major composite variable."""

    var: str
    radix: tuple = ()
    index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "radix", tuple(int(r) for r in self.radix))

    def values(self, cols: dict):
        v = cols[self.var]
        return component(v, self.radix, self.index) if self.radix else v

    def size(self, sizes: dict) -> int:
        return self.radix[self.index] if self.radix else sizes[self.var]


def _ref(r) -> Ref:
    if isinstance(r, Ref):
        return r
    if isinstance(r, str):
        return Ref(r)
    return Ref(*r)


@dataclass(frozen=True)
class ErrorSet:
    """Subset of the ``(x^N, y^N)`` outcome space.

    kinds: ``empty``, ``full``, ``message-mismatch`` (pairs of refs that must
    agree), ``distortion-threshold`` (``d[src, rec] > D``),
    ``function-mismatch`` (``d[f(args), rec] > D``), ``custom-table``
    (boolean table indexed by the refs).
    """

    kind: str
    refs: tuple = ()
    table: np.ndarray | None = None
    d_table: np.ndarray | None = None
    D: float = 0.0

    @classmethod
    def empty(cls):
        return cls("empty")

    @classmethod
    def full(cls):
        return cls("full")

    @classmethod
    def message_mismatch(cls, pairs):
        refs = tuple(_ref(r) for pair in pairs for r in pair)
        return cls("message-mismatch", refs)

    @classmethod
    def distortion(cls, source, recon, d_table, D):
        return cls("distortion-threshold", (_ref(source), _ref(recon)), None,
                   np.asarray(d_table, dtype=float), float(D))

    @classmethod
    def function_mismatch(cls, args, f_table, recon, d_table, D):
        refs = tuple(_ref(a) for a in args) + (_ref(recon),)
        return cls("function-mismatch", refs, np.asarray(f_table, dtype=np.int64),
                   np.asarray(d_table, dtype=float), float(D))

    @classmethod
    def custom(cls, refs, table):
        return cls("custom-table", tuple(_ref(r) for r in refs), np.asarray(table, dtype=bool))

    def evaluate(self, cols: dict) -> np.ndarray:
        n = len(next(iter(cols.values())))
        if self.kind == "empty":
            return np.zeros(n, dtype=bool)
        if self.kind == "full":
            return np.ones(n, dtype=bool)
        vals = [r.values(cols) for r in self.refs]
        if self.kind == "message-mismatch":
            out = np.zeros(n, dtype=bool)
            for a, b in zip(vals[0::2], vals[1::2]):
                out |= a != b
            return out
        if self.kind == "distortion-threshold":
            return self.d_table[vals[0], vals[1]] > self.D
        if self.kind == "function-mismatch":
            f = self.table[tuple(vals[:-1])]
            return self.d_table[f, vals[-1]] > self.D
        if self.kind == "custom-table":
            return self.table[tuple(vals)]
        raise ValueError(f"unknown error-set kind {self.kind!r}")

    def variables(self) -> set:
        return {r.var for r in self.refs}


# -- validation --------------------------------------------------------------

def _check_kernel(diag, where, k: Kernel, parents, sizes, out_size):
    for p in parents:
        if p not in sizes:
            diag.append(f"{where}: unknown parent {p!r}")
            return
    expect = tuple(sizes[p] for p in parents) + (out_size,)
    if k.table.shape != expect:
        diag.append(f"{where}: kernel shape {k.table.shape}, expected {expect}")


def validate(spec: NetworkSpec, aux: AuxStructure, error_set: ErrorSet | None = None,
             cap: int | None = None) -> list[str]:
    """Human-readable list of problems; empty when the pair is usable."""
    diag: list[str] = []
    if len(aux.nodes) != spec.N:
        return [f"aux structure has {len(aux.nodes)} nodes, network has {spec.N}"]
    sizes = all_sizes(spec, aux)
    for i in range(1, spec.N + 1):
        nd, ax = spec.node(i), aux.node(i)
        for p in nd.parents:
            kind, j = _node_of(p)
            if kind not in "XY" or j >= i or j < 1:
                diag.append(f"node {i}: channel parent {p} is not an earlier X or Y")
        if i == 1 and nd.parents:
            diag.append("node 1: channel must have no parents")
        _check_kernel(diag, f"node {i} channel", nd.channel, nd.parents, sizes, nd.y_size)
        if len(set(ax.decode)) != len(ax.decode):
            diag.append(f"node {i}: decode indices not distinct")
        for a in ax.decode:
            if not 1 <= a <= i - 1:
                diag.append(f"node {i}: decode index {a} not in [i-1]")
        if not 0 <= ax.d_unique <= ax.d:
            diag.append(f"node {i}: d' = {ax.d_unique} not within [0, d = {ax.d}]")
        uniq = {uname(a) for a in ax.unique if 1 <= a <= i - 1}
        allowed_aux = {yname(i)} | uniq
        allowed_out = allowed_aux | {uname(i)}
        for p in ax.aux_parents:
            if p not in allowed_aux:
                diag.append(f"node {i}: aux kernel parent {p} not in (Y{i}, uniquely decoded U)")
        for p in ax.out_parents:
            if p not in allowed_out:
                diag.append(f"node {i}: output kernel parent {p} not in (Y{i}, U{i}, uniquely decoded U)")
        _check_kernel(diag, f"node {i} aux kernel", ax.aux_kernel, ax.aux_parents, sizes, ax.u_size)
        _check_kernel(diag, f"node {i} output kernel", ax.out_kernel, ax.out_parents, sizes, nd.x_size)
    if error_set is not None:
        for r in error_set.refs:
            if r.var not in sizes or r.var[0] not in "XY":
                diag.append(f"error set refers to {r.var!r}, which is not an X or Y variable")
            elif r.radix and math.prod(r.radix) != sizes[r.var]:
                diag.append(f"error set component radix {r.radix} does not match |{r.var}| = {sizes[r.var]}")
    if not diag:
        try:
            build_ideal_joint(spec, aux, cap)
        except CapacityExceededError as exc:
            diag.append(f"ideal joint exceeds the atom cap: {exc}")
    return diag


# -- ideal joint --------------------------------------------------------------

def _expand(cols, prob, name, size, kernel: Kernel, parents, cap):
    n = prob.size
    if parents:
        rows = kernel.table[tuple(cols[p] for p in parents)]
    else:
        rows = np.broadcast_to(kernel.table, (n, size))
    ai, vals = np.nonzero(rows > 0)
    check_capacity(ai.size, cap, what=f"ideal joint after {name}")
    new_prob = prob[ai] * rows[ai, vals]
    new_cols = {k: v[ai] for k, v in cols.items()}
    new_cols[name] = vals.astype(np.int64)
    return new_cols, new_prob


@dataclass
class IdealJoint:
    """Support-only joint of every ``X_i, Y_i, U_i`` under the genie network."""

    spec: NetworkSpec
    aux: AuxStructure
    table: AtomTable
    directory: dict = field(default_factory=dict)

    @property
    def n_atoms(self) -> int:
        return self.table.n_atoms

    def dense(self, names, cap: int | None = None) -> np.ndarray:
        return self.table.to_dense(names, cap)

    def joint(self, names, cap: int | None = None):
        return self.table.to_joint(names, cap)


def build_ideal_joint(spec: NetworkSpec, aux: AuxStructure, cap: int | None = None) -> IdealJoint:
    """Sequential semidirect products: node by node, ``Y_i`` then ``U_i`` then ``X_i``."""
    cols: dict = {}
    prob = np.ones(1)
    sizes = all_sizes(spec, aux)
    for i in range(1, spec.N + 1):
        nd, ax = spec.node(i), aux.node(i)
        cols, prob = _expand(cols, prob, yname(i), nd.y_size, nd.channel, nd.parents, cap)
        cols, prob = _expand(cols, prob, uname(i), ax.u_size, ax.aux_kernel, ax.aux_parents, cap)
        cols, prob = _expand(cols, prob, xname(i), nd.x_size, ax.out_kernel, ax.out_parents, cap)
    order = [f(i) for i in range(1, spec.N + 1) for f in (yname, uname, xname)]
    table = AtomTable({k: cols[k] for k in order}, sizes, prob)
    directory = {"X": [xname(i) for i in range(1, spec.N + 1)],
                 "Y": [yname(i) for i in range(1, spec.N + 1)],
                 "U": [uname(i) for i in range(1, spec.N + 1)]}
    return IdealJoint(spec, aux, table, directory)


def error_probability_ideal(ij: IdealJoint, e: ErrorSet) -> float:
    hit = e.evaluate(ij.table.columns)
    return math.fsum(ij.table.prob[hit].tolist())


# -- n-fold products ----------------------------------------------------------

def kernel_power(table, n: int, cap: int | None = None) -> np.ndarray:
    """n-fold product kernel; composite indices are row-major over coordinates."""
    t = np.asarray(table, dtype=float)
    if n == 1:
        return t.copy()
    r = t.ndim
    check_capacity(t.size ** n, cap, what="n-fold kernel")
    out = t
    for _ in range(n - 1):
        out = np.multiply.outer(out, t)
    # axes are (coord, var) ordered; regroup as (var, coord)
    perm = [c * r + v for v in range(r) for c in range(n)]
    out = np.transpose(out, perm)
    return out.reshape(tuple(s ** n for s in t.shape))


def function_power(f, out_size: int, n: int) -> np.ndarray:
    """n-fold product of an integer lookup table."""
    f = np.asarray(f, dtype=np.int64)
    r = f.ndim
    out = f
    for _ in range(n - 1):
        out = np.add.outer(out * out_size, f)
    perm = [c * r + v for v in range(r) for c in range(n)]
    out = np.transpose(out, perm)
    return out.reshape(tuple(s ** n for s in f.shape))


def _kernel_pow(k: Kernel, n: int, cap) -> Kernel:
    return Kernel.from_table(kernel_power(k.table, n, cap), atol=1e-9)


def tensor_power(spec: NetworkSpec, aux: AuxStructure, n: int, cap: int | None = None):
    """The n-fold network: every alphabet raised to the n-th power, every kernel n-fold."""
    nodes = [Node(nd.x_size ** n, nd.y_size ** n, _kernel_pow(nd.channel, n, cap), nd.parents, nd.label)
             for nd in spec.nodes]
    auxes = [NodeAux(a.u_size ** n, _kernel_pow(a.aux_kernel, n, cap), _kernel_pow(a.out_kernel, n, cap),
                     a.aux_parents, a.out_parents, a.decode, a.d_unique) for a in aux.nodes]
    return NetworkSpec(nodes), AuxStructure(auxes)
