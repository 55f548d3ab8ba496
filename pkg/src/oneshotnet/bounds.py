"""Achievability bounds: the general network bound and its closed forms.

``B_{i,j}`` for node ``i`` and decoding position ``j`` is

    gamma_{i,j} * prod_{k=j..d} ( 2^{-iota(U_k; U_{rest(j,k)}, Y_i) + iota(U_k; U'_{a_k}, Y_{a_k})} + [k > j] )

where ``U_k`` is the auxiliary of node ``a_{i,k}``, ``rest(j,k)`` are the
decoding positions outside ``j..k``, ``U'_{a}`` are the auxiliaries node
``a`` decodes uniquely and ``gamma_{i,j} = prod_{k>j} (ln|U_k| + 1)``.
Densities are in bits, ``gamma`` uses natural logarithms.

The closed-form evaluators in :func:`corollary_bound` are written
independently of ``B_{i,j}`` so the two routes can be compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import KindMismatchError, ZeroProbabilityPointError
from .exp_process import Z99
from .finite_prob import JointDist, mutual_info
from .network import AuxStructure, ErrorSet, IdealJoint, uname, yname


@dataclass
class BoundReport:
    value: float
    method: str
    trials: int = 0
    ci: tuple = (math.nan, math.nan)
    terms: list = field(default_factory=list)
    gammas: dict = field(default_factory=dict)


def gamma(i: int, j: int, aux: AuxStructure) -> float:
    """``prod_{k=j+1}^{d_i} (ln|U_{a_{i,k}}| + 1)``; ``j`` is 1-based."""
    dec = aux.node(i).decode
    out = 1.0
    for a in dec[j:]:
        out *= math.log(aux.node(a).u_size) + 1
    return out


def _unique_names(aux: AuxStructure, a: int) -> list:
    return [uname(b) for b in aux.node(a).unique]


def b_term_values(ij: IdealJoint, i: int, j: int) -> np.ndarray:
    """``B_{i,j}`` at every atom of the ideal joint (``j`` is 1-based)."""
    aux, t = ij.aux, ij.table
    dec = aux.node(i).decode
    d = len(dec)
    if not 1 <= j <= d:
        raise ValueError(f"position {j} outside the decoding order of node {i}")
    out = np.full(t.n_atoms, gamma(i, j, aux))
    with np.errstate(over="ignore"):
        for k in range(j, d + 1):
            a = dec[k - 1]
            rest = [uname(b) for b in dec[: j - 1]] + [uname(b) for b in dec[k:]]
            expo = (-t.info_density(uname(a), rest + [yname(i)])
                    + t.info_density(uname(a), _unique_names(aux, a) + [yname(a)]))
            out *= np.exp2(expo) + (1.0 if k > j else 0.0)
    return out


def _atom_index(ij: IdealJoint, atom: dict) -> int:
    cols = ij.table.columns
    hit = np.ones(ij.n_atoms, dtype=bool)
    for k, v in atom.items():
        hit &= cols[k] == int(v)
    idx = np.flatnonzero(hit)
    if idx.size == 0:
        raise ZeroProbabilityPointError(f"atom {atom} has zero ideal probability")
    return int(idx[0])


def b_term(atom: dict, i: int, j: int, ij: IdealJoint) -> float:
    """``B_{i,j}`` at one atom given as ``{variable name: value}`` (all ``U`` and ``Y`` values suffice)."""
    return float(b_term_values(ij, i, j)[_atom_index(ij, atom)])


def _bound_terms(ij: IdealJoint, e: ErrorSet | None):
    aux = ij.aux
    parts = {}
    for i in range(1, ij.spec.N + 1):
        for j in range(1, aux.node(i).d_unique + 1):
            parts[(i, j)] = b_term_values(ij, i, j)
    ind = e.evaluate(ij.table.columns).astype(float) if e is not None else np.zeros(ij.n_atoms)
    return ind, parts


def theorem_value(ij: IdealJoint, e: ErrorSet | None = None) -> np.ndarray:
    """Per-atom ``1{ideal in E} + sum B_{i,j}`` before clamping."""
    ind, parts = _bound_terms(ij, e)
    return ind + sum(parts.values(), np.zeros(ij.n_atoms))


def theorem_bound(ij: IdealJoint, e: ErrorSet | None = None, method: str = "exact", trials: int = 10**6,
                  seed: int = 0) -> BoundReport:
    """``E[min{1{ideal in E} + sum_{i, j<=d'_i} B_{i,j}, 1}]`` under the ideal joint.

    ``method="exact"`` enumerates atoms with compensated summation;
    ``method="mc"`` draws ``trials`` atoms by inverse transform and reports a
    99% normal interval.
    """
    ind, parts = _bound_terms(ij, e)
    total = ind.copy()
    for v in parts.values():
        total += v
    val = np.minimum(total, 1.0)
    prob = ij.table.prob
    gammas = {(i, j): gamma(i, j, ij.aux) for (i, j) in parts}
    if method == "exact":
        terms = [(i, j, math.fsum((prob * v).tolist())) for (i, j), v in parts.items()]
        return BoundReport(math.fsum((prob * val).tolist()), "exact", 0, (math.nan, math.nan), terms, gammas)
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    if trials < 2:
        raise ValueError("Monte Carlo needs at least 2 trials")
    cum = np.cumsum(prob)
    cum /= cum[-1]
    s1 = s2 = 0.0
    term_sums = {k: 0.0 for k in parts}
    chunk = 1 << 20
    for start in range(0, trials, chunk):
        n = min(chunk, trials - start)
        u = rng.sample_uniforms(seed, n, start)
        idx = np.minimum(np.searchsorted(cum, u, side="right"), prob.size - 1)
        x = val[idx]
        s1 += math.fsum(x.tolist())
        s2 += math.fsum((x * x).tolist())
        for k, v in parts.items():
            term_sums[k] += math.fsum(v[idx].tolist())
    mean = s1 / trials
    var = max(s2 - trials * mean * mean, 0.0) / (trials - 1)
    half = Z99 * math.sqrt(var / trials)
    terms = [(i, j, term_sums[(i, j)] / trials) for (i, j) in parts]
    return BoundReport(mean, "mc", trials, (mean - half, mean + half), terms, gammas)


# -- closed forms ---------------------------------------------------------------

_ROLES = {
    "p2p": ("x", "y"),
    "gp": ("s", "u", "y"),
    "wz": ("x", "t", "u", "z"),
    "computing": ("x", "t", "u", "z"),
    "mac": ("x1", "x2", "y"),
    "broadcast": ("u1", "u2", "y1", "y2"),
    "relay": ("x", "yr", "u", "y"),
    "primitive_relay": ("x", "yr", "u", "xr", "y1", "y2"),
    "pdcf": ("x", "v", "yr", "u", "y"),
}

_PARAMS = {
    "p2p": ("L",), "gp": ("L",), "wz": ("L", "d_table", "D"), "computing": ("L", "d_table", "D", "f"),
    "mac": ("L1", "L2"), "broadcast": ("L1", "L2"), "relay": ("L",), "primitive_relay": ("L",),
    "pdcf": ("L", "J"),
}


def _role_table(ij: IdealJoint, roles: dict, names):
    t = ij.table
    cols = t.columns
    extra = {}
    sizes = {}
    for r in names:
        ref = roles[r]
        extra["@" + r] = (ref.values(cols), ref.size(t.sizes))
        sizes[r] = ref.size(t.sizes)
    return t.with_columns(extra), sizes


def corollary_value(kind: str, params: dict, ij: IdealJoint, roles: dict) -> np.ndarray:
    """Per-atom value of the closed-form expression inside ``E[min{., 1}]``."""
    if kind not in _ROLES:
        raise KindMismatchError(f"unknown bound kind {kind!r}")
    missing = [r for r in _ROLES[kind] if r not in roles] + [p for p in _PARAMS[kind] if p not in params]
    if missing:
        raise KindMismatchError(f"{kind} bound needs {missing}")
    t, sz = _role_table(ij, roles, _ROLES[kind])

    def grp(a):
        return ["@" + a] if isinstance(a, str) else ["@" + n for n in a]

    def i(a, b, c=()):
        return t.info_density(grp(a), grp(b), grp(c))

    def col(r):
        return t.column("@" + r)

    e2 = np.exp2
    with np.errstate(over="ignore"):
        if kind == "p2p":
            L = params["L"]
            return np.zeros(t.n_atoms) if L == 1 else L * e2(-i("x", "y"))
        if kind == "gp":
            L = params["L"]
            return np.zeros(t.n_atoms) if L == 1 else L * e2(-i("u", "y") + i("u", "s"))
        if kind in ("wz", "computing"):
            d, D = np.asarray(params["d_table"], dtype=float), params["D"]
            if kind == "wz":
                target = col("x")
            else:
                target = np.asarray(params["f"])[col("x"), col("t")]
            ind = (d[target, col("z")] > D).astype(float)
            return ind + e2(-i("u", "t") + i("u", "x")) / params["L"]
        if kind == "mac":
            L1, L2 = params["L1"], params["L2"]
            g = math.log(L1 * sz["x1"]) + 1
            return (g * L1 * L2 * e2(-i(("x1", "x2"), "y")) + g * L2 * e2(-i("x2", "y", "x1"))
                    + L1 * e2(-i("x1", "y", "x2")))
        if kind == "broadcast":
            return (params["L1"] * e2(-i("u1", "y1"))
                    + params["L2"] * e2(-i("u2", "y2") + i("u1", "u2")))
        if kind == "relay":
            g = math.log(sz["u"]) + 1
            return g * params["L"] * e2(-i("x", ("u", "y"))) * (e2(-i("u", "y") + i("u", "yr")) + 1)
        if kind == "primitive_relay":
            g = math.log(sz["u"] * sz["xr"]) + 1
            return (g * params["L"] * e2(-i("x", ("u", "y1")))
                    * (e2(-i("xr", "y2") + i("u", "yr", "y1")) + 1))
        # pdcf
        L, J = params["L"], params["J"]
        g = (math.log(J * sz["u"]) + 1) * (math.log(J * sz["v"]) + 1)
        return (J * e2(-i("v", "yr"))
                + g * (L / J) * e2(-i("x", ("u", "y"), "v")) * (e2(-i("u", ("v", "y")) + i("u", ("v", "yr"))) + 1)
                * (J * e2(-i("v", "y")) + 1))


def corollary_bound(kind: str, params: dict, ij: IdealJoint, roles: dict) -> BoundReport:
    """Exact ``E[min{closed form, 1}]`` for one of the preset kinds."""
    v = corollary_value(kind, params, ij, roles)
    value = math.fsum((ij.table.prob * np.minimum(v, 1.0)).tolist())
    return BoundReport(value, f"exact:{kind}")


def bundle_corollary_params(bundle) -> dict:
    """Closed-form parameters of a scenario bundle (adds distortion data from its recipe)."""
    p = dict(bundle.params)
    kw = bundle.recipe[1] if bundle.recipe else {}
    if bundle.kind in ("wz", "computing"):
        p["d_table"] = bundle.error_set.d_table
        p["D"] = bundle.error_set.D
        if bundle.kind == "computing":
            p["f"] = kw["f"]
    return p


def bundle_bounds(bundle, cap: int | None = None) -> tuple[BoundReport, BoundReport]:
    """``(theorem bound, closed-form bound)`` of a scenario bundle, both exact."""
    ij = bundle.ideal_joint(cap)
    th = theorem_bound(ij, bundle.error_set)
    co = corollary_bound(bundle.kind, bundle_corollary_params(bundle), ij, bundle.roles)
    return th, co


# -- asymptotic expressions ----------------------------------------------------------

PDCF_AXES = ("X", "V", "Yr", "U", "Xr", "Y")


@dataclass
class RateReport:
    rate: float
    feasible: bool
    terms: tuple
    constraint: tuple


def pdcf_rate(j: JointDist, tol: float = 1e-12) -> RateReport:
    """Rate of the partial decode-forward scheme with compression.

    ``j`` is a joint over ``(X, V, Yr, U, Xr, Y)`` in that axis order. The
    rate is the minimum of four mutual-information expressions; the scheme is
    feasible when ``I(U;Yr|V) <= I(U;Y|V) + I(U,Y;X|V)``.
    """
    if j.ndim != 6:
        raise KindMismatchError(f"expected a 6-axis joint over {PDCF_AXES}, got {j.ndim} axes")
    X, V, Yr, U, Xr, Y = range(6)
    mi = lambda a, b, c=(): mutual_info(j, a, b, c)  # noqa: E731
    base = mi([U, Y], [X], [V])
    iu_yr = mi([U], [Yr], [V])
    terms = (
        mi([V], [Y]) + base,
        mi([V], [Yr]) + base,
        mi([V, U], [Y]) + base - iu_yr,
        mi([V], [Yr]) + mi([U], [Y], [V]) + base - iu_yr,
    )
    rhs = mi([U], [Y], [V]) + base
    return RateReport(min(terms), bool(iu_yr <= rhs + tol), terms, (iu_yr, rhs))


def pdcf_joint(bundle, cap: int | None = None) -> JointDist:
    """The ``(X, V, Yr, U, Xr, Y)`` joint of a ``pdcf_relay`` bundle."""
    if bundle.kind != "pdcf":
        raise KindMismatchError(f"bundle kind {bundle.kind!r} is not pdcf")
    ij = bundle.ideal_joint(cap)
    names = ("x", "v", "yr", "u", "xr", "y")
    t, _ = _role_table(ij, bundle.roles, names)
    return t.to_joint(["@" + n for n in names], cap)


@dataclass
class MarginRow:
    i: int
    j: int
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def strict(self) -> bool:
        return self.margin > 1e-12


def admn_rate_check(ij: IdealJoint, aux: AuxStructure | None = None) -> list[MarginRow]:
    """Both sides of the memoryless-limit condition for every uniquely decoded position.

    ``lhs = I(U_j; U_{[d] minus j}, Y_i) - I(U_j; U'_{a_j}, Y_{a_j})`` and
    ``rhs = sum_{k>j} max{I(U_k; U'_{a_k}, Y_{a_k}) - I(U_k; U_{[d] minus [j..k]}, Y_i), 0}``.
    A positive margin predicts a vanishing n-letter bound.
    """
    aux = aux or ij.aux
    t = ij.table
    rows = []
    for i in range(1, ij.spec.N + 1):
        dec = aux.node(i).decode
        for j in range(1, aux.node(i).d_unique + 1):
            a = dec[j - 1]
            others = [uname(b) for b in dec if b != a]
            lhs = (t.mutual_info(uname(a), others + [yname(i)])
                   - t.mutual_info(uname(a), _unique_names(aux, a) + [yname(a)]))
            rhs = 0.0
            for k in range(j + 1, len(dec) + 1):
                ak = dec[k - 1]
                rest = [uname(b) for b in dec[: j - 1]] + [uname(b) for b in dec[k:]]
                rhs += max(t.mutual_info(uname(ak), _unique_names(aux, ak) + [yname(ak)])
                           - t.mutual_info(uname(ak), rest + [yname(i)]), 0.0)
            rows.append(MarginRow(i, j, lhs, rhs))
    return rows
