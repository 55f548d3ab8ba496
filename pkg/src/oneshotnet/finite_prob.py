"""Finite-alphabet probability: dense joints, kernels, information densities.

All information quantities are in bits. Dense tensors are row-major over
their axes; :class:`AtomTable` is the support-only counterpart used for ideal
network distributions, whose role variables are heavily redundant
(a codeword index ``(x, m)`` next to its own ``x`` and ``m`` columns).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AllZeroError,
    BadAxisError,
    CapacityExceededError,
    NegativeWeightError,
    ProbabilityError,
    ShapeMismatchError,
    ZeroConditioningError,
    ZeroProbabilityPointError,
)

DEFAULT_ATOM_CAP = 10**7
ATOM_CAP_ENV = "ONESHOTNET_ATOM_CAP"
SUM_TOL = 1e-12


def atom_cap(cap: int | None = None) -> int:
    """Resolve the atom cap: explicit value, else environment override, else default."""
    if cap is not None:
        return int(cap)
    env = os.environ.get(ATOM_CAP_ENV)
    return int(env) if env else DEFAULT_ATOM_CAP


def check_capacity(n_atoms: int, cap: int | None = None, what: str = "table") -> None:
    limit = atom_cap(cap)
    if n_atoms > limit:
        raise CapacityExceededError(f"{what} needs {n_atoms} atoms, cap is {limit}")


@dataclass(frozen=True)
class Alphabet:
    """A finite alphabet ``{0, ..., size-1}``."""

    size: int
    label: str = ""

    def __post_init__(self):
        if int(self.size) < 1:
            raise ValueError(f"alphabet size must be >= 1, got {self.size}")
        object.__setattr__(self, "size", int(self.size))


def _as_alphabet(a) -> Alphabet:
    return a if isinstance(a, Alphabet) else Alphabet(int(a))


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FiniteDist:
    alphabet: Alphabet
    mass: np.ndarray

    def __post_init__(self):
        mass = _frozen(self.mass)
        if mass.shape != (self.alphabet.size,):
            raise ShapeMismatchError(f"mass shape {mass.shape} vs alphabet size {self.alphabet.size}")
        if np.any(mass < 0) or not np.all(np.isfinite(mass)):
            raise NegativeWeightError("distribution has negative or non-finite mass")
        if abs(mass.sum() - 1.0) > SUM_TOL * max(1, mass.size):
            raise ProbabilityError(f"mass sums to {mass.sum()!r}, not 1")
        object.__setattr__(self, "mass", mass)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.mass > 0)

    def __len__(self):
        return self.alphabet.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mass, dtype=dtype)


def normalize(weights, label: str = "") -> FiniteDist:
    """Scale non-negative weights to a probability vector.

    Raises :class:`NegativeWeightError` on a negative or NaN entry and
    :class:`AllZeroError` when every weight is zero.
    """
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0:
        raise AllZeroError("empty weight vector")
    if np.any(np.isnan(w)) or np.any(w < 0):
        raise NegativeWeightError("weights must be non-negative numbers")
    total = w.sum()
    if total <= 0:
        raise AllZeroError("all weights are zero")
    return FiniteDist(Alphabet(w.size, label), w / total)


@dataclass(frozen=True)
class JointDist:
    """Dense joint pmf over an ordered tuple of alphabets."""

    axes: tuple
    mass: np.ndarray

    def __post_init__(self):
        axes = tuple(_as_alphabet(a) for a in self.axes)
        mass = _frozen(self.mass)
        if mass.shape != tuple(a.size for a in axes):
            raise ShapeMismatchError(f"mass shape {mass.shape} vs axes {[a.size for a in axes]}")
        if np.any(mass < 0):
            raise NegativeWeightError("joint has negative mass")
        if abs(mass.sum() - 1.0) > 1e-9:
            raise ProbabilityError(f"joint mass sums to {mass.sum()!r}")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "mass", mass)

    @classmethod
    def from_array(cls, arr, labels: Sequence[str] | None = None, normalize: bool = False):
        arr = np.asarray(arr, dtype=float)
        check_capacity(arr.size, what="joint")
        if normalize:
            if np.any(arr < 0):
                raise NegativeWeightError("joint has negative mass")
            total = arr.sum()
            if total <= 0:
                raise AllZeroError("joint has no mass")
            arr = arr / total
        labels = labels or [""] * arr.ndim
        return cls(tuple(Alphabet(s, lab) for s, lab in zip(arr.shape, labels)), arr)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return self.mass.shape


@dataclass(frozen=True)
class Kernel:
    """Conditional pmf table ``P(to | from_axes)``; shape ``(*from sizes, to size)``."""

    from_axes: tuple
    to_axis: Alphabet
    table: np.ndarray
    atol: float = field(default=SUM_TOL, compare=False)

    def __post_init__(self):
        from_axes = tuple(_as_alphabet(a) for a in self.from_axes)
        to_axis = _as_alphabet(self.to_axis)
        table = _frozen(self.table)
        expected = tuple(a.size for a in from_axes) + (to_axis.size,)
        if table.shape != expected:
            raise ShapeMismatchError(f"kernel table shape {table.shape}, expected {expected}")
        if np.any(table < 0):
            raise NegativeWeightError("kernel has negative entries")
        sums = table.sum(axis=-1)
        bad = np.argwhere(np.abs(sums - 1.0) > self.atol)
        if bad.size:
            row = tuple(int(v) for v in bad[0])
            raise ProbabilityError(f"kernel row {row} sums to {sums[row]!r}")
        object.__setattr__(self, "from_axes", from_axes)
        object.__setattr__(self, "to_axis", to_axis)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_table(cls, table, atol: float = SUM_TOL):
        table = np.asarray(table, dtype=float)
        return cls(tuple(Alphabet(s) for s in table.shape[:-1]), Alphabet(table.shape[-1]), table, atol)

    @classmethod
    def deterministic(cls, func_table, out_size: int):
        """One-hot kernel for a function given as an integer lookup table."""
        f = np.asarray(func_table, dtype=np.int64)
        table = np.zeros(f.shape + (int(out_size),))
        np.put_along_axis(table, f[..., None], 1.0, axis=-1)
        return cls.from_table(table)

    def row(self, *source) -> np.ndarray:
        return self.table[tuple(source)]


# -- dense operations ------------------------------------------------------

def _axis_list(j: JointDist, axes, allow_empty=True) -> list[int]:
    if isinstance(axes, (int, np.integer)):
        axes = [axes]
    out = [int(a) for a in axes]
    for a in out:
        if a < 0 or a >= j.ndim:
            raise BadAxisError(f"axis {a} out of range for {j.ndim}-axis joint")
    if len(set(out)) != len(out):
        raise BadAxisError(f"repeated axis in {out}")
    if not allow_empty and not out:
        raise BadAxisError("axis set must be non-empty")
    return out


def _marginal_array(mass: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    drop = tuple(a for a in range(mass.ndim) if a not in keep)
    m = mass.sum(axis=drop) if drop else mass
    # sum keeps remaining axes in ascending order; reorder to `keep`
    order = sorted(keep)
    return np.transpose(m, [order.index(a) for a in keep]) if list(keep) != order else m


def marginal(j: JointDist, keep) -> JointDist:
    """Sum out every axis not in ``keep``; the result follows ``keep``'s order."""
    keep = _axis_list(j, keep, allow_empty=False)
    return JointDist(tuple(j.axes[a] for a in keep), _marginal_array(j.mass, keep))


def condition(j: JointDist, given_axes, given_values) -> JointDist:
    given_axes = _axis_list(j, given_axes)
    given_values = tuple(int(v) for v in np.atleast_1d(given_values))
    if len(given_values) != len(given_axes):
        raise BadAxisError("one value per conditioning axis required")
    rest = [a for a in range(j.ndim) if a not in given_axes]
    if not rest:
        raise BadAxisError("conditioning on every axis leaves nothing")
    index = [slice(None)] * j.ndim
    for a, v in zip(given_axes, given_values):
        if not 0 <= v < j.axes[a].size:
            raise BadAxisError(f"value {v} outside axis {a}")
        index[a] = v
    piece = j.mass[tuple(index)]
    total = piece.sum()
    if total <= 0:
        raise ZeroConditioningError(f"P({dict(zip(given_axes, given_values))}) = 0")
    return JointDist(tuple(j.axes[a] for a in rest), piece / total)


def semidirect(base: JointDist, k: Kernel) -> JointDist:
    """Joint of ``(A, B)`` with ``mass(a, b) = base(a) * k(b | a)``."""
    if tuple(a.size for a in k.from_axes) != base.shape:
        raise ShapeMismatchError(
            f"kernel conditions on {[a.size for a in k.from_axes]}, base has shape {base.shape}")
    return JointDist(base.axes + (k.to_axis,), base.mass[..., None] * k.table)


def product(*dists) -> JointDist:
    """Independent joint of several distributions (FiniteDist or JointDist)."""
    mass = np.ones(())
    axes: tuple = ()
    for d in dists:
        if isinstance(d, FiniteDist):
            axes += (d.alphabet,)
        else:
            axes += tuple(d.axes)
        mass = np.multiply.outer(mass, np.asarray(d.mass))
    return JointDist(axes, mass)


def _check_disjoint(j: JointDist, *groups) -> list[list[int]]:
    lists = [_axis_list(j, g) for g in groups]
    seen: set[int] = set()
    for g in lists:
        if seen & set(g):
            raise BadAxisError("axis sets must be disjoint")
        seen |= set(g)
    return lists


def info_density(j: JointDist, x_axes, y_axes, z_axes=(), point=()) -> float:
    """Conditional information density ``log2 P(x,y|z) / (P(x|z) P(y|z))``.

    ``point`` gives a value for every axis of ``j`` (axes outside
    ``x ∪ y ∪ z`` are ignored).
    """
    xs, ys, zs = _check_disjoint(j, x_axes, y_axes, z_axes)
    point = tuple(int(v) for v in point)
    if len(point) != j.ndim:
        raise BadAxisError(f"point must give {j.ndim} values")

    def p(axes):
        if not axes:
            return 1.0
        return float(_marginal_array(j.mass, axes)[tuple(point[a] for a in axes)])

    pxyz = p(xs + ys + zs)
    if pxyz <= 0:
        raise ZeroProbabilityPointError(f"point {point} has zero probability")
    return math.log2(pxyz) + math.log2(p(zs)) - math.log2(p(xs + zs)) - math.log2(p(ys + zs))


def mutual_info(j: JointDist, x_axes, y_axes, z_axes=()) -> float:
    """``I(X; Y | Z)`` in bits, clamped at 0 against rounding."""
    xs, ys, zs = _check_disjoint(j, x_axes, y_axes, z_axes)
    if not xs or not ys:
        return 0.0
    keep = xs + ys + zs
    m = _marginal_array(j.mass, keep)
    nx, ny = len(xs), len(ys)
    sum_y = tuple(range(nx, nx + ny))
    sum_x = tuple(range(nx))
    pxz = m.sum(axis=sum_y, keepdims=True)
    pyz = m.sum(axis=sum_x, keepdims=True)
    pz = m.sum(axis=sum_x + sum_y, keepdims=True)
    pos = m > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = np.log2(m) + np.log2(pz) - np.log2(pxz) - np.log2(pyz)
    value = math.fsum((m[pos] * dens[pos]).tolist())
    return max(value, 0.0)


def entropy(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def binary_entropy(p: float) -> float:
    return entropy([p, 1.0 - p])


# -- mixed-radix helpers ---------------------------------------------------

def flatten_index(components: Sequence, radix: Sequence[int]):
    """Row-major flattening of a tuple of component values (arrays allowed)."""
    out = 0
    for c, r in zip(components, radix):
        out = out * int(r) + c
    return out


def component(values, radix: Sequence[int], index: int):
    """Extract component ``index`` from row-major flattened values."""
    stride = int(np.prod(radix[index + 1:], dtype=np.int64))
    return (np.asarray(values) // stride) % int(radix[index])


# -- support-only joints ---------------------------------------------------

def _names(names) -> tuple[str, ...]:
    if isinstance(names, str):
        return (names,)
    out: list[str] = []
    for n in names:
        if n not in out:
            out.append(n)
    return tuple(out)


class AtomTable:
    """A joint pmf stored as its list of positive-probability atoms.

    Columns are named integer arrays, one entry per atom. Marginals are
    computed by grouping atoms and are memoised per variable set; the table
    itself is never mutated after construction.
    """

    def __init__(self, columns: dict, sizes: dict, prob):
        self._cols = {k: np.asarray(v, dtype=np.int64) for k, v in columns.items()}
        self.sizes = {k: int(sizes[k]) for k in self._cols}
        self.prob = np.asarray(prob, dtype=float)
        for k, v in self._cols.items():
            v.setflags(write=False)
            if v.shape != self.prob.shape:
                raise ShapeMismatchError(f"column {k} has {v.shape[0]} atoms, expected {self.prob.size}")
        self.prob.setflags(write=False)
        self._groups: dict = {}
        self._margs: dict = {}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._cols)

    @property
    def n_atoms(self) -> int:
        return int(self.prob.size)

    def column(self, name: str) -> np.ndarray:
        return self._cols[name]

    @property
    def columns(self) -> dict:
        return dict(self._cols)

    def total(self) -> float:
        return math.fsum(self.prob.tolist())

    def _group(self, names: tuple[str, ...]):
        key = frozenset(names)
        if key in self._groups:
            return self._groups[key]
        names = tuple(sorted(names))
        n = self.n_atoms
        if not names:
            res = (np.zeros(n, dtype=np.int64), 1)
        else:
            radix = [self.sizes[nm] for nm in names]
            if math.prod(radix) < 2**62:
                code = np.zeros(n, dtype=np.int64)
                for nm, r in zip(names, radix):
                    code = code * r + self._cols[nm]
                _, inv = np.unique(code, return_inverse=True)
            else:
                stacked = np.stack([self._cols[nm] for nm in names], axis=1)
                _, inv = np.unique(stacked, axis=0, return_inverse=True)
            inv = inv.reshape(-1)
            res = (inv, int(inv.max()) + 1 if n else 0)
        self._groups[key] = res
        return res

    def marginal(self, names) -> np.ndarray:
        """Per-atom value of the marginal probability of ``names``."""
        names = _names(names)
        key = frozenset(names)
        if key not in self._margs:
            for nm in names:
                if nm not in self._cols:
                    raise BadAxisError(f"unknown variable {nm!r}")
            inv, count = self._group(names)
            self._margs[key] = np.bincount(inv, weights=self.prob, minlength=count)[inv]
        return self._margs[key]

    def conditional(self, target, given=()) -> np.ndarray:
        target, given = _names(target), _names(given)
        return self.marginal(target + given) / self.marginal(given)

    def info_density(self, a, b, c=()) -> np.ndarray:
        """Per-atom ``iota(A; B | C)`` in bits."""
        a, b, c = _names(a), _names(b), _names(c)
        if not a or not b:
            return np.zeros(self.n_atoms)
        return (np.log2(self.marginal(a + b + c)) + np.log2(self.marginal(c))
                - np.log2(self.marginal(a + c)) - np.log2(self.marginal(b + c)))

    def mutual_info(self, a, b, c=()) -> float:
        return max(self.expect(self.info_density(a, b, c)), 0.0)

    def expect(self, values) -> float:
        return math.fsum((self.prob * np.asarray(values, dtype=float)).tolist())

    def to_dense(self, names, cap: int | None = None) -> np.ndarray:
        """Dense probability tensor over ``names`` (in the given order)."""
        names = _names(names)
        shape = tuple(self.sizes[n] for n in names)
        check_capacity(math.prod(shape), cap, what=f"dense table over {names}")
        out = np.zeros(shape)
        np.add.at(out, tuple(self._cols[n] for n in names), self.prob)
        return out

    def to_joint(self, names, cap: int | None = None) -> JointDist:
        names = _names(names)
        arr = self.to_dense(names, cap)
        return JointDist(tuple(Alphabet(self.sizes[n], n) for n in names), arr / arr.sum())

    def with_columns(self, extra: dict) -> "AtomTable":
        """New table with derived columns ``{name: (values, size)}`` appended."""
        cols = dict(self._cols)
        sizes = dict(self.sizes)
        for name, (values, size) in extra.items():
            cols[name] = np.broadcast_to(np.asarray(values, dtype=np.int64), self.prob.shape).copy()
            sizes[name] = int(size)
        return AtomTable(cols, sizes, self.prob)

    def select(self, names: Iterable[str]) -> "AtomTable":
        names = _names(names)
        return AtomTable({n: self._cols[n] for n in names}, {n: self.sizes[n] for n in names}, self.prob)
