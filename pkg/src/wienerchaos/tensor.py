"""Sparse symmetric tensors over a finite orthonormal basis.

A :class:`SymmetricTensor` of order ``q`` and dimension ``d`` stores the
coefficient function of an element of the symmetric tensor power of
``R^d``.  Entries are keyed by *sorted* multi-indices with 1-based basis
indices, and the stored value is the value of the coefficient function at
every permutation of the key (function-value convention).  Norms and inner
products therefore run over ordered tuples, which for a sorted key ``m``
means weighting by the orbit size ``q! / prod(mult!)``.

Contractions produce :class:`BipartiteTensor` objects, which are symmetric
within each of their two slot blocks but not across them.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Union

import numpy as np

__all__ = [
    "PRUNE_TOL",
    "ShapeError",
    "SymmetricTensor",
    "BipartiteTensor",
    "orbit_size",
    "tensor_power",
    "basis_tensor",
    "contract",
    "symmetrize",
    "as_bipartite",
    "inner",
    "norm",
    "contraction_norm_sq_dual",
    "random_symmetric",
    "read_tensor",
]

#: Absolute threshold below which coefficients produced by arithmetic are dropped.
PRUNE_TOL = 1e-14

Index = tuple[int, ...]


class ShapeError(ValueError):
    """Raised when tensor orders or dimensions do not match."""


@lru_cache(maxsize=None)
def orbit_size(m: Index) -> int:
    """Number of distinct ordered tuples that sort to ``m``."""
    out = math.factorial(len(m))
    for c in Counter(m).values():
        out //= math.factorial(c)
    return out


@lru_cache(maxsize=None)
def _sub_multisets(m: Index, r: int) -> tuple[tuple[Index, Index], ...]:
    """All distinct ways to split the sorted multiset ``m`` as (rest, sub) with ``len(sub) == r``."""
    items = sorted(Counter(m).items())
    out = []

    def rec(pos: int, left: int, sub: list[int], rest: list[int]) -> None:
        if pos == len(items):
            if left == 0:
                out.append((tuple(rest), tuple(sub)))
            return
        idx, mult = items[pos]
        for c in range(min(mult, left) + 1):
            rec(pos + 1, left - c, sub + [idx] * c, rest + [idx] * (mult - c))

    rec(0, r, [], [])
    return tuple(out)


def _prune(coeffs: dict, tol: float) -> dict:
    return {k: v for k, v in coeffs.items() if abs(v) > tol}


@dataclass(frozen=True)
class SymmetricTensor:
    """Element of the ``order``-th symmetric power of ``R^dim``.

    ``coeffs`` maps sorted 1-based multi-indices to real values.  Missing keys
    are zero.  An order-0 tensor always carries exactly one entry, keyed by
    the empty tuple.
    """

    order: int
    dim: int
    coeffs: Mapping[Index, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.order < 0:
            raise ValueError(f"order must be non-negative, got {self.order}")
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        clean = {}
        for key, val in self.coeffs.items():
            key = tuple(int(i) for i in key)
            if len(key) != self.order:
                raise ShapeError(f"key {key} does not have length {self.order}")
            if any(a > b for a, b in zip(key, key[1:])):
                raise ValueError(f"key {key} is not sorted")
            if key and (key[0] < 1 or key[-1] > self.dim):
                raise ValueError(f"key {key} has an index outside [1, {self.dim}]")
            clean[key] = float(val)
        if self.order == 0:
            clean = {(): clean.get((), 0.0)}
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def from_entries(cls, order: int, dim: int, entries: Mapping[Iterable[int], float]) -> "SymmetricTensor":
        """Build from possibly unsorted keys; permutations of one key must agree."""
        coeffs: dict[Index, float] = {}
        for key, val in entries.items():
            skey = tuple(sorted(key))
            if skey in coeffs and coeffs[skey] != val:
                raise ValueError(f"conflicting values for permutations of {skey}")
            coeffs[skey] = val
        return cls(order, dim, coeffs)

    @classmethod
    def scalar(cls, value: float, dim: int) -> "SymmetricTensor":
        return cls(0, dim, {(): value})

    @classmethod
    def zeros(cls, order: int, dim: int) -> "SymmetricTensor":
        return cls(order, dim, {})

    def __getitem__(self, key: Iterable[int]) -> float:
        return self.coeffs.get(tuple(sorted(key)), 0.0)

    def __iter__(self) -> Iterator[tuple[Index, float]]:
        return iter(self.coeffs.items())

    def __len__(self) -> int:
        return len(self.coeffs)

    def __float__(self) -> float:
        if self.order != 0:
            raise TypeError("only order-0 tensors convert to float")
        return self.coeffs[()]

    def norm_sq(self) -> float:
        return math.fsum(orbit_size(k) * v * v for k, v in self.coeffs.items())

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def _check_same_shape(self, other: "SymmetricTensor") -> None:
        if not isinstance(other, SymmetricTensor):
            raise TypeError(f"expected SymmetricTensor, got {type(other).__name__}")
        if (self.order, self.dim) != (other.order, other.dim):
            raise ShapeError(
                f"shape mismatch: order/dim {(self.order, self.dim)} vs {(other.order, other.dim)}"
            )

    def add(self, other: "SymmetricTensor", tol: float = PRUNE_TOL) -> "SymmetricTensor":
        self._check_same_shape(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return SymmetricTensor(self.order, self.dim, _prune(out, tol))

    def scale(self, alpha: float, tol: float = PRUNE_TOL) -> "SymmetricTensor":
        return SymmetricTensor(
            self.order, self.dim, _prune({k: alpha * v for k, v in self.coeffs.items()}, tol)
        )

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.add(other.scale(-1.0))

    def __neg__(self):
        return self.scale(-1.0)

    def __mul__(self, alpha):
        if isinstance(alpha, (int, float, np.floating, np.integer)):
            return self.scale(float(alpha))
        return NotImplemented

    __rmul__ = __mul__

    def to_text(self) -> str:
        """Serialize as ``order dim`` header plus one ``i1 ... iq value`` line per entry."""
        lines = [f"{self.order} {self.dim}"]
        for key in sorted(self.coeffs):
            lines.append(" ".join([*(str(i) for i in key), repr(self.coeffs[key])]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SymmetricTensor":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise ValueError("missing 'order dim' header line")
        order, dim = int(rows[0][0]), int(rows[0][1])
        entries: dict[Index, float] = {}
        for row in rows[1:]:
            if len(row) != order + 1:
                raise ValueError(f"expected {order} indices and a value, got {' '.join(row)!r}")
            key = tuple(int(x) for x in row[:-1])
            entries[key] = float(row[-1])
        return cls.from_entries(order, dim, entries)


def read_tensor(path: Union[str, Path]) -> SymmetricTensor:
    return SymmetricTensor.from_text(Path(path).read_text())


@dataclass(frozen=True)
class BipartiteTensor:
    """Tensor symmetric within a left block and within a right block.

    Keys are pairs of sorted multi-indices ``(s, t)`` of lengths
    ``left_order`` and ``right_order``.
    """

    left_order: int
    right_order: int
    dim: int
    coeffs: Mapping[tuple[Index, Index], float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (s, t), val in self.coeffs.items():
            s, t = tuple(s), tuple(t)
            if len(s) != self.left_order or len(t) != self.right_order:
                raise ShapeError(f"key {(s, t)} does not match block orders")
            clean[(s, t)] = float(val)
        object.__setattr__(self, "coeffs", clean)

    @property
    def order(self) -> int:
        return self.left_order + self.right_order

    def __getitem__(self, key: tuple[Iterable[int], Iterable[int]]) -> float:
        s, t = key
        return self.coeffs.get((tuple(sorted(s)), tuple(sorted(t))), 0.0)

    def __float__(self) -> float:
        if self.order != 0:
            raise TypeError("only order-(0, 0) tensors convert to float")
        return self.coeffs.get(((), ()), 0.0)

    def norm_sq(self) -> float:
        return math.fsum(orbit_size(s) * orbit_size(t) * v * v for (s, t), v in self.coeffs.items())

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())


def tensor_power(h, q: int) -> SymmetricTensor:
    """Return ``h`` tensored with itself ``q`` times."""
    h = np.asarray(h, dtype=float).ravel()
    if h.size == 0:
        raise ValueError("empty vector")
    if q < 0:
        raise ValueError("q must be non-negative")
    support = [i + 1 for i in np.flatnonzero(h)]
    coeffs = {}
    for key in itertools.combinations_with_replacement(support, q):
        coeffs[key] = math.prod(h[i - 1] for i in key)
    return SymmetricTensor(q, h.size, coeffs)


def basis_tensor(i: int, q: int, dim: int) -> SymmetricTensor:
    """``e_i`` tensored ``q`` times."""
    return SymmetricTensor(q, dim, {(i,) * q: 1.0})


def contract(f: SymmetricTensor, g: SymmetricTensor, r: int, tol: float = PRUNE_TOL) -> BipartiteTensor:
    """Contraction of order ``r``: pair ``r`` slots of ``f`` against ``r`` slots of ``g``.

    ``(f ⊗_r g)(s, t) = sum over ordered r-tuples k of f(s, k) g(t, k)``.
    Grouping the ordered tuples by their sorted multiset gives the orbit
    weight used below.
    """
    if f.dim != g.dim:
        raise ShapeError(f"dimension mismatch: {f.dim} vs {g.dim}")
    if not 0 <= r <= min(f.order, g.order):
        raise ValueError(f"r={r} outside [0, {min(f.order, g.order)}]")

    by_sub: dict[Index, list[tuple[Index, float]]] = defaultdict(list)
    for m, b in g.coeffs.items():
        for rest, sub in _sub_multisets(m, r):
            by_sub[sub].append((rest, b))

    out: dict[tuple[Index, Index], float] = defaultdict(float)
    for m, a in f.coeffs.items():
        for s, sub in _sub_multisets(m, r):
            partners = by_sub.get(sub)
            if not partners:
                continue
            w = orbit_size(sub) * a
            for t, b in partners:
                out[(s, t)] += w * b
    return BipartiteTensor(f.order - r, g.order - r, f.dim, _prune(out, tol))


def symmetrize(t: BipartiteTensor, tol: float = PRUNE_TOL) -> SymmetricTensor:
    """Average ``t`` over all permutations of its ``left_order + right_order`` slots."""
    p, n = t.left_order, t.order
    denom = math.comb(n, p)
    out: dict[Index, float] = defaultdict(float)
    for (s, u), v in t.coeffs.items():
        m = tuple(sorted(s + u))
        cm, cs = Counter(m), Counter(s)
        ways = math.prod(math.comb(cm[j], cs[j]) for j in cs)
        out[m] += ways * v / denom
    if n == 0:
        return SymmetricTensor(0, t.dim, {(): out.get((), 0.0)})
    return SymmetricTensor(n, t.dim, _prune(out, tol))


def as_bipartite(f: SymmetricTensor, left_order: int) -> BipartiteTensor:
    """View a symmetric tensor as a bipartite one with the given left block size."""
    if not 0 <= left_order <= f.order:
        raise ValueError(f"left_order must lie in [0, {f.order}]")
    coeffs = {}
    for m, v in f.coeffs.items():
        for t, s in _sub_multisets(m, left_order):
            coeffs[(s, t)] = v
    return BipartiteTensor(left_order, f.order - left_order, f.dim, coeffs)


def inner(a, b) -> float:
    """Inner product over ordered tuples, for two tensors of the same kind and shape.

    Two bipartite tensors of equal total order but different block splits
    are paired slot by slot, as elements of the full tensor power.
    """
    if isinstance(a, SymmetricTensor) and isinstance(b, SymmetricTensor):
        a._check_same_shape(b)
        small, big = (a, b) if len(a.coeffs) <= len(b.coeffs) else (b, a)
        return math.fsum(
            orbit_size(k) * v * big.coeffs[k] for k, v in small.coeffs.items() if k in big.coeffs
        )
    if isinstance(a, BipartiteTensor) and isinstance(b, BipartiteTensor):
        if a.dim != b.dim or a.order != b.order:
            raise ShapeError("bipartite shape mismatch")
        if a.left_order != b.left_order:
            return _flat_inner(a, b)
        small, big = (a, b) if len(a.coeffs) <= len(b.coeffs) else (b, a)
        return math.fsum(
            orbit_size(s) * orbit_size(t) * v * big.coeffs[(s, t)]
            for (s, t), v in small.coeffs.items()
            if (s, t) in big.coeffs
        )
    raise ShapeError(f"cannot pair {type(a).__name__} with {type(b).__name__}")


def _flat_inner(a: BipartiteTensor, b: BipartiteTensor) -> float:
    # Slot-by-slot pairing when the block splits differ.  With
    # a.left_order >= b.left_order the slots fall into three runs:
    # I (both left), J (a left, b right), K (both right).
    if a.left_order < b.left_order:
        a, b = b, a
    n_j = a.left_order - b.left_order
    terms = []
    for (u, w), bv in b.coeffs.items():
        for m_k, m_j in _sub_multisets(w, n_j):
            av = a.coeffs.get((tuple(sorted(u + m_j)), m_k))
            if av is not None:
                terms.append(orbit_size(u) * orbit_size(m_j) * orbit_size(m_k) * av * bv)
    return math.fsum(terms)


def norm(a) -> float:
    return a.norm()


def contraction_norm_sq_dual(f: SymmetricTensor, g: SymmetricTensor, r: int) -> float:
    """``||f ⊗_r g||^2`` computed as ``<f ⊗_{p-r} f, g ⊗_{q-r} g>``.

    Independent of :func:`contract` applied to ``(f, g, r)`` directly; used as
    a cross-check.
    """
    if f.dim != g.dim:
        raise ShapeError(f"dimension mismatch: {f.dim} vs {g.dim}")
    if not 0 <= r <= min(f.order, g.order):
        raise ValueError(f"r={r} outside [0, {min(f.order, g.order)}]")
    return inner(contract(f, f, f.order - r), contract(g, g, g.order - r))


def random_symmetric(
    order: int,
    dim: int,
    rng: np.random.Generator,
    n_entries: int | None = None,
    distinct: bool = False,
) -> SymmetricTensor:
    """Random sparse tensor with standard normal values on randomly chosen keys.

    With ``distinct=True`` only keys without repeated indices are used.
    """
    if distinct:
        pool = list(itertools.combinations(range(1, dim + 1), order))
    else:
        pool = list(itertools.combinations_with_replacement(range(1, dim + 1), order))
    if not pool:
        return SymmetricTensor.zeros(order, dim)
    if n_entries is None:
        n_entries = int(rng.integers(1, len(pool) + 1))
    n_entries = min(n_entries, len(pool))
    picks = rng.choice(len(pool), size=n_entries, replace=False)
    return SymmetricTensor(order, dim, {pool[i]: float(rng.standard_normal()) for i in sorted(picks)})
