"""Closed-form analytics on elements of a fixed Wiener chaos.

Everything here is exact algebra on :class:`~wienerchaos.tensor.SymmetricTensor`
kernels: the product formula, covariances of squares, fourth cumulants, the
contraction-norm independence criteria, chi-square criteria, Stein-type
bounds and a finite-measure checker for the generalized Cauchy-Schwarz
inequality.  A chaos variable ``I_q(f)`` is represented by its kernel ``f``;
the order is ``f.order``.
"""

from __future__ import annotations

import itertools
import json
import math
import string
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .tensor import (
    ShapeError,
    SymmetricTensor,
    contract,
    inner,
    symmetrize,
)

__all__ = [
    "ChaosExpansion",
    "ChaosVectorSpec",
    "as_covariance",
    "multiply",
    "second_moment",
    "cov_squares",
    "cov_squares_lower_bound",
    "ustunel_zakai_gap",
    "fourth_cumulant",
    "chi2_constant",
    "chi2_target_moments",
    "chi2_criteria",
    "Chi2Criteria",
    "gaussian_fourth_norm",
    "chaos_fourth_norm",
    "fourth_norm_excess",
    "operator_norms",
    "stein_bound",
    "GenCSRecord",
    "generalized_cs_check",
    "random_cover",
    "PairReport",
    "BlockIndependenceReport",
    "block_independence_report",
    "offdiagonal_family",
    "rm33_pair",
    "sym_norm_identity",
    "azerty_identity",
    "azertiop_identity",
]

#: Default threshold for declaring an exact-algebra quantity zero.
INDEPENDENCE_TOL = 1e-8


def _check_dims(*tensors: SymmetricTensor) -> None:
    dims = {t.dim for t in tensors}
    if len(dims) > 1:
        raise ShapeError(f"dimension mismatch: {sorted(dims)}")


@dataclass(frozen=True)
class ChaosExpansion:
    """Finite sum ``sum_q I_q(f_q)`` with at most one kernel per order."""

    dim: int
    terms: tuple[SymmetricTensor, ...] = ()

    def __post_init__(self):
        terms = tuple(sorted(self.terms, key=lambda t: t.order))
        orders = [t.order for t in terms]
        if len(set(orders)) != len(orders):
            raise ValueError(f"duplicate chaos orders {orders}")
        if any(t.dim != self.dim for t in terms):
            raise ShapeError("all kernels must share the expansion's dim")
        object.__setattr__(self, "terms", terms)

    @property
    def orders(self) -> list[int]:
        return [t.order for t in self.terms]

    def term(self, q: int) -> SymmetricTensor:
        for t in self.terms:
            if t.order == q:
                return t
        return SymmetricTensor.zeros(q, self.dim)

    @property
    def mean(self) -> float:
        return float(self.term(0))

    def second_moment(self) -> float:
        return math.fsum(second_moment(t) for t in self.terms)


@dataclass(frozen=True)
class ChaosVectorSpec:
    """Random vector ``(I_{q_1}(f_1), ..., I_{q_d}(f_d))`` on a shared Gaussian basis."""

    components: tuple[SymmetricTensor, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a vector spec needs at least one component")
        _check_dims(*comps)
        object.__setattr__(self, "components", comps)

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> SymmetricTensor:
        return self.components[i]

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def orders(self) -> list[int]:
        return [f.order for f in self.components]

    def covariance(self) -> np.ndarray:
        d = len(self)
        sigma = np.zeros((d, d))
        for i, j in itertools.combinations_with_replacement(range(d), 2):
            fi, fj = self.components[i], self.components[j]
            if fi.order == fj.order:
                sigma[i, j] = sigma[j, i] = math.factorial(fi.order) * inner(fi, fj)
        return sigma


def as_covariance(sigma, tol: float = 1e-10) -> np.ndarray:
    """Validate a covariance matrix: square, symmetric and PSD up to ``tol``."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError(f"covariance must be square, got shape {sigma.shape}")
    scale = max(1.0, float(np.max(np.abs(sigma))))
    if not np.allclose(sigma, sigma.T, atol=tol * scale, rtol=0):
        raise ValueError("covariance is not symmetric")
    if np.linalg.eigvalsh(sigma).min() < -tol * scale:
        raise ValueError("covariance is not positive semidefinite")
    return sigma


def multiply(f: SymmetricTensor, g: SymmetricTensor) -> ChaosExpansion:
    """Chaos expansion of the product ``I_p(f) I_q(g)``.

    Each order ``p + q - 2r`` receives ``r! C(p,r) C(q,r)`` times the
    symmetrized contraction of order ``r``.
    """
    _check_dims(f, g)
    p, q = f.order, g.order
    terms = []
    for r in range(min(p, q) + 1):
        coef = math.factorial(r) * math.comb(p, r) * math.comb(q, r)
        term = symmetrize(contract(f, g, r)).scale(coef)
        if any(term.coeffs.values()):
            terms.append(term)
    return ChaosExpansion(f.dim, tuple(terms))


def second_moment(f: SymmetricTensor) -> float:
    """``E[I_q(f)^2] = q! ||f||^2``; for a constant term this is its square."""
    return math.factorial(f.order) * f.norm_sq()


def _contraction_norms_sq(f, g) -> list[float]:
    return [contract(f, g, r).norm_sq() for r in range(min(f.order, g.order) + 1)]


def cov_squares(f: SymmetricTensor, g: SymmetricTensor) -> float:
    """``Cov(I_p(f)^2, I_q(g)^2)`` in closed form; never negative."""
    _check_dims(f, g)
    p, q = f.order, g.order
    if p < 1 or q < 1:
        raise ValueError("orders must be at least 1")
    terms = []
    for r in range(1, min(p, q) + 1):
        plain = contract(f, g, r)
        terms.append(math.factorial(p) * math.factorial(q) * math.comb(p, r) * math.comb(q, r) * plain.norm_sq())
        terms.append(
            math.factorial(r) ** 2
            * math.comb(p, r) ** 2
            * math.comb(q, r) ** 2
            * math.factorial(p + q - 2 * r)
            * symmetrize(plain).norm_sq()
        )
    return math.fsum(terms)


def cov_squares_lower_bound(f: SymmetricTensor, g: SymmetricTensor) -> float:
    """``max_{r >= 1} ||f ⊗_r g||^2``, a lower bound for :func:`cov_squares`."""
    _check_dims(f, g)
    return max(_contraction_norms_sq(f, g)[1:], default=0.0)


def ustunel_zakai_gap(f: SymmetricTensor, g: SymmetricTensor) -> float:
    """``||f ⊗_1 g||^2``; zero exactly when ``I_p(f)`` and ``I_q(g)`` are independent."""
    _check_dims(f, g)
    if f.order < 1 or g.order < 1:
        raise ValueError("orders must be at least 1")
    return contract(f, g, 1).norm_sq()


def fourth_cumulant(f: SymmetricTensor) -> float:
    """Fourth cumulant of ``I_q(f)``: the non-Gaussian part of ``Var(F^2)``."""
    q = f.order
    terms = []
    for r in range(1, q):
        plain = contract(f, f, r)
        terms.append(math.factorial(q) ** 2 * math.comb(q, r) ** 2 * plain.norm_sq())
        terms.append(
            math.factorial(r) ** 2 * math.comb(q, r) ** 4 * math.factorial(2 * q - 2 * r) * symmetrize(plain).norm_sq()
        )
    return math.fsum(terms)


def chi2_constant(q: int) -> float:
    """``4 ((q/2)!)^3 / (q!)^2`` for even ``q``."""
    if q < 2 or q % 2:
        raise ValueError(f"q must be an even integer >= 2, got {q}")
    return 4 * math.factorial(q // 2) ** 3 / math.factorial(q) ** 2


def chi2_target_moments(nu: float) -> tuple[float, float]:
    """``(E[G^2], E[G^4] - 12 E[G^3])`` for a centered chi-square ``G`` with ``nu`` degrees of freedom."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    return 2.0 * nu, 12.0 * nu**2 - 48.0 * nu


@dataclass(frozen=True)
class Chi2Criteria:
    c_q: float
    mid_gap: float
    other_contractions: dict[int, float]
    target_second_moment: float
    target_fourth_minus_third: float


def chi2_criteria(f: SymmetricTensor, nu: float) -> Chi2Criteria:
    """Contraction diagnostics for convergence of ``I_q(f)`` to a centered chi-square."""
    q = f.order
    c_q = chi2_constant(q)
    mid = symmetrize(contract(f, f, q // 2)) - f.scale(c_q)
    others = {r: contract(f, f, r).norm() for r in range(1, q) if r != q // 2}
    m2, m43 = chi2_target_moments(nu)
    return Chi2Criteria(c_q, mid.norm(), others, m2, m43)


def gaussian_fourth_norm(sigma) -> float:
    """``E||N||^4`` for ``N ~ N(0, sigma)``."""
    sigma = as_covariance(sigma)
    diag = np.diag(sigma)
    return float(np.sum(np.outer(diag, diag)) + 2.0 * np.sum(sigma**2))


def chaos_fourth_norm(v: ChaosVectorSpec) -> float:
    """``E||F||^4`` for a chaos vector, from covariances of squares."""
    m = [second_moment(f) for f in v.components]
    total = []
    for i, j in itertools.product(range(len(v)), repeat=2):
        total.append(cov_squares(v[i], v[j]) + m[i] * m[j])
    return math.fsum(total)


def fourth_norm_excess(v: ChaosVectorSpec) -> float:
    """``E||F||^4 - E||N||^4`` with ``N`` Gaussian of the same covariance.

    Summed pairwise as ``Cov(F_i^2, F_j^2) - 2 sigma_ij^2``, keeping only the
    non-negative contraction terms, so the Gaussian case is exactly zero.
    """
    total = []
    for i, j in itertools.product(range(len(v)), repeat=2):
        f, g = v[i], v[j]
        p, q = f.order, g.order
        top = min(p, q) if p != q else q - 1
        for r in range(1, top + 1):
            plain = contract(f, g, r)
            total.append(math.factorial(p) * math.factorial(q) * math.comb(p, r) * math.comb(q, r) * plain.norm_sq())
            total.append(
                math.factorial(r) ** 2
                * math.comb(p, r) ** 2
                * math.comb(q, r) ** 2
                * math.factorial(p + q - 2 * r)
                * symmetrize(plain).norm_sq()
            )
    return math.fsum(total)


def operator_norms(sigma, tol: float = 1e-10) -> tuple[float, float]:
    """``(||sigma||_op, ||sigma^{-1}||_op)``; the second is ``inf`` when singular."""
    sigma = as_covariance(sigma)
    try:
        eig = np.linalg.eigvalsh(sigma)
        lo, hi = float(eig.min()), float(eig.max())
    except np.linalg.LinAlgError:
        hi = _power_iteration(sigma)
        lo = hi - _power_iteration(hi * np.eye(len(sigma)) - sigma)
    if lo <= tol * max(hi, 1.0):
        return hi, math.inf
    return hi, 1.0 / lo


def _power_iteration(a: np.ndarray, iters: int = 10_000, tol: float = 1e-12) -> float:
    x = np.ones(len(a)) / math.sqrt(len(a))
    lam = 0.0
    for _ in range(iters):
        y = a @ x
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return 0.0
        x = y / nrm
        new = float(x @ a @ x)
        if abs(new - lam) <= tol * max(1.0, abs(new)):
            return new
        lam = new
    return lam


def stein_bound(
    v: ChaosVectorSpec,
    sigma=None,
    kind: str = "lipschitz",
    h_norm: float = 1.0,
    tol: float = 1e-10,
) -> float:
    """Upper bound on ``|E h(F) - E h(N)|`` with ``N ~ N(0, sigma)``.

    ``kind="lipschitz"`` uses the Lipschitz constant of ``h`` and needs an
    invertible ``sigma``; ``kind="c2"`` uses the sup of the Hessian entries.
    ``sigma`` defaults to the covariance of ``v``.  A radicand within ``tol``
    of zero is treated as zero; a more negative one means ``sigma`` does not
    match ``v`` and raises ``ValueError``.
    """
    own = v.covariance()
    sigma = own if sigma is None else as_covariance(sigma)
    if sigma.shape != own.shape:
        raise ShapeError(f"sigma has shape {sigma.shape}, vector has {len(v)} components")
    radicand = fourth_norm_excess(v)
    if sigma is not own:
        radicand += gaussian_fourth_norm(own) - gaussian_fourth_norm(sigma)
    scale = 1.0 + gaussian_fourth_norm(sigma)
    if abs(radicand) <= tol * scale:
        radicand = 0.0
    elif radicand < 0:
        raise ValueError(f"negative radicand {radicand:.3e}: sigma is inconsistent with the vector")
    root = math.sqrt(radicand)
    if kind == "c2":
        return 0.5 * h_norm * root
    if kind != "lipschitz":
        raise ValueError(f"unknown bound kind {kind!r}")
    op, inv_op = operator_norms(sigma)
    if math.isinf(inv_op):
        raise ValueError("sigma is singular; the Lipschitz bound needs an invertible covariance")
    return math.sqrt(len(v)) * math.sqrt(op) * inv_op * h_norm * root


# -- generalized Cauchy-Schwarz -------------------------------------------------


@dataclass(frozen=True)
class GenCSRecord:
    lhs: float
    rhs_gencs: float
    rhs_gencs1: float
    pair: tuple[int, int]

    @property
    def slack(self) -> tuple[float, float]:
        """``(rhs_gencs1 - lhs, rhs_gencs - rhs_gencs1)``."""
        return self.rhs_gencs1 - self.lhs, self.rhs_gencs - self.rhs_gencs1

    def holds(self, tol: float = 1e-12) -> bool:
        return min(self.slack) >= -tol * max(1.0, self.rhs_gencs)


def _check_cover(cover: Sequence[Iterable[int]], size: int) -> list[tuple[int, ...]]:
    sets = [tuple(sorted(set(c))) for c in cover]
    if len(sets) < 2 or size < 1:
        raise ValueError("need at least two sets over a nonempty ground set")
    if any(not c for c in sets):
        raise ValueError("cover sets must be nonempty")
    for z in range(1, size + 1):
        hits = sum(z in c for c in sets)
        if hits != 2:
            raise ValueError(f"element {z} appears in {hits} sets, expected exactly 2")
    if any(z < 1 or z > size for c in sets for z in c):
        raise ValueError(f"cover uses elements outside [1, {size}]")
    return sets


def generalized_cs_check(cover, hs, weights, size: int | None = None, pair=None) -> GenCSRecord:
    """Evaluate both sides of the generalized Cauchy-Schwarz inequality on a discrete measure.

    ``cover[i]`` is a subset of ``{1..C}``; ``hs[i]`` is an array with one axis
    of length ``len(weights)`` per element of ``cover[i]`` (in sorted order).
    ``weights`` are the atom masses.  ``pair`` selects the overlapping pair
    used for the sharper bound; by default the first one found.
    """
    w = np.asarray(weights, dtype=float)
    if size is None:
        size = max(z for c in cover for z in c)
    sets = _check_cover(cover, size)
    hs = [np.asarray(h, dtype=float) for h in hs]
    if len(hs) != len(sets):
        raise ValueError("need one function per cover set")
    for c, h in zip(sets, hs):
        if h.shape != (len(w),) * len(c):
            raise ShapeError(f"function for set {c} has shape {h.shape}")

    letters = string.ascii_letters
    lab = {z: letters[z - 1] for z in range(1, size + 1)}

    def sub(c):
        return "".join(lab[z] for z in c)

    def wnorm(h, c):
        if not c:
            return abs(float(h))
        return math.sqrt(float(np.einsum(",".join([sub(c)] + list(sub(c))) + "->", h * h, *[w] * len(c))))

    lhs_expr = ",".join([sub(c) for c in sets] + [lab[z] for z in range(1, size + 1)]) + "->"
    lhs = abs(float(np.einsum(lhs_expr, *hs, *[w] * size)))
    norms = [wnorm(h, c) for h, c in zip(hs, sets)]

    if pair is None:
        pair = next((j, k) for j, k in itertools.combinations(range(len(sets)), 2) if set(sets[j]) & set(sets[k]))
    j, k = pair
    c0 = sorted(set(sets[j]) & set(sets[k]))
    if not c0:
        raise ValueError(f"sets {j} and {k} do not overlap")
    sym = sorted(set(sets[j]) ^ set(sets[k]))
    expr = ",".join([sub(sets[j]), sub(sets[k])] + [lab[z] for z in c0]) + "->" + sub(sym)
    hjk = np.einsum(expr, hs[j], hs[k], *[w] * len(c0))
    rhs1 = wnorm(hjk, sym) * math.prod(n for i, n in enumerate(norms) if i not in (j, k))
    return GenCSRecord(lhs, math.prod(norms), rhs1, (j, k))


def random_cover(size: int, n_sets: int, rng: np.random.Generator, max_tries: int = 1000) -> list[tuple[int, ...]]:
    """Random family of ``n_sets`` nonempty sets covering ``{1..size}`` exactly twice."""
    if n_sets < 2 or 2 * size < n_sets:
        raise ValueError("need 2 <= n_sets <= 2 * size")
    for _ in range(max_tries):
        sets = [set() for _ in range(n_sets)]
        for z in range(1, size + 1):
            a, b = rng.choice(n_sets, size=2, replace=False)
            sets[a].add(z)
            sets[b].add(z)
        if all(sets):
            return [tuple(sorted(s)) for s in sets]
    raise RuntimeError("could not draw a cover with nonempty sets")


# -- block independence ---------------------------------------------------------


@dataclass(frozen=True)
class PairReport:
    pair: tuple[int, int]
    cov_squares: float
    contraction_norms: list[float]
    flag: str

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "cov_squares": self.cov_squares,
            "contraction_norms": list(self.contraction_norms),
            "flag": self.flag,
        }


@dataclass(frozen=True)
class BlockIndependenceReport:
    blocks: list[list[int]]
    tol: float
    pairs: list[PairReport] = field(default_factory=list)

    @property
    def independent(self) -> bool:
        return all(p.flag == "independent" for p in self.pairs)

    def to_dict(self) -> dict:
        return {
            "blocks": self.blocks,
            "tol": self.tol,
            "independent": self.independent,
            "pairs": [p.to_dict() for p in self.pairs],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def block_independence_report(
    v: ChaosVectorSpec, blocks: Sequence[Sequence[int]], tol: float = INDEPENDENCE_TOL
) -> BlockIndependenceReport:
    """Contraction-norm and covariance-of-squares diagnostics for every cross-block pair.

    ``blocks`` partitions the 0-based component indices of ``v``.
    """
    blocks = [sorted(int(i) for i in b) for b in blocks]
    flat = sorted(i for b in blocks for i in b)
    if flat != list(range(len(v))):
        raise ValueError(f"blocks {blocks} do not partition range({len(v)})")
    owner = {i: k for k, b in enumerate(blocks) for i in b}
    pairs = []
    for i, j in itertools.combinations(range(len(v)), 2):
        if owner[i] == owner[j]:
            continue
        f, g = v[i], v[j]
        norms = [contract(f, g, r).norm() for r in range(1, min(f.order, g.order) + 1)]
        cs = cov_squares(f, g)
        flag = "independent" if cs <= tol and all(n <= tol for n in norms) else "dependent"
        pairs.append(PairReport((i, j), cs, norms, flag))
    return BlockIndependenceReport(blocks, tol, pairs)


# -- reference kernels ----------------------------------------------------------


def offdiagonal_family(n: int) -> SymmetricTensor:
    """Second-chaos kernel with ``f(2k-1, 2k) = 1/(2 sqrt(n))``, ``k = 1..n``.

    ``E[I_2(f)^2] = 1`` and the fourth cumulant is ``6/n``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    c = 1.0 / (2.0 * math.sqrt(n))
    return SymmetricTensor(2, 2 * n, {(2 * k - 1, 2 * k): c for k in range(1, n + 1)})


def rm33_pair() -> tuple[SymmetricTensor, SymmetricTensor]:
    """Two orthogonal second-chaos kernels on two cells whose symmetrized contraction vanishes
    while the plain contraction does not."""
    f1 = SymmetricTensor(2, 2, {(1, 1): -0.5, (1, 2): 0.5, (2, 2): 0.5})
    f2 = SymmetricTensor(2, 2, {(1, 1): 0.5, (1, 2): 0.5, (2, 2): -0.5})
    return f1, f2


# -- norm identities ------------------------------------------------------------


def sym_norm_identity(f: SymmetricTensor, g: SymmetricTensor) -> tuple[float, float]:
    """Both sides of ``||f ~⊗ g||^2 = p!q!/(p+q)! sum_r C(p,r)C(q,r)||f ⊗_r g||^2``."""
    p, q = f.order, g.order
    lhs = symmetrize(contract(f, g, 0)).norm_sq()
    rhs = math.factorial(p) * math.factorial(q) / math.factorial(p + q) * math.fsum(
        math.comb(p, r) * math.comb(q, r) * contract(f, g, r).norm_sq() for r in range(min(p, q) + 1)
    )
    return lhs, rhs


def azerty_identity(f1, f2, f3, f4) -> tuple[float, float]:
    """Both sides of the four-kernel identity for ``(2q)! <f1 ~⊗ f2, f3 ~⊗ f4>``."""
    q = f1.order
    if any(f.order != q for f in (f2, f3, f4)):
        raise ShapeError("all four kernels must share one order")
    lhs = math.factorial(2 * q) * inner(symmetrize(contract(f1, f2, 0)), symmetrize(contract(f3, f4, 0)))
    qf2 = math.factorial(q) ** 2
    terms = [qf2 * math.comb(q, r) ** 2 * inner(contract(f1, f3, r), contract(f4, f2, r)) for r in range(1, q)]
    terms.append(qf2 * (inner(f1, f3) * inner(f2, f4) + inner(f1, f4) * inner(f2, f3)))
    return lhs, math.fsum(terms)


def azertiop_identity(f: SymmetricTensor, g: SymmetricTensor) -> tuple[float, float]:
    """Both sides of the identity for ``<f ~⊗_q f, g ~⊗ g>`` with ``f`` of order ``2q``, ``g`` of order ``q``."""
    q = g.order
    if f.order != 2 * q:
        raise ShapeError("f must have twice the order of g")
    lhs = inner(symmetrize(contract(f, f, q)), symmetrize(contract(g, g, 0)))
    qf2, tq = math.factorial(q) ** 2, math.factorial(2 * q)
    terms = [2 * qf2 / tq * inner(contract(f, f, q), contract(g, g, 0))]
    terms += [qf2 / tq * math.comb(q, r) ** 2 * inner(contract(f, g, r), contract(g, f, r)) for r in range(1, q)]
    return lhs, math.fsum(terms)


def _asdict(obj) -> dict:
    return asdict(obj)
