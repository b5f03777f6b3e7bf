"""Homogeneous multilinear forms in i.i.d. innovations.

A :class:`ChaosForm` holds symmetric coefficients vanishing on diagonals, so
``Q(x) = sum over ordered distinct tuples a(i_1..i_q) x_{i_1}...x_{i_q}``.
Tools here cover evaluation, influences, mixed contractions, exact
Rademacher enumeration of joint moments and the X-versus-Gaussian comparison
behind the invariance principle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .sampler import Estimate
from .streams import substream
from .tensor import SymmetricTensor, contract

__all__ = [
    "ChaosForm",
    "InnovationLaw",
    "RADEMACHER",
    "GAUSSIAN",
    "evaluate_form",
    "influence",
    "max_influence",
    "mixed_contraction_norm",
    "counterexample_pair",
    "uniform_offdiagonal",
    "alternating_offdiagonal",
    "moment_gap",
    "LindebergRecord",
    "lindeberg_gap",
]

ENUMERATION_MAX_DIM = 24
_ENUM_CHUNK = 1 << 15


@dataclass(frozen=True)
class ChaosForm:
    order: int
    dim: int
    coeffs: dict

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("forms have order at least 1")
        clean = {}
        for key, val in self.coeffs.items():
            key = tuple(int(i) for i in key)
            if len(key) != self.order:
                raise ValueError(f"key {key} has length {len(key)}, expected {self.order}")
            if list(key) != sorted(key):
                raise ValueError(f"key {key} is not sorted")
            if len(set(key)) != len(key):
                raise ValueError(f"key {key} has a repeated index; forms vanish on diagonals")
            if key[0] < 1 or key[-1] > self.dim:
                raise ValueError(f"key {key} outside [1, {self.dim}]")
            if val != 0:
                clean[key] = float(val)
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def from_tensor(cls, t: SymmetricTensor) -> "ChaosForm":
        return cls(t.order, t.dim, dict(t.coeffs))

    def as_tensor(self) -> SymmetricTensor:
        return SymmetricTensor(self.order, self.dim, dict(self.coeffs))

    def variance(self) -> float:
        """``E Q^2`` for unit-variance innovations: ``q!`` times the ordered-tuple sum of squares."""
        return math.factorial(self.order) ** 2 * math.fsum(v * v for v in self.coeffs.values())

    def check_unit_variance(self, tol: float = 1e-10) -> None:
        if abs(self.variance() - 1.0) > tol:
            raise ValueError(f"form has variance {self.variance()}, not 1")

    def with_dim(self, dim: int) -> "ChaosForm":
        return ChaosForm(self.order, dim, self.coeffs)


@dataclass(frozen=True)
class InnovationLaw:
    """Law of the i.i.d. innovations: ``rademacher``, ``gaussian`` or ``user``.

    A ``user`` law lists its moments ``E X^0, E X^1, ...`` and may provide
    ``transform``, a map from standard normals to draws from the law (used
    for sampling with the Gaussian coupling).
    """

    kind: str
    moments: tuple[float, ...] = ()
    transform: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.kind not in ("rademacher", "gaussian", "user"):
            raise ValueError(f"unknown innovation law {self.kind!r}")
        if self.kind == "user":
            m = self.moments
            if len(m) < 3 or abs(m[0] - 1) > 1e-12 or abs(m[1]) > 1e-12 or abs(m[2] - 1) > 1e-12:
                raise ValueError("user law needs moments starting 1, 0, 1 (mean 0, variance 1)")

    def require_moments(self, order: int) -> None:
        if self.kind == "user" and len(self.moments) <= order:
            raise ValueError(f"user law lists moments up to {len(self.moments) - 1}, need {order}")

    def from_gaussian(self, g: np.ndarray) -> np.ndarray:
        if self.kind == "gaussian":
            return g
        if self.kind == "rademacher":
            return np.where(g >= 0, 1.0, -1.0)
        if self.transform is None:
            raise ValueError("user law has no transform, so it cannot be sampled")
        return np.asarray(self.transform(g), dtype=float)


RADEMACHER = InnovationLaw("rademacher")
GAUSSIAN = InnovationLaw("gaussian")


def _columns(a: ChaosForm):
    keys = list(a.coeffs)
    idx = np.array(keys, dtype=np.intp).reshape(len(keys), a.order) - 1
    w = np.array([a.coeffs[k] for k in keys]) * math.factorial(a.order)
    return idx, w


def evaluate_form(a: ChaosForm, x):
    """``Q(x)`` on one vector of shape ``(d,)`` or many of shape ``(n, d)``."""
    x = np.asarray(x, dtype=float)
    x2 = np.atleast_2d(x)
    if x2.shape[1] < a.dim:
        raise ValueError(f"vector has length {x2.shape[1]}, form needs {a.dim}")
    out = np.zeros(x2.shape[0])
    if a.coeffs:
        idx, w = _columns(a)
        for lo in range(0, len(w), 512):
            cols = x2[:, idx[lo : lo + 512]]  # (n, k, q)
            out += np.prod(cols, axis=2) @ w[lo : lo + 512]
    return float(out[0]) if x.ndim == 1 else out


def influence(a: ChaosForm, i: int) -> float:
    """``sum over ordered tails of a(i, i_2, ..., i_q)^2``."""
    tails = math.factorial(a.order - 1)
    return tails * math.fsum(v * v for k, v in a.coeffs.items() if i in k)


def max_influence(a: ChaosForm) -> float:
    acc = np.zeros(a.dim + 1)
    for k, v in a.coeffs.items():
        acc[list(k)] += v * v
    return math.factorial(a.order - 1) * float(acc.max())


def mixed_contraction_norm(a1: ChaosForm, a2: ChaosForm, r: int) -> float:
    """``||a1 ⊗_r a2||`` computed on the forms viewed as symmetric tensors."""
    d = max(a1.dim, a2.dim)
    return contract(a1.with_dim(d).as_tensor(), a2.with_dim(d).as_tensor(), r).norm()


def counterexample_pair() -> tuple[ChaosForm, ChaosForm]:
    """``Q1 = X1 (X2 + X3) / 2`` and ``Q2 = X4 (X2 - X3) / 2``: all mixed contractions vanish,
    yet ``Q1 Q2 = 0`` identically under Rademacher innovations."""
    a1 = ChaosForm(2, 4, {(1, 2): 0.25, (1, 3): 0.25})
    a2 = ChaosForm(2, 4, {(2, 4): 0.25, (3, 4): -0.25})
    return a1, a2


def uniform_offdiagonal(d: int) -> ChaosForm:
    """Unit-variance second-order form with equal weight on every pair ``i < j <= d``."""
    c = 1.0 / math.sqrt(2 * d * (d - 1))
    return ChaosForm(2, d, {(i, j): c for i in range(1, d + 1) for j in range(i + 1, d + 1)})


def alternating_offdiagonal(d: int) -> ChaosForm:
    """Like :func:`uniform_offdiagonal` with sign ``(-1)^{i+j}``."""
    c = 1.0 / math.sqrt(2 * d * (d - 1))
    return ChaosForm(2, d, {(i, j): c * (-1) ** (i + j) for i in range(1, d + 1) for j in range(i + 1, d + 1)})


def _gap_terms(q1: np.ndarray, q2: np.ndarray, M: int, N: int):
    u, v = q1**M, q2**N
    return u * v, u, v


def _enumerate_gap(a1: ChaosForm, a2: ChaosForm, M: int, N: int, d: int) -> float:
    total = 2**d
    sums = np.zeros(3)
    bits = np.arange(d, dtype=np.int64)
    for lo in range(0, total, _ENUM_CHUNK):
        codes = np.arange(lo, min(lo + _ENUM_CHUNK, total), dtype=np.int64)
        x = 1.0 - 2.0 * ((codes[:, None] >> bits) & 1)
        uv, u, v = _gap_terms(evaluate_form(a1, x), evaluate_form(a2, x), M, N)
        sums += [uv.sum(), u.sum(), v.sum()]
    m = sums / total
    return float(m[0] - m[1] * m[2])


def _gap_estimate(q1, q2, M, N) -> tuple[float, np.ndarray]:
    uv, u, v = _gap_terms(q1, q2, M, N)
    mu, mv = u.mean(), v.mean()
    gap = float(uv.mean() - mu * mv)
    infl = uv - mv * u - mu * v  # influence function of the gap, up to a constant
    return gap, infl


def _draw(seed: int, stream: str, n: int, d: int, block: int = 8192):
    for b, lo in enumerate(range(0, n, block)):
        yield substream(seed, stream, b).standard_normal((min(block, n - lo), d))


def moment_gap(
    a1: ChaosForm,
    a2: ChaosForm,
    M: int,
    N: int,
    law: InnovationLaw = RADEMACHER,
    mode: str = "enumerate",
    n_samples: int = 100_000,
    seed: int | None = None,
) -> Estimate:
    """``E[Q1^M Q2^N] - E[Q1^M] E[Q2^N]``.

    ``mode="enumerate"`` is exact over ``{-1, 1}^d`` (Rademacher, ``d <= 24``,
    standard error 0); ``mode="sample"`` is Monte Carlo with a delta-method
    standard error.
    """
    d = max(a1.dim, a2.dim)
    law.require_moments(max(a1.order, a2.order) * (M + N))
    if mode == "enumerate":
        if law.kind != "rademacher":
            raise ValueError("enumeration needs the Rademacher law")
        if d > ENUMERATION_MAX_DIM:
            raise ValueError(f"enumeration over 2^{d} outcomes exceeds the 2^{ENUMERATION_MAX_DIM} limit")
        return Estimate(_enumerate_gap(a1, a2, M, N, d), 0.0)
    if mode != "sample":
        raise ValueError(f"unknown mode {mode!r}")
    if seed is None:
        raise ValueError("sampling needs a seed")
    x = np.concatenate([law.from_gaussian(g) for g in _draw(seed, "moment_gap", n_samples, d)])
    gap, infl = _gap_estimate(evaluate_form(a1, x), evaluate_form(a2, x), M, N)
    return Estimate(gap, float(np.std(infl, ddof=1) / math.sqrt(n_samples)))


@dataclass(frozen=True)
class LindebergRecord:
    gap_X: Estimate
    gap_G: Estimate
    delta: Estimate


def lindeberg_gap(
    a1: ChaosForm,
    a2: ChaosForm,
    M: int,
    N: int,
    law: InnovationLaw,
    n_samples: int,
    seed: int,
) -> LindebergRecord:
    """Moment gap under ``law`` and under Gaussian innovations, on coupled draws.

    Both runs read the same Gaussian substream; the ``law`` draws are a fixed
    transform of those normals (the sign for Rademacher), which makes the
    difference ``delta = gap_X - gap_G`` much less noisy than either gap.
    """
    d = max(a1.dim, a2.dim)
    law.require_moments(max(a1.order, a2.order) * (M + N))
    g = np.concatenate(list(_draw(seed, "lindeberg", n_samples, d)))
    x = law.from_gaussian(g)
    gap_x, inf_x = _gap_estimate(evaluate_form(a1, x), evaluate_form(a2, x), M, N)
    gap_g, inf_g = _gap_estimate(evaluate_form(a1, g), evaluate_form(a2, g), M, N)
    root = math.sqrt(n_samples)

    def se(z):
        return float(np.std(z, ddof=1) / root)

    return LindebergRecord(Estimate(gap_x, se(inf_x)), Estimate(gap_g, se(inf_g)), Estimate(gap_x - gap_g, se(inf_x - inf_g)))
