"""Exact pathwise evaluation of chaos variables and Monte Carlo moment tools.

A draw is a vector ``xi`` of i.i.d. standard normals, one per basis element,
and ``I_q(f)(xi)`` is evaluated exactly as a polynomial in ``xi`` through
products of Hermite polynomials.  Also here: seeded sampling of chaos
vectors, moment estimates with standard errors, moment/cumulant conversion
by set-partition enumeration and a few distributional diagnostics.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np
from scipy import stats

from .algebra import ChaosExpansion, ChaosVectorSpec, second_moment
from .streams import substream
from .tensor import ShapeError, SymmetricTensor

__all__ = [
    "hermite_eval",
    "hermite_table",
    "evaluate_chaos",
    "evaluate_expansion",
    "sample_vector",
    "Estimate",
    "empirical_moment",
    "set_partitions",
    "moments_to_cumulants",
    "cumulants_to_moments",
    "sample_cumulant",
    "hypercontractivity_check",
    "ks_distance",
    "write_samples_csv",
]

SAMPLE_BLOCK = 4096
MAX_CUMULANT_ORDER = 8


def hermite_table(x, qmax: int) -> np.ndarray:
    """``H_0(x), ..., H_qmax(x)`` stacked on a new leading axis (probabilists' convention)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((qmax + 1,) + x.shape)
    out[0] = 1.0
    if qmax >= 1:
        out[1] = x
    for k in range(1, qmax):
        out[k + 1] = x * out[k] - k * out[k - 1]
    return out


def hermite_eval(q: int, x):
    """``H_q(x)`` by the three-term recurrence; ``x`` may be an array."""
    if q < 0:
        raise ValueError("q must be non-negative")
    val = hermite_table(x, q)[q]
    return float(val) if np.ndim(val) == 0 else val


@lru_cache(maxsize=None)
def _key_layout(key: tuple[int, ...]) -> tuple[tuple[int, ...], tuple[int, ...], int]:
    counts = Counter(key)
    idx = tuple(sorted(counts))
    alpha = tuple(counts[i] for i in idx)
    return idx, alpha, math.prod(math.factorial(a) for a in alpha)


def evaluate_chaos(f: SymmetricTensor, xi, chunk: int = 256):
    """``I_q(f)`` on one draw ``xi`` of shape ``(d,)`` or on many of shape ``(n, d)``."""
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    xi2 = np.atleast_2d(xi)
    if xi2.shape[1] != f.dim:
        raise ShapeError(f"draw has length {xi2.shape[1]}, tensor dim is {f.dim}")
    q = f.order
    n = xi2.shape[0]
    if q == 0:
        out = np.full(n, float(f))
        return float(out[0]) if single else out
    keys = [k for k, v in f.coeffs.items() if v != 0.0]
    if not keys:
        out = np.zeros(n)
        return 0.0 if single else out
    table = hermite_table(xi2.T, q)  # (q+1, d, n)
    qf = math.factorial(q)
    cols = np.zeros((len(keys), q), dtype=np.intp)
    degs = np.zeros((len(keys), q), dtype=np.intp)
    weights = np.empty(len(keys))
    for row, key in enumerate(keys):
        idx, alpha, denom = _key_layout(key)
        cols[row, : len(idx)] = [i - 1 for i in idx]
        degs[row, : len(idx)] = alpha
        weights[row] = f.coeffs[key] * qf / denom
    out = np.zeros(n)
    for lo in range(0, len(keys), chunk):
        sl = slice(lo, lo + chunk)
        prod = np.prod(table[degs[sl], cols[sl]], axis=1)  # (chunk, n)
        out += weights[sl] @ prod
    return float(out[0]) if single else out


def evaluate_expansion(expansion: ChaosExpansion, xi):
    """Sum of :func:`evaluate_chaos` over the terms of a chaos expansion."""
    xi = np.asarray(xi, dtype=float)
    total = np.zeros(np.atleast_2d(xi).shape[0])
    for term in expansion.terms:
        total = total + evaluate_chaos(term, np.atleast_2d(xi))
    return float(total[0]) if xi.ndim == 1 else total


def _draw_blocks(seed: int, dim: int, n_samples: int, stream: str, block: int) -> Iterator[np.ndarray]:
    for b, lo in enumerate(range(0, n_samples, block)):
        size = min(block, n_samples - lo)
        yield substream(seed, stream, b).standard_normal((size, dim))


def sample_vector(
    v: ChaosVectorSpec | Sequence[SymmetricTensor],
    n_samples: int,
    seed: int,
    stream: str = "sample_vector",
    return_draws: bool = False,
    block: int = SAMPLE_BLOCK,
):
    """``(n_samples, len(v))`` matrix whose column ``i`` is ``I_{q_i}(f_i)`` on shared draws.

    Draws come in fixed-size blocks, each from its own substream of ``seed``.
    """
    if not isinstance(v, ChaosVectorSpec):
        v = ChaosVectorSpec(tuple(v))
    out = np.empty((n_samples, len(v)))
    draws = np.empty((n_samples, v.dim)) if return_draws else None
    lo = 0
    for xi in _draw_blocks(seed, v.dim, n_samples, stream, block):
        hi = lo + len(xi)
        for i, f in enumerate(v.components):
            out[lo:hi, i] = evaluate_chaos(f, xi)
        if return_draws:
            draws[lo:hi] = xi
        lo = hi
    return (out, draws) if return_draws else out


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float

    def within(self, target: float, n_se: float = 4.0, extra: float = 0.0) -> bool:
        return abs(self.value - target) <= n_se * self.se + extra


def _mean_se(values: np.ndarray) -> Estimate:
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < 2:
        raise ValueError("need at least two samples for a standard error")
    return Estimate(float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(n)))


def empirical_moment(samples, powers: Sequence[int]) -> Estimate:
    """Sample mean of ``prod_i X_i^{k_i}`` with its standard error."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 1 and len(powers) == 1:
        samples = samples.T
    if samples.shape[1] != len(powers):
        raise ShapeError(f"{len(powers)} powers for {samples.shape[1]} columns")
    prod = np.prod(samples ** np.asarray(powers), axis=1)
    return _mean_se(prod)


# -- moments and cumulants --------------------------------------------------------


def set_partitions(items: Sequence) -> Iterator[list[list]]:
    """All set partitions of ``items`` (Bell-number many), blocks in first-appearance order."""
    items = list(items)
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[head]] + part
        for i in range(len(part)):
            yield part[:i] + [[head] + part[i]] + part[i + 1 :]


@lru_cache(maxsize=None)
def _position_partitions(m: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    return tuple(tuple(tuple(b) for b in p) for p in set_partitions(range(m)))


def _norm_key(key) -> tuple[int, ...]:
    return tuple(sorted(int(k) for k in key))


def _partition_transform(table: Mapping, max_order: int, forward: bool) -> dict[tuple[int, ...], float]:
    src = {_norm_key(k): float(v) for k, v in table.items()}
    out = {}
    for key in src:
        m = len(key)
        if m == 0 or m > max_order:
            continue
        terms = []
        for part in _position_partitions(m):
            prod = 1.0
            for block in part:
                sub = tuple(sorted(key[i] for i in block))
                if sub not in src:
                    raise ValueError(f"missing entry for {sub}, needed by {key}")
                prod *= src[sub]
            if forward:
                k = len(part)
                prod *= (-1) ** (k - 1) * math.factorial(k - 1)
            terms.append(prod)
        out[key] = math.fsum(terms)
    return out


def moments_to_cumulants(moments: Mapping, max_order: int = MAX_CUMULANT_ORDER) -> dict[tuple[int, ...], float]:
    """Joint cumulants from joint moments.

    Keys are multisets of variable indices given as tuples (``(0, 0, 1)`` is
    ``E[X_0^2 X_1]``).  Every sub-multiset of a key must be present.
    """
    return _partition_transform(moments, max_order, forward=True)


def cumulants_to_moments(cumulants: Mapping, max_order: int = MAX_CUMULANT_ORDER) -> dict[tuple[int, ...], float]:
    """Inverse of :func:`moments_to_cumulants`."""
    return _partition_transform(cumulants, max_order, forward=False)


def sample_cumulant(x, order: int, groups: int = 100) -> Estimate:
    """Unbiased k-statistic of a 1-d sample with a delete-a-group jackknife standard error."""
    x = np.asarray(x, dtype=float).ravel()
    n = len(x)
    if not 1 <= order <= 4:
        raise ValueError("k-statistics are available for orders 1 to 4")
    value = float(stats.kstat(x, order))
    g = min(groups, n)
    bounds = np.linspace(0, n, g + 1).astype(int)
    loo = np.array([stats.kstat(np.concatenate([x[: bounds[i]], x[bounds[i + 1] :]]), order) for i in range(g)])
    se = math.sqrt((g - 1) / g * float(np.sum((loo - loo.mean()) ** 2)))
    return Estimate(value, se)


# -- diagnostics ---------------------------------------------------------------


@dataclass(frozen=True)
class HypercontractivityRecord:
    q: int
    r: float
    lhs: float
    lhs_se: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 3 * self.lhs_se


def hypercontractivity_check(f: SymmetricTensor, r: float, n_samples: int, seed: int) -> HypercontractivityRecord:
    """Empirical ``(E|F|^r)^{1/r}`` against ``(r-1)^{q/2} (E F^2)^{1/2}`` for ``F = I_q(f)``."""
    if r < 2:
        raise ValueError("r must be at least 2")
    x = sample_vector([f], n_samples, seed, stream="hypercontractivity")[:, 0]
    m = _mean_se(np.abs(x) ** r)
    lhs = m.value ** (1 / r)
    se = m.se * lhs / (r * m.value) if m.value > 0 else 0.0
    rhs = (r - 1) ** (f.order / 2) * math.sqrt(second_moment(f))
    return HypercontractivityRecord(f.order, r, lhs, se, rhs)


def ks_distance(samples) -> float:
    """Kolmogorov distance between the empirical cdf of ``samples`` and the standard normal cdf."""
    return float(stats.kstest(np.asarray(samples, dtype=float).ravel(), "norm").statistic)


def write_samples_csv(path, samples, seed: int, **meta) -> Path:
    """Write a sample matrix as CSV plus a ``<name>.seed.json`` sidecar."""
    path = Path(path)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"comp_{i + 1}" for i in range(samples.shape[1])])
        for row in samples:
            w.writerow([repr(float(v)) for v in row])
    side = path.with_suffix(".seed.json")
    side.write_text(json.dumps({"seed": seed, "n_samples": samples.shape[0], **meta}, indent=2, sort_keys=True))
    return side
