"""Stationary Gaussian sequences and limit theorems for their Hermite partial sums."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache, partial
from typing import Callable, Sequence

import numpy as np
from scipy import linalg, special

from .parallel import map_replicates
from .sampler import Estimate, hermite_table, ks_distance, sample_cumulant
from .streams import substream

__all__ = [
    "CovarianceModel",
    "white_noise",
    "geometric",
    "regvar",
    "summable",
    "InvalidModelError",
    "GridError",
    "gaussian_path",
    "HermitePartialSum",
    "hermite_partial_sum",
    "DEFAULT_GRID",
    "simulate_partial_sums",
    "breuer_major_constant",
    "taqqu_normalizer",
    "finite_n_variance",
    "RosenblattCumulants",
    "rosenblatt_cumulants",
    "JointReport",
    "joint_experiment",
]

EMBED_FLOOR = -1e-8
CHOLESKY_MAX_N = 4096
SERIES_TOL = 1e-10
DEFAULT_GRID = (0.25, 0.5, 0.75, 1.0)


class InvalidModelError(ValueError):
    """The covariance sequence cannot be realized at the requested length."""


class GridError(ArithmeticError):
    """A quadrature grid is too coarse for the requested accuracy."""


def _default_slow(D: float, k: np.ndarray) -> np.ndarray:
    return (k / (k + 1.0)) ** D


@dataclass(frozen=True)
class CovarianceModel:
    """Stationary covariance ``r(k)`` with ``r(0) = 1``.

    ``kind`` is one of ``white``, ``geometric``, ``regvar`` or ``summable``.
    For ``regvar`` the lag-``k`` covariance is ``k^{-D} L(k)``; ``L`` must be
    slowly varying and bounded on compacts (documented, not checked).  For
    ``summable`` the user supplies ``func`` and ``tail(K, q)``, an upper bound
    on ``sum_{k > K} |r(k)|^q``.  Callables must be module-level functions if
    the model is used with more than one worker.
    """

    kind: str
    rho: float = 0.0
    D: float = 0.0
    L: Callable | None = field(default=None, compare=True)
    func: Callable | None = None
    tail: Callable | None = None

    def __call__(self, k) -> np.ndarray:
        k = np.abs(np.asarray(k, dtype=float))
        out = np.ones_like(k)
        pos = k > 0
        kp = k[pos]
        if self.kind == "white":
            out[pos] = 0.0
        elif self.kind == "geometric":
            out[pos] = self.rho**kp
        elif self.kind == "regvar":
            slow = self.L(kp) if self.L is not None else _default_slow(self.D, kp)
            out[pos] = kp ** (-self.D) * np.asarray(slow, dtype=float)
        elif self.kind == "summable":
            out[pos] = np.asarray(self.func(kp), dtype=float)
        else:
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        return out

    def slow(self, n: float) -> float:
        if self.kind != "regvar":
            raise ValueError("slowly varying factor only exists for regvar models")
        k = np.array([float(n)])
        return float((self.L(k) if self.L is not None else _default_slow(self.D, k))[0])

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "geometric":
            out["rho"] = self.rho
        if self.kind == "regvar":
            out["D"] = self.D
            out["L"] = "default (k/(k+1))^D" if self.L is None else getattr(self.L, "__name__", "user")
        return out


def white_noise() -> CovarianceModel:
    return CovarianceModel("white")


def geometric(rho: float) -> CovarianceModel:
    """AR(1)-type covariance ``rho^|k|``."""
    if not -1 < rho < 1:
        raise ValueError("need |rho| < 1")
    return CovarianceModel("geometric", rho=rho)


def regvar(D: float, L: Callable | None = None) -> CovarianceModel:
    """Regularly varying covariance ``k^{-D} L(k)``.

    The default slowly varying factor is ``L(k) = (k/(k+1))^D``, giving
    ``r(k) = (1+k)^{-D}``: convex and decreasing, so every circulant embedding
    is nonnegative.  The constant ``L = 1`` would force ``r(1) = r(0)`` and is
    not a covariance.
    """
    if D <= 0:
        raise ValueError("D must be positive")
    return CovarianceModel("regvar", D=D, L=L)


def summable(func: Callable, tail: Callable) -> CovarianceModel:
    return CovarianceModel("summable", func=func, tail=tail)


# -- simulation -------------------------------------------------------------------


@lru_cache(maxsize=32)
def _sampler_factor(model: CovarianceModel, n: int) -> tuple[str, np.ndarray]:
    lags = model(np.arange(n))
    if n <= 2:
        method = "cholesky"
    else:
        circ = np.concatenate([lags, lags[-2:0:-1]])
        lam = np.fft.fft(circ).real
        if lam.min() >= EMBED_FLOOR:
            return "circulant", np.sqrt(np.clip(lam, 0.0, None) / len(circ))
        method = "fallback"
    if n > CHOLESKY_MAX_N:
        raise InvalidModelError(
            f"circulant embedding has a negative eigenvalue and n={n} exceeds the Cholesky limit {CHOLESKY_MAX_N}"
        )
    try:
        return "cholesky", linalg.cholesky(linalg.toeplitz(lags), lower=True)
    except linalg.LinAlgError as exc:
        raise InvalidModelError(f"covariance is not positive definite at n={n} ({method})") from exc


def gaussian_path(model: CovarianceModel, n: int, seed: int | np.random.Generator, *index: int) -> np.ndarray:
    """Length-``n`` stationary Gaussian path with covariance ``model`` (exact in law).

    ``seed`` is an integer (combined with the optional substream ``index``)
    or a ready generator.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed, "gaussian_path", *index)
    method, factor = _sampler_factor(model, n)
    if method == "circulant":
        m = len(factor)
        z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        return np.fft.fft(factor * z).real[:n]
    return factor @ rng.standard_normal(n)


@dataclass(frozen=True)
class HermitePartialSum:
    q: int
    n: int
    grid: tuple[float, ...]
    values: np.ndarray


def hermite_partial_sum(path, q: int, grid: Sequence[float] = DEFAULT_GRID) -> HermitePartialSum:
    """``S_{q,n}(t) = sum_{k <= floor(n t)} H_q(G_k)`` on ``grid``; ``path`` may carry leading batch axes."""
    path = np.asarray(path, dtype=float)
    n = path.shape[-1]
    h = hermite_table(path, q)[q]
    csum = np.concatenate([np.zeros(path.shape[:-1] + (1,)), np.cumsum(h, axis=-1)], axis=-1)
    idx = [int(math.floor(n * t + 1e-12)) for t in grid]
    if any(i < 0 or i > n for i in idx):
        raise ValueError("grid points must lie in [0, 1]")
    return HermitePartialSum(q, n, tuple(grid), csum[..., idx])


def _partial_sum_replicate(
    model: CovarianceModel, n: int, qs: tuple[int, ...], grid: tuple[float, ...], seed: int, stream: str, r: int
) -> np.ndarray:
    path = gaussian_path(model, n, substream(seed, stream, r))
    h = hermite_table(path, max(qs))
    idx = [int(math.floor(n * t + 1e-12)) for t in grid]
    out = np.empty((len(qs), len(grid)))
    for a, q in enumerate(qs):
        c = np.concatenate([[0.0], np.cumsum(h[q])])
        out[a] = c[idx]
    return out


def simulate_partial_sums(
    model: CovarianceModel,
    n: int,
    qs: Sequence[int],
    replicates: int,
    seed: int,
    grid: Sequence[float] = DEFAULT_GRID,
    workers: int = 1,
    stream: str = "partial_sums",
) -> np.ndarray:
    """Array ``(replicates, len(qs), len(grid))`` of ``S_{q,n}(t)``, all ranks on the same path.

    Replicate ``r`` draws from substream ``(seed, stream, r)``.
    """
    _sampler_factor(model, n)  # validate before fanning out
    fn = partial(_partial_sum_replicate, model, n, tuple(qs), tuple(grid), seed, stream)
    return np.stack(map_replicates(fn, replicates, workers))


# -- deterministic constants -----------------------------------------------------


def finite_n_variance(model: CovarianceModel, q: int, n: int) -> float:
    """Exact ``Var S_{q,n}(1) = q! sum_{|k|<n} (n-|k|) r(k)^q``."""
    k = np.arange(1, n)
    terms = (n - k) * model(k) ** q
    return math.factorial(q) * (n + 2.0 * math.fsum(terms))


def breuer_major_constant(model: CovarianceModel, q: int, method: str = "auto") -> float:
    """``a_q = (q! sum_{k in Z} r(k)^q)^{1/2}``.

    ``method="closed"`` uses the closed form (geometric, white, default
    regvar via the Riemann zeta function); ``"series"`` truncates the series
    once the certified remainder drops below ``1e-10``.
    """
    if method == "auto":
        method = "series" if model.kind == "summable" or (model.kind == "regvar" and model.L is not None) else "closed"
    if model.kind == "regvar" and model.D * q <= 1:
        raise ValueError(f"sum of r(k)^q diverges for D*q = {model.D * q} <= 1")
    if method == "closed":
        total = _closed_sum(model, q)
    elif method == "series":
        total = _series_sum(model, q)
    else:
        raise ValueError(f"unknown method {method!r}")
    return math.sqrt(math.factorial(q) * total)


def _closed_sum(model: CovarianceModel, q: int) -> float:
    if model.kind == "white":
        return 1.0
    if model.kind == "geometric":
        x = model.rho**q
        return (1 + x) / (1 - x)
    if model.kind == "regvar" and model.L is None:
        return 1.0 + 2.0 * (float(special.zeta(model.D * q, 1)) - 1.0)
    raise ValueError(f"no closed form for {model.describe()}")


def _tail_bound(model: CovarianceModel, K: int, q: int) -> float:
    if model.kind == "white":
        return 0.0
    if model.kind == "geometric":
        x = abs(model.rho) ** q
        return x ** (K + 1) / (1 - x)
    if model.kind == "regvar" and model.L is None:
        s = model.D * q
        return (K + 1.0) ** (1 - s) / (s - 1)  # integral bound for sum_{k>K} (1+k)^{-s}
    if model.tail is not None:
        return float(model.tail(K, q))
    raise ValueError("model has no certified tail bound; supply summable(func, tail)")


def _series_sum(model: CovarianceModel, q: int) -> float:
    K = 64
    while 2 * _tail_bound(model, K, q) > SERIES_TOL:
        K *= 2
        if K > 2**27:
            raise ValueError("series converges too slowly for a certified 1e-10 truncation")
    k = np.arange(1, K + 1)
    return 1.0 + 2.0 * math.fsum(model(k) ** q)


def taqqu_normalizer(model: CovarianceModel, n: int) -> tuple[float, float]:
    """``(n^{1-D} L(n), b_D)`` with ``b_D = ((1-D)(1-2D))^{-1/2}``; needs ``0 < D < 1/2``."""
    if model.kind != "regvar":
        raise ValueError("the Taqqu normalizer needs a regvar model")
    D = model.D
    if not 0 < D < 0.5:
        raise ValueError(f"b_D has a pole at D = 1/2 and is undefined for D = {D}; need 0 < D < 1/2")
    return n ** (1 - D) * model.slow(n), ((1 - D) * (1 - 2 * D)) ** -0.5


# -- Rosenblatt limit -------------------------------------------------------------


@dataclass(frozen=True)
class RosenblattCumulants:
    H: float
    grid: int
    kappa2: float
    kappa3: float
    kappa4: float
    c_H: float
    grid_change: dict
    kappa2_galerkin: float


def _dual_traces(D: float, N: int) -> tuple[float, float, float]:
    h = 1.0 / N
    u = np.arange(N + 1, dtype=float)
    G = u ** (2 - D) / ((1 - D) * (2 - D))
    col = np.empty(N)
    col[0] = 2 * G[1]
    col[1:] = G[2:] + G[:-2] - 2 * G[1:-1]
    lam = linalg.eigvalsh(linalg.toeplitz(col * h ** (1 - D)))
    return float(np.sum(lam**2)), float(np.sum(lam**3)), float(np.sum(lam**4))


def rosenblatt_cumulants(H: float, grid: int = 1024, tol: float = 0.01) -> RosenblattCumulants:
    """Cumulants of the unit-variance Rosenblatt variable ``R_H(1)``.

    ``R_H(1)`` is a double integral whose kernel operator has the same nonzero
    spectrum as ``c_H B(H/2, 1-H)`` times the operator with kernel
    ``|s - t|^{H-1}`` on ``[0, 1]``, so ``kappa_m = 2^{m-1} (m-1)! tr(A^m)`` is
    computed from a Galerkin discretization of the latter (exact cell
    averages of the kernel, ``grid`` cells).  ``tr(A^2)`` is known in closed
    form and fixes ``c_H``.  The same traces on ``grid // 2`` cells give the
    reported grid change; a relative change above ``tol`` raises.
    """
    if not 0.5 < H < 1:
        raise ValueError("need 1/2 < H < 1")
    if grid < 16:
        raise ValueError("grid must have at least 16 cells")
    D = 1 - H
    exact2 = 1.0 / ((1 - 2 * D) * (1 - D))
    beta = special.beta(H / 2, 1 - H)
    c_H = float(1.0 / (beta * math.sqrt(2 * exact2)))

    def standardized(N):
        t2, t3, t4 = _dual_traces(D, N)
        s = 2 * exact2
        return t2 / exact2, 8 * t3 / s**1.5, 48 * t4 / s**2

    g2, k3, k4 = standardized(grid)
    _, k3c, k4c = standardized(grid // 2)
    change = {"kappa3": abs(k3 - k3c) / abs(k3), "kappa4": abs(k4 - k4c) / abs(k4)}
    if max(change.values()) > tol:
        raise GridError(f"grid too coarse: cumulants moved by {max(change.values()):.2%} between {grid // 2} and {grid}")
    return RosenblattCumulants(H, grid, 1.0, k3, k4, c_H, change, g2)


# -- joint limits -----------------------------------------------------------------


@dataclass(frozen=True)
class JointReport:
    case: int
    D: float
    q_high: int
    n: int
    replicates: int
    cross_covariance: Estimate
    cov_squares: Estimate
    ks: tuple[float, float]
    cumulants_low: dict
    cumulants_high: dict
    samples: np.ndarray = field(repr=False)


def _cov_squares_estimate(x: np.ndarray, y: np.ndarray) -> Estimate:
    z = (x**2 - np.mean(x**2)) * (y**2 - np.mean(y**2))
    n = len(z)
    return Estimate(float(np.sum(z) / (n - 1)), float(np.std(z, ddof=1) / math.sqrt(n)))


def joint_experiment(
    model: CovarianceModel,
    q_high: int,
    n: int,
    replicates: int,
    seed: int,
    workers: int = 1,
) -> JointReport:
    """Simulate ``(S_{q_high,n}(1), S_{2,n}(1))`` on shared paths, each scaled to unit variance.

    Case 1 (``D > 1/2``): both coordinates are asymptotically Gaussian.  Case 2
    (``1/q_high < D < 1/2``): the first is Gaussian, the second Rosenblatt.
    Smaller ``D`` is refused.
    """
    if model.kind != "regvar":
        raise ValueError("joint limits need a regvar model")
    if q_high < 3:
        raise ValueError("q_high must be at least 3")
    D = model.D
    if D > 0.5:
        case = 1
    elif 1 / q_high < D < 0.5:
        case = 2
    else:
        raise ValueError(f"D = {D} is outside the supported ranges (1/{q_high}, 1/2) and (1/2, inf)")
    raw = simulate_partial_sums(model, n, (q_high, 2), replicates, seed, grid=(1.0,), workers=workers, stream="joint")
    x = raw[:, 0, 0] / math.sqrt(finite_n_variance(model, q_high, n))
    y = raw[:, 1, 0] / math.sqrt(finite_n_variance(model, 2, n))
    cross = Estimate(float(np.mean(x * y)), float(np.std(x * y, ddof=1) / math.sqrt(replicates)))
    cums = [{m: sample_cumulant(v, m) for m in (3, 4)} for v in (x, y)]
    return JointReport(
        case, D, q_high, n, replicates, cross, _cov_squares_estimate(x, y), (ks_distance(x), ks_distance(y)),
        cums[0], cums[1], np.column_stack([x, y]),
    )
