"""Named, seeded experiments.

Each experiment takes validated parameters, a seed and a worker count and
returns plot-ready rows ``(n, replicate, stat_name, value)`` together with
a list of :class:`Metric` pass/fail checks.  All randomness flows from the
seed through named substreams.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import algebra
from .algebra import (
    ChaosVectorSpec,
    chi2_criteria,
    chi2_target_moments,
    fourth_cumulant,
    generalized_cs_check,
    multiply,
    offdiagonal_family,
    random_cover,
    rm33_pair,
    stein_bound,
)
from .discrete import (
    RADEMACHER,
    alternating_offdiagonal,
    counterexample_pair,
    lindeberg_gap,
    max_influence,
    mixed_contraction_norm,
    moment_gap,
    uniform_offdiagonal,
)
from .sampler import (
    Estimate,
    empirical_moment,
    evaluate_chaos,
    evaluate_expansion,
    hypercontractivity_check,
    ks_distance,
    sample_cumulant,
    sample_vector,
)
from .streams import substream
from .tensor import (
    SymmetricTensor,
    basis_tensor,
    contract,
    contraction_norm_sq_dual,
    inner,
    random_symmetric,
    tensor_power,
)
from .timeseries import (
    breuer_major_constant,
    finite_n_variance,
    geometric,
    joint_experiment,
    regvar,
    rosenblatt_cumulants,
    simulate_partial_sums,
    taqqu_normalizer,
)

IDENTITY_TOL = 1e-10


@dataclass
class Metric:
    """One pass/fail check.

    ``relation`` says how ``value`` is compared: ``abs`` means
    ``|value - target| <= tol`` (``tol`` already includes any standard-error
    allowance), ``rel`` means ``|value - target| <= tol * |target|``, ``lt``
    and ``gt`` compare against ``target`` strictly and ``le`` allows equality.
    """

    name: str
    value: float
    target: float
    relation: str
    tol: float | None = None
    se: float | None = None
    passed: bool = field(init=False)

    def __post_init__(self):
        v, t = float(self.value), float(self.target)
        if self.relation == "abs":
            self.passed = abs(v - t) <= self.tol
        elif self.relation == "rel":
            self.passed = abs(v - t) <= self.tol * abs(t)
        elif self.relation == "lt":
            self.passed = v < t
        elif self.relation == "le":
            self.passed = v <= t
        elif self.relation == "gt":
            self.passed = v > t
        else:
            raise ValueError(f"unknown relation {self.relation!r}")
        self.passed = bool(self.passed and math.isfinite(v))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": float(self.value),
            "se": None if self.se is None else float(self.se),
            "target": float(self.target),
            "tol": None if self.tol is None else float(self.tol),
            "relation": self.relation,
            "pass": self.passed,
        }


def within_se(name: str, est: Estimate, target: float, n_se: float = 4.0, extra: float = 0.0) -> Metric:
    return Metric(name, est.value, target, "abs", n_se * est.se + extra, est.se)


@dataclass
class Result:
    rows: list[tuple[int, int, str, float]] = field(default_factory=list)
    metrics: list[Metric] = field(default_factory=list)

    def add(self, n: int, stat: str, value: float, replicate: int = 0) -> None:
        self.rows.append((int(n), int(replicate), stat, float(value)))

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.metrics)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "replicate", "stat_name", "value"])
        for n, r, s, v in self.rows:
            w.writerow([n, r, s, repr(v)])
        return buf.getvalue()


@dataclass(frozen=True)
class Param:
    kind: str  # int, float, ints, floats
    default: Any
    doc: str

    def parse(self, raw: Any) -> Any:
        scalar = {"int": int, "ints": int, "float": float, "floats": float}[self.kind]
        if self.kind in ("ints", "floats"):
            if isinstance(raw, str):
                raw = [x for x in raw.split(",") if x.strip()]
            if not isinstance(raw, (list, tuple)):
                raw = [raw]
            return [_coerce(scalar, x) for x in raw]
        return _coerce(scalar, raw)


def _coerce(kind, raw):
    if isinstance(raw, bool):
        raise ValueError(f"expected a number, got {raw!r}")
    if kind is int:
        val = float(raw)
        if not val.is_integer():
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(val)
    return float(raw)


@dataclass(frozen=True)
class Experiment:
    name: str
    summary: str
    params: dict[str, Param]
    func: Callable[..., Result]

    def resolve(self, overrides: dict[str, Any]) -> dict[str, Any]:
        unknown = sorted(set(overrides) - set(self.params))
        if unknown:
            raise KeyError(f"unknown parameter(s) for {self.name}: {', '.join(unknown)}")
        out = {}
        for key, spec in self.params.items():
            out[key] = spec.parse(overrides[key]) if key in overrides else spec.default
        return out

    def run(self, params: dict[str, Any], seed: int, workers: int = 1) -> Result:
        return self.func(seed=seed, workers=workers, **params)

    def describe(self) -> dict:
        return {
            "experiment": self.name,
            "seed": None,
            "params": {k: p.default for k, p in self.params.items()},
            "docs": {"summary": self.summary, **{k: p.doc for k, p in self.params.items()}},
        }


REGISTRY: dict[str, Experiment] = {}


def experiment(name: str, summary: str, **params: Param):
    def wrap(func):
        REGISTRY[name] = Experiment(name, summary, params, func)
        return func

    return wrap


# -- algebra ----------------------------------------------------------------------


def _rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300) if a != b else 0.0


def identity_errors(seed: int, trials: int) -> dict[str, list[float]]:
    """Relative errors of the norm identities on random sparse kernels."""
    errs: dict[str, list[float]] = {"sym_norm": [], "azerty": [], "azertiop": [], "fubini": []}
    for t in range(trials):
        rng = substream(seed, "identities", t)
        p, q = (int(x) for x in rng.integers(1, 5, size=2))
        d = int(rng.integers(2, 7))
        f, g = random_symmetric(p, d, rng, n_entries=8), random_symmetric(q, d, rng, n_entries=8)
        errs["sym_norm"].append(_rel_err(*algebra.sym_norm_identity(f, g)))
        r = int(rng.integers(0, min(p, q) + 1))
        errs["fubini"].append(_rel_err(contract(f, g, r).norm_sq(), contraction_norm_sq_dual(f, g, r)))
        q3 = int(rng.integers(1, 4))
        d3 = int(rng.integers(2, 5))
        fs = [random_symmetric(q3, d3, rng, n_entries=6) for _ in range(4)]
        errs["azerty"].append(_rel_err(*algebra.azerty_identity(*fs)))
        q2 = int(rng.integers(1, 3))
        errs["azertiop"].append(
            _rel_err(*algebra.azertiop_identity(random_symmetric(2 * q2, d3, rng, n_entries=8), random_symmetric(q2, d3, rng)))
        )
    return errs


def gencs_slacks(seed: int, trials: int) -> list[tuple[float, float]]:
    out = []
    for t in range(trials):
        rng = substream(seed, "gencs", t)
        size = int(rng.integers(1, 7))
        n_sets = int(rng.integers(2, min(2 * size, 5) + 1))
        cover = random_cover(size, n_sets, rng)
        atoms = int(rng.integers(1, 6))
        w = rng.uniform(0.1, 2.0, atoms)
        hs = [rng.standard_normal((atoms,) * len(c)) for c in cover]
        rec = generalized_cs_check(cover, hs, w)
        scale = max(1.0, rec.rhs_gencs)
        out.append(tuple(s / scale for s in rec.slack))
    return out


@experiment("identities", "Norm identities for contractions on random sparse kernels.", trials=Param("int", 200, "random instances per identity"))
def run_identities(seed: int, workers: int, trials: int) -> Result:
    res = Result()
    for name, errs in identity_errors(seed, trials).items():
        for t, e in enumerate(errs):
            res.add(0, f"{name}_rel_err", e, t)
        res.metrics.append(Metric(f"{name}_max_rel_err", max(errs, default=0.0), 0.0, "abs", IDENTITY_TOL))
    return res


@experiment("generalized-cs", "Generalized Cauchy-Schwarz on random discrete measures.", trials=Param("int", 100, "random instances"))
def run_gencs(seed: int, workers: int, trials: int) -> Result:
    res = Result()
    slacks = gencs_slacks(seed, trials)
    for t, (s1, s2) in enumerate(slacks):
        res.add(0, "slack_lhs_vs_gencs1", s1, t)
        res.add(0, "slack_gencs1_vs_gencs", s2, t)
    res.metrics.append(Metric("min_slack_lhs_vs_gencs1", min((s[0] for s in slacks), default=0.0), -1e-12, "gt"))
    res.metrics.append(Metric("min_slack_gencs1_vs_gencs", min((s[1] for s in slacks), default=0.0), -1e-12, "gt"))
    return res


@experiment(
    "multiplication-formula",
    "Pathwise product of two chaos variables against its chaos expansion.",
    pairs=Param("int", 50, "random kernel pairs"),
    draws=Param("int", 100, "shared Gaussian draws"),
    dim=Param("int", 4, "basis dimension"),
)
def run_multiplication(seed: int, workers: int, pairs: int, draws: int, dim: int) -> Result:
    res = Result()
    xi = substream(seed, "mult_draws").standard_normal((draws, dim))
    worst = 0.0
    for t in range(pairs):
        rng = substream(seed, "mult_kernels", t)
        p, q = (int(x) for x in rng.integers(1, 4, size=2))
        f, g = random_symmetric(p, dim, rng), random_symmetric(q, dim, rng)
        prod = evaluate_chaos(f, xi) * evaluate_chaos(g, xi)
        expn = evaluate_expansion(multiply(f, g), xi)
        scale = max(float(np.sqrt(np.mean(prod**2))), 1e-300)
        err = float(np.max(np.abs(prod - expn) / np.maximum(np.abs(prod), scale)))
        worst = max(worst, err)
        res.add(dim, "max_rel_err", err, t)
    res.metrics.append(Metric("max_rel_err", worst, 0.0, "abs", 1e-8))
    return res


@experiment("counterexample-rm33", "Orthogonal second-chaos pair with vanishing symmetrized contraction.")
def run_rm33(seed: int, workers: int) -> Result:
    res = Result()
    f1, f2 = rm33_pair()
    c = contract(f1, f2, 1)
    vals = {
        "inner": inner(f1, f2),
        "sym_contraction_norm": algebra.symmetrize(c).norm(),
        "contraction_norm_sq": c.norm_sq(),
        "cov_squares": algebra.cov_squares(f1, f2),
    }
    for k, v in vals.items():
        res.add(2, k, v)
    res.metrics += [
        Metric("inner", vals["inner"], 0.0, "abs", 0.0),
        Metric("sym_contraction_norm", vals["sym_contraction_norm"], 0.0, "abs", 0.0),
        Metric("contraction_norm_sq", vals["contraction_norm_sq"], 0.5, "abs", 0.0),
    ]
    return res


@experiment(
    "fourth-moment",
    "Off-diagonal second-chaos family: exact fourth cumulant 6/n and distance to normal.",
    n=Param("ints", [1, 4, 16, 64], "family sizes"),
    samples=Param("int", 100_000, "Monte Carlo draws per size"),
)
def run_fourth_moment(seed: int, workers: int, n: list[int], samples: int) -> Result:
    res = Result()
    ks = {}
    for m in n:
        f = offdiagonal_family(m)
        k4 = fourth_cumulant(f)
        x = sample_vector([f], samples, seed, stream=f"fourth_moment_{m}")[:, 0]
        ks[m] = ks_distance(x)
        res.add(m, "kappa4_exact", k4)
        res.add(m, "kappa4_closed_form", 6.0 / m)
        res.add(m, "kappa4_sample", sample_cumulant(x, 4).value)
        res.add(m, "ks", ks[m])
        res.metrics.append(Metric(f"kappa4_n{m}", k4, 6.0 / m, "abs", 1e-12))
    if 64 in ks:
        res.metrics.append(Metric("ks_n64", ks[64], 0.02, "lt"))
    if 1 in ks:
        res.metrics.append(Metric("ks_n1", ks[1], 0.05, "gt"))
    return res


def stein_specs() -> list[ChaosVectorSpec]:
    """Five fixed vector specs; the first is purely Gaussian."""
    h = np.array([0.6, 0.8, 0.0, 0.0, 0.0, 0.0])
    chi = SymmetricTensor(2, 6, {(1, 1): 0.5, (2, 2): 0.5})
    off = SymmetricTensor(2, 6, {(1, 2): 0.5 / math.sqrt(2), (3, 4): 0.5 / math.sqrt(2)})
    mixed = SymmetricTensor(2, 6, {(1, 3): 0.4, (2, 4): 0.3, (5, 6): 0.4})
    cube = tensor_power(np.array([0.0, 0.0, 0.6, 0.0, 0.8, 0.0]), 3).scale(1 / math.sqrt(6))
    return [
        ChaosVectorSpec((basis_tensor(1, 1, 6), tensor_power(h, 1), basis_tensor(3, 1, 6))),
        ChaosVectorSpec((chi,)),
        ChaosVectorSpec((off, basis_tensor(5, 1, 6))),
        ChaosVectorSpec((off, mixed)),
        ChaosVectorSpec((cube, chi, basis_tensor(6, 1, 6))),
    ]


def _test_functions():
    def capped_norm(x):
        return np.minimum(1.0, np.linalg.norm(x, axis=1))

    def sum_sin(x):
        return np.sum(np.sin(x), axis=1)

    return {"min1norm": (capped_norm, lambda d: 1.0), "sumsin": (sum_sin, math.sqrt)}


@experiment(
    "stein-bounds",
    "Lipschitz-type normal approximation bound against Monte Carlo on fixed chaos vectors.",
    samples=Param("int", 100_000, "Monte Carlo draws"),
)
def run_stein(seed: int, workers: int, samples: int) -> Result:
    res = Result()
    for s, v in enumerate(stein_specs()):
        sigma = v.covariance()
        F = sample_vector(v, samples, seed, stream=f"stein_F_{s}")
        root = np.linalg.cholesky(sigma)
        N = substream(seed, "stein_N", s).standard_normal((samples, len(v))) @ root.T
        for hname, (h, lip) in _test_functions().items():
            bound = stein_bound(v, sigma, "lipschitz", lip(len(v)))
            hf, hn = h(F), h(N)
            diff = float(np.mean(hf) - np.mean(hn))
            se = math.sqrt(np.var(hf, ddof=1) / samples + np.var(hn, ddof=1) / samples)
            res.add(s, f"bound_{hname}", bound)
            res.add(s, f"gap_{hname}", abs(diff))
            res.add(s, f"se_{hname}", se)
            res.metrics.append(Metric(f"spec{s}_{hname}", abs(diff) - 3 * se, bound, "le", se=se))
        if all(q == 1 for q in v.orders):
            res.metrics.append(Metric(f"spec{s}_gaussian_bound_zero", stein_bound(v), 0.0, "abs", 0.0))
    return res


@experiment(
    "chi2",
    "Chi-square criteria: canonical kernel and target moments of centered gamma samples.",
    nu=Param("ints", [1, 2, 4], "degrees of freedom"),
    samples=Param("int", 1_000_000, "gamma draws per nu"),
)
def run_chi2(seed: int, workers: int, nu: list[int], samples: int) -> Result:
    res = Result()
    for v in nu:
        f = SymmetricTensor(2, v, {(i, i): 1.0 for i in range(1, v + 1)})
        crit = chi2_criteria(f, v)
        res.add(v, "mid_gap", crit.mid_gap)
        res.add(v, "c_q", crit.c_q)
        res.metrics.append(Metric(f"mid_gap_nu{v}", crit.mid_gap, 0.0, "abs", 0.0))
        g = 2.0 * substream(seed, "chi2", v).gamma(v / 2.0, size=samples) - v
        m2, m43 = chi2_target_moments(v)
        e2 = Estimate(float(np.mean(g**2)), float(np.std(g**2, ddof=1) / math.sqrt(samples)))
        z = g**4 - 12 * g**3
        e43 = Estimate(float(np.mean(z)), float(np.std(z, ddof=1) / math.sqrt(samples)))
        res.add(v, "second_moment", e2.value)
        res.add(v, "fourth_minus_12_third", e43.value)
        res.metrics.append(within_se(f"second_moment_nu{v}", e2, m2))
        res.metrics.append(within_se(f"fourth_minus_12_third_nu{v}", e43, m43))
    res.metrics.append(Metric("c_2", algebra.chi2_constant(2), 1.0, "abs", 0.0))
    return res


@experiment(
    "hypercontractivity",
    "Moment equivalence on a fixed chaos for random kernels.",
    r=Param("floats", [3.0, 4.0, 6.0], "moment orders"),
    q=Param("ints", [1, 2, 3], "chaos orders"),
    tensors=Param("int", 10, "random kernels per (q, r)"),
    samples=Param("int", 20_000, "draws per check"),
)
def run_hypercontractivity(seed: int, workers: int, r: list[float], q: list[int], tensors: int, samples: int) -> Result:
    res = Result()
    for qq in q:
        for t in range(tensors):
            f = random_symmetric(qq, 4, substream(seed, "hc_kernel", qq, t))
            for rr in r:
                rec = hypercontractivity_check(f, rr, samples, seed=int(substream(seed, "hc_seed", qq, t).integers(2**62)))
                res.add(qq, f"lhs_r{rr:g}", rec.lhs, t)
                res.add(qq, f"rhs_r{rr:g}", rec.rhs, t)
                res.metrics.append(Metric(f"q{qq}_r{rr:g}_t{t}", rec.lhs - 3 * rec.lhs_se, rec.rhs, "le", se=rec.lhs_se))
    return res


# -- time series ------------------------------------------------------------------


@experiment(
    "breuer-major",
    "Short-memory Hermite partial sums: constants, exact finite-n variance and Monte Carlo.",
    rho=Param("float", 0.5, "geometric covariance parameter"),
    q=Param("ints", [2, 3], "Hermite ranks"),
    n=Param("ints", [256, 4096], "path lengths for Monte Carlo"),
    replicates=Param("int", 1000, "paths per length"),
    n_limit=Param("int", 32768, "length for the deterministic limit check"),
)
def run_breuer_major(seed: int, workers: int, rho: float, q: list[int], n: list[int], replicates: int, n_limit: int) -> Result:
    res = Result()
    model = geometric(rho)
    for qq in q:
        closed = breuer_major_constant(model, qq, "closed") ** 2
        series = breuer_major_constant(model, qq, "series") ** 2
        res.add(0, f"a{qq}_sq_closed", closed)
        res.add(0, f"a{qq}_sq_series", series)
        res.metrics.append(Metric(f"a{qq}_sq_series_vs_closed", series, closed, "abs", 1e-10))
        ratio = finite_n_variance(model, qq, n_limit) / n_limit
        res.add(n_limit, f"var_over_n_q{qq}", ratio)
        res.metrics.append(Metric(f"var_over_n_q{qq}_n{n_limit}", ratio, closed, "rel", 0.05))
    for m in n:
        sums = simulate_partial_sums(model, m, q, replicates, seed, grid=(0.5, 1.0), workers=workers, stream=f"bm_{m}")
        for a, qq in enumerate(q):
            s1 = sums[:, a, 1]
            for rep, val in enumerate(s1):
                res.add(m, f"S_q{qq}", val, rep)
            exact = finite_n_variance(model, qq, m)
            est = empirical_moment(s1[:, None], [2])
            res.metrics.append(within_se(f"mc_var_q{qq}_n{m}", est, exact))
            half = sums[:, a, 0]
            inc = s1 - half
            prod = (half / half.std()) * (inc / inc.std())
            res.metrics.append(within_se(f"increment_corr_q{qq}_n{m}", Estimate(float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(len(prod)))), 0.0))
    return res


@experiment(
    "taqqu",
    "Long-memory second-rank partial sums against the Rosenblatt limit.",
    D=Param("float", 0.3, "memory exponent, 0 < D < 1/2"),
    n=Param("int", 16384, "path length"),
    replicates=Param("int", 200, "paths"),
    grid=Param("int", 1024, "Galerkin cells for the Rosenblatt cumulants"),
)
def run_taqqu(seed: int, workers: int, D: float, n: int, replicates: int, grid: int) -> Result:
    res = Result()
    model = regvar(D)
    norm, b = taqqu_normalizer(model, n)
    var = finite_n_variance(model, 2, n)
    ratio = var / n ** (2 - 2 * D)
    res.add(n, "var_over_n_2_2D", ratio)
    res.add(n, "b_D_sq", b * b)
    res.metrics.append(Metric("var_ratio_vs_bD_sq", ratio, b * b, "rel", 0.10))
    res.metrics.append(Metric("var_ratio_vs_2bD_sq", ratio, 2 * b * b, "rel", 0.10))
    ros = rosenblatt_cumulants(1 - D, grid)
    res.add(grid, "rosenblatt_kappa3", ros.kappa3)
    res.add(grid, "rosenblatt_kappa4", ros.kappa4)
    raw = simulate_partial_sums(model, n, (2,), replicates, seed, grid=(1.0,), workers=workers, stream="taqqu")[:, 0, 0]
    x = raw / math.sqrt(var)
    for rep, val in enumerate(x):
        res.add(n, "S2_standardized", val, rep)
    k3, k4 = sample_cumulant(x, 3), sample_cumulant(x, 4)
    res.add(n, "kappa3_sample", k3.value)
    res.add(n, "kappa4_sample", k4.value)
    grid_tol = abs(ros.kappa3) * ros.grid_change["kappa3"]
    res.metrics.append(within_se("kappa3_vs_rosenblatt", k3, ros.kappa3, extra=grid_tol))
    res.metrics.append(Metric("kappa4_above_3se", k4.value, 3 * k4.se, "gt", se=k4.se))
    return res


@experiment(
    "joint-limits",
    "Pairs of Hermite partial sums of ranks q and 2 on the same long-memory path.",
    D=Param("float", 0.8, "memory exponent, in (1/q, 1/2) or above 1/2"),
    q=Param("int", 3, "higher Hermite rank, at least 3"),
    n=Param("int", 16384, "path length"),
    replicates=Param("int", 3000, "paths"),
)
def run_joint(seed: int, workers: int, D: float, q: int, n: int, replicates: int) -> Result:
    res = Result()
    rep = joint_experiment(regvar(D), q, n, replicates, seed, workers)
    for r, (a, b) in enumerate(rep.samples):
        res.add(n, f"S{q}_standardized", a, r)
        res.add(n, "S2_standardized", b, r)
    res.add(n, "ks_first", rep.ks[0])
    res.add(n, "ks_second", rep.ks[1])
    res.add(n, "cov_squares", rep.cov_squares.value)
    res.add(n, "cross_covariance", rep.cross_covariance.value)
    res.add(n, "kappa4_second", rep.cumulants_high[4].value)
    res.metrics.append(Metric("ks_first", rep.ks[0], 0.05, "lt"))
    res.metrics.append(within_se("cross_covariance", rep.cross_covariance, 0.0))
    if rep.case == 1:
        res.metrics.append(Metric("ks_second", rep.ks[1], 0.05, "lt"))
        res.metrics.append(within_se("cov_squares", rep.cov_squares, 0.0))
    else:
        k4 = rep.cumulants_high[4]
        res.metrics.append(Metric("kappa4_second_above_3se", k4.value, 3 * k4.se, "gt", se=k4.se))
    return res


@experiment(
    "rosenblatt-cumulants",
    "Cumulants of the unit-variance Rosenblatt variable by Galerkin discretization.",
    H=Param("floats", [0.55, 0.7, 0.85], "Hurst parameters in (1/2, 1)"),
    grid=Param("int", 1024, "Galerkin cells"),
)
def run_rosenblatt(seed: int, workers: int, H: list[float], grid: int) -> Result:
    res = Result()
    for h in H:
        r = rosenblatt_cumulants(h, grid)
        tag = f"H{h:g}"
        for k in ("kappa2", "kappa3", "kappa4", "c_H", "kappa2_galerkin"):
            res.add(grid, f"{k}_{tag}", getattr(r, k))
        res.metrics.append(Metric(f"kappa3_{tag}", r.kappa3, 0.0, "gt"))
        res.metrics.append(Metric(f"kappa4_{tag}", r.kappa4, 0.0, "gt"))
        res.metrics.append(Metric(f"grid_change_{tag}", max(r.grid_change.values()), 0.01, "lt"))
    return res


# -- discrete ---------------------------------------------------------------------


@experiment(
    "discrete-chaos",
    "Rademacher counterexample and the Gaussian comparison along a refining family.",
    d=Param("ints", [10, 50], "family sizes for the comparison"),
    samples=Param("int", 100_000, "coupled draws per size"),
)
def run_discrete(seed: int, workers: int, d: list[int], samples: int) -> Result:
    res = Result()
    a1, a2 = counterexample_pair()
    gap = moment_gap(a1, a2, 2, 2).value
    mixed = [mixed_contraction_norm(a1, a2, r) for r in (1, 2)]
    infl = max(max_influence(a1), max_influence(a2))
    res.add(4, "counterexample_gap", gap)
    res.add(4, "counterexample_mixed_r1", mixed[0])
    res.add(4, "counterexample_mixed_r2", mixed[1])
    res.add(4, "counterexample_max_influence", infl)
    res.metrics += [
        Metric("counterexample_gap", gap, -0.25, "abs", 0.0),
        Metric("counterexample_mixed_r1", mixed[0], 0.0, "abs", 0.0),
        Metric("counterexample_mixed_r2", mixed[1], 0.0, "abs", 0.0),
        Metric("counterexample_max_influence", infl, 0.125, "abs", 0.0),
    ]
    deltas = []
    for m in d:
        b1, b2 = uniform_offdiagonal(m), alternating_offdiagonal(m)
        rec = lindeberg_gap(b1, b2, 2, 2, RADEMACHER, samples, seed)
        deltas.append(abs(rec.delta.value))
        res.add(m, "gap_X", rec.gap_X.value)
        res.add(m, "gap_G", rec.gap_G.value)
        res.add(m, "delta", rec.delta.value)
        res.add(m, "delta_se", rec.delta.se)
        res.add(m, "max_influence", max_influence(b1))
        res.add(m, "mixed_r1", mixed_contraction_norm(b1, b2, 1))
    for i in range(1, len(deltas)):
        res.metrics.append(Metric(f"abs_delta_d{d[i]}_below_d{d[i - 1]}", deltas[i], deltas[i - 1], "lt"))
    return res


# -- output -----------------------------------------------------------------------


def summary(name: str, params: dict, seed: int, result: Result) -> dict:
    return {
        "experiment": name,
        "params": params,
        "seed": seed,
        "passed": result.passed,
        "metrics": [m.to_dict() for m in result.metrics],
    }


def summary_json(name: str, params: dict, seed: int, result: Result) -> str:
    return json.dumps(summary(name, params, seed, result), indent=2, sort_keys=True) + "\n"

