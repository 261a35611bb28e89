"""Point sets, Gram matrices, optimal weights and worst-case errors.

The target measure is the normalized uniform measure on S^d, whose kernel
mean is the constant b_{0,d}.  For weights w and points x_i,

    wce² = Σ_ij w_i w_j ψ(θ_ij) − 2 b_{0,d} Σ_i w_i + b_{0,d}.
"""

from __future__ import annotations

import csv
import functools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from .errors import DimensionMismatchError, NumericalError
from .kernels import IsotropicKernel, SpherePoint, psi_from_geometry
from .schoenberg import schoenberg_coeffs

log = logging.getLogger(__name__)

__all__ = [
    "Generator",
    "WeightMode",
    "CubatureRule",
    "DiscrepancyReport",
    "RateStudy",
    "generate_points",
    "equal_weight_rule",
    "gram_matrix",
    "gram_cross",
    "kernel_mean_uniform",
    "worst_case_error",
    "optimal_weights",
    "discrepancy_between",
    "rate_study",
    "write_rule_csv",
    "read_rule_csv",
]

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
JITTER_ESCALATIONS = 3


class Generator(str, Enum):
    UNIFORM_RANDOM = "UniformRandom"
    FIBONACCI = "Fibonacci"
    USER = "UserSupplied"


class WeightMode(str, Enum):
    EQUAL = "Equal"
    OPTIMAL = "Optimal"


def _as_array(pts) -> np.ndarray:
    if isinstance(pts, CubatureRule):
        return pts.points
    if len(pts) and isinstance(pts[0], SpherePoint):
        dims = {p.dim for p in pts}
        if len(dims) > 1:
            raise DimensionMismatchError(f"points on spheres of dimensions {sorted(dims)}")
        return np.array([p.coords for p in pts])
    a = np.asarray(pts, dtype=float)
    if a.ndim != 2 or a.shape[1] < 2:
        raise ValueError("points must be an (n, d+1) array")
    return a


@dataclass(frozen=True)
class CubatureRule:
    """Points (rows of an (n, d+1) array, renormalized) with weights."""

    points: np.ndarray
    weights: np.ndarray
    generator: Generator = Generator.USER
    weight_mode: WeightMode = WeightMode.EQUAL
    seed: int | None = None
    jitter: float = 0.0

    def __post_init__(self):
        p = _as_array(self.points).astype(float, copy=True)
        norms = np.linalg.norm(p, axis=1)
        if p.shape[0] == 0 or np.any(norms == 0):
            raise ValueError("CubatureRule: need at least one nonzero point")
        p /= norms[:, None]
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != p.shape[0]:
            raise ValueError(f"CubatureRule: {p.shape[0]} points but {w.shape[0]} weights")
        gen = Generator(self.generator)
        if gen is Generator.FIBONACCI and p.shape[1] != 3:
            raise ValueError("CubatureRule: Fibonacci rules live on S^2")
        p.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "generator", gen)
        object.__setattr__(self, "weight_mode", WeightMode(self.weight_mode))

    @property
    def dim(self) -> int:
        return self.points.shape[1] - 1

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def sphere_points(self) -> list[SpherePoint]:
        return [SpherePoint(tuple(row)) for row in self.points]

    def with_weights(self, weights, mode: WeightMode, jitter: float = 0.0) -> "CubatureRule":
        return CubatureRule(self.points, weights, self.generator, mode, self.seed, jitter)


@dataclass(frozen=True)
class DiscrepancyReport:
    wce: float
    wce_sq: float
    truncation: int
    gram_condition: float
    jitter_used: float
    kernel: dict
    n_points: int = 0

    def to_dict(self) -> dict:
        return {
            "wce": self.wce,
            "wce_sq": self.wce_sq,
            "truncation": self.truncation,
            "gram_condition": self.gram_condition,
            "jitter_used": self.jitter_used,
            "kernel": self.kernel,
            "n_points": self.n_points,
        }


# -- point generation --------------------------------------------------------


def generate_points(generator: Generator | str, n: int, d: int, seed: int | None = None) -> np.ndarray:
    """(n, d+1) array of unit vectors.

    UniformRandom normalizes standard Gaussian vectors drawn with ``seed``.
    Fibonacci (d = 2) uses z_i = 1 − (2i+1)/n and golden-angle longitudes;
    for n = 1 it returns the north pole.
    """
    gen = Generator(generator)
    if int(n) != n or n < 1:
        raise ValueError(f"generate_points: n must be a positive integer, got {n!r}")
    if int(d) != d or d < 1:
        raise ValueError(f"generate_points: d must be a positive integer, got {d!r}")
    n, d = int(n), int(d)
    if gen is Generator.UNIFORM_RANDOM:
        g = np.random.default_rng(seed).standard_normal((n, d + 1))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    if gen is Generator.FIBONACCI:
        if d != 2:
            raise ValueError("generate_points: the Fibonacci lattice is defined for d = 2 only")
        if n == 1:
            return np.array([[0.0, 0.0, 1.0]])
        i = np.arange(n, dtype=float)
        z = 1.0 - (2.0 * i + 1.0) / n
        r = np.sqrt(1.0 - z * z)
        phi = GOLDEN_ANGLE * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise ValueError("generate_points: UserSupplied points are not generated")


def equal_weight_rule(generator: Generator | str, n: int, d: int, seed: int | None = None) -> CubatureRule:
    pts = generate_points(generator, n, d, seed)
    return CubatureRule(pts, np.full(n, 1.0 / n), Generator(generator), WeightMode.EQUAL, seed)


# -- Gram matrices -------------------------------------------------------------

_BLOCK = 2048


def gram_cross(k: IsotropicKernel, a, b) -> np.ndarray:
    """G_ij = ψ(θ(a_i, b_j)), assembled in row blocks."""
    A, B = _as_array(a), _as_array(b)
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatchError(f"points on S^{A.shape[1] - 1} and S^{B.shape[1] - 1}")
    A = A / np.linalg.norm(A, axis=1, keepdims=True)
    B = B / np.linalg.norm(B, axis=1, keepdims=True)
    out = np.empty((A.shape[0], B.shape[0]))
    for s in range(0, A.shape[0], _BLOCK):
        r = cdist(A[s:s + _BLOCK], B)
        r = np.minimum(r, 2.0)
        c = 1.0 - 0.5 * r * r
        out[s:s + _BLOCK] = psi_from_geometry(k, c, r)
    return out


def gram_matrix(k: IsotropicKernel, pts) -> np.ndarray:
    """Symmetric Gram matrix with unit diagonal."""
    G = gram_cross(k, pts, pts)
    np.fill_diagonal(G, 1.0)
    return G


@functools.lru_cache(maxsize=64)
def _kernel_mean(k: IsotropicKernel, d: int, truncation: int, route: str) -> float:
    return float(schoenberg_coeffs(k, d, truncation, route).coeffs[0])


def kernel_mean_uniform(k: IsotropicKernel, d: int, *, truncation: int = 0, route: str = "closed") -> float:
    """∫ψ(θ(x, y)) dσ(y) for the normalized uniform measure, which is b_{0,d}."""
    return _kernel_mean(k, int(d), int(truncation), route)


# -- worst-case error ------------------------------------------------------------


def _quadratic(G: np.ndarray, w: np.ndarray, v: np.ndarray | None = None) -> float:
    v = w if v is None else v
    return math.fsum(w * (G @ v))


def _cholesky(G: np.ndarray):
    """Cholesky of G + jitter·I, escalating jitter ×10 up to three times."""
    n = G.shape[0]
    jitter = 1e-12 * float(np.trace(G)) / n
    for attempt in range(JITTER_ESCALATIONS + 1):
        try:
            c = linalg.cho_factor(G + jitter * np.eye(n), lower=True, check_finite=False)
            return c, jitter
        except linalg.LinAlgError:
            log.info("Cholesky failed with jitter %.3e (attempt %d)", jitter, attempt + 1)
            jitter *= 10.0
    raise NumericalError(f"optimal_weights: Gram matrix not positive definite after {JITTER_ESCALATIONS} jitter escalations")


def _condition(G: np.ndarray, chol=None) -> float:
    """1-norm condition estimate from the Cholesky factor."""
    if chol is None:
        try:
            chol, _ = _cholesky(G)
        except NumericalError:
            return math.inf
    anorm = float(np.max(np.sum(np.abs(G), axis=0)))
    rcond, info = linalg.lapack.dpocon(chol[0], anorm, uplo="L")
    return math.inf if info != 0 or rcond == 0 else 1.0 / rcond


def _wce_sq(G: np.ndarray, w: np.ndarray, b0: float) -> float:
    return math.fsum([_quadratic(G, w), -2.0 * b0 * math.fsum(w), b0])


def worst_case_error(k: IsotropicKernel, rule: CubatureRule, *, truncation: int = 0,
                     route: str = "closed", gram: np.ndarray | None = None) -> DiscrepancyReport:
    """Kernel discrepancy of ``rule`` against the uniform measure."""
    G = gram_matrix(k, rule) if gram is None else gram
    b0 = kernel_mean_uniform(k, rule.dim, truncation=truncation, route=route)
    wsq = _wce_sq(G, rule.weights, b0)
    if wsq < -1e-10:
        raise NumericalError(f"worst_case_error: negative squared error {wsq:.3e}")
    return DiscrepancyReport(
        wce=math.sqrt(max(wsq, 0.0)),
        wce_sq=wsq,
        truncation=truncation,
        gram_condition=_condition(G),
        jitter_used=rule.jitter,
        kernel=k.to_dict(),
        n_points=rule.n,
    )


def optimal_weights(k: IsotropicKernel, pts, *, truncation: int = 0, route: str = "closed",
                    generator: Generator | str = Generator.USER, seed: int | None = None,
                    gram: np.ndarray | None = None) -> CubatureRule:
    """Weights solving (G + jitter·I) w = b_{0,d} 1 by Cholesky."""
    P = _as_array(pts)
    if isinstance(pts, CubatureRule):
        generator, seed = pts.generator, pts.seed
    G = gram_matrix(k, P) if gram is None else gram
    b0 = kernel_mean_uniform(k, P.shape[1] - 1, truncation=truncation, route=route)
    chol, jitter = _cholesky(G)
    w = linalg.cho_solve(chol, np.full(P.shape[0], b0), check_finite=False)
    return CubatureRule(P, w, generator, WeightMode.OPTIMAL, seed, jitter)


def discrepancy_between(k: IsotropicKernel, a: CubatureRule, b: CubatureRule) -> float:
    """Kernel distance between two weighted point measures."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"rules on S^{a.dim} and S^{b.dim}")
    aa = _quadratic(gram_cross(k, a, a), a.weights)
    bb = _quadratic(gram_cross(k, b, b), b.weights)
    ab = _quadratic(gram_cross(k, a, b), a.weights, b.weights)
    return math.sqrt(max(math.fsum([aa, bb, -2.0 * ab]), 0.0))


# -- rate study --------------------------------------------------------------------


@dataclass(frozen=True)
class RateStudy:
    n: tuple[int, ...]
    wce: tuple[float, ...]
    slope: float
    intercept: float
    kernel: dict
    dim: int
    generator: str
    seed: int | None
    reports: tuple[DiscrepancyReport, ...] = field(default=(), repr=False)

    def metadata(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "kernel": self.kernel,
            "dim": self.dim,
            "generator": self.generator,
            "seed": self.seed,
            "n_grid": list(self.n),
            "gram_condition": [r.gram_condition for r in self.reports],
            "jitter_used": [r.jitter_used for r in self.reports],
        }

    def write(self, path) -> None:
        """CSV table of (n, wce) plus a JSON sidecar ``<path>.json`` with the fit."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "wce"])
            for n, e in zip(self.n, self.wce):
                w.writerow([n, repr(float(e))])
        with open(f"{path}.json", "w", encoding="utf-8") as fh:
            json.dump(self.metadata(), fh, indent=2)
            fh.write("\n")


def _rate_entry(k, d, n, generator, seed, truncation, route):
    pts = generate_points(generator, n, d, seed)
    G = gram_matrix(k, pts)
    rule = optimal_weights(k, pts, truncation=truncation, route=route, generator=generator, seed=seed, gram=G)
    rep = worst_case_error(k, rule, truncation=truncation, route=route, gram=G)
    log.info("n=%d wce=%.6e jitter=%.1e", n, rep.wce, rep.jitter_used)
    return rep


def rate_study(k: IsotropicKernel, d: int, n_grid: Sequence[int], generator: Generator | str = Generator.FIBONACCI,
               *, seed: int | None = 0, truncation: int = 0, route: str = "closed",
               workers: int | None = None) -> RateStudy:
    """Optimal-weight wce for each n and the least-squares slope of log wce against log n."""
    gen = Generator(generator)
    grid = [int(n) for n in n_grid]
    if len(grid) < 2:
        raise ValueError("rate_study: need at least two grid sizes")
    kernel_mean_uniform(k, d, truncation=truncation, route=route)  # warm the cache once
    args = [(k, d, n, gen, seed, truncation, route) for n in grid]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            reports = list(ex.map(lambda a: _rate_entry(*a), args))
    else:
        reports = [_rate_entry(*a) for a in args]
    wce = [r.wce for r in reports]
    if min(wce) <= 0:
        raise NumericalError("rate_study: zero worst-case error, slope undefined")
    slope, intercept = np.polyfit(np.log(grid), np.log(wce), 1)
    return RateStudy(tuple(grid), tuple(wce), float(slope), float(intercept), k.to_dict(), int(d), gen.value,
                     seed, tuple(reports))


# -- rule I/O ----------------------------------------------------------------------


def write_rule_csv(rule: CubatureRule, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(rule.dim + 1)] + ["weight"])
        for row, wt in zip(rule.points, rule.weights):
            w.writerow([repr(float(v)) for v in row] + [repr(float(wt))])


def read_rule_csv(path) -> CubatureRule:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0][-1] != "weight":
        raise ValueError(f"{path}: expected header x0..xd,weight and at least one row")
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    return CubatureRule(data[:, :-1], data[:, -1], Generator.USER, WeightMode.EQUAL)
