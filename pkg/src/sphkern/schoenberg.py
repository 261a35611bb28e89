"""d-Schoenberg coefficient engine.

Three independent routes produce b_{m,d}:

* closed forms (Matérn two-term 1F2, F-family 4F3 at unity, Wendland 3F2),
* projection of a Hilbert-sphere sequence b_m onto S^d,
* Gauss–Legendre quadrature of ψ against normalized Gegenbauer ratios.

Every sequence carries a tail bound: coefficients beyond the truncation are
computed out to an extension degree by the same route and the remainder is
modelled as c m^{-p}(1 + β1/m + β2/m² + β3/m³), summed with Hurwitz zeta.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy import special

from . import specfun
from .errors import (
    DimensionMismatchError,
    DivergenceError,
    NonConvergenceError,
    NumericalError,
    QuadratureError,
)
from .kernels import Family, IsotropicKernel, eval_kernel

log = logging.getLogger(__name__)

__all__ = [
    "Provenance",
    "SchoenbergSequence",
    "FourierSequence",
    "harmonic_dim",
    "log_harmonic_dim",
    "fourier_from_schoenberg",
    "schoenberg_from_fourier",
    "project_to_sphere",
    "quadrature_coeffs",
    "matern_coeffs",
    "ffamily_hilbert_coeffs",
    "ffamily_coeffs",
    "wendland_coeffs",
    "monomial_coeffs",
    "custom_coeffs",
    "schoenberg_coeffs",
    "reconstruct_kernel",
    "decay_law",
    "auto_truncation",
    "sequence_to_dict",
    "sequence_from_dict",
    "write_sequence_csv",
    "read_sequence_csv",
    "write_sequence_json",
    "read_sequence_json",
]

HILBERT = math.inf
AUTO_TAIL_TOL = 1e-8
AUTO_CAP = 2048
FALLBACK = "Quadrature (fallback)"
MATERN_GUARD = 1e-9
_EPS = float(np.finfo(float).eps)


class Provenance(str, Enum):
    CLOSED_FORM = "ClosedForm"
    PROJECTION = "Projection"
    QUADRATURE = "Quadrature"


@dataclass(frozen=True)
class SchoenbergSequence:
    """Truncated sequence b_0..b_M with an estimate of the mass beyond M.

    ``dim`` is a positive integer, or ``math.inf`` for the Hilbert sphere.
    ``sources`` records the route of each coefficient (fallbacks differ from
    the overall provenance).  ``decay_exponent`` is the power p of the
    known or fitted law b_m ~ c m^{-p}, when available.
    """

    dim: float
    coeffs: np.ndarray
    tail_bound: float
    provenance: Provenance
    sources: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()
    clamped: int = 0
    decay_exponent: float | None = None

    def __post_init__(self):
        dim = self.dim
        if dim != HILBERT:
            if int(dim) != dim or dim < 1:
                raise ValueError(f"SchoenbergSequence: dim must be a positive integer or inf, got {dim!r}")
            dim = int(dim)
        object.__setattr__(self, "dim", dim)
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("SchoenbergSequence: coefficients must be a non-empty vector")
        if np.any(~np.isfinite(c)) or np.any(c < -1e-10):
            raise NumericalError("SchoenbergSequence: coefficients must be finite and >= -1e-10")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        if not self.tail_bound >= 0:
            raise ValueError("SchoenbergSequence: tail_bound must be non-negative")
        object.__setattr__(self, "tail_bound", float(self.tail_bound))
        src = tuple(self.sources) or (self.provenance.value,) * c.size
        if len(src) != c.size:
            raise ValueError("SchoenbergSequence: one source label per coefficient")
        object.__setattr__(self, "sources", src)
        object.__setattr__(self, "notes", tuple(self.notes))

    @property
    def truncation(self) -> int:
        return self.coeffs.size - 1

    @property
    def strictly_positive(self) -> bool:
        """All computed coefficients positive (strict positive-definiteness marker)."""
        return bool(np.all(self.coeffs > 0))

    @property
    def mass(self) -> float:
        return math.fsum(self.coeffs) + self.tail_bound

    def __len__(self) -> int:
        return self.coeffs.size


@dataclass(frozen=True)
class FourierSequence:
    """Spherical Fourier coefficients ψ̂_0..ψ̂_M on S^d."""

    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def truncation(self) -> int:
        return self.coeffs.size - 1


# --------------------------------------------------------------------------
# harmonic dimension and the Fourier link
# --------------------------------------------------------------------------


def harmonic_dim(m: int, d: int) -> int:
    """N_{m,d}, exact."""
    if int(m) != m or m < 0 or int(d) != d or d < 1:
        raise ValueError(f"harmonic_dim: need m >= 0 and d >= 1, got ({m!r}, {d!r})")
    m, d = int(m), int(d)
    if m == 0:
        return 1
    num = (2 * m + d - 1) * math.factorial(m + d - 2)
    den = math.factorial(d - 1) * math.factorial(m)
    q, r = divmod(num, den)
    assert r == 0
    return q


def log_harmonic_dim(m, d: int):
    """log N_{m,d} in floating point (vectorized over m)."""
    m = np.asarray(m, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (np.log(2 * m + d - 1) + special.gammaln(m + d - 1)
               - math.lgamma(d) - special.gammaln(m + 1))
    out = np.where(m == 0, 0.0, out)
    if d == 1:
        out = np.where(m == 0, 0.0, math.log(2.0))
    return float(out) if out.ndim == 0 else out


def _log_sphere_area(d: int) -> float:
    """log(2π^{(d+1)/2} / Γ((d+1)/2))."""
    return math.log(2.0) + (d + 1) / 2 * math.log(math.pi) - math.lgamma((d + 1) / 2)


def fourier_from_schoenberg(s: SchoenbergSequence) -> FourierSequence:
    """ψ̂_m = b_{m,d} · 2π^{(d+1)/2} / (Γ((d+1)/2) N_{m,d})."""
    if s.dim == HILBERT:
        raise ValueError("fourier_from_schoenberg: needs a finite dimension")
    m = np.arange(s.coeffs.size)
    factor = np.exp(_log_sphere_area(s.dim) - log_harmonic_dim(m, s.dim))
    return FourierSequence(s.dim, s.coeffs * factor)


def schoenberg_from_fourier(f: FourierSequence, *, tail_bound: float = 0.0,
                            provenance: Provenance = Provenance.CLOSED_FORM) -> SchoenbergSequence:
    """Inverse of :func:`fourier_from_schoenberg`."""
    m = np.arange(f.coeffs.size)
    factor = np.exp(log_harmonic_dim(m, f.dim) - _log_sphere_area(f.dim))
    return SchoenbergSequence(f.dim, f.coeffs * factor, tail_bound, provenance)


# --------------------------------------------------------------------------
# tail modelling
# --------------------------------------------------------------------------


def _extension(M: int) -> int:
    return M + max(64, M // 8)


def _power_remainder(values: np.ndarray, ms: np.ndarray, p: float | None, start: int) -> tuple[float, float]:
    """Estimate Σ_{m > start} b_m from samples of a power-law tail.

    Returns (estimate, uncertainty).  ``p=None`` fits the exponent.
    """
    values = np.asarray(values, dtype=float)
    ms = np.asarray(ms, dtype=float)
    if values.size < 4 or not np.any(values):
        return 0.0, 0.0
    if p is None:
        pos = values > 0
        if np.count_nonzero(pos) < 4:
            return 0.0, float(np.max(np.abs(values))) * values.size
        p = -np.polyfit(np.log(ms[pos]), np.log(values[pos]), 1)[0]
    if p <= 1.0:
        return math.inf, math.inf
    scaled = values * ms**p
    # columns in (m0/m)^i keep the design well conditioned at large m
    m0 = float(ms[0])
    X = np.column_stack([(m0 / ms) ** i for i in range(4)])
    z = [m0**i * float(special.zeta(p + i, start + 1)) for i in range(4)]
    c4 = np.linalg.lstsq(X, scaled, rcond=None)[0]
    c3 = np.linalg.lstsq(X[:, :3], scaled, rcond=None)[0]
    est4 = float(np.dot(c4, z))
    est3 = float(np.dot(c3, z[:3]))
    resid = np.max(np.abs(X @ c4 - scaled)) / max(np.max(np.abs(scaled)), 1e-300)
    unc = abs(est4 - est3) + abs(est4) * resid
    return max(est4, 0.0), unc


def _tail_from_extension(b_ext: np.ndarray, M: int, p: float | None) -> float:
    """Tail mass beyond M given coefficients b_0..b_{M2}."""
    M2 = b_ext.size - 1
    mid = math.fsum(b_ext[M + 1:])
    lo = max(M2 // 2, 1)
    ms = np.arange(lo, M2 + 1)
    est, unc = _power_remainder(b_ext[lo:], ms, p, M2)
    return max(mid + est + unc, 0.0)


# --------------------------------------------------------------------------
# family decay laws and truncation
# --------------------------------------------------------------------------


def decay_law(k: IsotropicKernel, d: int) -> tuple[float | None, float]:
    """(c, p) with b_{m,d} ~ c m^{-p}; c is None where only the order is known."""
    if k.family is Family.MATERN:
        nu, a = k["nu"], k["alpha"]
        c = math.exp(math.log(2) + math.lgamma(nu + d / 2) - 2 * nu * math.log(a)
                     - math.lgamma(nu) - math.lgamma(d / 2))
        return c, 1 + 2 * nu
    if k.family is Family.FFAMILY:
        tau, a, nu = k["tau"], k["alpha"], k["nu"]
        c = math.exp(math.lgamma(nu + a) + math.lgamma(nu + tau) - math.lgamma(a) - math.lgamma(nu)
                     - math.lgamma(tau) + (nu + 1) * math.log(2) + math.lgamma(d / 2 + nu) - math.lgamma(d / 2))
        return c, 1 + 2 * nu
    if k.family is Family.WENDLAND:
        return None, 2 + 2 * k["alpha"]
    return None, math.inf


def auto_truncation(k: IsotropicKernel, d: int, tol: float = AUTO_TAIL_TOL, cap: int = AUTO_CAP) -> int:
    """Smallest M whose asymptotic tail estimate is below ``tol`` (capped)."""
    if k.family is Family.CUSTOM:
        return len(k.cos_powers) - 1
    c, p = decay_law(k, d)
    if c is None:
        probe = 64
        c = float(_wendland_b(probe, k["nu"], k["alpha"], k["eps"], d)) * probe**p
    M = 1
    while c * float(special.zeta(p, M + 1)) > tol:
        M *= 2
        if M >= cap:
            log.warning("auto truncation capped at %d for %s", cap, k.describe())
            return cap
    lo, hi = M // 2, M
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if c * float(special.zeta(p, mid + 1)) > tol:
            lo = mid
        else:
            hi = mid
    return hi


def _resolve_M(M, k: IsotropicKernel | None, d: int) -> int:
    if isinstance(M, str):
        if M != "auto":
            raise ValueError(f"truncation must be an integer or 'auto', got {M!r}")
        if k is None:
            raise ValueError("'auto' truncation needs a kernel family")
        return auto_truncation(k, d)
    if int(M) != M or M < 0:
        raise ValueError(f"truncation must be a non-negative integer, got {M!r}")
    return int(M)


def _map(fn, items, workers: int | None):
    items = list(items)
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
    return [fn(i) for i in items]


# --------------------------------------------------------------------------
# quadrature oracle
# --------------------------------------------------------------------------


def _gl_panels(edges: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(q)
    a, b = edges[:-1, None], edges[1:, None]
    half = (b - a) / 2
    nodes = (a + b) / 2 + half * x
    weights = half * w
    return nodes.ravel(), weights.ravel()


def _panel_edges(n_panels: int, breaks: Sequence[float], grading: int = 40) -> np.ndarray:
    """Uniform panels between breakpoints, geometrically graded towards each breakpoint."""
    breaks = list(breaks)
    total = breaks[-1] - breaks[0]
    edges = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = max(2, int(round(n_panels * (b - a) / total)))
        seg = np.linspace(a, b, n + 1)
        h = seg[1] - seg[0]
        left = a + h * 2.0 ** -np.arange(1, grading)
        right = b - h * 2.0 ** -np.arange(1, grading)
        edges.append(np.concatenate([seg, left, right]))
    e = np.unique(np.concatenate(edges))
    return e


def _quadrature_raw(psi: Callable, d: int, M: int, n_panels: int, breaks) -> tuple[np.ndarray, int]:
    edges = _panel_edges(n_panels, breaks)
    theta, w = _gl_panels(edges, 8)
    f = np.asarray(psi(theta), dtype=float) * w
    if d > 1:
        f = f * np.sin(theta) ** (d - 1)
    lam = (d - 1) / 2
    raw = np.empty(M + 1)
    for m, r in enumerate(specfun.iter_gegenbauer_ratios(M, lam, np.cos(theta))):
        raw[m] = r @ f
    return raw, theta.size


def _quadrature_norms(d: int, M: int) -> np.ndarray:
    m = np.arange(M + 1, dtype=float)
    if d == 1:
        out = np.full(M + 1, 2 / math.pi)
        out[0] = 1 / math.pi
        return out
    lam = (d - 1) / 2
    log_n = (np.log(2 * m + d - 1) - (3 - d) * math.log(2) - math.log(math.pi)
             + 2 * math.lgamma(lam) - 2 * math.lgamma(d - 1)
             + special.gammaln(m + d - 1) - special.gammaln(m + 1))
    return np.exp(log_n)


def _quadrature_values(psi: Callable, d: int, M: int, breaks, quad_tol: float, max_nodes: int):
    norms = _quadrature_norms(d, M)
    n_panels = 16 * (M + 4)
    prev = None
    while True:
        raw, n_nodes = _quadrature_raw(psi, d, M, n_panels, breaks)
        if n_nodes > max_nodes:
            raise QuadratureError(
                f"quadrature_coeffs: no agreement to {quad_tol:g} within {max_nodes} nodes (d={d}, M={M})"
            )
        b = norms * raw
        if prev is not None and np.max(np.abs(b - prev)) < quad_tol:
            return b
        prev = b
        n_panels *= 2


def _clamp(b: np.ndarray) -> tuple[np.ndarray, int]:
    neg = b < 0
    if np.any(b < -1e-10):
        worst = int(np.argmin(b))
        raise NumericalError(f"negative coefficient b_{worst} = {b[worst]:.3e}; kernel is not positive definite")
    n = int(np.count_nonzero(neg))
    if n:
        log.info("clamped %d negative coefficient(s) of magnitude <= 1e-10 to zero", n)
    return np.where(neg, 0.0, b), n


def _breakpoints(k: IsotropicKernel | None) -> list[float]:
    pts = [0.0, math.pi]
    if k is not None and k.family is Family.WENDLAND and 1 / (2 * k["eps"]) < 1:
        pts.insert(1, 2 * math.asin(1 / (2 * k["eps"])))
    return pts


def quadrature_coeffs(
    k: IsotropicKernel | Callable,
    d: int,
    M: int | str = "auto",
    *,
    quad_tol: float = 1e-11,
    max_nodes: int = 2**20,
    decay_exponent: float | None = None,
) -> SchoenbergSequence:
    """b_{m,d} for m = 0..M by panel Gauss–Legendre quadrature in θ.

    ``k`` is a kernel or a callable θ -> ψ(θ).  The panel count starts at
    16(M+4) and doubles until successive results agree to ``quad_tol``.
    """
    d = _check_dim(d)
    kern = k if isinstance(k, IsotropicKernel) else None
    if kern is not None:
        kern.check_dimension(d)
        psi = lambda t: eval_kernel(kern, t)  # noqa: E731
        p = decay_exponent if decay_exponent is not None else decay_law(kern, d)[1]
    else:
        psi = k
        p = decay_exponent
    M = _resolve_M(M, kern, d)
    M2 = _extension(M)
    b_ext = _quadrature_values(psi, d, M2, _breakpoints(kern), quad_tol, max_nodes)
    b_ext, n_clamped = _clamp(b_ext)
    if p is not None and math.isinf(p):
        p = None
    tail = _tail_from_extension(b_ext, M, p)
    return SchoenbergSequence(d, b_ext[: M + 1], tail, Provenance.QUADRATURE,
                              clamped=n_clamped, decay_exponent=p)


def _check_dim(d) -> int:
    if int(d) != d or d < 1:
        raise ValueError(f"sphere dimension must be a positive integer, got {d!r}")
    return int(d)


# --------------------------------------------------------------------------
# Matérn
# --------------------------------------------------------------------------


def _log_kappa(m: int, d: int) -> float:
    """log κ_{m,d} = log N_{m,d} + log Γ((d+1)/2) - log(2π^{(d+1)/2})."""
    return float(log_harmonic_dim(m, d)) - _log_sphere_area(d)


def _matern_b(m: int, nu: float, alpha: float, d: int) -> tuple[float, float]:
    """Two-term closed form; returns (b_{m,d}, estimated relative error)."""
    z = alpha**-2
    lk = _log_kappa(m, d)
    lg_a, sg_a = specfun.log_gamma_signed(m - nu)
    parts1 = [
        d / 2 * math.log(2 * math.pi), d / 2 * math.log(2), math.lgamma(nu + d / 2), -math.lgamma(nu),
        -2 * nu * math.log(alpha), lg_a, lk, -math.lgamma(m + nu + d),
    ]
    F1 = specfun.pfq(specfun.PFQParams([nu + d / 2], [nu + 1 - m, m + nu + d], z), 1e-16)
    lg_b, sg_b = specfun.log_gamma_signed(nu - m)
    parts2 = [
        math.log(2), (d + 1) / 2 * math.log(math.pi), -math.lgamma(nu), lg_b, lk,
        -math.lgamma(m + (d + 1) / 2), -2 * m * math.log(2 * alpha),
    ]
    F2 = specfun.pfq(specfun.PFQParams([m + d / 2], [m - nu + 1, 2 * m + d], z), 1e-16)
    L1, s1 = math.fsum(parts1) + F1.log_abs, sg_a * F1.sign
    L2, s2 = math.fsum(parts2) + F2.log_abs, sg_b * F2.sign
    top = max(L1, L2)
    a1, a2 = math.exp(L1 - top), math.exp(L2 - top)
    total = s1 * a1 + s2 * a2
    if total == 0:
        return 0.0, math.inf
    r1 = 16 * _EPS * (F1.condition + sum(abs(v) for v in parts1) + abs(F1.log_abs)) + F1.rel_tail
    r2 = 16 * _EPS * (F2.condition + sum(abs(v) for v in parts2) + abs(F2.log_abs)) + F2.rel_tail
    rel = (a1 * r1 + a2 * r2) / abs(total)
    value = math.copysign(math.exp(top + math.log(abs(total))), total)
    return value, rel


def _matern_job(args):
    m, nu, alpha, d = args
    try:
        return _matern_b(m, nu, alpha, d)
    except (NumericalError, OverflowError):
        return math.nan, math.inf


def matern_coeffs(nu: float, alpha: float, d: int, M: int | str = "auto", *,
                  workers: int | None = None) -> SchoenbergSequence:
    """Matérn d-Schoenberg coefficients from the two-term 1F2 closed form.

    Degrees whose two terms cancel beyond the accuracy guard, and every
    degree for integer ν (Gamma poles), are taken from the quadrature oracle
    and labelled as fallbacks.
    """
    d = _check_dim(d)
    k = IsotropicKernel.matern(nu, alpha)
    M = _resolve_M(M, k, d)
    M2 = _extension(M)
    p = 1 + 2 * nu
    notes = []
    if float(nu).is_integer():
        seq = quadrature_coeffs(k, d, M)
        note = f"integer nu={nu}: closed form has Gamma poles; all degrees from quadrature"
        log.info(note)
        return SchoenbergSequence(d, seq.coeffs, seq.tail_bound, Provenance.QUADRATURE,
                                  (FALLBACK,) * (M + 1), (note,), seq.clamped, p)
    res = _map(_matern_job, [(m, nu, alpha, d) for m in range(M2 + 1)], workers)
    b = np.array([r[0] for r in res])
    rel = np.array([r[1] for r in res])
    bad = ~(rel <= MATERN_GUARD) | ~np.isfinite(b)
    sources = [Provenance.CLOSED_FORM.value] * (M2 + 1)
    n_clamped = 0
    if np.any(bad):
        top = int(np.max(np.flatnonzero(bad)))
        q = _quadrature_values(lambda t: eval_kernel(k, t), d, top, [0.0, math.pi], 1e-11, 2**20)
        q, n_clamped = _clamp(q)
        for m in np.flatnonzero(bad):
            b[m] = q[m]
            sources[m] = FALLBACK
        note = f"{int(np.count_nonzero(bad[: M + 1]))} degree(s) <= M from quadrature: closed-form cancellation"
        notes.append(note)
        log.info(note)
    b, n2 = _clamp(b)
    tail = _tail_from_extension(b, M, p)
    return SchoenbergSequence(d, b[: M + 1], tail, Provenance.CLOSED_FORM, tuple(sources[: M + 1]),
                              tuple(notes), n_clamped + n2, p)


# --------------------------------------------------------------------------
# F-family
# --------------------------------------------------------------------------


def _ffamily_log_hilbert(m, tau: float, alpha: float, nu: float):
    m = np.asarray(m, dtype=float)
    lb0 = specfun.log_beta(alpha, nu + tau) - specfun.log_beta(alpha, nu)
    const = lb0 - math.lgamma(tau) - math.lgamma(alpha) + math.lgamma(alpha + nu + tau)
    return (const + specfun.log_gamma_ratio(m, tau, 1.0)
            + specfun.log_gamma_ratio(m, alpha, alpha + nu + tau))


def ffamily_hilbert_coeffs(tau: float, alpha: float, nu: float, M: int) -> SchoenbergSequence:
    """Hilbert-sphere sequence b_m = B(α,ν+τ)/B(α,ν) (τ)_m(α)_m / ((α+ν+τ)_m m!), with b_m ~ m^{-1-ν}."""
    IsotropicKernel.ffamily(tau, alpha, nu)
    M = _resolve_M(M, None, 1)
    b = np.exp(_ffamily_log_hilbert(np.arange(_extension(M) + 1), tau, alpha, nu))
    tail = _tail_from_extension(b, M, 1 + nu)
    return SchoenbergSequence(HILBERT, b[: M + 1], tail, Provenance.CLOSED_FORM, decay_exponent=1 + nu)


def _ffamily_b(m: int, tau: float, alpha: float, nu: float, d: int) -> float:
    lbm = float(_ffamily_log_hilbert(m, tau, alpha, nu))
    lg = math.log(0.5) if (m == 0 and d == 1) else math.lgamma(m + d - 1) - math.lgamma(m + (d - 1) / 2)
    lc = lbm - (m + d - 2) * math.log(2) + lg + 0.5 * math.log(math.pi) - math.lgamma(d / 2)
    F = specfun.pfq(
        specfun.PFQParams(
            [(alpha + m) / 2, (alpha + m + 1) / 2, (tau + m) / 2, (tau + m + 1) / 2],
            [(alpha + nu + tau + m) / 2, (alpha + nu + tau + m + 1) / 2, m + (d + 1) / 2],
            1.0,
        ),
        1e-12,
    )
    return math.exp(lc + F.log_abs)


def _ffamily_job(args):
    return _ffamily_b(*args)


def ffamily_coeffs(tau: float, alpha: float, nu: float, d: int, M: int | str = "auto", *,
                   workers: int | None = None) -> SchoenbergSequence:
    """F-family d-Schoenberg coefficients from the 4F3-at-unity closed form.

    d = 1 uses the d -> 1 limit of the Gamma ratio in the prefactor.
    """
    d = _check_dim(d)
    k = IsotropicKernel.ffamily(tau, alpha, nu)
    M = _resolve_M(M, k, d)
    M2 = _extension(M)
    b = np.array(_map(_ffamily_job, [(m, tau, alpha, nu, d) for m in range(M2 + 1)], workers))
    tail = _tail_from_extension(b, M, 1 + 2 * nu)
    return SchoenbergSequence(d, b[: M + 1], tail, Provenance.CLOSED_FORM, decay_exponent=1 + 2 * nu)


# --------------------------------------------------------------------------
# Generalised Wendland
# --------------------------------------------------------------------------


def _wendland_b(m: int, nu: float, alpha: float, eps: float, d: int) -> float:
    """Closed form with the 3F2 at 1/(4ε²) summed exactly.  Raises DivergenceError if z >= 1."""
    z = 1.0 / (4.0 * eps * eps)
    params = specfun.PFQParams(
        [-(m + (d - 2) / 2), m + d / 2, (d + 1) / 2 + alpha],
        [(d + 1) / 2 + alpha + nu / 2, (d + 1) / 2 + alpha + (nu + 1) / 2],
        z,
    )
    if params.terminating_degree is None and z >= 1:
        raise DivergenceError(f"Wendland 3F2 at z={z!r} outside the convergence domain")
    F = specfun.pfq(params, 1e-15, exact=True)
    if F.sign == 0:
        return 0.0
    lpre = (math.log(2) + math.lgamma(2 * alpha + nu + 1) - math.lgamma(2 * alpha + nu + 1 + d)
            - specfun.log_beta(alpha + 0.5, d / 2) - d * math.log(eps))
    lg = math.log(0.5) if (m == 0 and d == 1) else (
        math.log(m + (d - 1) / 2) + math.lgamma(m + d - 1) - math.lgamma(m + 1))
    return F.sign * math.exp(lpre + lg + F.log_abs)


def _wendland_job(args):
    return _wendland_b(*args)


def wendland_coeffs(nu: float, alpha: float, eps: float, d: int, M: int | str = "auto", *,
                    workers: int | None = None) -> SchoenbergSequence:
    """Generalised Wendland d-Schoenberg coefficients from the 3F2 closed form.

    The 3F2 terminates for even d; for odd d it converges when ε > 1/2.
    Outside that domain the quadrature oracle is used (recorded in notes).
    """
    d = _check_dim(d)
    k = IsotropicKernel.wendland(nu, alpha, eps)
    k.check_dimension(d)
    M = _resolve_M(M, k, d)
    M2 = _extension(M)
    p = 2 + 2 * alpha
    if d % 2 == 1 and eps <= 0.5:
        seq = quadrature_coeffs(k, d, M)
        note = f"odd d with eps={eps} <= 1/2: 3F2 argument >= 1, quadrature used"
        log.info(note)
        return SchoenbergSequence(d, seq.coeffs, seq.tail_bound, Provenance.QUADRATURE,
                                  (FALLBACK,) * (M + 1), (note,), seq.clamped, p)
    b = np.array(_map(_wendland_job, [(m, nu, alpha, eps, d) for m in range(M2 + 1)], workers))
    b, n_clamped = _clamp(b)
    tail = _tail_from_extension(b, M, p)
    return SchoenbergSequence(d, b[: M + 1], tail, Provenance.CLOSED_FORM, clamped=n_clamped,
                              decay_exponent=p)


# --------------------------------------------------------------------------
# monomials, custom kernels and projection
# --------------------------------------------------------------------------


def monomial_coeffs(k: int, d: int) -> np.ndarray:
    """d-Schoenberg coefficients of cos^k θ (length k+1), for d >= 2."""
    if d < 2:
        raise ValueError("monomial_coeffs: requires d >= 2")
    out = np.zeros(k + 1)
    lam = (d - 1) / 2
    lead = math.lgamma(k + 1) + math.lgamma(lam) - k * math.log(2) - math.lgamma(d - 1)
    for i in range(k // 2 + 1):
        n = k - 2 * i
        out[n] = math.exp(lead + math.log(n + lam) + math.lgamma(n + d - 1) - math.lgamma(i + 1)
                          - math.lgamma(n + 1) - math.lgamma(k - i + (d + 1) / 2))
    return out


def _cosine_coeffs(k: int) -> np.ndarray:
    """d = 1 coefficients of cos^k θ: 2^{-k} C(k, j) folded onto cos((k-2j)θ)."""
    out = np.zeros(k + 1)
    for j in range(k + 1):
        n = abs(k - 2 * j)
        out[n] += math.comb(k, j) / 2.0**k
    return out


def custom_coeffs(k: IsotropicKernel, d: int) -> SchoenbergSequence:
    """Exact d-sequence of a finite cos-power mixture."""
    if k.family is not Family.CUSTOM:
        raise ValueError("custom_coeffs: needs a Custom kernel")
    d = _check_dim(d)
    deg = len(k.cos_powers) - 1
    out = np.zeros(deg + 1)
    for j, c in enumerate(k.cos_powers):
        if c:
            out[: j + 1] += c * (_cosine_coeffs(j) if d == 1 else monomial_coeffs(j, d))
    return SchoenbergSequence(d, out, 0.0, Provenance.CLOSED_FORM)


def _log_projection_weights(m: int, d: int, j: np.ndarray) -> np.ndarray:
    """log of the weight of b_{m+2j} in b_{m,d}.

    (m+2j)!/4^j is rewritten by the duplication formula so that only
    Gamma ratios at shifted j appear, each evaluated without cancellation.
    """
    if m == 0 and d == 1:
        lg = math.log(0.5)
    else:
        lg = math.lgamma(m + d - 1) - math.lgamma(m + (d - 1) / 2)
    c = m + (d + 1) / 2
    const = (0.5 * math.log(math.pi) - (m + d - 2) * math.log(2) - math.lgamma(d / 2) + lg - math.lgamma(m + 1)
             + math.lgamma(c) + m * math.log(2) - 0.5 * math.log(math.pi))
    return (const + specfun.log_gamma_ratio(j, (m + 1) / 2, 1.0)
            + specfun.log_gamma_ratio(j, m / 2 + 1, c))


def project_to_sphere(b: SchoenbergSequence, d: int, M: int, *, tail_tol: float = 1e-12,
                      decay_exponent: float | None = None) -> SchoenbergSequence:
    """Map a Hilbert-sphere sequence to the d-sphere.

    b_{m,d} = Σ_j w_{m,j} b_{m+2j}; for d = 1 the weights reduce to the
    cosine-power expansion.  Each inner series beyond the available input is
    completed with a power-law model whose uncertainty is added to the tail
    bound.  ``decay_exponent`` p (b_k ~ k^{-p}) defaults to the input's.
    """
    if b.dim != HILBERT:
        raise DimensionMismatchError("project_to_sphere: input must be a Hilbert-sphere sequence")
    d = _check_dim(d)
    M = _resolve_M(M, None, d)
    K = b.truncation
    M2 = min(_extension(M), K)
    p = decay_exponent if decay_exponent is not None else b.decay_exponent
    coeffs = b.coeffs
    finite = b.tail_bound == 0.0 and (K < 8 or coeffs[-1] == 0.0)
    out = np.zeros(M2 + 1)
    inner_unc = 0.0
    for m in range(M2 + 1):
        j = np.arange((K - m) // 2 + 1, dtype=float)
        vals = coeffs[m::2][: j.size]
        w = np.exp(_log_projection_weights(m, d, j))
        terms = w * vals
        s = math.fsum(terms)
        if not finite and terms.size >= 16:
            jj = j[j.size // 2:] + 1.0
            est, unc = _power_remainder(terms[j.size // 2:], jj, None if p is None else p + d / 2,
                                        int(jj[-1]))
            if not math.isfinite(est):
                raise NonConvergenceError(f"project_to_sphere: inner series for m={m} not summable")
            s += est
            inner_unc += unc
            if s > 0 and unc > tail_tol * max(s, 1e-300) and m <= M:
                log.debug("projection m=%d: inner tail uncertainty %.2e", m, unc / s)
        out[m] = s
    out, n_clamped = _clamp(out)
    if M2 < M:
        raise ValueError(f"project_to_sphere: input truncation {K} is below M={M}")
    p_d = None if p is None else 2 * p - 1
    tail = (0.0 if finite and M2 >= K else _tail_from_extension(out, M, p_d)) + inner_unc
    return SchoenbergSequence(d, out[: M + 1], tail, Provenance.PROJECTION, clamped=n_clamped,
                              decay_exponent=p_d)


# --------------------------------------------------------------------------
# dispatch and reconstruction
# --------------------------------------------------------------------------


def _projection_input_size(M: int) -> int:
    M2 = _extension(M)
    return int(min(max(2**16, 8 * M2 * M2), 2**22))


def schoenberg_coeffs(k: IsotropicKernel, d: int, M: int | str = "auto", route: str = "closed",
                      *, quad_tol: float = 1e-11, workers: int | None = None) -> SchoenbergSequence:
    """Dispatch to a coefficient route: 'closed', 'projection' or 'quadrature'."""
    d = _check_dim(d)
    k.check_dimension(d)
    M = _resolve_M(M, k, d)
    fam = k.family
    if route == "quadrature":
        return quadrature_coeffs(k, d, M, quad_tol=quad_tol)
    if route == "closed":
        if fam is Family.MATERN:
            return matern_coeffs(k["nu"], k["alpha"], d, M, workers=workers)
        if fam is Family.FFAMILY:
            return ffamily_coeffs(k["tau"], k["alpha"], k["nu"], d, M, workers=workers)
        if fam is Family.WENDLAND:
            return wendland_coeffs(k["nu"], k["alpha"], k["eps"], d, M, workers=workers)
        seq = custom_coeffs(k, d)
        return _pad(seq, M)
    if route == "projection":
        if fam is Family.FFAMILY:
            hb = ffamily_hilbert_coeffs(k["tau"], k["alpha"], k["nu"], _projection_input_size(M))
            return project_to_sphere(hb, d, M)
        if fam is Family.CUSTOM:
            hb = SchoenbergSequence(HILBERT, np.asarray(k.cos_powers), 0.0, Provenance.CLOSED_FORM)
            return _pad(project_to_sphere(hb, d, min(M, hb.truncation)), M)
        raise ValueError(f"projection route needs a Hilbert-sphere sequence; none is known for {fam.value}")
    raise ValueError(f"unknown route {route!r}")


def _pad(s: SchoenbergSequence, M: int) -> SchoenbergSequence:
    c = s.coeffs
    if c.size - 1 == M:
        return s
    if c.size - 1 > M:
        extra = math.fsum(c[M + 1:])
        return SchoenbergSequence(s.dim, c[: M + 1], s.tail_bound + extra, s.provenance,
                                  s.sources[: M + 1], s.notes, s.clamped, s.decay_exponent)
    pad = np.zeros(M + 1)
    pad[: c.size] = c
    src = s.sources + (s.provenance.value,) * (M + 1 - c.size)
    return SchoenbergSequence(s.dim, pad, s.tail_bound, s.provenance, src, s.notes, s.clamped,
                              s.decay_exponent)


def reconstruct_kernel(s: SchoenbergSequence, theta):
    """Σ_m b_m R_m(cos θ) on S^d, or Σ_m b_m cos^m θ on the Hilbert sphere."""
    t = np.asarray(theta, dtype=float)
    c = np.cos(t)
    if s.dim == HILBERT:
        out = np.zeros_like(c)
        for bm in s.coeffs[::-1]:
            out = out * c + bm
    else:
        out = np.zeros_like(c)
        lam = (s.dim - 1) / 2
        for bm, r in zip(s.coeffs, specfun.iter_gegenbauer_ratios(s.truncation, lam, c)):
            out = out + bm * r
        out = np.where(t == 0.0, math.fsum(s.coeffs), out)
    return float(out) if np.ndim(theta) == 0 else out


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

CSV_COLUMNS = ("m", "b_md", "psi_hat_m", "provenance", "tail_bound", "dim")


def _fmt(x: float) -> str:
    return repr(float(x))


def _dim_str(dim) -> str:
    return "inf" if dim == HILBERT else str(int(dim))


def _parse_dim(text) -> float:
    return HILBERT if str(text) in ("inf", "Infinity") else int(text)


def sequence_to_dict(s: SchoenbergSequence) -> dict:
    out = {
        "dim": _dim_str(s.dim),
        "provenance": s.provenance.value,
        "truncation": s.truncation,
        "tail_bound": float(s.tail_bound),
        "strictly_positive": s.strictly_positive,
        "coeffs": [float(v) for v in s.coeffs],
        "sources": list(s.sources),
        "notes": list(s.notes),
        "clamped": s.clamped,
        "decay_exponent": None if s.decay_exponent is None else float(s.decay_exponent),
    }
    if s.dim != HILBERT:
        out["psi_hat"] = [float(v) for v in fourier_from_schoenberg(s).coeffs]
    return out


def sequence_from_dict(data: dict) -> SchoenbergSequence:
    return SchoenbergSequence(
        _parse_dim(data["dim"]),
        np.asarray(data["coeffs"], dtype=float),
        float(data["tail_bound"]),
        Provenance(data["provenance"]),
        tuple(data.get("sources", ())),
        tuple(data.get("notes", ())),
        int(data.get("clamped", 0)),
        data.get("decay_exponent"),
    )


def write_sequence_json(s: SchoenbergSequence, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sequence_to_dict(s), fh, indent=2)
        fh.write("\n")


def read_sequence_json(path) -> SchoenbergSequence:
    with open(path, encoding="utf-8") as fh:
        return sequence_from_dict(json.load(fh))


def sequence_to_csv(s: SchoenbergSequence) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    psi = fourier_from_schoenberg(s).coeffs if s.dim != HILBERT else [None] * len(s)
    for m, (bm, ph, src) in enumerate(zip(s.coeffs, psi, s.sources)):
        w.writerow([m, _fmt(bm), "" if ph is None else _fmt(ph), src, _fmt(s.tail_bound), _dim_str(s.dim)])
    return buf.getvalue()


def write_sequence_csv(s: SchoenbergSequence, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(sequence_to_csv(s))


def read_sequence_csv(path) -> SchoenbergSequence:
    """Read a coefficient table; rows must be m = 0, 1, ... in order."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: empty coefficient table")
    missing = {"m", "b_md"} - set(rows[0])
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    if [int(r["m"]) for r in rows] != list(range(len(rows))):
        raise ValueError(f"{path}: degrees must run 0..M in order")
    b = np.array([float(r["b_md"]) for r in rows])
    sources = tuple(r.get("provenance") or Provenance.QUADRATURE.value for r in rows)
    tail = float(rows[0].get("tail_bound") or 0.0)
    dim = _parse_dim(rows[0].get("dim") or "inf")
    prov = next((p for p in Provenance if p.value == sources[0]), Provenance.QUADRATURE)
    return SchoenbergSequence(dim, b, tail, prov, sources)
