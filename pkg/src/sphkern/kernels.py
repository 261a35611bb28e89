"""Geodesically isotropic kernel families on the d-sphere.

Kernels are correlation functions ψ(θ) with ψ(0) = 1.  Radial families are
restricted to the sphere through the chordal distance r = 2 sin(θ/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping

import numpy as np
from scipy import integrate, special

from . import specfun
from .errors import DimensionMismatchError, KernelParameterError

__all__ = [
    "Family",
    "IsotropicKernel",
    "SpherePoint",
    "geodesic_distance",
    "chordal_from_geodesic",
    "eval_kernel",
    "matern_radial_ft",
    "radial_fourier_transform",
    "matern_radial",
    "wendland_radial",
]


class Family(str, Enum):
    MATERN = "Matern"
    FFAMILY = "FFamily"
    WENDLAND = "GeneralisedWendland"
    CUSTOM = "Custom"


PARAM_NAMES: dict[Family, tuple[str, ...]] = {
    Family.MATERN: ("nu", "alpha"),
    Family.FFAMILY: ("tau", "alpha", "nu"),
    Family.WENDLAND: ("nu", "alpha", "eps"),
    Family.CUSTOM: ("cos_powers",),
}


@dataclass(frozen=True)
class IsotropicKernel:
    """Family tag plus parameters; variance fixed to 1.

    The custom family is a finite Hilbert-sphere mixture
    ψ(θ) = Σ_k c_k cos^k θ with c_k >= 0 and Σ c_k = 1, which is positive
    definite on every sphere.
    """

    family: Family
    params: tuple[tuple[str, float], ...]
    cos_powers: tuple[float, ...] = field(default=())

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam is Family.CUSTOM:
            c = tuple(float(v) for v in self.cos_powers)
            if not c or any(v < 0 or not math.isfinite(v) for v in c):
                raise KernelParameterError("custom kernel: cos_powers must be non-negative and non-empty")
            if abs(math.fsum(c) - 1.0) > 1e-12:
                raise KernelParameterError("custom kernel: cos_powers must sum to 1 so that psi(0) = 1")
            object.__setattr__(self, "cos_powers", c)
            object.__setattr__(self, "params", ())
            return
        names = PARAM_NAMES[fam]
        given = dict(self.params)
        if set(given) != set(names):
            raise KernelParameterError(f"{fam.value}: expected parameters {names}, got {tuple(given)}")
        vals = tuple((n, float(given[n])) for n in names)
        for n, v in vals:
            if not (v > 0 and math.isfinite(v)):
                raise KernelParameterError(f"{fam.value}: parameter {n} must be positive, got {v!r}")
        object.__setattr__(self, "params", vals)

    # constructors -------------------------------------------------------

    @classmethod
    def matern(cls, nu: float, alpha: float) -> "IsotropicKernel":
        return cls(Family.MATERN, (("nu", nu), ("alpha", alpha)))

    @classmethod
    def ffamily(cls, tau: float, alpha: float, nu: float) -> "IsotropicKernel":
        return cls(Family.FFAMILY, (("tau", tau), ("alpha", alpha), ("nu", nu)))

    @classmethod
    def wendland(cls, nu: float, alpha: float, eps: float) -> "IsotropicKernel":
        return cls(Family.WENDLAND, (("nu", nu), ("alpha", alpha), ("eps", eps)))

    @classmethod
    def custom(cls, cos_powers) -> "IsotropicKernel":
        return cls(Family.CUSTOM, (), tuple(cos_powers))

    # accessors ----------------------------------------------------------

    def __getitem__(self, name: str) -> float:
        return dict(self.params)[name]

    def check_dimension(self, d: int) -> None:
        """Enforce the Wendland positive-definiteness guard ν >= (d+2)/2 + α."""
        if self.family is Family.WENDLAND:
            nu, alpha = self["nu"], self["alpha"]
            if nu < (d + 2) / 2 + alpha:
                raise KernelParameterError(
                    f"GeneralisedWendland: nu={nu} < (d+2)/2 + alpha = {(d + 2) / 2 + alpha} for d={d}"
                )

    def describe(self) -> str:
        if self.family is Family.CUSTOM:
            return f"Custom(cos_powers={list(self.cos_powers)})"
        inner = ", ".join(f"{n}={v!r}" for n, v in self.params)
        return f"{self.family.value}({inner})"

    def to_dict(self) -> dict:
        if self.family is Family.CUSTOM:
            return {"family": "Custom", "params": {"cos_powers": list(self.cos_powers)}}
        return {"family": self.family.value, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "IsotropicKernel":
        fam = Family(data["family"])
        params = dict(data.get("params", {}))
        if fam is Family.CUSTOM:
            return cls.custom(params.get("cos_powers", ()))
        return cls(fam, tuple(params.items()))

    def __call__(self, theta):
        return eval_kernel(self, theta)


@dataclass(frozen=True)
class SpherePoint:
    """Unit vector in R^{d+1}; renormalized on construction."""

    coords: tuple[float, ...]

    def __post_init__(self):
        v = np.asarray(self.coords, dtype=float)
        n = np.linalg.norm(v)
        if v.ndim != 1 or v.size < 2 or not n > 0:
            raise ValueError("SpherePoint: need a nonzero vector of length >= 2")
        object.__setattr__(self, "coords", tuple(v / n))

    @property
    def dim(self) -> int:
        return len(self.coords) - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords)


def geodesic_distance(x: SpherePoint, y: SpherePoint) -> float:
    """Great-circle distance in [0, π]."""
    if x.dim != y.dim:
        raise DimensionMismatchError(f"points on S^{x.dim} and S^{y.dim}")
    a, b = x.as_array(), y.as_array()
    c = float(np.clip(a @ b, -1.0, 1.0))
    # atan2(sin, cos) keeps full accuracy near 0 and π, unlike arccos
    return math.atan2(float(np.linalg.norm(b - c * a)), c)


def chordal_from_geodesic(theta):
    """√(2 − 2cos θ), evaluated as 2 sin(θ/2)."""
    t = np.asarray(theta, dtype=float)
    out = 2.0 * np.sin(t / 2.0)
    return float(out) if np.ndim(theta) == 0 else out


# -- radial profiles -----------------------------------------------------


def matern_radial(r, nu: float, alpha: float):
    """2^{1−ν}/Γ(ν) (r/α)^ν K_ν(r/α), equal to 1 at r = 0."""
    r = np.asarray(r, dtype=float)
    out = np.ones_like(r)
    pos = r > 0
    if np.any(pos):
        x = r[pos] / alpha
        log_c = (1.0 - nu) * math.log(2.0) - math.lgamma(nu)
        with np.errstate(over="ignore", invalid="ignore"):
            val = np.exp(log_c + nu * np.log(x)) * specfun.bessel_k(nu, x)
        # x^ν K_ν(x) overflowing only happens for x → 0, where ψ → 1
        out[pos] = np.where(np.isfinite(val), val, 1.0)
    return out


def wendland_radial(r, nu: float, alpha: float, eps: float):
    """Generalised Wendland profile with support r <= 1/ε, equal to 1 at r = 0."""
    r = np.asarray(r, dtype=float)
    s = eps * r
    out = np.zeros_like(r)
    inside = s < 1.0
    if np.any(inside):
        u = 1.0 - s[inside] ** 2
        log_c = specfun.log_beta(alpha, nu + 1) - (nu + 1) * math.log(2.0) - specfun.log_beta(2 * alpha, nu + 1)
        out[inside] = math.exp(log_c) * u ** (nu + alpha) * special.hyp2f1(nu / 2, (nu + 1) / 2, nu + alpha + 1, u)
    return out


def _ffamily_from_cos(c, tau: float, alpha: float, nu: float):
    log_c = specfun.log_beta(alpha, nu + tau) - specfun.log_beta(alpha, nu)
    return math.exp(log_c) * special.hyp2f1(tau, alpha, alpha + nu + tau, c)


def _custom_from_cos(c, powers: tuple[float, ...]):
    out = np.zeros_like(c)
    for coef in reversed(powers):
        out = out * c + coef
    return out


def psi_from_geometry(k: IsotropicKernel, cos_theta, chord):
    """ψ given both cos θ and the chordal distance (each exact for its family)."""
    c = np.asarray(cos_theta, dtype=float)
    r = np.asarray(chord, dtype=float)
    fam = k.family
    if fam is Family.MATERN:
        return matern_radial(r, k["nu"], k["alpha"])
    if fam is Family.WENDLAND:
        return wendland_radial(r, k["nu"], k["alpha"], k["eps"])
    if fam is Family.FFAMILY:
        return _ffamily_from_cos(c, k["tau"], k["alpha"], k["nu"])
    return _custom_from_cos(c, k.cos_powers)


def eval_kernel(k: IsotropicKernel, theta):
    """ψ(θ) for θ in [0, π]."""
    t = np.asarray(theta, dtype=float)
    if np.any((t < 0) | (t > math.pi + 1e-12)):
        raise ValueError("eval_kernel: theta must lie in [0, pi]")
    out = psi_from_geometry(k, np.cos(t), 2.0 * np.sin(t / 2.0))
    out = np.where(t == 0.0, 1.0, out)
    return float(out) if np.ndim(theta) == 0 else out


# -- radial Fourier transforms ------------------------------------------


def matern_radial_ft(nu: float, alpha: float, dim: int, r):
    """Closed-form d-dimensional radial Fourier transform of the Matérn profile."""
    r = np.asarray(r, dtype=float)
    log_c = (dim / 2) * math.log(2.0) + math.lgamma(nu + dim / 2) - 2 * nu * math.log(alpha) - math.lgamma(nu)
    out = np.exp(log_c - (nu + dim / 2) * np.log(alpha**-2 + r * r))
    return float(out) if out.ndim == 0 else out


def radial_fourier_transform(
    phi: Callable[[float], float], dim: int, r: float, *, t_max: float, tol: float = 1e-12
) -> float:
    """Oracle: r^{-(d-2)/2} ∫_0^∞ φ(t) t^{d/2} J_{(d-2)/2}(rt) dt by panel quadrature.

    ``t_max`` is where φ becomes negligible; panels follow the half-periods
    of the Bessel factor.
    """
    mu = (dim - 2) / 2
    if r == 0:
        val, _ = integrate.quad(lambda t: phi(t) * t ** (dim - 1), 0, t_max, epsabs=tol, epsrel=tol, limit=500)
        return val / (2**mu * math.gamma(dim / 2))
    edges = np.append(np.arange(0.0, t_max, math.pi / r), t_max)

    def f(t):
        return phi(t) * t ** (dim / 2) * special.jv(mu, r * t)

    total = [integrate.quad(f, a, b, epsabs=tol * 1e-3, epsrel=tol, limit=200)[0]
             for a, b in zip(edges[:-1], edges[1:])]
    return math.fsum(total) * r ** (-mu)
