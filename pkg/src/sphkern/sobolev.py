"""Native-space norms, coefficient decay fits and Sobolev-order identification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatchError, DomainError, KernelParameterError
from .kernels import Family, IsotropicKernel
from .schoenberg import (
    HILBERT,
    FourierSequence,
    SchoenbergSequence,
    decay_law,
    fourier_from_schoenberg,
    harmonic_dim,
)

__all__ = [
    "HarmonicCoefficients",
    "DecayFit",
    "native_norm_sq",
    "native_inner",
    "sobolev_norm_sq",
    "fit_decay",
    "asymptote_ratio",
    "family_asymptote",
    "matern_asymptote",
    "ffamily_asymptote",
    "wendland_sandwich",
]


@dataclass(frozen=True)
class HarmonicCoefficients:
    """Sparse harmonic coefficients f̂_{m,n} of a function on S^d.

    ``entries`` holds (m, n, value) triples with 1 <= n <= N_{m,d}.
    """

    dim: int
    entries: tuple[tuple[int, int, float], ...]
    truncation: int | None = None

    def __post_init__(self):
        d = int(self.dim)
        if d != self.dim or d < 1:
            raise ValueError(f"HarmonicCoefficients: dim must be a positive integer, got {self.dim!r}")
        seen = set()
        clean = []
        for m, n, v in self.entries:
            m, n, v = int(m), int(n), float(v)
            if m < 0 or not 1 <= n <= harmonic_dim(m, d):
                raise ValueError(f"HarmonicCoefficients: index (m={m}, n={n}) outside 1..N_{{m,{d}}}")
            if (m, n) in seen:
                raise ValueError(f"HarmonicCoefficients: duplicate entry (m={m}, n={n})")
            seen.add((m, n))
            clean.append((m, n, v))
        top = max((m for m, _, _ in clean), default=0)
        trunc = top if self.truncation is None else int(self.truncation)
        if trunc < top:
            raise ValueError(f"HarmonicCoefficients: entry degree {top} exceeds truncation {trunc}")
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "entries", tuple(sorted(clean)))
        object.__setattr__(self, "truncation", trunc)

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {(m, n): v for m, n, v in self.entries}


def _fourier(psi_hat) -> FourierSequence:
    if isinstance(psi_hat, SchoenbergSequence):
        return fourier_from_schoenberg(psi_hat)
    return psi_hat


def _weights(f: HarmonicCoefficients, psi_hat: FourierSequence) -> dict[int, float]:
    if f.dim != psi_hat.dim:
        raise DimensionMismatchError(f"coefficients on S^{f.dim}, kernel on S^{psi_hat.dim}")
    out = {}
    for m in {m for m, _, _ in f.entries}:
        if m > psi_hat.truncation:
            raise ValueError(f"degree {m} beyond kernel truncation {psi_hat.truncation}")
        w = float(psi_hat.coeffs[m])
        if not w > 0:
            raise DomainError(f"psi_hat_{m} = {w!r} is not positive; degree {m} is outside the native space")
        out[m] = w
    return out


def native_norm_sq(f: HarmonicCoefficients, psi_hat: FourierSequence | SchoenbergSequence) -> float:
    """Σ |f̂_{m,n}|² / ψ̂_m."""
    psi_hat = _fourier(psi_hat)
    w = _weights(f, psi_hat)
    return math.fsum(v * v / w[m] for m, _, v in f.entries)


def native_inner(f: HarmonicCoefficients, g: HarmonicCoefficients,
                 psi_hat: FourierSequence | SchoenbergSequence) -> float:
    """Σ f̂_{m,n} ĝ_{m,n} / ψ̂_m over the common support."""
    psi_hat = _fourier(psi_hat)
    if f.dim != g.dim:
        raise DimensionMismatchError(f"S^{f.dim} and S^{g.dim}")
    w = _weights(f, psi_hat)
    gd = g.as_dict()
    return math.fsum(v * gd[(m, n)] / w[m] for m, n, v in f.entries if (m, n) in gd)


def sobolev_norm_sq(f: HarmonicCoefficients, gamma: float) -> float:
    """Σ (1+m)^{2γ} |f̂_{m,n}|²."""
    return math.fsum((1.0 + m) ** (2 * gamma) * v * v for m, _, v in f.entries)


@dataclass(frozen=True)
class DecayFit:
    """ψ̂_m ≈ constant_hat · (1+m)^{-(d+γ̂)} over ``fit_range``.

    ``sandwich`` holds min and max of ψ̂_m (1+m)^{d+γ̂} over the range: the
    empirical norm-equivalence constants on that finite range only.
    """

    dim: int
    gamma_hat: float
    beta: float
    constant_hat: float
    sandwich: tuple[float, float]
    fit_range: tuple[int, int]
    residual: float

    @property
    def embeds_continuously(self) -> bool:
        return self.beta > self.dim / 2

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "gamma_hat": self.gamma_hat,
            "beta": self.beta,
            "constant_hat": self.constant_hat,
            "sandwich": list(self.sandwich),
            "sandwich_note": "empirical bounds over fit_range",
            "fit_range": list(self.fit_range),
            "residual": self.residual,
            "embeds_continuously": self.embeds_continuously,
        }


def fit_decay(s: SchoenbergSequence | FourierSequence, fit_range: tuple[int, int] | None = None) -> DecayFit:
    """Log-log least-squares fit of ψ̂_m against 1+m.

    Default range is [M/4, M].  β = (d + γ̂)/2.
    """
    if isinstance(s, SchoenbergSequence):
        if s.dim == HILBERT:
            raise ValueError("fit_decay: needs a finite sphere dimension")
        s = fourier_from_schoenberg(s)
    M = s.truncation
    lo, hi = fit_range if fit_range is not None else (max(1, M // 4), M)
    lo, hi = int(lo), int(hi)
    if not 0 <= lo < hi or hi > M or hi - lo < 2:
        raise ValueError(f"fit_decay: degenerate or out-of-range fit range [{lo}, {hi}] for truncation {M}")
    y = s.coeffs[lo:hi + 1]
    if np.any(y <= 0):
        bad = lo + int(np.flatnonzero(y <= 0)[0])
        raise DomainError(f"fit_decay: psi_hat_{bad} is not positive")
    x = np.log1p(np.arange(lo, hi + 1, dtype=float))
    slope, intercept = np.polyfit(x, np.log(y), 1)
    expo = -float(slope)
    scaled = y * np.exp(expo * x)
    c = math.exp(float(intercept))
    return DecayFit(
        dim=s.dim,
        gamma_hat=expo - s.dim,
        beta=expo / 2,
        constant_hat=c,
        sandwich=(float(scaled.min()), float(scaled.max())),
        fit_range=(lo, hi),
        residual=float(np.max(np.abs(scaled / c - 1.0))),
    )


def asymptote_ratio(s: SchoenbergSequence, asymptote: Callable, m_range: tuple[int, int] | None = None) -> np.ndarray:
    """r_m = b_{m,d} / asymptote(m) for m in ``m_range`` (default 1..M)."""
    lo, hi = m_range if m_range is not None else (1, s.truncation)
    if hi > s.truncation or lo < 0:
        raise ValueError(f"asymptote_ratio: range [{lo}, {hi}] outside 0..{s.truncation}")
    m = np.arange(lo, hi + 1, dtype=float)
    return s.coeffs[lo:hi + 1] / np.asarray(asymptote(m), dtype=float)


def _power_asymptote(c: float, p: float) -> Callable:
    return lambda m: c * np.asarray(m, dtype=float) ** -p


def matern_asymptote(nu: float, alpha: float, d: int) -> Callable:
    """m -> 2Γ(ν+d/2) / (α^{2ν} Γ(ν) Γ(d/2)) · m^{-1-2ν}."""
    return _power_asymptote(*decay_law(IsotropicKernel.matern(nu, alpha), d))


def ffamily_asymptote(tau: float, alpha: float, nu: float, d: int) -> Callable:
    """m -> Γ(ν+α)Γ(ν+τ)/(Γ(α)Γ(ν)Γ(τ)) · 2^{ν+1}Γ(d/2+ν)/Γ(d/2) · m^{-1-2ν}."""
    return _power_asymptote(*decay_law(IsotropicKernel.ffamily(tau, alpha, nu), d))


def family_asymptote(k: IsotropicKernel, d: int) -> Callable:
    if k.family is Family.MATERN:
        return matern_asymptote(k["nu"], k["alpha"], d)
    if k.family is Family.FFAMILY:
        return ffamily_asymptote(k["tau"], k["alpha"], k["nu"], d)
    raise KernelParameterError(f"{k.family.value} has no closed-form coefficient asymptote")


def wendland_sandwich(s: SchoenbergSequence, alpha: float, eps: float,
                      m_range: tuple[int, int] = (50, 500)) -> tuple[float, float]:
    """min and max of ε^{-(2α+1)} (1+m)^{2+2α} b_{m,d} over ``m_range``."""
    lo, hi = m_range
    if hi > s.truncation:
        raise ValueError(f"wendland_sandwich: range end {hi} beyond truncation {s.truncation}")
    m = np.arange(lo, hi + 1, dtype=float)
    v = eps ** -(2 * alpha + 1) * (1 + m) ** (2 + 2 * alpha) * s.coeffs[lo:hi + 1]
    return float(v.min()), float(v.max())
