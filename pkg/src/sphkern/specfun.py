"""Special functions used by the coefficient engine.

Gamma-family helpers, Pochhammer symbols, normalized Gegenbauer ratios,
generalized hypergeometric series and Bessel functions.  Quantities that
mix factorially large and small factors are handled in log space and
exponentiated last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np
from scipy import integrate, optimize, special

from .errors import DivergenceError, DomainError, NonConvergenceError, NumericalError, PoleError

__all__ = [
    "gamma_fn",
    "lgamma_fn",
    "log_gamma_signed",
    "pochhammer",
    "log_pochhammer",
    "beta_fn",
    "log_beta",
    "gegenbauer_ratio",
    "gegenbauer_ratios",
    "iter_gegenbauer_ratios",
    "PFQParams",
    "PFQResult",
    "pfq",
    "bessel_j",
    "bessel_j_series",
    "bessel_k",
    "bessel_k_integral",
]

DEFAULT_MAX_TERMS = 200_000
_DIRECT_POCHHAMMER_MAX = 256
_EPS = np.finfo(float).eps


def _is_nonpos_int(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


# --------------------------------------------------------------------------
# Gamma family
# --------------------------------------------------------------------------


def gamma_fn(x: float) -> float:
    """Gamma function.  Raises :class:`PoleError` at non-positive integers."""
    x = float(x)
    if _is_nonpos_int(x):
        raise PoleError(f"gamma_fn: pole at x={x!r}")
    try:
        return math.gamma(x)
    except OverflowError as exc:
        raise NumericalError(f"gamma_fn: overflow at x={x!r}; use lgamma_fn") from exc


def lgamma_fn(x: float) -> float:
    """log|Γ(x)|."""
    x = float(x)
    if _is_nonpos_int(x):
        raise PoleError(f"lgamma_fn: pole at x={x!r}")
    return math.lgamma(x)


def log_gamma_signed(x: float) -> tuple[float, int]:
    """Return (log|Γ(x)|, sign Γ(x))."""
    x = float(x)
    if _is_nonpos_int(x):
        raise PoleError(f"log_gamma_signed: pole at x={x!r}")
    if x > 0:
        return math.lgamma(x), 1
    return math.lgamma(x), (-1 if math.floor(x) % 2 else 1)


def log_pochhammer(c: float, n: int) -> tuple[float, int]:
    """Return (log|(c)_n|, sign).  A vanishing symbol gives (-inf, 0)."""
    n = _check_count(n)
    c = float(c)
    if n == 0:
        return 0.0, 1
    if _is_nonpos_int(c):
        if n > -c:
            return -math.inf, 0
        # product of the negative integers c, ..., c+n-1
        return math.lgamma(1 - c) - math.lgamma(1 - c - n), (-1 if n % 2 else 1)
    if _is_nonpos_int(c + n):
        # c is a non-integer, so c+n cannot be an integer; unreachable
        raise PoleError(f"log_pochhammer: pole at c+n={c + n!r}")
    la, sa = log_gamma_signed(c + n)
    lb, sb = log_gamma_signed(c)
    return la - lb, sa * sb


def pochhammer(c: float, n: int) -> float:
    """Rising factorial (c)_n with (c)_0 = 1.

    Small n uses the direct product; large n goes through log-Gamma.
    """
    n = _check_count(n)
    c = float(c)
    if n == 0:
        return 1.0
    if n <= _DIRECT_POCHHAMMER_MAX:
        out = 1.0
        for k in range(n):
            out *= c + k
        return out
    la, s = log_pochhammer(c, n)
    if s == 0:
        return 0.0
    return s * math.exp(la) if la < 709.7 else s * math.inf


def _check_count(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise DomainError(f"expected a non-negative integer, got {n!r}")
    return int(n)


# Stirling-series coefficients B_{2k}/(2k(2k-1))
_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188)


def log_gamma_ratio(x, a: float, b: float):
    """lnΓ(x+a) − lnΓ(x+b), vectorized over x, without cancellation at large x."""
    x = np.asarray(x, dtype=float)
    z1, z2 = x + a, x + b
    small = np.minimum(z1, z2) < 20
    out = np.empty_like(x)
    if np.any(small):
        out[small] = special.gammaln(z1[small]) - special.gammaln(z2[small])
    big = ~small
    if np.any(big):
        u1, u2 = z1[big], z2[big]
        d = a - b
        v = (u1 - 0.5) * np.log1p(d / u2) + d * np.log(u2) - d
        for k, c in enumerate(_STIRLING, start=1):
            e = 1 - 2 * k
            v += c * (u1**e - u2**e)
        out[big] = v
    return float(out) if out.ndim == 0 else out


def log_beta(x: float, y: float) -> float:
    x, y = float(x), float(y)
    if not (x > 0 and y > 0):
        raise DomainError(f"beta: arguments must be positive, got ({x!r}, {y!r})")
    return math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y)


def beta_fn(x: float, y: float) -> float:
    """Beta function B(x, y) for x, y > 0, via log-Gamma."""
    return math.exp(log_beta(x, y))


# --------------------------------------------------------------------------
# Gegenbauer ratios R_m(x) = P_m^λ(x) / P_m^λ(1)
# --------------------------------------------------------------------------
#
# Recurrence on the ratio itself:
#   R_0 = 1, R_1 = x, R_{m+1} = (2(m+λ) x R_m - m R_{m-1}) / (m + 2λ).
# λ = 0 reduces to the Chebyshev recurrence, i.e. R_m(cos θ) = cos(mθ).


def _as_unit_interval(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + 1e-12):
        raise DomainError("gegenbauer ratio: argument outside [-1, 1]")
    return np.clip(x, -1.0, 1.0)


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam >= 0:
        raise DomainError(f"gegenbauer ratio: lambda must be >= 0, got {lam!r}")
    return lam


def iter_gegenbauer_ratios(M: int, lam: float, x) -> Iterator[np.ndarray]:
    """Yield R_0(x), ..., R_M(x) one degree at a time (O(len(x)) memory)."""
    M = _check_count(M)
    lam = _check_lambda(lam)
    x = _as_unit_interval(x)
    r_prev = np.ones_like(x)
    yield r_prev
    if M == 0:
        return
    r = x.copy()
    yield r
    two_x = 2.0 * x
    for k in range(1, M):
        r_prev, r = r, ((k + lam) * two_x * r - k * r_prev) / (k + 2.0 * lam)
        yield r


def gegenbauer_ratios(M: int, lam: float, x) -> np.ndarray:
    """All ratios R_0..R_M at x; shape (M+1,) + shape(x)."""
    x = _as_unit_interval(x)
    out = np.empty((_check_count(M) + 1,) + x.shape)
    for m, r in enumerate(iter_gegenbauer_ratios(M, lam, x)):
        out[m] = r
    out[:, x == 1.0] = 1.0
    return np.clip(out, -1.0, 1.0)


def gegenbauer_ratio(m: int, lam: float, x):
    """Normalized Gegenbauer ratio P_m^λ(x)/P_m^λ(1), exactly 1 at x = 1."""
    xa = _as_unit_interval(x)
    r = None
    for r in iter_gegenbauer_ratios(m, lam, xa):
        pass
    r = np.where(xa == 1.0, 1.0, np.clip(r, -1.0, 1.0))
    return float(r) if np.ndim(x) == 0 else r


# --------------------------------------------------------------------------
# Generalized hypergeometric series
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PFQParams:
    """Parameters of pFq(a_1..a_p; b_1..b_q; z)."""

    numerator_params: tuple[float, ...]
    denominator_params: tuple[float, ...]
    argument: float

    def __post_init__(self):
        num = tuple(float(v) for v in self.numerator_params)
        den = tuple(float(v) for v in self.denominator_params)
        z = float(self.argument)
        if not all(math.isfinite(v) for v in (*num, *den, z)):
            raise DomainError("pfq: parameters must be finite")
        object.__setattr__(self, "numerator_params", num)
        object.__setattr__(self, "denominator_params", den)
        object.__setattr__(self, "argument", z)

    @property
    def p(self) -> int:
        return len(self.numerator_params)

    @property
    def q(self) -> int:
        return len(self.denominator_params)

    @property
    def excess(self) -> float:
        return sum(self.denominator_params) - sum(self.numerator_params)

    @property
    def terminating_degree(self) -> int | None:
        """Largest j with a nonzero term, if some numerator param is a non-positive integer."""
        degs = [int(-a) for a in self.numerator_params if _is_nonpos_int(a)]
        return min(degs) if degs else None


@dataclass(frozen=True)
class PFQResult:
    """Series value in log form, with a tail bound relative to |value|.

    ``condition`` is Σ|t_j| / |Σ t_j|; rounding error is roughly
    ``condition * eps``.
    """

    log_abs: float
    sign: int
    rel_tail: float
    n_terms: int
    method: str
    condition: float = 1.0

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.log_abs > 709.78:
            return self.sign * math.inf
        return self.sign * math.exp(self.log_abs)

    @property
    def tail_bound(self) -> float:
        return self.rel_tail * abs(self.value)

    def __float__(self) -> float:
        return self.value


def _validate(params: PFQParams) -> str:
    """Check the invariants and return the summation mode."""
    b, z = params.denominator_params, params.argument
    n_term = params.terminating_degree
    for bk in b:
        if _is_nonpos_int(bk) and (n_term is None or n_term > -bk):
            raise PoleError(f"pfq: denominator parameter {bk!r} hits a pole before termination")
    if z == 0.0 or n_term is not None:
        return "terminating"
    p, q = params.p, params.q
    if p <= q:
        return "geometric"
    if p > q + 1:
        raise DivergenceError(f"pfq: {p}F{q} diverges for nonzero argument")
    if abs(z) < 1:
        return "geometric"
    if abs(z) > 1:
        raise DivergenceError(f"pfq: {p}F{q} diverges for |z|={abs(z)!r} > 1")
    if params.excess <= 0:
        raise DivergenceError(f"pfq: parameter excess {params.excess!r} <= 0 at |z| = 1")
    return "unit" if z == 1.0 else "alternating"


@np.errstate(divide="ignore", invalid="ignore")
def _log_ratios(a: np.ndarray, b: np.ndarray, z: float, j: np.ndarray):
    """log|t_{j+1}/t_j| and its sign for each j."""
    lr = np.full(j.shape, math.log(abs(z)) if z != 0 else -math.inf)
    sg = np.full(j.shape, 1.0 if z >= 0 else -1.0)
    for ai in a:
        v = ai + j
        lr += np.log(np.abs(v))
        sg *= np.sign(v)
    for bk in b:
        v = bk + j
        lr -= np.log(np.abs(v))
        sg *= np.sign(v)
    lr -= np.log1p(j)
    return lr, sg


class _LogAccumulator:
    """Signed sum and absolute sum of exp(logt) under a running scale."""

    def __init__(self):
        self.scale = -math.inf
        self.s = 0.0
        self.a = 0.0

    def add(self, logt: np.ndarray, sg: np.ndarray) -> np.ndarray:
        """Add terms; return the running signed partial sums (current scale)."""
        top = float(np.max(logt))
        if top > self.scale:
            if self.scale > -math.inf:
                f = math.exp(self.scale - top)
                self.s *= f
                self.a *= f
            self.scale = top
        w = np.exp(logt - self.scale)
        partial = self.s + np.cumsum(sg * w)
        self.s = float(partial[-1])
        self.a += float(np.sum(w))
        return partial

    def truncate_to(self, partial_value: float, removed_abs: float):
        self.s = partial_value
        self.a -= removed_abs

    def log_abs(self) -> float:
        return math.log(abs(self.s)) + self.scale if self.s != 0 else -math.inf


def pfq(
    params: PFQParams,
    tail_tol: float = 1e-14,
    *,
    max_terms: int = DEFAULT_MAX_TERMS,
    exact: bool = False,
) -> PFQResult:
    """Evaluate a generalized hypergeometric series with a tail bound.

    ``tail_tol`` is relative to the magnitude of the sum.  Terminating
    series are summed to the last nonzero term.  Series with |z| < 1 (or
    p <= q) stop once a geometric tail bound is met.  For p = q+1 at z = 1
    the direct sum is completed by an Euler–Maclaurin evaluation of the
    remaining terms, continued to real index through log-Gamma; the
    reported tail bound is the integration error plus the last correction.

    ``exact=True`` sums in fixed-point integer arithmetic with the inputs
    converted to exact binary rationals; use it for series with heavy
    cancellation.  Supported for terminating series and |z| < 1.
    """
    if not tail_tol > 0:
        raise DomainError("pfq: tail_tol must be positive")
    mode = _validate(params)
    if params.argument == 0.0:
        return PFQResult(0.0, 1, 0.0, 1, "terminating")
    if exact:
        if mode not in ("terminating", "geometric"):
            raise DomainError("pfq: exact mode needs a terminating series or |z| < 1")
        return _pfq_exact(params, tail_tol, max_terms)
    return _pfq_float(params, mode, tail_tol, max_terms)


def _param_scale(params: PFQParams) -> float:
    vals = (*params.numerator_params, *params.denominator_params)
    return max((abs(v) for v in vals), default=0.0)


def _pfq_float(params: PFQParams, mode: str, tail_tol: float, max_terms: int) -> PFQResult:
    a = np.asarray(params.numerator_params)
    b = np.asarray(params.denominator_params)
    z = params.argument
    j_min = int(2 * _param_scale(params)) + 2
    if mode == "terminating":
        limit = params.terminating_degree
    elif mode == "unit":
        limit = max(128, int(8 * _param_scale(params)) + 8)
    else:
        limit = max_terms
    if limit > max_terms:
        raise NonConvergenceError(f"pfq: needs {limit} terms, budget is {max_terms}")

    acc = _LogAccumulator()
    acc.add(np.array([0.0]), np.array([1.0]))
    log_last, sign_last = 0.0, 1.0
    j = 0  # index of the last accumulated term
    chunk = 256
    rel_tail = 0.0
    done = j >= limit
    while not done:
        n = min(chunk, limit - j)
        steps = np.arange(j, j + n + 1, dtype=float)  # one extra ratio for the bound
        lr, sr = _log_ratios(a, b, z, steps)
        logt = log_last + np.cumsum(lr[:n])
        sg = sign_last * np.cumprod(sr[:n])
        partial = acc.add(logt, sg)
        idx = np.arange(j + 1, j + n + 1)
        stop_at = None
        if mode == "geometric":
            rho = np.exp(lr[1:])
            if params.p == params.q + 1:
                rho = np.maximum(rho, abs(z))
            with np.errstate(divide="ignore", invalid="ignore"):
                bound = np.exp(logt - acc.scale) * rho / (1.0 - rho)
            ok = (idx >= j_min) & (rho < 1) & (bound <= tail_tol * np.abs(partial))
            hits = np.flatnonzero(ok)
            if hits.size:
                stop_at = int(hits[0])
                rel_tail = float(bound[stop_at] / abs(partial[stop_at]))
        elif mode == "alternating":
            nxt = np.exp(logt + lr[1:] - acc.scale)
            alt = sr[1:] < 0
            ok = (idx >= j_min) & alt & (lr[1:] < 0) & (nxt <= tail_tol * np.abs(partial))
            hits = np.flatnonzero(ok)
            if hits.size:
                stop_at = int(hits[0])
                rel_tail = float(nxt[stop_at] / abs(partial[stop_at]))
        if stop_at is not None and stop_at < n - 1:
            removed = np.exp(logt[stop_at + 1:] - acc.scale)
            acc.truncate_to(float(partial[stop_at]), float(np.sum(removed)))
            n = stop_at + 1
        log_last, sign_last = float(logt[n - 1]), float(sg[n - 1])
        j += n
        if stop_at is not None or (j >= limit and mode in ("terminating", "unit")):
            done = True
        elif j >= max_terms:
            raise NonConvergenceError(
                f"pfq: tail bound above {tail_tol:g} after {j} terms "
                f"(p={params.p}, q={params.q}, z={z!r})"
            )
        chunk = min(chunk * 2, 65536)

    log_s = acc.log_abs()
    sign = int(np.sign(acc.s))
    cond = acc.a / abs(acc.s) if acc.s != 0 else math.inf
    if mode != "unit":
        return PFQResult(log_s, sign, rel_tail, j + 1, mode, cond)

    # Euler–Maclaurin completion of Σ_{k > j} t_k
    log_next = log_last + float(_log_ratios(a, b, z, np.array([float(j)]))[0][0])
    t_log, t_err = _unit_completion(a, b, float(j + 1), log_next)
    t_sign = sign_last  # all parameters are positive beyond j_min
    scale = max(log_s, t_log)
    total = sign * math.exp(log_s - scale) + t_sign * math.exp(t_log - scale)
    if total == 0:
        raise NumericalError("pfq: complete cancellation in unit-argument series")
    log_total = scale + math.log(abs(total))
    abs_total = acc.a * math.exp(acc.scale - scale) + math.exp(t_log - scale)
    rel = t_err * math.exp(t_log - log_total)
    if rel > tail_tol:
        raise NonConvergenceError(
            f"pfq: unit-argument remainder uncertain to {rel:.2e} > {tail_tol:g}"
        )
    return PFQResult(log_total, int(np.sign(total)), rel, j + 1, "unit", abs_total / abs(total))


def _log_term_profile(a: np.ndarray, b: np.ndarray):
    """x -> Σ lnΓ(a_i+x) - Σ lnΓ(b_k+x) - lnΓ(x+1), up to a constant.

    Numerator and denominator parameters are paired and each log-Gamma
    difference is taken from the Stirling series, with the net power of x
    factored out, so large log-Gamma values never cancel.  Valid for
    x + min(params) >= ~20.
    """
    num = [float(v) for v in np.sort(a)]
    den = [float(v) for v in np.sort(np.append(b, 1.0))]
    pairs = [(p, q, p - q) for p, q in zip(num, den)]
    net = math.fsum(p - q for p, q, _ in pairs)
    log1p = math.log1p

    def L(x: float) -> float:
        # scalar arithmetic: these arrays have a handful of entries
        out = net * math.log(x)
        for p, q, dl in pairs:
            z1, z2 = x + p, x + q
            out += dl * (log1p(q / x) - 1.0) + (z1 - 0.5) * log1p(dl / z2)
            for k, c in enumerate(_STIRLING, start=1):
                e = 1 - 2 * k
                out += c * (z1**e - z2**e)
        return out

    return L


def _unit_completion(a: np.ndarray, b: np.ndarray, x0: float, log_t0: float) -> tuple[float, float]:
    """log of Σ_{k >= x0} t_k and its relative uncertainty, for z = 1.

    With L(x) = Σ lnΓ(a+x) - Σ lnΓ(b+x) - lnΓ(x+1), t_x = t_{x0} e^{L(x) - L(x0)}.
    """

    L = _log_term_profile(a, b)

    def dL(x, k=0):
        return (
            np.sum(special.polygamma(k, a + x))
            - np.sum(special.polygamma(k, b + x))
            - special.polygamma(k, x + 1.0)
        )

    x_peak = x0
    if dL(x0) > 0:
        hi = 2.0 * x0
        while dL(hi) > 0:
            hi *= 2.0
        x_peak = optimize.brentq(lambda s: dL(math.exp(s)), math.log(x0), math.log(hi), xtol=1e-12)
        x_peak = math.exp(x_peak)
    L_ref = L(x_peak)

    pieces = []
    if x_peak > x0:
        pieces.append(integrate.quad(lambda x: math.exp(L(x) - L_ref), x0, x_peak,
                                     epsabs=0.0, epsrel=1e-13, limit=200))
    # x = x_peak * u^(-1/excess) turns the power-law tail into a flat integrand on (0, 1]
    excess = float(np.sum(b) - np.sum(a))
    log_xp = math.log(x_peak)

    def tail(u):
        lx = min(log_xp - math.log(u) / excess, 600.0)
        log_u = -excess * (lx - log_xp)
        return math.exp(L(math.exp(lx)) - L_ref + lx - log_u) / excess

    pieces.append(integrate.quad(tail, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=400))
    integral = sum(p[0] for p in pieces)
    int_err = sum(p[1] for p in pieces) + 64 * _EPS * integral

    # derivatives of f = e^L at x0 through complete Bell polynomials in L', L'', ...
    f0 = math.exp(L(x0) - L_ref)
    g1, g2, g3, g4, g5 = (dL(x0, k) for k in range(5))
    d1 = f0 * g1
    d3 = f0 * (g1**3 + 3 * g1 * g2 + g3)
    d5 = f0 * (g1**5 + 10 * g1**3 * g2 + 15 * g1 * g2**2 + 10 * g1**2 * g3
               + 10 * g2 * g3 + 5 * g1 * g4 + g5)
    total = integral + f0 / 2 - d1 / 12 + d3 / 720
    if not total > 0:
        raise NumericalError("pfq: unit-argument remainder evaluation failed")
    # the first omitted correction, doubled, bounds the Euler–Maclaurin remainder
    err = int_err + 2 * abs(d5) / 30240
    log_total = log_t0 + (L_ref - L(x0)) + math.log(total)
    return log_total, err / total


# -- exact fixed-point summation ------------------------------------------


def _pfq_exact(params: PFQParams, tail_tol: float, max_terms: int) -> PFQResult:
    a = [Fraction(v) for v in params.numerator_params]
    b = [Fraction(v) for v in params.denominator_params]
    z = Fraction(params.argument)
    n_term = params.terminating_degree
    terminating = n_term is not None
    limit = n_term if terminating else max_terms
    j_min = int(2 * _param_scale(params)) + 2

    # float pass for the largest term, to size the fixed-point precision
    jj = np.arange(0, min(limit, max_terms), dtype=float)
    lr, _ = _log_ratios(np.asarray(params.numerator_params), np.asarray(params.denominator_params),
                        params.argument, jj)
    lr = np.where(np.isfinite(lr), lr, 0.0)
    max_log2 = max(0.0, float(np.max(np.cumsum(lr), initial=0.0)) / math.log(2))
    bits = int(max_log2) + int(math.log2(limit + 2)) + 96

    prev = None
    for _ in range(8):
        s, n_used, rel_tail, cond = _fixed_point_sum(a, b, z, limit, j_min, bits, tail_tol, terminating)
        hi, _, _, _ = _fixed_point_sum(a, b, z, limit, j_min, bits + 64, tail_tol, terminating)
        hi_val = Fraction(hi, 1 << (bits + 64))
        diff = abs(Fraction(s, 1 << bits) - hi_val)
        if hi_val != 0 and diff <= abs(hi_val) * Fraction(1, 1 << 60):
            prev = (hi_val, n_used, rel_tail, cond)
            break
        if hi_val == 0 and diff == 0:
            prev = (hi_val, n_used, rel_tail, cond)
            break
        bits *= 2
    if prev is None:
        raise NonConvergenceError("pfq: exact summation failed to stabilise")
    val, n_used, rel_tail, cond = prev
    if val == 0:
        return PFQResult(-math.inf, 0, 0.0, n_used, "exact", math.inf)
    log_abs = math.log(abs(val.numerator)) - math.log(val.denominator)
    return PFQResult(log_abs, 1 if val > 0 else -1, rel_tail, n_used, "exact", cond)


def _fixed_point_sum(a, b, z, limit, j_min, bits, tail_tol, terminating):
    ratio = _IntRatio(a, b, z)
    t = s = abs_s = 1 << bits
    rel_tail = 0.0
    geometric_p = len(a) == len(b) + 1
    j = 0
    while j < limit:
        num, den = ratio(j)
        t = (t * num) // den
        s += t
        abs_s += abs(t)
        j += 1
        if terminating or j < j_min or s == 0:
            continue
        num, den = ratio(j)
        rho = abs(_int_ratio(num, den))
        if geometric_p:
            rho = max(rho, abs(float(z)))
        if rho < 1:
            rel = _int_ratio(abs(t), abs(s)) * rho / (1 - rho)
            if rel <= tail_tol:
                rel_tail = rel
                break
    else:
        if not terminating:
            raise NonConvergenceError("pfq: exact summation exceeded term budget")
    cond = _int_ratio(abs_s, abs(s)) if s != 0 else math.inf
    return s, j + 1, rel_tail, cond


def _int_ratio(num: int, den: int) -> float:
    """num/den as a float, saturating to inf."""
    try:
        return num / den
    except OverflowError:
        return math.inf


class _IntRatio:
    """t_{j+1}/t_j as an integer pair (num, den), den > 0, without gcd reductions."""

    def __init__(self, a, b, z):
        self.a = [(f.numerator, f.denominator) for f in a]
        self.b = [(f.numerator, f.denominator) for f in b]
        const_num, const_den = z.numerator, z.denominator
        for _, q in self.b:
            const_num *= q
        for _, q in self.a:
            const_den *= q
        self.const = (const_num, const_den)

    def __call__(self, j: int) -> tuple[int, int]:
        num, den = self.const
        for p, q in self.a:
            num *= p + j * q
        for p, q in self.b:
            den *= p + j * q
        den *= j + 1
        if den < 0:
            num, den = -num, -den
        return num, den


# --------------------------------------------------------------------------
# Bessel functions
# --------------------------------------------------------------------------


def _half_integer_order(nu: float) -> int | None:
    two = 2.0 * nu
    if two.is_integer() and int(two) % 2 == 1 and nu < 60:
        return int(nu - 0.5)
    return None


def _bessel_k_half(n: int, x: np.ndarray) -> np.ndarray:
    """K_{n+1/2}(x) from the finite closed form."""
    poly = np.zeros_like(x)
    inv = 1.0 / (2.0 * x)
    for k in range(n, -1, -1):
        c = math.factorial(n + k) / (math.factorial(k) * math.factorial(n - k))
        poly = poly * inv + c
    return np.sqrt(np.pi / (2.0 * x)) * np.exp(-x) * poly


def bessel_k(nu: float, x):
    """Modified Bessel function of the second kind, K_ν(x) for x > 0.

    Half-integer orders use the finite closed form; other orders use
    scipy's ``kv``.  K_ν = K_{-ν}.
    """
    nu = abs(float(nu))
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise DomainError("bessel_k: x must be positive")
    n = _half_integer_order(nu)
    out = _bessel_k_half(n, xa) if n is not None else special.kv(nu, xa)
    return float(out) if np.ndim(x) == 0 else out


def bessel_k_integral(nu: float, x: float) -> float:
    """Oracle: K_ν(x) = ∫_0^∞ exp(-x cosh t) cosh(νt) dt, by adaptive quadrature."""
    nu, x = abs(float(nu)), float(x)
    if not x > 0:
        raise DomainError("bessel_k_integral: x must be positive")
    t_star = math.asinh(nu / x) if nu > 0 else 0.0
    log_peak = -x * math.cosh(t_star) + nu * t_star

    def f(t):
        e = -x * math.cosh(t) - log_peak
        return 0.5 * (math.exp(e + nu * t) + math.exp(e - nu * t))

    # integrand is below e^-60 of its peak beyond t_end
    t_end = t_star + 1.0
    while -x * math.cosh(t_end) + nu * t_end - log_peak > -60:
        t_end = t_end * 1.5 + 1.0
    pts = [t_star] if 0 < t_star < t_end else None
    val, _ = integrate.quad(f, 0.0, t_end, points=pts, epsabs=0.0, epsrel=1e-13, limit=500)
    return val * math.exp(log_peak)


def bessel_j(nu: float, x):
    """Bessel function of the first kind J_ν(x) for ν >= 0, x >= 0 (scipy ``jv``)."""
    nu = float(nu)
    xa = np.asarray(x, dtype=float)
    if nu < 0 or np.any(xa < 0):
        raise DomainError("bessel_j: requires nu >= 0 and x >= 0")
    out = special.jv(nu, xa)
    return float(out) if np.ndim(x) == 0 else out


def bessel_j_series(nu: float, x: float, terms: int = 200) -> float:
    """Oracle: power series Σ (-1)^k (x/2)^{2k+ν} / (k! Γ(k+ν+1)), summed with fsum."""
    nu, x = float(nu), float(x)
    if x == 0:
        return 1.0 if nu == 0 else 0.0
    h = math.log(x / 2)
    out = []
    for k in range(terms):
        lt = (2 * k + nu) * h - math.lgamma(k + 1) - math.lgamma(k + nu + 1)
        if lt < -800:
            break
        out.append((-1) ** k * math.exp(lt))
    return math.fsum(out)

