"""Acceptance criteria 1-9.

Each criterion is a function returning (passed, detail).  Under pytest the
outcome is asserted and a one-line PASS/FAIL summary is printed at the end of
the session (see conftest.py).  Run this file directly to print the lines
without pytest.
"""

import functools
import math
import time

import numpy as np
import pytest
from scipy import special

from sphkern import schoenberg as sch
from sphkern import sobolev, specfun
from sphkern.cubature import (
    CubatureRule,
    WeightMode,
    discrepancy_between,
    equal_weight_rule,
    generate_points,
    optimal_weights,
    rate_study,
    worst_case_error,
)
from sphkern.kernels import IsotropicKernel, eval_kernel
from sphkern.specfun import PFQParams, pfq

KERNELS = {
    "Matern": IsotropicKernel.matern(1.5, 0.7),
    "FFamily": IsotropicKernel.ffamily(2.0, 1.5, 1.0),
    "Wendland": IsotropicKernel.wendland(4.0, 1.0, 0.75),
}
DIMS = (1, 2, 3)
M_ORACLE = 30
FIT_RANGE = (200, 2000)
BETA = {"Matern": 2.5, "FFamily": 2.0, "Wendland": 2.5}
BETA_TOL = {"Matern": 0.02, "FFamily": 0.02, "Wendland": 0.05}

RESULTS: dict[int, tuple[bool, str]] = {}
TITLES = {
    1: "oracle equivalence",
    2: "projection exactness",
    3: "Sobolev order identification",
    4: "asymptotic constants",
    5: "reconstruction fidelity",
    6: "mass conservation",
    7: "cubature rate",
    8: "discrepancy sanity",
    9: "special-function identities",
}


# -- shared computations -----------------------------------------------------------


@functools.lru_cache(maxsize=None)
def cell(name, d):
    """Closed-form, quadrature and (F-family) projection sequences, m <= 30."""
    k = KERNELS[name]
    out = {"closed": sch.schoenberg_coeffs(k, d, M_ORACLE),
           "quadrature": sch.schoenberg_coeffs(k, d, M_ORACLE, route="quadrature")}
    if name == "FFamily":
        out["projection"] = sch.schoenberg_coeffs(k, d, M_ORACLE, route="projection")
    return out


@functools.lru_cache(maxsize=None)
def long_sequence(name):
    return sch.schoenberg_coeffs(KERNELS[name], 2, FIT_RANGE[1])


@functools.lru_cache(maxsize=None)
def projection_pair(d):
    k = KERNELS["FFamily"]
    return sch.schoenberg_coeffs(k, d, 20), sch.schoenberg_coeffs(k, d, 20, route="projection")


def timed(fn):
    t0 = time.perf_counter()
    value = fn()
    return value, time.perf_counter() - t0


# -- criteria -----------------------------------------------------------------------


def criterion_1():
    def work():
        worst = 0.0
        for name in KERNELS:
            for d in DIMS:
                seqs = cell(name, d)
                q = seqs["quadrature"].coeffs
                sel = np.abs(q) > 1e-12
                for route in ("closed", "projection"):
                    if route in seqs:
                        rel = np.abs(seqs[route].coeffs - q)[sel] / np.abs(q[sel])
                        worst = max(worst, float(rel.max()))
        return worst

    worst, secs = timed(work)
    ok = worst <= 1e-6 and secs <= 60
    return ok, f"max relative deviation {worst:.2e} (tol 1e-6) over 9 cells, m <= 30; {secs:.1f} s (limit 60 s)"


def criterion_2():
    def work():
        delta_err = 0.0
        for d in (2, 3, 5, 10):
            for n in (0, 1):
                c = np.zeros(4)
                c[n] = 1.0
                s = sch.project_to_sphere(sch.SchoenbergSequence(sch.HILBERT, c, 0.0, "ClosedForm"), d, 3)
                want = np.zeros(4)
                want[n] = 1.0
                delta_err = max(delta_err, float(np.max(np.abs(s.coeffs - want))))
        route_err = 0.0
        for d in (2, 3, 5):
            closed, proj = projection_pair(d)
            route_err = max(route_err, float(np.max(np.abs(closed.coeffs - proj.coeffs))))
        return delta_err, route_err

    (delta_err, route_err), secs = timed(work)
    ok = delta_err <= 1e-12 and route_err <= 1e-8 and secs <= 10
    return ok, (f"delta sequences max error {delta_err:.1e} (tol 1e-12, d in 2,3,5,10); "
                f"F projection vs closed form {route_err:.1e} (tol 1e-8, d in 2,3,5, m <= 20); {secs:.1f} s")


def criterion_3():
    def work():
        return {name: sobolev.fit_decay(long_sequence(name), FIT_RANGE).beta for name in KERNELS}

    betas, secs = timed(work)
    rel = {n: abs(b / BETA[n] - 1) for n, b in betas.items()}
    ok = all(rel[n] <= BETA_TOL[n] for n in betas) and secs <= 120
    parts = ", ".join(f"{n} {betas[n]:.4f}/{BETA[n]} ({rel[n]:.2%})" for n in betas)
    return ok, f"beta over m in [200, 2000], d=2: {parts}; {secs:.1f} s (limit 120 s)"


def criterion_4():
    ratios = {}
    for name in ("Matern", "FFamily"):
        r = sobolev.asymptote_ratio(long_sequence(name), sobolev.family_asymptote(KERNELS[name], 2), (2000, 2000))
        ratios[name] = float(r[0])
    lo, hi = sobolev.wendland_sandwich(long_sequence("Wendland"), 1.0, 0.75, (50, 500))
    ok = all(0.95 <= r <= 1.05 for r in ratios.values()) and hi / lo <= 10
    parts = ", ".join(f"{n} r_2000 = {r:.5f}" for n, r in ratios.items())
    return ok, f"{parts} (window [0.95, 1.05]); Wendland sandwich [{lo:.1f}, {hi:.1f}], max/min {hi / lo:.3f} (limit 10)"


def criterion_5():
    theta = np.linspace(0.0, math.pi, 50)
    worst_margin = -math.inf
    worst_err = 0.0
    for name, k in KERNELS.items():
        for d in DIMS:
            s = cell(name, d)["closed"]
            err = float(np.max(np.abs(sch.reconstruct_kernel(s, theta) - eval_kernel(k, theta))))
            worst_err = max(worst_err, err)
            worst_margin = max(worst_margin, err - (s.tail_bound + 1e-8))
    return worst_margin <= 0, f"max |reconstruction - kernel| {worst_err:.2e}; worst excess over tail_bound + 1e-8: {worst_margin:.2e}"


def criterion_6():
    seqs = [s for name in KERNELS for d in DIMS for s in cell(name, d).values()]
    seqs += [long_sequence(name) for name in KERNELS]
    seqs += [s for d in (2, 3, 5) for s in projection_pair(d)]
    dev = max(abs(s.mass - 1.0) for s in seqs)
    return dev <= 1e-6, f"max |sum b + tail_bound - 1| = {dev:.2e} over {len(seqs)} sequences (tol 1e-6)"


def criterion_7():
    grid = [100, 200, 400, 800, 1600, 3200]
    study, secs = timed(lambda: rate_study(KERNELS["Matern"], 2, grid, "Fibonacci"))
    ok = -1.44 <= study.slope <= -1.06 and secs <= 600
    return ok, f"slope {study.slope:.4f} (window [-1.44, -1.06]), wce {study.wce[0]:.3e} -> {study.wce[-1]:.3e}; {secs:.1f} s"


def criterion_8():
    rng = np.random.default_rng(20240601)
    self_err = asym = 0.0
    worse = 0
    for i in range(20):
        name = list(KERNELS)[i % 3]
        k = KERNELS[name]
        d = int(rng.integers(2, 5))
        n = int(rng.integers(10, 80))
        a = equal_weight_rule("UniformRandom", n, d, seed=int(rng.integers(2**31)))
        pts_b = generate_points("UniformRandom", int(rng.integers(10, 80)), d, seed=int(rng.integers(2**31)))
        wb = rng.uniform(0.1, 1.0, size=pts_b.shape[0])
        b = CubatureRule(pts_b, wb / wb.sum(), weight_mode=WeightMode.EQUAL)
        self_err = max(self_err, discrepancy_between(k, a, a))
        asym = max(asym, abs(discrepancy_between(k, a, b) - discrepancy_between(k, b, a)))
        opt = optimal_weights(k, a)
        if worst_case_error(k, opt).wce > worst_case_error(k, a).wce:
            worse += 1
    ok = self_err <= 1e-8 and asym <= 1e-12 and worse == 0
    return ok, (f"D(a, a) max {self_err:.1e} (tol 1e-8); |D(a, b) - D(b, a)| max {asym:.1e} (tol 1e-12); "
                f"optimal worse than equal in {worse}/20 configurations")


def criterion_9():
    rng = np.random.default_rng(7)
    hyp = 0.0
    for _ in range(100):
        a, b, z = rng.uniform(-1, 1, size=3)
        v = pfq(PFQParams([a, b], [b], z)).value
        hyp = max(hyp, abs(v / (1 - z) ** -a - 1))
    x = np.cos(np.linspace(0, math.pi, 201))
    norm_err = bound_excess = ref_err = 0.0
    for lam in (0.0, 0.5, 1.0, 2.5, 4.5):
        r = specfun.gegenbauer_ratios(200, lam, np.append(x, 1.0))
        norm_err = max(norm_err, float(np.max(np.abs(r[:, -1] - 1.0))))
        bound_excess = max(bound_excess, float(np.max(np.abs(r)) - 1.0))
        if lam > 0:
            for m in (3, 10, 25):
                want = special.eval_gegenbauer(m, lam, x) / special.eval_gegenbauer(m, lam, 1.0)
                ref_err = max(ref_err, float(np.max(np.abs(r[m, :-1] - want))))
    xs = np.geomspace(1e-3, 700, 60)
    k_err = max(abs(specfun.bessel_k(0.5, t) / (math.sqrt(math.pi / (2 * t)) * math.exp(-t)) - 1) for t in xs)
    ok = hyp <= 1e-10 and norm_err == 0.0 and bound_excess <= 0.0 and ref_err <= 1e-12 and k_err <= 1e-10
    return ok, (f"2F1(a,b;b;z) max rel {hyp:.1e} (tol 1e-10, 100 cases); Gegenbauer R(1) error {norm_err:.0e}, "
                f"max |R| - 1 = {bound_excess:.1e}, vs scipy {ref_err:.1e}; K_1/2 max rel {k_err:.1e} (tol 1e-10)")


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 10)}


def evaluate(i):
    try:
        ok, detail = CRITERIA[i]()
    except Exception as exc:  # a crash is a failure of the criterion, reported as such
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    RESULTS[i] = (ok, detail)
    return ok, detail


def summary_line(i):
    ok, detail = RESULTS[i]
    return f"[{'PASS' if ok else 'FAIL'}] criterion {i} ({TITLES[i]}): {detail}"


@pytest.mark.parametrize("i", list(CRITERIA))
def test_criterion(i):
    ok, _ = evaluate(i)
    print(summary_line(i))
    assert ok, summary_line(i)


if __name__ == "__main__":
    for i in CRITERIA:
        evaluate(i)
        print(summary_line(i), flush=True)
