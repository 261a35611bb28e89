import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphkern.errors import DimensionMismatchError, DomainError, KernelParameterError
from sphkern.kernels import IsotropicKernel
from sphkern.schoenberg import FourierSequence, Provenance, SchoenbergSequence, harmonic_dim, schoenberg_coeffs
from sphkern.sobolev import (
    HarmonicCoefficients,
    asymptote_ratio,
    family_asymptote,
    ffamily_asymptote,
    fit_decay,
    matern_asymptote,
    native_inner,
    native_norm_sq,
    sobolev_norm_sq,
    wendland_sandwich,
)


def power_fourier(d, M, expo, scale=1.0):
    m = np.arange(M + 1)
    return FourierSequence(d, scale * (1.0 + m) ** -expo)


def random_coeffs(rng, d, degrees, count=12):
    entries, used = [], set()
    while len(entries) < count:
        m = int(rng.choice(degrees))
        n = int(rng.integers(1, harmonic_dim(m, d) + 1))
        if (m, n) not in used:
            used.add((m, n))
            entries.append((m, n, float(rng.normal())))
    return HarmonicCoefficients(d, tuple(entries))


@pytest.fixture(scope="module")
def matern_long():
    return schoenberg_coeffs(IsotropicKernel.matern(1.5, 1.0), 2, 2000)


@pytest.fixture(scope="module")
def ffamily_long():
    return schoenberg_coeffs(IsotropicKernel.ffamily(1.0, 1.0, 1.0), 2, 2000)


class TestHarmonicCoefficients:
    def test_index_bounds(self):
        HarmonicCoefficients(2, ((2, 5, 1.0),))
        with pytest.raises(ValueError):
            HarmonicCoefficients(2, ((2, 6, 1.0),))
        with pytest.raises(ValueError):
            HarmonicCoefficients(2, ((2, 0, 1.0),))

    def test_duplicates(self):
        with pytest.raises(ValueError):
            HarmonicCoefficients(3, ((1, 1, 1.0), (1, 1, 2.0)))

    def test_truncation(self):
        assert HarmonicCoefficients(2, ((4, 1, 1.0),)).truncation == 4
        with pytest.raises(ValueError):
            HarmonicCoefficients(2, ((4, 1, 1.0),), truncation=3)

    def test_sorted_storage(self):
        f = HarmonicCoefficients(2, ((3, 2, 1.0), (0, 1, 2.0)))
        assert f.entries[0] == (0, 1, 2.0)
        assert f.as_dict()[(3, 2)] == 1.0


class TestNorms:
    psi = power_fourier(2, 20, 4.0)

    def test_single_entry(self):
        f = HarmonicCoefficients(2, ((3, 2, 1.5),))
        assert native_norm_sq(f, self.psi) == pytest.approx(1.5**2 / self.psi.coeffs[3], rel=1e-15)

    def test_zero(self):
        assert native_norm_sq(HarmonicCoefficients(2, ()), self.psi) == 0.0

    def test_additive(self):
        a = HarmonicCoefficients(2, ((1, 1, 0.3),))
        b = HarmonicCoefficients(2, ((4, 7, -2.0),))
        ab = HarmonicCoefficients(2, a.entries + b.entries)
        assert native_norm_sq(ab, self.psi) == pytest.approx(native_norm_sq(a, self.psi) + native_norm_sq(b, self.psi))

    def test_inner_consistency(self):
        rng = np.random.default_rng(1)
        f = random_coeffs(rng, 2, range(10))
        g = random_coeffs(rng, 2, range(10))
        assert native_inner(f, f, self.psi) == pytest.approx(native_norm_sq(f, self.psi), rel=1e-15)
        assert native_inner(f, g, self.psi) == pytest.approx(native_inner(g, f, self.psi), rel=1e-14)
        assert native_inner(f, g, self.psi) ** 2 <= native_norm_sq(f, self.psi) * native_norm_sq(g, self.psi)

    def test_accepts_schoenberg_sequence(self):
        s = SchoenbergSequence(2, [0.5, 0.3, 0.2], 0.0, Provenance.CLOSED_FORM)
        f = HarmonicCoefficients(2, ((0, 1, 1.0),))
        assert native_norm_sq(f, s) == pytest.approx(1 / (0.5 * 4 * math.pi))

    def test_errors(self):
        f = HarmonicCoefficients(2, ((25, 1, 1.0),))
        with pytest.raises(ValueError):
            native_norm_sq(f, self.psi)
        with pytest.raises(DomainError):
            native_norm_sq(HarmonicCoefficients(2, ((1, 1, 1.0),)), FourierSequence(2, [1.0, 0.0]))
        with pytest.raises(DimensionMismatchError):
            native_norm_sq(HarmonicCoefficients(3, ((1, 1, 1.0),)), self.psi)

    def test_sobolev_examples(self):
        f = HarmonicCoefficients(2, ((3, 1, 2.0),))
        assert sobolev_norm_sq(f, 1.0) == 64.0
        g = HarmonicCoefficients(2, ((0, 1, 3.0), (2, 4, 4.0)))
        assert sobolev_norm_sq(g, 0.0) == 25.0

    @given(st.floats(0.0, 4.0), st.integers(0, 2**31))
    @settings(max_examples=30, deadline=None)
    def test_coincidence(self, gamma, seed):
        rng = np.random.default_rng(seed)
        f = random_coeffs(rng, 3, range(15))
        psi = FourierSequence(3, (1.0 + np.arange(16)) ** (-2 * gamma))
        assert native_norm_sq(f, psi) == pytest.approx(sobolev_norm_sq(f, gamma), rel=1e-12)


class TestFitDecay:
    def test_exact_power_law(self):
        fit = fit_decay(power_fourier(2, 400, 2 + 1.7, 3.0), (10, 400))
        assert fit.gamma_hat == pytest.approx(1.7, abs=1e-10)
        assert fit.beta == pytest.approx(1.85, abs=1e-10)
        assert fit.constant_hat == pytest.approx(3.0, rel=1e-9)
        assert fit.residual < 1e-9
        assert fit.embeds_continuously

    @given(st.floats(1e-3, 1e3))
    @settings(max_examples=20, deadline=None)
    def test_scale_equivariance(self, c):
        rng = np.random.default_rng(3)
        base = (1.0 + np.arange(200)) ** -3.3 * np.exp(0.05 * rng.normal(size=200))
        a = fit_decay(FourierSequence(2, base))
        b = fit_decay(FourierSequence(2, c * base))
        assert b.gamma_hat == pytest.approx(a.gamma_hat, abs=1e-9)
        assert b.constant_hat == pytest.approx(c * a.constant_hat, rel=1e-9)

    def test_default_range(self):
        assert fit_decay(power_fourier(2, 100, 5.0)).fit_range == (25, 100)

    def test_no_embedding(self):
        fit = fit_decay(power_fourier(3, 100, 2.5))
        assert fit.beta == pytest.approx(1.25) and not fit.embeds_continuously

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_decay(power_fourier(2, 50, 4.0), (40, 60))
        with pytest.raises(ValueError):
            fit_decay(power_fourier(2, 50, 4.0), (10, 11))
        c = np.ones(20)
        c[12] = 0.0
        with pytest.raises(DomainError):
            fit_decay(FourierSequence(2, c), (5, 19))

    def test_dict(self):
        d = fit_decay(power_fourier(2, 100, 5.0)).to_dict()
        assert set(d) >= {"gamma_hat", "beta", "constant_hat", "sandwich", "fit_range", "residual", "embeds_continuously"}

    @given(st.integers(0, 2**31))
    @settings(max_examples=20, deadline=None)
    def test_norm_equivalence_sandwich(self, seed):
        rng = np.random.default_rng(seed)
        lo, hi = 20, 120
        psi = FourierSequence(2, (1.0 + np.arange(hi + 1)) ** -4.2 * np.exp(0.2 * rng.uniform(size=hi + 1)))
        fit = fit_decay(psi, (lo, hi))
        a1, a2 = fit.sandwich
        f = random_coeffs(rng, 2, range(lo, hi + 1), count=20)
        nat, sob = native_norm_sq(f, psi), sobolev_norm_sq(f, fit.beta)
        assert a1 * nat <= sob * (1 + 1e-12)
        assert sob <= a2 * nat * (1 + 1e-12)

    def test_matern_beta(self, matern_long):
        assert fit_decay(matern_long, (200, 2000)).beta == pytest.approx(2.5, rel=0.02)


class TestAsymptotes:
    def test_identity_on_power_law(self):
        m = np.arange(301)
        s = SchoenbergSequence(2, np.where(m == 0, 1.0, 2.0 * np.maximum(m, 1) ** -4.0), 0.0, Provenance.CLOSED_FORM)
        r = asymptote_ratio(s, lambda k: 2.0 * k**-4.0)
        np.testing.assert_allclose(r, 1.0, rtol=1e-15)

    def test_matern(self, matern_long):
        r = asymptote_ratio(matern_long, matern_asymptote(1.5, 1.0, 2), (500, 2000))
        assert abs(r[-1] - 1) <= 0.05
        assert abs(r[-1] - 1) < abs(r[500] - 1) < abs(r[0] - 1)

    def test_ffamily(self, ffamily_long):
        r = asymptote_ratio(ffamily_long, ffamily_asymptote(1.0, 1.0, 1.0, 2), (500, 2000))
        assert abs(r[-1] - 1) <= 0.05
        assert abs(r[-1] - 1) < abs(r[500] - 1) < abs(r[0] - 1)

    def test_family_dispatch(self):
        k = IsotropicKernel.matern(1.5, 1.0)
        assert family_asymptote(k, 2)(10.0) == matern_asymptote(1.5, 1.0, 2)(10.0)
        with pytest.raises(KernelParameterError):
            family_asymptote(IsotropicKernel.wendland(4.0, 1.0, 0.75), 2)

    def test_range_check(self, matern_long):
        with pytest.raises(ValueError):
            asymptote_ratio(matern_long, lambda m: m, (10, 5000))

    def test_wendland_sandwich(self):
        s = schoenberg_coeffs(IsotropicKernel.wendland(4.0, 1.0, 0.75), 2, 500)
        lo, hi = wendland_sandwich(s, 1.0, 0.75)
        assert 0 < lo <= hi < 10 * lo
        with pytest.raises(ValueError):
            wendland_sandwich(s, 1.0, 0.75, (50, 600))
