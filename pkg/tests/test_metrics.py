import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from malab.metrics import (
    ExponentFit,
    HolderEstimate,
    SampleSet,
    fd_partial22_line,
    fit_exponent,
    holder_seminorm,
    oscillation,
)


def line_samples(f, n=1001, lo=0.0, hi=1.0):
    t = np.linspace(lo, hi, n)
    return SampleSet(t, f(t))


class TestHolderSeminorm:
    def test_sqrt_profile(self):
        s = line_samples(lambda t: np.abs(t) ** 0.5)
        est = holder_seminorm(s, alpha=0.5)
        assert est.value == pytest.approx(1.0, rel=1e-12)
        assert est.witness[0] == 0  # pairs containing the origin attain the sup

    def test_constant(self):
        s = line_samples(lambda t: np.full_like(t, 3.7), n=50)
        assert holder_seminorm(s, 0.5).value == 0.0

    def test_linear_lipschitz(self):
        s = line_samples(lambda t: t, n=500)
        assert holder_seminorm(s, 1.0).value == pytest.approx(1.0, rel=1e-12)

    def test_witness_reproduces_value(self):
        rng = np.random.default_rng(0)
        s = SampleSet(np.sort(rng.uniform(0, 1, 200)), rng.normal(size=200))
        est = holder_seminorm(s, 0.3)
        assert est.check_witness(s) == est.value

    def test_subsampled_lower_bound_2d(self):
        rng = np.random.default_rng(1)
        pts = rng.uniform(-1, 1, size=(900, 2))
        vals = np.sin(3 * pts[:, 0]) + np.abs(pts[:, 1]) ** 0.4
        s = SampleSet(pts, vals)
        full = holder_seminorm(s, 0.4, strategy="exhaustive")
        sub = holder_seminorm(s, 0.4, strategy="subsampled")
        assert sub.value <= full.value * (1 + 1e-12)
        assert sub.value >= 0.6 * full.value  # refinement finds a good pair

    def test_subsampled_equals_exhaustive_1d(self):
        # 1D inputs of <= 2000 samples fall back to the exhaustive search
        t = np.linspace(0, 1, 1500)
        s = SampleSet(t, np.abs(t - 0.37) ** 0.5)
        a = holder_seminorm(s, 0.5, strategy="exhaustive")
        b = holder_seminorm(s, 0.5, strategy="subsampled")
        assert a.value == b.value

    def test_scaling_law(self):
        t = np.linspace(0, 1, 400)
        v = np.abs(t) ** 0.5 + 0.2 * np.sin(5 * t)
        alpha = 0.5
        base = holder_seminorm(SampleSet(t, v), alpha).value
        scaled = holder_seminorm(SampleSet(2 * t, v), alpha).value
        assert scaled == pytest.approx(base * 2**-alpha, rel=1e-12)

    def test_requires_two_samples(self):
        with pytest.raises(ValueError):
            holder_seminorm(SampleSet(np.array([0.0]), np.array([1.0])), 0.5)

    @settings(max_examples=5, deadline=None)
    @given(seed=st.integers(0, 100))
    def test_monotone_in_alpha(self, seed):
        # for samples with diameter <= 1 every quotient |dv| / d^alpha is
        # nondecreasing in alpha, hence so is the seminorm
        rng = np.random.default_rng(seed)
        t = np.sort(rng.uniform(0, 1, 60))
        s = SampleSet(t, rng.normal(size=60))
        vals = [holder_seminorm(s, a).value for a in (0.9, 0.6, 0.3)]
        assert vals[0] >= vals[1] >= vals[2]


class TestFdLine:
    def test_quadratic(self):
        f = lambda p: 0.5 * (p[:, 0] ** 2 + p[:, 1] ** 2)
        s = fd_partial22_line(f, np.linspace(-0.5, 0.5, 11), 0.01)
        np.testing.assert_allclose(s.values, 1.0, atol=1e-9)

    def test_model_vertical_second_derivative(self):
        from malab.model import ModelSolution, eval_u
        from malab.profile import ProfileParams, build_profile

        ms = ModelSolution(build_profile(ProfileParams(gamma=2.0, stage="g0")))
        f = lambda p: eval_u(ms, p)
        s = fd_partial22_line(f, np.array([1.0]), 1e-4)
        assert s.values[0] == pytest.approx(0.25, abs=1e-6)

    def test_step_halving_quadratic_convergence(self):
        f = lambda p: np.cos(p[:, 1])
        x2 = np.array([0.3])
        e1 = abs(fd_partial22_line(f, x2, 1e-2).values[0] + np.cos(0.3))
        e2 = abs(fd_partial22_line(f, x2, 5e-3).values[0] + np.cos(0.3))
        assert e1 / e2 >= 3.5


class TestOscillation:
    def test_constant(self):
        s = line_samples(lambda t: np.ones_like(t), n=20)
        assert oscillation(s, (0, 1)) == 0.0

    def test_monotone(self):
        s = line_samples(lambda t: t, n=101)
        assert oscillation(s, (0, 1)) == pytest.approx(1.0)

    def test_empty_window(self):
        s = line_samples(lambda t: t, n=10)
        with pytest.raises(ValueError):
            oscillation(s, (2.0, 3.0))

    def test_model_blowup(self):
        from malab.model import ModelSolution, eval_u
        from malab.profile import ProfileParams, build_profile

        ms = ModelSolution(build_profile(ProfileParams(gamma=2.0, stage="g0")))
        f = lambda p: eval_u(ms, p)
        x2 = np.geomspace(0.01, 0.5, 25)
        s = fd_partial22_line(f, x2, x2 / 64)
        wide = oscillation(s, (0.01, 0.5))
        narrow = oscillation(s, (0.1, 0.5))
        assert wide > narrow > 0


class TestFitExponent:
    def test_exact_power(self):
        rs = [0.1, 0.05, 0.025]
        fit = fit_exponent([(r, r ** (-1 / 3)) for r in rs])
        assert fit.slope == pytest.approx(-1 / 3, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_constant(self):
        fit = fit_exponent([(r, 2.0) for r in (0.1, 0.2, 0.4)])
        assert fit.slope == pytest.approx(0.0, abs=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            fit_exponent([(0.1, 1.0), (0.2, -1.0), (0.4, 2.0)])
        with pytest.raises(ValueError):
            fit_exponent([(0.1, 1.0), (0.2, 1.0)])

    def test_predict_roundtrip(self):
        fit = fit_exponent([(r, 3.0 * r**-0.5) for r in (0.1, 0.05, 0.025, 0.0125)])
        assert fit.predict(0.05) == pytest.approx(3.0 * 0.05**-0.5, rel=1e-10)
