import numpy as np
import pytest

from malab.profile import (
    BoundaryProfile,
    PositivityError,
    ProfileError,
    ProfileParams,
    SeamDerivativeError,
    F_op,
    F_tilde_op,
    build_profile,
    eval_g,
    eval_g_tilde,
    mollification_proximity,
    rhs_bounds,
)


def baseline(gamma, **kw):
    return build_profile(ProfileParams(gamma=gamma, stage="g0", **kw))


@pytest.fixture(scope="module")
def mollified_g2():
    return build_profile(
        ProfileParams(gamma=2.0, t0=0.05, t0_tilde=0.05, moll_eps=1e-3, cutoff_width=0.02)
    )


class TestStages:
    def test_g0_closed_form(self):
        prof = baseline(2.0)
        assert eval_g(prof, 0.0) == pytest.approx(1.0 / 3.0, abs=1e-15)
        assert eval_g(prof, 1.0) == pytest.approx(2.0 / 3.0, abs=1e-15)
        t = np.linspace(-2, 2, 41)
        np.testing.assert_allclose(
            eval_g(prof, t), (1 + np.abs(t) ** 3) / 3, rtol=0, atol=1e-15
        )

    def test_g1_coefficients(self):
        prof = build_profile(ProfileParams(gamma=2.0, t0=0.1, stage="g1"))
        assert prof.a == pytest.approx(0.9995, abs=1e-15)
        assert prof.b == pytest.approx(0.15, abs=1e-15)
        # C1 matching at +-t0 by one-sided finite differences
        for s in (-0.1, 0.1):
            h = 1e-7
            left = (eval_g(prof, s) - eval_g(prof, s - h)) / h
            right = (eval_g(prof, s + h) - eval_g(prof, s)) / h
            assert left == pytest.approx(right, abs=1e-5)
        assert eval_g(prof, 0.05, order=2) == pytest.approx(0.1, abs=1e-14)

    def test_g2_tilde_coefficients(self):
        prof = build_profile(ProfileParams(gamma=2.0, t0=0.05, t0_tilde=0.1, stage="g2"))
        at = 1 + 0.25 * 0.1**1.5
        bt = 0.75 * 0.1**-0.5
        assert prof.a_tilde == pytest.approx(at, abs=1e-15)
        assert prof.b_tilde == pytest.approx(bt, abs=1e-15)
        assert eval_g_tilde(prof, 0.05) == pytest.approx((at + bt * 0.0025) / 3, rel=1e-14)

    def test_mollified_close_to_g2(self):
        prox = mollification_proximity(
            build_profile(ProfileParams(gamma=2.0, t0=0.1, t0_tilde=0.1, moll_eps=1e-3))
        )
        assert prox["total"] <= 10 * 1e-3

    def test_invalid_params_rejected(self):
        with pytest.raises(ProfileError):
            ProfileParams(gamma=1.0)
        with pytest.raises(ProfileError):
            ProfileParams(gamma=2.0, t0=0.0, stage="g1")
        with pytest.raises(ProfileError):
            ProfileParams(gamma=2.0, moll_eps=0.05, cutoff_width=0.02)


class TestOperators:
    @pytest.mark.parametrize("gamma", [1.5, 2.0, 3.0])
    def test_baseline_identity(self, gamma):
        prof = baseline(gamma)
        t = np.linspace(-3, 3, 200)
        err = np.abs(F_op(prof, t) - np.abs(t) ** (gamma - 1) / gamma)
        assert np.max(err) <= 1e-10

    def test_baseline_point_values(self):
        prof = baseline(2.0)
        assert F_op(prof, 1.0) == pytest.approx(0.5, abs=1e-14)
        assert F_op(prof, 0.0) == pytest.approx(0.0, abs=1e-14)

    def test_g1_center_value(self):
        prof = build_profile(ProfileParams(gamma=2.0, t0=0.1, stage="g1"))
        expect = 2 * 3 * prof.a * prof.b / (4 * 9)
        assert expect == pytest.approx(0.0249875, abs=1e-7)
        assert F_op(prof, 0.0) == pytest.approx(expect, rel=1e-12)

    def test_F_and_F_tilde_agree_at_one(self, mollified_g2):
        assert F_op(mollified_g2, 1.0) == pytest.approx(
            F_tilde_op(mollified_g2, 1.0), rel=1e-10
        )

    def test_F_tilde_center_g2(self):
        prof = build_profile(ProfileParams(gamma=2.0, t0=0.05, t0_tilde=0.1, stage="g2"))
        gm = 2.0
        expect = 2 * gm * prof.a_tilde * prof.b_tilde / (gm + 1)
        assert F_tilde_op(prof, 0.0) == pytest.approx(expect, rel=1e-12)
        assert expect > 0

    def test_evenness(self, mollified_g2):
        t = np.linspace(0.001, 2.5, 57)
        np.testing.assert_array_equal(F_op(mollified_g2, t), F_op(mollified_g2, -t))
        np.testing.assert_array_equal(
            F_tilde_op(mollified_g2, t), F_tilde_op(mollified_g2, -t)
        )
        np.testing.assert_array_equal(eval_g(mollified_g2, t), eval_g(mollified_g2, -t))

    def test_seam_derivative_undefined(self):
        prof = build_profile(ProfileParams(gamma=2.0, t0=0.05, t0_tilde=0.05, stage="g2"))
        with pytest.raises(SeamDerivativeError):
            eval_g(prof, 0.05, order=2)
        with pytest.raises(SeamDerivativeError):
            F_op(prof, prof.params.outer_seam)

    def test_infinity_via_matched_tail(self, mollified_g2):
        assert eval_g(mollified_g2, np.inf) == np.inf
        assert F_op(mollified_g2, np.inf) == pytest.approx(
            F_tilde_op(mollified_g2, 0.0), rel=1e-12
        )
        assert np.isfinite(eval_g_tilde(mollified_g2, 0.0))


class TestMatching:
    def test_matching_relation_orders_0_1(self, mollified_g2):
        gm = mollified_g2.gamma
        t = np.linspace(0.5, 2.0, 97)
        lhs = eval_g_tilde(mollified_g2, t)
        rhs = t ** ((gm + 1) / gm) * eval_g(mollified_g2, t ** (-1 / gm))
        assert np.max(np.abs(lhs - rhs)) <= 1e-9
        # differentiated matching relation
        beta = (gm + 1) / gm
        lhs1 = eval_g_tilde(mollified_g2, t, order=1)
        rhs1 = beta * t ** (1 / gm) * eval_g(mollified_g2, t ** (-1 / gm)) - eval_g(
            mollified_g2, t ** (-1 / gm), order=1
        ) / gm
        assert np.max(np.abs(lhs1 - rhs1)) <= 1e-9

    def test_identity_at_one(self, mollified_g2):
        assert eval_g_tilde(mollified_g2, 1.0) == pytest.approx(
            eval_g(mollified_g2, 1.0), rel=1e-12
        )


class TestAudit:
    def test_default_widths_positive(self, mollified_g2):
        lam, Lam, report = rhs_bounds(mollified_g2, samples=801)
        assert lam > 0
        assert np.isfinite(Lam)
        assert report["ok"]

    def test_g0_reports_zero_at_origin(self):
        lam, Lam, report = rhs_bounds(baseline(2.0), samples=401)
        assert lam == pytest.approx(0.0, abs=1e-12)
        assert report["argmin_t"] == pytest.approx(0.0, abs=1e-12)
        assert not report["ok"]

    def test_strict_raises(self):
        with pytest.raises(PositivityError):
            rhs_bounds(baseline(2.0), samples=101, strict=True)

    def test_seam_continuity(self, mollified_g2):
        for rec in mollified_g2.seam_residuals():
            assert rec["jump_g"] <= 1e-8
            assert rec["jump_dg"] <= 1e-8
        # mollified second derivative is continuous across seams
        for seam in (0.05, 0.05**-0.5):
            left = eval_g(mollified_g2, seam - 1e-9, order=2)
            right = eval_g(mollified_g2, seam + 1e-9, order=2)
            assert abs(left - right) <= 1e-6


class TestTables:
    def test_interpolation_error_small(self, mollified_g2):
        # spline versus direct re-tabulation at off-node points
        tab = mollified_g2.tables[0]
        ts = np.linspace(tab.lo, tab.hi, 37)
        v0 = tab.spline0(ts)
        assert np.all(np.isfinite(v0))
        # g stays within a hair of the unmollified profile away from the seam
        g2prof = build_profile(
            ProfileParams(gamma=2.0, t0=0.05, t0_tilde=0.05, moll_eps=1e-3,
                          cutoff_width=0.02, stage="g2")
        )
        mask = np.abs(ts - 0.05) > 5e-3
        diff = np.abs(v0[mask] - eval_g(g2prof, ts[mask]))
        assert np.max(diff) <= 2e-3
