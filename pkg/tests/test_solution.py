import math

import numpy as np
import pytest

from sinlog.field import CoefficientSchedule, build_potential, field_many
from sinlog.sets import FiniteSet
from sinlog.solution import (
    LocalFrame,
    ProbeFrame,
    Solution,
    classical_residual,
    eval_grad_u,
    eval_rhs,
    eval_u,
    fd_laplacian,
    five_point_laplacian,
    grad_norm_sq,
    oscillation_report,
    radial_probe,
    smooth_point_oscillation,
)

from conftest import far_samples


class TestEvalU:
    def test_unit_circle(self, rng, default_solution):
        pts = far_samples(rng, default_solution, 10_000, margin=1e-6)
        f, _ = field_many(default_solution.potential, pts)
        norm = np.sin(np.log(f)) ** 2 + np.cos(np.log(f)) ** 2
        assert np.max(np.abs(norm - 1.0)) <= 1e-12

    def test_f_equal_one_gives_0_1(self):
        # at the boundary of B(0, 1/e) the single log term is exactly 1
        pot, _ = build_potential(FiniteSet(((0.0, 0.0),)),
                                 CoefficientSchedule(ratio=0.5), 1 / math.e, 1)
        sol = Solution(pot)
        u1, u2 = eval_u(sol, (1 / math.e, 0.0))
        assert u1 == pytest.approx(0.0, abs=1e-15)
        assert u2 == pytest.approx(1.0, abs=1e-15)

    def test_single_log_reduction_at_e_minus_e(self, single_log_solution):
        sol = single_log_solution(radius=1 / math.e)
        u1, u2 = eval_u(sol, (math.exp(-math.e), 0.0))
        assert u1 == pytest.approx(math.sin(1.0), abs=1e-13)
        assert u2 == pytest.approx(math.cos(1.0), abs=1e-13)

    def test_single_log_reduction_formula(self, rng, single_log_solution):
        sol = single_log_solution(radius=1 / math.e)
        pts = far_samples(rng, sol, 200, margin=1e-3)
        for x in pts:
            u1, u2 = eval_u(sol, x)
            t = math.log(math.log(1.0 / np.hypot(*x)))
            assert u1 == pytest.approx(math.sin(t), abs=1e-12)
            assert u2 == pytest.approx(math.cos(t), abs=1e-12)


class TestGradU:
    def test_hand_value(self):
        # f = e with grad f = (1, 0) gives the displayed chain-rule rows
        pot, _ = build_potential(FiniteSet(((0.0, 0.0),)),
                                 CoefficientSchedule(ratio=0.5), 1 / math.e, 1)
        sol = Solution(pot)
        x = (math.exp(-math.e), 0.0)  # f = e, grad f = -x/|x|^2 along x1
        g = eval_grad_u(sol, x)
        gf = -1.0 / math.exp(-math.e)
        assert g[0] == pytest.approx([gf / math.e * math.cos(1.0), 0.0], rel=1e-12)
        assert g[1] == pytest.approx([-gf / math.e * math.sin(1.0), 0.0], rel=1e-12)

    def test_frobenius_equals_grad_norm_sq(self, rng, default_solution):
        pts = far_samples(rng, default_solution, 10_000, margin=1e-6)
        f, grad = field_many(default_solution.potential, pts)
        gns = np.sum(grad * grad, axis=1) / f ** 2
        c, s = np.cos(np.log(f)), np.sin(np.log(f))
        frob = (np.sum(grad * grad, axis=1) * (c / f) ** 2
                + np.sum(grad * grad, axis=1) * (s / f) ** 2)
        assert np.max(np.abs(frob - gns) / gns) <= 1e-12

    def test_row_orthogonality_identity(self, rng, default_solution):
        pts = far_samples(rng, default_solution, 100)
        for x in pts:
            g = eval_grad_u(default_solution, x)
            f, grad = field_many(default_solution.potential,
                                 np.asarray(x)[None, :])
            theta = math.log(f[0])
            expect = -(grad[0] @ grad[0]) / f[0] ** 2 \
                * math.sin(theta) * math.cos(theta)
            assert float(g[0] @ g[1]) == pytest.approx(expect, rel=1e-12, abs=1e-18)

    def test_matches_central_differences(self, rng, default_solution):
        pts = far_samples(rng, default_solution, 10)
        h = 1e-6
        for x in pts:
            g = eval_grad_u(default_solution, x)
            fd = np.zeros((2, 2))
            for ax in range(2):
                step = np.zeros(2)
                step[ax] = h
                up = np.array(eval_u(default_solution, x + step))
                dn = np.array(eval_u(default_solution, x - step))
                fd[:, ax] = (up - dn) / (2 * h)
            assert np.max(np.abs(fd - g)) / np.max(np.abs(g)) <= 1e-6

    def test_grad_norm_sq_single_log(self, single_log_solution):
        sol = single_log_solution(radius=1 / math.e)
        x = (0.1, 0.05)
        rho = np.hypot(*x)
        expect = 1.0 / (rho ** 2 * math.log(1 / rho) ** 2)
        assert grad_norm_sq(sol, x) == pytest.approx(expect, rel=1e-13)


class TestRhs:
    def test_reduction_point(self):
        # u = (0, 1) at the boundary point where f = 1
        pot, _ = build_potential(FiniteSet(((0.0, 0.0),)),
                                 CoefficientSchedule(ratio=0.5), 1 / math.e, 1)
        sol = Solution(pot)
        x = (1 / math.e - 1e-12, 0.0)
        F = eval_rhs(sol, x)
        gns = grad_norm_sq(sol, x)
        assert F.F1 == pytest.approx(-gns, rel=1e-9)
        assert F.F2 == pytest.approx(-gns, rel=1e-9)

    def test_bound_and_reduced_form(self, rng, default_solution):
        pts = far_samples(rng, default_solution, 10_000, margin=1e-6)
        f, grad = field_many(default_solution.potential, pts)
        theta = np.log(f)
        u1, u2 = np.sin(theta), np.cos(theta)
        gns = np.sum(grad * grad, axis=1) / f ** 2
        den = 1.0 + u1 ** 2 + u2 ** 2
        F1 = -2 * gns * (u1 + u2) / den
        F2 = 2 * gns * (u1 - u2) / den
        assert np.all(np.hypot(F1, F2) <= 2 * gns * (1 + 1e-12))
        # general form vs |u| = 1 reduction
        assert np.max(np.abs(F1 - (-gns * (u1 + u2)))) <= 1e-12 * np.max(gns)


class TestClassicalResidual:
    def test_roundoff_small(self, rng, default_solution):
        pts = far_samples(rng, default_solution, 1000)
        for x in pts:
            r1, r2 = classical_residual(default_solution, x)
            gns = grad_norm_sq(default_solution, x)
            assert math.hypot(r1, r2) <= 1e-8 * (1.0 + gns)

    def test_single_log_case(self, single_log_solution):
        sol = single_log_solution(radius=1 / math.e)
        r1, r2 = classical_residual(sol, (math.exp(-2.0), 0.0))
        assert abs(r1) < 1e-10 and abs(r2) < 1e-10

    def test_rejects_points_near_singularities(self, default_solution):
        with pytest.raises(ValueError, match="singular point 2"):
            classical_residual(default_solution, (0.021, 0.0))


class TestFdLaplacian:
    def test_harmonic_input_vanishes(self):
        # pure log term is harmonic: FD Laplacian ~ O(h^2) roundoff only
        fn = lambda p: math.log(1.0 / np.hypot(*p))
        vals = [abs(float(five_point_laplacian(fn, (0.03, 0.02), h)))
                for h in (4e-4, 2e-4, 1e-4)]
        # O(h^2): each halving of h divides the defect by ~4
        assert vals[1] < vals[0] / 3 and vals[2] < vals[1] / 3

    def test_converges_to_rhs_order_two(self, rng, default_solution):
        pts = far_samples(rng, default_solution, 5)
        hs = (4e-4, 2e-4, 1e-4)
        for x in pts:
            F = eval_rhs(default_solution, x)
            errs = []
            for h in hs:
                L1, L2 = fd_laplacian(default_solution, x, h)
                errs.append(math.hypot(L1 - F.F1, L2 - F.F2))
            order, _ = np.polyfit(np.log(hs), np.log(errs), 1)
            assert order >= 1.9

    def test_matches_analytic_laplacian_single_log(self, single_log_solution):
        sol = single_log_solution(radius=1 / math.e)
        x = (0.5 / math.e, 0.0)
        F = eval_rhs(sol, x)  # analytic Laplacian equals RHS exactly
        for h, tol in ((4e-4, 2e-2), (2e-4, 5e-3)):
            L1, L2 = fd_laplacian(sol, x, h)
            assert math.hypot(L1 - F.F1, L2 - F.F2) <= tol

    def test_stencil_checks(self, default_solution):
        with pytest.raises(ValueError, match="ball"):
            fd_laplacian(default_solution, (0.0499, 0.0), 1e-3)


class TestProbe:
    def test_single_log_probe_is_sin_t(self, single_log_solution):
        sol = single_log_solution()
        for t in (1.5, 7.0, 33.3):
            res = radial_probe(sol, ProbeFrame(index=1, t=t))
            assert res.u1 == pytest.approx(math.sin(t), abs=1e-13)
            assert res.u2 == pytest.approx(math.cos(t), abs=1e-13)
            assert res.rest == 0.0

    def test_periodicity(self, single_log_solution):
        sol = single_log_solution()
        a = radial_probe(sol, ProbeFrame(index=1, t=9.0))
        b = radial_probe(sol, ProbeFrame(index=1, t=9.0 + 2 * math.pi))
        assert a.u1 == pytest.approx(b.u1, abs=1e-12)
        assert a.u2 == pytest.approx(b.u2, abs=1e-12)

    def test_stability_at_t_50(self, default_solution):
        res = radial_probe(default_solution, ProbeFrame(index=1, t=50.0))
        assert math.isfinite(res.u1) and math.isfinite(res.u2)
        assert res.u1 ** 2 + res.u2 ** 2 == pytest.approx(1.0, abs=1e-12)
        assert res.rest_error_bound == 0.0

    def test_t_below_one_rejected(self):
        with pytest.raises(ValueError, match="t must be >= 1"):
            ProbeFrame(index=1, t=0.5)

    def test_full_oscillation_multipoint(self, default_solution):
        rep = oscillation_report(default_solution, 2, 10.0,
                                 10.0 + 2 * math.pi, 4000)
        assert rep["min_u1"] <= -0.999
        assert rep["max_u1"] >= 0.999

    def test_oscillation_does_not_decay(self, default_solution):
        for t0 in (12.0, 45.0):
            rep = oscillation_report(default_solution, 1, t0, t0 + 2 * math.pi,
                                     4000)
            assert rep["min_u1"] <= -0.999 and rep["max_u1"] >= 0.999

    def test_window_must_cover_period(self, default_solution):
        with pytest.raises(ValueError, match="2"):
            oscillation_report(default_solution, 1, 10.0, 11.0, 100)

    def test_smooth_point_oscillation_decays(self, default_solution):
        x0 = (0.033, 0.028)
        osc = smooth_point_oscillation(default_solution, x0,
                                       [1e-3 / 2 ** m for m in range(5)])
        ratios = [b / a for a, b in zip(osc, osc[1:])]
        assert all(r <= 0.75 for r in ratios)
        assert osc[-1] <= 1e-3


class TestLocalFrame:
    def test_matches_direct_evaluation(self, default_solution):
        """The scaled (t, theta) evaluator agrees with plain evaluation
        wherever plain evaluation is accurate."""
        pot = default_solution.potential
        frame = LocalFrame(pot, 2, 4)
        t = np.array([4.0, 6.0, 9.0])
        theta = np.array([0.3, 2.0, 5.1])
        f, G, rho = frame.field(t, theta)
        p = pot.points[1]
        for k in range(len(t)):
            x = p + rho[k] * np.array([math.cos(theta[k]), math.sin(theta[k])])
            fv, grad = field_many(pot, x[None, :], 4)
            assert f[k] == pytest.approx(fv[0], rel=1e-12)
            assert np.allclose(G[k], rho[k] * grad[0], rtol=1e-9)

    def test_deep_asymptotics(self, default_solution):
        pot = default_solution.potential
        frame = LocalFrame(pot, 1, 4)
        t = np.array([1e6])
        theta = np.array([0.7])
        f, G, rho = frame.field(t, theta)
        assert rho[0] == 0.0
        assert f[0] == pytest.approx(frame.a_i * 1e6 + frame.rest_at_center,
                                     rel=1e-14)
        assert np.allclose(G[0], -frame.a_i * np.array(
            [math.cos(0.7), math.sin(0.7)]), rtol=1e-14)
