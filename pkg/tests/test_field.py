import math

import numpy as np
import pytest

from sinlog.field import (
    CoefficientSchedule,
    SingularPotential,
    build_potential,
    eval_f,
    eval_grad_f,
    field_many,
    truncation_index,
    validate_schedule,
)
from sinlog.sets import FiniteSet, enumerate_points

from conftest import far_samples


def make_potential(points, ratio=0.25, radius=0.05, values=None):
    schedule = (CoefficientSchedule(values=values) if values is not None
                else CoefficientSchedule(ratio=ratio))
    pot, _ = build_potential(FiniteSet(points), schedule, radius, len(points))
    return pot


class TestSchedule:
    def test_geometric_coefficients_start_at_one(self):
        sched = CoefficientSchedule(ratio=0.25)
        a = sched.coefficients(4)
        assert a[0] == 1.0
        assert np.allclose(a, [1, 0.25, 0.0625, 0.015625])

    def test_ratio_validation(self):
        with pytest.raises(ValueError, match="ratio"):
            CoefficientSchedule(ratio=1.0)
        with pytest.raises(ValueError, match="ratio"):
            CoefficientSchedule(ratio=0.0)

    def test_explicit_list_rules(self):
        CoefficientSchedule(values=(1.0, 0.5, 0.5, 0.1))
        with pytest.raises(ValueError):
            CoefficientSchedule(values=(0.5, 0.25))   # must start at 1
        with pytest.raises(ValueError):
            CoefficientSchedule(values=(1.0, 1.5))    # increasing
        with pytest.raises(ValueError):
            CoefficientSchedule(values=(1.0, -0.5))   # non-positive

    def test_closed_forms(self):
        # sum (1/2)^(i-1) = 2 for the half-exponent of q = 1/4
        rep = validate_schedule(CoefficientSchedule(ratio=0.25))
        assert rep.C_half == pytest.approx(2.0, rel=1e-14)
        rep = validate_schedule(CoefficientSchedule(ratio=0.125))
        assert rep.C_third == pytest.approx(2.0, rel=1e-14)

    @pytest.mark.parametrize("q", [0.1, 0.25, 0.5, 0.9])
    def test_closed_form_matches_partial_sums(self, q):
        rep = validate_schedule(CoefficientSchedule(ratio=q))
        for expo, closed in ((0.5, rep.C_half), (1 / 3, rep.C_third),
                             (0.25, rep.C_beta)):
            s = q ** expo
            n = int(math.log(1e-14) / math.log(s)) + 2
            direct = math.fsum(s ** np.arange(n))
            assert closed == pytest.approx(direct, rel=1e-12)

    def test_non_summable_list_rejected(self):
        with pytest.raises(ValueError, match="schedule not summable"):
            validate_schedule(CoefficientSchedule(values=(1.0,) * 6))


class TestPotential:
    def test_radius_bounds(self):
        enum = enumerate_points(FiniteSet(((0.0, 0.0),)), 1)
        with pytest.raises(ValueError, match="radius"):
            SingularPotential(enum, CoefficientSchedule(ratio=0.25), 0.5)
        # closure value 1/e is allowed
        SingularPotential(enum, CoefficientSchedule(ratio=0.25), 1 / math.e)

    def test_points_must_fit_inside(self):
        enum = enumerate_points(FiniteSet(((0.0, 0.0), (0.06, 0.0))), 2)
        with pytest.raises(ValueError, match="set radius"):
            SingularPotential(enum, CoefficientSchedule(ratio=0.25), 0.05)

    def test_first_point_must_be_origin(self):
        enum = enumerate_points(FiniteSet(((0.01, 0.0),)), 1)
        with pytest.raises(ValueError, match="origin"):
            SingularPotential(enum, CoefficientSchedule(ratio=0.25), 0.05)


class TestEvalF:
    def test_single_term_exact(self):
        pot = make_potential(((0.0, 0.0),), ratio=0.5, radius=1 / math.e)
        fv = eval_f(pot, (math.exp(-2.0), 0.0))
        assert fv.value == pytest.approx(2.0, abs=1e-14)
        assert fv.tail_bound == 0.0

    def test_single_term_second_point(self):
        pot = make_potential(((0.0, 0.0),), ratio=0.5, radius=1 / math.e)
        x = (0.9 / math.e, 0.0)
        fv = eval_f(pot, x)
        assert fv.value == pytest.approx(1.0 - math.log(0.9), rel=1e-14)

    def test_two_equal_distances(self):
        # both points at distance 0.05 from x: f = (1+q) log 20
        q = 0.25
        pot = make_potential(((0.0, 0.0), (0.1, 0.0)), ratio=q, radius=0.15)
        fv = eval_f(pot, (0.05, 0.0))
        assert fv.value == pytest.approx((1 + q) * math.log(20.0), rel=1e-14)

    def test_eval_at_singular_point_rejected(self):
        pot = make_potential(((0.0, 0.0), (0.02, 0.0)))
        with pytest.raises(ValueError, match="singular point"):
            eval_f(pot, (0.02, 0.0))

    def test_eval_outside_ball_rejected(self):
        pot = make_potential(((0.0, 0.0),))
        with pytest.raises(ValueError, match="outside"):
            eval_f(pot, (0.06, 0.0))

    def test_positivity(self, rng):
        pot = make_potential(((0.0, 0.0), (0.02, 0.0), (0.0, 0.02)))
        floor = math.log(1.0 / (2 * pot.radius))
        pts = far_samples(rng, _sol(pot), 10_000, margin=1e-6)
        f, _ = field_many(pot, pts)
        assert np.all(f > floor - 1e-12)

    def test_monotone_in_n(self, rng):
        pot = make_potential(((0.0, 0.0), (0.02, 0.0), (0.0, 0.02)))
        pts = far_samples(rng, _sol(pot), 100, margin=1e-5)
        prev = None
        for n in (1, 2, 3):
            f, _ = field_many(pot, pts, n)
            if prev is not None:
                assert np.all(f >= prev - 1e-15)
            prev = f

    def test_tail_soundness(self, rng):
        pot = make_potential(((0.0, 0.0), (0.02, 0.0), (0.0, 0.02), (-0.02, 0.0)))
        pts = far_samples(rng, _sol(pot), 200, margin=1e-3)
        for x in pts:
            lo = eval_f(pot, x, 2, exclusion=1e-3)
            hi = eval_f(pot, x, 4, exclusion=1e-3)
            assert abs(hi.value - lo.value) <= lo.tail_bound + 1e-15


class TestGradF:
    def test_single_log_gradient(self):
        pot = make_potential(((0.0, 0.0),))
        x = np.array([0.01, 0.02])
        g = eval_grad_f(pot, x)
        assert np.allclose(g, -x / (x @ x), rtol=1e-14)
        assert np.hypot(*g) == pytest.approx(1.0 / np.hypot(*x), rel=1e-14)

    def test_symmetric_cancellation(self):
        # equal coefficients, x on the perpendicular bisector midpoint
        pot = make_potential(((0.0, 0.0), (0.02, 0.0)), values=(1.0, 1.0))
        g = eval_grad_f(pot, (0.01, 0.013))
        assert abs(g[0]) < 1e-16

    def test_matches_finite_differences(self, rng, default_potential):
        pts = far_samples(rng, _sol(default_potential), 20)
        h = 1e-6
        for x in pts:
            g = eval_grad_f(default_potential, x)
            fd = np.array([
                (eval_f(default_potential, x + [h, 0]).value
                 - eval_f(default_potential, x - [h, 0]).value) / (2 * h),
                (eval_f(default_potential, x + [0, h]).value
                 - eval_f(default_potential, x - [0, h]).value) / (2 * h)])
            assert np.max(np.abs(fd - g)) / np.max(np.abs(g)) < 1e-6

    def test_gradient_fd_order(self, rng, default_potential):
        pts = far_samples(rng, _sol(default_potential), 5)
        for x in pts:
            errs = []
            hs = (1e-4, 1e-5, 1e-6)
            g = eval_grad_f(default_potential, x)
            for h in hs:
                fd = np.array([
                    (eval_f(default_potential, x + [h, 0]).value
                     - eval_f(default_potential, x - [h, 0]).value) / (2 * h),
                    (eval_f(default_potential, x + [0, h]).value
                     - eval_f(default_potential, x - [0, h]).value) / (2 * h)])
                errs.append(np.max(np.abs(fd - g)))
            order, _ = np.polyfit(np.log(hs), np.log(errs), 1)
            assert order >= 1.9

    def test_fd_laplacian_of_f_vanishes(self, rng, default_potential):
        # each term is harmonic away from its point
        from sinlog.solution import five_point_laplacian
        pts = far_samples(rng, _sol(default_potential), 5)
        for x in pts:
            vals = []
            for h in (4e-4, 2e-4, 1e-4):
                lap = five_point_laplacian(
                    lambda p: eval_f(default_potential, p).value, x, h)
                vals.append(abs(float(lap)))
            # O(h^2) decay
            assert vals[2] < vals[0] / 8


class TestAdaptiveEvalF:
    def test_tail_target_selects_truncation(self, polyline_potential):
        pot, _ = build_potential(
            polyline_potential.enumeration.source,
            CoefficientSchedule(ratio=0.5), 0.05, 30)
        fv = eval_f(pot, (0.001, 0.0321), tail_target=1e-6, exclusion=1e-3)
        assert fv.terms_used == 24

    def test_both_truncation_args_rejected(self, default_potential):
        with pytest.raises(ValueError, match="not both"):
            eval_f(default_potential, (0.03, 0.0), n_terms=2, tail_target=1e-6)


class TestTruncationIndex:
    def test_geometric_solution(self, polyline_potential):
        # smallest N with q^N/(1-q) log(1e3) <= 1e-6 for q = 1/2 is 24
        pot, _ = build_potential(
            polyline_potential.enumeration.source,
            CoefficientSchedule(ratio=0.5), 0.05, 30)
        n = truncation_index(pot, 1e-6, 1e-3)
        assert n == 24

    def test_finite_enumeration_caps(self):
        pot = make_potential(((0.0, 0.0), (0.02, 0.0), (0.0, 0.02)))
        assert truncation_index(pot, 1e-30, 1e-6) == 3

    def test_huge_target_gives_one(self):
        pot = make_potential(((0.0, 0.0), (0.02, 0.0)))
        assert truncation_index(pot, 1e6, 1e-3) == 1

    def test_exhausted_enumeration_errors(self, polyline_potential):
        pot, _ = build_potential(
            polyline_potential.enumeration.source,
            CoefficientSchedule(ratio=0.5), 0.05, 10)
        with pytest.raises(ValueError, match="enumerat"):
            truncation_index(pot, 1e-12, 1e-3)


def _sol(pot):
    from sinlog.solution import Solution
    return Solution(pot)
