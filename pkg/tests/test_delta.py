"""Backend tests for the greatest-delta computation."""

from __future__ import annotations

import math

import numpy as np
import pytest

import deltamax as dm
from deltamax.delta import (
    DEFAULT_CONFIG,
    SearchConfig,
    compute_delta,
    delta_level_set_1d,
    delta_monotone_1d,
    delta_radial,
    delta_ray_nd,
    direction_set,
    epsilon_bound,
    inverse_monotone,
    is_delta_epsilon_number,
)
from deltamax.errors import (
    ConstantFunction,
    DomainViolation,
    EmptySpherePreimage,
    OutOfRange,
)
from deltamax.model import DomainSpec, ExpressionFn, Monotone1DFn, NormTag, Point

REALS = DomainSpec.interval(-math.inf, math.inf)
HALF = DomainSpec.half_line(0.0)


def cube():
    return Monotone1DFn(fn=lambda x: x * x * x,
                        interval=(-math.inf, math.inf), increasing=True,
                        label="x^3")


def exp_half():
    return Monotone1DFn(fn=np.exp, interval=(0.0, math.inf), increasing=True,
                        label="exp")


class TestSearchConfig:
    def test_defaults(self):
        cfg = SearchConfig()
        assert cfg.tol_x == 1e-12 and cfg.tol_f == 1e-10
        assert cfg.scan_points == 4096 and cfg.r0 == 1.0 and cfg.r_max == 2 ** 20

    def test_validation(self):
        with pytest.raises(ValueError):
            SearchConfig(tol_x=0.0)
        with pytest.raises(ValueError):
            SearchConfig(scan_points=8)


class TestInverseMonotone:
    def test_cube_root(self):
        assert abs(inverse_monotone(cube(), 8.0) - 2.0) <= 1e-12

    def test_exp_log(self):
        g = Monotone1DFn(fn=np.exp, interval=(-math.inf, math.inf), increasing=True)
        assert abs(inverse_monotone(g, 1.0)) <= 1e-12

    def test_out_of_range_bounded(self):
        g = Monotone1DFn(fn=lambda x: x, interval=(0.0, 1.0), increasing=True)
        with pytest.raises(OutOfRange):
            inverse_monotone(g, 2.0)

    def test_out_of_range_half_line(self):
        with pytest.raises(OutOfRange):
            inverse_monotone(exp_half(), 0.5)  # range is [1, inf)

    def test_decreasing(self):
        g = Monotone1DFn(fn=lambda x: -x * x * x, interval=(-math.inf, math.inf),
                         increasing=False)
        assert abs(inverse_monotone(g, -8.0) - 2.0) <= 1e-12


class TestMonotoneBackend:
    def test_square_half_line_origin_is_one_sided(self):
        g = Monotone1DFn(fn=lambda x: x * x, interval=(0.0, math.inf),
                         increasing=True)
        res = delta_monotone_1d(g, 0.0, 1.0)
        assert res.one_sided
        assert abs(res.value - 1.0) <= 1e-10

    def test_identity_tie_prefers_left_witness(self):
        g = Monotone1DFn(fn=lambda x: x, interval=(-math.inf, math.inf),
                         increasing=True)
        res = delta_monotone_1d(g, 7.0, 0.5)
        assert abs(res.value - 0.5) <= 1e-10
        assert res.witness.coords[0] == pytest.approx(6.5, abs=1e-10)
        assert not res.one_sided

    def test_exp_two_sides(self):
        # min(ln(e^2+0.1)-2, 2-ln(e^2-0.1)); the +eps side is closer
        res = delta_monotone_1d(exp_half(), 2.0, 0.1)
        expected = math.log(math.exp(2.0) + 0.1) - 2.0
        assert abs(res.value - expected) <= 1e-10
        assert not res.one_sided

    def test_exp_one_sided_near_left_end(self):
        # e^0.1 - 0.5 < 1 = g(0), so only the +eps inverse exists
        res = delta_monotone_1d(exp_half(), 0.1, 0.5)
        assert res.one_sided
        expected = math.log(math.exp(0.1) + 0.5) - 0.1
        assert abs(res.value - expected) <= 1e-10

    def test_empty_preimage(self):
        g = Monotone1DFn(fn=lambda x: x, interval=(0.0, 1.0), increasing=True)
        with pytest.raises(EmptySpherePreimage):
            delta_monotone_1d(g, 0.5, 5.0)

    def test_achiever(self):
        res = delta_monotone_1d(cube(), 2.0, 1.0)
        x = res.witness.coords[0]
        assert abs(abs(x - 2.0) - res.value) <= 1e-12
        assert abs(abs(x ** 3 - 8.0) - 1.0) <= 1e-9


class TestLevelSet1D:
    def test_square_closed_form(self):
        f = ExpressionFn.parse("x^2")
        res = delta_level_set_1d(f, REALS, 3.0, 1.0)
        assert abs(res.value - (math.sqrt(10) - 3.0)) <= 1e-9
        assert 0 < res.certified_lower <= res.value <= res.certified_upper

    def test_constant_has_empty_preimage(self):
        with pytest.raises(EmptySpherePreimage) as err:
            delta_level_set_1d(ExpressionFn.parse("7"), REALS, 0.0, 1.0)
        assert err.value.searched_radius >= DEFAULT_CONFIG.r_max / 2

    def test_sine_nearest_crossing(self):
        # |sin x| = 0.5 nearest to 0 is x = pi/6; cross-checked against a
        # brute-force scan at step 1e-6
        res = delta_level_set_1d(ExpressionFn.parse("sin(x)"), REALS, 0.0, 0.5)
        xs = np.arange(0.0, 1.0, 1e-6)
        h = np.abs(np.abs(np.sin(xs)) - 0.5)
        brute = xs[int(np.argmin(h))]
        assert abs(res.value - math.pi / 6) <= 1e-9
        assert abs(res.value - brute) <= 2e-6

    def test_domain_violation(self):
        with pytest.raises(DomainViolation):
            delta_level_set_1d(ExpressionFn.parse("x^2"),
                               DomainSpec.interval(0.0, 1.0), 2.0, 0.5)

    def test_domain_restriction_changes_delta(self):
        # On [-5, 5] the crossing sqrt(26) is outside, so delta(5) uses sqrt(24)
        f = ExpressionFn.parse("x^2")
        res = delta_level_set_1d(f, DomainSpec.interval(-5.0, 5.0), 5.0, 1.0)
        assert abs(res.value - (5.0 - math.sqrt(24))) <= 1e-9
        assert res.one_sided

    def test_open_boundary_divergence(self):
        # ln on (0, 1]: the nearest crossing sits between the last grid
        # sample and the open endpoint for large eps
        f = ExpressionFn.parse("ln(x)")
        dom = DomainSpec.interval(0.0, 1.0, open_lo=True)
        res = delta_level_set_1d(f, dom, 0.25, 20.0)
        expected = 0.25 - 0.25 * math.exp(-20.0)
        assert abs(res.value - expected) <= 1e-9


class TestRadial:
    def test_exp_norm(self):
        entry = dm.catalog_lookup("exp_norm")
        res = delta_radial(entry.function, entry.domain, Point.of(0.6, 0.8), 0.1)
        assert abs(res.value - (math.log(math.e + 0.1) - 1.0)) <= 1e-9
        assert res.backend == "radial"

    def test_log_norm(self):
        entry = dm.catalog_lookup("log_norm")
        res = delta_radial(entry.function, entry.domain, Point.of(2.0, 0.0), 1.0)
        assert abs(res.value - 2.0 * (1 - math.exp(-1))) <= 1e-9

    def test_norm_profile_identity(self):
        f = ExpressionFn.parse("r", dim=2)
        dom = DomainSpec.ball((0.0, 0.0), math.inf)
        res = delta_radial(f, dom, Point.of(3.0, 4.0), 2.0)
        assert abs(res.value - 2.0) <= 1e-9
        radius = math.hypot(*res.witness.coords)
        assert radius == pytest.approx(3.0, abs=1e-9)  # tie resolves inward
        # witness stays on the ray through p
        assert res.witness.coords[0] / res.witness.coords[1] == pytest.approx(0.75)

    def test_witness_achieves_eps(self):
        entry = dm.catalog_lookup("log_norm")
        res = delta_radial(entry.function, entry.domain, Point.of(0.0, 0.25), 0.5)
        fx = math.log(math.hypot(*res.witness.coords))
        fp = math.log(0.25)
        assert abs(abs(fx - fp) - 0.5) <= 1e-9

    def test_center_at_origin_in_ray(self):
        f = ExpressionFn.parse("r", dim=2)
        dom = DomainSpec.ball((0.0, 0.0), math.inf)
        res = delta_radial(f, dom, Point.of(0.0, 0.0), 1.5)
        assert abs(res.value - 1.5) <= 1e-9
        assert res.witness.coords == pytest.approx((1.5, 0.0))


class TestRayNd:
    def test_circle_level_set(self):
        f = ExpressionFn.parse("x1^2+x2^2")
        dom = DomainSpec.box((-10.0, -10.0), (10.0, 10.0))
        res = delta_ray_nd(f, dom, Point.of(0.0, 0.0), 1.0, directions=64)
        assert abs(res.value - 1.0) <= 1e-9
        assert res.backend == "ray_nd"
        assert 0 < res.certified_lower <= res.value

    def test_linear_exact_along_axes(self):
        f = ExpressionFn.parse("x1")
        dom = DomainSpec.box((-10.0, -10.0), (10.0, 10.0))
        res = delta_ray_nd(f, dom, Point.of(0.0, 0.0), 0.5, directions=64)
        assert res.value == pytest.approx(0.5, abs=1e-12)

    def test_constant(self):
        f = ExpressionFn.parse("3")
        dom = DomainSpec.box((-10.0, -10.0), (10.0, 10.0))
        with pytest.raises(EmptySpherePreimage):
            delta_ray_nd(f, dom, Point.of(0.0, 0.0), 1.0, directions=8)

    def test_directions_deterministic(self):
        a = direction_set(2, 32, seed=5)
        b = direction_set(2, 32, seed=5)
        assert np.array_equal(a, b)
        c = direction_set(3, 16, NormTag.L1, seed=1)
        from deltamax.model import norm_of_rows

        assert np.allclose(norm_of_rows(NormTag.L1, c), 1.0)


class TestMembershipPredicate:
    def test_square_true_at_optimum(self):
        entry = dm.catalog_lookup("square")
        v = math.sqrt(10) - 3.0
        assert is_delta_epsilon_number(entry.function, entry.domain, 3.0, 1.0, v,
                                       samples=4096)

    def test_square_false_past_optimum(self):
        entry = dm.catalog_lookup("square")
        v = (math.sqrt(10) - 3.0) * 1.01
        assert not is_delta_epsilon_number(entry.function, entry.domain, 3.0, 1.0, v,
                                           samples=4096)

    def test_identity_interior(self):
        entry = dm.catalog_lookup("identity")
        assert is_delta_epsilon_number(entry.function, entry.domain, 0.0, 1.0, 0.5)

    def test_constant_vacuously_true(self):
        f = ExpressionFn.parse("5")
        assert is_delta_epsilon_number(f, REALS, 0.0, 1.0, 100.0, samples=512)


class TestEpsilonBound:
    def test_identity_unit_interval(self):
        eb = epsilon_bound(ExpressionFn.parse("x"), DomainSpec.interval(0.0, 1.0),
                           samples=4001)
        assert eb.beta == pytest.approx(0.2475, abs=1e-9)

    def test_sine_truncated_reals(self):
        eb = epsilon_bound(ExpressionFn.parse("sin(x)"), REALS, samples=4001)
        assert eb.beta == pytest.approx(0.495, abs=2e-3)

    def test_constant(self):
        with pytest.raises(ConstantFunction):
            epsilon_bound(ExpressionFn.parse("2"), DomainSpec.interval(0.0, 1.0))


class TestBackendAgreement:
    """Monotone formula vs generic level-set scan on monotone functions."""

    @pytest.mark.parametrize("mono,expr,interval,ps,epss", [
        ("identity", "x", (-math.inf, math.inf),
         np.linspace(-8, 8, 10), (0.25, 1.0)),
        ("exp", "exp(x)", (0.0, math.inf),
         np.linspace(0.0, 4.0, 10), (0.1, 0.9)),
        ("cube", "x^3", (-math.inf, math.inf),
         np.linspace(-2.5, 2.5, 10), (0.2, 1.0)),
    ])
    def test_agreement(self, mono, expr, interval, ps, epss):
        fns = {
            "identity": lambda x: x,
            "exp": np.exp,
            "cube": lambda x: x * x * x,
        }
        g = Monotone1DFn(fn=fns[mono], interval=interval, increasing=True,
                         label=mono)
        f = ExpressionFn.parse(expr)
        dom = DomainSpec.interval(*interval)
        for p in ps:
            for eps in epss:
                a = delta_monotone_1d(g, float(p), eps)
                b = delta_level_set_1d(f, dom, float(p), eps)
                assert abs(a.value - b.value) <= 1e-9, (mono, p, eps)
                assert a.one_sided == b.one_sided, (mono, p, eps)


class TestCatalogRegression:
    """The generic backends reproduce every closed-form delta."""

    def test_square_and_identity(self):
        rng = np.random.default_rng(11)
        for name, p_lo, p_hi in [("square", -10.0, 10.0), ("identity", -20.0, 20.0)]:
            entry = dm.catalog_lookup(name)
            for _ in range(50):
                p = float(rng.uniform(p_lo, p_hi))
                eps = float(rng.uniform(0.05, 5.0))
                got = delta_level_set_1d(entry.function, entry.domain, p, eps)
                want = entry.closed_form_delta(p, eps)
                assert abs(got.value - want) <= 1e-9, (name, p, eps)

    def test_radial_entries(self):
        rng = np.random.default_rng(12)
        for name, t_lo, t_hi, e_hi in [("exp_norm", 0.0, 5.0, 2.0),
                                       ("log_norm", 0.1, 10.0, 3.0)]:
            entry = dm.catalog_lookup(name)
            for _ in range(50):
                t = float(rng.uniform(t_lo, t_hi))
                theta = float(rng.uniform(0, 2 * math.pi))
                eps = float(rng.uniform(0.05, e_hi))
                p = Point.of(t * math.cos(theta), t * math.sin(theta))
                if not entry.domain.contains(p):
                    continue
                got = delta_radial(entry.function, entry.domain, p, eps)
                want = entry.closed_form_delta(t, eps)
                assert abs(got.value - want) <= 1e-9, (name, t, eps)


class TestComputeDeltaRouting:
    def test_catalog_radial(self):
        entry = dm.catalog_lookup("exp_norm")
        res = compute_delta(entry.function, None, Point.of(1.0, 0.0), 0.5)
        assert res.backend == "radial"

    def test_monotone(self):
        res = compute_delta(cube(), REALS, 1.0, 0.5)
        assert res.backend == "monotone"

    def test_expression_1d(self):
        res = compute_delta(ExpressionFn.parse("x^2"), REALS, 1.0, 0.5)
        assert res.backend == "levelset1d"

    def test_nd(self):
        f = ExpressionFn.parse("x1+x2")
        dom = DomainSpec.box((-5.0, -5.0), (5.0, 5.0))
        res = compute_delta(f, dom, Point.of(0.0, 0.0), 0.5)
        assert res.backend == "ray_nd"
