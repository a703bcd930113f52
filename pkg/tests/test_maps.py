import math

import numpy as np
import pytest

from fiberdyn import (DerivativeVanishes, IntervalDomain, IntervalMap,
                      MissingDerivative, constant_sequence, estimate_modulus,
                      fiber_sequence, find_critical_points, identity_map,
                      make_system, maps, moebius_map, quadratic_map,
                      schwarzian, twowell_map, verify_partial_hyperbolicity,
                      viana_skew)


class TestSchwarzian:
    def test_logistic_at_zero(self, logistic):
        # f' = 4, f'' = -8, f''' = 0 at x = 0, so Sf = -1.5 * (”-8/4”)^2
        assert schwarzian(logistic, 0.0) == pytest.approx(-6.0, abs=1e-12)

    def test_affine_is_zero(self):
        m = maps.affine_map(0.5, 0.2)
        assert schwarzian(m, 0.37) == 0.0

    def test_critical_point_raises(self, logistic):
        with pytest.raises(DerivativeVanishes):
            schwarzian(logistic, 0.5)

    def test_missing_derivative_raises(self):
        m = IntervalMap(IntervalDomain(0.0, 1.0),
                        lambda x: 0.5 * x, lambda x: 0.5 + 0.0 * x)
        with pytest.raises(MissingDerivative):
            schwarzian(m, 0.3)

    def test_moebius_schwarzian_vanishes(self):
        m = moebius_map(3.0)
        for x in np.linspace(0.05, 0.95, 7):
            assert abs(schwarzian(m, x)) < 1e-12

    def test_negative_on_logistic_everywhere(self, logistic):
        # quadratic family has Sf < 0 wherever defined
        for x in np.linspace(0.001, 0.999, 211):
            if abs(x - 0.5) < 1e-3:
                continue
            assert schwarzian(logistic, x) < 0.0


class TestIntervalMap:
    def test_critical_point_derivative_small(self, logistic, twowell):
        for m in (logistic, twowell, quadratic_map(1.7)):
            for c in m.critical_points:
                assert abs(float(m.derivative(c))) <= 1e-9

    def test_derivative_sign_constant_between_criticals(self, twowell):
        for m in (maps.logistic_map(), twowell):
            knots = [m.domain.lo, *m.critical_points, m.domain.hi]
            for a, b in zip(knots, knots[1:]):
                xs = np.linspace(a, b, 1002)[1:-1]
                ds = np.asarray(m.derivative(xs))
                assert ds.max() < 0 or ds.min() > 0

    def test_found_criticals_match_closed_form(self):
        cases = [(maps.logistic_map(), (0.5,)),
                 (quadratic_map(1.7), (0.0,))]
        for m, expected in cases:
            found = find_critical_points(m.derivative, m.domain)
            assert len(found) == len(expected)
            for f, e in zip(found, expected):
                assert abs(f - e) <= 1e-10

    def test_twowell_well_centers_found(self, twowell):
        # well centers sit at closed-form positions 0.225 and 0.775
        assert any(abs(c - 0.225) <= 1e-10 for c in twowell.critical_points)
        assert any(abs(c - 0.775) <= 1e-10 for c in twowell.critical_points)

    def test_twowell_c3_at_junctions(self, twowell):
        # connector matches value and three derivatives of the wells
        h = 1e-7
        for junction in (0.45, 0.55):
            for order, fn in ((0, twowell.evaluator),
                              (1, twowell.derivative),
                              (2, twowell.second)):
                left = float(fn(junction - h))
                right = float(fn(junction + h))
                scale = max(1.0, abs(left))
                assert abs(right - left) <= 1e-4 * scale

    def test_twowell_wells_invariant(self, twowell):
        xs = np.linspace(0.0, 0.45, 2001)
        ys = twowell.evaluator(xs)
        assert ys.min() >= -1e-12 and ys.max() <= 0.45 + 1e-12
        xs = np.linspace(0.55, 1.0, 2001)
        ys = twowell.evaluator(xs)
        assert ys.min() >= 0.55 - 1e-12 and ys.max() <= 1.0 + 1e-12

    def test_domain_escape_rejected(self):
        with pytest.raises(ValueError, match="leaves its domain"):
            IntervalMap(IntervalDomain(0.0, 1.0),
                        lambda x: x + 0.5, lambda x: 1.0 + 0.0 * x)

    def test_unsorted_criticals_rejected(self):
        with pytest.raises(ValueError):
            IntervalMap(IntervalDomain(-1.0, 1.0),
                        lambda x: x**3 * 0.5,
                        lambda x: 1.5 * x**2,
                        critical_points=(0.0, 0.0))


class TestFiberSequence:
    def test_theta_zero_is_unperturbed_quadratic(self, viana):
        seq = fiber_sequence(viana, 0.0)
        m0 = seq.map_at(0)
        xs = np.linspace(-1.5, 1.5, 11)
        assert np.allclose(m0.evaluator(xs), 1.7 - xs**2, atol=1e-12)

    def test_theta_zero_fixed_by_base(self, viana):
        # g(0) = 0, so the k=1 map equals the k=0 map
        seq = fiber_sequence(viana, 0.0)
        xs = np.linspace(-1.5, 1.5, 11)
        assert np.allclose(seq.map_at(1).evaluator(xs),
                           seq.map_at(0).evaluator(xs), atol=0)

    def test_parameter_matches_scalar_base_orbit(self, viana):
        # independent scalar computation of g^2(0.3) for d = 16
        t = 0.3
        t = (16.0 * t) % 1.0
        t = (16.0 * t) % 1.0
        expected = 1.7 + 0.05 * math.sin(2.0 * math.pi * t)
        seq = fiber_sequence(viana, 0.3)
        m2 = seq.map_at(2)
        assert float(m2.evaluator(0.0)) == pytest.approx(expected, abs=1e-12)

    def test_accessor_repeatable(self, viana):
        seq = fiber_sequence(viana, 0.123)
        a = seq.map_at(5)
        b = seq.map_at(5)
        assert a is b

    def test_fiber_criticals_match_bisection(self, viana):
        seq = fiber_sequence(viana, 0.37)
        for k in (0, 1, 2):
            m = seq.map_at(k)
            found = find_critical_points(m.derivative, m.domain)
            assert len(found) == len(m.critical_points)
            for f, e in zip(found, m.critical_points):
                assert abs(f - e) <= 1e-10

    def test_theta_out_of_range(self, viana):
        with pytest.raises(ValueError):
            fiber_sequence(viana, 1.5)


class _BareSkew:
    """Duck-typed stand-in for domination checks on unconstructible systems."""

    def __init__(self, base_degree, base, base_derivative, fiber, fiber_dx,
                 fiber_domain):
        self.base_degree = base_degree
        self.base = base
        self.base_derivative = base_derivative
        self.fiber = fiber
        self.fiber_dx = fiber_dx
        self.fiber_domain = fiber_domain


class TestPartialHyperbolicity:
    def test_viana_defaults_dominated(self, viana):
        rep = verify_partial_hyperbolicity(viana, n_max=12, grid=32)
        assert rep.decays
        assert rep.sigma_hat <= 0.25
        # per-step interval bound: sup |2x| over the fiber domain, over d
        assert rep.max_ratio[0] <= 2 * viana.fiber_domain.hi / 16 + 1e-12

    def test_bound_holds_on_grid(self, viana):
        rep = verify_partial_hyperbolicity(viana, n_max=10, grid=24)
        for n, r in zip(rep.n_values, rep.max_ratio):
            assert r <= rep.C * rep.sigma_hat**n * (1 + 1e-9)

    def test_constant_fiber_ratio_zero(self):
        bare = _BareSkew(16, lambda t: (16 * t) % 1.0,
                         lambda t: 16.0 + 0.0 * t,
                         lambda t, x: 0.3 + 0.0 * x + 0.0 * t,
                         lambda t, x: 0.0 * x + 0.0 * t,
                         IntervalDomain(0.0, 1.0))
        rep = verify_partial_hyperbolicity(bare, n_max=6, grid=16)
        assert rep.decays
        assert all(r == 0.0 for r in rep.max_ratio)

    def test_tent_fiber_no_domination(self):
        # slope-2 tent fiber over a degree-2 base: ratio 1 at every n
        bare = _BareSkew(2, lambda t: (2 * t) % 1.0,
                         lambda t: 2.0 + 0.0 * t,
                         lambda t, x: 1.0 - np.abs(2.0 * x - 1.0) + 0.0 * t,
                         lambda t, x: np.where(x < 0.5, 2.0, -2.0) + 0.0 * t,
                         IntervalDomain(0.0, 1.0))
        rep = verify_partial_hyperbolicity(bare, n_max=6, grid=17)
        assert not rep.decays
        assert rep.max_ratio[0] == pytest.approx(1.0)

    def test_undominated_construction_rejected(self):
        with pytest.raises(ValueError, match="domination"):
            maps.SkewProduct(
                base_degree=2,
                base=lambda t: (2 * t) % 1.0,
                base_derivative=lambda t: 2.0 + 0.0 * t,
                fiber=lambda t, x: 4.0 * x * (1.0 - x) + 0.0 * t,
                fiber_dx=lambda t, x: 4.0 - 8.0 * x + 0.0 * t,
                fiber_dtheta=lambda t, x: 0.0 * x + 0.0 * t,
                fiber_criticals=lambda t: (0.5,),
                fiber_domain=IntervalDomain(0.0, 1.0),
            )

    def test_viana_domain_is_invariant_interval(self, viana):
        beta = 0.5 * (1 + math.sqrt(1 + 4 * 1.65))
        assert viana.fiber_domain.hi == pytest.approx(beta, abs=1e-12)
        th = np.linspace(0, 1, 257, endpoint=False)
        xs = viana.fiber_domain.grid(257)
        T, X = np.meshgrid(th, xs, indexing="ij")
        ys = viana.fiber(T, X)
        assert ys.max() <= viana.fiber_domain.hi + 1e-9
        assert ys.min() >= viana.fiber_domain.lo - 1e-9


class TestEstimateModulus:
    def test_logistic_forced_by_derivative_term(self, logistic_seq):
        # |Df(x)-Df(y)| = 8|x-y|, so the true threshold for zeta=0.8 is 0.1
        eps = estimate_modulus(logistic_seq, 0.8)
        assert eps >= 0.09
        assert eps <= 0.11

    def test_huge_zeta_returns_domain_length(self, logistic_seq):
        assert estimate_modulus(logistic_seq, 1e9) == \
            logistic_seq.domain.length

    def test_slope_one_affine_forced_by_value_term(self):
        seq = constant_sequence(identity_map())
        eps = estimate_modulus(seq, 0.05)
        assert eps == pytest.approx(0.05, abs=0.01)

    def test_nonpositive_zeta_rejected(self, logistic_seq):
        with pytest.raises(ValueError):
            estimate_modulus(logistic_seq, 0.0)


class TestCatalogue:
    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown family"):
            make_system("henon")

    def test_families_construct(self):
        for name in maps.family_names():
            assert make_system(name) is not None

    def test_circle_orbit_stays_wrapped(self, viana):
        orbit = viana.base_orbit(0.987654, 50)
        assert np.all((orbit >= 0.0) & (orbit < 1.0))

    def test_quadratic_needs_valid_parameter(self):
        with pytest.raises(ValueError):
            quadratic_map(0.5)

    def test_viana_invalid_parameters_rejected(self):
        with pytest.raises(ValueError):
            viana_skew(a0=1.9, alpha=0.3)
