import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import erfc

from expldp import (
    NumericsError,
    OutsideDomain,
    builtin,
    builtin_names,
    cumulant,
    discrete_family,
    family_descriptor,
    family_from_descriptor,
    hessian,
    log_likelihood,
    mean_map,
)
from expldp.families import cumulant_many


HW = builtin("hardy-weinberg-saturated")
POISSON = builtin("poisson")
GAUSS_MEAN = builtin("gauss-mean")
GAUSS_PARABOLA = builtin("gauss-parabola")
STRIP = builtin("strip-measure")
LANDAU = builtin("landau-dual")


def hw_discrete():
    return discrete_family(
        atoms=[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        weights=[0.5, 0.25, 0.25],
        name="hw-atoms",
    )


class TestCumulant:
    def test_probability_family_at_origin(self):
        assert cumulant(HW, [0.0, 0.0]) == pytest.approx(0.0, abs=1e-15)
        assert cumulant(POISSON, [0.0]) == pytest.approx(0.0, abs=1e-15)

    def test_hw_closed_form_point(self):
        val = cumulant(HW, [math.log(2.0), math.log(2.0)])
        assert val == pytest.approx(math.log(6.0) - math.log(4.0), abs=1e-12)

    def test_strip_boundary_point(self):
        # after the gaussian reduction the boundary integral is e*pi
        assert cumulant(STRIP, [0.0, 1.0]) == pytest.approx(
            1.0 + math.log(math.pi), abs=1e-9
        )
        assert cumulant(STRIP, [0.0, -1.0]) == pytest.approx(
            1.0 + math.log(math.pi), abs=1e-9
        )

    def test_strip_outside_domain(self):
        assert cumulant(STRIP, [0.0, 1.5]) == math.inf
        assert cumulant(STRIP, [0.3, -1.0]) == math.inf

    def test_strip_total_mass_closed_form(self):
        # kappa(0,0) = log integral of exp(-x^2)/(1+x^2) = log(pi e erfc(1))
        assert cumulant(STRIP, [0.0, 0.0]) == pytest.approx(
            math.log(math.pi * math.e * erfc(1.0)), abs=1e-10
        )

    def test_strip_interior_against_2d_quadrature(self):
        def dens(x2, x1, t1, t2):
            return (
                math.exp(t1 * x1 + t2 * x2 - (x1 * x1 + x2 * x2 / (4 * (1 + x1 * x1))))
                / (2 * math.sqrt(math.pi) * (1 + x1 * x1) ** 1.5)
            )

        def kappa_2d(t1, t2):
            def inner(x1):
                s = math.sqrt(2.0 * (1 + x1 * x1))
                mu = 2.0 * t2 * (1 + x1 * x1)
                v, _ = quad(dens, mu - 14 * s, mu + 14 * s, args=(x1, t1, t2),
                            limit=200)
                return v

            v, _ = quad(inner, -15.0, 15.0, limit=200)
            return math.log(v)

        assert cumulant(STRIP, [0.3, 0.5]) == pytest.approx(
            kappa_2d(0.3, 0.5), abs=1e-9
        )

    def test_landau_dual_closed_form(self):
        assert cumulant(LANDAU, [0.0]) == pytest.approx(1.0)
        assert cumulant(LANDAU, [2.0]) == pytest.approx(2 * math.log(2) - 1)
        assert cumulant(LANDAU, [-0.1]) == math.inf

    def test_nan_input_rejected(self):
        with pytest.raises(NumericsError):
            cumulant(HW, [float("nan"), 0.0])


class TestMeanMap:
    def test_poisson_unit_mean(self):
        assert mean_map(POISSON, [0.0])[0] == pytest.approx(1.0)

    def test_hw_example_probabilities(self):
        np.testing.assert_allclose(
            mean_map(HW, [math.log(1.2), math.log(0.8)]), [0.3, 0.2], atol=1e-14
        )

    def test_gauss_parabola_standard_normal(self):
        np.testing.assert_allclose(
            mean_map(GAUSS_PARABOLA, [0.0, -0.5]), [0.0, 1.0], atol=1e-14
        )

    def test_outside_domain_raises(self):
        with pytest.raises(OutsideDomain):
            mean_map(GAUSS_PARABOLA, [0.0, 0.5])
        with pytest.raises(OutsideDomain):
            mean_map(LANDAU, [0.0])

    @pytest.mark.parametrize("name,theta", [
        ("hardy-weinberg-saturated", [0.4, -0.7]),
        ("poisson", [0.3]),
        ("gauss-parabola", [1.1, -0.8]),
        ("strip-measure", [0.4, 0.6]),
    ])
    def test_matches_finite_differences(self, name, theta):
        family = builtin(name)
        theta = np.asarray(theta, dtype=float)
        h = 4e-5 if family.kind == "quadrature1d" else 1e-6
        grad = mean_map(family, theta)
        fd = np.empty(family.dim)
        for i in range(family.dim):
            e = np.zeros(family.dim)
            e[i] = h
            fd[i] = (cumulant(family, theta + e) - cumulant(family, theta - e)) / (2 * h)
        np.testing.assert_allclose(fd, grad, rtol=1e-6, atol=1e-6)


class TestHessian:
    def test_gauss_mean_constant(self):
        np.testing.assert_allclose(hessian(GAUSS_MEAN, [0.7]), [[1.0]])

    def test_poisson_second_derivative(self):
        np.testing.assert_allclose(
            hessian(POISSON, [math.log(2.0)]), [[2.0]], atol=1e-14
        )

    def test_hw_at_origin(self):
        expected = [[3 / 16, -1 / 16], [-1 / 16, 3 / 16]]
        np.testing.assert_allclose(hessian(HW, [0.0, 0.0]), expected, atol=1e-14)

    @pytest.mark.parametrize("name,theta", [
        ("hardy-weinberg-saturated", [0.5, 0.1]),
        ("gauss-parabola", [0.3, -1.2]),
        ("strip-measure", [0.2, -0.5]),
    ])
    def test_matches_gradient_differences(self, name, theta):
        family = builtin(name)
        theta = np.asarray(theta, dtype=float)
        h = 4e-5 if family.kind == "quadrature1d" else 1e-5
        hess = hessian(family, theta)
        fd = np.empty((family.dim, family.dim))
        for i in range(family.dim):
            e = np.zeros(family.dim)
            e[i] = h
            fd[:, i] = (mean_map(family, theta + e) - mean_map(family, theta - e)) / (2 * h)
        np.testing.assert_allclose(fd, hess, rtol=1e-5, atol=1e-5)

    def test_positive_definite_on_random_interior(self, rng):
        for _ in range(25):
            theta = rng.uniform(-2.0, 2.0, size=2)
            eig = np.linalg.eigvalsh(hessian(HW, theta))
            assert np.all(eig > 0.0)


class TestLogLikelihood:
    def test_zero_at_origin_for_probability_families(self):
        assert log_likelihood(HW, [0.0, 0.0], [0.3, 0.2]) == pytest.approx(0.0)

    def test_hw_example_value(self):
        val = log_likelihood(HW, [math.log(1.2), math.log(0.8)], [0.3, 0.2])
        assert val == pytest.approx(
            0.3 * math.log(1.2) + 0.2 * math.log(0.8), abs=1e-14
        )

    def test_minus_infinity_off_domain(self):
        assert log_likelihood(STRIP, [0.0, 1.5], [1.0, 1.0]) == -math.inf


class TestStripCurveBlowup:
    def test_monotone_divergence_along_curve(self):
        values = [
            cumulant(STRIP, [z, math.sqrt(1 - z ** 3)]) for z in (0.05, 0.02, 0.01)
        ]
        assert values[0] < values[1] < values[2]
        assert values[2] > 10.0

    def test_laplace_method_magnitude(self):
        # at z = 0.01 the peak is sharp enough for the second-order Laplace
        # estimate to pin the magnitude
        z = 0.01
        t2sq = 1 - z ** 3
        a2 = 1 - t2sq

        def g(x):
            return z * x - a2 * x * x + t2sq - math.log1p(x * x)

        def d2g(x):
            return -2 * a2 - 2 * (1 - x * x) / (1 + x * x) ** 2

        from scipy.optimize import minimize_scalar

        res = minimize_scalar(lambda x: -g(x), bounds=(1.0, 1e6), method="bounded")
        laplace = g(res.x) + 0.5 * math.log(2 * math.pi / -d2g(res.x))
        measured = cumulant(STRIP, [z, math.sqrt(t2sq)])
        assert measured == pytest.approx(laplace, abs=5e-3)


class TestDiscreteFamilies:
    def test_logsumexp_matches_direct_sum(self, rng):
        fam = hw_discrete()
        atoms = fam.payload.atoms
        weights = fam.payload.weights
        for _ in range(50):
            theta = rng.uniform(-5.0, 5.0, size=2)
            direct = float(np.sum(weights * np.exp(atoms @ theta)))
            assert math.exp(cumulant(fam, theta)) == pytest.approx(
                direct, rel=1e-12
            )

    def test_matches_analytic_builtin(self, rng):
        fam = hw_discrete()
        for _ in range(25):
            theta = rng.uniform(-3.0, 3.0, size=2)
            assert cumulant(fam, theta) == pytest.approx(
                cumulant(HW, theta), abs=1e-13
            )
            np.testing.assert_allclose(
                mean_map(fam, theta), mean_map(HW, theta), atol=1e-13
            )

    def test_large_theta_no_overflow(self):
        fam = hw_discrete()
        val = cumulant(fam, [700.0, -700.0])
        assert math.isfinite(val)

    def test_degenerate_atoms_rejected(self):
        with pytest.raises(ValueError, match="affine submanifold"):
            discrete_family(atoms=[[0.0, 0.0], [1.0, 1.0]], weights=[0.5, 0.5])

    def test_nonpositive_weights_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            discrete_family(
                atoms=[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                weights=[0.5, 0.0, 0.5],
            )

    def test_mean_domain_is_open_hull(self):
        fam = hw_discrete()
        assert fam.domain.mean_domain(np.array([0.3, 0.2]))
        assert not fam.domain.mean_domain(np.array([0.6, 0.6]))
        assert not fam.domain.mean_domain(np.array([0.0, 0.2]))


class TestDescriptors:
    def test_builtin_round_trip(self):
        for name in builtin_names():
            desc = {"kind": "builtin", "name": name}
            fam = family_from_descriptor(desc)
            assert fam.name == name
            assert family_descriptor(fam) == desc

    def test_discrete_round_trip(self):
        desc = {
            "kind": "discrete",
            "atoms": [
                {"x": [0.0, 0.0], "w": 0.5},
                {"x": [1.0, 0.0], "w": 0.25},
                {"x": [0.0, 1.0], "w": 0.25},
            ],
        }
        fam = family_from_descriptor(desc)
        assert family_descriptor(fam) == desc

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            family_from_descriptor({"kind": "mystery"})


class TestDomainSpec:
    def test_boundary_points_have_finite_cumulant(self):
        for name in builtin_names():
            fam = builtin(name)
            for b in fam.domain.boundary_points:
                assert math.isfinite(cumulant(fam, b))

    def test_interior_points_have_finite_cumulant(self, rng):
        boxes = {
            "hardy-weinberg-saturated": ([-3, -3], [3, 3]),
            "poisson": ([-3], [3]),
            "gauss-mean": ([-3], [3]),
            "gauss-parabola": ([-3, -4], [3, -0.1]),
            "landau-dual": ([0.1], [5.0]),
            "strip-measure": ([-1, -0.9], [1, 0.9]),
        }
        for name, (lo, hi) in boxes.items():
            fam = builtin(name)
            for _ in range(10):
                theta = rng.uniform(lo, hi)
                assert fam.domain.interior(theta)
                assert math.isfinite(cumulant(fam, theta))


def test_cumulant_many_agrees_with_scalar(rng):
    for name in ("hardy-weinberg-saturated", "poisson", "gauss-parabola"):
        fam = builtin(name)
        thetas = rng.uniform(-2.0, 2.0, size=(20, fam.dim))
        if name == "gauss-parabola":
            thetas[:, 1] = -np.abs(thetas[:, 1]) - 0.1
        many = cumulant_many(fam, thetas)
        scalar = [cumulant(fam, row) for row in thetas]
        np.testing.assert_allclose(many, scalar, atol=1e-13)
