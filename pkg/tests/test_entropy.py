import numpy as np
import pytest

from oracles import grid_conjugate, mp_kl, mp_softmax, phi, simplex_grid, tangent_fd
from phimix import (
    BoundaryGradientError,
    ConjugateSolverConfig,
    EntropySpec,
    InvalidInputError,
    SolverError,
    bregman,
    conjugate,
    conjugate_gradient,
    entropy_gradient,
    entropy_value,
    project_to_simplex,
)

LOG2 = 0.6931471805599453


def interior_point(rng, n):
    return rng.dirichlet(np.ones(n)) * 0.98 + 0.02 / n


class TestValues:
    def test_examples(self):
        assert entropy_value(EntropySpec.shannon(), [0.5, 0.5]) == pytest.approx(-LOG2, abs=1e-15)
        assert entropy_value(EntropySpec.shannon(), [0.0, 1.0, 0.0]) == 0.0
        assert entropy_value(EntropySpec.quadratic(), [0.25] * 4) == pytest.approx(0.125)

    def test_scaling_and_oracle(self, family, rng):
        mu = rng.dirichlet(np.ones(4), size=20)
        np.testing.assert_allclose(entropy_value(family, mu), phi(family, mu), atol=1e-14)

    def test_tsallis_tends_to_shannon(self):
        mu = np.array([0.2, 0.3, 0.5])
        near = entropy_value(EntropySpec.tsallis(1.0 + 1e-6), mu)
        assert near == pytest.approx(entropy_value(EntropySpec.shannon(), mu), abs=1e-5)

    @pytest.mark.parametrize(
        "kwargs",
        [dict(family="renyi"), dict(eta=0.0), dict(eta=-1.0), dict(family="tsallis", q=1.0),
         dict(family="tsallis", q=-0.5), dict(family="tsallis"), dict(family="quadratic", q=2.0)],
    )
    def test_spec_validation(self, kwargs):
        with pytest.raises(InvalidInputError):
            EntropySpec(**kwargs)


class TestGradient:
    def test_examples(self):
        g = entropy_gradient(EntropySpec.shannon(), [0.5, 0.5])
        np.testing.assert_allclose(g - g.mean(), 0.0, atol=1e-15)
        mu = np.array([0.1, 0.6, 0.3])
        np.testing.assert_allclose(entropy_gradient(EntropySpec.quadratic(), mu), mu)
        np.testing.assert_allclose(entropy_gradient(EntropySpec.tsallis(2.0), [0.25, 0.75]), [0.5, 1.5])

    def test_boundary_errors(self):
        with pytest.raises(BoundaryGradientError):
            entropy_gradient(EntropySpec.shannon(), [1.0, 0.0])
        with pytest.raises(BoundaryGradientError):
            entropy_gradient(EntropySpec.tsallis(0.5), [1.0, 0.0])
        # finite on the boundary for these families
        entropy_gradient(EntropySpec.tsallis(2.0), [1.0, 0.0])
        entropy_gradient(EntropySpec.quadratic(), [1.0, 0.0])

    def test_matches_finite_differences(self, family, rng):
        for _ in range(20):
            n = int(rng.integers(2, 6))
            mu = interior_point(rng, n)
            g = entropy_gradient(family, mu)
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    fd = tangent_fd(lambda m: phi(family, m), mu, i, j)
                    assert abs(fd - (g[i] - g[j])) <= 1e-5 * max(1.0, abs(g[i] - g[j]))


class TestConjugate:
    def test_examples(self):
        assert conjugate(EntropySpec.shannon(), np.zeros(3)) == pytest.approx(1.0986122886681098, abs=1e-15)
        assert conjugate(EntropySpec.shannon(2.0), np.zeros(2)) == pytest.approx(0.34657359027997264, abs=1e-15)
        # grid oracle at resolution 1e-3 gives 0.5
        assert conjugate(EntropySpec.quadratic(), [1.0, 0.0]) == pytest.approx(0.5, abs=1e-12)

    def test_gradient_examples(self):
        np.testing.assert_allclose(conjugate_gradient(EntropySpec.shannon(), [0.0, 0.0]), [0.5, 0.5])
        np.testing.assert_allclose(
            conjugate_gradient(EntropySpec.shannon(), [0.0, -1.0]), [0.7310585786300049, 0.2689414213699951],
            atol=1e-15,
        )
        np.testing.assert_allclose(conjugate_gradient(EntropySpec.quadratic(), [0.8, 0.4]), [0.7, 0.3], atol=1e-12)

    def test_softmax_against_mpmath(self, rng):
        for eta in (0.5, 1.0, 3.0):
            v = rng.uniform(-5, 5, 6)
            np.testing.assert_allclose(
                conjugate_gradient(EntropySpec.shannon(eta), v), mp_softmax(v, eta), rtol=1e-12, atol=1e-15
            )

    def test_quadratic_gradient_is_projection(self, rng):
        for eta in (0.3, 1.0, 2.0):
            v = rng.uniform(-3, 3, 5)
            np.testing.assert_allclose(
                conjugate_gradient(EntropySpec.quadratic(eta), v), project_to_simplex(eta * v), atol=1e-12
            )

    def test_against_grid_oracle(self, family, rng):
        for _ in range(5):
            n = int(rng.integers(2, 4))
            v = rng.uniform(-2, 2, n)
            value, _ = grid_conjugate(family, v, 300 if n == 3 else 3000)
            exact = conjugate(family, v)
            assert exact >= value - 1e-12
            assert exact - value <= 1e-3

    def test_translation_invariance(self, family, rng):
        for _ in range(30):
            n = int(rng.integers(1, 9))
            v = rng.uniform(-5, 5, n)
            for alpha in (-3.0, 0.1, 7.0):
                assert abs(conjugate(family, v + alpha) - conjugate(family, v) - alpha) <= 1e-9
                np.testing.assert_allclose(
                    conjugate_gradient(family, v + alpha), conjugate_gradient(family, v), atol=1e-7
                )

    def test_fenchel_young_and_inverse(self, family, rng):
        for _ in range(30):
            mu = interior_point(rng, int(rng.integers(2, 9)))
            g = entropy_gradient(family, mu)
            assert abs(conjugate(family, g) - (mu @ g - entropy_value(family, mu))) <= 1e-7
            np.testing.assert_allclose(conjugate_gradient(family, g), mu, atol=1e-6)

    def test_closed_form_vs_numeric(self, rng):
        for eta in (0.5, 1.0, 2.0):
            spec = EntropySpec.shannon(eta)
            for _ in range(40):
                v = rng.uniform(-5, 5, int(rng.integers(1, 9)))
                assert abs(conjugate(spec, v) - conjugate(spec, v, method="numeric")) <= 1e-6
                np.testing.assert_allclose(
                    conjugate_gradient(spec, v), conjugate_gradient(spec, v, method="numeric"), atol=1e-8
                )

    def test_scaling_identity(self, family, rng):
        base = family.base
        for eta in (0.25, 1.0, 4.0):
            v = rng.uniform(-5, 5, 5)
            assert abs(conjugate(base, eta * v) / eta - conjugate(family.with_eta(eta), v)) <= 1e-8

    def test_non_convergence_raises_solver_error(self):
        cfg = ConjugateSolverConfig(max_iterations=1, tolerance=1e-15)
        with pytest.raises(SolverError) as info:
            conjugate(EntropySpec.tsallis(0.5), [0.3, -1.2, 2.0], cfg)
        assert info.value.residual >= 0

    def test_unknown_method(self):
        with pytest.raises(InvalidInputError):
            conjugate(EntropySpec.quadratic(), [0.0, 1.0], method="closed_form")
        with pytest.raises(InvalidInputError):
            conjugate_gradient(EntropySpec.shannon(), [0.0, 1.0], method="newton")

    @pytest.mark.parametrize("kwargs", [dict(max_iterations=0), dict(tolerance=0.0), dict(grid_resolution=5)])
    def test_solver_config_validation(self, kwargs):
        with pytest.raises(InvalidInputError):
            ConjugateSolverConfig(**kwargs)


class TestBregman:
    def test_examples(self):
        kl = bregman(EntropySpec.shannon(), [0.75, 0.25], [0.5, 0.5])
        assert kl == pytest.approx(0.1308120359411369, abs=1e-14)
        assert kl == pytest.approx(mp_kl([0.75, 0.25], [0.5, 0.5]), abs=1e-14)
        assert bregman(EntropySpec.quadratic(), [1.0, 0.0], [0.5, 0.5]) == pytest.approx(0.25)

    def test_self_divergence_zero(self, family, rng):
        mu = interior_point(rng, 4)
        assert abs(bregman(family, mu, mu)) <= 1e-14

    def test_vertex_first_argument(self):
        assert bregman(EntropySpec.shannon(), [0.0, 1.0], [0.9, 0.1]) == pytest.approx(2.302585092994046)
        with pytest.raises(BoundaryGradientError):
            bregman(EntropySpec.shannon(), [0.5, 0.5], [1.0, 0.0])

    def test_nonnegative_and_fenchel_gap(self, family, rng):
        for _ in range(30):
            n = int(rng.integers(2, 6))
            mu, nu = rng.dirichlet(np.ones(n)), interior_point(rng, n)
            d = bregman(family, mu, nu)
            assert d >= -1e-10
            g = entropy_gradient(family, nu)
            gap = entropy_value(family, mu) + conjugate(family, g) - mu @ g
            assert abs(d - gap) <= 1e-7

    def test_batch_first_argument(self, family, rng):
        pts = simplex_grid(3, 10)
        nu = interior_point(rng, 3)
        batch = bregman(family, pts, nu)
        np.testing.assert_allclose(batch, [bregman(family, p, nu) for p in pts], atol=1e-13)


def test_potential_difference_equals_primal_infimum(family, rng):
    """conj(grad mu) - conj(grad mu - v) equals the grid infimum of <mu', v> + D(mu', mu)."""
    for _ in range(10):
        n = int(rng.integers(2, 4))
        mu = interior_point(rng, n)
        v = rng.uniform(-2, 2, n)
        g = entropy_gradient(family, mu)
        lhs = conjugate(family, g) - conjugate(family, g - v)
        pts = simplex_grid(n, 200)
        rhs = np.min(pts @ v + bregman(family, pts, mu))
        assert abs(lhs - rhs) <= 5e-3
        assert lhs <= rhs + 1e-12
