import numpy as np
import pytest

from oracles import simplex_grid
from phimix import (
    BoundaryGradientError,
    EntropySpec,
    InfiniteLossError,
    InvalidInputError,
    LossSpec,
    assessment,
    bregman,
    entropy_value,
    loss_vector,
    proper_loss_from_entropy,
    propriety_gap,
)
from phimix.losses import loss_value, panel_losses

LOG2 = 0.6931471805599453
PROPRIETY_FAMILIES = [EntropySpec.shannon(), EntropySpec.shannon(2.0), EntropySpec.quadratic(), EntropySpec.tsallis(2.0),
                      EntropySpec.tsallis(0.5)]


def brier_direct(p, x):
    e = np.zeros_like(p)
    e[x] = 1.0
    return float(((e - p) ** 2).sum())


def test_loss_vector_examples():
    np.testing.assert_allclose(loss_vector(LossSpec.log(), [0.5, 0.5]), [LOG2, LOG2])
    np.testing.assert_allclose(loss_vector(LossSpec.brier(), [1.0, 0.0]), [0.0, 2.0])
    np.testing.assert_allclose(loss_vector(LossSpec.brier(), [0.7, 0.3]), [0.18, 0.98], atol=1e-15)


def test_brier_matches_two_term_definition(rng):
    for n in (2, 3, 5):
        p = rng.dirichlet(np.ones(n))
        np.testing.assert_allclose(loss_vector(LossSpec.brier(n), p), [brier_direct(p, x) for x in range(n)])


def test_log_loss_infinite_only_when_queried():
    with pytest.raises(InfiniteLossError):
        loss_vector(LossSpec.log(), [1.0, 0.0])
    assert loss_value(LossSpec.log(), [1.0, 0.0], 0) == 0.0
    with pytest.raises(InfiniteLossError):
        loss_value(LossSpec.log(), [1.0, 0.0], 1)


def test_assessment_examples():
    a = assessment(LossSpec.log(), [[0.9, 0.1], [0.5, 0.5]], 0)
    np.testing.assert_allclose(a.values, [0.10536051565782628, LOG2], atol=1e-15)
    assert a.outcome == 0
    for loss in (LossSpec.log(3), LossSpec.brier(3)):
        assert assessment(loss, [[0.0, 0.0, 1.0]], 2).values.tolist() == [0.0]
    np.testing.assert_allclose(assessment(LossSpec.brier(), [[0.7, 0.3]], 1).values, [0.98])
    with pytest.raises(InfiniteLossError):
        assessment(LossSpec.log(), [[1.0, 0.0]], 1)


def test_panel_losses_columns_are_assessments(rng):
    panel = rng.dirichlet(np.ones(3), size=4)
    mat = panel_losses(LossSpec.brier(3), panel)
    for x in range(3):
        np.testing.assert_allclose(mat[:, x], assessment(LossSpec.brier(3), panel, x).values)


def test_loss_spec_validation():
    with pytest.raises(InvalidInputError):
        LossSpec("hinge", 2)
    with pytest.raises(InvalidInputError):
        LossSpec.log(1)
    with pytest.raises(InvalidInputError):
        LossSpec("proper", 2)
    with pytest.raises(InvalidInputError):
        LossSpec("log", 2, EntropySpec.shannon())
    with pytest.raises(InvalidInputError):
        loss_vector(LossSpec.log(3), [0.5, 0.5])


def test_proper_loss_examples():
    np.testing.assert_allclose(proper_loss_from_entropy(EntropySpec.shannon(), [0.5, 0.5]), [LOG2, LOG2], atol=1e-15)
    np.testing.assert_allclose(proper_loss_from_entropy(EntropySpec.quadratic(), [0.5, 0.5]), [-0.25, -0.25],
                               atol=1e-12)
    np.testing.assert_allclose(
        proper_loss_from_entropy(EntropySpec.shannon(), [0.9, 0.1]), [0.10536051565782628, 2.302585092994046],
        atol=1e-14,
    )
    with pytest.raises(BoundaryGradientError):
        proper_loss_from_entropy(EntropySpec.shannon(), [1.0, 0.0])


def test_proper_loss_of_scaled_shannon():
    mu = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(proper_loss_from_entropy(EntropySpec.shannon(4.0), mu), -np.log(mu) / 4.0, atol=1e-14)


def test_proper_family_loss_vector_uses_entropy():
    loss = LossSpec.proper(EntropySpec.quadratic(), 3)
    p = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(loss_vector(loss, p), proper_loss_from_entropy(EntropySpec.quadratic(), p))


def test_propriety_gap_examples():
    assert propriety_gap(EntropySpec.shannon(), [0.75, 0.25], [0.5, 0.5]) == pytest.approx(0.1308120359411369,
                                                                                           abs=1e-12)
    assert propriety_gap(EntropySpec.tsallis(2.0), [0.3, 0.7], [0.3, 0.7]) == pytest.approx(0.0, abs=1e-15)
    assert propriety_gap(EntropySpec.quadratic(), [0.25, 0.75], [0.5, 0.5]) == pytest.approx(0.0625, abs=1e-12)


@pytest.mark.parametrize("entropy", PROPRIETY_FAMILIES, ids=str)
@pytest.mark.parametrize("dim", [2, 3])
def test_propriety_and_savage_identity_on_grid(entropy, dim):
    pts = simplex_grid(dim, 50 if dim == 2 else 12)
    pts = pts[np.all(pts > 0, axis=1)]
    losses = np.array([proper_loss_from_entropy(entropy, p) for p in pts])
    expected = pts @ losses.T  # [i, j] = <mu_i, L(mu_j)>
    gaps = expected - np.diag(expected)[:, None]
    assert gaps.min() >= -1e-10
    for i in range(0, len(pts), 7):
        np.testing.assert_allclose(gaps[i], [bregman(entropy, pts[i], q) for q in pts], atol=1e-7)


@pytest.mark.parametrize("entropy", PROPRIETY_FAMILIES, ids=str)
def test_bayes_risk_link(entropy, rng):
    for _ in range(20):
        mu = rng.dirichlet(np.ones(4)) * 0.99 + 0.0025
        assert abs(mu @ proper_loss_from_entropy(entropy, mu) + entropy_value(entropy, mu)) <= 1e-8


def test_shannon_proper_loss_is_log_loss():
    for dim in (2, 3):
        for p in simplex_grid(dim, 20):
            if np.all(p > 0):
                np.testing.assert_allclose(
                    proper_loss_from_entropy(EntropySpec.shannon(), p), loss_vector(LossSpec.log(dim), p), atol=1e-9
                )


def test_bayes_entropy_matches_expected_self_loss(rng):
    for loss in (LossSpec.log(3), LossSpec.brier(3), LossSpec.proper(EntropySpec.tsallis(0.5), 3)):
        for _ in range(5):
            p = rng.dirichlet(np.ones(3))
            assert p @ loss_vector(loss, p) == pytest.approx(-entropy_value(loss.bayes_entropy, p), abs=1e-12)
