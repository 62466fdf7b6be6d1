"""Random game generators shared by the GAA and acceptance tests."""

import numpy as np

from phimix import LossSpec, bregman


def random_game(rng, rounds, n_experts=None, n_outcomes=None, loss_family=None):
    """Random panels, outcomes, prior and loss.  Expert predictions are kept
    at least 1e-3 from the boundary so log loss stays moderate."""
    k = n_experts or int(rng.integers(1, 5))
    n = n_outcomes or int(rng.integers(2, 4))
    family = loss_family or ("log", "brier")[int(rng.integers(2))]
    panels = rng.dirichlet(np.ones(n), size=(rounds, k)) * (1 - n * 1e-3) + 1e-3
    outcomes = rng.integers(0, n, size=rounds)
    prior = rng.dirichlet(np.ones(k)) * 0.9 + 0.1 / k
    return prior, getattr(LossSpec, family)(n), panels, outcomes


def strengthened_bound_gap(trace, mu_prime):
    """``<mu', sum alpha> + D(mu', prior) - L`` (nonnegative when the bound holds)."""
    total_alpha = trace.assessments.sum(axis=0)
    return mu_prime @ total_alpha + bregman(trace.entropy, mu_prime, trace.prior) - trace.player_total
