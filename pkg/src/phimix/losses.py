"""Losses on predictions over a finite outcome set, assessments, and proper
losses built from an entropy.

A loss maps a prediction ``p`` (a probability vector over outcomes) to the
vector of penalties ``loss_x(p)``, one per outcome ``x``.
"""

from dataclasses import dataclass

import numpy as np

from .core import check_outcome, check_panel, check_simplex
from .entropy import DEFAULT_SOLVER, EntropySpec, conjugate, entropy_gradient
from .exceptions import InfiniteLossError, InvalidInputError

LOSS_FAMILIES = ("log", "brier", "proper")


@dataclass(frozen=True)
class LossSpec:
    """Declarative description of a loss over ``outcome_count`` outcomes.

    ``family="proper"`` builds the proper loss generated by ``entropy``.
    """

    family: str = "log"
    outcome_count: int = 2
    entropy: EntropySpec = None

    def __post_init__(self):
        if self.family not in LOSS_FAMILIES:
            raise InvalidInputError(f"unknown loss family {self.family!r}; expected one of {LOSS_FAMILIES}")
        if int(self.outcome_count) != self.outcome_count or self.outcome_count < 2:
            raise InvalidInputError(f"outcome_count must be an integer >= 2, got {self.outcome_count!r}")
        if (self.family == "proper") != (self.entropy is not None):
            raise InvalidInputError("an entropy is required for, and only for, the 'proper' loss family")

    @classmethod
    def log(cls, outcome_count=2):
        return cls("log", outcome_count)

    @classmethod
    def brier(cls, outcome_count=2):
        return cls("brier", outcome_count)

    @classmethod
    def proper(cls, entropy, outcome_count=2):
        return cls("proper", outcome_count, entropy)

    @property
    def bayes_entropy(self):
        """The entropy whose negative is this loss's Bayes risk
        ``min_q E_{x~p} loss_x(q) = <p, loss(p)>``."""
        if self.family == "log":
            return EntropySpec.shannon(1.0)
        if self.family == "brier":
            # <p, brier(p)> = 1 - sum p^2
            return EntropySpec.tsallis(2.0, 1.0)
        return self.entropy

    @property
    def finite_on_boundary(self):
        return self.family != "log" and not (self.family == "proper" and self.entropy.singular_boundary)

    def __str__(self):
        if self.family == "proper":
            return f"proper[{self.entropy}]"
        return self.family


@dataclass(frozen=True)
class Assessment:
    """Per-expert losses on one outcome."""

    values: np.ndarray
    outcome: int


def loss_vector(loss, p, cfg=DEFAULT_SOLVER):
    """Return ``(loss_x(p))_x`` for every outcome ``x``."""
    p = check_simplex(p)
    if p.size != loss.outcome_count:
        raise InvalidInputError(f"prediction has {p.size} outcomes, loss expects {loss.outcome_count}")
    if loss.family == "log":
        if np.any(p <= 0.0):
            raise InfiniteLossError("log loss is infinite on outcomes with zero predicted probability")
        return -np.log(p)
    if loss.family == "brier":
        return 1.0 - 2.0 * p + p @ p
    return proper_loss_from_entropy(loss.entropy, p, cfg)


def loss_value(loss, p, x, cfg=DEFAULT_SOLVER):
    """Loss of prediction ``p`` when outcome ``x`` occurs."""
    p = check_simplex(p)
    x = check_outcome(x, loss.outcome_count)
    if loss.family == "log":
        if p[x] <= 0.0:
            raise InfiniteLossError(f"log loss is infinite: outcome {x} has zero predicted probability")
        return float(-np.log(p[x]))
    return float(loss_vector(loss, p, cfg)[x])


def panel_losses(loss, panel, cfg=DEFAULT_SOLVER, allow_infinite=False):
    """Matrix of losses, shape (n_experts, n_outcomes): column ``x`` is the
    assessment on outcome ``x``.

    With ``allow_infinite=True`` a log loss at zero probability is reported
    as ``+inf`` instead of raising; the mixability bounds know how to drop
    such experts from the outcomes they rule out.
    """
    panel = check_panel(panel, loss.outcome_count)
    if allow_infinite and loss.family == "log":
        with np.errstate(divide="ignore"):
            return -np.log(panel)
    return np.vstack([loss_vector(loss, row, cfg) for row in panel])


def assessment(loss, panel, x, cfg=DEFAULT_SOLVER):
    panel = check_panel(panel, loss.outcome_count)
    x = check_outcome(x, loss.outcome_count)
    values = np.array([loss_value(loss, row, x, cfg) for row in panel])
    values.flags.writeable = False
    return Assessment(values, x)


def proper_loss_from_entropy(entropy, mu, cfg=DEFAULT_SOLVER):
    """Proper loss generated by a differentiable entropy,
    ``conj(grad(mu)) * 1 - grad(mu)``.

    The result does not depend on which gradient representative is used,
    since adding a constant to the gradient shifts the conjugate term by
    the same constant.
    """
    g = entropy_gradient(entropy, mu)
    return conjugate(entropy, g, cfg) - g


def propriety_gap(entropy, mu, mu_prime, cfg=DEFAULT_SOLVER):
    """Excess expected loss ``<mu, L(mu')> - <mu, L(mu)>`` of reporting ``mu'``
    when outcomes follow ``mu``."""
    mu = check_simplex(mu, name="mu")
    return float(
        mu @ proper_loss_from_entropy(entropy, mu_prime, cfg) - mu @ proper_loss_from_entropy(entropy, mu, cfg)
    )
