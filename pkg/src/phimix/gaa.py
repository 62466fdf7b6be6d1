"""The generalised aggregating algorithm (GAA).

The algorithm keeps its mixture over experts in the dual space: starting
from ``grad(prior)`` it subtracts each round's assessment (the experts'
losses on the observed outcome) and maps back to the simplex with the
conjugate gradient.  For the scaled negative Shannon entropy and a uniform
prior this is exactly Vovk's exponential-weights aggregating algorithm.

Two interfaces are provided: pure functions over an immutable
:class:`GaaState`, and :class:`AggregatingForecaster`, an estimator with
the usual ``fit`` / ``partial_fit`` / ``predict_proba`` / ``get_params``
surface.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import softmax
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .core import check_dual, check_outcome, check_panel, check_simplex, clamp_interior
from .entropy import DEFAULT_SOLVER, EntropySpec, bregman, conjugate, conjugate_gradient, entropy_gradient
from .exceptions import BoundaryGradientError, InfiniteLossError, InvalidInputError, UnboundedPenaltyError
from .losses import LossSpec, loss_value, panel_losses
from .mixability import INTERIOR_EPS, SLACK_TOLERANCE, mix_bound_from_dual, substitute


@dataclass(frozen=True)
class GaaState:
    entropy: EntropySpec
    prior: np.ndarray
    dual: np.ndarray
    round: int = 0

    def mixture(self, cfg=DEFAULT_SOLVER):
        return conjugate_gradient(self.entropy, self.dual, cfg)


def init(entropy, prior):
    """Start a game from ``prior``; boundary priors are clamped into the interior
    when the entropy's gradient is singular there."""
    prior = check_simplex(prior, name="prior")
    if entropy.singular_boundary and np.any(prior <= 0):
        if prior.size * INTERIOR_EPS >= 1:
            raise InvalidInputError("prior cannot be clamped into the interior")
        prior = clamp_interior(prior, INTERIOR_EPS)
    try:
        dual = entropy_gradient(entropy, prior)
    except BoundaryGradientError as exc:
        raise InvalidInputError(f"invalid prior: {exc}") from exc
    return GaaState(entropy, prior, check_dual(dual), 0)


def update(state, assessment):
    """Subtract the round's assessment from the dual accumulator."""
    values = np.asarray(getattr(assessment, "values", assessment), dtype=float)
    if values.shape != state.dual.shape:
        raise InvalidInputError(f"assessment has shape {values.shape}, expected {state.dual.shape}")
    return replace(state, dual=check_dual(state.dual - values), round=state.round + 1)


def predict(state, panel, loss, cfg=DEFAULT_SOLVER, slack_tolerance=SLACK_TOLERANCE):
    """Least-worst-slack prediction against the mixability bound of the current mixture."""
    panel = check_panel(panel, loss.outcome_count)
    if panel.shape[0] != state.dual.size:
        raise InvalidInputError(f"panel has {panel.shape[0]} experts, state has {state.dual.size}")
    losses = panel_losses(loss, panel, cfg, allow_infinite=True)
    bound = mix_bound_from_dual(state.entropy, state.dual, losses, cfg)
    return substitute(loss, bound, cfg, slack_tolerance)


def _realized(losses, x):
    alpha = losses[:, x]
    if not np.all(np.isfinite(alpha)):
        raise InfiniteLossError(f"an expert gave zero probability to the observed outcome {x}")
    return alpha


def regret_bound(entropy, prior, theta):
    """Regret penalty ``D(delta_theta, prior)`` against expert ``theta``."""
    prior = check_simplex(prior, name="prior")
    if not 0 <= theta < prior.size:
        raise InvalidInputError(f"expert index {theta} out of range")
    delta = np.zeros(prior.size)
    delta[theta] = 1.0
    penalty = float(bregman(entropy, delta, prior))
    if not np.isfinite(penalty):
        raise UnboundedPenaltyError(f"D(delta_{theta}, prior) is not finite for {entropy}")
    return penalty


def classic_aa_weights(eta, cumulative_losses):
    """Exponential weights ``exp(-eta L) / sum exp(-eta L)``."""
    if not eta > 0:
        raise InvalidInputError("eta must be > 0")
    return softmax(-eta * np.asarray(cumulative_losses, dtype=float))


@dataclass(frozen=True)
class GameTrace:
    """Round-by-round record of a game.

    Arrays are indexed by round first; ``mixtures`` has one extra leading
    row holding the prior mixture.
    """

    entropy: EntropySpec
    prior: np.ndarray
    expert_predictions: np.ndarray  # (T, experts, outcomes)
    predictions: np.ndarray  # (T, outcomes)
    outcomes: np.ndarray  # (T,)
    assessments: np.ndarray  # (T, experts)
    player_losses: np.ndarray  # (T,)
    bounds: np.ndarray  # (T,) mixability bound at the observed outcome
    slack: np.ndarray  # (T,)
    mixtures: np.ndarray  # (T + 1, experts)
    penalties: np.ndarray  # (experts,) D(delta_theta, prior)
    telescoping_residual: float
    slack_tolerance: float = SLACK_TOLERANCE
    extra: dict = field(default_factory=dict)

    @property
    def rounds(self):
        return self.outcomes.size

    @property
    def expert_cumulative(self):
        return np.cumsum(self.assessments, axis=0)

    @property
    def player_cumulative(self):
        return np.cumsum(self.player_losses)

    @property
    def expert_totals(self):
        if not self.rounds:
            return np.zeros(self.assessments.shape[1])
        return self.expert_cumulative[-1]

    @property
    def player_total(self):
        return float(self.player_cumulative[-1]) if self.rounds else 0.0

    @property
    def best_expert(self):
        return int(np.argmin(self.expert_totals))

    @property
    def regret(self):
        return self.player_total - float(self.expert_totals.min()) if self.rounds else 0.0

    @property
    def cumulative_regret(self):
        return self.player_cumulative - self.expert_cumulative.min(axis=1)

    @property
    def bound(self):
        return float(self.penalties[self.best_expert])

    @property
    def infeasible_rounds(self):
        return np.flatnonzero(self.slack > self.slack_tolerance)

    def regret_vs(self, theta):
        return self.player_total - float(self.expert_totals[theta])

    def bound_satisfied(self, tolerance_per_round=1e-5):
        """Per-expert check ``L <= L_theta + D(delta_theta, prior) + tol * T``."""
        allowance = tolerance_per_round * max(self.rounds, 1)
        return self.player_total <= self.expert_totals + self.penalties + allowance


def run_game(entropy, prior, loss, panels, outcomes, cfg=DEFAULT_SOLVER, slack_tolerance=SLACK_TOLERANCE):
    """Play the GAA against a fixed sequence of panels and outcomes.

    ``panels`` has shape (T, n_experts, n_outcomes).  Rounds where no
    prediction meets the bound are still played (with the least-slack
    prediction) and show up in :attr:`GameTrace.infeasible_rounds`.
    """
    state = init(entropy, prior)
    n_experts = state.dual.size
    outcomes = np.asarray(outcomes).reshape(-1)
    panels = np.asarray(panels, dtype=float)
    if panels.size == 0 and outcomes.size == 0:
        panels = panels.reshape(0, n_experts, loss.outcome_count)
    if panels.ndim != 3 or panels.shape[0] != outcomes.size or panels.shape[1:] != (n_experts, loss.outcome_count):
        raise InvalidInputError(
            f"panels must have shape (T={outcomes.size}, {n_experts}, {loss.outcome_count}), got {panels.shape}"
        )
    T = outcomes.size
    predictions = np.empty((T, loss.outcome_count))
    assessments = np.empty((T, n_experts))
    player_losses = np.empty(T)
    bounds = np.empty(T)
    slack = np.empty(T)
    mixtures = np.empty((T + 1, n_experts))
    mixtures[0] = state.mixture(cfg)
    for t in range(T):
        x = check_outcome(outcomes[t], loss.outcome_count)
        losses = panel_losses(loss, panels[t], cfg, allow_infinite=True)
        bound = mix_bound_from_dual(entropy, state.dual, losses, cfg)
        result = substitute(loss, bound, cfg, slack_tolerance)
        predictions[t] = result.prediction
        slack[t] = result.worst_slack
        bounds[t] = bound[x]
        player_losses[t] = loss_value(loss, result.prediction, x, cfg)
        assessments[t] = _realized(losses, x)
        state = update(state, assessments[t])
        mixtures[t + 1] = state.mixture(cfg)

    d0 = entropy_gradient(entropy, state.prior)
    telescoped = conjugate(entropy, d0, cfg) - conjugate(entropy, d0 - assessments.sum(axis=0), cfg)
    penalties = np.array([regret_bound(entropy, state.prior, k) for k in range(n_experts)])
    return GameTrace(
        entropy=entropy,
        prior=state.prior,
        expert_predictions=panels,
        predictions=predictions,
        outcomes=outcomes.astype(int),
        assessments=assessments,
        player_losses=player_losses,
        bounds=bounds,
        slack=slack,
        mixtures=mixtures,
        penalties=penalties,
        telescoping_residual=float(abs(telescoped - bounds.sum())),
        slack_tolerance=slack_tolerance,
    )


class AggregatingForecaster(BaseEstimator):
    """Online forecaster aggregating expert predictions with the GAA.

    Parameters
    ----------
    entropy : {"shannon", "tsallis", "quadratic"}
        Family of the regularizing entropy.
    eta : float
        Learning rate; the entropy used is ``entropy / eta``.
    q : float, optional
        Tsallis index, only for ``entropy="tsallis"``.
    loss : {"log", "brier"}
        Loss the forecaster is evaluated with.
    prior : array-like, optional
        Initial mixture over experts; uniform when omitted.
    slack_tolerance : float
        Slack below which a round counts as feasible.

    Attributes
    ----------
    state_ : GaaState
    trace_ : GameTrace
        Set by :meth:`fit`.
    cumulative_loss_, expert_cumulative_loss_ : float, ndarray
        Running totals maintained by :meth:`partial_fit`.
    """

    def __init__(self, entropy="shannon", eta=1.0, q=None, loss="log", prior=None, slack_tolerance=SLACK_TOLERANCE):
        self.entropy = entropy
        self.eta = eta
        self.q = q
        self.loss = loss
        self.prior = prior
        self.slack_tolerance = slack_tolerance

    def _specs(self, n_outcomes):
        return EntropySpec(self.entropy, self.eta, self.q), LossSpec(self.loss, n_outcomes)

    def _start(self, n_experts, n_outcomes):
        entropy, loss = self._specs(n_outcomes)
        prior = np.full(n_experts, 1.0 / n_experts) if self.prior is None else self.prior
        self.state_ = init(entropy, prior)
        if self.state_.dual.size != n_experts:
            raise InvalidInputError(f"prior has {self.state_.dual.size} entries, panel has {n_experts} experts")
        self.loss_spec_ = loss
        self.n_experts_, self.n_outcomes_ = n_experts, n_outcomes
        self.cumulative_loss_ = 0.0
        self.expert_cumulative_loss_ = np.zeros(n_experts)

    def _check_fitted(self):
        if not hasattr(self, "state_"):
            raise NotFittedError(f"{type(self).__name__} has not seen any rounds yet")

    def fit(self, panels, outcomes):
        """Play a whole game from scratch."""
        panels = np.asarray(panels, dtype=float)
        if panels.ndim != 3:
            raise InvalidInputError(f"panels must be 3-d (T, n_experts, n_outcomes), got shape {panels.shape}")
        self._start(panels.shape[1], panels.shape[2])
        self.trace_ = run_game(
            self.state_.entropy,
            self.state_.prior,
            self.loss_spec_,
            panels,
            outcomes,
            slack_tolerance=self.slack_tolerance,
        )
        for t in range(self.trace_.rounds):
            self.state_ = update(self.state_, self.trace_.assessments[t])
        self.cumulative_loss_ = self.trace_.player_total
        self.expert_cumulative_loss_ = self.trace_.expert_totals.copy()
        return self

    def partial_fit(self, panel, outcome):
        """Play one round: predict on ``panel``, observe ``outcome``, update."""
        panel = np.asarray(panel, dtype=float)
        if not hasattr(self, "state_"):
            if panel.ndim != 2:
                raise InvalidInputError(f"panel must be 2-d (n_experts, n_outcomes), got shape {panel.shape}")
            self._start(*panel.shape)
        result = predict(self.state_, panel, self.loss_spec_, slack_tolerance=self.slack_tolerance)
        x = check_outcome(outcome, self.n_outcomes_)
        alpha = _realized(panel_losses(self.loss_spec_, panel, allow_infinite=True), x)
        self.cumulative_loss_ += loss_value(self.loss_spec_, result.prediction, x)
        self.expert_cumulative_loss_ = self.expert_cumulative_loss_ + alpha
        self.state_ = update(self.state_, alpha)
        return self

    def predict_proba(self, panels):
        """Substitution prediction(s) for a panel (2-d) or a stack of panels (3-d),
        all made with the current mixture."""
        self._check_fitted()
        panels = np.asarray(panels, dtype=float)
        if panels.ndim == 2:
            return predict(self.state_, panels, self.loss_spec_, slack_tolerance=self.slack_tolerance).prediction
        return np.vstack([self.predict_proba(p) for p in panels])

    def predict(self, panels):
        """Most probable outcome under :meth:`predict_proba`."""
        return np.argmax(self.predict_proba(panels), axis=-1)

    @property
    def mixture_(self):
        self._check_fitted()
        return self.state_.mixture()

    @property
    def regret_(self):
        self._check_fitted()
        return self.cumulative_loss_ - float(self.expert_cumulative_loss_.min())

    def regret_bound(self, theta):
        self._check_fitted()
        return regret_bound(self.state_.entropy, self.state_.prior, theta)
