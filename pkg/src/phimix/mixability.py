"""Phi-mixability: the mixability bound in its three equivalent forms, the
substitution solver, sampled certification, and mixability-constant search.

Given a mixture ``mu`` over experts and their predictions, the bound on
outcome ``x`` is the largest loss the player may suffer on ``x``:

    potential form   conj(grad(mu)) - conj(grad(mu) - a(x))
    conjugate form   -conj(-L(mu) - a(x)),  L the proper loss of the entropy
    primal form      min_{mu'} <mu', a(x)> + D(mu', mu)

where ``a(x)`` holds the experts' losses on ``x``.  A loss is mixable for
the entropy when some prediction meets the bound on every outcome at once.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import xlogy

from .core import SimplexGrid, check_panel, check_simplex, clamp_interior, enumerate_grid
from .entropy import DEFAULT_SOLVER, bregman, conjugate, conjugate_gradient, entropy_gradient, entropy_value
from .exceptions import InfiniteLossError, InvalidInputError, OutOfRangeError, SolverError
from .losses import loss_vector, panel_losses, proper_loss_from_entropy

SLACK_TOLERANCE = 1e-7
CERTIFICATE_FACTOR = 10.0
INTERIOR_EPS = 1e-12
ETA_BRACKET = (1e-3, 1e3)


@dataclass(frozen=True)
class SubstitutionResult:
    prediction: np.ndarray
    worst_slack: float
    feasible: bool


@dataclass(frozen=True)
class Witness:
    """A (mixture, panel) pair for which no prediction meets the bound."""

    mixture: np.ndarray
    panel: np.ndarray
    worst_slack: float
    certificate: float


@dataclass(frozen=True)
class MixabilityVerdict:
    samples_tested: int
    witness_failures: list = field(default_factory=list)

    @property
    def mixable_on_samples(self):
        return not self.witness_failures


def _check_mixture(entropy, mu):
    mu = check_simplex(mu, name="mu")
    entropy_gradient(entropy, mu)  # raises on singular boundary points
    return mu


def _face_conjugate(entropy, v, cfg):
    """Conjugate of ``v`` whose ``-inf`` entries pin those coordinates to zero.

    Every supported entropy restricted to a face of the simplex is the same
    entropy in fewer dimensions, so this is the conjugate over that face.
    """
    keep = np.isfinite(v)
    if not keep.any():
        return -np.inf
    return conjugate(entropy, v[keep], cfg)


def _check_losses(losses, n_experts):
    losses = np.asarray(losses, dtype=float)
    if losses.ndim != 2 or losses.shape[0] != n_experts:
        raise InvalidInputError(f"loss matrix shape {losses.shape} does not match {n_experts} experts")
    if np.any(np.isnan(losses) | (losses == -np.inf)):
        raise InvalidInputError("expert losses must be finite or +inf")
    return losses


def mix_bound(entropy, mu, panel, loss, cfg=DEFAULT_SOLVER):
    """Per-outcome bound in potential-difference form.

    An expert with infinite loss on ``x`` gets no weight in the bound for
    ``x``; if every expert's loss on ``x`` is infinite the bound is ``+inf``.
    """
    mu = _check_mixture(entropy, mu)
    losses = panel_losses(loss, panel, cfg, allow_infinite=True)
    return mix_bound_from_dual(entropy, entropy_gradient(entropy, mu), losses, cfg)


def mix_bound_from_dual(entropy, dual, losses, cfg=DEFAULT_SOLVER):
    """Potential-difference bound for a mixture represented by a dual vector.

    ``losses`` is the (n_experts, n_outcomes) matrix of expert losses.  Any
    representative of ``grad(mu)`` modulo constants gives the same result.
    """
    dual = np.asarray(dual, dtype=float)
    losses = _check_losses(losses, dual.size)
    base = conjugate(entropy, dual, cfg)
    return np.array([base - _face_conjugate(entropy, dual - losses[:, x], cfg) for x in range(losses.shape[1])])


def mix_bound_conjugate_form(entropy, mu, panel, loss, cfg=DEFAULT_SOLVER):
    """Per-outcome bound ``-conj(-L(mu) - a(x))`` built from the proper loss of the entropy."""
    mu = _check_mixture(entropy, mu)
    proper = proper_loss_from_entropy(entropy, mu, cfg)
    losses = _check_losses(panel_losses(loss, panel, cfg, allow_infinite=True), mu.size)
    return np.array([-_face_conjugate(entropy, -proper - losses[:, x], cfg) for x in range(losses.shape[1])])


def mix_bound_primal(entropy, mu, panel, loss, grid_resolution=200, cfg=DEFAULT_SOLVER):
    """Per-outcome bound ``min_{mu'} <mu', a(x)> + D(mu', mu)``, minimized over a simplex grid."""
    mu = _check_mixture(entropy, mu)
    losses = panel_losses(loss, panel, cfg)
    grid = enumerate_grid(SimplexGrid(mu.size, grid_resolution))
    divergence = bregman(entropy, grid, mu)
    return (grid @ losses + divergence[:, None]).min(axis=0)


def shannon_mix_bound(eta, mu, losses):
    """Classical exponential-weights bound ``-(1/eta) log sum_theta mu exp(-eta a(x))``."""
    from scipy.special import logsumexp

    mu = check_simplex(mu, name="mu")
    losses = np.asarray(losses, dtype=float)
    return -logsumexp(-eta * losses, b=mu[:, None], axis=0) / eta


def _outcome_losses(loss, p, outcomes, cfg):
    if loss.family == "log":
        if np.any(p[outcomes] <= 0):
            raise InfiniteLossError("log loss is infinite on an outcome with zero predicted probability")
        return -np.log(p[outcomes])
    return loss_vector(loss, p, cfg)[outcomes]


def worst_slack(loss, p, bound, cfg=DEFAULT_SOLVER):
    """``max_x loss_x(p) - bound(x)`` over outcomes with a finite bound;
    +inf when ``p`` incurs an infinite loss on one of them."""
    p = check_simplex(p)
    bound = np.asarray(bound, dtype=float)
    finite = np.flatnonzero(np.isfinite(bound))
    if finite.size == 0:
        return -np.inf
    try:
        return float(np.max(_outcome_losses(loss, p, finite, cfg) - bound[finite]))
    except InfiniteLossError:
        return np.inf


def _substitute_dual(loss, bound, cfg):
    # For a proper loss, max_w min_p <w, loss(p) - bound> is attained at p = w,
    # so the min-max prediction is the conjugate gradient of the loss's
    # Bayes entropy at -bound.  Outcomes with an infinite bound get weight 0.
    bound = np.asarray(bound, dtype=float)
    finite = np.isfinite(bound)
    if not finite.any():
        return np.full(bound.size, 1.0 / bound.size)
    p = np.zeros(bound.size)
    p[finite] = conjugate_gradient(loss.bayes_entropy, -bound[finite], cfg)
    return p


def _substitute_numeric(loss, bound, cfg, seeds=5):
    n = loss.outcome_count
    bound = np.asarray(bound, dtype=float)
    floor = INTERIOR_EPS if not loss.finite_on_boundary else 0.0
    resolution = {2: 400, 3: 60}.get(n, 12)
    grid = enumerate_grid(SimplexGrid(n, resolution))
    if floor:
        grid = grid[np.all(grid > 0, axis=1)]
    scores = np.array([worst_slack(loss, g, bound, cfg) for g in grid])
    starts = grid[np.argsort(scores)[:seeds]]

    def objective(z):
        return z[-1]

    finite = np.flatnonzero(np.isfinite(bound))

    def margins(z):
        p = np.clip(z[:-1], floor, None)
        return z[-1] - (_outcome_losses(loss, p / p.sum(), finite, cfg) - bound[finite])

    best_p, best_s = starts[0], scores.min()
    for start in starts:
        z0 = np.append(start, worst_slack(loss, start, bound, cfg))
        res = minimize(
            objective,
            z0,
            method="SLSQP",
            bounds=[(floor, 1.0)] * n + [(None, None)],
            constraints=[
                {"type": "eq", "fun": lambda z: z[:-1].sum() - 1.0},
                {"type": "ineq", "fun": margins},
            ],
            options={"maxiter": 500, "ftol": 1e-15},
        )
        p = np.clip(res.x[:-1], floor, None)
        p = p / p.sum()
        s = worst_slack(loss, p, bound, cfg)
        if s < best_s:
            best_p, best_s = p, s
    if not np.isfinite(best_s):
        raise SolverError("numeric substitution found no prediction with finite loss", best=best_p)
    return best_p


def substitute(loss, bound, cfg=DEFAULT_SOLVER, slack_tolerance=SLACK_TOLERANCE, method="dual"):
    """Prediction minimizing the worst slack against a per-outcome ``bound``.

    ``method="dual"`` is exact for the supported (proper) losses;
    ``method="numeric"`` runs a multi-start SLSQP solve of the min-max
    problem and is used as an independent check.
    """
    bound = np.asarray(bound, dtype=float)
    if bound.shape != (loss.outcome_count,):
        raise InvalidInputError(f"bound must have shape ({loss.outcome_count},), got {bound.shape}")
    if np.any(np.isnan(bound) | (bound == -np.inf)):
        raise InvalidInputError("bound entries must be finite or +inf")
    if method == "dual":
        p = _substitute_dual(loss, bound, cfg)
    elif method == "numeric":
        p = _substitute_numeric(loss, bound, cfg)
    else:
        raise InvalidInputError(f"unknown substitution method {method!r}")
    p = check_simplex(p)
    slack = worst_slack(loss, p, bound, cfg)
    return SubstitutionResult(p, slack, slack <= slack_tolerance)


def find_substitution(entropy, mu, panel, loss, cfg=DEFAULT_SOLVER, slack_tolerance=SLACK_TOLERANCE, method="dual"):
    """Find a prediction whose loss meets the mixability bound on every outcome,
    or the least-violating one if none exists."""
    return substitute(loss, mix_bound(entropy, mu, panel, loss, cfg), cfg, slack_tolerance, method)


def _expected_self_loss(loss, w):
    """``<w, loss(w)>`` for each row of ``w`` (boundary rows allowed)."""
    if loss.family == "log":
        return -xlogy(w, w).sum(axis=1)
    if loss.family == "brier":
        sq = np.square(w).sum(axis=1)
        return (w * (1.0 - 2.0 * w + sq[:, None])).sum(axis=1)
    return -entropy_value(loss.entropy, w)


def grid_certificate(loss, bound, resolution=None):
    """Lower bound on ``min_p max_x loss_x(p) - bound(x)``.

    For every weighting ``w`` of the outcomes, the min-max is at least
    ``min_p <w, loss(p) - bound> = <w, loss(w)> - <w, bound>`` (propriety).
    The maximum of this over a grid of ``w`` is returned, so a positive
    value proves that no prediction meets the bound.
    """
    bound = np.asarray(bound, dtype=float)
    finite = np.isfinite(bound)
    if not finite.any():
        return -np.inf
    n = bound.size
    if resolution is None:
        resolution = {2: 1000, 3: 200}.get(n, 30)
    # weightings are restricted to the outcomes with a finite bound
    face = enumerate_grid(SimplexGrid(int(finite.sum()), resolution))
    w = np.zeros((len(face), n))
    w[:, finite] = face
    return float(np.max(_expected_self_loss(loss, w) - face @ bound[finite]))


def _sample_cases(entropy, loss, sample_count, seed, n_experts):
    """Random (mixture, panel) pairs followed by deterministic corner cases."""
    n = loss.outcome_count
    vertex_floor = 0.0 if loss.finite_on_boundary else 1e-3
    for i in range(sample_count):
        rng = np.random.default_rng([seed, i])
        k = n_experts if n_experts is not None else int(rng.integers(2, 5))
        mu = rng.dirichlet(np.ones(k))
        panel = rng.dirichlet(np.ones(n), size=k)
        if not loss.finite_on_boundary:
            panel = np.vstack([clamp_interior(row, 1e-9) for row in panel])
        yield mu, panel
    # vertex panels with balanced, skewed and near-boundary mixtures
    k = n_experts if n_experts is not None else 2
    vertices = np.eye(n)
    if vertex_floor:
        vertices = np.vstack([clamp_interior(row, vertex_floor) for row in vertices])
    for shift in range(n):
        panel = vertices[(np.arange(k) + shift) % n]
        for lead in (1.0 / k, 0.9, 1.0 - 1e-6):
            mu = np.full(k, (1.0 - lead) / (k - 1))
            mu[0] = lead
            yield mu, panel
    # pairs of nearby experts, the locally hardest configurations
    for spread in (0.05, 0.15, 0.3):
        for centre in np.linspace(0.2, 0.8, 4):
            p = np.full(n, (1.0 - centre) / (n - 1))
            p[0] = centre
            d = np.zeros(n)
            d[0], d[1] = spread / 2, -spread / 2
            panel = np.vstack([p + d, p - d] + [p] * (k - 2))
            if np.all(panel > 0):
                yield np.full(k, 1.0 / k), panel


def certify_mixability(
    entropy,
    loss,
    sample_count=200,
    seed=0,
    n_experts=None,
    cfg=DEFAULT_SOLVER,
    slack_tolerance=SLACK_TOLERANCE,
):
    """Search for (mixture, panel) pairs on which the loss is not mixable.

    A failure is recorded only when the solver's slack exceeds
    ``slack_tolerance`` *and* :func:`grid_certificate` proves the min-max
    slack exceeds ``10 * slack_tolerance``.  Deterministic given ``seed``.
    """
    if sample_count < 1:
        raise InvalidInputError("sample_count must be >= 1")
    failures = []
    tested = 0
    for mu, panel in _sample_cases(entropy, loss, sample_count, seed, n_experts):
        tested += 1
        if entropy.singular_boundary:
            mu = clamp_interior(mu, INTERIOR_EPS)
        bound = mix_bound(entropy, mu, panel, loss, cfg)
        result = substitute(loss, bound, cfg, slack_tolerance)
        if result.feasible:
            continue
        certificate = grid_certificate(loss, bound)
        if certificate > CERTIFICATE_FACTOR * slack_tolerance:
            failures.append(Witness(np.asarray(mu), check_panel(panel), result.worst_slack, certificate))
    return MixabilityVerdict(tested, failures)


def bracket_mixability_constant(entropy_base, loss, precision, sample_count=200, seed=0, bracket=ETA_BRACKET):
    """Bisection bracket ``(low, high)`` around the largest ``eta`` for which
    ``loss`` is mixable for ``entropy_base / eta`` on the sampled cases.

    ``low`` is always certified mixable and ``high`` always refuted.
    """
    if not precision > 0:
        raise InvalidInputError("precision must be > 0")

    def mixable(eta):
        return certify_mixability(entropy_base.with_eta(eta), loss, sample_count, seed).mixable_on_samples

    low, high = bracket
    if not mixable(low):
        raise OutOfRangeError(f"{loss} is not mixable even at eta={low:g}")
    if mixable(high):
        raise OutOfRangeError(f"{loss} is still mixable at eta={high:g}")
    while high - low > precision:
        mid = 0.5 * (low + high)
        if mixable(mid):
            low = mid
        else:
            high = mid
    return low, high


def estimate_mixability_constant(entropy_base, loss, precision=0.05, sample_count=200, seed=0, bracket=ETA_BRACKET):
    """Midpoint of :func:`bracket_mixability_constant`."""
    low, high = bracket_mixability_constant(entropy_base, loss, precision, sample_count, seed, bracket)
    return 0.5 * (low + high)
