"""Entropies on the probability simplex, their conjugates and Bregman divergences.

An entropy here is a convex function ``phi`` on the simplex, scaled by
``1/eta``.  Three smooth families are supported:

* ``shannon``   - negative Shannon entropy ``sum mu log mu``
* ``tsallis``   - negative Tsallis entropy ``(sum mu**q - 1) / (q - 1)``
* ``quadratic`` - ``0.5 * sum mu**2``

All functions accept a single point (shape ``(n,)``) or a batch of points
stacked along the leading axes.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp, softmax, xlogy

from .core import check_dual, check_simplex
from .exceptions import BoundaryGradientError, InvalidInputError, SolverError

FAMILIES = ("shannon", "tsallis", "quadratic")


@dataclass(frozen=True)
class EntropySpec:
    """Declarative description of the entropy ``(1/eta) * phi_base``."""

    family: str = "shannon"
    eta: float = 1.0
    q: float = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown entropy family {self.family!r}; expected one of {FAMILIES}")
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise InvalidInputError(f"eta must be a positive finite number, got {self.eta!r}")
        if self.family == "tsallis":
            if self.q is None or not np.isfinite(self.q) or self.q <= 0 or self.q == 1:
                raise InvalidInputError(f"tsallis entropy needs q > 0 and q != 1, got {self.q!r}")
        elif self.q is not None:
            raise InvalidInputError(f"q is only meaningful for the tsallis family, got q={self.q!r}")

    @classmethod
    def shannon(cls, eta=1.0):
        return cls("shannon", eta)

    @classmethod
    def tsallis(cls, q, eta=1.0):
        return cls("tsallis", eta, q)

    @classmethod
    def quadratic(cls, eta=1.0):
        return cls("quadratic", eta)

    @property
    def base(self):
        """The same family with ``eta = 1``."""
        return replace(self, eta=1.0)

    def with_eta(self, eta):
        return replace(self, eta=eta)

    @property
    def singular_boundary(self):
        """True when the gradient blows up on the simplex boundary."""
        return self.family == "shannon" or (self.family == "tsallis" and self.q < 1)

    def __str__(self):
        if self.family == "tsallis":
            return f"tsallis(q={self.q:g}, eta={self.eta:g})"
        return f"{self.family}(eta={self.eta:g})"


@dataclass(frozen=True)
class ConjugateSolverConfig:
    """Settings for the numeric conjugate solver.

    ``tolerance`` bounds the change of the Lagrange multiplier between the
    last two root-finding iterates.
    """

    max_iterations: int = 200
    tolerance: float = 1e-13
    grid_resolution: int = 200

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise InvalidInputError("tolerance must be > 0")
        if self.grid_resolution < 10:
            raise InvalidInputError("grid_resolution must be >= 10")


DEFAULT_SOLVER = ConjugateSolverConfig()


def _base_value(spec, mu):
    if spec.family == "shannon":
        return xlogy(mu, mu).sum(axis=-1)
    if spec.family == "tsallis":
        return (np.power(mu, spec.q).sum(axis=-1) - 1.0) / (spec.q - 1.0)
    return 0.5 * np.square(mu).sum(axis=-1)


def _base_gradient(spec, mu):
    if spec.family == "shannon":
        return np.log(mu) + 1.0
    if spec.family == "tsallis":
        return spec.q * np.power(mu, spec.q - 1.0) / (spec.q - 1.0)
    return np.array(mu, dtype=float)


def _base_gradient_inverse(spec, u):
    """Coordinate-wise inverse of the base gradient, clipped at zero mass."""
    if spec.family == "shannon":
        return np.exp(u - 1.0)
    if spec.family == "tsallis":
        q = spec.q
        if q > 1:
            return np.power(np.maximum((q - 1.0) * u / q, 0.0), 1.0 / (q - 1.0))
        # q < 1: the gradient is negative on (0, 1], so u < 0 on the bracket
        return np.power((q - 1.0) * u / q, 1.0 / (q - 1.0))
    return np.maximum(u, 0.0)


def _as_points(mu):
    mu = np.asarray(mu, dtype=float)
    if mu.ndim == 1:
        return check_simplex(mu, name="mu")
    if mu.ndim == 0:
        raise InvalidInputError("mu must be at least 1-d")
    sums = mu.sum(axis=-1)
    if np.any(mu < -1e-9) or np.any(np.abs(sums - 1.0) > 1e-6):
        raise InvalidInputError("mu batch contains points off the simplex")
    return np.clip(mu, 0.0, None)


def entropy_value(spec, mu):
    """Evaluate ``(1/eta) * phi_base(mu)`` with the convention ``0 log 0 = 0``."""
    return _base_value(spec, _as_points(mu)) / spec.eta


def entropy_gradient(spec, mu):
    """Gradient of the entropy, using the coordinate-wise derivative of its
    natural extension to the positive orthant.

    Raises :class:`BoundaryGradientError` for boundary points of families
    whose gradient is singular there (callers clamp with
    :func:`~phimix.core.clamp_interior` first).
    """
    mu = _as_points(mu)
    if spec.singular_boundary and np.any(mu <= 0.0):
        raise BoundaryGradientError(f"gradient of {spec} is singular on the simplex boundary")
    return _base_gradient(spec, mu) / spec.eta


def _maximizer_numeric(spec, v, cfg):
    """argmax over the simplex of <mu, v> - phi(mu), by root-finding on the
    Lagrange multiplier of the sum-to-one constraint."""
    n = v.size
    top = v.max()

    def mass(lam):
        return _base_gradient_inverse(spec, spec.eta * (v - lam)).sum() - 1.0

    grad_at_one = _base_gradient(spec, np.array([1.0]))[0]
    grad_at_uniform = _base_gradient(spec, np.array([1.0 / n]))[0]
    lo = top - grad_at_one / spec.eta
    hi = top - grad_at_uniform / spec.eta
    if n == 1 or hi <= lo:
        return np.ones(n)
    f_lo, f_hi = mass(lo), mass(hi)
    if f_lo < 0 or f_hi > 0:
        lo, hi = lo - 1.0, hi + 1.0
        f_lo, f_hi = mass(lo), mass(hi)
    try:
        lam, info = brentq(
            mass, lo, hi, xtol=cfg.tolerance, maxiter=cfg.max_iterations, full_output=True, disp=False
        )
    except ValueError as exc:
        raise SolverError(f"could not bracket the multiplier for {spec}: {exc}", residual=min(abs(f_lo), abs(f_hi)))
    mu = _base_gradient_inverse(spec, spec.eta * (v - lam))
    residual = abs(mu.sum() - 1.0)
    if not info.converged or not np.all(np.isfinite(mu)) or residual > 1e-6:
        raise SolverError(f"conjugate solver did not converge for {spec}", best=mu, residual=residual)
    return mu / mu.sum()


def _maximizer(spec, v, cfg, method):
    if method == "auto":
        method = "closed_form" if spec.family == "shannon" else "numeric"
    if method == "closed_form":
        if spec.family != "shannon":
            raise InvalidInputError(f"no closed form conjugate for {spec}")
        return softmax(spec.eta * v)
    if method == "numeric":
        return _maximizer_numeric(spec, v, cfg)
    raise InvalidInputError(f"unknown method {method!r}")


def conjugate(spec, v, cfg=DEFAULT_SOLVER, method="auto"):
    """Convex conjugate restricted to the simplex, ``sup_mu <mu, v> - phi(mu)``.

    For the Shannon family the closed form ``(1/eta) logsumexp(eta v)`` is
    used unless ``method="numeric"`` is requested.
    """
    v = check_dual(v)
    if method in ("auto", "closed_form") and spec.family == "shannon":
        return float(logsumexp(spec.eta * v) / spec.eta)
    mu = _maximizer(spec, v, cfg, method)
    return float(mu @ v - _base_value(spec, mu) / spec.eta)


def conjugate_gradient(spec, v, cfg=DEFAULT_SOLVER, method="auto"):
    """The simplex point attaining the supremum in :func:`conjugate`."""
    v = check_dual(v)
    mu = _maximizer(spec, v, cfg, method)
    mu.flags.writeable = False
    return mu


def bregman(spec, mu, mu_prime):
    """Bregman divergence ``phi(mu) - phi(mu') - <grad phi(mu'), mu - mu'>``.

    ``mu`` may lie on the boundary (and may be a batch of points); only
    ``mu_prime`` needs a gradient.
    """
    mu_prime = check_simplex(mu_prime, name="mu_prime")
    mu = _as_points(mu)
    if mu.shape[-1] != mu_prime.size:
        raise InvalidInputError("mu and mu_prime have different dimensions")
    g = entropy_gradient(spec, mu_prime)
    return entropy_value(spec, mu) - entropy_value(spec, mu_prime) - (mu - mu_prime) @ g
