"""Generalised aggregating algorithm for prediction with expert advice.

Entropies on the simplex and their conjugates (:mod:`phimix.entropy`),
losses (:mod:`phimix.losses`), Phi-mixability checks
(:mod:`phimix.mixability`), the algorithm itself (:mod:`phimix.gaa`) and
the command line harness (:mod:`phimix.harness`, :mod:`phimix.cli`).
"""

from .core import (
    SimplexGrid,
    check_dual,
    check_panel,
    check_simplex,
    clamp_interior,
    dual_equal,
    enumerate_grid,
    project_to_simplex,
)
from .entropy import (
    ConjugateSolverConfig,
    EntropySpec,
    bregman,
    conjugate,
    conjugate_gradient,
    entropy_gradient,
    entropy_value,
)
from .exceptions import (
    BoundaryGradientError,
    InfiniteLossError,
    InvalidInputError,
    OutOfRangeError,
    PhimixError,
    SolverError,
    UnboundedPenaltyError,
)
from .gaa import AggregatingForecaster, GaaState, GameTrace, classic_aa_weights, init, predict, regret_bound, run_game, update
from .losses import Assessment, LossSpec, assessment, loss_vector, proper_loss_from_entropy, propriety_gap
from .mixability import (
    MixabilityVerdict,
    SubstitutionResult,
    certify_mixability,
    estimate_mixability_constant,
    find_substitution,
    mix_bound,
    mix_bound_conjugate_form,
    mix_bound_primal,
)

__version__ = "0.1.0"
