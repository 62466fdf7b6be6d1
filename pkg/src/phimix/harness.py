"""Game configuration, data generation, and trace/summary output.

Config files are JSON documents; unknown fields are rejected and every
validation error names the offending field.

Randomness comes from numpy's PCG64 generator.  Each consumer draws from
its own stream, seeded with ``SeedSequence(seed, spawn_key=(purpose, index))``
where ``purpose`` is 1 for expert ``index`` and 2 for the outcome sequence,
so adding an expert never perturbs another stream.
"""

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import check_simplex, clamp_interior
from .entropy import EntropySpec
from .exceptions import PhimixError
from .gaa import run_game
from .losses import LossSpec

STREAM_EXPERT = 1
STREAM_OUTCOME = 2

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INVALID = 3
EXIT_BOUND_VIOLATED = 4
EXIT_NOT_MIXABLE = 5
EXIT_OUT_OF_RANGE = 6


class ConfigError(PhimixError, ValueError):
    """Invalid game configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def fmt(x):
    """Twelve significant digits, the precision of every numeric output."""
    return f"{x:.12g}"


def rounded(x):
    return float(fmt(x))


def stream(seed, purpose, index=0):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(purpose, index))))


@dataclass(frozen=True)
class Tolerances:
    slack: float = 1e-7
    bound_per_round: float = 1e-5
    telescoping_per_round: float = 1e-6


@dataclass(frozen=True)
class ExpertConfig:
    strategy: str
    prediction: tuple = None
    predictions: tuple = None
    concentration: float = 1.0


@dataclass(frozen=True)
class GameConfig:
    outcome_count: int
    experts: tuple
    entropy: EntropySpec
    loss: LossSpec
    prior: object
    rounds: int
    outcome_source: dict
    seed: int = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    @property
    def n_experts(self):
        return len(self.experts)

    def prior_vector(self):
        if self.prior == "uniform":
            return np.full(self.n_experts, 1.0 / self.n_experts)
        return np.asarray(self.prior, dtype=float)


def _require(obj, name, allowed, required=()):
    if not isinstance(obj, dict):
        raise ConfigError(name, "expected a JSON object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}" if name else key, "unknown field")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{name}.{key}" if name else key, "missing required field")


def _number(value, name, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
        raise ConfigError(name, f"expected a finite number, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(name, f"must be > 0, got {value!r}")
    return float(value)


def _integer(value, name, minimum=0):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(name, f"expected an integer >= {minimum}, got {value!r}")
    return value


def _probabilities(value, name, size):
    if not isinstance(value, list) or len(value) != size:
        raise ConfigError(name, f"expected a list of {size} probabilities")
    for i, v in enumerate(value):
        _number(v, f"{name}[{i}]")
    try:
        return tuple(check_simplex(value, name=name))
    except PhimixError as exc:
        raise ConfigError(name, str(exc)) from exc


def _parse_entropy(obj, name):
    _require(obj, name, {"family", "eta", "q"}, ("family",))
    eta = _number(obj.get("eta", 1.0), f"{name}.eta", positive=True)
    q = obj.get("q")
    if q is not None:
        q = _number(q, f"{name}.q")
    try:
        return EntropySpec(obj["family"], eta, q)
    except PhimixError as exc:
        raise ConfigError(name, str(exc)) from exc


def _parse_loss(obj, outcome_count):
    _require(obj, "loss", {"family", "entropy"}, ("family",))
    entropy = _parse_entropy(obj["entropy"], "loss.entropy") if "entropy" in obj else None
    try:
        return LossSpec(obj["family"], outcome_count, entropy)
    except PhimixError as exc:
        raise ConfigError("loss", str(exc)) from exc


def _parse_experts(items, outcome_count, rounds):
    if not isinstance(items, list) or not items:
        raise ConfigError("experts", "expected a non-empty list")
    experts = []
    for i, obj in enumerate(items):
        name = f"experts[{i}]"
        _require(obj, name, {"strategy", "prediction", "predictions", "concentration", "count"}, ("strategy",))
        count = _integer(obj.get("count", 1), f"{name}.count", minimum=1)
        strategy = obj["strategy"]
        if strategy == "fixed":
            if "prediction" not in obj:
                raise ConfigError(f"{name}.prediction", "missing required field")
            expert = ExpertConfig("fixed", prediction=_probabilities(obj["prediction"], f"{name}.prediction", outcome_count))
        elif strategy == "table":
            table = obj.get("predictions")
            if not isinstance(table, list) or len(table) != rounds:
                raise ConfigError(f"{name}.predictions", f"expected a list of {rounds} predictions")
            rows = tuple(_probabilities(row, f"{name}.predictions[{t}]", outcome_count) for t, row in enumerate(table))
            expert = ExpertConfig("table", predictions=rows)
        elif strategy == "stochastic":
            conc = _number(obj.get("concentration", 1.0), f"{name}.concentration", positive=True)
            expert = ExpertConfig("stochastic", concentration=conc)
        else:
            raise ConfigError(f"{name}.strategy", f"unknown strategy {strategy!r}")
        unused = {"fixed": ("predictions", "concentration"), "table": ("prediction", "concentration"),
                  "stochastic": ("prediction", "predictions")}[strategy]
        for key in unused:
            if key in obj:
                raise ConfigError(f"{name}.{key}", f"not allowed for strategy {strategy!r}")
        experts.extend([expert] * count)
    return tuple(experts)


def _parse_outcomes(obj, outcome_count, rounds):
    _require(obj, "outcome_source", {"type", "sequence", "probabilities"}, ("type",))
    if obj["type"] == "explicit":
        _require(obj, "outcome_source", {"type", "sequence"}, ("sequence",))
        seq = obj["sequence"]
        if not isinstance(seq, list) or len(seq) != rounds:
            raise ConfigError("outcome_source.sequence", f"expected a list of {rounds} outcomes")
        for t, x in enumerate(seq):
            if isinstance(x, bool) or not isinstance(x, int) or not 0 <= x < outcome_count:
                raise ConfigError(f"outcome_source.sequence[{t}]", f"expected an outcome in 0..{outcome_count - 1}")
        return {"type": "explicit", "sequence": tuple(seq)}
    if obj["type"] == "random":
        _require(obj, "outcome_source", {"type", "probabilities"}, ("probabilities",))
        probs = _probabilities(obj["probabilities"], "outcome_source.probabilities", outcome_count)
        return {"type": "random", "probabilities": probs}
    raise ConfigError("outcome_source.type", f"unknown type {obj['type']!r}")


def parse_config(obj):
    """Validate a decoded JSON config and build a :class:`GameConfig`."""
    _require(
        obj,
        "",
        {"outcome_count", "experts", "entropy", "loss", "prior", "rounds", "outcome_source", "seed", "tolerances"},
        ("outcome_count", "experts", "entropy", "loss", "rounds", "outcome_source"),
    )
    outcome_count = _integer(obj["outcome_count"], "outcome_count", minimum=2)
    rounds = _integer(obj["rounds"], "rounds", minimum=0)
    experts = _parse_experts(obj["experts"], outcome_count, rounds)
    entropy = _parse_entropy(obj["entropy"], "entropy")
    loss = _parse_loss(obj["loss"], outcome_count)
    prior = obj.get("prior", "uniform")
    if prior != "uniform":
        prior = _probabilities(prior, "prior", len(experts))
    outcome_source = _parse_outcomes(obj["outcome_source"], outcome_count, rounds)
    seed = obj.get("seed")
    if seed is not None:
        seed = _integer(seed, "seed")
    stochastic = outcome_source["type"] == "random" or any(e.strategy == "stochastic" for e in experts)
    if stochastic and seed is None:
        raise ConfigError("seed", "required when experts or outcomes are random")
    tol = obj.get("tolerances", {})
    _require(tol, "tolerances", {"slack", "bound_per_round", "telescoping_per_round"})
    tolerances = Tolerances(**{k: _number(v, f"tolerances.{k}", positive=True) for k, v in tol.items()})
    return GameConfig(outcome_count, experts, entropy, loss, prior, rounds, outcome_source, seed, tolerances)


def load_config(path, seed=None):
    """Read and validate a config file; ``seed`` overrides the file's seed."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from exc
    if seed is not None and isinstance(obj, dict):
        obj["seed"] = seed
    return parse_config(obj)


def generate_game(config):
    """Materialize the expert panels (T, experts, outcomes) and outcome sequence."""
    T, n, k = config.rounds, config.outcome_count, config.n_experts
    panels = np.empty((T, k, n))
    for j, expert in enumerate(config.experts):
        if expert.strategy == "fixed":
            panels[:, j] = expert.prediction
        elif expert.strategy == "table":
            panels[:, j] = np.asarray(expert.predictions).reshape(T, n)
        else:
            rng = stream(config.seed, STREAM_EXPERT, j)
            draws = rng.dirichlet(np.full(n, expert.concentration), size=T)
            for t in range(T):
                if np.any(draws[t] <= 0):
                    draws[t] = clamp_interior(draws[t] / draws[t].sum(), 1e-12)
            panels[:, j] = draws
    if config.outcome_source["type"] == "explicit":
        outcomes = np.asarray(config.outcome_source["sequence"], dtype=int).reshape(T)
    else:
        rng = stream(config.seed, STREAM_OUTCOME)
        outcomes = rng.choice(n, size=T, p=np.asarray(config.outcome_source["probabilities"]))
    return panels, outcomes


def trace_header(n_experts):
    cols = ["round", "outcome", "player_prediction", "player_loss", "slack"]
    for j in range(n_experts):
        cols += [f"expert_{j}_loss", f"expert_{j}_cumulative_loss"]
    return cols + ["cumulative_regret_vs_best", "bound_vs_best"]


def trace_rows(trace):
    cum_experts = trace.expert_cumulative
    regret = trace.cumulative_regret
    for t in range(trace.rounds):
        best = int(np.argmin(cum_experts[t]))
        row = [str(t + 1), str(int(trace.outcomes[t])), ";".join(fmt(v) for v in trace.predictions[t]),
               fmt(trace.player_losses[t]), fmt(trace.slack[t])]
        for j in range(trace.assessments.shape[1]):
            row += [fmt(trace.assessments[t, j]), fmt(cum_experts[t, j])]
        yield row + [fmt(regret[t]), fmt(trace.penalties[best])]


def write_trace_csv(trace, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(trace_header(trace.assessments.shape[1]))
        writer.writerows(trace_rows(trace))


def summarize(trace, tolerances):
    """Summary and verdicts for a finished game.

    Values are rounded to twelve significant digits, so the summary
    recomputes exactly from the trace CSV.
    """
    T = trace.rounds
    k = trace.penalties.size
    player = rounded(trace.player_total)
    experts = [rounded(v) for v in trace.expert_totals]
    penalties = [rounded(v) for v in trace.penalties]
    regret_per_expert = [rounded(trace.player_total - v) for v in trace.expert_totals]
    allowance = tolerances.bound_per_round * max(T, 1)
    satisfied = [bool(r <= d + allowance) for r, d in zip(regret_per_expert, penalties)]
    infeasible = int(np.sum(trace.slack > tolerances.slack))
    telescoping_ok = trace.telescoping_residual <= tolerances.telescoping_per_round * max(T, 1)
    if infeasible:
        exit_code = EXIT_INFEASIBLE
    elif not all(satisfied):
        exit_code = EXIT_BOUND_VIOLATED
    else:
        exit_code = EXIT_OK
    return {
        "rounds": T,
        "experts": k,
        "entropy": str(trace.entropy),
        "player_loss": player,
        "expert_losses": experts,
        "best_expert": trace.best_expert,
        "regret": rounded(trace.cumulative_regret[-1]) if T else 0.0,
        "bound_vs_best": rounded(trace.bound),
        "regret_per_expert": regret_per_expert,
        "bound_per_expert": penalties,
        "bound_satisfied": satisfied,
        "bound_checked": infeasible == 0,
        "max_slack": rounded(trace.slack.max()) if T else 0.0,
        "infeasible_rounds": infeasible,
        "telescoping_residual": rounded(trace.telescoping_residual),
        "telescoping_ok": bool(telescoping_ok),
        "exit_code": exit_code,
    }


@dataclass
class RunReport:
    summary: dict
    trace_path: Path
    summary_path: Path

    @property
    def exit_code(self):
        return self.summary["exit_code"]


def run_config(config, out_dir, config_name=None):
    """Play the configured game and write ``trace.csv`` and ``summary.json`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    panels, outcomes = generate_game(config)
    trace = run_game(
        config.entropy, config.prior_vector(), config.loss, panels, outcomes, slack_tolerance=config.tolerances.slack
    )
    trace_path = out_dir / "trace.csv"
    write_trace_csv(trace, trace_path)
    summary = summarize(trace, config.tolerances)
    summary["loss"] = str(config.loss)
    summary["config"] = config_name
    summary["trace"] = trace_path.name
    summary["wall_time_seconds"] = round(time.perf_counter() - start, 6)
    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return RunReport(summary, trace_path, summary_path)


def read_trace_csv(path):
    """Parse a trace CSV back into a dict of columns (numeric where possible)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    columns = {}
    for i, name in enumerate(header):
        values = [r[i] for r in body]
        if name == "player_prediction":
            columns[name] = [[float(v) for v in cell.split(";")] for cell in values]
        elif name in ("round", "outcome"):
            columns[name] = [int(v) for v in values]
        else:
            columns[name] = [float(v) for v in values]
    return columns
