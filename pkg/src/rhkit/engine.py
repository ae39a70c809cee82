"""Equivalence checks driven by local random input states."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from importlib.resources import files
from typing import Iterable, Mapping, Sequence

import numpy as np

from rhkit.discriminator import (
    DiscriminatorParams,
    FailureEstimate,
    NoiseModel,
    build_discriminator,
    failure_mask,
    output_probabilities,
    sampled_estimate,
)
from rhkit.errors import ParameterError, StructuralError
from rhkit.randstate import TWO_PI, LocalRandomSpec, derive_seed, local_random_state
from rhkit.sim import Circuit, run_circuit

REPORT_SCHEMA = "rhkit.equivalence-report/1"
EQ_THRESHOLD = 1e-10
DETECT_THRESHOLD = 1e-4

# salts for derive_seed so that states, free parameters and shots never share streams
_STATE, _PARAMS, _SHOTS = 0, 1, 2


class Verdict(str, enum.Enum):
    EQUIVALENT = "Equivalent"
    NOT_EQUIVALENT = "NotEquivalent"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class CheckConfig:
    """Knobs of one equivalence check.

    ``params`` binds symbols to fixed values.  Unbound symbols listed in
    ``sample_symbols`` (default: every unbound symbol the two circuits share)
    are drawn uniformly from [0, 2pi) per trial.  Each of the ``num_states``
    random inputs is paired with ``param_samples`` draws of the free
    parameters, so a check runs ``num_states * param_samples`` trials.
    """

    num_states: int = 100
    mode: str = "analytic"
    shots: int = 1000
    seed: int = 0
    noise: NoiseModel | None = None
    discriminator_params: DiscriminatorParams | None = None
    params: Mapping[str, float] = field(default_factory=dict)
    sample_symbols: tuple[str, ...] | None = None
    param_samples: int = 1
    eq_threshold: float = EQ_THRESHOLD
    detect_threshold: float = DETECT_THRESHOLD

    def __post_init__(self) -> None:
        if self.num_states < 1:
            raise ParameterError("num_states must be >= 1")
        if self.param_samples < 1:
            raise ParameterError("param_samples must be >= 1")
        if self.mode not in ("analytic", "sampled"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.mode == "sampled" and self.shots < 1:
            raise ParameterError("sampled mode needs shots >= 1")

    @property
    def num_trials(self) -> int:
        return self.num_states * self.param_samples

    def to_json(self) -> dict:
        return {
            "num_states": self.num_states,
            "mode": self.mode,
            "shots": self.shots if self.mode == "sampled" else 0,
            "seed": self.seed,
            "noise": None if self.noise is None else self.noise.to_json(),
            "discriminator_params": (None if self.discriminator_params is None
                                     else self.discriminator_params.to_json()),
            "params": {k: float(v) for k, v in sorted(self.params.items())},
            "sample_symbols": None if self.sample_symbols is None else list(self.sample_symbols),
            "param_samples": self.param_samples,
            "eq_threshold": self.eq_threshold,
            "detect_threshold": self.detect_threshold,
        }


@dataclass(frozen=True)
class TrialRecord:
    index: int
    state: LocalRandomSpec
    bindings: dict[str, float]
    estimate: FailureEstimate

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "state": self.state.to_json(),
            "bindings": dict(sorted(self.bindings.items())),
            **self.estimate.to_json(),
        }


@dataclass(frozen=True)
class EquivalenceReport:
    num_qubits: int
    config: CheckConfig
    per_trial: tuple[TrialRecord, ...]
    mean_p_failure: float
    max_p_failure: float
    std_dev: float
    verdict: Verdict
    undetected_bound: float

    @property
    def total_failures(self) -> int:
        return sum(r.estimate.failures for r in self.per_trial)

    def to_json(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "num_qubits": self.num_qubits,
            "config": self.config.to_json(),
            "per_trial": [r.to_json() for r in self.per_trial],
            "aggregate": {
                "mean_p_failure": self.mean_p_failure,
                "max_p_failure": self.max_p_failure,
                "std_dev": self.std_dev,
                "num_trials": len(self.per_trial),
            },
            "verdict": self.verdict.value,
            "undetected_bound": self.undetected_bound,
        }


def worst_case_undetected(n: int, m: int) -> float:
    """Chance that a controlled single-qubit error escapes ``m`` shots: exp(-m / 2**(n-1))."""
    if n < 1 or m < 0:
        raise ParameterError("need n >= 1 and m >= 0")
    return math.exp(-m / 2 ** (n - 1))


def decide_verdict(values: Sequence[float], config: CheckConfig, failures: int = 0) -> Verdict:
    """Verdict from per-trial p_failure values (and total failed shots in sampled mode)."""
    arr = np.asarray(values, dtype=float)
    mean = float(np.mean(arr))
    if config.mode == "analytic":
        if float(np.max(arr)) < config.eq_threshold:
            return Verdict.EQUIVALENT
    elif failures == 0:
        return Verdict.EQUIVALENT
    if mean > config.detect_threshold:
        return Verdict.NOT_EQUIVALENT
    return Verdict.INCONCLUSIVE


def _free_symbols(reference: Circuit, generator: Circuit, config: CheckConfig) -> list[str]:
    bound = set(config.params)
    ref_free = [s for s in reference.symbols if s not in bound]
    gen_free = [s for s in generator.symbols if s not in bound]
    ordered = list(dict.fromkeys(ref_free + gen_free))
    if config.sample_symbols is None:
        sampled = set(ref_free) & set(gen_free)
    else:
        sampled = set(config.sample_symbols)
    missing = [s for s in ordered if s not in sampled]
    if missing:
        raise ParameterError(
            f"symbol(s) {', '.join(missing)} are neither bound nor covered by a sampling rule")
    return ordered


def trial_bindings(config: CheckConfig, free: Sequence[str], trial: int) -> dict[str, float]:
    bindings = {k: float(v) for k, v in config.params.items()}
    if free:
        rng = np.random.default_rng(derive_seed(config.seed, _PARAMS, trial))
        for name, value in zip(free, rng.random(len(free)) * TWO_PI):
            bindings[name] = float(value)
    return bindings


def trial_state_spec(config: CheckConfig, n: int, trial: int) -> LocalRandomSpec:
    state_index = trial // config.param_samples
    return LocalRandomSpec(n, derive_seed(config.seed, _STATE, state_index))


def check_equivalence(reference: Circuit, generator: Circuit, config: CheckConfig) -> EquivalenceReport:
    """Run the random-input test on every trial and aggregate.

    Per trial: draw a local random state, run both circuits on it, and feed
    the two outputs to the discriminator.
    """
    n = reference.num_qubits
    if generator.num_qubits != n:
        raise StructuralError(
            f"reference has {n} qubits, generator has {generator.num_qubits}")
    free = _free_symbols(reference, generator, config)
    disc_params = config.discriminator_params or DiscriminatorParams.zeros(n)
    disc = build_discriminator(n, disc_params, config.noise)
    mask = failure_mask(n)

    records = []
    for t in range(config.num_trials):
        spec = trial_state_spec(config, n, t)
        bindings = trial_bindings(config, free, t)
        phi = local_random_state(spec)
        ref_out = run_circuit(reference, bindings, phi)
        gen_out = run_circuit(generator, bindings, phi)
        joint = np.kron(ref_out.amplitudes, gen_out.amplitudes)
        probs = output_probabilities(disc, {}, joint)
        if config.mode == "analytic":
            estimate = FailureEstimate(2.0 * float(np.sum(probs[mask])), "analytic")
        else:
            estimate = sampled_estimate(probs, config.shots,
                                        derive_seed(config.seed, _SHOTS, t))
        records.append(TrialRecord(t, spec, bindings, estimate))

    values = np.array([r.estimate.p_failure for r in records])
    failures = sum(r.estimate.failures for r in records)
    if config.mode == "sampled":
        bound = worst_case_undetected(n, config.num_trials * config.shots)
    else:
        bound = 0.0
    return EquivalenceReport(
        num_qubits=n,
        config=config,
        per_trial=tuple(records),
        mean_p_failure=float(np.mean(values)),
        max_p_failure=float(np.max(values)),
        std_dev=float(np.std(values)),
        verdict=decide_verdict(values, config, failures),
        undetected_bound=bound,
    )


@dataclass(frozen=True)
class SweepRow:
    delta: float
    mean_p_failure: float
    std_dev: float


def delta_sweep(
    pair: tuple[Circuit, Circuit],
    deltas: Iterable[float],
    config: CheckConfig,
    symbol: str = "delta",
) -> list[SweepRow]:
    """One aggregate check per grid value of the generator's distortion angle."""
    reference, generator = pair
    if symbol not in generator.symbols:
        raise ParameterError(f"generator has no symbol {symbol!r}")
    rows = []
    for delta in deltas:
        cfg = replace(config, params={**config.params, symbol: float(delta)})
        report = check_equivalence(reference, generator, cfg)
        rows.append(SweepRow(float(delta), report.mean_p_failure, report.std_dev))
    return rows


TABLE_COLUMNS = ("name", "n", "gates", "depth", "p_failure_Y", "p_failure_N", "t_seconds")


def table_row(name: str, circuit: Circuit, p_failure_y: float | None,
              p_failure_n: float | None, seconds: float) -> dict:
    """A benchmark-table row; a missing p_failure column is left empty."""
    return {
        "name": name,
        "n": circuit.num_qubits,
        "gates": len(circuit),
        "depth": circuit.depth(),
        "p_failure_Y": "" if p_failure_y is None else f"{p_failure_y:.6e}",
        "p_failure_N": "" if p_failure_n is None else f"{p_failure_n:.6e}",
        "t_seconds": f"{seconds:.3f}",
    }


_WORST = 3


def undetected_fraction(difference: Circuit, runs: int, shots: int, seed: int = 0) -> float:
    """Monte Carlo estimate of how often ``shots`` single shots all pass.

    The reference is the identity and the generator is ``difference``; every
    shot gets its own fresh local random input state.  Compare with
    ``worst_case_undetected(n, shots)``.
    """
    if runs < 1 or shots < 1:
        raise ParameterError("need runs >= 1 and shots >= 1")
    n = difference.num_qubits
    disc = build_discriminator(n, DiscriminatorParams.zeros(n))
    mask = failure_mask(n)
    rng = np.random.default_rng(derive_seed(seed, _WORST))
    undetected = 0
    for r in range(runs):
        caught = False
        for k in range(shots):
            spec = LocalRandomSpec(n, derive_seed(seed, _WORST, r, k))
            phi = local_random_state(spec)
            joint = np.kron(phi.amplitudes, run_circuit(difference, {}, phi).amplitudes)
            probs = output_probabilities(disc, {}, joint)
            outcome = rng.choice(probs.size, p=probs / probs.sum())
            if mask[outcome]:
                caught = True
                break
        undetected += not caught
    return undetected / runs


def load_schema(name: str) -> dict:
    """Published JSON schema: ``report``, ``trainlog`` or ``manifest``."""
    return json.loads(files("rhkit").joinpath("schemas", f"{name}.schema.json").read_text())
