"""Adam-driven training of discriminator angles and generator circuits."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from rhkit.discriminator import (
    DiscriminatorParams,
    NoiseModel,
    build_discriminator,
    failure_mask,
    failure_probability,
    output_probabilities,
    sampled_estimate,
    theta_symbol,
)
from rhkit.errors import ParameterError, StructuralError
from rhkit.randstate import LocalRandomSpec, derive_seed, local_random_state
from rhkit.sim import Circuit, ParamMap, Statevector, cost_gradient, evolve, run_circuit

CONVERGED_BELOW = 1e-8
# below this the cost is rounding noise; Adam would only amplify it
NUMERICAL_FLOOR = 1e-30


@dataclass(frozen=True)
class AdamState:
    step: int
    m: np.ndarray
    v: np.ndarray
    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8

    @classmethod
    def fresh(cls, size: int, learning_rate: float = 0.1, **kw) -> AdamState:
        return cls(0, np.zeros(size), np.zeros(size), learning_rate, **kw)


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray) -> tuple[AdamState, np.ndarray]:
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ParameterError(
            f"length mismatch: params {params.shape}, grads {grads.shape}, state {state.m.shape}")
    if not np.all(np.isfinite(grads)):
        raise ParameterError("non-finite gradient")
    step = state.step + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grads
    v = state.beta2 * state.v + (1 - state.beta2) * grads * grads
    m_hat = m / (1 - state.beta1 ** step)
    v_hat = v / (1 - state.beta2 ** step)
    new = params - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps_hat)
    return AdamState(step, m, v, state.learning_rate, state.beta1, state.beta2,
                     state.eps_hat), new


@dataclass(frozen=True)
class StepRecord:
    step: int
    p_failure: float
    params: dict[str, float]


@dataclass
class TrainLog:
    symbols: tuple[str, ...]
    records: list[StepRecord] = field(default_factory=list)
    converged: bool = False

    @property
    def final_params(self) -> dict[str, float]:
        return dict(self.records[-1].params)

    @property
    def final_p_failure(self) -> float:
        return self.records[-1].p_failure

    def to_json(self) -> dict:
        return {
            "symbols": list(self.symbols),
            "converged": self.converged,
            "final_params": self.final_params,
            "final_p_failure": self.final_p_failure,
            "steps": [{"step": r.step, "p_failure": r.p_failure, "params": r.params}
                      for r in self.records],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "p_failure"])
        for r in self.records:
            writer.writerow([r.step, repr(r.p_failure)])
        return buf.getvalue()


def _optimise(circuit: Circuit, init: Mapping[str, float], steps: int, lr: float,
              batch_cost, floor: float | None = NUMERICAL_FLOOR) -> tuple[dict[str, float], TrainLog]:
    """Shared loop.  ``batch_cost(step)`` returns the cost function for that step.

    Record 0 holds the initial parameters; record k holds the parameters
    after update k and their cost on the batch of step k.  Exact training
    stops early once the cost drops under ``floor``.
    """
    if steps < 0:
        raise ParameterError("steps must be >= 0")
    symbols = circuit.symbols
    values = np.array([float(init[s]) for s in symbols])
    log = TrainLog(symbols)
    cost = batch_cost(0)
    as_map = lambda vec: {s: float(v) for s, v in zip(symbols, vec)}
    log.records.append(StepRecord(0, cost(circuit, as_map(values)), as_map(values)))
    adam = AdamState.fresh(len(symbols), lr)
    for k in range(1, steps + 1):
        if floor is not None and log.records[-1].p_failure < floor:
            break
        grads = cost_gradient(cost, circuit, as_map(values))
        adam, values = adam_step(adam, values, grads)
        cost = batch_cost(k)
        log.records.append(StepRecord(k, cost(circuit, as_map(values)), as_map(values)))
    log.converged = steps > 0 and log.final_p_failure < CONVERGED_BELOW
    return log.final_params, log


def train_discriminator(
    n_pairs: int,
    noise: NoiseModel | None,
    steps: int = 500,
    lr: float = 0.1,
    seed: int = 0,
    shots: int | None = None,
) -> tuple[DiscriminatorParams, TrainLog]:
    """Fit the compensation angles on two |0...0> inputs, starting from theta = 0.

    ``shots=None`` trains on the exact cost; otherwise every cost evaluation
    is a shot estimate drawn with a seed derived from ``seed``.
    """
    if steps < 1:
        raise ParameterError("steps must be >= 1")
    circuit = build_discriminator(n_pairs, None, noise)
    zero = Statevector.zero(n_pairs)
    joint = np.kron(zero.amplitudes, zero.amplitudes)
    if shots is None:
        cost = lambda c, p: failure_probability(c, p, joint)
    else:
        counter = iter(range(1 << 62))

        def cost(c: Circuit, p: ParamMap) -> float:
            probs = output_probabilities(c, p, joint)
            return sampled_estimate(probs, shots, derive_seed(seed, next(counter))).p_failure

    init = {theta_symbol(i): 0.0 for i in range(2 * n_pairs)}
    floor = NUMERICAL_FLOOR if shots is None else None
    final, log = _optimise(circuit, init, steps, lr, lambda k: cost, floor)
    thetas = tuple(final[theta_symbol(i)] for i in range(2 * n_pairs))
    return DiscriminatorParams(thetas), log


def train_generator(
    reference: Circuit,
    ansatz: Circuit,
    disc_params: DiscriminatorParams | None = None,
    noise: NoiseModel | None = None,
    steps: int = 500,
    lr: float = 0.1,
    batch: int = 4,
    seed: int = 0,
    init: Mapping[str, float] | None = None,
) -> tuple[dict[str, float], TrainLog]:
    """Fit the ansatz symbols so that the ansatz reproduces ``reference``.

    Each step draws ``batch`` fresh local random states; the cost is the mean
    exact p_failure between reference and ansatz outputs on them.  The
    reference may itself not contain free symbols.  Parameters start at
    zero unless ``init`` says otherwise.
    """
    n = reference.num_qubits
    if ansatz.num_qubits != n:
        raise StructuralError(
            f"reference has {n} qubits, ansatz has {ansatz.num_qubits}")
    if not ansatz.symbols:
        raise ParameterError("ansatz has no trainable symbols")
    if reference.symbols:
        raise ParameterError("reference circuit must be fully bound")
    if batch < 1:
        raise ParameterError("batch must be >= 1")
    disc = build_discriminator(n, disc_params or DiscriminatorParams.zeros(n), noise)
    mask = failure_mask(n)

    def batch_cost(step: int):
        inputs = [local_random_state(LocalRandomSpec(n, derive_seed(seed, step, b)))
                  for b in range(batch)]
        targets = [run_circuit(reference, {}, phi).amplitudes for phi in inputs]
        columns = np.stack([phi.amplitudes for phi in inputs], axis=1)

        def cost(c: Circuit, p: ParamMap) -> float:
            outs = evolve(c, p, columns)
            joints = np.stack([np.kron(target, outs[:, j]) for j, target in enumerate(targets)],
                              axis=1)
            probs = output_probabilities(disc, {}, joints)
            per_state = 2.0 * probs[mask].sum(axis=0)
            return float(np.mean(per_state))

        return cost

    start = {s: 0.0 for s in ansatz.symbols}
    if init is not None:
        start.update({k: float(v) for k, v in init.items()})
    return _optimise(ansatz, start, steps, lr, batch_cost)


def wrap_angles(params: Mapping[str, float]) -> dict[str, float]:
    """Map every angle into [0, 2pi)."""
    return {k: math.fmod(math.fmod(v, 2 * math.pi) + 2 * math.pi, 2 * math.pi)
            for k, v in params.items()}
