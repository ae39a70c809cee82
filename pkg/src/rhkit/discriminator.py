"""Parameterised destructive SWAP test and the coherent CZ error model.

Qubits ``0..n-1`` carry the reference state and ``n..2n-1`` the generator
state; pair ``i`` is ``(i, n + i)``.  Each pair is measured in the Bell
basis (a CX realised as H-CZ-H, then H on the reference qubit).  A shot
fails when ``sum_i O_ref[i] & O_gen[i]`` is odd, which happens with
probability ``(1 - F) / 2``, so ``p_failure = 2 * P(odd) = 1 - F``.

Before the Bell measurement every qubit receives the same fixed rotation
``S.H``.  Because the singlet projector of a pair commutes with ``V (x) V``
for any single-qubit ``V``, this layer leaves ``p_failure`` untouched for
every input.  It does matter under coherent errors: without it the
reference qubit of each pair sits in |0> at the CZ when both inputs are
|0...0>, so the Rz error on that qubit is an invisible phase and zero-state
training cannot learn its compensation angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from rhkit.errors import ParameterError, StructuralError
from rhkit.sim import (
    Circuit,
    Gate,
    ParamMap,
    Statevector,
    cz,
    evolve,
    h,
    rz,
    s,
)


def theta_symbol(i: int) -> str:
    return f"theta_{i}"


@dataclass(frozen=True)
class DiscriminatorParams:
    thetas: tuple[float, ...]

    def __post_init__(self) -> None:
        thetas = tuple(float(v) for v in self.thetas)
        if not thetas or len(thetas) % 2:
            raise ParameterError("need two angles per qubit pair")
        if not all(math.isfinite(v) for v in thetas):
            raise ParameterError("discriminator angles must be finite")
        object.__setattr__(self, "thetas", thetas)

    @property
    def n_pairs(self) -> int:
        return len(self.thetas) // 2

    @classmethod
    def zeros(cls, n_pairs: int) -> DiscriminatorParams:
        return cls((0.0,) * (2 * n_pairs))

    def as_params(self) -> dict[str, float]:
        return {theta_symbol(i): v for i, v in enumerate(self.thetas)}

    def to_json(self) -> dict:
        return {"thetas": list(self.thetas)}

    @classmethod
    def from_json(cls, data: dict) -> DiscriminatorParams:
        return cls(tuple(data["thetas"]))


@dataclass(frozen=True)
class NoiseModel:
    """Frozen stray Rz angles following each CZ: ``(eps_ref_i, eps_gen_i)`` per pair."""

    epsilons: tuple[float, ...]
    sigma: float = 0.0
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilons", tuple(float(v) for v in self.epsilons))
        if len(self.epsilons) % 2:
            raise ParameterError("need two error angles per CZ")

    @property
    def n_pairs(self) -> int:
        return len(self.epsilons) // 2

    def to_json(self) -> dict:
        return {"epsilons": list(self.epsilons), "sigma": self.sigma, "seed": self.seed}

    @classmethod
    def from_json(cls, data: dict) -> NoiseModel:
        return cls(tuple(data["epsilons"]), float(data.get("sigma", 0.0)), data.get("seed"))


def sample_noise(n_pairs: int, sigma: float, seed: int) -> NoiseModel:
    """Draw ``2 * n_pairs`` angles from N(0, sigma**2)."""
    if sigma < 0:
        raise ParameterError("sigma must be >= 0")
    rng = np.random.default_rng(seed)
    eps = rng.normal(0.0, sigma, size=2 * n_pairs) if sigma > 0 else np.zeros(2 * n_pairs)
    return NoiseModel(tuple(float(e) for e in eps), float(sigma), seed)


@dataclass(frozen=True)
class ShotOutcome:
    bits_ref: str
    bits_gen: str

    def __post_init__(self) -> None:
        if len(self.bits_ref) != len(self.bits_gen):
            raise StructuralError("outcome halves differ in length")


def parity_statistic(outcome: ShotOutcome) -> int:
    """Parity of ``sum_i ref_i AND gen_i``; 1 (odd) marks a failed shot."""
    total = sum(a == "1" and b == "1" for a, b in zip(outcome.bits_ref, outcome.bits_gen))
    return total & 1


@dataclass(frozen=True)
class FailureEstimate:
    p_failure: float
    mode: str  # "analytic" | "sampled"
    shots: int = 0
    std_error: float = 0.0
    failures: int = field(default=0, compare=False)

    def to_json(self) -> dict:
        out = {"p_failure": self.p_failure, "mode": self.mode}
        if self.mode == "sampled":
            out.update(shots=self.shots, failures=self.failures, std_error=self.std_error)
        return out


def build_discriminator(
    n_pairs: int,
    params: DiscriminatorParams | None = None,
    noise: NoiseModel | None = None,
) -> Circuit:
    """The 2*n_pairs-qubit discriminator.

    With ``params=None`` the compensation angles stay symbolic
    (``theta_0, theta_1, ...``).  Noise Rz gates sit right after each CZ and
    the compensation Rz gates right after those, so ``theta = -eps`` cancels
    the error exactly.
    """
    if n_pairs < 1:
        raise StructuralError("n_pairs must be >= 1")
    if params is not None and params.n_pairs != n_pairs:
        raise ParameterError(
            f"expected {2 * n_pairs} discriminator angles, got {len(params.thetas)}")
    if noise is not None and noise.n_pairs != n_pairs:
        raise ParameterError(
            f"noise model covers {noise.n_pairs} pairs, discriminator has {n_pairs}")
    width = 2 * n_pairs
    gates: list[Gate] = []
    for q in range(width):
        gates += [h(q), s(q)]
    for i in range(n_pairs):
        a, b = i, n_pairs + i
        gates += [h(b), cz(a, b)]
        if noise is not None:
            gates += [rz(a, noise.epsilons[2 * i]), rz(b, noise.epsilons[2 * i + 1])]
        if params is None:
            gates += [rz(a, theta_symbol(2 * i)), rz(b, theta_symbol(2 * i + 1))]
        else:
            gates += [rz(a, params.thetas[2 * i]), rz(b, params.thetas[2 * i + 1])]
        gates += [h(b), h(a)]
    return Circuit(width, tuple(gates))


@lru_cache(maxsize=16)
def failure_mask(n_pairs: int) -> np.ndarray:
    """Boolean mask over the ``4**n_pairs`` outcomes: True where the parity is odd."""
    idx = np.arange(4 ** n_pairs, dtype=np.int64)
    low = (1 << n_pairs) - 1
    anded = (idx >> n_pairs) & idx & low
    mask = (np.bitwise_count(anded) & 1).astype(bool)
    mask.setflags(write=False)
    return mask


def _joint(state_ref: Statevector, state_gen: Statevector) -> np.ndarray:
    if state_ref.num_qubits != state_gen.num_qubits:
        raise StructuralError(
            f"reference has {state_ref.num_qubits} qubits, generator {state_gen.num_qubits}")
    return np.kron(state_ref.amplitudes, state_gen.amplitudes)


def output_probabilities(circuit: Circuit, params: ParamMap, joint: np.ndarray) -> np.ndarray:
    out = evolve(circuit, params, joint)
    return out.real ** 2 + out.imag ** 2


def failure_probability(circuit: Circuit, params: ParamMap, joint: np.ndarray) -> float:
    """``2 * P(odd parity)`` of a discriminator circuit applied to ``joint``."""
    probs = output_probabilities(circuit, params, joint)
    return 2.0 * float(np.sum(probs[failure_mask(circuit.num_qubits // 2)]))


def _resolve(n: int, params: DiscriminatorParams | None) -> DiscriminatorParams:
    return DiscriminatorParams.zeros(n) if params is None else params


def p_failure_analytic(
    state_ref: Statevector,
    state_gen: Statevector,
    params: DiscriminatorParams | None = None,
    noise: NoiseModel | None = None,
) -> FailureEstimate:
    joint = _joint(state_ref, state_gen)
    n = state_ref.num_qubits
    circuit = build_discriminator(n, _resolve(n, params), noise)
    return FailureEstimate(failure_probability(circuit, {}, joint), "analytic")


def _sample_indices(state_ref, state_gen, params, noise, shots, seed) -> tuple[int, np.ndarray]:
    if shots < 1:
        raise ParameterError("shots must be >= 1")
    joint = _joint(state_ref, state_gen)
    n = state_ref.num_qubits
    circuit = build_discriminator(n, _resolve(n, params), noise)
    probs = output_probabilities(circuit, {}, joint)
    return n, draw_outcomes(probs, shots, seed)


def draw_outcomes(probs: np.ndarray, shots: int, seed: int) -> np.ndarray:
    """Outcome indices of ``shots`` independent measurements."""
    if shots < 1:
        raise ParameterError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.choice(probs.size, size=shots, p=probs / probs.sum())


def sampled_estimate(probs: np.ndarray, shots: int, seed: int) -> FailureEstimate:
    """Shot-based FailureEstimate from discriminator output probabilities.

    Not clipped: twice the failed-shot fraction can exceed 1 by sampling
    noise when the true value is close to 1.
    """
    n_pairs = (probs.size.bit_length() - 1) // 2
    idx = draw_outcomes(probs, shots, seed)
    failures = int(np.count_nonzero(failure_mask(n_pairs)[idx]))
    rate = failures / shots
    return FailureEstimate(
        p_failure=2.0 * rate,
        mode="sampled",
        shots=shots,
        std_error=2.0 * math.sqrt(rate * (1.0 - rate) / shots),
        failures=failures,
    )


def sample_shots(
    state_ref: Statevector,
    state_gen: Statevector,
    params: DiscriminatorParams | None,
    noise: NoiseModel | None,
    shots: int,
    seed: int,
) -> list[ShotOutcome]:
    """Raw measurement records, split into reference and generator halves."""
    n, idx = _sample_indices(state_ref, state_gen, params, noise, shots, seed)
    outcomes = []
    for i in idx:
        bits = format(int(i), f"0{2 * n}b")
        outcomes.append(ShotOutcome(bits[:n], bits[n:]))
    return outcomes


def p_failure_sampled(
    state_ref: Statevector,
    state_gen: Statevector,
    params: DiscriminatorParams | None,
    noise: NoiseModel | None,
    shots: int,
    seed: int,
) -> FailureEstimate:
    """Shot-based estimate; same seed, same shots, same answer."""
    if shots < 1:
        raise ParameterError("shots must be >= 1")
    joint = _joint(state_ref, state_gen)
    n = state_ref.num_qubits
    circuit = build_discriminator(n, _resolve(n, params), noise)
    return sampled_estimate(output_probabilities(circuit, {}, joint), shots, seed)


def thetas_from(values: Sequence[float]) -> DiscriminatorParams:
    return DiscriminatorParams(tuple(values))
