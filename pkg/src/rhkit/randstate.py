"""Local random product states: an Rz-Ry-Rz chain on every qubit of |0...0>."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from rhkit.errors import StructuralError
from rhkit.sim import Circuit, Statevector, ry, rz

TWO_PI = 2 * math.pi


def derive_seed(*key: int) -> int:
    """Deterministic 63-bit seed from an integer key path."""
    state = np.random.SeedSequence([int(k) for k in key]).generate_state(2, np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


def qubit_angles(seed: int, k: int) -> tuple[float, float, float]:
    """Angles (a, b, c) of qubit ``k``, uniform on [0, 2pi)."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(k)]))
    a, b, c = rng.random(3) * TWO_PI
    return float(a), float(b), float(c)


@dataclass(frozen=True)
class LocalRandomSpec:
    num_qubits: int
    seed: int

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise StructuralError("num_qubits must be >= 1")

    @cached_property
    def angles(self) -> tuple[tuple[float, float, float], ...]:
        return tuple(qubit_angles(self.seed, k) for k in range(self.num_qubits))

    @cached_property
    def factors(self) -> np.ndarray:
        """``(n, 2)`` array: row k is the single-qubit state of qubit k."""
        rows = [single_qubit_state(*abc) for abc in self.angles]
        return np.array(rows)

    def to_json(self) -> dict:
        return {"n": self.num_qubits, "seed": self.seed}

    @classmethod
    def from_json(cls, data: dict) -> LocalRandomSpec:
        return cls(int(data["n"]), int(data["seed"]))


def single_qubit_state(a: float, b: float, c: float) -> np.ndarray:
    """Rz(a) Ry(b) Rz(c) |0>, with Rz(c) applied first."""
    cb, sb = math.cos(b / 2), math.sin(b / 2)
    phase_c = complex(math.cos(c / 2), -math.sin(c / 2))
    return np.array([
        complex(math.cos(a / 2), -math.sin(a / 2)) * cb * phase_c,
        complex(math.cos(a / 2), math.sin(a / 2)) * sb * phase_c,
    ])


def build_local_random_circuit(spec: LocalRandomSpec) -> Circuit:
    """Depth-3 circuit: Rz(c_k), Ry(b_k), Rz(a_k) on every qubit k."""
    n = spec.num_qubits
    angles = spec.angles
    gates = [rz(k, angles[k][2]) for k in range(n)]
    gates += [ry(k, angles[k][1]) for k in range(n)]
    gates += [rz(k, angles[k][0]) for k in range(n)]
    return Circuit(n, tuple(gates))


def local_state_amplitude(spec: LocalRandomSpec, i: int) -> complex:
    """Amplitude of basis state ``i`` as a product of n single-qubit amplitudes."""
    n = spec.num_qubits
    if not 0 <= i < 2 ** n:
        raise StructuralError(f"basis index {i} out of range for {n} qubits")
    amp = complex(1.0)
    factors = spec.factors
    for k in range(n):
        amp *= factors[k, (i >> (n - 1 - k)) & 1]
    return amp


def local_random_state(spec: LocalRandomSpec) -> Statevector:
    """The full product state, built by Kronecker products (no circuit run)."""
    amps = np.ones(1, dtype=complex)
    for row in spec.factors:
        amps = np.kron(amps, row)
    return Statevector(amps)
