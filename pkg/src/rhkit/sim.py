"""Dense statevector simulation of parameterised circuits.

Conventions used throughout the package:

* Qubit 0 is the most significant bit of an amplitude index, so the basis
  state ``|x_0 x_1 ... x_{n-1}>`` lives at index ``int("x_0x_1...", 2)``.
  Internally a state is viewed as a tensor of shape ``(2,) * n`` whose axis
  ``k`` belongs to qubit ``k``.
* ``Rz(t) = diag(exp(-i t/2), exp(i t/2))`` and
  ``Ry(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from rhkit.errors import (
    CapabilityError,
    ParameterError,
    StructuralError,
    UnsupportedGradientError,
)

ParamMap = Mapping[str, float]

MAX_UNITARY_QUBITS = 12


class GateKind(str, enum.Enum):
    I = "id"
    X = "x"
    Y = "y"
    Z = "z"
    H = "h"
    S = "s"
    SDG = "sdg"
    T = "t"
    TDG = "tdg"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    U1 = "u1"
    U2 = "u2"
    U3 = "u3"
    CX = "cx"
    CZ = "cz"
    CRY = "cry"
    CCX = "ccx"
    SWAP = "swap"


# kind -> (number of angle arguments, number of targets, required controls)
_ARITY = {
    GateKind.I: (0, 1, 0),
    GateKind.X: (0, 1, 0),
    GateKind.Y: (0, 1, 0),
    GateKind.Z: (0, 1, 0),
    GateKind.H: (0, 1, 0),
    GateKind.S: (0, 1, 0),
    GateKind.SDG: (0, 1, 0),
    GateKind.T: (0, 1, 0),
    GateKind.TDG: (0, 1, 0),
    GateKind.RX: (1, 1, 0),
    GateKind.RY: (1, 1, 0),
    GateKind.RZ: (1, 1, 0),
    GateKind.U1: (1, 1, 0),
    GateKind.U2: (2, 1, 0),
    GateKind.U3: (3, 1, 0),
    GateKind.CX: (0, 1, 1),
    GateKind.CZ: (0, 1, 1),
    GateKind.CRY: (1, 1, 1),
    GateKind.CCX: (0, 1, 2),
    GateKind.SWAP: (0, 2, 0),
}

# Gates whose angle enters as exp(-i angle G / 2) with G**2 = I (up to a
# global phase for U1), i.e. where the two-point shift rule is exact.
SHIFT_RULE_KINDS = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.U1})

_DIAGONAL_KINDS = frozenset(
    {GateKind.I, GateKind.Z, GateKind.S, GateKind.SDG, GateKind.T, GateKind.TDG,
     GateKind.RZ, GateKind.U1, GateKind.CZ}
)


@dataclass(frozen=True)
class ParamExpr:
    """An angle: ``value + coeff * params[symbol]`` (just ``value`` if literal)."""

    value: float = 0.0
    symbol: str | None = None
    coeff: float = 1.0

    def evaluate(self, params: ParamMap) -> float:
        if self.symbol is None:
            return self.value
        try:
            bound = params[self.symbol]
        except KeyError:
            raise ParameterError(f"unbound symbol {self.symbol!r}") from None
        return self.value + self.coeff * float(bound)

    def __neg__(self) -> ParamExpr:
        return ParamExpr(-self.value, self.symbol, -self.coeff)

    def __str__(self) -> str:
        if self.symbol is None:
            return repr(self.value)
        term = self.symbol if self.coeff == 1.0 else f"{self.coeff!r}*{self.symbol}"
        return term if self.value == 0.0 else f"{self.value!r}+{term}"


AngleLike = Union[float, int, str, ParamExpr]


def as_expr(angle: AngleLike) -> ParamExpr:
    """Coerce a number (literal) or a string (bare symbol) to a ParamExpr."""
    if isinstance(angle, ParamExpr):
        return angle
    if isinstance(angle, str):
        return ParamExpr(symbol=angle)
    value = float(angle)
    if not math.isfinite(value):
        raise ParameterError(f"non-finite angle {angle!r}")
    return ParamExpr(value)


def sym(name: str, coeff: float = 1.0, offset: float = 0.0) -> ParamExpr:
    return ParamExpr(offset, name, coeff)


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    args: tuple[ParamExpr, ...] = ()

    def __post_init__(self) -> None:
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        object.__setattr__(self, "args", tuple(as_expr(a) for a in self.args))
        n_args, n_targets, n_controls = _ARITY[kind]
        if len(self.args) != n_args:
            raise ParameterError(f"{kind.value} takes {n_args} angle(s), got {len(self.args)}")
        if len(self.targets) != n_targets:
            raise StructuralError(f"{kind.value} acts on {n_targets} target(s)")
        if len(self.controls) < n_controls:
            raise StructuralError(f"{kind.value} needs {n_controls} control(s)")
        qubits = self.targets + self.controls
        if len(set(qubits)) != len(qubits):
            raise StructuralError(f"{kind.value}: repeated qubit in {qubits}")
        if any(q < 0 for q in qubits):
            raise StructuralError(f"{kind.value}: negative qubit index")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(a.symbol for a in self.args if a.symbol is not None)

    def base_matrix(self, params: ParamMap = {}) -> np.ndarray:
        """Matrix acting on the targets once all controls are satisfied."""
        if not self.symbols:
            return self._literal_matrix
        angles = [a.evaluate(params) for a in self.args]
        return _base_matrix(self.kind, angles)

    @cached_property
    def _literal_matrix(self) -> np.ndarray:
        m = _base_matrix(self.kind, [a.value for a in self.args])
        m.setflags(write=False)
        return m

    def matrix(self, params: ParamMap = {}) -> np.ndarray:
        """Full matrix on ``controls + targets`` (first listed qubit most significant)."""
        base = self.base_matrix(params)
        dim = 2 ** len(self.qubits)
        out = np.eye(dim, dtype=complex)
        k = base.shape[0]
        out[dim - k:, dim - k:] = base
        return out

    def inverse(self) -> Gate:
        kind = self.kind
        swap = {GateKind.S: GateKind.SDG, GateKind.SDG: GateKind.S,
                GateKind.T: GateKind.TDG, GateKind.TDG: GateKind.T}
        if kind in swap:
            return Gate(swap[kind], self.targets, self.controls)
        if kind in (GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.U1, GateKind.CRY):
            return Gate(kind, self.targets, self.controls, (-self.args[0],))
        if kind is GateKind.U2:
            phi, lam = self.args
            return Gate(GateKind.U3, self.targets, self.controls,
                        (ParamExpr(-math.pi / 2), -lam, -phi))
        if kind is GateKind.U3:
            theta, phi, lam = self.args
            return Gate(kind, self.targets, self.controls, (-theta, -lam, -phi))
        return self

    def __str__(self) -> str:
        args = f"({', '.join(map(str, self.args))})" if self.args else ""
        ctrl = f" ctrl {list(self.controls)}" if self.controls else ""
        return f"{self.kind.value}{args} {list(self.targets)}{ctrl}"


def _base_matrix(kind: GateKind, angles: Sequence[float]) -> np.ndarray:
    s2 = 1 / math.sqrt(2)
    if kind is GateKind.I:
        return np.eye(2, dtype=complex)
    if kind in (GateKind.X, GateKind.CX, GateKind.CCX):
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if kind is GateKind.Y:
        return np.array([[0, -1j], [1j, 0]], dtype=complex)
    if kind in (GateKind.Z, GateKind.CZ):
        return np.array([[1, 0], [0, -1]], dtype=complex)
    if kind is GateKind.H:
        return np.array([[s2, s2], [s2, -s2]], dtype=complex)
    if kind is GateKind.S:
        return np.array([[1, 0], [0, 1j]], dtype=complex)
    if kind is GateKind.SDG:
        return np.array([[1, 0], [0, -1j]], dtype=complex)
    if kind is GateKind.T:
        return np.array([[1, 0], [0, complex(s2, s2)]], dtype=complex)
    if kind is GateKind.TDG:
        return np.array([[1, 0], [0, complex(s2, -s2)]], dtype=complex)
    if kind is GateKind.RX:
        c, s = math.cos(angles[0] / 2), math.sin(angles[0] / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind in (GateKind.RY, GateKind.CRY):
        c, s = math.cos(angles[0] / 2), math.sin(angles[0] / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind is GateKind.RZ:
        half = angles[0] / 2
        return np.array([[complex(math.cos(half), -math.sin(half)), 0],
                         [0, complex(math.cos(half), math.sin(half))]], dtype=complex)
    if kind is GateKind.U1:
        return np.array([[1, 0], [0, complex(math.cos(angles[0]), math.sin(angles[0]))]],
                        dtype=complex)
    if kind in (GateKind.U2, GateKind.U3):
        theta, phi, lam = (math.pi / 2, *angles) if kind is GateKind.U2 else angles
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        return np.array([[c, -np.exp(1j * lam) * s],
                         [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]], dtype=complex)
    if kind is GateKind.SWAP:
        return np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
    raise AssertionError(kind)


# Gate constructors --------------------------------------------------------

def _one(kind: GateKind):
    def make(q: int, *angles: AngleLike) -> Gate:
        return Gate(kind, (q,), (), angles)
    make.__name__ = kind.name.lower()
    return make


i_gate = _one(GateKind.I)
x = _one(GateKind.X)
y = _one(GateKind.Y)
z = _one(GateKind.Z)
h = _one(GateKind.H)
s = _one(GateKind.S)
sdg = _one(GateKind.SDG)
t = _one(GateKind.T)
tdg = _one(GateKind.TDG)
rx = _one(GateKind.RX)
ry = _one(GateKind.RY)
rz = _one(GateKind.RZ)
u1 = _one(GateKind.U1)
u2 = _one(GateKind.U2)
u3 = _one(GateKind.U3)


def cx(control: int, target: int) -> Gate:
    return Gate(GateKind.CX, (target,), (control,))


def cz(a: int, b: int) -> Gate:
    return Gate(GateKind.CZ, (b,), (a,))


def cry(control: int, target: int, angle: AngleLike) -> Gate:
    return Gate(GateKind.CRY, (target,), (control,), (angle,))


def ccx(c1: int, c2: int, target: int) -> Gate:
    return Gate(GateKind.CCX, (target,), (c1, c2))


def swap(a: int, b: int) -> Gate:
    return Gate(GateKind.SWAP, (a, b))


# Circuits -----------------------------------------------------------------

@dataclass(frozen=True)
class Circuit:
    """Immutable gate sequence; ``symbols`` is derived, in first-use order."""

    num_qubits: int
    gates: tuple[Gate, ...] = ()
    symbols: tuple[str, ...] = field(init=False)

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise StructuralError("a circuit needs at least one qubit")
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        seen: dict[str, None] = {}
        for g in gates:
            if max(g.qubits) >= self.num_qubits:
                raise StructuralError(
                    f"gate {g} touches qubit outside [0, {self.num_qubits})")
            for name in g.symbols:
                seen.setdefault(name, None)
        object.__setattr__(self, "symbols", tuple(seen))

    def __len__(self) -> int:
        return len(self.gates)

    def append(self, *gates: Gate) -> Circuit:
        return Circuit(self.num_qubits, self.gates + tuple(gates))

    def then(self, other: Circuit) -> Circuit:
        if other.num_qubits != self.num_qubits:
            raise StructuralError("cannot compose circuits of different widths")
        return Circuit(self.num_qubits, self.gates + other.gates)

    def inverse(self) -> Circuit:
        return Circuit(self.num_qubits, tuple(g.inverse() for g in reversed(self.gates)))

    def bind(self, params: ParamMap) -> Circuit:
        """Replace bound symbols by literal angles; unbound ones stay symbolic."""
        gates = []
        for g in self.gates:
            args = tuple(ParamExpr(a.evaluate(params)) if a.symbol in params else a
                         for a in g.args)
            gates.append(Gate(g.kind, g.targets, g.controls, args))
        return Circuit(self.num_qubits, tuple(gates))

    def depth(self) -> int:
        level = [0] * self.num_qubits
        for g in self.gates:
            d = max(level[q] for q in g.qubits) + 1
            for q in g.qubits:
                level[q] = d
        return max(level, default=0)

    def __str__(self) -> str:
        body = "\n".join(f"  {g}" for g in self.gates)
        return f"Circuit({self.num_qubits} qubits, {len(self.gates)} gates)\n{body}"


# States -------------------------------------------------------------------

class Statevector:
    """Amplitude vector of an ``num_qubits`` pure state (read-only)."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, amplitudes: Iterable[complex] | np.ndarray):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        n = amps.size.bit_length() - 1
        if n < 1 or amps.size != 2 ** n:
            raise StructuralError(f"amplitude count {amps.size} is not 2**n with n >= 1")
        amps.setflags(write=False)
        self.num_qubits = n
        self.amplitudes = amps

    @classmethod
    def zero(cls, num_qubits: int) -> Statevector:
        return cls.basis(num_qubits, 0)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> Statevector:
        if not 0 <= index < 2 ** num_qubits:
            raise StructuralError(f"basis index {index} out of range")
        amps = np.zeros(2 ** num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    def tensor(self, other: Statevector) -> Statevector:
        """``self (x) other``: self occupies the leading (most significant) qubits."""
        return Statevector(np.kron(self.amplitudes, other.amplitudes))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __len__(self) -> int:
        return self.amplitudes.size

    def __repr__(self) -> str:
        return f"Statevector({self.num_qubits} qubits)"


def _apply_gate(psi: np.ndarray, gate: Gate, params: ParamMap) -> np.ndarray:
    """Apply ``gate`` in place to ``psi`` (shape ``(2,)*n + batch``); return psi."""
    base = gate.base_matrix(params)
    controls = gate.controls
    targets = gate.targets
    index: list = [slice(None)] * psi.ndim
    for c in controls:
        index[c] = 1
    index = tuple(index)
    view = psi[index] if controls else psi
    # axes of the targets inside the control-sliced view
    axes = [q - sum(c < q for c in controls) for q in targets]
    if gate.kind in _DIAGONAL_KINDS:
        d0, d1 = base[0, 0], base[1, 1]
        idx0: list = [slice(None)] * view.ndim
        idx1: list = [slice(None)] * view.ndim
        idx0[axes[0]] = 0
        idx1[axes[0]] = 1
        if d0 != 1:
            view[tuple(idx0)] *= d0
        if d1 != 1:
            view[tuple(idx1)] *= d1
        return psi
    k = len(targets)
    tensor = base.reshape((2,) * (2 * k))
    out = np.tensordot(tensor, view, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    if controls:
        psi[index] = out
    else:
        psi[...] = out
    return psi


def _check_bindings(circuit: Circuit, params: ParamMap) -> None:
    missing = [name for name in circuit.symbols if name not in params]
    if missing:
        raise ParameterError(f"unbound symbol(s): {', '.join(missing)}")


def evolve(circuit: Circuit, params: ParamMap, tensor: np.ndarray) -> np.ndarray:
    """Apply the circuit to a batch of states.

    ``tensor`` has shape ``(2**n, batch)`` or ``(2**n,)``; a new array of the
    same shape is returned.
    """
    _check_bindings(circuit, params)
    n = circuit.num_qubits
    shape = tensor.shape
    psi = np.array(tensor, dtype=complex).reshape((2,) * n + shape[1:])
    for gate in circuit.gates:
        _apply_gate(psi, gate, params)
    return psi.reshape(shape)


def run_circuit(circuit: Circuit, params: ParamMap, initial: Statevector) -> Statevector:
    """Apply ``circuit`` to ``initial`` and return the new state."""
    if initial.num_qubits != circuit.num_qubits:
        raise StructuralError(
            f"state has {initial.num_qubits} qubits, circuit has {circuit.num_qubits}")
    return Statevector(evolve(circuit, params, initial.amplitudes))


def fidelity(a: Statevector, b: Statevector) -> float:
    """``|<a|b>|**2``."""
    if a.num_qubits != b.num_qubits:
        raise StructuralError("fidelity of states with different qubit counts")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def unitary_of(circuit: Circuit, params: ParamMap = {}) -> np.ndarray:
    """Full ``2**n x 2**n`` matrix of the circuit; column j is the image of |j>."""
    if circuit.num_qubits > MAX_UNITARY_QUBITS:
        raise CapabilityError(
            f"unitary_of limited to {MAX_UNITARY_QUBITS} qubits, got {circuit.num_qubits}")
    dim = 2 ** circuit.num_qubits
    return evolve(circuit, params, np.eye(dim, dtype=complex))


# Gradients ----------------------------------------------------------------

CircuitCost = Callable[[Circuit, ParamMap], float]


def split_occurrences(circuit: Circuit) -> tuple[Circuit, dict[str, list[tuple[str, float]]]]:
    """Give every symbol occurrence its own symbol.

    Returns the rewritten circuit and, per original symbol, the list of
    ``(occurrence_symbol, coeff)`` pairs.  Occurrence symbols carry the
    original coefficient, so binding each to the original value reproduces
    the original circuit.
    """
    occurrences: dict[str, list[tuple[str, float]]] = {name: [] for name in circuit.symbols}
    gates = []
    for gi, g in enumerate(circuit.gates):
        args = []
        for ai, a in enumerate(g.args):
            if a.symbol is None or a.coeff == 0.0:
                args.append(a if a.symbol is None else ParamExpr(a.value))
                continue
            if g.kind not in SHIFT_RULE_KINDS or g.controls:
                raise UnsupportedGradientError(
                    f"symbol {a.symbol!r} enters {g.kind.value} gate #{gi}; "
                    "the shift rule needs an uncontrolled rx/ry/rz/u1")
            occ = f"{a.symbol}@{gi}.{ai}"
            occurrences[a.symbol].append((occ, a.coeff))
            args.append(ParamExpr(a.value, occ, a.coeff))
        gates.append(Gate(g.kind, g.targets, g.controls, tuple(args)))
    return Circuit(circuit.num_qubits, tuple(gates)), occurrences


def cost_gradient(cost: CircuitCost, circuit: Circuit, params: ParamMap) -> np.ndarray:
    """Exact gradient of ``cost(circuit, params)`` via the two-point shift rule.

    ``cost`` must be an expectation value that depends on the circuit only
    through its action on states.  Entries follow ``circuit.symbols``.
    For a symbol used with coefficient ``c`` in several gates the occurrence
    contributions ``c * [f(+pi/2) - f(-pi/2)] / 2`` are summed.
    """
    _check_bindings(circuit, params)
    split, occurrences = split_occurrences(circuit)
    base = {occ: float(params[name]) for name, occs in occurrences.items() for occ, _ in occs}
    grad = np.zeros(len(circuit.symbols))
    for k, name in enumerate(circuit.symbols):
        total = 0.0
        for occ, coeff in occurrences[name]:
            # shift the gate angle by +-pi/2, i.e. the symbol by +-pi/(2c)
            shift = (math.pi / 2) / coeff
            plus = dict(base)
            plus[occ] += shift
            minus = dict(base)
            minus[occ] -= shift
            total += coeff * (cost(split, plus) - cost(split, minus)) / 2
        grad[k] = total
    return grad
