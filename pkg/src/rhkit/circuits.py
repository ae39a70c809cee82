"""Named circuits used by the experiments, and the worst-case difference circuit."""

from __future__ import annotations

import inspect

from rhkit.errors import ParameterError, StructuralError
from rhkit.sim import (
    AngleLike,
    Circuit,
    Gate,
    cx,
    cz,
    ry,
    rz,
    sym,
    x,
    z,
)


def flipper_a() -> Circuit:
    """Phase flip on |01>, |10>, |11>: diag(1, -1, -1, -1) = (Z x Z) . CZ."""
    return Circuit(2, (cz(0, 1), z(0), z(1)))


def flipper_b(delta: AngleLike = "delta") -> Circuit:
    """Phase flip on |00> (= -flipper_a) followed by the distortion Ry(delta) on qubit 0."""
    return Circuit(2, (x(0), x(1), cz(0, 1), x(0), x(1), ry(0, delta)))


def flipper_ansatz(beta0: AngleLike = "beta_0", beta1: AngleLike = "beta_1") -> Circuit:
    return Circuit(2, (rz(0, beta0), rz(1, beta1), cz(0, 1)))


def _half(angle: AngleLike, sign: float) -> AngleLike:
    if isinstance(angle, str):
        return sym(angle, 0.5 * sign)
    if isinstance(angle, (int, float)):
        return 0.5 * sign * angle
    raise ParameterError("CRy builders take a symbol name or a number")


def cry_d(beta: AngleLike = "beta") -> Circuit:
    """Exact CRy(beta), control 0, target 1."""
    return Circuit(2, (ry(1, _half(beta, 1)), cx(0, 1), ry(1, _half(beta, -1)), cx(0, 1)))


def cry_e(beta: AngleLike = "beta", delta: AngleLike = "delta") -> Circuit:
    """CRy(beta) decomposed the other way round, then Ry(delta) on the target."""
    return Circuit(2, (cx(0, 1), ry(1, _half(beta, -1)), cx(0, 1), ry(1, _half(beta, 1)),
                       ry(1, delta)))


def identity_1q() -> Circuit:
    return Circuit(1, ())


def ry_1q(gamma: AngleLike = "gamma") -> Circuit:
    return Circuit(1, (ry(0, gamma),))


BUILTINS = {
    "flipper_a": flipper_a,
    "flipper_b": flipper_b,
    "flipper_ansatz": flipper_ansatz,
    "cry_d": cry_d,
    "cry_e": cry_e,
    "identity_1q": identity_1q,
    "ry_1q": ry_1q,
}

# reference/generator pairs for the delta sweeps
SWEEP_PAIRS = {
    "flipper": ("flipper_a", "flipper_b"),
    "cry": ("cry_d", "cry_e"),
}


def builtin_circuits(name: str, *symbols: AngleLike) -> Circuit:
    """Build a named circuit; positional ``symbols`` override the default symbol names."""
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ParameterError(
            f"unknown builtin circuit {name!r}; choose from {', '.join(BUILTINS)}") from None
    arity = len(inspect.signature(factory).parameters)
    if len(symbols) > arity:
        raise ParameterError(f"{name} takes at most {arity} parameter(s)")
    return factory(*symbols)


def build_worst_case_difference(n: int, u_s: Gate) -> Circuit:
    """``I (+) ... (+) I (+) U_s``: ``u_s`` on qubit n-1, controlled by qubits 0..n-2.

    Under the most-significant-first ordering this only touches the final
    2x2 block (indices 2**n - 2 and 2**n - 1).
    """
    if n < 2:
        raise StructuralError("worst-case difference needs n >= 2")
    if len(u_s.targets) != 1 or u_s.controls:
        raise StructuralError("u_s must be an uncontrolled single-qubit gate")
    kind = u_s.kind
    if kind.value in ("cx", "cz", "cry", "ccx", "swap"):
        raise StructuralError("u_s must be a single-qubit gate kind")
    gate = Gate(kind, (n - 1,), tuple(range(n - 1)), u_s.args)
    return Circuit(n, (gate,))
