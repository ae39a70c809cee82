import math

import numpy as np
import pytest

from conftest import QASM_DIR
from handbuilt import HANDBUILT
from rhkit.errors import PositionError, QasmError, StructuralError
from rhkit.qasm import PerturbationSpec, insert_perturbation, load_qasm, parse_qasm, to_qasm
from rhkit.sim import Circuit, Gate, GateKind, cx, h, rx, rz, unitary_of

HEAD = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'


def same_up_to_phase(a, b, tol=1e-12):
    k = np.vdot(b.ravel(), a.ravel())
    if abs(k) < 1e-12:
        return False
    return np.max(np.abs(a - (k / abs(k)) * b)) < tol


def test_minimal_programs():
    assert parse_qasm(HEAD + "qreg q[1]; h q[0];").circuit == Circuit(1, (h(0),))
    assert parse_qasm(HEAD + "qreg q[2]; cx q[0],q[1];").circuit == Circuit(2, (cx(0, 1),))


def test_user_gate_expands_inline():
    text = HEAD + "gate mygate a,b { cx a,b; rz(0.5) b; }\nqreg q[2];\nmygate q[0],q[1];\n"
    c = parse_qasm(text).circuit
    assert len(c) == 2
    assert np.allclose(unitary_of(c), unitary_of(Circuit(2, (cx(0, 1), rz(1, 0.5)))), atol=1e-12)


def test_broadcast_and_expressions():
    c = parse_qasm(HEAD + "qreg a[2]; qreg b[2]; cx a,b; rx(-pi/2 + 2^2*0.5) b[0];").circuit
    assert c.gates[:2] == (cx(0, 2), cx(1, 3))
    assert c.gates[2].args[0].value == pytest.approx(-math.pi / 2 + 2)


def test_measure_and_barrier_are_skipped_with_warnings():
    prog = parse_qasm(HEAD + "qreg q[1]; creg c[1]; h q[0]; barrier q; measure q[0] -> c[0];")
    assert len(prog.circuit) == 1
    assert len(prog.warnings) == 3


@pytest.mark.parametrize("text, fragment", [
    ("qreg q[1]; foo q[0];", "unknown gate"),
    ("qreg q[2]; cx q[0];", "qubit"),
    ("qreg q[1]; h q[3];", "range"),
    ("qreg q[1]; h q[0]", "expected"),
    ("gate g a { g a; }\nqreg q[1]; g q[0];", "recurs"),
    ("qreg q[1]; rx q[0];", "parameter"),
    ("qreg q[1]; reset q[0];", "reset"),
])
def test_errors(text, fragment):
    with pytest.raises(QasmError) as info:
        parse_qasm(HEAD + text)
    assert fragment in str(info.value).lower()


def test_error_reports_line_and_column():
    with pytest.raises(QasmError) as info:
        parse_qasm(HEAD + "qreg q[1];\nh q[0];\n  bogus q[0];\n")
    assert info.value.line == 5 and info.value.col == 3
    with pytest.raises(QasmError):
        parse_qasm('OPENQASM 2.0;\ninclude "other.inc";\nqreg q[1];')


def test_parse_is_deterministic(qasm_dir):
    for path in sorted(qasm_dir.glob("*.qasm")):
        assert load_qasm(path).circuit == load_qasm(path).circuit


@pytest.mark.parametrize("name", sorted(HANDBUILT))
def test_fixture_matches_handbuilt(name):
    parsed = load_qasm(QASM_DIR / f"{name}.qasm").circuit
    built = HANDBUILT[name]()
    assert parsed.num_qubits == built.num_qubits
    assert same_up_to_phase(unitary_of(parsed), unitary_of(built))


@pytest.mark.parametrize("gate, native", [
    ("cu1(0.7)", Gate(GateKind.U1, (1,), (0,), (0.7,))),
    ("crz(0.7)", Gate(GateKind.RZ, (1,), (0,), (0.7,))),
    ("cy", Gate(GateKind.Y, (1,), (0,))),
    ("ch", Gate(GateKind.H, (1,), (0,))),
    ("cu3(0.3,0.4,0.5)", Gate(GateKind.U3, (1,), (0,), (0.3, 0.4, 0.5))),
])
def test_controlled_library_gates(gate, native):
    parsed = parse_qasm(HEAD + f"qreg q[2]; {gate} q[0],q[1];").circuit
    assert same_up_to_phase(unitary_of(parsed), unitary_of(Circuit(2, (native,))))


def test_cswap_and_sx():
    parsed = parse_qasm(HEAD + "qreg q[3]; cswap q[0],q[1],q[2];").circuit
    native = Circuit(3, (Gate(GateKind.SWAP, (1, 2), (0,)),))
    assert same_up_to_phase(unitary_of(parsed), unitary_of(native))
    sx = parse_qasm(HEAD + "qreg q[1]; sx q[0];").circuit
    assert same_up_to_phase(unitary_of(sx), unitary_of(Circuit(1, (rx(0, math.pi / 2),))))


def test_round_trip_through_text(qasm_dir):
    for path in sorted(qasm_dir.glob("*.qasm")):
        c = load_qasm(path).circuit
        again = parse_qasm(to_qasm(c)).circuit
        assert np.allclose(unitary_of(again), unitary_of(c), atol=1e-12)


def test_to_qasm_rejects_free_symbols():
    with pytest.raises(StructuralError):
        to_qasm(Circuit(1, (rz(0, "a"),)))


# perturbations ---------------------------------------------------------------

def test_identity_insertion_keeps_unitary(qasm_dir):
    for path in sorted(qasm_dir.glob("*.qasm")):
        c = load_qasm(path).circuit
        for seed in range(3):
            out = insert_perturbation(c, PerturbationSpec.identity(seed=seed))
            assert len(out) == len(c) + 1
            assert np.allclose(unitary_of(out), unitary_of(c), atol=1e-12)


def test_rotation_into_empty_circuit():
    out = insert_perturbation(Circuit(1, ()), PerturbationSpec.rotation(1.23, position=0, qubit=0))
    assert out == Circuit(1, (rx(0, 1.23),))
    assert not np.allclose(unitary_of(out), np.eye(2))


def test_rotation_changes_unitary_and_is_seeded(qasm_dir):
    c = load_qasm(qasm_dir / "bv_4.qasm").circuit
    a = insert_perturbation(c, PerturbationSpec.rotation(seed=5))
    assert a == insert_perturbation(c, PerturbationSpec.rotation(seed=5))
    assert len(a) == len(c) + 1
    assert not same_up_to_phase(unitary_of(a), unitary_of(c), 1e-6)


def test_random_positions_cover_the_grid():
    c = Circuit(2, (h(0), h(1)))
    seen = set()
    for seed in range(200):
        out = insert_perturbation(c, PerturbationSpec.rotation(seed=seed))
        pos = next(i for i, g in enumerate(out.gates) if g.kind is GateKind.RX)
        seen.add((pos, out.gates[pos].targets[0]))
    assert seen == {(p, q) for p in range(3) for q in range(2)}


def test_position_errors():
    with pytest.raises(PositionError):
        insert_perturbation(Circuit(1, ()), PerturbationSpec.identity(seed=0))
    with pytest.raises(PositionError):
        insert_perturbation(Circuit(1, (h(0),)), PerturbationSpec.identity(position=3, qubit=0))
    with pytest.raises(PositionError):
        insert_perturbation(Circuit(1, (h(0),)), PerturbationSpec.identity(position=0, qubit=1))
    with pytest.raises(PositionError):
        PerturbationSpec.identity()
