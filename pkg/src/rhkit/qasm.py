"""OpenQASM 2.0 subset reader/writer and benchmark perturbations.

Accepted statements: ``OPENQASM 2.0;``, ``include "qelib1.inc";``,
``qreg``, ``creg`` (skipped), ``gate`` definitions, gate applications
(with register broadcasting), ``measure`` and ``barrier`` (skipped).
``opaque``, ``if``, ``reset`` and other includes are rejected.
"""

from __future__ import annotations

import math
import re
from pathlib import Path
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from rhkit.errors import PositionError, QasmError, StructuralError
from rhkit.sim import Circuit, Gate, GateKind, as_expr

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<real>(?:\d+\.\d*|\.\d+)(?:[eE][-+]?\d+)?|\d+[eE][-+]?\d+)
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<eq>==)
  | (?P<sym>[;,()\[\]{}+\-*/^])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise QasmError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


# Expressions ---------------------------------------------------------------

_FUNCS: dict[str, Callable[[float], float]] = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "exp": math.exp, "ln": math.log, "sqrt": math.sqrt,
}

Expr = Callable[[dict], float]


# Native gates: name -> (angle count, qubit count, builder)
def _native(kind: GateKind, n_ctrl: int) -> Callable:
    def build(angles: Sequence[float], qubits: Sequence[int]) -> list[Gate]:
        return [Gate(kind, tuple(qubits[n_ctrl:]), tuple(qubits[:n_ctrl]), tuple(angles))]
    return build


_NATIVE: dict[str, tuple[int, int, Callable]] = {
    "id": (0, 1, _native(GateKind.I, 0)),
    "x": (0, 1, _native(GateKind.X, 0)),
    "y": (0, 1, _native(GateKind.Y, 0)),
    "z": (0, 1, _native(GateKind.Z, 0)),
    "h": (0, 1, _native(GateKind.H, 0)),
    "s": (0, 1, _native(GateKind.S, 0)),
    "sdg": (0, 1, _native(GateKind.SDG, 0)),
    "t": (0, 1, _native(GateKind.T, 0)),
    "tdg": (0, 1, _native(GateKind.TDG, 0)),
    "rx": (1, 1, _native(GateKind.RX, 0)),
    "ry": (1, 1, _native(GateKind.RY, 0)),
    "rz": (1, 1, _native(GateKind.RZ, 0)),
    "u1": (1, 1, _native(GateKind.U1, 0)),
    "p": (1, 1, _native(GateKind.U1, 0)),
    "u2": (2, 1, _native(GateKind.U2, 0)),
    "u3": (3, 1, _native(GateKind.U3, 0)),
    "u": (3, 1, _native(GateKind.U3, 0)),
    "U": (3, 1, _native(GateKind.U3, 0)),
    "cx": (0, 2, _native(GateKind.CX, 1)),
    "CX": (0, 2, _native(GateKind.CX, 1)),
    "cz": (0, 2, _native(GateKind.CZ, 1)),
    "cry": (1, 2, _native(GateKind.CRY, 1)),
    "ccx": (0, 3, _native(GateKind.CCX, 2)),
    "swap": (0, 2, lambda a, q: [Gate(GateKind.SWAP, tuple(q))]),
}

# qelib1 gates that expand into natives
_LIBRARY = """
gate cu1(lambda) a,b { u1(lambda/2) a; cx a,b; u1(-lambda/2) b; cx a,b; u1(lambda/2) b; }
gate cp(lambda) a,b { cu1(lambda) a,b; }
gate cy a,b { sdg b; cx a,b; s b; }
gate ch a,b { h b; sdg b; cx a,b; h b; t b; cx a,b; t b; h b; s b; x b; s a; }
gate crz(lambda) a,b { u1(lambda/2) b; cx a,b; u1(-lambda/2) b; cx a,b; }
gate cu3(theta,phi,lambda) c,t { u1((lambda+phi)/2) c; u1((lambda-phi)/2) t; cx c,t;
  u3(-theta/2,0,-(phi+lambda)/2) t; cx c,t; u3(theta/2,phi,0) t; }
gate cswap a,b,c { cx c,b; ccx a,b,c; cx c,b; }
gate rzz(theta) a,b { cx a,b; u1(theta) b; cx a,b; }
gate sx a { sdg a; h a; sdg a; }
gate sxdg a { s a; h a; s a; }
"""


@dataclass
class _GateDef:
    name: str
    params: list[str]
    qargs: list[str]
    body: list[tuple[str, list[Expr], list[str], _Tok]]


@dataclass(frozen=True)
class QasmProgram:
    source_name: str
    declared_qubits: int
    circuit: Circuit
    warnings: tuple[str, ...] = ()


class _Parser:
    def __init__(self, text: str, defs: dict[str, _GateDef] | None = None):
        self.toks = _tokenize(text)
        self.pos = 0
        self.defs: dict[str, _GateDef] = dict(defs or {})
        self.qregs: dict[str, tuple[int, int]] = {}
        self.cregs: dict[str, int] = {}
        self.num_qubits = 0
        self.gates: list[Gate] = []
        self.warnings: list[str] = []

    # token helpers
    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def error(self, msg: str, tok: _Tok | None = None) -> QasmError:
        tok = tok or self.peek()
        return QasmError(msg, tok.line, tok.col)

    def expect(self, text: str | None = None, kind: str | None = None) -> _Tok:
        tok = self.next()
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            want = repr(text) if text is not None else kind
            got = repr(tok.text) if tok.kind != "eof" else "end of input"
            raise self.error(f"expected {want}, got {got}", tok)
        return tok

    def accept(self, text: str) -> bool:
        if self.peek().text == text:
            self.pos += 1
            return True
        return False

    # program structure
    def parse_program(self) -> None:
        if self.peek().text == "OPENQASM":
            self.next()
            version = self.next()
            if version.kind not in ("real", "int") or not version.text.startswith("2"):
                raise self.error(f"unsupported OpenQASM version {version.text}", version)
            self.expect(";")
        while self.peek().kind != "eof":
            self.statement()

    def statement(self) -> None:
        tok = self.peek()
        word = tok.text
        if tok.kind != "id":
            raise self.error(f"unexpected {word!r}", tok)
        if word == "include":
            self.next()
            name = self.expect(kind="string").text.strip('"')
            if name != "qelib1.inc":
                raise self.error(f"cannot include {name!r}; only qelib1.inc is built in", tok)
            self.expect(";")
        elif word in ("qreg", "creg"):
            self.next()
            name = self.expect(kind="id").text
            self.expect("[")
            size = int(self.expect(kind="int").text)
            self.expect("]")
            self.expect(";")
            if name in self.qregs or name in self.cregs:
                raise self.error(f"register {name!r} declared twice", tok)
            if word == "qreg":
                self.qregs[name] = (self.num_qubits, size)
                self.num_qubits += size
            else:
                self.cregs[name] = size
                self.warnings.append(f"line {tok.line}: skipped creg {name}")
        elif word == "gate":
            self.gate_definition()
        elif word in ("measure", "barrier"):
            self.next()
            while self.peek().text != ";":
                if self.peek().kind == "eof":
                    raise self.error("missing ';'")
                self.next()
            self.next()
            self.warnings.append(f"line {tok.line}: skipped {word}")
        elif word in ("opaque", "if", "reset"):
            raise self.error(f"'{word}' is not supported", tok)
        else:
            self.application()

    def gate_definition(self) -> None:
        self.expect("gate")
        name_tok = self.expect(kind="id")
        name = name_tok.text
        if name in _NATIVE:
            raise self.error(f"cannot redefine built-in gate {name!r}", name_tok)
        params: list[str] = []
        if self.accept("("):
            if not self.accept(")"):
                params.append(self.expect(kind="id").text)
                while self.accept(","):
                    params.append(self.expect(kind="id").text)
                self.expect(")")
        qargs = [self.expect(kind="id").text]
        while self.accept(","):
            qargs.append(self.expect(kind="id").text)
        if len(set(qargs)) != len(qargs):
            raise self.error(f"gate {name!r} repeats a qubit argument", name_tok)
        self.expect("{")
        body = []
        while not self.accept("}"):
            tok = self.expect(kind="id")
            if tok.text == "barrier":
                while self.next().text != ";":
                    pass
                continue
            if tok.text == name:
                raise self.error(f"recursive gate definition {name!r}", tok)
            if tok.text not in _NATIVE and tok.text not in self.defs:
                raise self.error(f"unknown gate {tok.text!r}", tok)
            exprs = self.expr_list(set(params))
            args = [self.expect(kind="id").text]
            while self.accept(","):
                args.append(self.expect(kind="id").text)
            self.expect(";")
            for a in args:
                if a not in qargs:
                    raise self.error(f"unknown qubit argument {a!r} in gate {name!r}", tok)
            body.append((tok.text, exprs, args, tok))
        self.defs[name] = _GateDef(name, params, qargs, body)

    def expr_list(self, names: set[str]) -> list[Expr]:
        exprs: list[Expr] = []
        if self.accept("("):
            if not self.accept(")"):
                exprs.append(self.expression(names))
                while self.accept(","):
                    exprs.append(self.expression(names))
                self.expect(")")
        return exprs

    def application(self) -> None:
        tok = self.expect(kind="id")
        name = tok.text
        if name not in _NATIVE and name not in self.defs:
            raise self.error(f"unknown gate {name!r}", tok)
        exprs = self.expr_list(set())
        angles = [e({}) for e in exprs]
        operands = [self.operand()]
        while self.accept(","):
            operands.append(self.operand())
        self.expect(";")
        sizes = {len(o) for o in operands if len(o) > 1}
        if len(sizes) > 1:
            raise self.error("register size mismatch in broadcast", tok)
        width = sizes.pop() if sizes else 1
        for i in range(width):
            qubits = [o[i] if len(o) > 1 else o[0] for o in operands]
            self.expand(name, angles, qubits, tok, depth=0)

    def operand(self) -> list[int]:
        tok = self.expect(kind="id")
        if tok.text not in self.qregs:
            raise self.error(f"unknown quantum register {tok.text!r}", tok)
        offset, size = self.qregs[tok.text]
        if self.accept("["):
            idx_tok = self.expect(kind="int")
            self.expect("]")
            idx = int(idx_tok.text)
            if idx >= size:
                raise self.error(f"index {idx} out of range for {tok.text}[{size}]", idx_tok)
            return [offset + idx]
        return list(range(offset, offset + size))

    def expand(self, name: str, angles: list[float], qubits: list[int], tok: _Tok,
               depth: int) -> None:
        if depth > 64:
            raise self.error("gate expansion too deep", tok)
        if len(set(qubits)) != len(qubits):
            raise self.error(f"{name}: repeated qubit operand", tok)
        if name in _NATIVE:
            n_angles, n_qubits, build = _NATIVE[name]
            if len(angles) != n_angles or len(qubits) != n_qubits:
                raise self.error(
                    f"{name} takes {n_angles} parameter(s) and {n_qubits} qubit(s), "
                    f"got {len(angles)} and {len(qubits)}", tok)
            self.gates.extend(build(angles, qubits))
            return
        gdef = self.defs[name]
        if len(angles) != len(gdef.params) or len(qubits) != len(gdef.qargs):
            raise self.error(
                f"{name} takes {len(gdef.params)} parameter(s) and {len(gdef.qargs)} qubit(s), "
                f"got {len(angles)} and {len(qubits)}", tok)
        env = dict(zip(gdef.params, angles))
        qmap = dict(zip(gdef.qargs, qubits))
        for sub, exprs, args, sub_tok in gdef.body:
            self.expand(sub, [e(env) for e in exprs], [qmap[a] for a in args],
                        sub_tok, depth + 1)

    # expressions: precedence climbing, ^ is right associative
    def expression(self, names: set[str]) -> Expr:
        return self.additive(names)

    def additive(self, names: set[str]) -> Expr:
        left = self.term(names)
        while self.peek().text in ("+", "-"):
            op = self.next().text
            right = self.term(names)
            left = (lambda l, r: lambda env: l(env) + r(env))(left, right) if op == "+" else \
                (lambda l, r: lambda env: l(env) - r(env))(left, right)
        return left

    def term(self, names: set[str]) -> Expr:
        left = self.unary(names)
        while self.peek().text in ("*", "/"):
            op_tok = self.next()
            right = self.unary(names)
            if op_tok.text == "*":
                left = (lambda l, r: lambda env: l(env) * r(env))(left, right)
            else:
                left = self._divide(left, right, op_tok)
        return left

    def _divide(self, left: Expr, right: Expr, tok: _Tok) -> Expr:
        def div(env: dict) -> float:
            denom = right(env)
            if denom == 0:
                raise QasmError("division by zero", tok.line, tok.col)
            return left(env) / denom
        return div

    def unary(self, names: set[str]) -> Expr:
        if self.accept("-"):
            inner = self.unary(names)
            return lambda env: -inner(env)
        if self.accept("+"):
            return self.unary(names)
        return self.power(names)

    def power(self, names: set[str]) -> Expr:
        base = self.atom(names)
        if self.accept("^"):
            exponent = self.unary(names)
            return lambda env: base(env) ** exponent(env)
        return base

    def atom(self, names: set[str]) -> Expr:
        tok = self.next()
        if tok.kind in ("real", "int"):
            value = float(tok.text)
            return lambda env: value
        if tok.text == "(":
            inner = self.expression(names)
            self.expect(")")
            return inner
        if tok.kind == "id":
            if tok.text == "pi":
                return lambda env: math.pi
            if tok.text in _FUNCS:
                func = _FUNCS[tok.text]
                self.expect("(")
                arg = self.expression(names)
                self.expect(")")
                return lambda env: func(arg(env))
            if tok.text in names:
                ident = tok.text
                return lambda env: env[ident]
            raise self.error(f"unknown identifier {tok.text!r} in expression", tok)
        raise self.error(f"unexpected {tok.text!r} in expression", tok)


def _library_defs() -> dict[str, _GateDef]:
    parser = _Parser(_LIBRARY)
    parser.parse_program()
    return parser.defs


_LIBRARY_DEFS = _library_defs()


def parse_qasm(text: str, source_name: str = "<string>") -> QasmProgram:
    """Parse OpenQASM 2.0 text into a Circuit (qubits in declaration order)."""
    parser = _Parser(text, _LIBRARY_DEFS)
    parser.parse_program()
    if parser.num_qubits == 0:
        raise QasmError("program declares no qubits")
    circuit = Circuit(parser.num_qubits, tuple(parser.gates))
    return QasmProgram(source_name, parser.num_qubits, circuit, tuple(parser.warnings))


def load_qasm(path) -> QasmProgram:
    path = Path(path)
    return parse_qasm(path.read_text(encoding="utf-8"), path.name)


_EMIT_NAMES = {
    GateKind.I: "id", GateKind.X: "x", GateKind.Y: "y", GateKind.Z: "z", GateKind.H: "h",
    GateKind.S: "s", GateKind.SDG: "sdg", GateKind.T: "t", GateKind.TDG: "tdg",
    GateKind.RX: "rx", GateKind.RY: "ry", GateKind.RZ: "rz", GateKind.U1: "u1",
    GateKind.U2: "u2", GateKind.U3: "u3", GateKind.CX: "cx", GateKind.CZ: "cz",
    GateKind.CRY: "cry", GateKind.CCX: "ccx", GateKind.SWAP: "swap",
}
_EXPECTED_CONTROLS = {GateKind.CX: 1, GateKind.CZ: 1, GateKind.CRY: 1, GateKind.CCX: 2}


def to_qasm(circuit: Circuit) -> str:
    """Emit a bound circuit as OpenQASM 2.0 on a single register ``q``."""
    if circuit.symbols:
        raise StructuralError("cannot write a circuit with free symbols")
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.num_qubits}];"]
    for g in circuit.gates:
        if len(g.controls) != _EXPECTED_CONTROLS.get(g.kind, 0):
            raise StructuralError(f"no OpenQASM 2.0 name for {g}")
        args = f"({','.join(repr(a.value) for a in g.args)})" if g.args else ""
        operands = ",".join(f"q[{q}]" for q in g.controls + g.targets)
        lines.append(f"{_EMIT_NAMES[g.kind]}{args} {operands};")
    return "\n".join(lines) + "\n"


# Perturbations ---------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationSpec:
    """One inserted gate: an identity, or ``gate_kind(angle)``.

    Give either an explicit ``(position, qubit)`` or a ``seed``; with a seed
    the position is uniform over gate boundaries (0..len) and qubits.
    """

    kind: str = "identity"  # "identity" | "gate"
    gate_kind: GateKind = GateKind.RX
    angle: float = 1.23
    position: int | None = None
    qubit: int | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("identity", "gate"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if not math.isfinite(self.angle):
            raise ValueError("perturbation angle must be finite")
        explicit = self.position is not None and self.qubit is not None
        if not explicit and self.seed is None:
            raise PositionError("give an explicit (position, qubit) or a seed")

    @classmethod
    def identity(cls, **where) -> PerturbationSpec:
        return cls("identity", **where)

    @classmethod
    def rotation(cls, angle: float = 1.23, gate_kind: GateKind = GateKind.RX,
                 **where) -> PerturbationSpec:
        return cls("gate", GateKind(gate_kind), angle, **where)


def insert_perturbation(circuit: Circuit, spec: PerturbationSpec) -> Circuit:
    n = circuit.num_qubits
    if spec.position is not None and spec.qubit is not None:
        position, qubit = spec.position, spec.qubit
        if not 0 <= position <= len(circuit):
            raise PositionError(f"position {position} outside [0, {len(circuit)}]")
        if not 0 <= qubit < n:
            raise PositionError(f"qubit {qubit} outside [0, {n})")
    else:
        if len(circuit) == 0:
            raise PositionError("cannot pick a random position in an empty circuit")
        rng = np.random.default_rng(spec.seed)
        position = int(rng.integers(0, len(circuit) + 1))
        qubit = int(rng.integers(0, n))
    if spec.kind == "identity":
        gate = Gate(GateKind.I, (qubit,))
    else:
        gate = Gate(spec.gate_kind, (qubit,), (), (as_expr(spec.angle),))
    gates = circuit.gates[:position] + (gate,) + circuit.gates[position:]
    return Circuit(n, gates)
