"""Hand-written counterparts of the QASM fixtures, built without the parser.

Library gates (cu1, rzz, cy, crz, sx, ...) are written as natively
controlled gates or textbook identities, so a match is a real check of the
parser's expansion and qubit bookkeeping.
"""

import math

from rhkit.sim import (
    Circuit, Gate, GateKind, ccx, cry, cx, cz, h, rx, ry, rz, s, sdg, swap, t, u1, u2, u3,
    x, y,
)

pi = math.pi


def ctrl(kind, control, target, *args):
    return Gate(kind, (target,), (control,), args)


def bell_2():
    return Circuit(2, (h(0), cx(0, 1)))


def ghz_3():
    return Circuit(3, (h(0), cx(0, 1), cx(1, 2)))


def bv_4():
    g = [x(3)] + [h(q) for q in range(4)] + [cx(0, 3), cx(2, 3)] + [h(q) for q in range(3)]
    return Circuit(4, tuple(g))


def qft_4():
    g = []
    for j in range(4):
        g.append(h(j))
        for k in range(j + 1, 4):
            g.append(ctrl(GateKind.U1, k, j, pi / 2 ** (k - j)))
    g += [swap(0, 3), swap(1, 2)]
    return Circuit(4, tuple(g))


def adder_4():
    return Circuit(4, (x(0), x(2), ccx(0, 1, 3), cx(0, 1), ccx(1, 2, 3), cx(1, 2), cx(0, 1)))


def dj_5():
    g = [x(4)] + [h(q) for q in range(5)] + [cx(0, 4), cx(1, 4), cx(3, 4)]
    g += [h(q) for q in range(4)]
    return Circuit(5, tuple(g))


def grover_3():
    ccz = Gate(GateKind.Z, (2,), (0, 1))
    g = [h(q) for q in range(3)] + [ccz]
    g += [h(q) for q in range(3)] + [x(q) for q in range(3)] + [ccz]
    g += [x(q) for q in range(3)] + [h(q) for q in range(3)]
    return Circuit(3, tuple(g))


def ghz_6():
    return Circuit(6, (h(0),) + tuple(cx(q, q + 1) for q in range(5)))


def qaoa_6():
    g = [h(q) for q in range(6)]
    for a in range(6):
        b = (a + 1) % 6
        g += [cx(a, b), rz(b, 0.7), cx(a, b)]  # rzz up to global phase
    g += [rx(q, 0.7) for q in range(6)]
    return Circuit(6, tuple(g))


def mygate_3():
    g = [ry(0, 0.3), cx(0, 1), ry(1, 0.55), cx(1, 2), u3(2, 0.3, 1.1, -pi / 4),
         ry(2, -pi / 3), cx(2, 0)]
    return Circuit(3, tuple(g))


def wstate_3():
    g = [ry(0, 2 * math.acos(1 / math.sqrt(3))), cry(0, 1, pi / 2), cx(1, 2), cx(0, 1), x(0)]
    return Circuit(3, tuple(g))


def tworeg_4():
    # a[0], a[1], b[0], b[1] -> 0, 1, 2, 3
    g = [h(0), u3(3, 0.4, 0.2, -0.9), cx(0, 2), cx(1, 3), cz(1, 2),
         ctrl(GateKind.RZ, 2, 0, 0.8), t(1), sdg(3)]
    return Circuit(4, tuple(g))


def phase_2():
    g = [u1(0, -pi / 2 + 0.1), u1(1, 0.25), ctrl(GateKind.Y, 0, 1), rx(1, pi / 2), y(0),
         rz(1, math.log(2))]
    return Circuit(2, tuple(g))


HANDBUILT = {f.__name__: f for f in (
    bell_2, ghz_3, bv_4, qft_4, adder_4, dj_5, grover_3, ghz_6, qaoa_6, mygate_3, wstate_3,
    tworeg_4, phase_2,
)}
