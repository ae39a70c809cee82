"""Command line entry point: ``rhkit <command> ...``.

Exit codes for ``check``: 0 Equivalent, 1 NotEquivalent, 2 Inconclusive,
3 error.  Every other command exits 0 on success and 3 on error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from rhkit import __version__
from rhkit.circuits import BUILTINS, SWEEP_PAIRS, builtin_circuits
from rhkit.discriminator import DiscriminatorParams, NoiseModel, sample_noise
from rhkit.engine import (
    TABLE_COLUMNS,
    CheckConfig,
    Verdict,
    check_equivalence,
    delta_sweep,
    table_row,
)
from rhkit.errors import RHError
from rhkit.qasm import PerturbationSpec, insert_perturbation, load_qasm, to_qasm
from rhkit.sim import Circuit, GateKind
from rhkit.training import train_discriminator, train_generator, wrap_angles

log = logging.getLogger("rhkit")

EXIT_CODES = {Verdict.EQUIVALENT: 0, Verdict.NOT_EQUIVALENT: 1, Verdict.INCONCLUSIVE: 2}
EXIT_ERROR = 3
SEED_ENV = "RHKIT_SEED"


class CliError(Exception):
    pass


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def parse_angle(text: str) -> float:
    """Float, optionally written with pi: ``pi``, ``2pi``, ``2*pi``, ``pi/2``, ``-pi``."""
    t = text.strip().replace(" ", "").replace("π", "pi")
    if "pi" not in t:
        return float(t)
    head, _, tail = t.partition("pi")
    head = head.rstrip("*")
    if head in ("", "+"):
        factor = 1.0
    elif head == "-":
        factor = -1.0
    else:
        factor = float(head)
    value = factor * math.pi
    if tail:
        if not tail.startswith("/"):
            raise ValueError(f"cannot read angle {text!r}")
        value /= float(tail[1:])
    return value


def parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(f"--delta-grid wants a:b:steps, got {text!r}")
    start, stop, count = parse_angle(parts[0]), parse_angle(parts[1]), int(parts[2])
    if count < 1:
        raise CliError("grid needs at least one point")
    if count == 1:
        return np.array([start])
    return np.linspace(start, stop, count)


def _bindings(items: list[str] | None) -> dict[str, float]:
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"--param wants name=value, got {item!r}")
        out[name.strip()] = parse_angle(value)
    return out


def load_circuit(ref: str) -> tuple[str, Circuit]:
    """A QASM path, or the name of a builtin circuit."""
    path = Path(ref)
    if path.exists():
        return path.stem, load_qasm(path).circuit
    if ref in BUILTINS:
        return ref, builtin_circuits(ref)
    raise CliError(f"{ref!r} is neither a file nor a builtin ({', '.join(BUILTINS)})")


def _write_json(path: str, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def _write_manifest(out: str, args: argparse.Namespace, runtime: float) -> None:
    """Side-car file; kept apart from the output so outputs stay byte-reproducible."""
    echo = {k: v for k, v in vars(args).items() if k != "func"}
    _write_json(out + ".manifest.json", {
        "command": args.command,
        "argv": sys.argv[1:],
        "config": echo,
        "version": __version__,
        "runtime_seconds": runtime,
    })


def _noise(args, n_pairs: int) -> NoiseModel | None:
    if args.noise_sigma <= 0:
        return None
    seed = args.noise_seed if args.noise_seed is not None else args.seed
    return sample_noise(n_pairs, args.noise_sigma, seed)


def cmd_check(args) -> int:
    ref_name, ref = load_circuit(args.reference)
    _, gen = load_circuit(args.generator)
    n = ref.num_qubits
    thetas = None
    if args.theta_file:
        thetas = DiscriminatorParams.from_json(json.loads(Path(args.theta_file).read_text()))
    config = CheckConfig(
        num_states=args.states, mode=args.mode, shots=args.shots, seed=args.seed,
        noise=_noise(args, n), discriminator_params=thetas, params=_bindings(args.param),
    )
    report = check_equivalence(ref, gen, config)
    print(f"verdict: {report.verdict.value}")
    print(f"mean_p_failure: {report.mean_p_failure:.6e}")
    print(f"max_p_failure: {report.max_p_failure:.6e}")
    print(f"std_dev: {report.std_dev:.6e}")
    print(f"undetected_bound: {report.undetected_bound:.6e}")
    if args.json:
        _write_json(args.json, report.to_json())
    if args.csv:
        column = "p_failure_Y" if report.verdict is Verdict.EQUIVALENT else "p_failure_N"
        row = table_row(ref_name, ref, None, None, args.elapsed())
        row[column] = f"{report.mean_p_failure:.6e}"
        _write_csv(args.csv, [row], TABLE_COLUMNS)
    return EXIT_CODES[report.verdict]


def cmd_train_disc(args) -> int:
    noise = sample_noise(args.pairs, args.noise_sigma, args.seed)
    thetas, train_log = train_discriminator(args.pairs, noise, args.steps, args.lr, args.seed)
    print(f"initial p_failure: {train_log.records[0].p_failure:.6e}")
    print(f"final p_failure: {train_log.final_p_failure:.6e}")
    print("thetas: " + " ".join(f"{v:.6e}" for v in thetas.thetas))
    print("noise:  " + " ".join(f"{v:.6e}" for v in noise.epsilons))
    if args.log:
        payload = train_log.to_json()
        payload["noise"] = noise.to_json()
        _write_log(args.log, train_log, payload)
    if args.theta_out:
        _write_json(args.theta_out, thetas.to_json())
    return 0


def cmd_reconstruct(args) -> int:
    ref_name, ref = load_circuit(args.reference)
    ansatz = builtin_circuits(args.ansatz)
    params, train_log = train_generator(ref, ansatz, steps=args.steps, lr=args.lr,
                                        batch=args.batch, seed=args.seed)
    print(f"initial p_failure: {train_log.records[0].p_failure:.6e}")
    print(f"final p_failure: {train_log.final_p_failure:.6e}")
    print(f"converged: {train_log.converged}")
    for name, value in wrap_angles(params).items():
        print(f"{name} = {value:.9f}")
    report = check_equivalence(ref, ansatz, CheckConfig(num_states=args.states, seed=args.seed,
                                                        params=params))
    print(f"final check: {report.verdict.value} (mean p_failure {report.mean_p_failure:.3e})")
    if args.log:
        payload = train_log.to_json()
        payload["final_check"] = {"verdict": report.verdict.value,
                                  "mean_p_failure": report.mean_p_failure}
        _write_log(args.log, train_log, payload)
    return 0


def cmd_sweep(args) -> int:
    if args.pair not in SWEEP_PAIRS:
        raise CliError(f"unknown pair {args.pair!r}; choose from {', '.join(SWEEP_PAIRS)}")
    ref_name, gen_name = SWEEP_PAIRS[args.pair]
    ref, gen = builtin_circuits(ref_name), builtin_circuits(gen_name)
    shared = set(ref.symbols) & set(gen.symbols)
    config = CheckConfig(num_states=args.states, seed=args.seed,
                         param_samples=args.betas if shared else 1)
    rows = delta_sweep((ref, gen), parse_grid(args.delta_grid), config)
    out = [{"delta": repr(r.delta), "mean_p_failure": repr(r.mean_p_failure),
            "std_dev": repr(r.std_dev)} for r in rows]
    for r in rows:
        print(f"{r.delta:10.6f}  {r.mean_p_failure:.6e}  {r.std_dev:.6e}")
    if args.csv:
        _write_csv(args.csv, out, ("delta", "mean_p_failure", "std_dev"))
    return 0


def cmd_bench(args) -> int:
    folder = Path(args.directory)
    files = sorted(folder.glob("*.qasm")) if folder.is_dir() else []
    if not files:
        raise CliError(f"no .qasm files in {folder}")
    rows = []
    for path in files:
        try:
            circuit = load_qasm(path).circuit
        except (RHError, OSError, UnicodeDecodeError) as exc:
            log.warning("skipping %s: %s", path.name, exc)
            print(f"skipped {path.name}: {exc}", file=sys.stderr)
            continue
        rows.append(bench_row(path.stem, circuit, args.states, args.seed))
        print(",".join(str(rows[-1][c]) for c in TABLE_COLUMNS))
    if args.csv:
        _write_csv(args.csv, rows, TABLE_COLUMNS)
    return 0


def bench_row(name: str, circuit: Circuit, states: int, seed: int) -> dict:
    """Equivalent (identity inserted) and non-equivalent (Rx(1.23) inserted) checks."""
    start = time.perf_counter()
    config = CheckConfig(num_states=states, seed=seed)
    same = insert_perturbation(circuit, PerturbationSpec.identity(seed=seed))
    diff = insert_perturbation(circuit, PerturbationSpec.rotation(1.23, seed=seed))
    p_y = check_equivalence(circuit, same, config).mean_p_failure
    p_n = check_equivalence(circuit, diff, config).mean_p_failure
    return table_row(name, circuit, p_y, p_n, time.perf_counter() - start)


def parse_insert(text: str) -> tuple[str, GateKind, float]:
    if text == "id":
        return "identity", GateKind.RX, 0.0
    name, sep, angle = text.partition(":")
    try:
        kind = GateKind(name)
    except ValueError:
        raise CliError(f"unknown gate {name!r} for --insert") from None
    if kind not in (GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.U1) or not sep:
        raise CliError("--insert wants id or rx|ry|rz|u1:ANGLE")
    return "gate", kind, parse_angle(angle)


def parse_position(text: str) -> dict:
    head, sep, tail = text.partition(":")
    if not sep:
        raise CliError("--position wants random:SEED or INDEX:QUBIT")
    if head == "random":
        return {"seed": int(tail)}
    return {"position": int(head), "qubit": int(tail)}


def cmd_perturb(args) -> int:
    program = load_qasm(args.input)
    kind, gate_kind, angle = parse_insert(args.insert)
    spec = PerturbationSpec(kind, gate_kind, angle if kind == "gate" else 1.23,
                            **parse_position(args.position))
    out = insert_perturbation(program.circuit, spec)
    text = to_qasm(out)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _write_csv(path: str, rows: list[dict], columns) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _write_log(path: str, train_log, payload: dict) -> None:
    if path.endswith(".csv"):
        Path(path).write_text(train_log.to_csv(), encoding="utf-8")
    else:
        _write_json(path, payload)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rhkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rhkit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    seed = _default_seed()

    p = sub.add_parser("check", help="equivalence check of two circuits")
    p.add_argument("reference", help="QASM file or builtin name")
    p.add_argument("generator", help="QASM file or builtin name")
    p.add_argument("--states", type=int, default=100)
    p.add_argument("--mode", choices=("analytic", "sampled"), default="analytic")
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--noise-seed", type=int, default=None)
    p.add_argument("--theta-file")
    p.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="bind a builtin symbol, e.g. delta=0 or delta=pi/2")
    p.add_argument("--json")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("train-disc", help="train discriminator angles on zero states")
    p.add_argument("--pairs", type=int, default=2)
    p.add_argument("--noise-sigma", type=float, default=0.02)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--log", help="TrainLog output (.json or .csv)")
    p.add_argument("--theta-out", help="write trained angles as JSON")
    p.set_defaults(func=cmd_train_disc)

    p = sub.add_parser("reconstruct", help="variationally fit an ansatz to a reference")
    p.add_argument("reference", help="QASM file or builtin name")
    p.add_argument("ansatz", help="builtin ansatz name")
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--states", type=int, default=100)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--log")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("sweep", help="p_failure against the distortion angle delta")
    p.add_argument("pair", help=f"one of {', '.join(SWEEP_PAIRS)}")
    p.add_argument("--delta-grid", default="0:2pi:17")
    p.add_argument("--states", type=int, default=100)
    p.add_argument("--betas", type=int, default=1)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="identity / Rx(1.23) insertion benchmark over QASM files")
    p.add_argument("directory")
    p.add_argument("--states", type=int, default=100)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("perturb", help="insert one gate into a QASM file")
    p.add_argument("input")
    p.add_argument("--insert", default="rx:1.23", help="id or rx:ANGLE (ry, rz, u1 too)")
    p.add_argument("--position", default="random:0", help="random:SEED or INDEX:QUBIT")
    p.add_argument("--out")
    p.set_defaults(func=cmd_perturb)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    args.elapsed = lambda: time.perf_counter() - start
    try:
        code = args.func(args)
    except (RHError, CliError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    runtime = time.perf_counter() - start
    del args.elapsed
    for out in (getattr(args, "json", None), getattr(args, "log", None),
                getattr(args, "csv", None), getattr(args, "out", None)):
        if out:
            _write_manifest(out, args, runtime)
            break
    return code


if __name__ == "__main__":
    sys.exit(main())
