"""Command-line front end.

Subcommands: ``compile``, ``verify``, ``resources``, ``detector-stats`` and
``simulate``. Every JSON document written carries the run configuration and
the package version. Exit codes: 0 success, 2 bad input, 3 node budget
exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .compiler.formulas import APPROACHES, formulas
from .compiler.lowering import compile_spec, compile_unitary
from .compiler.verify import extract_kraus, verify
from .composites import GateSpec
from .detectors import DetectorModel, pe_error, pnd_module_distributions, povm_bin_decomposition, recycle_degrade
from .execute import BudgetExceeded, RunOptions, sample_trajectory
from .gates import DEFAULT_BETA_SQ, DEFAULT_THETA, VARIANTS, GateParams, alpha_for_beta_sq
from .program import ElementProgram, tally
from .state import basis_state

EXIT_OK, EXIT_INPUT, EXIT_BUDGET = 0, 2, 3
UNITARY_TOL = 1e-8
ANALYTICS_THETA = 0.01
ANALYTICS_ALPHA = 1000.0
THREADS_ENV = "QUBUS_SIM_THREADS"


class InputError(ValueError):
    """Invalid user input; reported with exit code 2."""


@dataclass
class RunConfig:
    theta: float
    alpha: float
    gamma: float
    eta: float
    epsilon: float
    seed: int
    variant: str
    threads: int

    def __post_init__(self):
        for name in ("theta", "alpha", "gamma", "eta", "epsilon"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InputError(f"--{name} must be positive, got {v}")
        if self.eta > 1:
            raise InputError(f"--eta must lie in (0, 1], got {self.eta}")
        if self.variant not in VARIANTS:
            raise InputError(f"unknown variant {self.variant!r}")

    def gate_params(self) -> GateParams:
        return GateParams(self.alpha, self.theta, self.variant, self.eta)


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def make_config(args, analytics: bool = False) -> RunConfig:
    theta = args.theta if args.theta is not None else (ANALYTICS_THETA if analytics else DEFAULT_THETA)
    if args.alpha is not None:
        alpha = args.alpha
    elif analytics:
        alpha = ANALYTICS_ALPHA
    else:
        if not theta > 0:
            raise InputError(f"--theta must be positive, got {theta}")
        alpha = alpha_for_beta_sq(DEFAULT_BETA_SQ, theta)
    return RunConfig(theta, alpha, args.gamma, args.eta, args.epsilon, args.seed, args.variant, _threads())


def envelope(cfg: RunConfig, command: str, payload: dict) -> dict:
    return {"version": __version__, "command": command, "config": asdict(cfg), **payload}


def write_output(text: str, path: str | None) -> None:
    """Write to ``path`` atomically (temp file + rename), or to stdout."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def parse_matrix(rows) -> np.ndarray:
    try:
        m = np.array(
            [[complex(z[0], z[1]) if isinstance(z, (list, tuple)) else complex(z) for z in row] for row in rows],
            dtype=complex,
        )
    except (TypeError, ValueError, IndexError) as exc:
        raise InputError(f"malformed matrix: {exc}") from exc
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"matrix must be square, got shape {m.shape}")
    return m


def load_unitary(path: str) -> np.ndarray:
    doc = _load_json(path)
    if not isinstance(doc, dict) or "matrix" not in doc:
        raise InputError("unitary JSON needs a 'matrix' field")
    u = parse_matrix(doc["matrix"])
    if "n" in doc and u.shape[0] != 2 ** int(doc["n"]):
        raise InputError(f"matrix is {u.shape[0]}x{u.shape[0]} but n = {doc['n']}")
    residual = float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())
    if residual > UNITARY_TOL:
        raise InputError(f"matrix is not unitary: residual {residual:.3e} > {UNITARY_TOL:g}")
    return u


def load_program(path: str) -> ElementProgram:
    doc = _load_json(path)
    if isinstance(doc, dict) and "program" in doc:
        doc = doc["program"]
    try:
        return ElementProgram.from_dict(doc)
    except (ValueError, TypeError, KeyError) as exc:
        raise InputError(f"malformed program: {exc}") from exc


# subcommands


def cmd_compile(args) -> int:
    cfg = make_config(args)
    doc = _load_json(args.input)
    params = cfg.gate_params()
    if isinstance(doc, dict) and "structure" in doc:
        try:
            spec = GateSpec.from_dict(doc)
        except (ValueError, TypeError, KeyError) as exc:
            raise InputError(f"invalid gate spec: {exc}") from exc
        prog = compile_spec(spec, params)
        target = spec.target()
    else:
        target = load_unitary(args.input)
        if target.shape[0] < 2 or target.shape[0] & (target.shape[0] - 1):
            raise InputError(f"matrix size {target.shape[0]} is not a power of two >= 2")
        prog = compile_unitary(target, params)
    payload = {"program": prog.to_dict(), "tally": tally(prog).to_dict()}
    write_output(dump(envelope(cfg, "compile", payload)), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = make_config(args)
    prog = load_program(args.program)
    target = load_unitary(args.target)
    if target.shape[0] != 2**prog.n_qubits:
        raise InputError(f"target is {target.shape[0]}x{target.shape[0]}, program acts on {prog.n_qubits} qubits")
    report = verify(prog, target, eps=cfg.epsilon, budget=args.budget)
    write_output(dump(envelope(cfg, "verify", {"report": report.to_dict()})), args.out)
    return EXIT_OK


def _n_range(text: str) -> list[int]:
    try:
        if "-" in text:
            a, b = (int(x) for x in text.split("-", 1))
            ns = list(range(a, b + 1))
        else:
            ns = [int(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"bad n range {text!r}; use e.g. 2-8 or 2,3,5") from None
    if not ns or min(ns) < 1:
        raise InputError("n values must be >= 1")
    return ns


def cmd_resources(args) -> int:
    cfg = make_config(args)
    approaches = args.approach or list(APPROACHES)
    for a in approaches:
        if a not in APPROACHES:
            raise InputError(f"unknown approach {a!r}; expected one of {', '.join(APPROACHES)}")
    rows = [formulas(n, a).to_dict() for a in approaches for n in _n_range(args.n)]
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["approach", "n", "subrow", "xpm", "qubus", "ancilla_photons", "interference", "checks_ok"])
        for r in rows:
            ok = all(r["checks"].values())
            for name, sub in r["rows"].items():
                w.writerow([r["approach"], r["n"], name, sub["xpm"], sub["qubus"], sub["ancilla_photons"], r["interference"], ok])
        write_output(buf.getvalue(), args.out)
    else:
        write_output(dump(envelope(cfg, "resources", {"rows": rows})), args.out)
    return EXIT_OK


def cmd_detector_stats(args) -> int:
    cfg = make_config(args, analytics=True)
    try:
        model = DetectorModel(cfg.eta, cfg.gamma, cfg.theta, cfg.epsilon)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    peaks = [
        {
            "k": r.k,
            "label": [r.label.real, r.label.imag],
            "mean": r.mean,
            "support": list(r.pmf_support),
            "pmf": list(r.pmf) if args.pmf else None,
            "overlap_next_exact": r.overlap_next_exact,
            "overlap_approx": r.overlap_approx,
        }
        for r in pnd_module_distributions(model, args.k_max)
    ]
    try:
        bins = [asdict(b) for b in povm_bin_decomposition(model, args.k_max)]
        bin_error = None
    except ValueError as exc:
        bins, bin_error = [], str(exc)
    pe = []
    for t in args.t:
        if t < 0:
            raise InputError("recycling steps must be non-negative")
        a_eff = float(abs(recycle_degrade(cfg.alpha, cfg.theta, t)))
        est = pe_error(a_eff, cfg.theta, args.pe_gamma, cfg.eta, exact=a_eff * math.sin(cfg.theta) < 50)
        pe.append(
            {
                "t": t,
                "alpha_eff": a_eff,
                "gamma": args.pe_gamma,
                "pe_approx": est.approx,
                "log_pe_approx": est.log_approx,
                "pe_exact": est.exact,
                "below_1e-8": est.approx < 1e-8,
            }
        )
    payload = {"peaks": peaks, "bins": bins, "bin_error": bin_error, "pe": pe}
    write_output(dump(envelope(cfg, "detector-stats", payload)), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = make_config(args)
    prog = load_program(args.program)
    bits = args.input or "0" * prog.n_qubits
    if len(bits) != prog.n_qubits or set(bits) - {"0", "1"}:
        raise InputError(f"--input must be {prog.n_qubits} bits, got {bits!r}")
    rng = np.random.default_rng(cfg.seed)
    opts = RunOptions(eps=cfg.epsilon, budget=args.budget)
    shots = []
    for _ in range(args.shots):
        state, record = sample_trajectory(prog, basis_state([int(b) for b in bits]), rng, opts)
        amps = _output_amplitudes(state, prog.n_qubits)
        shots.append(
            {
                "record": [[o.qubus, o.k] for o in record],
                "output": {format(i, f"0{prog.n_qubits}b"): [a.real, a.imag] for i, a in enumerate(amps) if abs(a) > 1e-9},
            }
        )
    write_output(dump(envelope(cfg, "simulate", {"input": bits, "shots": shots})), args.out)
    return EXIT_OK


def _output_amplitudes(state, n: int) -> np.ndarray:
    """Logical amplitudes of a state with every photon back in its root mode."""
    from .state import ROOT_MODE, basis_index

    out = np.zeros(2**n, dtype=complex)
    for ((photons, _), labels), amp in state.branches.items():
        if labels or any(m != ROOT_MODE for m, _ in photons):
            continue
        out[basis_index(photons)] += amp
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--theta", type=float, default=None, help="XPM phase in radians")
    common.add_argument("--alpha", type=float, default=None, help="qubus amplitude (default: |beta|^2 = 60)")
    common.add_argument("--gamma", type=float, default=1000.0, help="detector-module probe amplitude")
    common.add_argument("--eta", type=float, default=1.0, help="detector efficiency in (0, 1]")
    common.add_argument("--epsilon", type=float, default=1e-12, help="outcome tail cutoff")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (simulate only)")
    common.add_argument("--variant", choices=VARIANTS, default="simplified")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    p = argparse.ArgumentParser(prog="qubus", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", parents=[common], help="compile a unitary or gate spec")
    c.add_argument("input", help="unitary JSON {n, matrix} or gate-spec JSON")
    c.set_defaults(func=cmd_compile)

    v = sub.add_parser("verify", parents=[common], help="verify a program against a target unitary")
    v.add_argument("program")
    v.add_argument("target")
    v.add_argument("--budget", type=int, default=1_000_000, help="outcome-tree node budget")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("resources", parents=[common], help="closed-form resource table")
    r.add_argument("--n", default="1-8", help="n range, e.g. 2-8 or 2,3")
    r.add_argument("--approach", action="append", help=f"one of {', '.join(APPROACHES)} (repeatable)")
    r.add_argument("--format", choices=("json", "csv"), default="json")
    r.set_defaults(func=cmd_resources)

    d = sub.add_parser("detector-stats", parents=[common], help="detector-module analytics")
    d.add_argument("--k-max", type=int, default=4)
    d.add_argument("--t", type=int, nargs="+", default=[0, 10_000], help="recycling steps for the error table")
    d.add_argument("--pe-gamma", type=float, default=100.0, help="probe amplitude for the error table")
    d.add_argument("--pmf", action="store_true", help="include the Poisson mass functions")
    d.set_defaults(func=cmd_detector_stats)

    s = sub.add_parser("simulate", parents=[common], help="sample measurement records (seeded demo)")
    s.add_argument("program")
    s.add_argument("--input", default=None, help="computational basis input, e.g. 01")
    s.add_argument("--shots", type=int, default=1)
    s.add_argument("--budget", type=int, default=1_000_000)
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
