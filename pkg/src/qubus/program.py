"""Element-program IR, JSON serialization and resource tallies.

A program is a flat list of instructions. Detections carry their classical
feedforward as two nested instruction lists, one for the vacuum outcome and
one for every other outcome. Conditional phases inside those lists are linear
in the outcome of the detection that owns them.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Any, Iterable, Iterator, Union

import numpy as np

PROGRAM_FORMAT = 1


@dataclass(frozen=True)
class Inject:
    qubus: tuple[int, ...]
    labels: tuple[complex, ...]


@dataclass(frozen=True)
class BS50:
    photon: int
    pairs: tuple[tuple[str, str], ...]
    multiplicity: int = 1


@dataclass(frozen=True)
class PBS:
    photon: int
    in_mode: str
    out_h: str
    out_v: str


@dataclass(frozen=True)
class XPM:
    photon: int
    mode: str
    pol: str | None
    qubus: int
    theta: float


@dataclass(frozen=True)
class PhaseShift:
    qubus: int
    phi: float


@dataclass(frozen=True)
class CoherentBS:
    q1: int
    q2: int
    multiplicity: int = 1


@dataclass(frozen=True)
class LocalUnitary:
    photon: int
    mode: str
    matrix: tuple[tuple[complex, complex], tuple[complex, complex]]


@dataclass(frozen=True)
class ModeSwap:
    photon: int
    a: str
    b: str


@dataclass(frozen=True)
class Relabel:
    photon: int
    mapping: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class PhotonSwap:
    photon_a: int
    mode_a: str
    photon_b: int
    mode_b: str


@dataclass(frozen=True)
class ConditionalPhase:
    """exp(i (offset + per_outcome * k)) on branches with ``photon`` in ``modes``."""

    photon: int
    modes: tuple[str, ...]
    per_outcome: float
    offset: float = 0.0


@dataclass(frozen=True)
class Discard:
    qubus: int


@dataclass(frozen=True)
class Detect:
    qubus: int
    kind: str  # "pnd" or "pnnd"
    on_zero: tuple = ()
    on_click: tuple = ()
    consumed: Fraction = Fraction(0)
    eta: float = 1.0


@dataclass(frozen=True)
class Mark:
    """No-op marker opening an element gate; used for logical gate accounting."""

    gate: str  # "cpath" or "merge"
    multiplicity: int = 1
    variant: str = ""
    group: str = ""


Instruction = Union[
    Inject, BS50, PBS, XPM, PhaseShift, CoherentBS, LocalUnitary, ModeSwap,
    Relabel, PhotonSwap, ConditionalPhase, Discard, Detect, Mark,
]

_OPS = {
    "inject": Inject, "bs50": BS50, "pbs": PBS, "xpm": XPM, "phase_shift": PhaseShift,
    "coherent_bs": CoherentBS, "local_unitary": LocalUnitary, "mode_swap": ModeSwap,
    "relabel": Relabel, "photon_swap": PhotonSwap, "conditional_phase": ConditionalPhase,
    "discard": Discard, "detect": Detect, "mark": Mark,
}
_NAMES = {cls: name for name, cls in _OPS.items()}


def local_unitary(photon: int, mode: str, u) -> LocalUnitary:
    u = np.asarray(u, dtype=complex)
    return LocalUnitary(photon, mode, ((complex(u[0, 0]), complex(u[0, 1])), (complex(u[1, 0]), complex(u[1, 1]))))


@dataclass
class ElementProgram:
    n_qubits: int
    instructions: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def __iter__(self) -> Iterator:
        return iter(self.instructions)

    def __len__(self) -> int:
        return len(self.instructions)

    def to_dict(self) -> dict:
        return {
            "format": PROGRAM_FORMAT,
            "n_qubits": self.n_qubits,
            "params": _encode(self.params),
            "instructions": [instruction_to_dict(i) for i in self.instructions],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "ElementProgram":
        try:
            n = int(d["n_qubits"])
            instrs = [instruction_from_dict(x) for x in d["instructions"]]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed program: {exc}") from exc
        return cls(n, instrs, dict(d.get("params", {})))

    @classmethod
    def from_json(cls, text: str) -> "ElementProgram":
        return cls.from_dict(json.loads(text))


class ProgramBuilder:
    """Accumulates instructions and hands out fresh qubus ids."""

    def __init__(self, n_qubits: int, **params):
        self.program = ElementProgram(n_qubits, [], dict(params))
        self._next_qubus = 0

    def new_qubus(self) -> int:
        q = self._next_qubus
        self._next_qubus += 1
        return q

    def emit(self, *instrs) -> None:
        self.program.instructions.extend(instrs)

    def extend(self, instrs: Iterable) -> None:
        self.program.instructions.extend(instrs)


def _encode(x: Any) -> Any:
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (list, tuple)):
        return [_encode(v) for v in x]
    if isinstance(x, dict):
        return {k: _encode(v) for k, v in x.items()}
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


def instruction_to_dict(instr) -> dict:
    out = {"op": _NAMES[type(instr)]}
    for f in fields(instr):
        v = getattr(instr, f.name)
        if f.name in ("on_zero", "on_click"):
            out[f.name] = [instruction_to_dict(i) for i in v]
        else:
            out[f.name] = _encode(v)
    return out


def _cplx(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def instruction_from_dict(d: dict):
    d = dict(d)
    op = d.pop("op")
    if op not in _OPS:
        raise ValueError(f"unknown instruction {op!r}")
    cls = _OPS[op]
    if cls is Inject:
        return Inject(tuple(int(q) for q in d["qubus"]), tuple(_cplx(v) for v in d["labels"]))
    if cls is BS50:
        return BS50(int(d["photon"]), tuple((a, b) for a, b in d["pairs"]), int(d.get("multiplicity", 1)))
    if cls is CoherentBS:
        return CoherentBS(int(d["q1"]), int(d["q2"]), int(d.get("multiplicity", 1)))
    if cls is LocalUnitary:
        m = d["matrix"]
        return LocalUnitary(int(d["photon"]), d["mode"], tuple(tuple(_cplx(v) for v in row) for row in m))
    if cls is Relabel:
        return Relabel(int(d["photon"]), tuple((a, b) for a, b in d["mapping"]))
    if cls is ConditionalPhase:
        return ConditionalPhase(int(d["photon"]), tuple(d["modes"]), float(d["per_outcome"]), float(d.get("offset", 0.0)))
    if cls is Detect:
        return Detect(
            int(d["qubus"]),
            d["kind"],
            tuple(instruction_from_dict(x) for x in d.get("on_zero", [])),
            tuple(instruction_from_dict(x) for x in d.get("on_click", [])),
            Fraction(d.get("consumed", "0")),
            float(d.get("eta", 1.0)),
        )
    return cls(**d)


@dataclass
class ResourceTally:
    """Resource counts of a program.

    ``interference`` and ``qubus_consumed`` count logical element gates: an
    instruction serving several disjoint mode contexts at once counts once per
    context. The ``*_physical`` fields count emitted instructions.
    """

    xpm: int = 0
    qubus_consumed: Fraction = Fraction(0)
    interference: int = 0
    ancilla_photons: int = 0
    pnd: int = 0
    pnnd: int = 0
    cpath: int = 0
    merge: int = 0
    interference_physical: int = 0
    qubus_consumed_physical: Fraction = Fraction(0)

    @property
    def detections(self) -> tuple[int, int]:
        return (self.pnd, self.pnnd)

    @property
    def pairs(self) -> int:
        return min(self.cpath, self.merge)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["qubus_consumed"] = str(self.qubus_consumed)
        d["qubus_consumed_physical"] = str(self.qubus_consumed_physical)
        return d


def _walk(instrs) -> Iterator:
    for i in instrs:
        yield i
        if isinstance(i, Detect):
            yield from _walk(i.on_zero)
            yield from _walk(i.on_click)


def tally(program, group: str | None = None) -> ResourceTally:
    """Count resources instruction by instruction.

    With ``group`` set only logical gate markers of that group are counted
    (``cpath``/``merge`` fields); other counters still cover the whole program.
    """
    instrs = program.instructions if isinstance(program, ElementProgram) else list(program)
    t = ResourceTally()
    for i in _walk(instrs):
        if isinstance(i, XPM):
            t.xpm += 1
        elif isinstance(i, (BS50, CoherentBS)):
            t.interference += i.multiplicity
            t.interference_physical += 1
        elif isinstance(i, PBS):
            t.interference += 1
            t.interference_physical += 1
        elif isinstance(i, Detect):
            if i.kind == "pnd":
                t.pnd += 1
            else:
                t.pnnd += 1
            t.qubus_consumed += i.consumed
            if i.consumed:
                t.qubus_consumed_physical += Fraction(1, 2)
        elif isinstance(i, Mark):
            if group is not None and i.group != group:
                continue
            if i.gate == "cpath":
                t.cpath += i.multiplicity
            elif i.gate == "merge":
                t.merge += i.multiplicity
    return t
