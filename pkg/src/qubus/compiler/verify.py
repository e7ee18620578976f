"""Kraus extraction: run a program on a reference-tagged maximally entangled
input and read off the conditioned linear map of every outcome record."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..detectors import discard_qubus
from ..execute import Node, RunOptions, run, total_probability
from ..program import ElementProgram
from ..state import ROOT_MODE, HybridState, basis_index, choi_state


@dataclass
class OutcomeReport:
    probability: float
    fidelity: float
    defect: float
    merged: int
    record: tuple
    kraus: np.ndarray = field(repr=False)
    stray: float = 0.0  # norm^2 of the node outside the computational modes


@dataclass
class KrausReport:
    outcomes: list[OutcomeReport]
    total_probability: float
    max_defect: float
    min_fidelity: float
    process_fidelity: float
    nodes_created: int

    def to_dict(self) -> dict:
        return {
            "total_probability": self.total_probability,
            "max_defect": self.max_defect,
            "min_fidelity": self.min_fidelity,
            "process_fidelity": self.process_fidelity,
            "nodes_created": self.nodes_created,
            "outcomes": [
                {
                    "probability": o.probability,
                    "fidelity": o.fidelity,
                    "defect": o.defect,
                    "merged_records": o.merged,
                    "stray": o.stray,
                    "record": [[r.qubus, r.k] for r in o.record],
                }
                for o in self.outcomes
            ],
        }


def extract_kraus(state: HybridState, n_qubits: int) -> tuple[np.ndarray, float]:
    """Conditioned map from a Choi-type output state.

    Branches whose photons all sit in the root mode contribute to the map;
    anything else is returned as stray weight. Leftover beams are dropped by
    projection onto their dominant label.
    """
    while state.qubus:
        state, _ = discard_qubus(state, state.qubus[0])
    dim = 2**n_qubits
    k = np.zeros((dim, dim), dtype=complex)
    stray = 0.0
    for ((photons, ref), _), amp in state.branches.items():
        if ref < 0 or any(m != ROOT_MODE for m, _ in photons):
            stray += abs(amp) ** 2
            continue
        k[basis_index(photons), ref] += amp
    return k * math.sqrt(dim), stray


def map_fidelity(k: np.ndarray, u: np.ndarray) -> float:
    """|tr(U^dag K)| / (|K|_F |U|_F): 1 iff K is proportional to U."""
    nk = np.linalg.norm(k)
    if nk == 0:
        return 0.0
    return float(abs(np.trace(u.conj().T @ k)) / (nk * np.linalg.norm(u)))


def verify(
    program: ElementProgram,
    target,
    *,
    eps: float = 1e-12,
    budget: int | None = None,
    collapse: bool = True,
    merge: bool = True,
) -> KrausReport:
    """Enumerate every outcome record of ``program`` and compare each conditioned map to ``target``."""
    u = np.asarray(target, dtype=complex)
    dim = 2**program.n_qubits
    if u.shape != (dim, dim):
        raise ValueError(f"target is {u.shape}, program acts on {program.n_qubits} qubits")
    opts = RunOptions(eps=eps, collapse=collapse, merge=merge)
    if budget is not None:
        opts.budget = budget
    nodes: list[Node] = run(program, choi_state(program.n_qubits), options=opts)
    outs = []
    for node in nodes:
        kr, stray = extract_kraus(node.state, program.n_qubits)
        f = map_fidelity(kr, u)
        defect = math.sqrt(max(0.0, 2 - 2 * f))
        outs.append(OutcomeReport(node.probability, f, max(defect, node.defect), node.merged, node.record, kr, stray))
    tp = total_probability(nodes)
    return KrausReport(
        outs,
        tp,
        max((o.defect for o in outs), default=0.0),
        min((o.fidelity for o in outs), default=0.0),
        math.fsum(o.probability * o.fidelity**2 for o in outs) / tp if tp else 0.0,
        opts.created,
    )
