"""Lowering of arbitrary unitaries to element programs.

A 2^n unitary is split by a cosine-sine decomposition into two controlled
(n-1)-qubit gates around a multiplexed y-rotation on the first qubit. The
controlled gates become one c-path/merge pair per target wrapped around a
batch holding both (n-1)-qubit halves, and the recursion continues inside
that batch. Every level therefore acts on all sectors of the state at once.
"""

from __future__ import annotations

import numpy as np

from ..composites import (
    GateSpec,
    emit_multiplexor,
    emit_n_control_m,
    emit_one_control_many,
    emit_special,
    multiplexor_batch,
    one_control_batch,
)
from ..gates import GateParams
from ..optics import check_unitary
from ..program import ElementProgram, ProgramBuilder, local_unitary
from ..state import ROOT_MODE
from .csd import csd, is_power_of_two


def _is_identity(u, tol: float = 1e-14) -> bool:
    return np.allclose(u, np.eye(u.shape[0]), atol=tol, rtol=0)


def compile_batch(b: ProgramBuilder, p: GateParams, unitaries, qubits, contexts) -> None:
    """Emit ``unitaries[c]`` on ``qubits`` inside ``contexts[c]`` for every c, sharing all gates."""
    k = len(qubits)
    if len(unitaries) != len(contexts):
        raise ValueError("one unitary per context is required")
    for u in unitaries:
        if u.shape != (2**k, 2**k):
            raise ValueError(f"expected {2 ** k}x{2 ** k} unitaries")
    if k == 1:
        for u, ctx in zip(unitaries, contexts):
            if not _is_identity(u):
                b.emit(local_unitary(qubits[0], ctx[qubits[0]], u))
        return
    parts = [csd(u) for u in unitaries]
    head, rest = qubits[0], list(qubits[1:])

    def halves(which):
        mats = []
        for d in parts:
            mats.extend([d.b1, d.b2] if which == "b" else [d.a1, d.a2])
        return lambda subs: compile_batch(b, p, mats, rest, subs)

    one_control_batch(b, p, head, rest, contexts, halves("b"))
    multiplexor_batch(b, p, head, rest, contexts, [d.cs_blocks() for d in parts])
    one_control_batch(b, p, head, rest, contexts, halves("a"))


def compile_unitary(u, params: GateParams) -> ElementProgram:
    """Compile a 2^n x 2^n unitary; qubit 0 is the most significant bit."""
    u = check_unitary(u)
    dim = u.shape[0]
    if not is_power_of_two(dim) or dim < 2:
        raise ValueError(f"unitary size must be a power of two >= 2, got {dim}")
    n = dim.bit_length() - 1
    b = ProgramBuilder(n, **params.header(), structure="raw")
    phase = u[0, 0] / abs(u[0, 0]) if abs(u[0, 0]) > 1e-12 else 1.0
    if np.allclose(u, phase * np.eye(dim), atol=1e-12, rtol=0):
        return b.program
    compile_batch(b, params, [u], list(range(n)), [{q: ROOT_MODE for q in range(n)}])
    return b.program


def compile_spec(spec: GateSpec, params: GateParams, **kw) -> ElementProgram:
    """Dispatch a structured spec to its dedicated construction."""
    s = spec.structure
    if s == "multiplexor":
        return emit_multiplexor(spec, params)
    if s == "special":
        return emit_special(spec, params, **kw)
    if s == "one_control_many":
        return emit_one_control_many(spec, params, **kw)
    if s == "n_control_m":
        return emit_n_control_m(spec, params)
    return compile_unitary(spec.matrix, params)
