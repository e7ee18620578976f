"""Multi-qubit constructions built from c-path and merging gates.

Photon ``i`` carries qubit ``i``; qubit 0 is the most significant bit of a
basis index. All constructions work on *contexts*: a context maps each photon
it involves to the spatial mode that photon occupies in one sector of the
state. A batch of contexts shares every element gate, so that no branch of
the state is ever a bystander of a c-path or merge. Gates serving several
contexts at once carry that count as their multiplicity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import block_diag

from .gates import SIGMA_X, CPathVariant, GateParams, emit_cpath, emit_merge, split_modes
from .optics import check_unitary
from .program import (
    PBS,
    Detect,
    ElementProgram,
    Inject,
    LocalUnitary,
    ModeSwap,
    PhotonSwap,
    ProgramBuilder,
    Relabel,
    ConditionalPhase,
    BS50,
    Mark,
    local_unitary,
)
from .state import ROOT_MODE

Context = dict  # photon -> mode
STRUCTURES = ("multiplexor", "special", "one_control_many", "n_control_m", "raw")
_I2 = np.eye(2, dtype=complex)


def _unique(seq):
    return tuple(dict.fromkeys(seq))


def _bits(j: int, width: int) -> str:
    return format(j, f"0{width}b") if width else ""


def _is_identity(u, tol: float = 1e-14) -> bool:
    u = np.asarray(u)
    return u.shape[0] == u.shape[1] and np.allclose(u, np.eye(u.shape[0]), atol=tol, rtol=0)


def fan_out(b: ProgramBuilder, p: GateParams, control: int, contexts: Sequence[Context], target: int,
            target_modes: Sequence[str], group: str = "", idle: Sequence[str] = ()) -> None:
    """Split ``target_modes`` by the V component of ``control`` in every context.

    ``idle`` lists other modes the control photon may occupy (it then acts as H).
    """
    emit_cpath(
        b,
        CPathVariant(p.variant, control, _unique(c[control] for c in contexts), target, tuple(target_modes),
                     tuple(idle) if p.variant == "original" else ()),
        p.alpha,
        p.theta,
        multiplicity=len(contexts),
        group=group,
    )


def fan_in(b: ProgramBuilder, p: GateParams, control: int, contexts: Sequence[Context], target: int,
           bases: Sequence[str], group: str = "") -> None:
    emit_merge(
        b,
        control,
        _unique(c[control] for c in contexts),
        target,
        tuple(bases),
        p.alpha,
        p.theta,
        multiplicity=len(contexts),
        group=group,
        eta=p.eta,
    )


def multiplexor_batch(b: ProgramBuilder, p: GateParams, target: int, controls: Sequence[int],
                      contexts: Sequence[Context], blocks: Sequence[Sequence], group: str = "",
                      passive: Sequence[int] = ()) -> None:
    """Uniformly controlled single-qubit gate, one block list per context.

    ``blocks[c][j]`` acts on ``target`` when the controls, read MSB first,
    spell ``j`` inside context ``c``. Contexts listed in ``passive`` do not
    couple their controls: those act as H, so only ``blocks[c][0]`` is applied
    there. Their target modes are still split and merged.
    """
    nc = len(controls)
    active = [c for i, c in enumerate(contexts) if i not in set(passive)]
    idle_ctx = [c for i, c in enumerate(contexts) if i in set(passive)]
    if not active:
        raise ValueError("at least one context must route its controls")
    levels = [[c[target] for c in contexts]]
    for cq in controls:
        idle = _unique(c[cq] for c in idle_ctx)
        emit_cpath(
            b,
            CPathVariant(p.variant, cq, _unique(c[cq] for c in active), target, tuple(levels[-1]),
                         idle if p.variant == "original" else ()),
            p.alpha,
            p.theta,
            multiplicity=len(contexts),
            group=group,
        )
        levels.append([m for y in levels[-1] for m in split_modes(y)])
    for ci, ctx in enumerate(contexts):
        if len(blocks[ci]) != 2**nc:
            raise ValueError(f"context {ci} needs {2 ** nc} blocks, got {len(blocks[ci])}")
        if ci in set(passive):
            if any(not np.allclose(u, blocks[ci][0], atol=1e-14) for u in blocks[ci]):
                raise ValueError("a passive context needs identical blocks")
            if not _is_identity(blocks[ci][0]):
                for j in range(2**nc):
                    b.emit(local_unitary(target, ctx[target] + _bits(j, nc), blocks[ci][0]))
            continue
        for j, u in enumerate(blocks[ci]):
            if not _is_identity(u):
                b.emit(local_unitary(target, ctx[target] + _bits(j, nc), u))
    for i in reversed(range(nc)):
        emit_merge(
            b,
            controls[i],
            _unique(c[controls[i]] for c in active),
            target,
            tuple(levels[i]),
            p.alpha,
            p.theta,
            multiplicity=len(contexts),
            group=group,
            eta=p.eta,
        )


def one_control_batch(b: ProgramBuilder, p: GateParams, control: int, targets: Sequence[int],
                      contexts: Sequence[Context], inner: Callable[[list], None], group: str = "") -> None:
    """Split every target by ``control``; ``inner`` receives the 2 x len(contexts) sub-contexts.

    Sub-contexts are ordered (context 0 / control H, context 0 / control V, ...).
    """
    for t in targets:
        fan_out(b, p, control, contexts, t, [c[t] for c in contexts], group)
    subs = [{t: split_modes(c[t])[s] for t in targets} for c in contexts for s in (0, 1)]
    inner(subs)
    for t in reversed(targets):
        fan_in(b, p, control, contexts, t, [c[t] for c in contexts], group)


def relocate(instrs: Sequence, photon_map: dict, ctx: Context) -> list:
    """Move a passive sub-program written for root modes into a context."""
    def mode(ph, m):
        if not m.startswith(ROOT_MODE):
            raise ValueError(f"mode {m!r} is not rooted at {ROOT_MODE!r}")
        return ctx[photon_map[ph]] + m[len(ROOT_MODE):]

    out = []
    for op in instrs:
        if isinstance(op, Mark):
            continue
        if isinstance(op, LocalUnitary):
            out.append(LocalUnitary(photon_map[op.photon], mode(op.photon, op.mode), op.matrix))
        elif isinstance(op, PhotonSwap):
            out.append(PhotonSwap(photon_map[op.photon_a], mode(op.photon_a, op.mode_a),
                                  photon_map[op.photon_b], mode(op.photon_b, op.mode_b)))
        elif isinstance(op, ModeSwap):
            out.append(ModeSwap(photon_map[op.photon], mode(op.photon, op.a), mode(op.photon, op.b)))
        elif isinstance(op, Relabel):
            out.append(Relabel(photon_map[op.photon], tuple((mode(op.photon, a), mode(op.photon, z)) for a, z in op.mapping)))
        elif isinstance(op, ConditionalPhase) and not op.per_outcome:
            out.append(ConditionalPhase(photon_map[op.photon], tuple(mode(op.photon, m) for m in op.modes), 0.0, op.offset))
        else:
            raise ValueError(f"{type(op).__name__} cannot be relocated; only passive programs are accepted")
    return out


def swap_program(n: int, a: int, c: int) -> ElementProgram:
    """SWAP of qubits ``a`` and ``c`` as a passive exchange of the two photons' paths."""
    prog = ElementProgram(n)
    prog.instructions.append(PhotonSwap(a, ROOT_MODE, c, ROOT_MODE))
    return prog


@dataclass
class GateSpec:
    """Structured description of a multi-qubit gate.

    * ``multiplexor``: ``blocks`` = 2^(n-1) single-qubit matrices on the last qubit;
    * ``special``: ``m`` gating controls and 2^(n-m-1) blocks applied when all
      of them are V;
    * ``one_control_many``: ``blocks`` = (U1, U2) on qubits 1..n-1;
    * ``n_control_m``: ``m`` targets (the last m qubits) and 2^(n-m) m-qubit blocks;
    * ``raw``: ``matrix`` of size 2^n.
    """

    n: int
    structure: str
    blocks: list = field(default_factory=list)
    m: int | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        self.blocks = [check_unitary(u) for u in self.blocks]
        s, n = self.structure, self.n
        if s == "multiplexor":
            self._expect(2 ** (n - 1), 2)
        elif s == "special":
            if self.m is None or not 1 <= self.m <= n - 1:
                raise ValueError(f"special gate needs 1 <= m <= n-1, got m={self.m}")
            self._expect(2 ** (n - self.m - 1), 2)
        elif s == "one_control_many":
            if n < 2:
                raise ValueError("one_control_many needs n >= 2")
            self._expect(2, 2 ** (n - 1))
        elif s == "n_control_m":
            if self.m is None or not 1 <= self.m <= n - 1:
                raise ValueError(f"n_control_m needs 1 <= m <= n-1, got m={self.m}")
            self._expect(2 ** (n - self.m), 2**self.m)
        else:
            if self.matrix is None:
                raise ValueError("raw spec needs a matrix")
            self.matrix = check_unitary(self.matrix)
            if self.matrix.shape != (2**n, 2**n):
                raise ValueError(f"raw matrix must be {2 ** n}x{2 ** n}")

    def _expect(self, count: int, dim: int) -> None:
        if len(self.blocks) != count:
            raise ValueError(f"{self.structure} on n={self.n} needs {count} blocks, got {len(self.blocks)}")
        for u in self.blocks:
            if u.shape != (dim, dim):
                raise ValueError(f"{self.structure} blocks must be {dim}x{dim}")

    def target(self) -> np.ndarray:
        """The full 2^n x 2^n matrix the spec describes."""
        s, n = self.structure, self.n
        if s == "raw":
            return self.matrix
        if s == "special":
            pad = [_I2] * (2 ** (n - 1) - len(self.blocks))
            return block_diag(*(pad + self.blocks))
        return block_diag(*self.blocks)

    def to_dict(self) -> dict:
        enc = lambda u: [[[z.real, z.imag] for z in row] for row in np.asarray(u, dtype=complex)]
        d = {"n": self.n, "structure": self.structure, "blocks": [enc(u) for u in self.blocks]}
        if self.m is not None:
            d["m"] = self.m
        if self.matrix is not None:
            d["matrix"] = enc(self.matrix)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GateSpec":
        dec = lambda rows: np.array([[complex(*z) if isinstance(z, (list, tuple)) else complex(z) for z in r] for r in rows])
        return cls(
            int(d["n"]),
            d["structure"],
            [dec(u) for u in d.get("blocks", [])],
            d.get("m"),
            dec(d["matrix"]) if d.get("matrix") is not None else None,
        )


def _builder(n: int, p: GateParams, **extra) -> ProgramBuilder:
    return ProgramBuilder(n, **p.header(), **extra)


def _root(n: int) -> Context:
    return {q: ROOT_MODE for q in range(n)}


def emit_multiplexor(spec: GateSpec, params: GateParams) -> ElementProgram:
    """(n-1)-control-1 multiplexor: target is the last qubit."""
    if spec.structure != "multiplexor":
        raise ValueError("emit_multiplexor needs a multiplexor spec")
    n = spec.n
    b = _builder(n, params, structure="multiplexor")
    if n == 1:
        if not _is_identity(spec.blocks[0]):
            b.emit(local_unitary(0, ROOT_MODE, spec.blocks[0]))
        return b.program
    multiplexor_batch(b, params, n - 1, list(range(n - 1)), [_root(n)], [spec.blocks])
    return b.program


def emit_special(spec: GateSpec, params: GateParams, layout: str = "complete") -> ElementProgram:
    """Special (n-1)-control-1 gate: blocks act only when the first m controls are all V.

    The first m photons are chained by c-paths; a PBS plus sigma_x on the
    control-H mode of photon m-1 leaves V in its mode ``m1`` exactly when all
    of them are V. That mode then routes photons m..n-1, and a multiplexor over
    the routed modes applies the blocks.

    ``layout="complete"`` lets the inner multiplexor act on both routed
    sectors (identity blocks on the idle one), which keeps every c-path free of
    bystander branches. ``layout="restricted"`` restricts the inner multiplexor to
    the routed sector only; it uses fewer XPM processes but is not
    deterministic once the inner multiplexor contains a c-path.
    """
    if spec.structure != "special":
        raise ValueError("emit_special needs a special spec")
    if layout not in ("complete", "restricted"):
        raise ValueError(f"unknown layout {layout!r}")
    n, m = spec.n, spec.m
    p = params
    b = _builder(n, p, structure="special", m=m, layout=layout)
    lo, hi = split_modes(ROOT_MODE)
    flipped = lo + "'"
    def pbs_flip(ph):
        b.emit(PBS(ph, lo, lo, flipped), local_unitary(ph, flipped, SIGMA_X))

    def pbs_unflip(ph):
        b.emit(local_unitary(ph, flipped, SIGMA_X), PBS(ph, lo, lo, flipped))

    # chain: photon k (routing mode) controls photon k+1
    gate_modes = {0: ROOT_MODE}
    idle = lambda k: (lo, flipped) if k else ()
    for k in range(m - 1):
        fan_out(b, p, k, [{k: gate_modes[k]}], k + 1, [ROOT_MODE], idle=idle(k))
        pbs_flip(k + 1)
        gate_modes[k + 1] = hi
    g = m - 1  # photon holding the gating mode
    rest = list(range(m, n))
    for t in rest:
        fan_out(b, p, g, [{g: gate_modes[g]}], t, [ROOT_MODE], idle=idle(g))
    controls, target = rest[:-1], rest[-1]
    if layout == "complete":
        ctxs = [{q: lo for q in rest}, {q: hi for q in rest}]
        multiplexor_batch(b, p, target, controls, ctxs, [[_I2] * len(spec.blocks), spec.blocks], passive=(0,))
    else:
        multiplexor_batch(b, p, target, controls, [{q: hi for q in rest}], [spec.blocks])
    for t in reversed(rest):
        fan_in(b, p, g, [{g: gate_modes[g]}], t, [ROOT_MODE])
    for k in reversed(range(m - 1)):
        pbs_unflip(k + 1)
        fan_in(b, p, k, [{k: gate_modes[k]}], k + 1, [ROOT_MODE])
    return b.program


def toffoli(params: GateParams, n: int = 3) -> ElementProgram:
    """n-qubit Toffoli: sigma_x on the last qubit when all others are V."""
    return emit_special(GateSpec(n, "special", [SIGMA_X], m=n - 1), params)


def _passive(x) -> list | None:
    if isinstance(x, ElementProgram):
        for op in x.instructions:
            if isinstance(op, (Detect, Inject)):
                raise ValueError("sub-programs must be passive (no qubus or detection)")
        return list(x.instructions)
    return None


def emit_one_control_many(spec: GateSpec, params: GateParams, u1=None, u2=None) -> ElementProgram:
    """diag(U1, U2) with qubit 0 as control.

    ``u1``/``u2`` override the spec blocks. Each may be a matrix or a passive
    program on n-1 qubits (e.g. :func:`swap_program`). Two matrices are
    compiled together as one batch.
    """
    from .compiler.lowering import compile_batch

    if spec.structure != "one_control_many":
        raise ValueError("emit_one_control_many needs a one_control_many spec")
    n = spec.n
    subs_in = [spec.blocks[0] if u1 is None else u1, spec.blocks[1] if u2 is None else u2]
    progs = [_passive(x) for x in subs_in]
    b = _builder(n, params, structure="one_control_many")
    targets = list(range(1, n))

    def inner(subs):
        if all(pr is None for pr in progs):
            mats = [check_unitary(x) for x in subs_in]
            compile_batch(b, params, mats, targets, subs)
            return
        for pr, x, ctx in zip(progs, subs_in, subs):
            if pr is None:
                x = check_unitary(x)
                if n - 1 == 1:
                    if not _is_identity(x):
                        b.emit(local_unitary(1, ctx[1], x))
                    continue
                if not _is_identity(x):
                    raise ValueError("mixing a multi-qubit matrix with a program is not supported; pass two matrices")
                continue
            b.extend(relocate(pr, {i: i + 1 for i in range(n - 1)}, ctx))

    one_control_batch(b, params, 0, targets, [_root(n)], inner, group="wrapper")
    return b.program


def fredkin(params: GateParams) -> ElementProgram:
    """Controlled SWAP of qubits 1 and 2: two c-path/merge pairs around a path exchange."""
    spec = GateSpec(3, "one_control_many", [np.eye(4), np.eye(4)])
    return emit_one_control_many(spec, params, ElementProgram(2), swap_program(2, 0, 1))


def emit_n_control_m(spec: GateSpec, params: GateParams) -> ElementProgram:
    """Qubits 0..c-1 control the last m qubits; block i acts when the controls spell i.

    Each target is split by every control (c x m c-path/merge pairs, tagged
    with group ``wrapper``); the m-qubit blocks then run as one batch over the
    2^c routed sectors.
    """
    from .compiler.lowering import compile_batch

    if spec.structure != "n_control_m":
        raise ValueError("emit_n_control_m needs an n_control_m spec")
    m = spec.m
    nc = spec.n - m
    controls, targets = list(range(nc)), list(range(nc, spec.n))
    b = _builder(spec.n, params, structure="n_control_m", m=m)
    root = _root(spec.n)
    levels = {}
    for t in targets:
        lv = [[ROOT_MODE]]
        for cq in controls:
            fan_out(b, params, cq, [root], t, lv[-1], group="wrapper")
            lv.append([x for y in lv[-1] for x in split_modes(y)])
        levels[t] = lv
    ctxs = [{t: ROOT_MODE + _bits(i, nc) for t in targets} for i in range(2**nc)]
    compile_batch(b, params, spec.blocks, targets, ctxs)
    for t in reversed(targets):
        for i in reversed(range(nc)):
            fan_in(b, params, controls[i], [root], t, levels[t][i], group="wrapper")
    return b.program
