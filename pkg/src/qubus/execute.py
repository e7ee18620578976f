"""Interpreter for element programs.

Execution keeps a list of nodes, one per distinguishable measurement record.
At a detection every node branches into a vacuum child and one or more click
children. Two shortcuts keep the tree small without sampling:

* click collapse: when every branch that survives a click carries the same
  effective label after the feedforward phases, the post-measurement state is
  the same for every photon number, so all k >= 1 form one exact child;
* node merging: children whose states agree up to a global phase are merged,
  since their futures differ only by a scalar.

Both can be switched off, in which case outcomes are enumerated one photon
number at a time until the remaining mass drops below ``eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import optics
from .detectors import discard_qubus, project_fock, project_no_click
from .program import (
    BS50,
    PBS,
    XPM,
    CoherentBS,
    ConditionalPhase,
    Detect,
    Discard,
    ElementProgram,
    Inject,
    LocalUnitary,
    Mark,
    ModeSwap,
    PhaseShift,
    PhotonSwap,
    Relabel,
)
from .state import HybridState, add_amplitude, canonicalize, inner, norm, scale

DEFAULT_NODE_BUDGET = 1_000_000
MERGE_TOL = 1e-10
# phases applied after the first outcome-dependent op must stay diagonal
_DIAGONAL_OK = (ConditionalPhase, Mark)
_PREFIX_OK = (ModeSwap, Relabel, LocalUnitary, PhotonSwap, ConditionalPhase, BS50, PBS, Mark)


class BudgetExceeded(RuntimeError):
    """The outcome tree grew beyond the configured node budget."""


@dataclass(frozen=True)
class Outcome:
    qubus: int
    k: int | None  # None: collapsed class of all k >= 1
    mean: float = 0.0


@dataclass
class Node:
    state: HybridState
    probability: float = 1.0
    record: tuple = ()
    defect: float = 0.0
    merged: int = 1
    leaked: float = 0.0


@dataclass
class RunOptions:
    eps: float = 1e-12
    collapse: bool = True
    merge: bool = True
    merge_tol: float = MERGE_TOL
    budget: int = DEFAULT_NODE_BUDGET
    created: int = field(default=0, repr=False)

    def count(self, n: int = 1) -> None:
        self.created += n
        if self.created > self.budget:
            raise BudgetExceeded(f"outcome tree exceeded {self.budget} nodes")


def apply_op(state: HybridState, op, outcome: int | None = None) -> tuple[HybridState, float]:
    """Apply a non-measurement instruction. Returns the new state and the leaked norm^2."""
    if isinstance(op, Inject):
        return optics.inject(state, op.qubus, op.labels), 0.0
    if isinstance(op, BS50):
        return optics.bs50_array(state, op.photon, op.pairs), 0.0
    if isinstance(op, PBS):
        return optics.pbs(state, op.photon, op.in_mode, op.out_h, op.out_v), 0.0
    if isinstance(op, XPM):
        return optics.xpm(state, [optics.XpmEntry(op.photon, op.mode, op.pol, op.qubus, op.theta)]), 0.0
    if isinstance(op, PhaseShift):
        return optics.phase_shift_coherent(state, op.qubus, op.phi), 0.0
    if isinstance(op, CoherentBS):
        return optics.coherent_bs(state, op.q1, op.q2), 0.0
    if isinstance(op, LocalUnitary):
        return optics.local_unitary(state, op.photon, op.mode, np.array(op.matrix, dtype=complex)), 0.0
    if isinstance(op, ModeSwap):
        return optics.mode_swap(state, op.photon, op.a, op.b), 0.0
    if isinstance(op, Relabel):
        return optics.relabel(state, op.photon, dict(op.mapping)), 0.0
    if isinstance(op, PhotonSwap):
        return optics.photon_swap(state, op.photon_a, op.mode_a, op.photon_b, op.mode_b), 0.0
    if isinstance(op, ConditionalPhase):
        if op.per_outcome and outcome is None:
            raise ValueError("conditional phase depends on an outcome but none is in scope")
        phi = op.offset + op.per_outcome * (outcome or 0)
        return optics.conditional_phase(state, op.photon, op.modes, phi), 0.0
    if isinstance(op, Discard):
        return discard_qubus(state, op.qubus)
    if isinstance(op, Mark):
        return state, 0.0
    raise TypeError(f"cannot apply {type(op).__name__} here")


def run(
    program,
    initial,
    *,
    options: RunOptions | None = None,
    outcome: int | None = None,
) -> list[Node]:
    """Run a program (or instruction list) on a state or list of nodes, enumerating outcomes."""
    opts = options or RunOptions()
    instrs = program.instructions if isinstance(program, ElementProgram) else program
    nodes = [Node(initial)] if isinstance(initial, HybridState) else list(initial)
    for op in instrs:
        if isinstance(op, Detect):
            children = []
            for node in nodes:
                children.extend(_detect(node, op, opts))
            nodes = merge_nodes(children, opts.merge_tol) if opts.merge else children
            continue
        out = []
        for node in nodes:
            st, leaked = apply_op(node.state, op, outcome)
            if leaked:
                n2 = norm(st) ** 2
                if n2 == 0:
                    continue
                st = scale(st, 1 / math.sqrt(n2))
                node = replace(node, probability=node.probability * n2, leaked=node.leaked + leaked)
            out.append(replace(node, state=st))
        nodes = out
    return nodes


def _split_rule(rule: Sequence):
    """Split a feedforward rule into (outcome-dependent prefix, rest), or None if not collapsible."""
    last = -1
    for i, op in enumerate(rule):
        if isinstance(op, ConditionalPhase) and op.per_outcome:
            last = i
    prefix, rest = list(rule[: last + 1]), list(rule[last + 1 :])
    seen_dep = False
    for op in prefix:
        if not isinstance(op, _PREFIX_OK):
            return None
        if isinstance(op, ConditionalPhase) and op.per_outcome:
            seen_dep = True
        elif seen_dep and not isinstance(op, _DIAGONAL_OK):
            return None
    return prefix, rest


def _collapse_label(state: HybridState, qi: int, rule: Sequence) -> complex | None:
    """Common effective label of all click-surviving branches, or None if they differ."""
    split = _split_rule(rule)
    if split is None:
        return None
    prefix, _ = split
    static = [op for op in prefix if not (isinstance(op, ConditionalPhase) and op.per_outcome)]
    dynamic = [op for op in prefix if isinstance(op, ConditionalPhase) and op.per_outcome]
    mu = None
    rest_ids = state.qubus[:qi] + state.qubus[qi + 1 :]
    for ((cfg, labels), amp) in state.branches.items():
        lam = labels[qi]
        if lam == 0:
            continue
        single = HybridState({(cfg, labels[:qi] + labels[qi + 1 :]): 1.0 + 0j}, rest_ids, state.theta, state.n_photons)
        for op in static:
            single, _ = apply_op(single, op, 0)
        for ((photons, _), _), a in single.branches.items():
            slope = sum(op.per_outcome for op in dynamic if photons[op.photon][0] in op.modes)
            m = lam * complex(math.cos(slope), math.sin(slope))
            if mu is None:
                mu = m
            elif abs(m - mu) > 1e-12 * max(1.0, abs(mu)):
                return None
    return mu


def _remove_beam(state: HybridState, qi: int, keep_nonzero: bool) -> HybridState:
    out: dict = {}
    for (cfg, labels), amp in state.branches.items():
        if keep_nonzero and labels[qi] == 0:
            continue
        add_amplitude(out, (cfg, labels[:qi] + labels[qi + 1 :]), amp)
    return canonicalize(state.replace(out, state.qubus[:qi] + state.qubus[qi + 1 :]))


def _child(parent: Node, st: HybridState, p_rel: float, outcome: Outcome, opts: RunOptions) -> Node | None:
    n2 = norm(st) ** 2
    if n2 <= 0:
        return None
    opts.count()
    return Node(
        scale(st, 1 / math.sqrt(n2)),
        parent.probability * p_rel,
        parent.record + (outcome,),
        parent.defect,
        parent.merged,
        parent.leaked,
    )


def _detect(node: Node, d: Detect, opts: RunOptions) -> list[Node]:
    state = node.state
    qi = state.qubus_index(d.qubus)
    pnnd = d.kind == "pnnd"
    eta = d.eta if pnnd else 1.0
    results: list[Node] = []
    total = norm(state) ** 2

    # vacuum / no-click
    if pnnd:
        s0 = project_no_click(state, d.qubus, eta)
        leaked = 0.0
        if eta < 1:
            s0, leaked = discard_qubus(s0, d.qubus)
    else:
        s0 = project_fock(state, d.qubus, 0)
        leaked = 0.0
    p0 = norm(s0) ** 2 / total
    acc = p0
    if p0 > 0:
        child = _child(node, s0, p0, Outcome(d.qubus, 0), opts)
        if child is not None:
            child.leaked += leaked
            results.extend(run(d.on_zero, [child], options=opts, outcome=0))

    mu = _collapse_label(state, qi, d.on_click) if opts.collapse else None
    if mu is not None:
        sc = _remove_beam(state, qi, keep_nonzero=True)
        w = norm(sc) ** 2 / total
        p_click = w * -math.expm1(-eta * abs(mu) ** 2)
        if p_click > 0:
            child = _child(node, sc, p_click, Outcome(d.qubus, None, abs(mu) ** 2), opts)
            if child is not None:
                # the outcome-dependent phases were folded into mu; evaluate the rule at k = 0
                results.extend(run(d.on_click, [child], options=opts, outcome=0))
        return results

    # explicit enumeration of photon numbers
    max_mean = max((abs(lab[qi]) ** 2 for (_, lab) in state.branches), default=0.0)
    k_limit = int(max_mean + 40 * math.sqrt(max_mean + 1) + 60)
    for k in range(1, k_limit + 1):
        if acc >= 1 - opts.eps:
            break
        sk = project_fock(state, d.qubus, k)
        weight = 1.0 if not pnnd else -math.expm1(k * math.log1p(-eta)) if eta < 1 else 1.0
        pk = weight * norm(sk) ** 2 / total
        acc += pk
        if pk <= 0:
            continue
        child = _child(node, sk, pk, Outcome(d.qubus, k, float(k)), opts)
        if child is not None:
            results.extend(run(d.on_click, [child], options=opts, outcome=k))
    return results


def merge_nodes(nodes: Iterable[Node], tol: float = MERGE_TOL) -> list[Node]:
    """Merge nodes whose states coincide up to a global phase."""
    reps: list[Node] = []
    for node in sorted(nodes, key=lambda n: -n.probability):
        for rep in reps:
            if rep.state.qubus != node.state.qubus:
                continue
            ov = abs(inner(rep.state, node.state))
            if ov >= 1 - tol:
                rep.probability += node.probability
                rep.defect = max(rep.defect, node.defect, 1 - ov)
                rep.merged += node.merged
                rep.leaked = max(rep.leaked, node.leaked)
                break
        else:
            reps.append(replace(node))
    return reps


def total_probability(nodes: Iterable[Node]) -> float:
    return math.fsum(n.probability for n in nodes)


def sample_trajectory(program, state: HybridState, rng: np.random.Generator, options: RunOptions | None = None):
    """Follow one measurement record chosen at random; returns (state, record).

    Each top-level detection is enumerated exactly and one child is drawn by
    probability. For a collapsed click class the concrete photon number is
    drawn from the conditional Poisson law so the record is fully specified.
    """
    opts = options or RunOptions()
    instrs = program.instructions if isinstance(program, ElementProgram) else program
    node = Node(state)
    for op in instrs:
        if not isinstance(op, Detect):
            node = run([op], [node], options=opts)[0]
            continue
        children = _detect(replace(node, probability=1.0), op, opts)
        probs = np.array([c.probability for c in children])
        pick = children[int(rng.choice(len(children), p=probs / probs.sum()))]
        node = replace(pick, probability=node.probability * pick.probability)
    record = []
    for o in node.record:
        if o.k is None:
            k = 0
            while k == 0:
                k = int(rng.poisson(o.mean))
            o = Outcome(o.qubus, k, o.mean)
        record.append(o)
    return node.state, tuple(record)
