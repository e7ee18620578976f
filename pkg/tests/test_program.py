import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qubus.compiler.lowering import compile_unitary
from qubus.composites import fredkin
from qubus.gates import GateParams, cnot_from_pair
from qubus.program import (
    BS50,
    PBS,
    XPM,
    CoherentBS,
    ConditionalPhase,
    Detect,
    Discard,
    ElementProgram,
    Inject,
    Mark,
    ModeSwap,
    PhaseShift,
    PhotonSwap,
    Relabel,
    ResourceTally,
    instruction_from_dict,
    instruction_to_dict,
    local_unitary,
    tally,
)
from oracles import haar

modes = st.sampled_from(["m", "m0", "m1", "m0'", "m01"])
small = st.integers(0, 4)
reals = st.floats(-10, 10, allow_nan=False)
cplx = st.builds(complex, reals, reals)

leaf = st.one_of(
    st.builds(lambda q, l: Inject(tuple(q), tuple(l[: len(q)] + [0j] * (len(q) - len(l)))), st.lists(small, min_size=1, max_size=2, unique=True), st.lists(cplx, max_size=2)),
    st.builds(BS50, small, st.tuples(st.tuples(modes, modes)), st.integers(1, 8)),
    st.builds(PBS, small, modes, modes, modes),
    st.builds(XPM, small, modes, st.sampled_from([None, "H", "V"]), small, reals),
    st.builds(PhaseShift, small, reals),
    st.builds(CoherentBS, small, small, st.integers(1, 8)),
    st.builds(lambda p, m, s: local_unitary(p, m, haar(2, s)), small, modes, st.integers(0, 100)),
    st.builds(ModeSwap, small, modes, modes),
    st.builds(lambda p, a, b: Relabel(p, ((a, b),)), small, modes, modes),
    st.builds(PhotonSwap, small, modes, small, modes),
    st.builds(lambda p, m, k, o: ConditionalPhase(p, (m,), k, o), small, modes, reals, reals),
    st.builds(Discard, small),
    st.builds(Mark, st.sampled_from(["cpath", "merge"]), st.integers(1, 8), st.sampled_from(["", "original", "simplified"]), st.sampled_from(["", "wrapper"])),
)
instructions = st.recursive(
    leaf,
    lambda inner: st.builds(
        lambda q, kind, z, c, num: Detect(q, kind, tuple(z), tuple(c), Fraction(num, 2), 1.0),
        small, st.sampled_from(["pnd", "pnnd"]), st.lists(inner, max_size=3), st.lists(inner, max_size=3), st.integers(0, 6),
    ),
    max_leaves=10,
)


@given(st.lists(instructions, max_size=8))
def test_program_json_round_trip(instrs):
    prog = ElementProgram(3, instrs, {"alpha": 1.5, "theta": 0.1})
    back = ElementProgram.from_json(prog.to_json())
    assert back.instructions == prog.instructions
    assert back.n_qubits == 3 and back.params == prog.params


def test_compiled_program_round_trip_preserves_tally():
    prog = compile_unitary(haar(8, 1), GateParams.default())
    back = ElementProgram.from_json(json.dumps(json.loads(prog.to_json())))
    assert back.instructions == prog.instructions
    assert tally(back) == tally(prog)


def test_malformed_programs_are_rejected():
    with pytest.raises(ValueError):
        ElementProgram.from_dict({"instructions": []})
    with pytest.raises(ValueError):
        ElementProgram.from_dict({"n_qubits": 1, "instructions": [{"op": "teleport"}]})
    with pytest.raises(ValueError):
        instruction_from_dict({"op": "nope"})


def test_empty_program_tally_is_zero():
    t = tally(ElementProgram(2))
    assert t == ResourceTally()
    assert t.detections == (0, 0) and t.pairs == 0


def test_cnot_tally_counts_every_instruction():
    t = tally(cnot_from_pair())
    assert (t.xpm, t.pnd, t.pnnd, t.cpath, t.merge) == (3, 2, 1, 1, 1)
    assert t.qubus_consumed == Fraction(1, 2)
    assert t.interference == 4
    assert t.ancilla_photons == 0


def test_group_filter_restricts_pair_count():
    prog = fredkin(GateParams.default())
    assert tally(prog, group="wrapper").pairs == 2
    assert tally(prog, group="other").pairs == 0


def test_instruction_dict_names_are_stable():
    d = instruction_to_dict(Detect(0, "pnd", (Discard(1),), (), Fraction(1, 2)))
    assert d["op"] == "detect" and d["consumed"] == "1/2"
    assert d["on_zero"] == [{"op": "discard", "qubus": 1}]
