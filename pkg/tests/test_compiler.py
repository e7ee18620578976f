from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import CNOT, SWAP, TOFFOLI, haar
from qubus.composites import GateSpec
from qubus.compiler.csd import csd, is_power_of_two
from qubus.compiler.formulas import (
    cnot1_count,
    cnot2_count,
    cpm1_interference,
    cpm1_qubus,
    cpm1_qubus_recursion,
    cpm1_xpm,
    cpm1_xpm_original,
    cpm1_xpm_recursion,
    cpm2_interference,
    cpm2_qubus,
    cpm2_xpm,
    cpm2_xpm_original,
    cpm2_xpm_summation,
    formulas,
    lsb_position,
    table,
)
from qubus.compiler.lowering import compile_spec, compile_unitary
from qubus.compiler.verify import verify
from qubus.gates import GateParams
from qubus.program import LocalUnitary, tally

PARAMS = {v: GateParams.default(variant=v) for v in ("simplified", "original")}


def test_csd_reconstructs_many_random_unitaries():
    rng = np.random.default_rng(0)
    for i in range(1000):
        dim = int(2 ** rng.integers(1, 5))
        u = haar(dim, i)
        d = csd(u)
        assert np.abs(d.reconstruct() - u).max() < 1e-10
        assert np.all(np.diff(d.s) >= 0)
        assert np.allclose(d.c**2 + d.s**2, 1)
        assert np.all(d.c >= -1e-12) and np.all(d.s >= -1e-12)
        for m in (d.a1, d.a2, d.b1, d.b2):
            assert np.allclose(m @ m.conj().T, np.eye(dim // 2), atol=1e-10)


def test_csd_of_known_forms():
    d = csd(np.eye(4))
    assert np.allclose(d.s, 0) and np.allclose(d.c, 1)
    t = 0.3
    rot = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    d = csd(rot)
    assert d.s[0] == pytest.approx(np.sin(t))
    assert np.allclose(d.reconstruct(), rot)
    d = csd(SWAP)
    assert np.allclose(d.reconstruct(), SWAP)


@pytest.mark.parametrize("bad", [np.eye(3), np.eye(1), np.ones((2, 2))])
def test_csd_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        csd(bad)


def test_is_power_of_two():
    assert [k for k in range(20) if is_power_of_two(k)] == [1, 2, 4, 8, 16]


def test_single_qubit_compiles_to_one_local_unitary():
    u = haar(2, 1)
    prog = compile_unitary(u, PARAMS["simplified"])
    assert len(prog.instructions) == 1 and isinstance(prog.instructions[0], LocalUnitary)
    assert verify(prog, u).min_fidelity >= 1 - 1e-12


def test_identity_compiles_to_empty_program():
    assert compile_unitary(1j * np.eye(8), PARAMS["simplified"]).instructions == []


@pytest.mark.parametrize("variant", ["simplified", "original"])
def test_compiled_cnot(variant):
    prog = compile_unitary(CNOT, PARAMS[variant])
    rep = verify(prog, CNOT)
    assert rep.min_fidelity >= 1 - 1e-9
    assert abs(rep.total_probability - 1) < 1e-10
    assert tally(prog).xpm == (9 if variant == "simplified" else 15)


@given(st.integers(0, 10_000))
@settings(max_examples=10)
def test_random_two_qubit_unitaries_compile_exactly(seed):
    u = haar(4, seed)
    rep = verify(compile_unitary(u, PARAMS["simplified"]), u)
    assert rep.min_fidelity >= 1 - 1e-8
    assert abs(rep.total_probability - 1) < 1e-10


@pytest.mark.parametrize("variant", ["simplified", "original"])
def test_random_three_qubit_unitary(variant):
    u = haar(8, 5)
    rep = verify(compile_unitary(u, PARAMS[variant]), u)
    assert rep.min_fidelity >= 1 - 1e-8


def test_negative_control():
    prog = compile_unitary(CNOT, PARAMS["simplified"])
    assert verify(prog, SWAP).min_fidelity < 0.9
    assert verify(compile_unitary(TOFFOLI, PARAMS["simplified"]), np.eye(8)).min_fidelity < 0.9


def test_compile_spec_dispatch():
    spec = GateSpec(3, "raw", matrix=TOFFOLI)
    assert verify(compile_spec(spec, PARAMS["simplified"]), TOFFOLI).min_fidelity >= 1 - 1e-9
    blocks = [haar(2, i) for i in range(4)]
    spec = GateSpec(3, "multiplexor", blocks)
    assert tally(compile_spec(spec, PARAMS["simplified"])).xpm == 8


@pytest.mark.parametrize("n", range(2, 8))
@pytest.mark.parametrize("variant", ["simplified", "original"])
def test_compiled_tallies_equal_cpm1_formulas(n, variant):
    t = tally(compile_unitary(haar(2**n, n), PARAMS[variant]))
    assert t.xpm == cpm1_xpm_recursion(n, variant)
    if variant == "simplified":
        assert t.xpm == cpm1_xpm(n)
        assert t.qubus_consumed == cpm1_qubus(n)
    else:
        assert t.xpm == cpm1_xpm_original(n)
        assert t.qubus_consumed == 0
    assert t.interference == cpm1_interference(n)
    assert t.interference == 8 * cpm1_qubus(n)
    assert t.ancilla_photons == 0


def test_random_four_qubit_unitary_spot_check():
    u = haar(16, 44)
    rep = verify(compile_unitary(u, PARAMS["simplified"]), u, eps=1e-10)
    assert rep.min_fidelity >= 1 - 1e-8
    assert abs(rep.total_probability - 1) < 1e-10


@pytest.mark.parametrize("n", range(1, 9))
def test_formula_rows_are_consistent(n):
    for approach in ("cpm1", "cpm2", "cnot1", "cnot2"):
        row = formulas(n, approach)
        assert all(row.checks.values()), row.checks
        for sub in row.rows.values():
            assert all(isinstance(x, F) for x in (sub.xpm, sub.qubus, sub.ancilla_photons))
    assert cpm1_xpm(n) == F(10, 9) * 4**n - 2**n - F(7, 3) * n - F(1, 9)
    assert cpm1_xpm_recursion(n) == cpm1_xpm(n)
    assert cpm2_xpm(n) == 4**n + (n - 3) * 2**n + F(n * n - 9 * n + 8, 2)
    assert cpm2_xpm_summation(n) == cpm2_xpm(n)
    assert cpm1_qubus(n) == F(4**n, 6) - F(n, 2) - F(1, 6)
    assert cpm1_qubus_recursion(n) == cpm1_qubus(n)
    assert cpm1_interference(n) == F(4, 3) * 4**n - 4 * n - F(4, 3)


def test_formula_spot_values():
    assert [cpm1_xpm(n) for n in (1, 2, 3)] == [0, 9, 56]
    assert [cpm2_xpm(n) for n in (2, 3)] == [9, 59]
    assert cpm2_qubus(3) == F(15, 2)
    assert [cpm1_xpm_original(n) for n in (2, 3, 4)] == [15, 93, 429]
    assert [cpm1_interference(n) for n in (2, 3, 4)] == [12, 72, 324]
    assert cpm2_xpm_original(2) > cpm2_xpm(2)
    assert cpm2_interference(3) > 0
    assert [lsb_position(j) for j in (1, 2, 3, 4, 12)] == [1, 2, 1, 3, 3]
    assert cnot1_count(2) > 0 and cnot2_count(2) > 0


def test_formula_rejects_bad_input():
    with pytest.raises(ValueError):
        formulas(0, "cpm1")
    with pytest.raises(ValueError):
        formulas(3, "magic")


def test_table_serializes():
    rows = table(range(1, 4))
    assert len(rows) == 12
    d = rows[0].to_dict()
    assert d["approach"] and d["n"] == 1
