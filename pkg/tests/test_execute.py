import math

import numpy as np
import pytest

from oracles import CNOT
from qubus.compiler.verify import verify
from qubus.execute import BudgetExceeded, Node, RunOptions, apply_op, merge_nodes, run, sample_trajectory, total_probability
from qubus.gates import alpha_for_beta_sq, cnot_from_pair
from qubus.program import ConditionalPhase
from qubus.state import basis_state, inner, product_state


def _routes(program):
    fast = verify(program, CNOT)
    slow = verify(program, CNOT, collapse=False)
    return fast, slow


def test_collapse_and_explicit_enumeration_agree_original():
    fast, slow = _routes(cnot_from_pair(variant="original"))
    assert slow.nodes_created > 10 * fast.nodes_created
    for rep in (fast, slow):
        assert rep.min_fidelity >= 1 - 1e-9
        assert abs(rep.total_probability - 1) < 1e-10
    assert slow.process_fidelity == pytest.approx(fast.process_fidelity, abs=1e-12)


def test_collapse_and_explicit_enumeration_agree_simplified():
    theta = 1.0
    prog = cnot_from_pair(alpha_for_beta_sq(20, theta), theta)
    fast, slow = _routes(prog)
    assert slow.nodes_created > 100 * fast.nodes_created
    for rep in (fast, slow):
        assert rep.min_fidelity >= 1 - 1e-9
        # leakage of order e^-20 from discarded beams is the only deficit
        assert abs(rep.total_probability - 1) < 1e-7


def test_collapsed_first_click_mass_matches_explicit_sum():
    theta = 1.0
    prog = cnot_from_pair(alpha_for_beta_sq(20, theta), theta)
    fast, slow = _routes(prog)
    first = lambda rep: math.fsum(o.probability for o in rep.outcomes if o.record[0].k != 0)
    assert first(fast) == pytest.approx(first(slow), abs=1e-9)


def test_budget_guard():
    with pytest.raises(BudgetExceeded):
        verify(cnot_from_pair(), CNOT, budget=3)


def test_outcome_dependent_phase_needs_an_outcome():
    with pytest.raises(ValueError):
        apply_op(basis_state([0]), ConditionalPhase(0, ("m",), 0.5))
    st, _ = apply_op(basis_state([0]), ConditionalPhase(0, ("m",), 0.5), outcome=2)
    assert abs(inner(basis_state([0]), st) - np.exp(1j)) < 1e-15


def test_merge_nodes_combines_equal_states_up_to_phase():
    s = basis_state([1])
    nodes = [Node(s, 0.25), Node(s.replace({k: -v for k, v in s.branches.items()}), 0.5), Node(basis_state([0]), 0.25)]
    merged = merge_nodes(nodes)
    assert len(merged) == 2
    assert total_probability(merged) == pytest.approx(1)
    assert max(n.merged for n in merged) == 2


def test_run_probabilities_sum_to_one_on_product_inputs():
    rng = np.random.default_rng(0)
    prog = cnot_from_pair()
    for _ in range(5):
        q = [rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(2)]
        nodes = run(prog, product_state(q))
        assert abs(total_probability(nodes) - 1) < 1e-10


def test_sampler_is_seeded_and_lands_on_target():
    prog = cnot_from_pair()
    bell = product_state([(1, 1), (1, 0)])
    a = sample_trajectory(prog, bell, np.random.default_rng(5))
    b = sample_trajectory(prog, bell, np.random.default_rng(5))
    assert a[1] == b[1]
    assert all(o.k is not None for o in a[1])
    out = a[0]
    amps = {tuple(p for p in k[0][0]): v for k, v in out.branches.items()}
    assert set(amps) == {(("m", 0), ("m", 0)), (("m", 1), ("m", 1))}
    assert all(abs(abs(v) - 1 / math.sqrt(2)) < 1e-9 for v in amps.values())
