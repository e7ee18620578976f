"""End-to-end acceptance checks, one test per criterion.

Each test records a ``criterion N: PASS`` or ``criterion N: FAIL`` line that
is printed in the terminal summary (and to stdout for ``-s`` runs).
"""

import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import CNOT, FREDKIN, SWAP, TOFFOLI, block_diagonal, haar, special_matrix
from random_programs import random_unitary_program
from qubus import optics
from qubus.composites import GateSpec, emit_multiplexor, emit_special, fredkin, toffoli
from qubus.compiler.formulas import (
    cpm1_interference,
    cpm1_qubus,
    cpm1_qubus_recursion,
    cpm1_xpm,
    cpm1_xpm_recursion,
    cpm2_qubus,
    cpm2_xpm,
    cpm2_xpm_summation,
    formulas,
)
from qubus.compiler.lowering import compile_unitary
from qubus.compiler.verify import verify
from qubus.detectors import (
    DetectorModel,
    no_click_fock_sum,
    pe_error,
    pnd_module_distributions,
    pnnd_click_probability,
    recycle_degrade,
)
from qubus.gates import CPathVariant, GateParams, alpha_for_beta_sq, cnot_from_pair, emit_cpath, emit_merge
from qubus.program import ProgramBuilder, tally
from qubus.state import norm, product_state

PARAMS = GateParams.default()
ORIGINAL = GateParams.default(variant="original")


class Checks:
    def __init__(self, n):
        self.n = n
        self.failed = []

    def __call__(self, name, ok):
        if not ok:
            self.failed.append(name)

    def report(self):
        line = f"criterion {self.n}: {'FAIL' if self.failed else 'PASS'}"
        if self.failed:
            line += " (" + "; ".join(self.failed) + ")"
        ACCEPTANCE[self.n] = line
        print(line)
        assert not self.failed, line


def probability_ok(rep):
    return abs(rep.total_probability - 1) <= 1e-10


def test_criterion_1_cnot_from_pair():
    chk = Checks(1)
    t0 = time.perf_counter()
    rep = verify(cnot_from_pair(alpha_for_beta_sq(60.0)), CNOT, eps=1e-12)
    chk("fidelity >= 1 - 1e-9 on every outcome", rep.min_fidelity >= 1 - 1e-9)
    chk("probabilities sum to 1", probability_ok(rep))
    chk("runtime < 5 s", time.perf_counter() - t0 < 5)
    chk.report()


def test_criterion_2_multiplexor():
    chk = Checks(2)
    for n in (3, 4):
        blocks = [haar(2, 100 * n + i) for i in range(2 ** (n - 1))]
        spec = GateSpec(n, "multiplexor", blocks)
        t0 = time.perf_counter()
        for params, expected in ((PARAMS, 2**n + n - 3), (ORIGINAL, 3 * 2 ** (n - 1) + 2 * n - 5)):
            prog = emit_multiplexor(spec, params)
            rep = verify(prog, block_diagonal(blocks))
            chk(f"n={n} {params.variant} fidelity", rep.min_fidelity >= 1 - 1e-8)
            chk(f"n={n} {params.variant} probability", probability_ok(rep))
            chk(f"n={n} {params.variant} XPM {tally(prog).xpm} != {expected}", tally(prog).xpm == expected)
        if n == 4:
            chk("n=4 runtime < 60 s", time.perf_counter() - t0 < 60)
    chk.report()


@pytest.mark.xfail(
    strict=True,
    reason="no deterministic layout of this construction reaches 20 XPM at n=5, m=2; "
    "the complete layout is exact with 26, the 20-XPM layout is not deterministic",
)
def test_criterion_3_special_gate():
    chk = Checks(3)
    blocks = [haar(2, 300 + i) for i in range(4)]
    spec = GateSpec(5, "special", blocks, m=2)
    oracle = special_matrix(5, blocks)
    prog = emit_special(spec, PARAMS)
    rep = verify(prog, oracle)
    chk("n=5 m=2 map within 1e-8", rep.min_fidelity >= 1 - 1e-8 and probability_ok(rep))
    xpm = tally(prog).xpm
    chk(f"n=5 m=2 XPM tally {xpm} != 20", xpm == 2**3 + 4 * 5 - 2 - 6)
    # the 20-XPM layout is reported alongside; it must not stand in for the exact one
    short = emit_special(spec, PARAMS, layout="restricted")
    short_rep = verify(short, oracle)
    chk(
        f"{tally(short).xpm}-XPM layout min fidelity {short_rep.min_fidelity:.3f}",
        short_rep.min_fidelity >= 1 - 1e-8,
    )
    tof = toffoli(PARAMS)
    rep = verify(tof, TOFFOLI)
    chk("Toffoli matrix exact", rep.min_fidelity >= 1 - 1e-9 and probability_ok(rep))
    chk("Toffoli XPM = 3n-3 = 6", tally(tof).xpm == 6)
    chk.report()


def test_criterion_4_fredkin():
    chk = Checks(4)
    prog = fredkin(PARAMS)
    rep = verify(prog, FREDKIN)
    chk("fidelity >= 1 - 1e-9", rep.min_fidelity >= 1 - 1e-9)
    chk("probability", probability_ok(rep))
    chk("exactly 2 c-path/merge pairs", tally(prog).cpath == 2 and tally(prog).merge == 2)
    chk.report()


def test_criterion_5_full_compilation():
    chk = Checks(5)
    t0 = time.perf_counter()
    for seed in range(20):
        u = haar(4, 500 + seed)
        rep = verify(compile_unitary(u, PARAMS), u)
        chk(f"2-qubit seed {seed}", rep.min_fidelity >= 1 - 1e-8 and probability_ok(rep))
    t3 = time.perf_counter()
    for seed in range(5):
        u = haar(8, 600 + seed)
        rep = verify(compile_unitary(u, PARAMS), u)
        chk(f"3-qubit seed {seed}", rep.min_fidelity >= 1 - 1e-8 and probability_ok(rep))
    chk("n=3 runtime < 10 min", time.perf_counter() - t3 < 600)
    chk("total runtime < 10 min", time.perf_counter() - t0 < 600)
    chk.report()


def test_criterion_6_resource_formulas():
    chk = Checks(6)
    for n in range(1, 9):
        chk(f"cpm1 XPM closed form n={n}", cpm1_xpm(n) == F(10, 9) * 4**n - 2**n - F(7, 3) * n - F(1, 9))
        chk(f"cpm1 XPM recursion n={n}", cpm1_xpm_recursion(n) == cpm1_xpm(n))
        chk(f"cpm2 XPM summation n={n}", cpm2_xpm_summation(n) == 4**n + (n - 3) * 2**n + F(n * n - 9 * n + 8, 2))
        chk(f"qubus recursion n={n}", cpm1_qubus_recursion(n) == F(4**n, 6) - F(n, 2) - F(1, 6))
        chk(f"cpm1 interference n={n}", cpm1_interference(n) == F(4, 3) * 4**n - 4 * n - F(4, 3))
        for approach in ("cpm1", "cpm2", "cnot1", "cnot2"):
            chk(f"{approach} internal checks n={n}", all(formulas(n, approach).checks.values()))
    chk("spot cpm1 n=2 -> 9, n=3 -> 56", (cpm1_xpm(2), cpm1_xpm(3)) == (9, 56))
    chk("spot cpm2 n=2 -> 9, n=3 -> 59", (cpm2_xpm(2), cpm2_xpm(3)) == (9, 59))
    chk("N_q(3) = 7.5", cpm2_qubus(3) == F(15, 2))
    for n in (2, 3):
        t = tally(compile_unitary(haar(2**n, 700 + n), PARAMS))
        chk(f"compiled n={n} XPM {t.xpm} = {cpm1_xpm(n)}", t.xpm == cpm1_xpm(n))
        chk(f"compiled n={n} qubus {t.qubus_consumed} = {cpm1_qubus(n)}", t.qubus_consumed == cpm1_qubus(n))
        chk(f"compiled n={n} interference {t.interference}", t.interference == cpm1_interference(n))
    chk.report()


def test_criterion_7_detector_module():
    chk = Checks(7)
    t0 = time.perf_counter()
    for a in (0.3, 1.0, 2.5 + 1j, 6.0):
        for eta in (0.3, 0.7, 1.0):
            no_click = 1 - pnnd_click_probability(a, eta)
            chk(f"no-click a={a} eta={eta}", abs(no_click - math.exp(-eta * abs(a) ** 2)) <= 1e-12)
            chk(f"Fock sum a={a} eta={eta}", abs(no_click - no_click_fock_sum(a, eta)) <= 1e-12)
    model = DetectorModel(eta=1.0, gamma=1e3, theta=0.01)
    estimate = -(1e3**2) * 0.01**2 / 4
    for row in pnd_module_distributions(model, 10)[1:]:
        if row.k * 0.01 <= 0.1:
            got = math.log(row.overlap_next_exact)
            chk(f"overlap exponent k={row.k}", abs(got - estimate) <= 0.01 * abs(estimate))
    a_eff = recycle_degrade(1e3, 0.01, 10_000)
    for eta in (0.7, 1.0):
        chk(f"P_E < 1e-8 at eta={eta}", pe_error(a_eff, 0.01, 1e2, eta, exact=False).approx < 1e-8)
    chk("instant runtime", time.perf_counter() - t0 < 1)
    chk.report()


def test_criterion_8_property_suites():
    chk = Checks(8)
    rng = np.random.default_rng(8)
    for trial in range(2):
        s = optics.inject(product_state([haar(2, 800 + trial)[0], haar(2, 810 + trial)[0]]), (0, 1), (1.2, -0.7j))
        for op in random_unitary_program(rng, 1000):
            s = op(s)
        chk(f"norm conserved over 1000 ops (trial {trial})", abs(norm(s) - 1) <= 1e-12)
    alpha = alpha_for_beta_sq(60.0)
    for kind in ("simplified", "original"):
        b = ProgramBuilder(2)
        emit_cpath(b, CPathVariant(kind, 0, ("m",), 1, ("m",)), alpha, 0.1)
        emit_merge(b, 0, ("m",), 1, ("m",), alpha, 0.1)
        rep = verify(b.program, np.eye(4))
        chk(f"{kind} c-path then merge is the identity", rep.max_defect <= 1e-9 and probability_ok(rep))
    gates = {
        "cnot simplified": (cnot_from_pair(), CNOT),
        "cnot original": (cnot_from_pair(variant="original"), CNOT),
        "toffoli": (toffoli(PARAMS), TOFFOLI),
        "toffoli original": (toffoli(ORIGINAL), TOFFOLI),
        "fredkin": (fredkin(PARAMS), FREDKIN),
        "fredkin original": (fredkin(ORIGINAL), FREDKIN),
    }
    for name, (prog, target) in gates.items():
        chk(f"{name} probabilities sum to 1", probability_ok(verify(prog, target)))
    chk("negative control CNOT vs SWAP < 0.9", verify(cnot_from_pair(), SWAP).min_fidelity < 0.9)
    chk("negative control Toffoli vs Fredkin < 0.9", verify(toffoli(PARAMS), FREDKIN).min_fidelity < 0.9)
    chk.report()
