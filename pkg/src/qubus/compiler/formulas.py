"""Closed-form resource counts for general n-qubit unitaries, in exact rationals.

Four approaches are tabulated: two CNOT-based baselines (``cnot1`` is the
lower bound on the CNOT count, ``cnot2`` a known circuit) and two built from
c-path/merging gates (``cpm1`` via the cosine-sine recursion, ``cpm2`` via a
product of multiplexors). Each row has two sub-rows that trade XPM processes
against qubus beams; interference counts are shared by both sub-rows.

For the c-path/merging rows the closed forms are cross-checked against the
recursion or summation they come from; the ``checks`` dict records the
outcome of every comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction as F

APPROACHES = ("cnot1", "cnot2", "cpm1", "cpm2")


@dataclass
class SubRow:
    xpm: F
    qubus: F
    ancilla_photons: F

    def to_dict(self) -> dict:
        return {"xpm": str(self.xpm), "qubus": str(self.qubus), "ancilla_photons": str(self.ancilla_photons)}


@dataclass
class FormulaRow:
    approach: str
    n: int
    rows: dict  # sub-row name -> SubRow
    interference: F
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "approach": self.approach,
            "n": self.n,
            "rows": {k: v.to_dict() for k, v in self.rows.items()},
            "interference": str(self.interference),
            "checks": dict(self.checks),
        }


# per-gate costs of the element constructions


def multiplexor_xpm(n: int, variant: str = "simplified") -> int:
    """XPM processes of an (n-1)-control-1 multiplexor on n qubits."""
    if n == 1:
        return 0
    return 2**n + n - 3 if variant == "simplified" else 3 * 2 ** (n - 1) + 2 * n - 5


def pair_xpm(variant: str = "simplified") -> int:
    """One 1-control-1 c-path plus its merge."""
    return 3 if variant == "simplified" else 5


# cpm1: cosine-sine recursion


def cpm1_xpm_recursion(n: int, variant: str = "simplified") -> F:
    total = F(0)
    for k in range(2, n + 1):
        total = 4 * total + multiplexor_xpm(k, variant) + 2 * pair_xpm(variant) * (k - 1)
    return total


def cpm1_xpm(n: int) -> F:
    return F(10, 9) * 4**n - 2**n - F(7, 3) * n - F(1, 9)


def cpm1_xpm_original(n: int) -> F:
    return F(11, 6) * 4**n - 3 * F(2) ** (n - 1) - 4 * n - F(1, 3)


def cpm1_qubus_recursion(n: int) -> F:
    a = F(0)
    for k in range(2, n + 1):
        a = 4 * a + F(3, 2) * (k - 1)
    return a


def cpm1_qubus(n: int) -> F:
    return F(4**n, 6) - F(n, 2) - F(1, 6)


def cpm1_interference(n: int) -> F:
    return F(4, 3) * 4**n - 4 * n - F(4, 3)


# cpm2: product of multiplexors


def lsb_position(j: int) -> int:
    """1-based position of the least significant nonzero bit of j > 0."""
    if j <= 0:
        raise ValueError("j must be positive")
    return (j & -j).bit_length()


def cpm2_factors(n: int) -> list[tuple[int, int]]:
    """(qubits, target) of every multiplexor in the product, targets 1-based.

    Each j in 1..2^(n-1)-1 contributes a multiplexor on the last qubit and one
    whose target is picked by the least significant set bit of j; the tail
    adds one multiplexor on the first n-i+1 qubits for i = 1..n-1.
    """
    out = []
    for j in range(1, 2 ** (n - 1)):
        out.append((n, n))
        out.append((n, lsb_position(j)))
    for i in range(1, n):
        out.append((n - i + 1, n - i + 1))
    return out


def cpm2_xpm_summation(n: int, variant: str = "simplified") -> F:
    return F(sum(multiplexor_xpm(k, variant) for k, _ in cpm2_factors(n)))


def cpm2_xpm(n: int) -> F:
    return F(4**n) + (n - 3) * F(2) ** n + F(n * n - 9 * n + 8, 2)


def cpm2_xpm_original(n: int) -> F:
    return F(3, 2) * 4**n + (2 * n - 5) * F(2) ** n + n * n - 8 * n + 7


def cpm2_qubus_summation(n: int) -> F:
    return sum((F(k - 1, 2) for k, _ in cpm2_factors(n)), F(0))


def cpm2_qubus(n: int) -> F:
    """N_q: expected qubus beams of the multiplexor product (simplified c-paths)."""
    return (n - 1) * F(2) ** (n - 1) + F(n * n - 5 * n + 4, 4)


def cpm2_interference(n: int) -> F:
    return 4 * (n - 1) * F(2) ** n + 2 * (n * n - 5 * n + 4)


def cpm2_interference_summation(n: int) -> F:
    return F(sum(4 * (k - 1) for k, _ in cpm2_factors(n)))


# CNOT baselines


def cnot1_count(n: int) -> F:
    return F(4**n - 3 * n - 1, 4)


def cnot2_count(n: int) -> F:
    return F(23, 48) * 4**n - F(3, 2) * 2**n + F(4, 3)


def formulas(n: int, approach: str) -> FormulaRow:
    """Evaluate one row of the comparison table at n qubits."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if approach not in APPROACHES:
        raise ValueError(f"unknown approach {approach!r}; expected one of {APPROACHES}")
    zero = F(0)
    if approach in ("cnot1", "cnot2"):
        c = cnot1_count(n) if approach == "cnot1" else cnot2_count(n)
        # two XPM per CNOT with a qubus per CNOT, or four XPM with the beam recycled
        rows = {"two_xpm": SubRow(2 * c, c, c), "four_xpm": SubRow(4 * c, zero, c)}
        return FormulaRow(approach, n, rows, 4 * c)
    if approach == "cpm1":
        rows = {
            "simplified": SubRow(cpm1_xpm(n), cpm1_qubus(n), zero),
            "original": SubRow(cpm1_xpm_original(n), zero, zero),
        }
        checks = {
            "xpm_recursion": cpm1_xpm_recursion(n) == cpm1_xpm(n),
            "xpm_original_recursion": cpm1_xpm_recursion(n, "original") == cpm1_xpm_original(n),
            "qubus_recursion": cpm1_qubus_recursion(n) == cpm1_qubus(n),
            "interference_is_8x_qubus": cpm1_interference(n) == 8 * cpm1_qubus(n),
        }
        return FormulaRow(approach, n, rows, cpm1_interference(n), checks)
    rows = {
        "simplified": SubRow(cpm2_xpm(n), cpm2_qubus(n), zero),
        "original": SubRow(cpm2_xpm_original(n), zero, zero),
    }
    checks = {
        "xpm_summation": cpm2_xpm_summation(n) == cpm2_xpm(n),
        "xpm_original_summation": cpm2_xpm_summation(n, "original") == cpm2_xpm_original(n),
        "qubus_summation": cpm2_qubus_summation(n) == cpm2_qubus(n),
        "interference_summation": cpm2_interference_summation(n) == cpm2_interference(n),
    }
    return FormulaRow(approach, n, rows, cpm2_interference(n), checks)


def table(ns, approaches=APPROACHES) -> list[FormulaRow]:
    return [formulas(n, a) for a in approaches for n in ns]
