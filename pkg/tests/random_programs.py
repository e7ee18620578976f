"""Random unitary-only optical programs for conservation tests."""

import math

from oracles import haar
from qubus import optics
from qubus.optics import XpmEntry


def random_unitary_program(rng, n_instr, n_photons=2, n_beams=2):
    """Random unitary-only optical program over a small mode alphabet.

    Qubus phases are multiples of pi/2 and coherent beam splitters come in
    pairs, so labels stay on a finite lattice and the branch count stays small.
    """
    modes = ["m", "m0", "m1"]
    quarter = math.pi / 2
    ops = []
    for _ in range(n_instr):
        kind = rng.integers(8)
        p = int(rng.integers(n_photons))
        a, b = rng.choice(modes, 2, replace=False)
        if kind == 0:
            ops.append(lambda s, p=p, a=a, b=b: optics.bs50(s, p, a, b))
        elif kind == 1:
            u = haar(2, int(rng.integers(1 << 30)))
            ops.append(lambda s, p=p, a=a, u=u: optics.local_unitary(s, p, a, u))
        elif kind == 2:
            ops.append(lambda s, p=p, a=a, b=b: optics.mode_swap(s, p, a, b))
        elif kind == 3:
            q, th = int(rng.integers(n_beams)), quarter * int(rng.integers(1, 4))
            pol = [None, "H", "V"][int(rng.integers(3))]
            ops.append(lambda s, p=p, a=a, q=q, th=th, pol=pol: optics.xpm(s, [XpmEntry(p, a, pol, q, th)]))
        elif kind == 4:
            q, phi = int(rng.integers(n_beams)), quarter * int(rng.integers(1, 4))
            ops.append(lambda s, q=q, phi=phi: optics.phase_shift_coherent(s, q, phi))
        elif kind == 5:
            ops.append(lambda s: optics.coherent_bs(optics.coherent_bs(s, 0, 1), 0, 1))
        elif kind == 6:
            ops.append(lambda s, p=p, a=a, b=b: optics.pbs(s, p, a, a, b))
        else:
            phi = float(rng.uniform(-3, 3))
            ops.append(lambda s, p=p, a=a, phi=phi: optics.conditional_phase(s, p, [a], phi))
    return ops
