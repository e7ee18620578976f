"""Hybrid photon/qubus states.

A state is a finite superposition of branches. Each branch pairs a discrete
photonic configuration (spatial mode and polarization of every photon, plus an
optional reference index used for channel extraction) with a register of
coherent-state labels, one per live qubus beam. Coherent beams are never
truncated to a Fock basis; overlaps are evaluated analytically.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

H, V = 0, 1
ROOT_MODE = "m"

LABEL_TOL = 1e-12
AMPLITUDE_FLOOR = 1e-15

# (mode, polarization) per photon
Photons = tuple[tuple[str, int], ...]
# photons plus reference index (-1 when unused)
Config = tuple[Photons, int]
Labels = tuple[complex, ...]
BranchKey = tuple[Config, Labels]


def coherent_overlap(a: complex, b: complex) -> complex:
    """Inner product <a|b> of two coherent states.

    Written as exp(-|a-b|^2/2 + i Im(a* b)) so the modulus never exceeds 1.
    """
    a = complex(a)
    b = complex(b)
    return cmath.exp(complex(-0.5 * abs(a - b) ** 2, (a.conjugate() * b).imag))


def register_overlap(la: Labels, lb: Labels) -> complex:
    out = 1.0 + 0j
    for a, b in zip(la, lb):
        if a == b:
            continue
        out *= coherent_overlap(a, b)
    return out


def fock_amplitude(k: int, a: complex) -> complex:
    """<k|a> = exp(-|a|^2/2) a^k / sqrt(k!), evaluated in log space."""
    a = complex(a)
    if a == 0:
        return 1.0 + 0j if k == 0 else 0j
    log_mag = -0.5 * abs(a) ** 2 + k * math.log(abs(a)) - 0.5 * math.lgamma(k + 1)
    # atan2 rather than cmath.phase, which raises on subnormal imaginary parts
    return cmath.exp(complex(log_mag, k * math.atan2(a.imag, a.real)))


def poisson_pmf(k: int, mean: float) -> float:
    if mean == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(-mean + k * math.log(mean) - math.lgamma(k + 1))


@dataclass(frozen=True)
class Branch:
    amplitude: complex
    photons: Photons
    labels: Labels
    ref: int = -1


@dataclass(frozen=True)
class HybridState:
    """Immutable superposition of branches.

    ``branches`` maps ``((photons, ref), labels)`` to a complex amplitude.
    ``qubus`` lists the ids of the live beams in register order.
    """

    branches: Mapping[BranchKey, complex]
    qubus: tuple[int, ...] = ()
    theta: float = 0.0
    n_photons: int = field(default=0)

    def __post_init__(self):
        if not self.n_photons and self.branches:
            (photons, _), _ = next(iter(self.branches))
            object.__setattr__(self, "n_photons", len(photons))

    def __len__(self) -> int:
        return len(self.branches)

    def __iter__(self):
        for ((photons, ref), labels), amp in self.branches.items():
            yield Branch(amp, photons, labels, ref)

    def qubus_index(self, qubus_id: int) -> int:
        try:
            return self.qubus.index(qubus_id)
        except ValueError:
            raise KeyError(f"qubus {qubus_id} is not live (live: {self.qubus})") from None

    def replace(self, branches, qubus=None) -> "HybridState":
        return HybridState(
            branches,
            self.qubus if qubus is None else tuple(qubus),
            self.theta,
            self.n_photons,
        )


def add_amplitude(d: dict, key: BranchKey, amp: complex) -> None:
    if key in d:
        d[key] += amp
    else:
        d[key] = amp


def inner(a: HybridState, b: HybridState) -> complex:
    """<a|b>, with coherent registers contracted analytically."""
    if a.qubus != b.qubus:
        raise ValueError(f"qubus registers differ: {a.qubus} vs {b.qubus}")
    by_config: dict[Config, list[tuple[Labels, complex]]] = {}
    for (cfg, labels), amp in b.branches.items():
        by_config.setdefault(cfg, []).append((labels, amp))
    total = 0j
    for (cfg, la), amp_a in a.branches.items():
        for lb, amp_b in by_config.get(cfg, ()):
            total += amp_a.conjugate() * amp_b * register_overlap(la, lb)
    return total


def norm(state: HybridState) -> float:
    return math.sqrt(max(inner(state, state).real, 0.0))


def scale(state: HybridState, factor: complex) -> HybridState:
    return state.replace({k: v * factor for k, v in state.branches.items()})


def normalized(state: HybridState) -> HybridState:
    n = norm(state)
    if n == 0:
        raise ValueError("cannot normalize the zero state")
    return scale(state, 1.0 / n)


def _snap(z: complex) -> complex:
    re, im = z.real, z.imag
    if abs(re) < LABEL_TOL:
        re = 0.0
    if abs(im) < LABEL_TOL:
        im = 0.0
    return complex(re, im)


def canonicalize(
    state: HybridState,
    *,
    collapsed: bool = False,
    floor: float = AMPLITUDE_FLOOR,
) -> HybridState:
    """Merge duplicate branches, drop negligible ones, renormalize if collapsed.

    Labels equal within ``LABEL_TOL`` are identified. Renormalization is only
    applied when ``collapsed`` is set, i.e. after a measurement.
    """
    groups: dict[Config, list[list]] = {}
    for (cfg, labels), amp in state.branches.items():
        labels = tuple(_snap(z) for z in labels)
        bucket = groups.setdefault(cfg, [])
        for entry in bucket:
            if all(abs(x - y) <= LABEL_TOL for x, y in zip(entry[0], labels)):
                entry[1] += amp
                break
        else:
            bucket.append([labels, amp])
    out = {}
    for cfg, bucket in groups.items():
        for labels, amp in bucket:
            if abs(amp) >= floor:
                out[(cfg, labels)] = amp
    result = state.replace(out)
    if collapsed and out:
        result = normalized(result)
    return result


def from_branches(
    branches: Iterable[Branch], qubus: Iterable[int] = (), theta: float = 0.0
) -> HybridState:
    d: dict = {}
    qubus = tuple(qubus)
    n = None
    for br in branches:
        if len(br.labels) != len(qubus):
            raise ValueError("branch register length differs from the qubus list")
        if n is None:
            n = len(br.photons)
        elif len(br.photons) != n:
            raise ValueError("photon count differs between branches")
        add_amplitude(d, ((tuple(br.photons), br.ref), tuple(complex(z) for z in br.labels)), complex(br.amplitude))
    return HybridState(d, qubus, theta, n or 0)


def product_state(qubits: Iterable, mode: str = ROOT_MODE) -> HybridState:
    """Product of single-photon polarization states, every photon in ``mode``.

    Each qubit is a length-2 amplitude vector (H, V); the result is normalized.
    """
    vecs = [np.asarray(q, dtype=complex) for q in qubits]
    d: dict = {((), -1): 1.0 + 0j}
    for v in vecs:
        nd = {}
        for (photons, ref), amp in d.items():
            for pol in (H, V):
                if v[pol] != 0:
                    nd[(photons + ((mode, pol),), ref)] = amp * v[pol]
        d = nd
    state = HybridState({(cfg, ()): amp for cfg, amp in d.items()}, (), 0.0, len(vecs))
    return normalized(state)


def basis_state(bits: Iterable[int], mode: str = ROOT_MODE) -> HybridState:
    return product_state([(1, 0) if b == 0 else (0, 1) for b in bits], mode)


def choi_state(n_qubits: int, mode: str = ROOT_MODE) -> HybridState:
    """Maximally entangled state of ``n_qubits`` photons with a classical-index reference."""
    dim = 2**n_qubits
    amp = 1.0 / math.sqrt(dim)
    d = {}
    for j in range(dim):
        photons = tuple((mode, (j >> (n_qubits - 1 - q)) & 1) for q in range(n_qubits))
        d[((photons, j), ())] = complex(amp)
    return HybridState(d, (), 0.0, n_qubits)


def basis_index(photons: Photons) -> int:
    idx = 0
    for _, pol in photons:
        idx = (idx << 1) | pol
    return idx
