"""Primitive optical elements acting on :class:`~qubus.state.HybridState`.

Every function returns a new state. Single-photon elements address a photon by
index and spatial modes by label; qubus elements address beams by id.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .state import H, V, HybridState, add_amplitude, canonicalize

SQRT1_2 = 1.0 / math.sqrt(2.0)

_POL = {"H": H, "V": V, None: None}


def _check_mode(mode) -> str:
    if not isinstance(mode, str) or not mode:
        raise ValueError(f"invalid spatial mode label {mode!r}")
    return mode


def _check_photon(state: HybridState, photon: int) -> int:
    if not 0 <= photon < state.n_photons:
        raise ValueError(f"photon {photon} out of range (state has {state.n_photons})")
    return photon


def _set(photons, photon, mode, pol):
    lst = list(photons)
    lst[photon] = (mode, pol)
    return tuple(lst)


@dataclass(frozen=True)
class XpmEntry:
    """One cross-phase coupling: photon in ``mode`` (with ``pol`` if given) shifts beam ``qubus`` by ``theta``."""

    photon: int
    mode: str
    pol: str | None
    qubus: int
    theta: float


def inject(state: HybridState, qubus_ids: Sequence[int], labels: Sequence[complex]) -> HybridState:
    """Append fresh coherent beams to the register of every branch."""
    if len(qubus_ids) != len(labels):
        raise ValueError("one label per injected beam")
    if set(qubus_ids) & set(state.qubus):
        raise ValueError(f"qubus ids {qubus_ids} already live")
    extra = tuple(complex(z) for z in labels)
    out = {(cfg, lab + extra): amp for (cfg, lab), amp in state.branches.items()}
    return state.replace(out, state.qubus + tuple(qubus_ids))


def pbs(state: HybridState, photon: int, in_mode: str, out_mode_H: str, out_mode_V: str) -> HybridState:
    """Polarizing beam splitter: H from ``in_mode`` goes to ``out_mode_H``, V to ``out_mode_V``.

    Implemented as the permutation of (mode, polarization) slots, so it is
    unitary and running it twice restores the input.
    """
    _check_photon(state, photon)
    for m in (in_mode, out_mode_H, out_mode_V):
        _check_mode(m)
    perm = {(in_mode, H): (out_mode_H, H), (in_mode, V): (out_mode_V, V)}
    if out_mode_H != in_mode:
        perm[(out_mode_H, H)] = (in_mode, H)
    if out_mode_V != in_mode:
        perm[(out_mode_V, V)] = (in_mode, V)
    out: dict = {}
    for ((photons, ref), labels), amp in state.branches.items():
        slot = photons[photon]
        if slot in perm:
            photons = _set(photons, photon, *perm[slot])
        add_amplitude(out, ((photons, ref), labels), amp)
    return state.replace(out)


def bs50(state: HybridState, photon: int, mode_a: str, mode_b: str) -> HybridState:
    """50:50 beam splitter, a -> (a + b)/sqrt2 and b -> (a - b)/sqrt2."""
    return bs50_array(state, photon, [(mode_a, mode_b)])


def bs50_array(state: HybridState, photon: int, pairs: Iterable[tuple[str, str]]) -> HybridState:
    _check_photon(state, photon)
    partner = {}
    for a, b in pairs:
        _check_mode(a), _check_mode(b)
        if a == b:
            raise ValueError("beam splitter modes must differ")
        if a in partner or b in partner:
            raise ValueError(f"mode used twice in beam splitter array: {a}, {b}")
        partner[a] = (a, b, 1)
        partner[b] = (a, b, -1)
    out: dict = {}
    for ((photons, ref), labels), amp in state.branches.items():
        mode, pol = photons[photon]
        if mode not in partner:
            add_amplitude(out, ((photons, ref), labels), amp)
            continue
        a, b, sign = partner[mode]
        add_amplitude(out, ((_set(photons, photon, a, pol), ref), labels), amp * SQRT1_2)
        add_amplitude(out, ((_set(photons, photon, b, pol), ref), labels), sign * amp * SQRT1_2)
    return canonicalize(state.replace(out))


def xpm(state: HybridState, wiring: Iterable[XpmEntry]) -> HybridState:
    """Cross-phase modulation: rotate qubus labels of branches whose photon sits in a wired mode."""
    wiring = list(wiring)
    idx = {}
    for e in wiring:
        _check_photon(state, e.photon)
        _check_mode(e.mode)
        if e.pol not in _POL:
            raise ValueError(f"bad polarization filter {e.pol!r}")
        idx[e.qubus] = state.qubus_index(e.qubus)
    out: dict = {}
    for ((photons, ref), labels), amp in state.branches.items():
        lab = list(labels)
        for e in wiring:
            mode, pol = photons[e.photon]
            if mode == e.mode and (e.pol is None or _POL[e.pol] == pol):
                lab[idx[e.qubus]] *= cmath.exp(1j * e.theta)
        add_amplitude(out, ((photons, ref), tuple(lab)), amp)
    return canonicalize(state.replace(out))


def phase_shift_coherent(state: HybridState, qubus: int, phi: float) -> HybridState:
    i = state.qubus_index(qubus)
    rot = cmath.exp(1j * phi)
    out: dict = {}
    for (cfg, labels), amp in state.branches.items():
        lab = list(labels)
        lab[i] *= rot
        add_amplitude(out, (cfg, tuple(lab)), amp)
    return canonicalize(state.replace(out))


def coherent_bs(state: HybridState, q1: int, q2: int) -> HybridState:
    """|a1>|a2> -> |(a1 - a2)/sqrt2>|(a1 + a2)/sqrt2>."""
    if q1 == q2:
        raise ValueError("coherent beam splitter needs two distinct beams")
    i, j = state.qubus_index(q1), state.qubus_index(q2)
    out: dict = {}
    for (cfg, labels), amp in state.branches.items():
        lab = list(labels)
        a1, a2 = lab[i], lab[j]
        lab[i] = (a1 - a2) * SQRT1_2
        lab[j] = (a1 + a2) * SQRT1_2
        add_amplitude(out, (cfg, tuple(lab)), amp)
    return canonicalize(state.replace(out))


def check_unitary(u, tol: float = 1e-10) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    err = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
    if err > tol:
        raise ValueError(f"matrix is not unitary (residual {err:.3g})")
    return u


def local_unitary(state: HybridState, photon: int, spatial_mode: str, U) -> HybridState:
    """Apply a 2x2 polarization unitary to the photon only where it occupies ``spatial_mode``."""
    _check_photon(state, photon)
    _check_mode(spatial_mode)
    U = check_unitary(U)
    if U.shape != (2, 2):
        raise ValueError("local unitary must be 2x2")
    out: dict = {}
    for ((photons, ref), labels), amp in state.branches.items():
        mode, pol = photons[photon]
        if mode != spatial_mode:
            add_amplitude(out, ((photons, ref), labels), amp)
            continue
        for new_pol in (H, V):
            c = U[new_pol, pol]
            if c != 0:
                add_amplitude(out, ((_set(photons, photon, mode, new_pol), ref), labels), amp * c)
    return canonicalize(state.replace(out))


def mode_swap(state: HybridState, photon: int, mode_a: str, mode_b: str) -> HybridState:
    return relabel(state, photon, {mode_a: mode_b, mode_b: mode_a})


def relabel(state: HybridState, photon: int, mapping: Mapping[str, str]) -> HybridState:
    """Reroute spatial modes of one photon. The mapping must be injective."""
    _check_photon(state, photon)
    for m in list(mapping) + list(mapping.values()):
        _check_mode(m)
    if len(set(mapping.values())) != len(mapping):
        raise ValueError("mode relabelling must be injective")
    out: dict = {}
    for ((photons, ref), labels), amp in state.branches.items():
        mode, pol = photons[photon]
        if mode in mapping:
            photons = _set(photons, photon, mapping[mode], pol)
        add_amplitude(out, ((photons, ref), labels), amp)
    return state.replace(out)


def photon_swap(state: HybridState, photon_a: int, mode_a: str, photon_b: int, mode_b: str) -> HybridState:
    """Exchange the polarization qubits of two photons where they sit in the given modes.

    This is the passive route exchange between two spatial modes carrying
    different photons; no nonlinear interaction is involved.
    """
    _check_photon(state, photon_a)
    _check_photon(state, photon_b)
    out: dict = {}
    for ((photons, ref), labels), amp in state.branches.items():
        (ma, pa), (mb, pb) = photons[photon_a], photons[photon_b]
        if ma == mode_a and mb == mode_b:
            photons = _set(_set(photons, photon_a, ma, pb), photon_b, mb, pa)
        add_amplitude(out, ((photons, ref), labels), amp)
    return state.replace(out)


def conditional_phase(state: HybridState, photon: int, modes: Iterable[str], phi: float) -> HybridState:
    """Multiply branches whose photon occupies one of ``modes`` by exp(i phi).

    The caller evaluates phi from the measurement record in scope.
    """
    _check_photon(state, photon)
    modes = set(modes)
    rot = cmath.exp(1j * phi)
    out = {}
    for ((photons, ref), labels), amp in state.branches.items():
        out[((photons, ref), labels)] = amp * rot if photons[photon][0] in modes else amp
    return state.replace(out)
