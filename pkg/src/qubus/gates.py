"""Element gates: controlled-path (both variants) and merging, plus the CNOT pair.

Spatial modes are strings. A target mode ``y`` split by a c-path becomes
``y + "0"`` (reached when the control is H) and ``y + "1"`` (control V); a
merge folds such a pair back into ``y``.

Every gate injects fresh qubus beams and removes them before it ends, so the
coherent register is empty between gates.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .program import (
    BS50,
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
    ProgramBuilder,
    Relabel,
    local_unitary,
)
from .state import ROOT_MODE

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

DEFAULT_THETA = 0.1
DEFAULT_BETA_SQ = 60.0
VARIANTS = ("simplified", "original")


def alpha_for_beta_sq(beta_sq: float = DEFAULT_BETA_SQ, theta: float = DEFAULT_THETA) -> float:
    """Qubus amplitude giving |beta|^2 = 2 alpha^2 sin^2(theta/2) on the detected beam.

    That is the mean photon number of a click in the simplified c-path and in
    the merging gate. The original c-path sees 2 alpha^2 sin^2(theta), about
    four times larger.
    """
    if beta_sq <= 0 or theta <= 0:
        raise ValueError("beta_sq and theta must be positive")
    return math.sqrt(beta_sq / (2 * math.sin(theta / 2) ** 2))


def split_modes(mode: str) -> tuple[str, str]:
    return mode + "0", mode + "1"


@dataclass(frozen=True)
class CPathVariant:
    """Which c-path to build and on which modes.

    ``control_modes`` are the control photon's modes in which its V component
    routes the target. A control photon found in any other mode acts as H. The
    original variant also couples the H component, so it needs every such
    mode listed in ``control_idle_modes``.
    """

    kind: str
    control_photon: int
    control_modes: tuple[str, ...]
    target_photon: int
    target_modes: tuple[str, ...]
    control_idle_modes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in VARIANTS:
            raise ValueError(f"unknown c-path variant {self.kind!r}")
        if self.control_photon == self.target_photon:
            raise ValueError("control and target must be different photons")
        if not self.control_modes or not self.target_modes:
            raise ValueError("c-path needs at least one control mode and one target mode")
        for modes in (self.control_modes, self.target_modes):
            if len(set(modes)) != len(modes):
                raise ValueError(f"repeated mode in {modes}")
        if set(self.control_modes) & set(self.control_idle_modes):
            raise ValueError("idle control modes overlap the routing modes")


def _phase(z: complex) -> float:
    return math.atan2(z.imag, z.real)


def emit_cpath(
    b: ProgramBuilder,
    v: CPathVariant,
    alpha: float,
    theta: float,
    *,
    multiplicity: int = 1,
    group: str = "",
) -> list:
    """Emit a c-path gate into ``b`` and return the emitted fragment.

    After the gate every target mode ``y`` is replaced by ``y0``/``y1``
    holding the control-H/control-V components respectively.
    """
    if alpha <= 0 or theta <= 0:
        raise ValueError("alpha and theta must be positive")
    t = v.target_photon
    c = v.control_photon
    q1, q2 = b.new_qubus(), b.new_qubus()
    lo = [split_modes(y)[0] for y in v.target_modes]
    hi = [split_modes(y)[1] for y in v.target_modes]
    frag: list = [
        Mark("cpath", multiplicity, v.kind, group),
        Relabel(t, tuple((y, y0) for y, y0 in zip(v.target_modes, lo))),
        BS50(t, tuple(zip(lo, hi)), multiplicity),
        Inject((q1, q2), (complex(alpha), complex(alpha))),
    ]
    swaps = [ModeSwap(t, a, z) for a, z in zip(lo, hi)]
    e_p, e_m = cmath.exp(1j * theta), cmath.exp(-1j * theta)
    if v.kind == "simplified":
        frag += [XPM(t, y0, None, q1, theta) for y0 in lo]
        frag += [XPM(c, x, "V", q1, theta) for x in v.control_modes]
        frag += [PhaseShift(q1, -theta), CoherentBS(q1, q2, multiplicity)]
        b_h, b_v = alpha * (e_m - 1) / math.sqrt(2), alpha * (e_p - 1) / math.sqrt(2)
        c_h, c_v = alpha * (e_m + 1) / math.sqrt(2), alpha * (e_p + 1) / math.sqrt(2)
        fix_l = ConditionalPhase(t, tuple(hi), _phase(c_h) - _phase(c_v))
        second = Detect(
            q2, "pnd", (fix_l,), (fix_l,), consumed=Fraction(multiplicity, 2)
        )
        on_click = tuple(swaps) + (ConditionalPhase(t, tuple(hi), _phase(b_h) - _phase(b_v)), second)
        frag.append(Detect(q1, "pnd", (Discard(q2),), on_click))
    else:
        frag += [XPM(t, lo[i], None, q1, theta) for i in range(len(lo))]
        frag += [XPM(t, hi[i], None, q2, theta) for i in range(len(hi))]
        frag += [XPM(c, x, "H", q2, theta) for x in v.control_modes]
        frag += [XPM(c, x, None, q2, theta) for x in v.control_idle_modes]
        frag += [XPM(c, x, "V", q1, theta) for x in v.control_modes]
        frag += [PhaseShift(q1, -theta), PhaseShift(q2, -theta), CoherentBS(q1, q2, multiplicity)]
        beta = 1j * math.sqrt(2) * alpha * math.sin(theta)
        on_click = tuple(swaps) + (ConditionalPhase(t, tuple(hi), _phase(-beta) - _phase(beta)), Discard(q2))
        frag.append(Detect(q1, "pnd", (Discard(q2),), on_click))
    b.extend(frag)
    return frag


def emit_merge(
    b: ProgramBuilder,
    control_photon: int,
    control_modes: Sequence[str],
    target_photon: int,
    bases: Sequence[str],
    alpha: float,
    theta: float,
    *,
    multiplicity: int = 1,
    group: str = "",
    eta: float = 1.0,
) -> list:
    """Emit a merging gate folding each pair ``(y0, y1)`` of the target back into ``y``.

    ``control_modes`` are the modes in which the control photon may carry V;
    the click correction applies sigma_z there.
    """
    if alpha <= 0 or theta <= 0:
        raise ValueError("alpha and theta must be positive")
    if not bases or len(set(bases)) != len(bases):
        raise ValueError("merge needs distinct base modes")
    t = target_photon
    q1, q2 = b.new_qubus(), b.new_qubus()
    lo = [split_modes(y)[0] for y in bases]
    hi = [split_modes(y)[1] for y in bases]
    frag: list = [
        Mark("merge", multiplicity, "", group),
        BS50(t, tuple(zip(lo, hi)), multiplicity),
        Inject((q1, q2), (complex(alpha), complex(alpha))),
    ]
    frag += [XPM(t, y1, None, q2, theta) for y1 in hi]
    frag.append(CoherentBS(q1, q2, multiplicity))
    on_zero = (Discard(q2), Relabel(t, tuple(zip(lo, bases))))
    on_click = (
        (Discard(q2),)
        + tuple(local_unitary(control_photon, x, SIGMA_Z) for x in control_modes)
        + (Relabel(t, tuple(zip(hi, bases))),)
    )
    frag.append(Detect(q1, "pnnd", on_zero, on_click, eta=eta))
    b.extend(frag)
    return frag


def cnot_from_pair(
    alpha: float | None = None,
    theta: float = DEFAULT_THETA,
    variant: str = "simplified",
) -> ElementProgram:
    """CNOT on photons (0 control, 1 target): c-path, sigma_x on the V-routed path, merge."""
    alpha = alpha_for_beta_sq(DEFAULT_BETA_SQ, theta) if alpha is None else alpha
    b = ProgramBuilder(2, alpha=alpha, theta=theta, variant=variant)
    emit_cpath(b, CPathVariant(variant, 0, (ROOT_MODE,), 1, (ROOT_MODE,)), alpha, theta)
    b.emit(local_unitary(1, split_modes(ROOT_MODE)[1], SIGMA_X))
    emit_merge(b, 0, (ROOT_MODE,), 1, (ROOT_MODE,), alpha, theta)
    return b.program


@dataclass(frozen=True)
class GateParams:
    """Physical parameters shared by every element gate of a program."""

    alpha: float
    theta: float = DEFAULT_THETA
    variant: str = "simplified"
    eta: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0 or self.theta <= 0:
            raise ValueError("alpha and theta must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")

    @classmethod
    def default(cls, theta: float = DEFAULT_THETA, beta_sq: float = DEFAULT_BETA_SQ, variant: str = "simplified"):
        return cls(alpha_for_beta_sq(beta_sq, theta), theta, variant)

    def header(self) -> dict:
        return {"alpha": self.alpha, "theta": self.theta, "variant": self.variant, "eta": self.eta}
