"""Measurement of qubus beams and the indirect number-resolving module.

Fock projections are evaluated on coherent labels directly. The analytics
functions at the bottom describe the number-resolving module built from a
non-resolving detector, a second qubus pair and cross-phase modulation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .state import (
    HybridState,
    add_amplitude,
    canonicalize,
    coherent_overlap,
    fock_amplitude,
    norm,
    normalized,
    poisson_pmf,
)


@dataclass(frozen=True)
class DetectorModel:
    eta: float = 1.0
    gamma: float = 1000.0
    theta: float = 0.01
    eps_cutoff: float = 1e-12

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError(f"detector efficiency must lie in (0, 1], got {self.eta}")
        if not 0 < self.eps_cutoff <= 1e-6:
            raise ValueError(f"eps_cutoff must lie in (0, 1e-6], got {self.eps_cutoff}")
        if self.gamma <= 0 or self.theta <= 0:
            raise ValueError("gamma and theta must be positive")


@dataclass(frozen=True)
class MeasurementOutcome:
    k: int
    probability: float
    post_state: HybridState


def _remove(state: HybridState, i: int):
    return state.qubus[:i] + state.qubus[i + 1 :]


def project_fock(state: HybridState, qubus: int, k: int) -> HybridState:
    """Unnormalized <k|_qubus applied to every branch; the beam leaves the register."""
    i = state.qubus_index(qubus)
    out: dict = {}
    for (cfg, labels), amp in state.branches.items():
        c = fock_amplitude(k, labels[i])
        if c != 0:
            add_amplitude(out, (cfg, labels[:i] + labels[i + 1 :]), amp * c)
    return canonicalize(HybridState(out, _remove(state, i), state.theta, state.n_photons))


def project_no_click(state: HybridState, qubus: int, eta: float = 1.0) -> HybridState:
    """No-click Kraus operator of a non-resolving detector with efficiency ``eta``.

    sqrt(Pi_0)|a> = exp(-eta|a|^2/2) |sqrt(1-eta) a>. For eta = 1 the beam is
    removed; otherwise the unregistered remainder stays in the register and the
    caller is expected to discard it.
    """
    i = state.qubus_index(qubus)
    out: dict = {}
    keep = eta < 1
    shrink = math.sqrt(1 - eta) if keep else 0.0
    for (cfg, labels), amp in state.branches.items():
        a = labels[i]
        c = math.exp(-0.5 * eta * abs(a) ** 2)
        if keep:
            lab = labels[:i] + (a * shrink,) + labels[i + 1 :]
        else:
            lab = labels[:i] + labels[i + 1 :]
        add_amplitude(out, (cfg, lab), amp * c)
    qubus_ids = state.qubus if keep else _remove(state, i)
    return canonicalize(HybridState(out, qubus_ids, state.theta, state.n_photons))


def discard_qubus(state: HybridState, qubus: int) -> tuple[HybridState, float]:
    """Drop a beam that is no longer needed.

    When every branch carries the same label the beam factors out and removal
    is exact. Otherwise branches are projected onto the label carrying the
    largest weight, and the lost squared norm is returned so callers can
    account for it.
    """
    i = state.qubus_index(qubus)
    weights: dict[complex, float] = {}
    for (_, labels), amp in state.branches.items():
        weights[labels[i]] = weights.get(labels[i], 0.0) + abs(amp) ** 2
    if not weights:
        return HybridState({}, _remove(state, i), state.theta, state.n_photons), 0.0
    nominal = max(weights, key=weights.get)
    before = norm(state) ** 2
    out: dict = {}
    for (cfg, labels), amp in state.branches.items():
        c = 1.0 if labels[i] == nominal else coherent_overlap(nominal, labels[i])
        add_amplitude(out, (cfg, labels[:i] + labels[i + 1 :]), amp * c)
    result = canonicalize(HybridState(out, _remove(state, i), state.theta, state.n_photons))
    return result, max(before - norm(result) ** 2, 0.0)


def pnd_project(state: HybridState, qubus_index: int, eps_cutoff: float = 1e-12) -> list[MeasurementOutcome]:
    """Enumerate number-resolving outcomes k = 0, 1, ... until the mass reaches 1 - eps_cutoff."""
    i = state.qubus_index(qubus_index)
    total = norm(state) ** 2
    max_mean = max((abs(lab[i]) ** 2 for (_, lab) in state.branches), default=0.0)
    k_limit = int(max_mean + 40 * math.sqrt(max_mean + 1) + 60)
    outcomes = []
    acc = 0.0
    for k in range(k_limit + 1):
        post = project_fock(state, qubus_index, k)
        p = norm(post) ** 2 / total
        if p > 0:
            outcomes.append(MeasurementOutcome(k, p, normalized(post)))
            acc += p
        if acc >= 1 - eps_cutoff:
            break
    return outcomes


def pnnd_click_probability(label: complex, eta: float) -> float:
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    return -math.expm1(-eta * abs(label) ** 2)


def no_click_fock_sum(label: complex, eta: float, tail: float = 1e-16) -> float:
    """sum_k P(k) (1-eta)^k for a coherent state, summed term by term."""
    mean = abs(label) ** 2
    total = 0.0
    k = 0
    acc = 0.0
    while True:
        p = poisson_pmf(k, mean)
        total += p * (1 - eta) ** k
        acc += p
        if acc >= 1 - tail or (k > mean and p < tail * 1e-3):
            return total
        k += 1


def module_label(gamma: float, theta: float, k: int) -> complex:
    """Label of the probe beam after k signal photons: gamma (e^{ik theta} - 1)/sqrt2."""
    return gamma * (cmath.exp(1j * k * theta) - 1) / math.sqrt(2)


def module_mean(gamma: float, theta: float, k: int) -> float:
    return 2 * gamma**2 * math.sin(k * theta / 2) ** 2


@dataclass(frozen=True)
class PeakRow:
    k: int
    label: complex
    mean: float
    pmf_support: tuple[int, int]
    pmf: tuple[float, ...]
    overlap_next_exact: float | None
    overlap_approx: float


def _pmf_window(mean: float, width: float = 12.0):
    if mean == 0:
        return (0, 0), (1.0,)
    lo = max(0, int(mean - width * math.sqrt(mean)))
    hi = int(mean + width * math.sqrt(mean)) + 1
    return (lo, hi), tuple(poisson_pmf(n, mean) for n in range(lo, hi + 1))


def pnd_module_distributions(model: DetectorModel, k_max: int) -> list[PeakRow]:
    """Tabulate the Poisson peaks of the module's probe beam for k = 0..k_max."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    approx = math.exp(-(model.gamma**2) * model.theta**2 / 4)
    rows = []
    for k in range(k_max + 1):
        lab = module_label(model.gamma, model.theta, k)
        mean = module_mean(model.gamma, model.theta, k)
        support, pmf = _pmf_window(mean)
        nxt = module_label(model.gamma, model.theta, k + 1)
        rows.append(PeakRow(k, lab, mean, support, pmf, abs(coherent_overlap(lab, nxt)), approx))
    return rows


@dataclass(frozen=True)
class PovmBin:
    k: int
    lo: int
    hi: int | None  # None = unbounded
    mean: float
    misclassified: float


def _poisson_cdf(n: int, mean: float) -> float:
    """P(X <= n)."""
    from scipy.stats import poisson

    return float(poisson.cdf(n, mean))


def _poisson_sf(n: int, mean: float) -> float:
    """P(X > n)."""
    from scipy.stats import poisson

    return float(poisson.sf(n, mean))


def povm_bin_decomposition(model: DetectorModel, k_max: int, max_overlap: float = 0.1) -> list[PovmBin]:
    """Split the detector count axis into one non-overlapping bin per k = 1..k_max.

    Bin edges sit at midpoints between adjacent registered means
    ``eta * 2 gamma^2 sin^2(k theta / 2)``. Raises ``ValueError`` when the
    misclassified mass of any peak exceeds ``max_overlap``.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    means = [model.eta * module_mean(model.gamma, model.theta, k) for k in range(k_max + 1)]
    for a, b in zip(means[1:], means[2:]):
        if b <= a:
            raise ValueError("peak means are not increasing; reduce k_max or theta")
    edges = [math.floor((means[k] + means[k + 1]) / 2) for k in range(1, k_max)]
    bins = []
    for idx, k in enumerate(range(1, k_max + 1)):
        lo = 0 if idx == 0 else edges[idx - 1] + 1
        hi = edges[idx] if idx < len(edges) else None
        mean = means[k]
        miss = 0.0
        if lo > 0:
            miss += _poisson_cdf(lo - 1, mean)
        if hi is not None:
            miss += _poisson_sf(hi, mean)
        if miss > max_overlap:
            raise ValueError(
                f"peaks not separable: k={k} loses {miss:.3g} of its mass outside [{lo}, {hi}] "
                f"(gamma*theta = {model.gamma * model.theta:.3g})"
            )
        bins.append(PovmBin(k, lo, hi, mean, miss))
    return bins


@dataclass(frozen=True)
class ErrorEstimate:
    approx: float
    log_approx: float
    exact: float | None
    log_exact: float | None


def pe_error(alpha: float, theta: float, gamma: float, eta: float, exact: bool = True) -> ErrorEstimate:
    """Probability that the module registers nothing.

    ``approx`` is exp{-2 (1 - exp(-eta gamma^2 theta^2 / 2)) alpha^2 sin^2 theta}.
    ``exact`` sums sum_k P(k) exp(-eta |gamma (e^{ik theta} - 1)/sqrt2|^2) with
    P Poisson of mean 2 alpha^2 sin^2 theta.
    """
    if min(alpha, theta, gamma, eta) <= 0:
        raise ValueError("all parameters must be positive")
    beta_sq = 2 * alpha**2 * math.sin(theta) ** 2
    log_approx = -(-math.expm1(-eta * gamma**2 * theta**2 / 2)) * beta_sq
    if not exact:
        return ErrorEstimate(math.exp(log_approx), log_approx, None, None)
    # log-sum-exp over Poisson terms
    hi = int(beta_sq + 40 * math.sqrt(beta_sq + 1) + 60)
    logs = []
    for k in range(hi + 1):
        lp = -beta_sq + (k * math.log(beta_sq) if k else 0.0) - math.lgamma(k + 1)
        logs.append(lp - eta * module_mean(gamma, theta, k))
    m = max(logs)
    log_exact = m + math.log(sum(math.exp(x - m) for x in logs))
    return ErrorEstimate(math.exp(log_approx), log_approx, math.exp(log_exact), log_exact)


def recycle_degrade(alpha: complex, theta: float, t: int) -> complex:
    """Qubus amplitude after ``t`` uses: alpha cos^t(theta)."""
    if t < 0 or int(t) != t:
        raise ValueError("t must be a non-negative integer")
    return alpha * math.cos(theta) ** t
