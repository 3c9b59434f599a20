"""
Module: engine/bell.py
Description: Correlation functions and Bell-inequality evaluators for the
             sector ensembles of engine/states.py: CHSH and CH for BSV,
             Mermin for BGHZ, per-sector and block-averaged analyses, and the
             critical-parameter solvers (efficiency, noise, gain threshold).

             Every observable conserves per-beam photon number, so an
             ensemble expectation is the weight-average of per-sector values.
             In the two-beam inequalities the second observer uses crossed
             analyzers; with that orientation the singlet-like sectors and the
             vacuum term enter with the same sign.
Author: pwnedByJT
"""

import math
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import optimize

from engine.channels import lossy_value_table, noise_mixture_lhs, table_size
from engine.errors import ContractViolation
from engine.fock import BASIS_DA, BASIS_RL, PolarizationSetting
from engine.observables import ObservableKind, vacuum_subtracted
from engine.states import (
    BellFamily,
    BghzCoefficients,
    SectorAmplitudes,
    SectorEnsemble,
    bghz_coefficients,
    bghz_ensemble,
    bsv_ensemble,
    bsv_sector,
)


CHSH_BOUND   = 2.0
MERMIN_BOUND = 2.0
CH_WINDOW    = (-1.0, 0.0)

DEFAULT_CHSH_CUTOFF   = 150
DEFAULT_CH_CUTOFF     = 50
DEFAULT_MERMIN_CUTOFF = 30

SCAN_STEP = 0.05
ROOT_TOL  = 1e-4

# rotated probability tensors kept in memory, sized for full-cutoff two-beam sectors
JOINT_CACHE_BYTES   = 128 * 2 ** 20
JOINT_CACHE_ENTRIES = JOINT_CACHE_BYTES // ((DEFAULT_CHSH_CUTOFF + 1) ** 2 * 8)


# ---------------------------------------------------------------------------
# TYPES
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SettingsQuad:
    theta:       PolarizationSetting = PolarizationSetting(0.0)
    theta_prime: PolarizationSetting = PolarizationSetting(math.pi / 4)
    phi:         PolarizationSetting = PolarizationSetting(math.pi / 8)
    phi_prime:   PolarizationSetting = PolarizationSetting(-math.pi / 8)

    @classmethod
    def from_angles(cls, theta: float, theta_prime: float, phi: float, phi_prime: float) -> "SettingsQuad":
        return cls(*(PolarizationSetting(a) for a in (theta, theta_prime, phi, phi_prime)))

    def terms(self) -> tuple[tuple[int, PolarizationSetting, PolarizationSetting], ...]:
        """(sign, first observer, second observer) for E(θ,φ) + E(θ,φ′) + E(θ′,φ) − E(θ′,φ′)."""
        return (
            (+1, self.theta,       self.phi),
            (+1, self.theta,       self.phi_prime),
            (+1, self.theta_prime, self.phi),
            (-1, self.theta_prime, self.phi_prime),
        )

    def all_settings(self) -> tuple[PolarizationSetting, ...]:
        """Every analyzer the two observers use, crossed ones included."""
        return (self.theta, self.theta_prime, self.phi.crossed(), self.phi_prime.crossed())


DEFAULT_QUAD = SettingsQuad()


@dataclass(frozen=True)
class SectorContribution:
    n: int
    weight: float
    value: float
    contribution: float


@dataclass(frozen=True)
class InequalityReport:
    """
    `signed` is the raw combination; `lhs` is what gets compared with the
    classical window (|signed| for CHSH and Mermin, signed itself for CH).
    """
    name: str
    lhs: float
    signed: float
    vacuum_term: float
    per_sector: tuple[SectorContribution, ...] = field(repr=False)
    window: tuple[float, float]
    cutoff: int
    eta: float = 1.0
    q: float = 1.0
    gamma: float | None = None
    tail: float = 0.0

    @property
    def violation_side(self) -> str | None:
        if self.signed > self.window[1]:
            return "upper"
        if self.signed < self.window[0]:
            return "lower"
        return None

    @property
    def violated(self) -> bool:
        return self.violation_side is not None

    def nonvacuum(self) -> float:
        return self.signed - self.vacuum_term


@dataclass(frozen=True)
class ThresholdResult:
    gamma: float
    cutoff: int
    inequality: str
    kind: ObservableKind


# ---------------------------------------------------------------------------
# HELPERS
# ---------------------------------------------------------------------------

def _log(tag: str, message: str) -> None:
    print(f"[{tag}] {message}", file=sys.stderr)


@lru_cache(maxsize=JOINT_CACHE_ENTRIES)
def _joint_probabilities(sector: SectorAmplitudes, settings: tuple[PolarizationSetting, ...]) -> np.ndarray:
    probs = sector.probabilities(settings)
    probs.setflags(write=False)
    return probs


def _values(kind: ObservableKind, eta: float, n: int) -> np.ndarray:
    return lossy_value_table(ObservableKind(kind), float(eta), table_size(n)).sector_vector(n)


def _require_beams(sector: SectorAmplitudes, beams: int) -> None:
    if sector.beams != beams:
        raise ContractViolation(f"Expected a {beams}-beam sector, got {sector.beams} beams")


def _report(name: str, ensemble: SectorEnsemble, evaluate: Callable[[SectorAmplitudes], float],
            window: tuple[float, float], absolute: bool, **params) -> InequalityReport:
    contributions = []
    vacuum = 0.0
    for weight, sector in ensemble.entries:
        value = evaluate(sector)
        contributions.append(SectorContribution(sector.totals[0], weight, value, weight * value))
        if sector.is_vacuum:
            vacuum = weight * value
    signed = math.fsum(c.contribution for c in contributions)
    return InequalityReport(
        name=name,
        lhs=abs(signed) if absolute else signed,
        signed=signed,
        vacuum_term=vacuum,
        per_sector=tuple(contributions),
        window=window,
        cutoff=ensemble.cutoff,
        tail=ensemble.tail,
        **params,
    )


def _scan_bracket(f: Callable[[float], float], start: float, step: float, stop: float) -> tuple[float, float] | None:
    """
    Walks from `start` toward `stop` in steps of `step` (either sign) and
    returns the first (inside, outside) pair where f drops to <= 0.
    """
    previous = start
    i = 1
    while True:
        x = start + i * step
        if (step > 0 and x > stop) or (step < 0 and x < stop):
            x = stop
        if f(x) <= 0:
            return previous, x
        if x == stop:
            return None
        previous = x
        i += 1


# ---------------------------------------------------------------------------
# CORRELATIONS
# ---------------------------------------------------------------------------

def pair_correlation(sector: SectorAmplitudes, sA: PolarizationSetting, sB: PolarizationSetting,
                     kind: ObservableKind, eta: float = 1.0) -> float:
    """Σ |A′[j][k]|²·f_A(j, n_A−j)·f_B(k, n_B−k) after rotating beam 1 to sA and beam 2 to sB."""
    _require_beams(sector, 2)
    probs = _joint_probabilities(sector, (sA, sB))
    n_a, n_b = sector.totals
    return float(_values(kind, eta, n_a) @ probs @ _values(kind, eta, n_b))


def triple_correlation(sector: SectorAmplitudes, settings: tuple[PolarizationSetting, ...],
                       kind: ObservableKind, eta: float = 1.0) -> float:
    _require_beams(sector, 3)
    probs = _joint_probabilities(sector, tuple(settings))
    f1, f2, f3 = (_values(kind, eta, n) for n in sector.totals)
    return float(np.einsum("ijk,i,j,k->", probs, f1, f2, f3))


# ---------------------------------------------------------------------------
# CHSH
# ---------------------------------------------------------------------------

def sector_chsh(sector: SectorAmplitudes, quad: SettingsQuad = DEFAULT_QUAD,
                kind: ObservableKind = ObservableKind.SIGN_MINUS, eta: float = 1.0) -> float:
    """Signed E(θ,φ) + E(θ,φ′) + E(θ′,φ) − E(θ′,φ′) on one sector."""
    return math.fsum(
        sign * pair_correlation(sector, a, b.crossed(), kind, eta)
        for sign, a, b in quad.terms()
    )


def chsh_lhs(ensemble: SectorEnsemble, quad: SettingsQuad = DEFAULT_QUAD,
             kind: ObservableKind = ObservableKind.SIGN_MINUS, eta: float = 1.0,
             gamma: float | None = None) -> InequalityReport:
    if ensemble.beams != 2:
        raise ContractViolation("CHSH needs a two-beam ensemble")
    return _report(
        "chsh", ensemble, lambda sector: sector_chsh(sector, quad, kind, eta),
        (-CHSH_BOUND, CHSH_BOUND), absolute=True, eta=eta, gamma=gamma,
    )


def vacuum_term_chsh(gamma: float) -> float:
    return 2.0 / math.cosh(gamma) ** 4


def per_sector_chsh(n: int, quad: SettingsQuad = DEFAULT_QUAD,
                    kind: ObservableKind = ObservableKind.SIGN) -> float:
    """⟨CHSH⟩ on the n-pair BSV sector, lossless."""
    if n < 1:
        raise ContractViolation(f"Per-sector analysis starts at n=1, got {n}")
    return sector_chsh(bsv_sector(n), quad, kind, 1.0)


def block_average(N: int, gamma: float, quad: SettingsQuad = DEFAULT_QUAD,
                  kind: ObservableKind = ObservableKind.SIGN) -> float:
    """
    Weighted mean of ⟨CHSH⟩_{ψⁿ} over n = 8(N−1)+1 .. 8N with BSV weights.
    gamma = math.inf uses the limiting weights w_n ∝ (n+1).
    """
    if N < 1:
        raise ContractViolation(f"Block index starts at 1, got {N}")
    if not gamma > 0:
        raise ContractViolation(f"Block averages need gamma > 0, got {gamma}")
    n = np.arange(8 * (N - 1) + 1, 8 * N + 1)
    log_w = np.log(n + 1.0)
    if not math.isinf(gamma):
        log_w = log_w + 2.0 * n * math.log(math.tanh(gamma))
    weights = np.exp(log_w - log_w.max())
    values = np.array([per_sector_chsh(int(i), quad, kind) for i in n])
    return float(weights @ values / weights.sum())


def asymptotic_bound(gamma: float) -> float:
    """Lower bound on the non-vacuum CHSH term; adds up to 2 with vacuum_term_chsh."""
    t2 = math.tanh(gamma) ** 2
    sech2 = 1.0 / math.cosh(gamma) ** 2
    return 2.0 * (t2 + sech2 * t2)


# ---------------------------------------------------------------------------
# CH
# ---------------------------------------------------------------------------

_CH_KINDS = (ObservableKind.PROJECTOR, ObservableKind.RATE)


def sector_ch(sector: SectorAmplitudes, quad: SettingsQuad = DEFAULT_QUAD,
              kind: ObservableKind = ObservableKind.PROJECTOR, eta: float = 1.0) -> float:
    """⟨P¹(θ)P²(φ)⟩ + ⟨P¹(θ)P²(φ′)⟩ + ⟨P¹(θ′)P²(φ)⟩ − ⟨P¹(θ′)P²(φ′)⟩ − ⟨P¹(θ)⟩ − ⟨P²(φ)⟩"""
    kind = ObservableKind(kind)
    if kind not in _CH_KINDS:
        raise ContractViolation(f"CH is defined for projector or rate observables, got {kind.value}")
    _require_beams(sector, 2)
    n_a, n_b = sector.totals
    f_a, f_b = _values(kind, eta, n_a), _values(kind, eta, n_b)

    joint = math.fsum(sign * pair_correlation(sector, a, b.crossed(), kind, eta) for sign, a, b in quad.terms())
    reference = _joint_probabilities(sector, (quad.theta, quad.phi.crossed()))
    single_a = float(reference.sum(axis=1) @ f_a)
    single_b = float(reference.sum(axis=0) @ f_b)
    return joint - single_a - single_b


def ch_lhs(ensemble: SectorEnsemble, quad: SettingsQuad = DEFAULT_QUAD,
           kind: ObservableKind = ObservableKind.PROJECTOR, eta: float = 1.0,
           gamma: float | None = None) -> InequalityReport:
    if ensemble.beams != 2:
        raise ContractViolation("CH needs a two-beam ensemble")
    return _report(
        "ch", ensemble, lambda sector: sector_ch(sector, quad, kind, eta),
        CH_WINDOW, absolute=False, eta=eta, gamma=gamma,
    )


def per_sector_ch(n: int, quad: SettingsQuad = DEFAULT_QUAD,
                  kind: ObservableKind = ObservableKind.PROJECTOR) -> float:
    if n < 1:
        raise ContractViolation(f"Per-sector analysis starts at n=1, got {n}")
    return sector_ch(bsv_sector(n), quad, kind, 1.0)


# ---------------------------------------------------------------------------
# MERMIN
# ---------------------------------------------------------------------------

MERMIN_TERMS: tuple[tuple[int, tuple[PolarizationSetting, ...]], ...] = (
    (+1, (BASIS_DA, BASIS_DA, BASIS_DA)),
    (-1, (BASIS_DA, BASIS_RL, BASIS_RL)),
    (-1, (BASIS_RL, BASIS_DA, BASIS_RL)),
    (-1, (BASIS_RL, BASIS_RL, BASIS_DA)),
)


def mermin_sector_value(sector: SectorAmplitudes, kind: ObservableKind = ObservableKind.SIGN_MINUS,
                        eta: float = 1.0) -> float:
    """⟨G₁G₁G₁⟩ − ⟨G₁G₂G₂⟩ − ⟨G₂G₁G₂⟩ − ⟨G₂G₂G₁⟩ on one three-beam sector."""
    return math.fsum(sign * triple_correlation(sector, settings, kind, eta) for sign, settings in MERMIN_TERMS)


def mermin_lhs(coeffs: BghzCoefficients, kind: ObservableKind = ObservableKind.SIGN_MINUS,
               eta: float = 1.0) -> InequalityReport:
    ensemble = bghz_ensemble(coeffs)
    return _report(
        "mermin", ensemble, lambda sector: mermin_sector_value(sector, kind, eta),
        (-MERMIN_BOUND, MERMIN_BOUND), absolute=True, eta=eta, gamma=coeffs.gamma,
    )


# ---------------------------------------------------------------------------
# NOISE
# ---------------------------------------------------------------------------

def noise_chsh_signed(gamma: float, cutoff: int = DEFAULT_CHSH_CUTOFF, quad: SettingsQuad = DEFAULT_QUAD,
                      kind: ObservableKind = ObservableKind.SIGN_MINUS, eta: float = 1.0) -> float:
    """Equal-weight average of the signed CHSH value over the four Bell-family BSV states."""
    values = [chsh_lhs(bsv_ensemble(gamma, cutoff, family), quad, kind, eta).signed for family in BellFamily]
    return math.fsum(values) / len(values)


def noisy_chsh_lhs(gamma: float, q: float, cutoff: int = DEFAULT_CHSH_CUTOFF,
                   quad: SettingsQuad = DEFAULT_QUAD, kind: ObservableKind = ObservableKind.SIGN_MINUS,
                   eta: float = 1.0, noise_gamma: float | None = None) -> float:
    signal = chsh_lhs(bsv_ensemble(gamma, cutoff), quad, kind, eta).signed
    if q == 1.0:
        return abs(signal)
    noise = noise_chsh_signed(gamma if noise_gamma is None else noise_gamma, cutoff, quad, kind, eta)
    return abs(noise_mixture_lhs(signal, noise, q))


def critical_mixture(lhs_signal: float, lhs_noise: float, bound: float = CHSH_BOUND) -> float:
    """
    q at which |q·signal + (1−q)·noise| meets the bound on the signal's side,
    clamped to [0, 1]. Inputs are signed values; NaN if |signal| does not reach the bound.
    """
    if lhs_signal < 0:
        lhs_signal, lhs_noise = -lhs_signal, -lhs_noise
    if lhs_signal < bound:
        return math.nan
    if lhs_signal == lhs_noise:
        return 1.0
    return min(1.0, max(0.0, (bound - lhs_noise) / (lhs_signal - lhs_noise)))


def critical_noise(gamma: float, quad: SettingsQuad = DEFAULT_QUAD, kind: ObservableKind = ObservableKind.SIGN,
                   cutoff: int = DEFAULT_CHSH_CUTOFF, eta: float = 1.0,
                   noise_gamma: float | None = None) -> float:
    """Smallest signal fraction q that still violates CHSH (|LHS| > 2); violation iff q > q_c."""
    kind = vacuum_subtracted(kind)
    signal = chsh_lhs(bsv_ensemble(gamma, cutoff), quad, kind, eta).signed
    noise = noise_chsh_signed(gamma if noise_gamma is None else noise_gamma, cutoff, quad, kind, eta)
    q_c = critical_mixture(signal, noise)
    if math.isnan(q_c):
        return q_c

    check = abs(noise_mixture_lhs(signal, noise, q_c))
    if 0.0 < q_c < 1.0 and abs(check - CHSH_BOUND) > 1e-8:
        _log("WARN", f"critical_noise gamma={gamma:g}: mixture LHS at q_c is {check!r}, expected {CHSH_BOUND}")
    return q_c


# ---------------------------------------------------------------------------
# CRITICAL PARAMETERS
# ---------------------------------------------------------------------------

def critical_efficiency(gamma: float, inequality: str = "chsh", kind: ObservableKind = ObservableKind.SIGN,
                        tol: float = ROOT_TOL, cutoff: int | None = None,
                        quad: SettingsQuad = DEFAULT_QUAD, step: float = SCAN_STEP) -> float:
    """
    Detector efficiency below which the inequality stops being violated.
    Returns NaN when there is no violation even at η = 1.
    """
    if tol <= 0:
        raise ContractViolation(f"Tolerance must be positive, got {tol}")
    kind = vacuum_subtracted(kind)

    if inequality == "chsh":
        ensemble = bsv_ensemble(gamma, cutoff or DEFAULT_CHSH_CUTOFF)

        def excess(eta: float) -> float:
            return chsh_lhs(ensemble, quad, kind, eta).lhs - CHSH_BOUND
    elif inequality == "mermin":
        coeffs = bghz_coefficients(gamma, cutoff or DEFAULT_MERMIN_CUTOFF)

        def excess(eta: float) -> float:
            return mermin_lhs(coeffs, kind, eta).lhs - MERMIN_BOUND
    else:
        raise ContractViolation(f"Unknown inequality for critical efficiency: {inequality}")

    if excess(1.0) <= 0:
        return math.nan
    bracket = _scan_bracket(excess, 1.0, -step, 0.0)
    if bracket is None:
        return 0.0
    inside, outside = bracket
    return float(optimize.bisect(excess, outside, inside, xtol=tol))


def gamma_threshold(kind: ObservableKind, inequality: str = "chsh", cutoff: int | None = None,
                    tol: float = ROOT_TOL, quad: SettingsQuad = DEFAULT_QUAD,
                    step: float = SCAN_STEP, gamma_max: float = 4.0) -> ThresholdResult:
    """
    Largest Γ below which the inequality stays violated: coarse scan upward
    from Γ = step, then bisection on the first bracket.
    """
    kind = ObservableKind(kind)
    if inequality == "chsh":
        cutoff = cutoff or DEFAULT_CHSH_CUTOFF
        measured = vacuum_subtracted(kind)

        def excess(gamma: float) -> float:
            return chsh_lhs(bsv_ensemble(gamma, cutoff), quad, measured).lhs - CHSH_BOUND
    elif inequality == "ch":
        cutoff = cutoff or DEFAULT_CH_CUTOFF

        def excess(gamma: float) -> float:
            return ch_lhs(bsv_ensemble(gamma, cutoff), quad, kind).lhs - CH_WINDOW[1]
    else:
        raise ContractViolation(f"Unknown inequality for gamma threshold: {inequality}")

    if excess(step) <= 0:
        _log("WARN", f"{inequality}/{kind.value}: no violation at gamma={step:g}")
        return ThresholdResult(math.nan, cutoff, inequality, kind)
    bracket = _scan_bracket(excess, step, step, gamma_max)
    if bracket is None:
        _log("WARN", f"{inequality}/{kind.value}: still violated at gamma_max={gamma_max:g}")
        return ThresholdResult(math.inf, cutoff, inequality, kind)
    inside, outside = bracket
    return ThresholdResult(float(optimize.bisect(excess, inside, outside, xtol=tol)), cutoff, inequality, kind)
