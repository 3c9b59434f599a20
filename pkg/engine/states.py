"""
Module: engine/states.py
Description: Photon-number sectors of the states used in the Bell sweeps:
             bright squeezed vacuum (BSV) and its Bell-basis family, the
             three-beam bright GHZ state (BGHZ), and single-beam Fock
             product states. Every sector is a complex tensor indexed by the
             per-beam split j_b (photons in the first mode of beam b).
Author: pwnedByJT
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate

from engine.errors import BghzTruncationError, ContractViolation
from engine.fock import PolarizationSetting, build_transform


# ---------------------------------------------------------------------------
# SECTORS
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SectorAmplitudes:
    """
    Fixed-total sector. `key` identifies factory-made sectors so that
    evaluators can cache rotated probabilities; ad-hoc sectors leave it None
    and compare by identity.
    """
    totals: tuple[int, ...]
    amps: np.ndarray = field(repr=False)
    key: tuple | None = None

    def __post_init__(self):
        expected = tuple(n + 1 for n in self.totals)
        if self.amps.shape != expected:
            raise ContractViolation(f"Amplitude shape {self.amps.shape} does not match totals {self.totals}")
        self.amps.setflags(write=False)

    def __hash__(self):
        return hash(self.key) if self.key is not None else id(self)

    def __eq__(self, other):
        if self.key is not None and isinstance(other, SectorAmplitudes):
            return self.key == other.key
        return self is other

    @property
    def beams(self) -> int:
        return len(self.totals)

    @property
    def is_vacuum(self) -> bool:
        return not any(self.totals)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def rotated(self, settings: Sequence[PolarizationSetting | None]) -> "SectorAmplitudes":
        """Re-express each beam in its setting's basis; None leaves the beam as is."""
        if len(settings) != self.beams:
            raise ContractViolation(f"Need {self.beams} settings, got {len(settings)}")
        out = np.asarray(self.amps)
        for axis, (n, setting) in enumerate(zip(self.totals, settings)):
            if setting is None or n == 0:
                continue
            matrix = build_transform(n, setting).entries
            out = np.moveaxis(np.tensordot(matrix, out, axes=([1], [axis])), 0, axis)
        return SectorAmplitudes(self.totals, np.array(out, dtype=complex))

    def probabilities(self, settings: Sequence[PolarizationSetting | None]) -> np.ndarray:
        return np.abs(self.rotated(settings).amps) ** 2


@dataclass(frozen=True)
class SectorEnsemble:
    entries: tuple[tuple[float, SectorAmplitudes], ...]
    cutoff: int
    tail: float = 0.0

    def __post_init__(self):
        totals = [sector.totals for _, sector in self.entries]
        if len(set(totals)) != len(totals):
            raise ContractViolation("Ensemble sectors must have pairwise distinct totals")
        if any(w < 0 for w, _ in self.entries):
            raise ContractViolation("Ensemble weights must be non-negative")

    @property
    def beams(self) -> int:
        return self.entries[0][1].beams if self.entries else 0

    def total_weight(self) -> float:
        return float(sum(w for w, _ in self.entries))


# ---------------------------------------------------------------------------
# BSV AND ITS BELL FAMILY
# ---------------------------------------------------------------------------

class BellFamily(str, Enum):
    PSI_MINUS = "psi-"
    PSI_PLUS  = "psi+"
    PHI_MINUS = "phi-"
    PHI_PLUS  = "phi+"


@lru_cache(maxsize=None)
def bell_family_sector(kind: BellFamily, n: int) -> SectorAmplitudes:
    """
    n-pair sector generated by the matching pair-creation operator:
      psi∓ : (a†_{H1}a†_{V2} ∓ a†_{V1}a†_{H2})^n, support |n−m, m; m, n−m⟩
      phi± : (a†_{H1}a†_{H2} ± a†_{V1}a†_{V2})^n, support |n−m, m; n−m, m⟩
    """
    if n < 0:
        raise ContractViolation(f"Pair number must be non-negative, got {n}")
    kind = BellFamily(kind)
    m = np.arange(n + 1)
    alternating = np.where(m % 2 == 1, -1.0, 1.0)
    coeffs = (alternating if kind in (BellFamily.PSI_MINUS, BellFamily.PHI_MINUS) else np.ones(n + 1)) / math.sqrt(n + 1)

    amps = np.zeros((n + 1, n + 1), dtype=complex)
    if kind in (BellFamily.PSI_MINUS, BellFamily.PSI_PLUS):
        amps[n - m, m] = coeffs
    else:
        amps[n - m, n - m] = coeffs
    return SectorAmplitudes((n, n), amps, key=("bsv", kind.value, n))


def bsv_sector(n: int) -> SectorAmplitudes:
    """|ψⁿ⟩: the n-pair polarization singlet sector of BSV."""
    return bell_family_sector(BellFamily.PSI_MINUS, n)


def bsv_weights(gamma: float, cutoff: int) -> tuple[np.ndarray, float]:
    """w_n = (n+1)·tanh^{2n}Γ / cosh⁴Γ for n = 0..cutoff, plus the tail mass 1 − Σw_n."""
    if gamma < 0 or cutoff < 0:
        raise ContractViolation(f"Need gamma >= 0 and cutoff >= 0, got ({gamma}, {cutoff})")
    n = np.arange(cutoff + 1)
    if gamma == 0:
        weights = (n == 0).astype(float)
    else:
        log_w = np.log(n + 1.0) + 2.0 * n * math.log(math.tanh(gamma)) - 4.0 * math.log(math.cosh(gamma))
        weights = np.exp(log_w)
    tail = max(0.0, 1.0 - float(np.sum(weights)))
    return weights, tail


def bsv_ensemble(gamma: float, cutoff: int, family: BellFamily = BellFamily.PSI_MINUS) -> SectorEnsemble:
    weights, tail = bsv_weights(gamma, cutoff)
    entries = tuple((float(w), bell_family_sector(family, n)) for n, w in enumerate(weights))
    return SectorEnsemble(entries, cutoff, tail)


# ---------------------------------------------------------------------------
# BGHZ
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BghzCoefficients:
    """c[Q] = amplitude of the normalized triple-Fock ket |Q,Q,Q⟩ in one mode triple."""
    gamma: float
    c: np.ndarray = field(repr=False)
    leakage: float = 0.0

    @property
    def cutoff(self) -> int:
        return len(self.c) - 1


def bghz_coefficients(gamma: float, cutoff: int, max_leakage: float = 1e-8) -> BghzCoefficients:
    """
    Integrates dc_Q/dΓ = Q^{3/2}c_{Q−1} − (Q+1)^{3/2}c_{Q+1} from the vacuum on
    a chain padded past the cutoff. The norm that ends up above the cutoff is
    the reported leakage.
    """
    if gamma < 0 or cutoff < 1:
        raise ContractViolation(f"Need gamma >= 0 and cutoff >= 1, got ({gamma}, {cutoff})")

    size = cutoff + max(10, cutoff // 2) + 1
    start = np.zeros(size)
    start[0] = 1.0
    if gamma == 0:
        return BghzCoefficients(0.0, start[: cutoff + 1].copy(), 0.0)

    hop = np.arange(1, size) ** 1.5

    def rhs(_, c):
        dc = np.zeros_like(c)
        dc[1:] += hop * c[:-1]
        dc[:-1] -= hop * c[1:]
        return dc

    sol = integrate.solve_ivp(rhs, (0.0, gamma), start, method="DOP853", rtol=1e-12, atol=1e-15)
    if not sol.success:
        raise ContractViolation(f"BGHZ integration failed at gamma={gamma}: {sol.message}")

    c = sol.y[:, -1]
    kept = c[: cutoff + 1].copy()
    leakage = max(0.0, 1.0 - float(np.sum(kept ** 2)))
    if leakage > max_leakage:
        raise BghzTruncationError(gamma, cutoff, leakage)
    return BghzCoefficients(float(gamma), kept, leakage)


def bghz_sector(k: int, coeffs: BghzCoefficients) -> tuple[SectorAmplitudes, float]:
    """
    Sector with k photons per beam: Σ_m c_{k−m}c_m |k−m, m⟩^{⊗3}. Returned unit
    norm with the weight separate. A zero-weight sector comes back as the equal
    superposition over m.
    """
    if not 0 <= k <= coeffs.cutoff:
        raise ContractViolation(f"Sector index {k} outside 0..{coeffs.cutoff}")
    m = np.arange(k + 1)
    raw = coeffs.c[k - m] * coeffs.c[m]
    weight = float(np.sum(raw ** 2))
    amplitudes = raw / math.sqrt(weight) if weight > 0 else np.full(k + 1, 1.0 / math.sqrt(k + 1))

    amps = np.zeros((k + 1,) * 3, dtype=complex)
    amps[k - m, k - m, k - m] = amplitudes
    return SectorAmplitudes((k, k, k), amps, key=("bghz", coeffs.gamma, coeffs.cutoff, k)), weight


def bghz_ensemble(coeffs: BghzCoefficients) -> SectorEnsemble:
    entries = tuple((weight, sector) for sector, weight in
                    (bghz_sector(k, coeffs) for k in range(coeffs.cutoff + 1)))
    total = sum(w for w, _ in entries)
    return SectorEnsemble(entries, coeffs.cutoff, max(0.0, 1.0 - total))


# ---------------------------------------------------------------------------
# SINGLE-BEAM STATES
# ---------------------------------------------------------------------------

def fock_product_state(j: int, k: int) -> SectorAmplitudes:
    """|j_H, k_V⟩ as a single-beam sector."""
    if j < 0 or k < 0:
        raise ContractViolation(f"Photon counts must be non-negative, got ({j}, {k})")
    amps = np.zeros(j + k + 1, dtype=complex)
    amps[j] = 1.0
    return SectorAmplitudes((j + k,), amps)
