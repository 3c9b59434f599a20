"""
Module: engine/fock.py
Description: Two-mode Fock-sector arithmetic under passive polarization
             transformations. A measurement basis (i, i⊥) is reached from
             (H, V) by a phase shift on V followed by a rotation:

                 a_i†  =  cosθ·a_H† + sinθ·e^{iφ}·a_V†
                 a_i⊥† = −sinθ·a_H† + cosθ·e^{iφ}·a_V†

             All matrices here re-express an H/V-basis state in the i/i⊥
             basis. Index j always counts photons in the first mode (H or i).
Author: pwnedByJT
"""

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg, special

from engine.errors import ContractViolation


# ---------------------------------------------------------------------------
# SETTINGS
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarizationSetting:
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ContractViolation(f"Setting angles must be finite, got ({self.theta}, {self.phi})")

    def crossed(self) -> "PolarizationSetting":
        """Same analyzer turned by π/2: the i and i⊥ output ports swap."""
        return PolarizationSetting(self.theta + math.pi / 2, self.phi)


BASIS_DA = PolarizationSetting(math.pi / 4, 0.0)
BASIS_RL = PolarizationSetting(-math.pi / 4, 3 * math.pi / 2)
BASIS_HV = PolarizationSetting(0.0, 0.0)

# Stokes components 1, 2, 3
CANONICAL_BASES: tuple[PolarizationSetting, ...] = (BASIS_DA, BASIS_RL, BASIS_HV)


@dataclass(frozen=True)
class ModeSplit:
    j: int
    k: int

    def __post_init__(self):
        if self.j < 0 or self.k < 0:
            raise ContractViolation(f"Photon counts must be non-negative, got ({self.j}, {self.k})")

    @property
    def total(self) -> int:
        return self.j + self.k


@dataclass(frozen=True, eq=False)
class TransformMatrix:
    n: int
    setting: PolarizationSetting
    entries: np.ndarray = field(repr=False)


# ---------------------------------------------------------------------------
# HELPERS
# ---------------------------------------------------------------------------

def _log_factorial(n):
    return special.gammaln(np.asarray(n, dtype=float) + 1.0)


def _log_binomial(n, r):
    return _log_factorial(n) - _log_factorial(r) - _log_factorial(np.asarray(n) - r)


def _signed_power(x: float, powers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(sign, log|.|) of x**powers, with 0**0 == 1."""
    powers = np.asarray(powers)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_mag = np.where(powers == 0, 0.0, powers * math.log(abs(x)) if x != 0 else -np.inf)
    sign = np.where((x < 0) & (powers % 2 == 1), -1.0, 1.0)
    return sign, log_mag


def _check_split(n: int, *indices: int) -> None:
    if n < 0:
        raise ContractViolation(f"Photon number must be non-negative, got {n}")
    for idx in indices:
        if not 0 <= idx <= n:
            raise ContractViolation(f"Split index {idx} outside 0..{n}")


# ---------------------------------------------------------------------------
# SINGLE COEFFICIENTS
# ---------------------------------------------------------------------------

def transform_coefficient(n: int, j_in: int, j_out: int, s: PolarizationSetting) -> complex:
    """
    Amplitude of |j_out, n−j_out⟩ in the new basis for the old-basis input
    |j_in, n−j_in⟩. Closed-form binomial sum over the inverted relation

        a_H† = cosθ·a_i† − sinθ·a_i⊥†,   a_V† = e^{−iφ}(sinθ·a_i† + cosθ·a_i⊥†)

    with factorial ratios in log space. The alternating sum cancels badly for
    large n near θ = π/4; build_transform is the stable route for whole sectors.
    """
    _check_split(n, j_in, j_out)
    p, q = j_in, n - j_in
    c, s_ = math.cos(s.theta), math.sin(s.theta)

    r = np.arange(max(0, j_out - q), min(p, j_out) + 1)
    if r.size == 0:
        return 0j
    t = j_out - r

    c_sign, c_log = _signed_power(c, r + q - t)
    s_sign, s_log = _signed_power(s_, p - r + t)
    sign = np.where((p - r) % 2 == 1, -1.0, 1.0) * c_sign * s_sign

    norm = 0.5 * (_log_factorial(j_out) + _log_factorial(n - j_out) - _log_factorial(p) - _log_factorial(q))
    log_terms = _log_binomial(p, r) + _log_binomial(q, t) + c_log + s_log + norm
    total = float(np.sum(sign * np.exp(log_terms)))
    return total * cmath.exp(-1j * q * s.phi)


# ---------------------------------------------------------------------------
# SECTOR MATRICES
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _rotation_spectrum(n: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Eigen-decomposition of the Hermitian generator H = −i(a_1†a_2 − a_2†a_1)
    restricted to the n-photon sector, so that R(θ) = exp(iθH).
    """
    j = np.arange(n)
    hop = np.sqrt((j + 1.0) * (n - j))
    generator = np.zeros((n + 1, n + 1), dtype=complex)
    generator[j + 1, j] = -1j * hop
    generator[j, j + 1] = 1j * hop
    eigvals, eigvecs = linalg.eigh(generator)
    # spectrum is exactly n, n−2, ..., −n
    eigvals = np.round(eigvals)
    eigvecs.setflags(write=False)
    eigvals.setflags(write=False)
    return eigvals, eigvecs


@lru_cache(maxsize=None)
def _cached_transform(n: int, theta: float, phi: float) -> np.ndarray:
    phase = np.exp(-1j * phi * (n - np.arange(n + 1)))
    if theta == 0.0:
        entries = np.diag(phase)
    else:
        eigvals, eigvecs = _rotation_spectrum(n)
        rotation = (eigvecs * np.exp(1j * theta * eigvals)) @ eigvecs.conj().T
        entries = rotation * phase[np.newaxis, :]
    entries.setflags(write=False)
    return entries


def build_transform(n: int, s: PolarizationSetting) -> TransformMatrix:
    """(n+1)×(n+1) matrix M[j_out][j_in]; cached per (n, θ, φ)."""
    if n < 0:
        raise ContractViolation(f"Photon number must be non-negative, got {n}")
    return TransformMatrix(n, s, _cached_transform(n, float(s.theta), float(s.phi)))


def warm_transforms(cutoff: int, settings) -> int:
    """Fill the transform cache for n = 0..cutoff. Returns the number of matrices built."""
    built = 0
    for s in settings:
        for n in range(cutoff + 1):
            build_transform(n, s)
            built += 1
    return built