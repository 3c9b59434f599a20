"""
Module: engine/observables.py
Description: Outcome-value maps for the Stokes-like observables. Every
             observable here is diagonal in the photon-number basis of its
             analyzer, so an expectation is a sum of |amplitude|² times a
             value picked from the split (j, k) = (n_i, n_i⊥).
Author: pwnedByJT
"""

import math
from enum import Enum
from functools import lru_cache

import numpy as np

from engine.errors import ContractViolation
from engine.fock import CANONICAL_BASES, ModeSplit, PolarizationSetting
from engine.states import SectorAmplitudes


class ObservableKind(str, Enum):
    STANDARD         = "standard"
    NORMALIZED       = "normalized"
    NORMALIZED_MINUS = "normalized_minus"
    SIGN             = "sign"
    SIGN_MINUS       = "sign_minus"
    RATE             = "rate"
    PROJECTOR        = "projector"


# (min, max) attainable outcome per kind; STANDARD is unbounded
VALUE_RANGE: dict[ObservableKind, tuple[float, float]] = {
    ObservableKind.STANDARD:         (-math.inf, math.inf),
    ObservableKind.NORMALIZED:       (-1.0, 1.0),
    ObservableKind.NORMALIZED_MINUS: (-1.0, 1.0),
    ObservableKind.SIGN:             (-1.0, 1.0),
    ObservableKind.SIGN_MINUS:       (-1.0, 1.0),
    ObservableKind.RATE:             (0.0, 1.0),
    ObservableKind.PROJECTOR:        (0.0, 1.0),
}

_VACUUM_SUBTRACTED = {
    ObservableKind.SIGN:       ObservableKind.SIGN_MINUS,
    ObservableKind.NORMALIZED: ObservableKind.NORMALIZED_MINUS,
}


def vacuum_subtracted(kind: ObservableKind) -> ObservableKind:
    """sign → sign_minus, normalized → normalized_minus; other kinds pass through."""
    kind = ObservableKind(kind)
    return _VACUUM_SUBTRACTED.get(kind, kind)


# ---------------------------------------------------------------------------
# VALUE MAPS
# ---------------------------------------------------------------------------

def _values(kind: ObservableKind, j: np.ndarray, k: np.ndarray) -> np.ndarray:
    j = np.asarray(j, dtype=float)
    k = np.asarray(k, dtype=float)
    total = j + k
    vacuum = total == 0
    safe_total = np.where(vacuum, 1.0, total)

    if kind is ObservableKind.STANDARD:
        return j - k
    if kind is ObservableKind.NORMALIZED:
        return np.where(vacuum, 0.0, (j - k) / safe_total)
    if kind is ObservableKind.NORMALIZED_MINUS:
        return np.where(vacuum, -1.0, (j - k) / safe_total)
    if kind is ObservableKind.SIGN:
        return np.sign(j - k)
    if kind is ObservableKind.SIGN_MINUS:
        return np.where(vacuum, -1.0, np.sign(j - k))
    if kind is ObservableKind.RATE:
        return np.where(vacuum, 0.0, j / safe_total)
    if kind is ObservableKind.PROJECTOR:
        return (j > k).astype(float)
    raise ContractViolation(f"Unknown observable kind: {kind}")


def outcome_value(kind: ObservableKind, split: ModeSplit) -> float:
    return float(_values(ObservableKind(kind), split.j, split.k))


@lru_cache(maxsize=64)
def value_table(kind: ObservableKind, n_max: int) -> np.ndarray:
    """V[j][k] = outcome_value(kind, (j, k)) for 0 ≤ j, k ≤ n_max."""
    grid = np.arange(n_max + 1)
    table = _values(ObservableKind(kind), grid[:, np.newaxis], grid[np.newaxis, :])
    table.setflags(write=False)
    return table


def sector_values(table: np.ndarray, n: int) -> np.ndarray:
    """Values along the anti-diagonal j + k = n of a split table, indexed by j."""
    j = np.arange(n + 1)
    return table[j, n - j]


# ---------------------------------------------------------------------------
# EXPECTATIONS
# ---------------------------------------------------------------------------

def expectation(sector: SectorAmplitudes, beam: int, setting: PolarizationSetting,
                kind: ObservableKind) -> float:
    """Single-beam expectation, marginalizing every other beam."""
    if not 0 <= beam < sector.beams:
        raise ContractViolation(f"Beam {beam} outside 0..{sector.beams - 1}")
    settings = [None] * sector.beams
    settings[beam] = setting
    probs = sector.probabilities(settings)
    other_axes = tuple(ax for ax in range(sector.beams) if ax != beam)
    marginal = probs.sum(axis=other_axes) if other_axes else probs
    n = sector.totals[beam]
    values = sector_values(value_table(ObservableKind(kind), n), n)
    return float(marginal @ values)


def stokes_vector(sector: SectorAmplitudes, kind: ObservableKind) -> tuple[float, float, float]:
    if sector.beams != 1:
        raise ContractViolation("Stokes vectors are defined for single-beam sectors")
    return tuple(expectation(sector, 0, basis, kind) for basis in CANONICAL_BASES)


def stokes_vector_norm(sector: SectorAmplitudes, kind: ObservableKind) -> float:
    return math.sqrt(sum(v * v for v in stokes_vector(sector, kind)))


def rotate_state(sector: SectorAmplitudes, angle: float) -> SectorAmplitudes:
    """Active SO(2) rotation of a single-beam state's polarization by `angle`."""
    if sector.beams != 1:
        raise ContractViolation("rotate_state expects a single-beam sector")
    return sector.rotated([PolarizationSetting(-angle, 0.0)])
