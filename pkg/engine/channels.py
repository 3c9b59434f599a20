"""
Module: engine/channels.py
Description: Detector loss as independent binomial thinning in front of each
             perfect detector, and the white-noise mixture used for the
             noise-robustness sweeps.
Author: pwnedByJT
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from engine.errors import ContractViolation
from engine.observables import VALUE_RANGE, ObservableKind, sector_values, value_table


@dataclass(frozen=True, eq=False)
class LossySplitValueTable:
    eta: float
    kind: ObservableKind
    n_max: int
    f: np.ndarray = field(repr=False)

    def __post_init__(self):
        low, high = VALUE_RANGE[self.kind]
        if self.f.size and (self.f.min() < low - 1e-9 or self.f.max() > high + 1e-9):
            raise ContractViolation(f"{self.kind.value} table at eta={self.eta} leaves [{low}, {high}]")

    def sector_vector(self, n: int) -> np.ndarray:
        """f(j, n−j) for j = 0..n."""
        if n > self.n_max:
            raise ContractViolation(f"Sector total {n} exceeds table size {self.n_max}")
        return sector_values(self.f, n)


def _check_eta(eta: float) -> None:
    if not 0.0 <= eta <= 1.0:
        raise ContractViolation(f"Detection efficiency must lie in [0, 1], got {eta}")


def thinning_pmf(k: int, eta: float) -> np.ndarray:
    """p(κ|k) = C(k,κ)·η^κ·(1−η)^{k−κ} for κ = 0..k."""
    _check_eta(eta)
    if k < 0:
        raise ContractViolation(f"Photon number must be non-negative, got {k}")
    return stats.binom.pmf(np.arange(k + 1), k, eta)


@lru_cache(maxsize=32)
def _thinning_matrix(eta: float, n_max: int) -> np.ndarray:
    """B[j][a] = p(a|j), zero above the diagonal."""
    grid = np.arange(n_max + 1)
    matrix = stats.binom.pmf(grid[np.newaxis, :], grid[:, np.newaxis], eta)
    matrix = np.nan_to_num(matrix)
    matrix.setflags(write=False)
    return matrix


@lru_cache(maxsize=256)
def lossy_value_table(kind: ObservableKind, eta: float, n_max: int) -> LossySplitValueTable:
    """f[j][k] = Σ_a Σ_b p(a|j)·p(b|k)·value(a, b). At η = 1 this is the lossless table itself."""
    _check_eta(eta)
    kind = ObservableKind(kind)
    exact = value_table(kind, n_max)
    if eta == 1.0:
        return LossySplitValueTable(1.0, kind, n_max, exact)
    thinning = _thinning_matrix(float(eta), n_max)
    f = thinning @ exact @ thinning.T
    f.setflags(write=False)
    return LossySplitValueTable(float(eta), kind, n_max, f)


def table_size(n: int) -> int:
    """Table sizes are rounded up to multiples of 50 so sweeps share a handful of tables."""
    return max(50, -(-n // 50) * 50)


def noise_mixture_lhs(lhs_signal: float, lhs_noise: float, q: float) -> float:
    """LHS of q·ρ_signal + (1−q)·ρ_noise; expectations are linear in the state."""
    if not 0.0 <= q <= 1.0:
        raise ContractViolation(f"Mixture parameter q must lie in [0, 1], got {q}")
    return q * lhs_signal + (1.0 - q) * lhs_noise
