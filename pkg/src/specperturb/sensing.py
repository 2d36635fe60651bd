"""Gaussian measurement operators and empirical restricted-isometry constants."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .affinity import DataMatrix, pairwise_sqdist
from .numkernel import SeededRng, gaussian_matrix


@dataclass(frozen=True)
class MeasurementOperator:
    """Applies ``scale * phi`` to each data row.

    Built from a seed, ``phi`` has standard normal entries and ``scale`` is
    1/sqrt(m). :meth:`identity` gives an exact identity map for testing.
    """

    phi: np.ndarray
    m: int
    n: int
    scale: float
    seed: Optional[int] = None

    def __post_init__(self):
        if self.phi.shape != (self.m, self.n):
            raise ValueError(f"phi has shape {self.phi.shape}, expected ({self.m}, {self.n})")

    @classmethod
    def from_seed(cls, m: int, n: int, seed: int) -> "MeasurementOperator":
        phi = gaussian_matrix(m, n, SeededRng(seed))
        phi.setflags(write=False)
        return cls(phi=phi, m=m, n=n, scale=1.0 / math.sqrt(m), seed=int(seed))

    @classmethod
    def identity(cls, n: int) -> "MeasurementOperator":
        phi = np.eye(n)
        phi.setflags(write=False)
        return cls(phi=phi, m=n, n=n, scale=1.0, seed=None)

    @property
    def matrix(self) -> np.ndarray:
        return self.scale * self.phi

    def describe(self) -> dict:
        return {"m": self.m, "n": self.n, "seed": self.seed,
                "kind": "gaussian" if self.seed is not None else "identity"}


def measure(X, op: MeasurementOperator) -> DataMatrix:
    """Row i of the result is op applied to row i of ``X``; labels carried over."""
    if not isinstance(X, DataMatrix):
        X = DataMatrix(X)
    if X.n != op.n:
        raise ValueError(f"operator expects dimension {op.n}, data has {X.n}")
    Y = X.X @ op.phi.T
    if op.scale != 1.0:
        Y = op.scale * Y
    return X.with_X(Y)


@dataclass(frozen=True)
class RipEstimate:
    delta_emp: float
    worst_pair: Tuple[int, int]
    pairs_checked: int
    pairs_skipped: int = 0


def distortion_ratios(X, op: MeasurementOperator):
    """Squared-distance ratios over the upper triangle, plus the zero-distance mask."""
    if not isinstance(X, DataMatrix):
        X = DataMatrix(X)
    d_orig = pairwise_sqdist(X)
    d_meas = pairwise_sqdist(measure(X, op))
    iu = np.triu_indices(X.N, 1)
    a, b = d_orig[iu], d_meas[iu]
    zero = a == 0.0
    ratio = np.where(zero, 1.0, b / np.where(zero, 1.0, a))
    return iu, ratio, zero


def empirical_rip_delta(X, op: MeasurementOperator) -> RipEstimate:
    """Smallest delta with (1-delta)|d|^2 <= |op d|^2 <= (1+delta)|d|^2 over row differences."""
    iu, ratio, zero = distortion_ratios(X, op)
    checked = int((~zero).sum())
    if checked == 0:
        raise ValueError("all rows are identical; no difference vectors to check")
    skipped = int(zero.sum())
    if skipped:
        warnings.warn(f"{skipped} identical row pairs skipped", RuntimeWarning, stacklevel=2)
    dev = np.where(zero, -1.0, np.abs(ratio - 1.0))
    w = int(np.argmax(dev))
    return RipEstimate(delta_emp=float(dev[w]), worst_pair=(int(iu[0][w]), int(iu[1][w])),
                       pairs_checked=checked, pairs_skipped=skipped)


def measurement_estimate(s: int, n: int, eps: float, c: float = 1.0) -> float:
    """c * (2s / eps^2) * ln(n / (eps^2 * 2s)) before rounding and clamping."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if s < 1 or n <= s:
        raise ValueError(f"need 1 <= s < n, got s={s}, n={n}")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    two_s = 2 * s
    return c * (two_s / eps ** 2) * math.log(n / (eps ** 2 * two_s))


def required_measurements(s: int, n: int, eps: float, c: float = 1.0) -> int:
    """Measurement count for pairwise distortion eps on s-sparse data, clamped to [1, n].

    Differences of s-sparse vectors are 2s-sparse, hence the 2s.
    """
    m = math.ceil(measurement_estimate(s, n, eps, c))
    return int(min(max(m, 1), n))
