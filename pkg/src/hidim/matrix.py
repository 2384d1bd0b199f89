"""Correlation matrices, dependency-signal size, and Cholesky support.

Dense storage throughout: the statistic itself is a dense O(m^2) sum, so
m stays at experiment scale and O(m^2) memory is acceptable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NotPositiveSemidefinite

# Jitter ladder for numerically rank-deficient matrices (e.g. equicorrelation
# near its PSD boundary); recorded in the factor for reproducibility.
JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8)

# Relative slack on the theta-class threshold so the inclusive boundary is
# robust to the 1e-9 calibration tolerance of constructed alternatives.
_THETA_SLACK = 1e-9


@dataclass(frozen=True)
class CorrMatrix:
    """An m x m correlation matrix with unit diagonal.

    The constructor enforces structure (square, finite, symmetric to 1e-12,
    unit diagonal to 1e-12) and then stores an exactly symmetrized read-only
    copy.  Positive semidefiniteness is enforced where it matters, by
    ``cholesky``.
    """

    rho: np.ndarray

    def __post_init__(self):
        arr = np.array(self.rho, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValueError("correlation matrix must be square and non-empty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("correlation matrix entries must be finite")
        if np.max(np.abs(arr - arr.T)) > 1e-12:
            raise ValueError("correlation matrix must be symmetric")
        if np.max(np.abs(np.diag(arr) - 1.0)) > 1e-12:
            raise ValueError("correlation matrix must have unit diagonal")
        arr = 0.5 * (arr + arr.T)
        np.fill_diagonal(arr, 1.0)
        arr.flags.writeable = False
        object.__setattr__(self, "rho", arr)

    @property
    def m(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def identity(cls, m: int) -> "CorrMatrix":
        return cls(np.eye(m))

    # -- serialization: CSV of m rows x m columns (no header), and a JSON
    #    object {"m": int, "rho": [[...]]} -------------------------------

    def to_csv(self, path) -> None:
        np.savetxt(path, self.rho, delimiter=",", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "CorrMatrix":
        arr = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls(arr)

    def to_json_obj(self) -> dict:
        return {"m": self.m, "rho": self.rho.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj: dict) -> "CorrMatrix":
        arr = np.asarray(obj["rho"], dtype=float)
        if int(obj["m"]) != arr.shape[0]:
            raise ValueError("JSON field 'm' disagrees with the rho grid")
        return cls(arr)

    @classmethod
    def from_json(cls, text: str) -> "CorrMatrix":
        return cls.from_json_obj(json.loads(text))


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor with the diagonal jitter that was needed."""

    lower: np.ndarray
    jitter_applied: float = 0.0

    def __post_init__(self):
        arr = np.array(self.lower, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "lower", arr)

    @property
    def m(self) -> int:
        return self.lower.shape[0]


def frobenius_signal(r: CorrMatrix) -> float:
    """Frobenius norm of R - I: sqrt(sum of all squared off-diagonal entries)."""
    off = r.rho - np.eye(r.m)
    return float(np.sqrt(np.sum(off * off)))


def in_theta(r: CorrMatrix, b: float, n: int) -> bool:
    """Whether the signal clears the alternative-class floor b * sqrt(m/n).

    The boundary is inclusive; a 1e-9 relative slack absorbs construction
    rounding of calibrated alternatives.
    """
    if b <= 0.0:
        raise ValueError("b must be positive")
    if n < 1:
        raise ValueError("n must be a positive integer")
    threshold = b * np.sqrt(r.m / n)
    return bool(frobenius_signal(r) >= threshold * (1.0 - _THETA_SLACK))


def cholesky(r: CorrMatrix) -> CholeskyFactor:
    """Lower Cholesky factor of R, retrying up the jitter ladder.

    Raises NotPositiveSemidefinite if R + 1e-8 * I still fails to factor.
    """
    for jitter in JITTER_LADDER:
        target = r.rho if jitter == 0.0 else r.rho + jitter * np.eye(r.m)
        try:
            lower = np.linalg.cholesky(target)
        except np.linalg.LinAlgError:
            continue
        return CholeskyFactor(lower=lower, jitter_applied=jitter)
    raise NotPositiveSemidefinite(
        f"matrix is not positive semidefinite (max jitter {JITTER_LADDER[-1]:g} failed)"
    )
