"""Sample-level statistics: covariances, squared correlations, the score
statistic, the max statistic, the level-alpha test, and the exact
I / II / III decomposition of the centered statistic around a known
population correlation matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import theory
from .errors import DegenerateColumn, DimensionMismatch, DomainError, IndexOutOfRange
from .matrix import CorrMatrix, frobenius_signal


class CovMode(enum.Enum):
    """Covariance convention.

    KNOWN_ZERO_MEAN: divisor n, no mean subtraction (the convention all
    exact decomposition formulas are written in).  SAMPLE_CENTERED:
    subtract column means, divisor n - 1 (the usual Pearson form; the two
    give the same squared-correlation distribution under normality).
    """

    KNOWN_ZERO_MEAN = "zero-mean"
    SAMPLE_CENTERED = "centered"


@dataclass(frozen=True)
class DataMatrix:
    """n samples (rows) by m variables (columns) of finite observations."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 2:
            raise ValueError("data must be a 2-D array of samples x variables")
        if arr.shape[0] < 1 or arr.shape[1] < 2:
            raise ValueError("data needs at least 1 sample and 2 variables")
        if not np.all(np.isfinite(arr)):
            raise ValueError("data entries must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_csv(cls, path, header: bool = False) -> "DataMatrix":
        arr = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
        return cls(arr)


@dataclass(frozen=True)
class TestReport:
    """Outcome of the level-alpha independence test."""

    t_value: float
    centered: float
    z_value: float
    p_value: float
    alpha: float
    reject: bool

    def to_json_obj(self) -> dict:
        return {
            "t_value": self.t_value,
            "centered": self.centered,
            "z_value": self.z_value,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject": self.reject,
        }


@dataclass(frozen=True)
class Decomposition:
    """Aggregated decomposition terms and the reconstruction residual.

    term_i is the cross-sample (martingale) component, term_ii the
    same-sample component split as term_ii1 + term_ii2, and term_iii the
    per-pair Taylor residual, so the identity
    T - ||R - I||_F^2 / 2 = I + II + III holds by construction; residual
    reports its floating-point defect.
    """

    term_i: float
    term_ii: float
    term_ii1: float
    term_ii2: float
    term_iii: float
    residual: float


def _cov_matrix(values: np.ndarray, mode: CovMode) -> np.ndarray:
    n = values.shape[0]
    if mode is CovMode.KNOWN_ZERO_MEAN:
        return values.T @ values / n
    if n < 2:
        raise DomainError("centered covariances need at least 2 samples")
    centered = values - values.mean(axis=0)
    return centered.T @ centered / (n - 1)


def _check_index(data: DataMatrix, *cols: int) -> None:
    for c in cols:
        if c < 0 or c >= data.m:
            raise IndexOutOfRange(f"column {c} outside [0, {data.m})")


def _check_dims(data: DataMatrix, r: CorrMatrix) -> None:
    if data.m != r.m:
        raise DimensionMismatch(f"data has {data.m} columns, matrix is {r.m} x {r.m}")


def _degenerate(diag: np.ndarray) -> None:
    bad = np.flatnonzero(diag == 0.0)
    if bad.size:
        raise DegenerateColumn(bad)


def sample_cov(data: DataMatrix, p: int, q: int, mode: CovMode) -> float:
    """Covariance of columns p and q under the chosen convention."""
    _check_index(data, p, q)
    x = data.values
    if mode is CovMode.KNOWN_ZERO_MEAN:
        return float(x[:, p] @ x[:, q] / data.n)
    if data.n < 2:
        raise DomainError("centered covariances need at least 2 samples")
    xp = x[:, p] - x[:, p].mean()
    xq = x[:, q] - x[:, q].mean()
    return float(xp @ xq / (data.n - 1))


def rho_hat_sq(data: DataMatrix, p: int, q: int, mode: CovMode) -> float:
    """Squared sample correlation S_pq^2 / (S_pp S_qq)."""
    _check_index(data, p, q)
    spp = sample_cov(data, p, p, mode)
    sqq = sample_cov(data, q, q, mode)
    bad = [c for c, s in ((p, spp), (q, sqq)) if s == 0.0]
    if bad:
        raise DegenerateColumn(bad)
    spq = sample_cov(data, p, q, mode)
    return spq * spq / (spp * sqq)


def _rho_hat_sq_matrix(values: np.ndarray, mode: CovMode) -> np.ndarray:
    s = _cov_matrix(values, mode)
    d = np.diag(s)
    _degenerate(d)
    return (s * s) / np.outer(d, d)


def statistic_t(data: DataMatrix, mode: CovMode) -> float:
    """Sum of squared sample correlations over all pairs p < q."""
    r2 = _rho_hat_sq_matrix(data.values, mode)
    iu = np.triu_indices(data.m, 1)
    return float(np.sum(r2[iu]))


def max_statistic(data: DataMatrix, mode: CovMode) -> float:
    """Largest squared sample correlation over all pairs p < q."""
    r2 = _rho_hat_sq_matrix(data.values, mode)
    iu = np.triu_indices(data.m, 1)
    return float(np.max(r2[iu]))


def report_from_statistic(t_value: float, n: int, m: int, alpha: float) -> TestReport:
    """Build the level-alpha report from an already-computed statistic.

    Rejects iff T - m(m-1)/(2n) strictly exceeds (m/n) z_alpha.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie strictly inside (0, 1)")
    z_alpha = theory.normal_quantile(alpha)
    centered = t_value - m * (m - 1) / (2.0 * n)
    z_value = n * centered / m
    return TestReport(
        t_value=t_value,
        centered=centered,
        z_value=z_value,
        p_value=theory.normal_tail(z_value),
        alpha=alpha,
        reject=bool(centered > (m / n) * z_alpha),
    )


def rao_score_test(data: DataMatrix, alpha: float, mode: CovMode) -> TestReport:
    """Level-alpha independence test based on the sum of squared correlations."""
    return report_from_statistic(statistic_t(data, mode), data.n, data.m, alpha)


def _centered_products(values: np.ndarray, rho: np.ndarray):
    """Per-pair sums of c_i = X_pi X_qi - rho_pq and of c_i^2, as matrices."""
    n = values.shape[0]
    g = values.T @ values
    sq = values * values
    h = sq.T @ sq
    sum_c = g - n * rho
    sum_c2 = h - 2.0 * rho * g + n * rho * rho
    return sum_c, sum_c2


def _i_matrix(values: np.ndarray, rho: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    if n == 1:
        return np.zeros_like(rho)  # empty cross-sample sum
    sum_c, sum_c2 = _centered_products(values, rho)
    return (sum_c * sum_c - sum_c2) / float(n) ** 2


def term_i(data: DataMatrix, r: CorrMatrix) -> float:
    """Cross-sample component: (2/n^2) sum_{p<q} sum_{i<j} c_i c_j.

    Computed as ((sum_i c_i)^2 - sum_i c_i^2) / n^2 per pair, avoiding the
    O(n^2) double loop.
    """
    _check_dims(data, r)
    i_mat = _i_matrix(data.values, r.rho)
    iu = np.triu_indices(data.m, 1)
    return float(np.sum(i_mat[iu]))


def martingale_differences(data: DataMatrix, r: CorrMatrix) -> np.ndarray:
    """The n+1 martingale differences Y_0..Y_n whose sum is term_i.

    Y_0 = Y_1 = 0 and, for samples i >= 2 (1-based),
    Y_i = (2/n^2) sum_{p<q} c_i (c_1 + ... + c_{i-1}).
    """
    _check_dims(data, r)
    n, m = data.n, data.m
    iu = np.triu_indices(m, 1)
    y = np.zeros(n + 1)
    running = np.zeros(iu[0].size)
    scale = 2.0 / float(n) ** 2
    for i in range(1, n + 1):
        xi = data.values[i - 1]
        ci = (np.outer(xi, xi) - r.rho)[iu]
        if i >= 2:
            y[i] = scale * float(ci @ running)
        running += ci
    return y


# Multi-orders (l1, l2, l3) with l3 in {0, 1} and 1 <= |l| <= 4: the only
# surviving Taylor directions besides the l3 = 2 family, with coefficient
# (-1)^(l1+l2) * rho^(2-l3) * (2 if l3 == 1 else 1).
_LAMBDA_LOW = [
    (l1, l2, l3)
    for l3 in (0, 1)
    for l1 in range(5)
    for l2 in range(5)
    if 1 <= l1 + l2 + l3 <= 4
]


def _pair_terms(values: np.ndarray, rho: np.ndarray):
    """Per-pair matrices (i_mat, ii1_mat, ii2_mat) of the decomposition."""
    n = values.shape[0]
    _, sum_c2 = _centered_products(values, rho)
    n2 = float(n) ** 2

    i_mat = _i_matrix(values, rho)
    sq_term = sum_c2 / n2

    s = values.T @ values / n
    sbar = s - rho
    u = np.diag(sbar)[:, None] + np.zeros_like(rho)   # Sbar_pp by row
    v = np.diag(sbar)[None, :] + np.zeros_like(rho)   # Sbar_qq by column
    w2 = sbar * sbar                                  # Sbar_pq^2

    ii1_mat = sq_term + (-u - v + u * u + v * v) * w2
    ii2_mat = u * v * w2
    for l1, l2, l3 in _LAMBDA_LOW:
        sign = -1.0 if (l1 + l2) % 2 else 1.0
        mult = 2.0 if l3 == 1 else 1.0
        coeff = sign * mult * rho ** (2 - l3)
        term = coeff * u ** l1 * v ** l2
        if l3 == 1:
            term = term * sbar
        ii2_mat = ii2_mat + term
    return i_mat, ii1_mat, ii2_mat, s


def term_ii(data: DataMatrix, r: CorrMatrix):
    """Same-sample component and its (ii1, ii2) split, aggregated over pairs."""
    _check_dims(data, r)
    _, ii1_mat, ii2_mat, _ = _pair_terms(data.values, r.rho)
    iu = np.triu_indices(data.m, 1)
    ii1 = float(np.sum(ii1_mat[iu]))
    ii2 = float(np.sum(ii2_mat[iu]))
    return ii1 + ii2, ii1, ii2


def decompose(data: DataMatrix, r: CorrMatrix) -> Decomposition:
    """Exact decomposition of the centered statistic around a known R.

    Per pair, the third term is the exact algebraic residual
    (rho_hat^2 - rho^2) - i - ii, so the aggregate identity holds by
    construction; ``residual`` reports the floating-point defect of
    T - ||R - I||_F^2 / 2 - (I + II + III).
    """
    _check_dims(data, r)
    values, rho = data.values, r.rho
    i_mat, ii1_mat, ii2_mat, s = _pair_terms(values, rho)
    d = np.diag(s)
    _degenerate(d)
    r2_hat = (s * s) / np.outer(d, d)
    iii_mat = (r2_hat - rho * rho) - i_mat - (ii1_mat + ii2_mat)

    iu = np.triu_indices(data.m, 1)
    t_value = float(np.sum(r2_hat[iu]))
    t_i = float(np.sum(i_mat[iu]))
    t_ii1 = float(np.sum(ii1_mat[iu]))
    t_ii2 = float(np.sum(ii2_mat[iu]))
    t_iii = float(np.sum(iii_mat[iu]))
    signal = frobenius_signal(r)
    residual = abs(t_value - 0.5 * signal * signal - (t_i + t_ii1 + t_ii2 + t_iii))
    return Decomposition(
        term_i=t_i,
        term_ii=t_ii1 + t_ii2,
        term_ii1=t_ii1,
        term_ii2=t_ii2,
        term_iii=t_iii,
        residual=residual,
    )


def max_abs_centered_cov(data: DataMatrix, r: CorrMatrix) -> float:
    """Largest |S_pq - rho_pq| over all p, q (diagonal included), zero-mean mode."""
    _check_dims(data, r)
    s = _cov_matrix(data.values, CovMode.KNOWN_ZERO_MEAN)
    return float(np.max(np.abs(s - r.rho)))
