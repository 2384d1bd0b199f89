"""Monte Carlo experiment engine: null calibration, power curves against
the asymptotic prediction, and oracle checks of the exact moment formulas.

Trials are embarrassingly parallel: each is a pure function of the config
and its trial index (counter-based streams), results land in pre-sized
slots indexed by trial, and reductions run in fixed trial order, so
reports are bitwise identical for any worker count.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, Unachievable
from .generators import (AlternativeFamily, Seed, _uniform_open,
                         calibrate_to_theta, sample_gaussian)
from .matrix import CorrMatrix, cholesky
from .moments import expected_ii1, kernel_expectations, var_i_exact
from .stats import CovMode, DataMatrix, decompose, statistic_t, term_i
from .theory import asymptotic_power, normal_cdf, normal_quantile
from . import kernels as _kernels

_RESIDUAL_RTOL = 1e-9


@dataclass(frozen=True)
class SimConfig:
    """Full description of a simulation run."""

    m: int
    n: int
    trials: int
    alpha: float
    seed: Seed
    family: AlternativeFamily = field(default_factory=AlternativeFamily.equicorrelation)
    b_grid: tuple = ()
    cov_mode: CovMode = CovMode.KNOWN_ZERO_MEAN
    workers: int = 1

    def validate(self) -> None:
        if self.m < 2 or self.n < 1:
            raise ConfigError("need m >= 2 and n >= 1")
        if self.trials < 100:
            raise ConfigError("statistical runs need at least 100 trials")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie strictly inside (0, 1)")
        if self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        if any(b < 0 for b in self.b_grid):
            raise ConfigError("b grid values must be nonnegative")
        if list(self.b_grid) != sorted(self.b_grid):
            raise ConfigError("b grid must be sorted ascending")

    def to_json_obj(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "trials": self.trials,
            "alpha": self.alpha,
            "seed": self.seed.master,
            "family": self.family.label,
            "b_grid": list(self.b_grid),
            "cov_mode": self.cov_mode.value,
            "workers": self.workers,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SimConfig":
        return cls(
            m=int(obj["m"]),
            n=int(obj["n"]),
            trials=int(obj["trials"]),
            alpha=float(obj["alpha"]),
            seed=Seed(int(obj["seed"])),
            family=AlternativeFamily.parse(obj.get("family", "equicorrelation")),
            b_grid=tuple(float(b) for b in obj.get("b_grid", ())),
            cov_mode=CovMode(obj.get("cov_mode", "zero-mean")),
            workers=int(obj.get("workers", 1)),
        )


@dataclass(frozen=True)
class PowerPoint:
    """One grid cell of a power experiment."""

    b: float
    m: int
    n: int
    trials: int
    empirical_power: Optional[float]
    mc_stderr: Optional[float]
    predicted_power: float
    skipped: bool = False


@dataclass(frozen=True)
class NullReport:
    """Null-calibration outcome at level alpha."""

    empirical_size: float
    ks_statistic: float
    z_samples_path: Optional[str]
    config: SimConfig
    z_values: np.ndarray

    def to_json_obj(self) -> dict:
        return {
            "version": __version__,
            "config": self.config.to_json_obj(),
            "empirical_size": self.empirical_size,
            "ks_statistic": self.ks_statistic,
            "z_samples_path": self.z_samples_path,
        }


@dataclass(frozen=True)
class MomentCheck:
    """One Monte Carlo estimate against its exact value."""

    name: str
    mc_value: float
    exact: float
    stderr: float
    z_score: float

    @property
    def passed(self) -> bool:
        return abs(self.z_score) <= 3.0

    def to_json_obj(self) -> dict:
        return {
            "name": self.name,
            "mc_value": self.mc_value,
            "exact": self.exact,
            "stderr": self.stderr,
            "z_score": self.z_score,
            "passed": self.passed,
        }


def _map_trials(fn: Callable[[int], object], trials: int, workers: int) -> list:
    out = [None] * trials
    if workers <= 1:
        for t in range(trials):
            out[t] = fn(t)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for t, value in enumerate(pool.map(fn, range(trials))):
                out[t] = value
    return out


def _checked_statistic(data: DataMatrix, r: CorrMatrix, mode: CovMode) -> float:
    """Statistic for one trial, with the decomposition identity enforced
    whenever the generating R is known and the zero-mean convention applies."""
    t_value = statistic_t(data, mode)
    if mode is CovMode.KNOWN_ZERO_MEAN:
        dec = decompose(data, r)
        if dec.residual > _RESIDUAL_RTOL * max(1.0, abs(t_value)):
            raise RuntimeError(
                f"decomposition identity violated: residual {dec.residual:.3e} "
                f"for |T| = {abs(t_value):.3e}")
    return t_value


def ks_statistic_vs_normal(values: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance of a sample against the standard normal."""
    z = np.sort(np.asarray(values, dtype=float))
    size = z.size
    cdf = normal_cdf(z)
    grid = np.arange(1, size + 1) / size
    return float(max(np.max(grid - cdf), np.max(cdf - (grid - 1.0 / size))))


def run_null(config: SimConfig, z_samples_path: Optional[str] = None) -> NullReport:
    """Null calibration: empirical size at level alpha and the KS distance
    of the standardized statistic n (T - m(m-1)/(2n)) / m to the normal."""
    config.validate()
    m, n = config.m, config.n
    factor = cholesky(CorrMatrix.identity(m))
    identity = CorrMatrix.identity(m)

    def one(trial: int) -> float:
        data = sample_gaussian(factor, n, config.seed, trial)
        return _checked_statistic(data, identity, config.cov_mode)

    t_values = np.array(_map_trials(one, config.trials, config.workers))
    centering = m * (m - 1) / (2.0 * n)
    z_values = n * (t_values - centering) / m
    z_alpha = normal_quantile(config.alpha)
    rejections = (t_values - centering) > (m / n) * z_alpha
    empirical_size = float(np.mean(rejections))
    ks = ks_statistic_vs_normal(z_values)
    if z_samples_path is not None:
        np.savetxt(z_samples_path, z_values, fmt="%.17g")
    return NullReport(
        empirical_size=empirical_size,
        ks_statistic=ks,
        z_samples_path=z_samples_path,
        config=config,
        z_values=z_values,
    )


def run_power_curve(config: SimConfig) -> List[PowerPoint]:
    """Empirical power across the b grid against the asymptotic prediction.

    Unachievable grid points are reported as skipped, not fatal.  The
    prediction is an m, n -> infinity limit; finite-sample agreement
    windows are engineering tolerances, not derived error bounds.
    """
    config.validate()
    m, n = config.m, config.n
    z_alpha = normal_quantile(config.alpha)
    centering = m * (m - 1) / (2.0 * n)
    points: List[PowerPoint] = []
    for b in config.b_grid:
        predicted = asymptotic_power(config.alpha, b).power
        try:
            r = (CorrMatrix.identity(m) if b == 0.0
                 else calibrate_to_theta(config.family, b, m, n))
        except Unachievable:
            points.append(PowerPoint(
                b=b, m=m, n=n, trials=config.trials, empirical_power=None,
                mc_stderr=None, predicted_power=predicted, skipped=True))
            continue
        factor = cholesky(r)

        def one(trial: int, r=r, factor=factor) -> bool:
            data = sample_gaussian(factor, n, config.seed, trial)
            t_value = _checked_statistic(data, r, config.cov_mode)
            return bool((t_value - centering) > (m / n) * z_alpha)

        rejections = np.array(_map_trials(one, config.trials, config.workers), dtype=bool)
        p_hat = float(np.mean(rejections))
        stderr = float(np.sqrt(p_hat * (1.0 - p_hat) / config.trials))
        points.append(PowerPoint(
            b=b, m=m, n=n, trials=config.trials, empirical_power=p_hat,
            mc_stderr=stderr, predicted_power=predicted, skipped=False))
    return points


def write_power_csv(points: Sequence[PowerPoint], path) -> None:
    """Power-curve CSV: b, m, n, trials, empirical_power, mc_stderr,
    predicted_power, skipped."""

    def fmt(value) -> str:
        return "" if value is None else repr(float(value))

    close = False
    if isinstance(path, (str, bytes)):
        handle = open(path, "w", newline="")
        close = True
    else:
        handle = path
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["b", "m", "n", "trials", "empirical_power",
                         "mc_stderr", "predicted_power", "skipped"])
        for pt in points:
            writer.writerow([repr(float(pt.b)), pt.m, pt.n, pt.trials,
                             fmt(pt.empirical_power), fmt(pt.mc_stderr),
                             repr(float(pt.predicted_power)),
                             "true" if pt.skipped else "false"])
    finally:
        if close:
            handle.close()


def _moment_check(name: str, samples: np.ndarray, exact: float) -> MomentCheck:
    mean = float(np.mean(samples))
    stderr = float(np.std(samples, ddof=1) / np.sqrt(samples.size))
    z = (mean - exact) / stderr if stderr > 0 else np.inf * np.sign(mean - exact)
    return MomentCheck(name=name, mc_value=mean, exact=exact, stderr=stderr, z_score=float(z))


def verify_var_i(r: CorrMatrix, n: int, trials: int, seed: Seed,
                 workers: int = 1) -> MomentCheck:
    """Monte Carlo variance of the cross-sample term against its exact value.

    The z-score uses the large-sample standard error of a sample variance,
    sqrt((m4 - var^2) / trials) with m4 the fourth central moment.
    """
    factor = cholesky(r)

    def one(trial: int) -> float:
        return term_i(sample_gaussian(factor, n, seed, trial), r)

    values = np.array(_map_trials(one, trials, workers))
    mc_var = float(np.var(values, ddof=1))
    exact = var_i_exact(r, n)
    m4 = float(np.mean((values - values.mean()) ** 4))
    stderr = float(np.sqrt(max(m4 - mc_var ** 2, 0.0) / trials))
    z = (mc_var - exact) / stderr if stderr > 0 else np.inf
    return MomentCheck(name="var_i", mc_value=mc_var, exact=exact,
                       stderr=stderr, z_score=float(z))


def verify_e_ii1(r: CorrMatrix, n: int, trials: int, seed: Seed,
                 workers: int = 1):
    """Monte Carlo means of the same-sample component II1 (against its exact
    closed form) and of the cross-sample term (against zero)."""
    factor = cholesky(r)

    def one(trial: int):
        data = sample_gaussian(factor, n, seed, trial)
        dec = decompose(data, r)
        if dec.residual > _RESIDUAL_RTOL * max(1.0, abs(dec.term_i)):
            raise RuntimeError("decomposition identity violated inside trial")
        return dec.term_ii1, dec.term_i

    rows = _map_trials(one, trials, workers)
    ii1 = np.array([row[0] for row in rows])
    t_i = np.array([row[1] for row in rows])
    return (_moment_check("e_ii1", ii1, expected_ii1(r, n)),
            _moment_check("e_i", t_i, 0.0))


def verify_kernels(rho: float, n: int, trials: int, seed: Seed) -> List[MomentCheck]:
    """Kernel means over i.i.d. draws of four bivariate normal vectors,
    including the mirrored variants, against the closed forms."""
    if abs(rho) >= 1.0:
        raise ConfigError("rho must lie strictly inside (-1, 1)")
    u = _uniform_open(seed.master, 0, trials * 8).reshape(trials, 4, 2)
    z = -normal_quantile(u)
    x = z[:, :, 0].T                       # shape (4, trials)
    y = rho * x + np.sqrt(1.0 - rho * rho) * z[:, :, 1].T
    exact = kernel_expectations(rho, n)
    targets = {"h1": exact.e_h1, "h2": exact.e_h2, "h3": exact.e_h3}
    checks = []
    for name in _kernels.KERNEL_NAMES:
        samples = _kernels.evaluate(name, x, y, rho, n)
        checks.append(_moment_check(name, samples, targets[name]))
        if name != "h1":
            swapped = _kernels.evaluate(name, x, y, rho, n, swapped=True)
            checks.append(_moment_check(name + "_bar", swapped, targets[name]))
    return checks


def verification_report_json(checks: Sequence[MomentCheck], config_obj: dict) -> str:
    """JSON report for verification runs, embedding config and version."""
    return json.dumps({
        "version": __version__,
        "config": config_obj,
        "checks": [c.to_json_obj() for c in checks],
        "all_passed": all(c.passed for c in checks),
    }, indent=2)
