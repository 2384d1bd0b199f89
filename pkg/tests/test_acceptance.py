"""Acceptance suite.

One test per criterion (power-curve cells are parametrized separately);
each prints a PASS line with the measured numbers when it succeeds, so
running with ``pytest tests/test_acceptance.py -v -s`` gives one line per
criterion.  Every tolerance is pinned here, not configurable.
"""

import math
import time

import mpmath as mp
import numpy as np
import pytest

from hidim import (AlternativeFamily, CorrMatrix, CovMode, DataMatrix, Seed,
                   SimConfig, central_pair_moment, central_product_moment,
                   decompose, f_partial, kernel_expectations,
                   make_family_matrix, martingale_differences, pair_partitions,
                   run_null, run_power_curve, s_sum, statistic_t, term_i,
                   verify_e_ii1, verify_kernels, verify_var_i)
from hidim import kernels
from hidim.cli import main as cli_main
from conftest import random_corr

from test_moments import GRID_U12, GRID_U3, LAMS_UP_TO_4, fd_partial


def report(line: str) -> None:
    print(f"\n{line}")


# -- criterion 1: exact identities (fast, deterministic) --------------------

def test_c1a_partition_counts():
    start = time.time()
    expected = {1: 1, 2: 3, 3: 15, 4: 105, 5: 945, 6: 10395}
    for k, count in expected.items():
        assert len(pair_partitions(k)) == count
        assert math.factorial(2 * k) // (2 ** k * math.factorial(k)) == count
    elapsed = time.time() - start
    assert elapsed < 1.0
    report(f"PASS criterion 1a: pair-partition counts k=1..6 exact ({elapsed:.2f}s)")


def test_c1b_pair_moment_identity():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        m = int(rng.integers(2, 8))
        r = random_corr(rng, m)
        p1, q1, p2, q2 = (int(v) for v in rng.integers(0, m, size=4))
        closed = central_pair_moment(p1, q1, p2, q2, r)
        enumerated = central_product_moment([(p1, q1), (p2, q2)], r)
        scale = max(abs(closed), abs(enumerated), 1e-12)
        worst = max(worst, abs(closed - enumerated) / scale)
    assert worst <= 1e-12
    report(f"PASS criterion 1b: pair-moment identity on 1000 random cases "
           f"(worst rel err {worst:.2e})")


def test_c1c_partials_vs_finite_differences():
    mp.mp.dps = 50
    h = mp.mpf("1e-6")  # stencil truncation ~2.5e-8 worst case on this grid
    worst = 0.0
    for u1s in GRID_U12:
        for u2s in GRID_U12:
            for u3s in GRID_U3:
                u1, u2, u3 = mp.mpf(u1s), mp.mpf(u2s), mp.mpf(u3s)
                for lam in LAMS_UP_TO_4:
                    got = f_partial(lam, float(u1), float(u2), float(u3))
                    want = float(fd_partial(lam, u1, u2, u3, h))
                    worst = max(worst, abs(got - want))
    assert worst <= 1e-6
    report(f"PASS criterion 1c: partial derivatives vs finite differences "
           f"(worst abs err {worst:.2e})")


def test_c1d_s2_closed_form():
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        r = random_corr(rng, int(rng.integers(2, 31)))
        off = r.rho[np.triu_indices(r.m, 1)]
        closed = float(np.sum(1.0 + 2.0 * off ** 2 + off ** 4))
        worst = max(worst, abs(s_sum(2, r) - closed) / closed)
    assert worst <= 1e-12
    report(f"PASS criterion 1d: S(2) closed form on 100 random R "
           f"(worst rel err {worst:.2e})")


def test_c1e_decomposition_identity():
    rng = np.random.default_rng(303)
    worst_residual = 0.0
    worst_martingale = 0.0
    for _ in range(100):
        m = int(rng.integers(2, 21))
        n = int(rng.integers(2, 201))
        r = random_corr(rng, m)
        data = DataMatrix(rng.standard_normal((n, m)))
        dec = decompose(data, r)
        t = statistic_t(data, CovMode.KNOWN_ZERO_MEAN)
        worst_residual = max(worst_residual, dec.residual / max(1.0, abs(t)))
        y_sum = float(martingale_differences(data, r).sum())
        ti = term_i(data, r)
        worst_martingale = max(worst_martingale,
                               abs(y_sum - ti) / max(1e-12, abs(ti)))
    assert worst_residual <= 1e-9
    assert worst_martingale <= 1e-12
    report(f"PASS criterion 1e: decomposition identity (worst rel residual "
           f"{worst_residual:.2e}), martingale sum (worst {worst_martingale:.2e})")


def test_c1f_kernel_closed_forms_vs_expansion():
    worst = 0.0
    for rho in (-0.9, -0.5, 0.0, 0.3, 0.8):
        for n in (4, 6, 12, 50):
            ex = kernel_expectations(rho, n)
            for name, closed in (("h1", ex.e_h1), ("h2", ex.e_h2), ("h3", ex.e_h3)):
                for swapped in (False, True):
                    oracle = kernels.expectation_by_expansion(name, rho, n, swapped=swapped)
                    worst = max(worst, abs(closed - oracle) / abs(closed))
    assert worst <= 1e-12
    report(f"PASS criterion 1f: kernel closed forms vs expansion oracle "
           f"(worst rel err {worst:.2e})")


# -- criterion 2: Monte Carlo oracle gates ----------------------------------

def test_c2a_var_i():
    identity = CorrMatrix.identity(5)
    chk_null = verify_var_i(identity, 30, 20000, Seed(99))
    equi = make_family_matrix(AlternativeFamily.equicorrelation(), 0.2, 5)
    chk_alt = verify_var_i(equi, 30, 20000, Seed(100))
    assert abs(chk_null.z_score) <= 3.0
    assert abs(chk_alt.z_score) <= 3.0
    report(f"PASS criterion 2a: Var(I) MC vs exact, |z| = "
           f"{abs(chk_null.z_score):.2f} (R=I), {abs(chk_alt.z_score):.2f} (equi 0.2)")


def test_c2b_e_ii1():
    ii1, e_i = verify_e_ii1(CorrMatrix.identity(4), 20, 20000, Seed(101))
    assert abs(ii1.z_score) <= 3.0
    assert abs(e_i.z_score) <= 3.0
    report(f"PASS criterion 2b: E[II1] |z| = {abs(ii1.z_score):.2f}, "
           f"E[I] |z| = {abs(e_i.z_score):.2f}")


@pytest.mark.parametrize("rho,n", [(0.0, 10), (0.5, 10), (0.7, 6)])
def test_c2c_kernel_expectations(rho, n):
    checks = verify_kernels(rho, n, 100000, Seed(7))
    zmax = max(abs(c.z_score) for c in checks)
    assert all(abs(c.z_score) <= 3.0 for c in checks), [c.name for c in checks]
    report(f"PASS criterion 2c (rho={rho}, n={n}): all 5 kernel means, "
           f"max |z| = {zmax:.2f}")


# -- criterion 3: null calibration ------------------------------------------

def test_c3_null_calibration():
    config = SimConfig(m=50, n=100, trials=5000, alpha=0.05, seed=Seed(12345))
    rep = run_null(config)
    assert 0.03 <= rep.empirical_size <= 0.07
    assert rep.ks_statistic <= 0.05
    report(f"PASS criterion 3: null size {rep.empirical_size:.4f} in [0.03, 0.07], "
           f"KS {rep.ks_statistic:.4f} <= 0.05")


# -- criterion 4: power against the asymptotic prediction --------------------

POWER_CONFIG = SimConfig(m=40, n=80, trials=4000, alpha=0.05, seed=Seed(2024),
                         family=AlternativeFamily.equicorrelation(),
                         b_grid=(1.0, 2.0, 3.0))
_POWER_POINTS: dict = {}


def _power_points():
    if not _POWER_POINTS:
        for point in run_power_curve(POWER_CONFIG):
            _POWER_POINTS[point.b] = point
    return _POWER_POINTS


@pytest.mark.parametrize("b", [1.0, 2.0, 3.0])
def test_c4_power_agreement(b):
    point = _power_points()[b]
    diff = abs(point.empirical_power - point.predicted_power)
    line = (f"criterion 4 (b={b}): empirical {point.empirical_power:.4f} vs "
            f"predicted {point.predicted_power:.4f}, |diff| = {diff:.4f} "
            f"(window 0.08, mc stderr {point.mc_stderr:.4f})")
    report(("PASS " if diff <= 0.08 else "FAIL ") + line)
    assert diff <= 0.08, (
        f"{line}. The prediction is an m,n -> infinity limit; at m=40, n=80 the "
        "finite-sample power genuinely falls short of it by ~0.087 (b=2) and "
        "~0.084 (b=3) while every exact finite-sample moment gate passes on the "
        "same sampling path, and the deficit shrinks to ~0.017 by m=320, n=640 "
        "at the same ratio. The stated window is not attainable at this scale.")


def test_c4_power_monotone():
    points = _power_points()
    values = [points[b].empirical_power for b in (1.0, 2.0, 3.0)]
    for low, high in zip(values, values[1:]):
        slack = 2.0 * math.sqrt(points[1.0].mc_stderr ** 2 + points[2.0].mc_stderr ** 2)
        assert high >= low - slack
    report(f"PASS criterion 4 (monotonicity): empirical power nondecreasing in b "
           f"({values[0]:.3f} <= {values[1]:.3f} <= {values[2]:.3f})")


# -- criterion 5: determinism across worker counts ---------------------------

def test_c5_worker_determinism(tmp_path, capsys):
    out1, out2 = tmp_path / "w1.csv", tmp_path / "w2.csv"
    args = ["power", "--m", "12", "--n", "40", "--trials", "300", "--alpha", "0.05",
            "--seed", "77", "--b-grid", "0,1,2", "--family", "equicorrelation"]
    assert cli_main(args + ["--out", str(out1), "--workers", "1"]) == 0
    assert cli_main(args + ["--out", str(out2), "--workers", "4"]) == 0
    z1, z2 = tmp_path / "z1.csv", tmp_path / "z2.csv"
    null_args = ["null", "--m", "10", "--n", "30", "--trials", "200", "--seed", "5"]
    assert cli_main(null_args + ["--workers", "1", "--out", str(tmp_path / "n1.json"),
                                 "--z-out", str(z1)]) == 0
    assert cli_main(null_args + ["--workers", "3", "--out", str(tmp_path / "n2.json"),
                                 "--z-out", str(z2)]) == 0
    capsys.readouterr()
    assert out1.read_bytes() == out2.read_bytes()
    assert z1.read_bytes() == z2.read_bytes()
    report("PASS criterion 5: byte-identical outputs across worker counts")
