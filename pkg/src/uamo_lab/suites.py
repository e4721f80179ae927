"""Batch verification suites behind the CLI and the acceptance gate.

Each suite returns a SuiteResult with per-check rows and an overall verdict;
tolerances are the frozen acceptance values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .arithmetic import cf_expand, golden_mean, norm_qn_omega
from .cocycle import check_rho_product, rho_integral_quadrature
from .determinant import (
    DEFAULT_POISSON_C,
    calibrate_poisson_c,
    poisson_check,
    szego_connection_check,
)
from .errors import OutOfRegime, UamoLabError, ZeroAlpha
from .interpolation import (
    DEFAULT_DEFECT_EPS0,
    DEFAULT_NONMIN_C,
    NON_RESONANT,
    RESONANT,
    WEAK_LIOUVILLE,
    ave_low_check,
    cos_product_deviation,
    interpolation_defect,
    select_windows,
    sine_structure_check,
)
from .model import VerblunskySequence, make_coupling


@dataclass
class SuiteResult:
    name: str
    passed: bool
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def _golden(depth=32):
    return golden_mean(depth)


def _pi_minus_3(depth=18):
    with mpmath.workprec(320):
        omega = mpmath.pi - 3
    return cf_expand(omega, depth, precision_bits=320)


def suite_sze2(trials=300, max_width=30, seed=1, tol=1e-8):
    """Transfer product vs determinant matrix, both sides independent."""
    rng = np.random.default_rng(seed)
    freq = _golden(24)
    rows = []
    worst = 0.0
    done = 0
    while done < trials:
        l1 = rng.uniform(0.15, 0.9)
        l2 = rng.uniform(0.15, 0.95)
        theta = rng.random()
        seq = VerblunskySequence(make_coupling(l1, l2), freq, theta)
        width = int(rng.integers(2, max_width + 1))
        a = int(rng.integers(-40, 40))
        b = a + width - 1
        z = complex(np.exp(2j * math.pi * rng.random()))
        try:
            rep = szego_connection_check(seq, a, b, z)
        except ZeroAlpha:
            continue
        rows.append({"width": rep.width, "max_rel_err": rep.max_rel_err,
                     "star_checked": rep.star_checked})
        worst = max(worst, rep.max_rel_err)
        done += 1
    return SuiteResult(name="sze2", passed=worst < tol, rows=rows,
                       summary={"max_rel_err": worst, "trials": trials, "tol": tol})


def suite_sine_structure(n=40, trials=50, seed=2, tol=1e-6, extra=6):
    """Degree-n sine-variable structure of the interval determinant."""
    rng = np.random.default_rng(seed)
    freq = _golden(24)
    rows = []
    worst = 0.0
    for k in range(trials):
        l1 = rng.uniform(0.1, 0.8)
        l2 = rng.uniform(min(l1 + 0.05, 0.95), 0.98)
        theta = rng.random()
        seq = VerblunskySequence(make_coupling(l1, l2), freq, theta)
        z = complex(np.exp(2j * math.pi * rng.random()))
        fit = sine_structure_check(seq, n, node_count_extra=extra, z=z,
                                   seed=int(rng.integers(1 << 30)))
        rows.append({"trial": k, "max_residual": fit.max_residual})
        worst = max(worst, fit.max_residual)
    return SuiteResult(name="sine-structure", passed=worst < tol, rows=rows,
                       summary={"max_residual": worst, "n": n, "trials": trials,
                                "tol": tol})


def suite_int_rho(pairs=10_000, tol_birkhoff=1e-3, tol_quad=1e-8,
                  l1=0.6, l2=0.8, theta=0.123):
    """Birkhoff average of the coefficient logs against the closed form."""
    freq = _golden(24)
    seq = VerblunskySequence(make_coupling(l1, l2), freq, theta)
    chk = check_rho_product(seq, 0, 2 * pairs - 1)
    quad_val = rho_integral_quadrature(seq.coupling)
    err_birkhoff = abs(chk.empirical - chk.target)
    err_quad = abs(quad_val - chk.target)
    passed = err_birkhoff < tol_birkhoff and err_quad < tol_quad
    return SuiteResult(
        name="int-rho", passed=passed,
        rows=[{"empirical": chk.empirical, "target": chk.target,
               "quadrature": quad_val, "pairs": chk.pairs}],
        summary={"birkhoff_error": err_birkhoff, "quadrature_error": err_quad,
                 "tol_birkhoff": tol_birkhoff, "tol_quad": tol_quad})


def _appro1_violations(freq, q_cap):
    """Exhaustive best-approximation scan ||k omega|| >= ||q_{n-1} omega||."""
    scales = [n for n in range(1, freq.depth) if freq.q(n) <= q_cap]
    if not scales:
        return 0, 0
    kmax = max(freq.q(n) for n in scales) - 1
    norms = np.empty(kmax + 1)
    with mpmath.workprec(freq.precision_bits + 32):
        x = mpmath.mpf(0)
        for k in range(1, kmax + 1):
            x += freq.omega
            y = x - mpmath.floor(x)
            norms[k] = float(min(y, 1 - y))
    checked = 0
    violations = 0
    for n in scales:
        q_n = freq.q(n)
        floor_val = norms[freq.q(n - 1)]
        block = norms[1:q_n]
        violations += int(np.sum(block < floor_val))
        checked += block.size
    return violations, checked


def _appro2_violations(freq, q_cap):
    """Two-sided bound 1/(2 q_{n+1}) <= ||q_n omega|| <= 1/q_{n+1}, high precision."""
    violations = 0
    checked = 0
    with mpmath.workprec(freq.precision_bits + 64):
        for n in range(freq.depth):
            if freq.q(n) > q_cap:
                break
            d = abs(freq.q(n) * freq.omega - freq.p(n))
            lo = mpmath.mpf(1) / (2 * freq.q(n + 1))
            hi = mpmath.mpf(1) / freq.q(n + 1)
            if not (lo <= d <= hi):
                violations += 1
            checked += 1
    return violations, checked


def suite_cf_laws(q_cap_scan=10_000, q_cap_exact=1_000_000):
    """Continued-fraction laws for the golden mean and pi - 3."""
    rows = []
    total_viol = 0
    for label, freq in (("golden", _golden(32)), ("pi-3", _pi_minus_3(18))):
        v1, c1 = _appro1_violations(freq, q_cap_scan)
        v2, c2 = _appro2_violations(freq, q_cap_exact)
        rows.append({"omega": label, "best_approx_checked": c1,
                     "best_approx_violations": v1,
                     "two_sided_checked": c2, "two_sided_violations": v2})
        total_viol += v1 + v2
    return SuiteResult(name="cf-laws", passed=total_viol == 0, rows=rows,
                       summary={"violations": total_viol})


def suite_ave_low(n=100, grid=256, slack=0.02, l1=0.6, l2=0.8, eta=0.31):
    """Phase-averaged determinant growth against the closed-form floor."""
    freq = _golden(24)
    seq = VerblunskySequence(make_coupling(l1, l2), freq, 0.123)
    z = complex(np.exp(2j * math.pi * eta))
    rep = ave_low_check(seq, n, z, grid_size=grid)
    passed = rep.empirical >= rep.target - slack
    return SuiteResult(name="ave-low", passed=passed,
                       rows=[{"n": n, "empirical": rep.empirical,
                              "target": rep.target, "skipped": rep.skipped}],
                       summary={"empirical": rep.empirical, "target": rep.target,
                                "slack": slack})


def suite_nonmin(c_max=DEFAULT_NONMIN_C, sweeps=100, seed=5):
    """Cosine-product deviation |D| <= C ln q_n, in and out of calibration sample."""
    rng = np.random.default_rng(seed)
    rows = []
    worst_ratio = 0.0
    golden = _golden(24)
    pi3 = _pi_minus_3(8)
    cases = [(golden, n) for n in (10, 12, 14)]  # q = 89, 233, 610
    cases.append((pi3, 3))                       # q = 113, out of sample
    for freq, n_scale in cases:
        q = int(freq.q(n_scale))
        worst = 0.0
        for _ in range(sweeps):
            d = cos_product_deviation(freq, rng.random(), n_scale)
            worst = max(worst, abs(d))
        ratio = worst / math.log(q)
        worst_ratio = max(worst_ratio, ratio)
        rows.append({"q_n": q, "max_abs_dev": worst, "ratio_to_log": ratio})
    return SuiteResult(name="nonmin", passed=worst_ratio <= c_max, rows=rows,
                       summary={"max_ratio": worst_ratio, "c_max": c_max})


def suite_poisson(trials=200, c_const=None, seed=6, calibrate=False):
    """Poisson inequality out of sample with the frozen constant."""
    freq = _golden(24)
    if calibrate:
        seq = VerblunskySequence(make_coupling(0.6, 0.8), freq, 0.123)
        c2, worst, n = calibrate_poisson_c(seq, trials=max(trials, 1000))
        return SuiteResult(name="poisson-calibrate", passed=True,
                           rows=[{"calibrated_c": c2, "max_ratio": worst,
                                  "instances": n}],
                           summary={"calibrated_c": c2})
    c_used = DEFAULT_POISSON_C if c_const is None else float(c_const)
    from .localization import interior_profiles, truncation_spectrum

    rng = np.random.default_rng(seed)
    seq = VerblunskySequence(make_coupling(0.45, 0.9), freq, 0.377)
    n_half = 220
    pairs = truncation_spectrum(seq, n_half)
    interior = interior_profiles(pairs, n_half)
    rows = []
    worst = 0.0
    done = 0
    while done < trials:
        pr = interior[int(rng.integers(len(interior)))]
        width = int(rng.integers(4, 25))
        lo = int(rng.integers(-n_half // 2, n_half // 2 - width))
        hi = lo + width
        y = int(rng.integers(lo, hi + 1))
        rep = poisson_check(seq, lo, hi, y, pr.eigenvalue, pr.a, pr.psi,
                            c_const=c_used)
        if rep.lhs == 0.0:
            continue
        worst = max(worst, rep.ratio)
        done += 1
    rows.append({"trials": done, "max_ratio": worst, "c": c_used})
    return SuiteResult(name="poisson", passed=worst <= 1.0, rows=rows,
                       summary={"max_ratio": worst, "c": c_used})


def _defect_windows_for_scale(freq, n_scale, eps, rng, per_mode):
    q = int(freq.q(n_scale))
    thresh = math.exp((1 - eps) * math.log(q))
    wins = []
    attempts = 0
    while sum(1 for w in wins if w.mode == NON_RESONANT) < per_mode and attempts < 400:
        attempts += 1
        t = int(rng.integers(1, 3))
        delta = int(rng.integers(int(thresh) + 1, q + 1))
        y = 2 * t * q + delta * (1 if rng.random() < 0.5 else -1)
        try:
            wins.append(select_windows(freq, y, n_scale, eps, NON_RESONANT))
        except (OutOfRegime, UamoLabError):
            continue
    attempts = 0
    while sum(1 for w in wins if w.mode == RESONANT) < per_mode and attempts < 400:
        attempts += 1
        delta = int(rng.integers(0, int(thresh) + 1))
        y = 2 * q + delta * (1 if rng.random() < 0.5 else -1)
        try:
            wins.append(select_windows(freq, y, n_scale, eps, RESONANT))
        except (OutOfRegime, UamoLabError):
            continue
    attempts = 0
    while sum(1 for w in wins if w.mode == WEAK_LIOUVILLE) < per_mode and attempts < 400:
        attempts += 1
        y = int(rng.integers(int(thresh) + 1, 8 * q))
        try:
            wins.append(select_windows(freq, y, n_scale, eps, WEAK_LIOUVILLE))
        except (OutOfRegime, UamoLabError):
            continue
    return wins


def suite_defect(qns=(89, 233), per_mode=13, xi_grid=512, eps=0.1, eps0=None,
                 seed=4, identity_tol=1e-8, min_pass=0.95,
                 coupling=None, theta_seed=11):
    """Defect bounds on in-regime windows at the requested golden scales."""
    eps0 = DEFAULT_DEFECT_EPS0 if eps0 is None else float(eps0)
    freq = _golden(32)
    coupling = coupling or make_coupling(0.6, 0.8)
    rng = np.random.default_rng(seed)
    theta_rng = np.random.default_rng(theta_seed)
    ladder = {int(freq.q(n)): n for n in range(freq.depth + 1)}
    rows = []
    u_pass = 0
    identity_ok = 0
    total = 0
    for qv in qns:
        n_scale = ladder[int(qv)]
        wins = _defect_windows_for_scale(freq, n_scale, eps, rng, per_mode)
        for win in wins:
            theta = theta_rng.random()
            seq = VerblunskySequence(coupling, freq, theta)
            dec = interpolation_defect(seq, win, theta, xi_grid_size=xi_grid,
                                       eps0=eps0, eps=eps)
            total += 1
            u_pass += int(dec.satisfied["ln_sup_u"])
            identity_ok += int(dec.regroup_error <= identity_tol)
            rows.append({"mode": win.mode, "n": win.n_scale, "m": win.m,
                         "s": win.s, "h": win.h, "ln_sup_U": dec.ln_sup_u,
                         "bound": dec.bounds["ln_sup_u"],
                         "pass": dec.satisfied["ln_sup_u"],
                         "regroup_error": dec.regroup_error,
                         "sum1_ok": dec.satisfied["sum1"],
                         "sum21_ok": dec.satisfied["sum21"],
                         "sum22_ok": dec.satisfied["sum22"]})
    rate = u_pass / total if total else 0.0
    passed = rate >= min_pass and identity_ok == total and total > 0
    return SuiteResult(name="defect", passed=passed, rows=rows,
                       summary={"windows": total, "u_pass_rate": rate,
                                "identity_exact": identity_ok, "eps0": eps0,
                                "min_pass": min_pass})
