"""Finite-volume eigenproblems, envelope decay fitting, and resonance diagnostics.

Eigenpairs come from a complex Schur decomposition of the unitary-closure
restriction, which keeps the basis exactly orthonormal; raw amplitudes
oscillate, so decay rates are fitted on per-window envelope maxima.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .arithmetic import beta_tail_sup, gamma_tilde
from .errors import (
    DomainError,
    EigensolverFailure,
    FlatProfile,
    ScaleTooLarge,
)
from .interpolation import _pow_1me
from .model import (
    SUPERCRITICAL,
    UNITARY_CLOSURE,
    VerblunskySequence,
    build_finite_cmv,
)

INTERIOR_BOUNDARY_MASS = 1e-10
SCHUR_OFFDIAG_TOL = 1e-8


@dataclass(frozen=True)
class EigenfunctionProfile:
    a: int
    b: int
    eigenvalue: complex
    eta: float
    psi: np.ndarray
    amplitudes: np.ndarray
    center: int                  # lattice index of the amplitude maximum
    boundary_mass: float
    envelope_width: int
    fitted_rate: float
    fit_residual: float
    fit_window: tuple
    flat: bool

    @property
    def radius(self):
        return min(self.center - self.a, self.b - self.center)


def envelope_points(amplitudes, center_idx, width, exclusion=2):
    """Distances and log block-maxima of the envelope on both sides of the center."""
    n = amplitudes.shape[0]
    dists = []
    logs = []
    for sign in (1, -1):
        k = 1
        blocks = []
        while True:
            lo = center_idx + sign * ((k + 1) * width - 1)
            hi = center_idx + sign * (k * width)
            lo, hi = min(lo, hi), max(lo, hi)
            if lo < 0 or hi >= n:
                break
            blocks.append((k * width, float(np.max(amplitudes[lo: hi + 1]))))
            k += 1
        if exclusion > 0:
            blocks = blocks[:-exclusion] if len(blocks) > exclusion else []
        for d, m in blocks:
            if m > 0.0:
                dists.append(float(d))
                logs.append(math.log(m))
    return np.asarray(dists), np.asarray(logs)


def fit_decay_amplitudes(amplitudes, center_idx=None, width=5, exclusion=2):
    """Least-squares envelope decay rate; raises FlatProfile below 3 decades."""
    amplitudes = np.asarray(amplitudes, dtype=np.float64)
    if center_idx is None:
        center_idx = int(np.argmax(amplitudes))
    d, lm = envelope_points(amplitudes, center_idx, width, exclusion)
    if d.size < 3:
        raise FlatProfile("not enough envelope blocks to fit")
    if lm.max() - lm.min() < 3.0 * math.log(10.0):
        raise FlatProfile("envelope dynamic range below 3 decades")
    slope, intercept = np.polyfit(d, lm, 1)
    resid = float(np.sqrt(np.mean((lm - (slope * d + intercept)) ** 2)))
    return -float(slope), resid, (float(d.min()), float(d.max()))


def fit_decay(profile, exclusion=2, width=None):
    """Envelope decay rate of a profile; see fit_decay_amplitudes."""
    w = width or profile.envelope_width
    rate, resid, window = fit_decay_amplitudes(
        profile.amplitudes, profile.center - profile.a, w, exclusion)
    return rate, resid


def auto_resonance_scale(freq, n_half):
    """Largest stored scale trusted at truncation half-width N: 2 q_{n+1} <= N/4."""
    best = None
    for n in range(freq.depth):
        if 2 * freq.q(n + 1) <= n_half / 4:
            best = n
    return best


def truncation_spectrum(seq, n_half, boundary=UNITARY_CLOSURE, boundary_phase=0.0,
                        envelope_width=None, exclusion=2):
    """Full eigendecomposition of the closed restriction to [-N, N].

    Returns (eigenvalue, profile) pairs sorted by spectral angle.  Profiles are
    l2-normalized; decay rates are envelope fits, with flat profiles recorded
    at rate zero rather than raised.
    """
    if n_half < 64:
        raise DomainError("need n_half >= 64")
    if envelope_width is None:
        n_scale = auto_resonance_scale(seq.freq, n_half)
        envelope_width = max(5, int(seq.freq.q(n_scale - 1))) if n_scale and n_scale >= 1 else 5
    a, b = -n_half, n_half
    w = build_finite_cmv(seq, a, b, boundary=boundary,
                         boundary_phase=boundary_phase).to_dense()
    try:
        t, zmat = scipy.linalg.schur(w, output="complex")
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigensolverFailure(str(exc)) from None
    offdiag = float(np.abs(t - np.diag(np.diag(t))).max())
    if offdiag > SCHUR_OFFDIAG_TOL:
        raise EigensolverFailure(
            f"Schur off-diagonal residue {offdiag:.3e} exceeds {SCHUR_OFFDIAG_TOL}")
    eigenvalues = np.diag(t).copy()
    order = np.argsort(np.angle(eigenvalues) % (2.0 * math.pi), kind="stable")
    n = w.shape[0]
    boundary_band = 20
    out = []
    for k in order:
        psi = np.ascontiguousarray(zmat[:, k])
        amps = np.abs(psi)
        center_idx = int(np.argmax(amps))
        bmass = float(np.sum(amps[: boundary_band] ** 2)
                      + np.sum(amps[n - boundary_band:] ** 2))
        try:
            rate, resid, window = fit_decay_amplitudes(
                amps, center_idx, envelope_width, exclusion)
            flat = False
        except FlatProfile:
            rate, resid, window, flat = 0.0, 0.0, (0.0, 0.0), True
        zv = complex(eigenvalues[k])
        out.append((zv, EigenfunctionProfile(
            a=a, b=b, eigenvalue=zv,
            eta=float((np.angle(zv) / (2.0 * math.pi)) % 1.0),
            psi=psi, amplitudes=amps, center=a + center_idx,
            boundary_mass=bmass, envelope_width=envelope_width,
            fitted_rate=rate, fit_residual=resid, fit_window=window, flat=flat)))
    return out


def interior_profiles(pairs, n_half, boundary_mass_tol=INTERIOR_BOUNDARY_MASS):
    """Profiles centered in the bulk with negligible boundary mass."""
    picked = [pr for _, pr in pairs
              if abs(pr.center) <= n_half // 2 and pr.boundary_mass < boundary_mass_tol]
    picked.sort(key=lambda pr: (abs(pr.center), pr.eta))
    return picked


@dataclass(frozen=True)
class ResonanceProfile:
    n_scale: int
    q_n: int
    epsilon: float
    block_halfwidth: float
    r2t: dict                 # t -> max amplitude over the resonance block
    nonres_maxima: dict       # t -> max amplitude over the gap ending at block t
    slopes: dict              # t -> per-site log slope between blocks t-1, t
    nonres_total: int
    nonres_pass: int
    violations: tuple
    r2t_flags: dict
    slope: float
    slope_threshold: float
    slope_pass: bool

    @property
    def nonres_rate(self):
        return self.nonres_pass / self.nonres_total if self.nonres_total else 1.0


def resonance_profile(profile, freq, n_scale, epsilon, L=None, eps0=0.005,
                      beta_est=0.0, r2t_slack=0.05, max_t=3):
    """Resonance-block amplitudes and the measured decay inequalities.

    Amplitudes are recentered at the profile maximum and renormalized so the
    two central sites carry unit norm.  With L given, the non-resonant decay
    inequality is checked pointwise and the block decay slope is regressed
    against its threshold.
    """
    q_n = int(freq.q(n_scale))
    w = _pow_1me(freq.q(n_scale), epsilon)
    radius = profile.radius
    if 2 * q_n > radius:
        raise ScaleTooLarge(f"2 q_n = {2 * q_n} exceeds profile radius {radius}")
    center_idx = profile.center - profile.a
    c0 = math.hypot(profile.amplitudes[center_idx],
                    profile.amplitudes[center_idx - 1])
    amps = profile.amplitudes / c0

    def amp_at(yc):
        return amps[center_idx + yc]

    t_max = int((radius - w) // (2 * q_n))
    r2t = {}
    for t in range(-t_max, t_max + 1):
        lo = int(math.ceil(2 * t * q_n - w))
        hi = int(math.floor(2 * t * q_n + w))
        r2t[t] = float(np.max(amps[center_idx + lo: center_idx + hi + 1]))

    nonres_maxima = {}
    slopes = {}
    nonres_total = 0
    nonres_pass = 0
    violations = []
    rate = None if L is None else (L / 2.0 - 12.0 * eps0)
    for t in list(range(-t_max + 1, 0)) + list(range(1, t_max + 1)):
        lo = int(math.floor(2 * (t - 1) * q_n + w)) + 1
        hi = int(math.ceil(2 * t * q_n - w)) - 1
        if hi < lo:
            continue
        seg = amps[center_idx + lo: center_idx + hi + 1]
        nonres_maxima[t] = float(np.max(seg))
        anchor = max(r2t[t - 1], r2t[t])
        if anchor > 0:
            slopes[t] = (math.log(max(r2t[t], 1e-300))
                         - math.log(max(r2t[t - 1], 1e-300))) / (2.0 * q_n)
        if rate is None:
            continue
        for yc in range(lo, hi + 1):
            d = min((yc % (2 * q_n)), 2 * q_n - (yc % (2 * q_n)))
            bound = math.exp(-rate * (d - w)) * anchor
            lhs = amp_at(yc)
            nonres_total += 1
            if lhs <= bound:
                nonres_pass += 1
            elif len(violations) < 50:
                violations.append((yc, float(lhs), float(bound)))

    slope_threshold = math.nan
    slope = math.nan
    slope_pass = None
    r2t_flags = {}
    if L is not None:
        thr = L - beta_est - 26.0 * eps0
        slope_threshold = -thr + r2t_slack
        xs, ys = [], []
        for t, rv in r2t.items():
            if 1 <= abs(t) <= max_t and rv > 0:
                xs.append(abs(t) * q_n)
                ys.append(math.log(rv))
                r2t_flags[t] = math.log(rv) <= -thr * abs(t) * q_n + r2t_slack * q_n
        if len(xs) >= 2:
            slope = float(np.polyfit(np.asarray(xs), np.asarray(ys), 1)[0])
            slope_pass = slope <= slope_threshold
    return ResonanceProfile(n_scale=n_scale, q_n=q_n, epsilon=epsilon,
                            block_halfwidth=w, r2t=r2t, nonres_maxima=nonres_maxima,
                            slopes=slopes, nonres_total=nonres_total,
                            nonres_pass=nonres_pass, violations=tuple(violations),
                            r2t_flags=r2t_flags, slope=slope,
                            slope_threshold=slope_threshold, slope_pass=slope_pass)


@dataclass(frozen=True)
class ExperimentConfig:
    epsilon: float = 0.1
    epsilon0: float = 0.005
    n_half: int = 1000
    boundary_phase: float = 0.0
    seed: int = 0
    max_profiles: int = 40
    resonance_qn: int = None
    envelope_width: int = None
    exclusion: int = 2
    gamma_n_max: int = 2000
    gamma_cutoff: float = 1.0
    rate_tol: float = 0.15
    nonres_min_rate: float = 0.90
    r2t_min_rate: float = 0.80
    r2t_slack: float = 0.05
    diagnostic_only: bool = False

    @classmethod
    def auto_derived(cls, coupling, freq, **overrides):
        """Defaults with eps0, eps tied to the proof's budget inequality."""
        beta = beta_tail_sup(freq)
        eps0 = max((coupling.L - beta) / 200.0, 1e-9)
        eps = eps0 / (4.0 * beta + 250.0) / 2.0
        return cls(epsilon=eps, epsilon0=eps0, **overrides)

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class LocalizationReport:
    rows: tuple            # per-profile dicts
    target_rate: float
    median_rate: float
    frac_within_tol: float
    frac_within_25: float
    nonres_rate: float
    r2t_pass_rate: float
    beta_est: float
    gamma_estimate: float
    resonant_phase: bool
    gates_active: bool
    gates: dict
    q_n: int
    config: dict

    @property
    def all_gates_pass(self):
        return all(self.gates.values()) if self.gates else True


def run_localization_experiment(config, coupling, freq, theta):
    """Build, diagonalize, fit, and profile; returns the aggregate report.

    Assertion gates run only for supercritical couplings with beta below L and
    a non-resonant phase; otherwise the run downgrades to diagnostic-only.
    """
    seq = VerblunskySequence(coupling, freq, float(theta))
    beta = beta_tail_sup(freq)
    gamma = gamma_tilde(freq, theta, config.gamma_n_max)
    resonant = gamma.has_exact_resonance() or gamma.max_sample() >= config.gamma_cutoff

    if config.resonance_qn is not None:
        n_scale = next((n for n in range(freq.depth + 1)
                        if freq.q(n) == config.resonance_qn), None)
        if n_scale is None:
            raise DomainError(f"q = {config.resonance_qn} not in the stored ladder")
    else:
        n_scale = auto_resonance_scale(freq, config.n_half)
        if n_scale is None:
            raise DomainError("no trustworthy scale fits this truncation")

    width = config.envelope_width
    if width is None:
        width = max(5, int(freq.q(n_scale - 1))) if n_scale >= 1 else 5
    pairs = truncation_spectrum(seq, config.n_half, boundary_phase=config.boundary_phase,
                                envelope_width=width, exclusion=config.exclusion)
    interior = interior_profiles(pairs, config.n_half)[: config.max_profiles]

    target = coupling.L / 2.0
    rows = []
    rates = []
    nonres_tot = nonres_ok = 0
    r2t_total = r2t_ok = 0
    for pr in interior:
        row = {"eta": pr.eta, "center": pr.center, "fitted_rate": pr.fitted_rate,
               "residual": pr.fit_residual, "nonres_pass": None, "r2t_pass": None}
        if not pr.flat:
            rates.append(pr.fitted_rate)
        try:
            rp = resonance_profile(pr, freq, n_scale, config.epsilon, L=coupling.L,
                                   eps0=config.epsilon0, beta_est=beta,
                                   r2t_slack=config.r2t_slack)
        except ScaleTooLarge:
            rows.append(row)
            continue
        nonres_tot += rp.nonres_total
        nonres_ok += rp.nonres_pass
        if rp.slope_pass is not None:
            r2t_total += 1
            r2t_ok += int(rp.slope_pass)
        row["nonres_pass"] = rp.nonres_rate
        row["r2t_pass"] = rp.slope_pass
        rows.append(row)

    rates = np.asarray(rates) if rates else np.asarray([math.nan])
    median = float(np.median(rates))
    within = float(np.mean(np.abs(rates - target) <= config.rate_tol * target))
    within25 = float(np.mean(np.abs(rates - target) <= 0.25 * target))
    nonres_rate = nonres_ok / nonres_tot if nonres_tot else math.nan
    r2t_rate = r2t_ok / r2t_total if r2t_total else math.nan

    gates_active = (coupling.regime == SUPERCRITICAL and beta < coupling.L
                    and not resonant and not config.diagnostic_only)
    gates = {}
    if gates_active:
        gates = {
            "median_rate": abs(median - target) <= config.rate_tol * target,
            "nonres": nonres_rate >= config.nonres_min_rate,
            "r2t": r2t_rate >= config.r2t_min_rate,
        }
    return LocalizationReport(rows=tuple(rows), target_rate=target, median_rate=median,
                              frac_within_tol=within, frac_within_25=within25,
                              nonres_rate=float(nonres_rate),
                              r2t_pass_rate=float(r2t_rate), beta_est=beta,
                              gamma_estimate=gamma.gamma_tilde_estimate,
                              resonant_phase=resonant, gates_active=gates_active,
                              gates=gates, q_n=int(freq.q(n_scale)),
                              config=config.as_dict())
