"""Szego transfer matrices, overflow-free cocycle products, Lyapunov estimates.

Products renormalize every step and carry the scale as an accumulated log, so
orbit lengths up to 1e7 never overflow.  On the spectrum of a supercritical
coupling the per-step growth rate has the closed form L/2.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from ._kernels import spectral_norm_2x2, transfer_product_kernel
from .errors import DomainError, NearSingularRho

RHO_FLOOR = 1e-12
SKIP_FRACTION_ABORT = 1e-3

ORBIT_AVERAGE = "OrbitAverage"
PHASE_AVERAGE = "PhaseAverage"


@dataclass(frozen=True)
class SpectralPoint:
    """A point z = e^{2 pi i eta} on the unit circle."""

    eta: float

    @property
    def z(self):
        return cmath.exp(2j * math.pi * self.eta)

    @classmethod
    def from_z(cls, z):
        z = complex(z)
        if abs(abs(z) - 1.0) > 1e-8:
            raise DomainError(f"|z|={abs(z):.6f} is not on the unit circle")
        return cls(eta=(cmath.phase(z) / (2.0 * math.pi)) % 1.0)


def _as_z(z):
    if isinstance(z, SpectralPoint):
        return z.z
    return complex(z)


@dataclass(frozen=True)
class TransferProduct:
    """Scaled product: the true matrix is e^{log_scale} * m."""

    m: np.ndarray
    log_scale: float
    steps: int
    z_mod_log: float = 0.0
    det_defect_log: float = 0.0

    def norm_log(self):
        """ln of the spectral norm of the true product."""
        return self.log_scale + math.log(
            spectral_norm_2x2(self.m[0, 0], self.m[0, 1], self.m[1, 0], self.m[1, 1]))

    def det_log_modulus(self):
        """ln |det| of the true product, tracked stepwise (|det S| = |z| per step)."""
        return self.det_defect_log + self.steps * self.z_mod_log


def szego_matrix(seq, n, z):
    """Single transfer step (1/|rho_n|) [[z, -conj(alpha)], [-alpha z, 1]]."""
    z = _as_z(z)
    rho = seq.rho_abs(n)
    if rho < RHO_FLOOR:
        raise NearSingularRho(n, rho)
    alpha = seq.alpha(n)
    return np.array([[z, -alpha], [-alpha * z, 1.0]], dtype=np.complex128) / rho


def transfer_range(seq, a, b, z, theta_offset=0.0):
    """Scaled product S_b ... S_a over consecutive indices."""
    if b < a:
        raise DomainError("transfer_range needs b >= a")
    return _run_kernel(seq, seq.theta + theta_offset, z, a, b - a + 1)


def cocycle_product(seq, theta_offset, z, k):
    """Scaled k-step product starting at index 0 with the phase shifted."""
    if k < 1:
        raise DomainError("k must be >= 1")
    return _run_kernel(seq, seq.theta + theta_offset, z, 0, k)


def _run_kernel(seq, theta, z, start, count):
    c = seq.coupling
    zc = _as_z(z)
    m00, m01, m10, m11, log_scale, det_log, done, bad = transfer_product_kernel(
        c.lambda1, c.lambda2, theta, seq.omega, zc, start, count, RHO_FLOOR)
    if bad >= 0 or done < count:
        raise NearSingularRho(bad)
    m = np.array([[m00, m01], [m10, m11]], dtype=np.complex128)
    return TransferProduct(m=m, log_scale=log_scale, steps=count,
                           z_mod_log=math.log(abs(zc)), det_defect_log=det_log)


def naive_product(seq, theta_offset, z, k):
    """Plain dense product, valid only for small k; the oracle for the scaled path."""
    shifted = seq.shifted(theta_offset)
    m = np.eye(2, dtype=np.complex128)
    for n in range(k):
        m = szego_matrix(shifted, n, z) @ m
    return m


def lyapunov_closed_form(coupling):
    """Growth rate on the spectrum: max(0, L/2)."""
    return max(0.0, coupling.L / 2.0)


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    stderr: float
    orbit_length: int
    phase_samples: int
    method: str
    skipped: int = 0


def lyapunov_estimate(seq, z, orbit_length, phase_samples=24, method=PHASE_AVERAGE):
    """Finite-orbit Lyapunov estimate of the transfer cocycle at z.

    PhaseAverage: mean of (1/k) ln||product|| over an equidistributed grid of
    phases.  OrbitAverage: one long orbit at the sequence's own phase, with a
    chunked error estimate.  Samples hitting a |rho| underflow are skipped and
    counted; more than 0.1% skipped aborts.
    """
    if orbit_length < 1:
        raise DomainError("orbit_length must be >= 1")
    z = _as_z(z)
    if method == PHASE_AVERAGE:
        if phase_samples < 2:
            raise DomainError("phase_samples must be >= 2")
        values = []
        skipped = 0
        for s in range(phase_samples):
            theta_s = (s + 0.5) / phase_samples
            try:
                prod = _run_kernel(seq, theta_s, z, 0, orbit_length)
            except NearSingularRho:
                skipped += 1
                continue
            values.append(prod.norm_log() / orbit_length)
        if skipped > max(SKIP_FRACTION_ABORT * phase_samples, 0.0) and skipped > 0:
            raise NearSingularRho(-1, None)
        values = np.asarray(values)
        stderr = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
        return LyapunovEstimate(value=float(values.mean()), stderr=stderr,
                                orbit_length=orbit_length, phase_samples=phase_samples,
                                method=method, skipped=skipped)
    if method == ORBIT_AVERAGE:
        full = _run_kernel(seq, seq.theta, z, 0, orbit_length)
        chunks = min(8, orbit_length)
        chunk = max(orbit_length // chunks, 1)
        rates = []
        for c in range(chunks):
            start = c * chunk
            count = chunk if c < chunks - 1 else orbit_length - start
            prod = _run_kernel(seq, seq.theta, z, start, count)
            rates.append(prod.norm_log() / count)
        rates = np.asarray(rates)
        stderr = (float(rates.std(ddof=1) / math.sqrt(rates.size))
                  if rates.size > 1 else 0.0)
        return LyapunovEstimate(value=full.norm_log() / orbit_length, stderr=stderr,
                                orbit_length=orbit_length, phase_samples=1,
                                method=method)
    raise DomainError(f"unknown method {method!r}")


@dataclass(frozen=True)
class RhoProductCheck:
    empirical: float  # per-pair Birkhoff average of ln|rho_{2j} rho_{2j+1}|
    target: float     # closed form ln(l1 (1+l2')/2)
    pairs: int
    skipped: int


def check_rho_product(seq, a, b):
    """Per-pair average of ln|rho_j| over [a, b] against the coefficient integral."""
    if b <= a:
        raise DomainError("need b > a")
    rho = seq.rho_abs_array(a, b)
    bad = rho < RHO_FLOOR
    nbad = int(bad.sum())
    if nbad > max(SKIP_FRACTION_ABORT * rho.size, 0.0):
        raise NearSingularRho(int(np.argmax(bad)) + a)
    logs = np.log(rho[~bad])
    empirical = 2.0 * float(logs.mean())
    c = seq.coupling
    target = math.log(c.lambda1 * (1.0 + c.lambda2p) / 2.0)
    return RhoProductCheck(empirical=empirical, target=target,
                           pairs=(b - a + 1) // 2, skipped=nbad)


def rho_integral_quadrature(coupling, tol=1e-12):
    """Direct quadrature of the coefficient integral, for cross-checking."""
    l1, l2, l2p = coupling.lambda1, coupling.lambda2, coupling.lambda2p

    def f(t):
        return math.log(abs(l1 * complex(l2 * math.cos(2.0 * math.pi * t), l2p)))

    val, _ = quad(f, 0.0, 1.0, epsabs=tol, epsrel=tol, limit=200)
    return val


@dataclass(frozen=True)
class UpperBoundReport:
    passed: bool
    theta_max: float
    max_rate: float       # max over the grid of (1/k) ln||S_k(theta, z)||
    threshold_rate: float  # L_est + epsilon
    k: int

    def __bool__(self):
        return self.passed


def upper_bound_check(seq, z, k, epsilon, grid_points=512, random_points=64, seed=0):
    """Uniform upper bound sup_theta ||S_k(theta,z)|| <= e^{k (L_est + eps)}.

    The grid is equispaced plus a seeded random refresh to dodge aligned maxima.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    z = _as_z(z)
    rng = np.random.default_rng(seed)
    thetas = np.concatenate([
        np.arange(grid_points) / grid_points,
        rng.random(random_points),
    ])
    best_rate = -math.inf
    best_theta = float(thetas[0])
    for theta in thetas:
        prod = _run_kernel(seq, float(theta), z, 0, k)
        rate = prod.norm_log() / k
        if rate > best_rate:
            best_rate = rate
            best_theta = float(theta)
    threshold = lyapunov_closed_form(seq.coupling) + epsilon
    return UpperBoundReport(passed=best_rate <= threshold, theta_max=best_theta,
                            max_rate=best_rate, threshold_rate=threshold, k=k)
