"""Continued fractions, torus norms, and the arithmetic exponents of a frequency.

Convergents are exact big integers; the frequency itself lives in a software
high-precision real (mpmath, >= 256 bits by default).  Doubles appear only at
the API boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import (
    DepthExceeded,
    DomainError,
    InsufficientPrecision,
    RationalFrequency,
)

DEFAULT_PRECISION_BITS = 256

# Safety margin (bits) kept between the convergent ladder and the working
# precision before the expansion refuses to continue.
_PRECISION_GUARD_BITS = 32

GOLDEN_QUOTIENTS_64 = (1,) * 64


def _log_int(q):
    """Natural log of a positive big integer, as a float (never overflows)."""
    if q < (1 << 50):
        return math.log(q)
    ell = q.bit_length() - 50
    return math.log(q >> ell) + ell * math.log(2.0)


@dataclass(frozen=True)
class Frequency:
    """An irrational frequency with its continued-fraction data.

    convergents[n] = (p_n, q_n) for n = 0..depth with (p_0, q_0) = (0, 1);
    partial_quotients holds a_1..a_depth.
    """

    omega: mpmath.mpf
    precision_bits: int
    partial_quotients: tuple
    convergents: tuple

    @property
    def depth(self):
        return len(self.partial_quotients)

    def p(self, n):
        if n < 0 or n > self.depth:
            raise DepthExceeded(f"convergent index {n} beyond depth {self.depth}")
        return self.convergents[n][0]

    def q(self, n):
        if n < 0 or n > self.depth:
            raise DepthExceeded(f"convergent index {n} beyond depth {self.depth}")
        return self.convergents[n][1]

    def omega_float(self):
        return float(self.omega)

    def to_json(self):
        return json.dumps(
            {"quotients": list(self.partial_quotients),
             "precision_bits": self.precision_bits},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cf_build(data["quotients"], precision_bits=data.get("precision_bits"))

    def scale_rows(self):
        """Rows (n, q_n, ln q_{n+1}/q_n, ||q_n omega||) for n = 0..depth-1."""
        rows = []
        for n in range(self.depth):
            rows.append((n, self.q(n),
                         _log_int(self.q(n + 1)) / float(self.q(n)),
                         norm_qn_omega(self, n)))
        return rows


def torus_norm(x):
    """dist(x, Z) as a double; even and 1-periodic."""
    if isinstance(x, mpmath.mpf):
        return float(_torus_norm_mpf(x))
    x = float(x)
    if not math.isfinite(x):
        raise DomainError("torus_norm needs a finite argument")
    y = x - math.floor(x)
    return min(y, 1.0 - y)


def _torus_norm_mpf(x):
    y = x - mpmath.floor(x)
    return min(y, 1 - y)


def cf_expand(omega, depth, precision_bits=DEFAULT_PRECISION_BITS):
    """Continued-fraction expansion of omega in (0,1) to `depth` partial quotients."""
    if depth < 1:
        raise DomainError("depth must be >= 1")
    with mpmath.workprec(precision_bits):
        x = mpmath.mpf(omega) if not isinstance(omega, mpmath.mpf) else +omega
        if not (0 < x < 1):
            raise DomainError("omega must lie strictly between 0 and 1")
        omega_hp = +x
        digits = int(precision_bits * math.log10(2.0))
        quotient_cap = 10 ** max(digits // 2, 4)
        quotients = []
        p_prev, q_prev = 1, 0      # (p_{-1}, q_{-1})
        p_cur, q_cur = 0, 1        # (p_0, q_0)
        convergents = [(0, 1)]
        for _ in range(depth):
            if x == 0:
                raise RationalFrequency(
                    f"expansion terminated after {len(quotients)} quotients")
            if 2 * q_cur.bit_length() + _PRECISION_GUARD_BITS > precision_bits:
                raise InsufficientPrecision(
                    f"convergent q={q_cur} exhausts {precision_bits}-bit working precision")
            inv = 1 / x
            a = int(mpmath.floor(inv))
            if a < 1:
                raise InsufficientPrecision("continued-fraction step lost all digits")
            if a > quotient_cap:
                raise RationalFrequency(
                    f"partial quotient {a} exceeds the rational-detection cap {quotient_cap}")
            x = inv - a
            p_prev, p_cur = p_cur, a * p_cur + p_prev
            q_prev, q_cur = q_cur, a * q_cur + q_prev
            quotients.append(a)
            convergents.append((p_cur, q_cur))
    return Frequency(omega=omega_hp, precision_bits=precision_bits,
                     partial_quotients=tuple(quotients),
                     convergents=tuple(convergents))


def cf_build(quotients, precision_bits=None):
    """Frequency whose expansion reproduces `quotients`, extended by an all-ones tail.

    The tail pins a definite irrational in the interval the finite expansion
    leaves open; the stored quotients are exactly the given ones.
    """
    quotients = [int(a) for a in quotients]
    if len(quotients) < 1:
        raise DomainError("need at least one partial quotient")
    if any(a < 1 for a in quotients):
        raise DomainError("partial quotients must be positive integers")
    p_prev, q_prev = 1, 0
    p_cur, q_cur = 0, 1
    convergents = [(0, 1)]
    for a in quotients:
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        convergents.append((p_cur, q_cur))
    needed = 2 * q_cur.bit_length() + 64
    prec = max(precision_bits or DEFAULT_PRECISION_BITS, needed)
    with mpmath.workprec(prec):
        phi = (1 + mpmath.sqrt(5)) / 2
        omega = (phi * p_cur + p_prev) / (phi * q_cur + q_prev)
    return Frequency(omega=omega, precision_bits=prec,
                     partial_quotients=tuple(quotients),
                     convergents=tuple(convergents))


def golden_mean(depth=40):
    """(sqrt(5)-1)/2 with Fibonacci convergents."""
    return cf_build([1] * depth)


def norm_qn_omega(freq, n):
    """||q_n omega|| from the exact convergent pair, as a double."""
    if n >= freq.depth:
        raise DepthExceeded(f"need n < depth={freq.depth}, got {n}")
    with mpmath.workprec(freq.precision_bits + 64):
        d = abs(freq.q(n) * freq.omega - freq.p(n))
    return float(d)


@dataclass(frozen=True)
class BetaEstimate:
    """Samples ln(q_{n+1})/q_n and the sup over the requested tail."""

    values: tuple
    running_sup_tail: float
    tail_start: int
    depth_used: int

    def sup_from(self, tail_start):
        if tail_start >= len(self.values):
            raise DepthExceeded("tail_start beyond available scales")
        return max(self.values[tail_start:])


def beta_estimate(freq, tail_start=0):
    """Frequency-exponent samples for n = 0..depth-1 and their tail supremum."""
    if tail_start >= freq.depth:
        raise DepthExceeded(f"tail_start must be < depth={freq.depth}")
    values = []
    for n in range(freq.depth):
        q_n = freq.q(n)
        ln_next = _log_int(freq.q(n + 1))
        if q_n.bit_length() <= 1020:
            val = ln_next / float(q_n)
        else:
            val = math.exp(math.log(ln_next) - _log_int(q_n))
        values.append(val)
    return BetaEstimate(values=tuple(values),
                        running_sup_tail=max(values[tail_start:]),
                        tail_start=tail_start,
                        depth_used=freq.depth)


def beta_tail_sup(freq):
    """Sup of ln(q_{n+1})/q_n over the deepest half of the stored scales."""
    return beta_estimate(freq, tail_start=freq.depth // 2).running_sup_tail


@dataclass(frozen=True)
class PhaseDiagnostic:
    """Samples of -ln||2 theta - 1/2 + n omega|| / |n| and a tail estimate."""

    theta: float
    ns: np.ndarray
    values: np.ndarray
    gamma_tilde_estimate: float
    n_max: int

    def has_exact_resonance(self):
        return bool(np.any(np.isinf(self.values)))

    def max_sample(self):
        return float(np.max(self.values))


def gamma_tilde(freq, theta, n_max):
    """Phase-exponent diagnostic; the estimate maxes over |n| >= n_max/2.

    Exact zeros of the torus norm are reported as +inf samples at their n.
    """
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    ns = np.concatenate([np.arange(-n_max, 0), np.arange(1, n_max + 1)])
    values = np.empty(ns.shape[0], dtype=np.float64)
    with mpmath.workprec(freq.precision_bits + 32):
        theta_hp = mpmath.mpf(theta)
        base = 2 * theta_hp - mpmath.mpf(1) / 2
        omega = freq.omega
        # forward and backward orbits accumulated in high precision
        idx_pos = {}
        x = base
        for n in range(1, n_max + 1):
            x += omega
            idx_pos[n] = _torus_norm_mpf(x)
        x = base
        idx_neg = {}
        for n in range(1, n_max + 1):
            x -= omega
            idx_neg[-n] = _torus_norm_mpf(x)
        for k, n in enumerate(ns):
            nrm = idx_pos[int(n)] if n > 0 else idx_neg[int(n)]
            if nrm == 0:
                values[k] = np.inf
            else:
                values[k] = -float(mpmath.log(nrm)) / abs(int(n))
    tail = np.abs(ns) >= n_max / 2
    estimate = float(np.max(values[tail]))
    return PhaseDiagnostic(theta=float(theta), ns=ns, values=values,
                           gamma_tilde_estimate=estimate, n_max=n_max)


STRONG_LIOUVILLE = "StrongLiouville"
WEAK_LIOUVILLE = "WeakLiouville"


@dataclass(frozen=True)
class ScaleClass:
    n: int
    kind: str
    epsilon: float
    threshold_log: float  # ln of e^{eps q_n}, i.e. eps * q_n


def classify_scale(freq, n, epsilon):
    """Strong Liouville iff ln q_{n+1} > eps * q_n, decided in log arithmetic."""
    if not (0 < epsilon < 1):
        raise DomainError("epsilon must lie in (0,1)")
    if n + 1 > freq.depth:
        raise DepthExceeded(f"need n+1 <= depth={freq.depth}, got n={n}")
    q_n = freq.q(n)
    lhs = _log_int(freq.q(n + 1))
    rhs = epsilon * float(q_n) if q_n.bit_length() <= 1020 else math.inf
    return ScaleClass(n=n, kind=STRONG_LIOUVILLE if lhs > rhs else WEAK_LIOUVILLE,
                      epsilon=epsilon, threshold_log=rhs)
