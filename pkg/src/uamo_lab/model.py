"""Couplings, Verblunsky coefficient sequences, CMV blocks, and finite restrictions.

The doubled operator is a product of two block-diagonal unitaries: the even
blocks carry the constant shift coupling, the odd blocks the quasi-periodic
coin.  Finite restrictions come in two flavors: the plain cut-off (a strict
contraction) and a unitary closure obtained by replacing the two boundary
coefficients with unimodular constants, which decouples the interval exactly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .arithmetic import Frequency
from .errors import DegenerateCoupling, DomainError, IntervalTooSmall

SUPERCRITICAL = "Supercritical"
CRITICAL = "Critical"
SUBCRITICAL = "Subcritical"

DIRICHLET = "Dirichlet"
UNITARY_CLOSURE = "UnitaryClosure"


@dataclass(frozen=True)
class Coupling:
    lambda1: float
    lambda2: float
    lambda1p: float
    lambda2p: float
    L_plus: float
    L_minus: float
    L: float
    regime: str


def make_coupling(lambda1, lambda2):
    """Coupling pair with derived complements, exponents, and regime tag."""
    l1, l2 = float(lambda1), float(lambda2)
    for name, v in (("lambda1", l1), ("lambda2", l2)):
        if not (0.0 <= v <= 1.0):
            raise DomainError(f"{name}={v} outside [0, 1]")
    if l1 == 0.0 or l2 == 0.0:
        raise DegenerateCoupling("lambda1 and lambda2 must be positive")
    l1p = math.sqrt(1.0 - l1 * l1)
    l2p = math.sqrt(1.0 - l2 * l2)
    L_plus = math.log(l2 * (1.0 + l1p) / 2.0)
    L_minus = math.log(l1 * (1.0 + l2p) / 2.0)
    if l1 < l2:
        regime = SUPERCRITICAL
    elif l1 == l2:
        regime = CRITICAL
    else:
        regime = SUBCRITICAL
    return Coupling(lambda1=l1, lambda2=l2, lambda1p=l1p, lambda2p=l2p,
                    L_plus=L_plus, L_minus=L_minus, L=L_plus - L_minus,
                    regime=regime)


@dataclass(frozen=True)
class VerblunskySequence:
    """Coefficient sequence alpha_n, rho_n for the doubled lattice.

    Even indices carry the constant shift data, odd index 2i+1 samples the
    coin at phase theta + i*omega.
    """

    coupling: Coupling
    freq: Frequency
    theta: float

    @property
    def omega(self):
        return self.freq.omega_float()

    def with_theta(self, theta):
        return VerblunskySequence(self.coupling, self.freq, float(theta))

    def shifted(self, delta):
        return self.with_theta(self.theta + delta)

    def alpha(self, n):
        c = self.coupling
        if n % 2 == 0:
            return c.lambda1p
        i = (n - 1) // 2
        return c.lambda2 * math.sin(2.0 * math.pi * (self.theta + i * self.omega))

    def rho(self, n):
        """The signed/complex rho of the coefficient definition (odd n is complex)."""
        c = self.coupling
        if n % 2 == 0:
            return complex(c.lambda1)
        i = (n - 1) // 2
        return complex(c.lambda2 * math.cos(2.0 * math.pi * (self.theta + i * self.omega)),
                       c.lambda2p)

    def rho_abs(self, n):
        a = self.alpha(n)
        return math.sqrt(max(1.0 - a * a, 0.0))

    def alpha_array(self, a, b):
        """alpha_n for n = a..b as a float array (all coefficients are real)."""
        n = np.arange(a, b + 1)
        out = np.empty(n.shape[0], dtype=np.float64)
        even = (n % 2) == 0
        out[even] = self.coupling.lambda1p
        i = (n[~even] - 1) // 2
        out[~even] = self.coupling.lambda2 * np.sin(
            2.0 * np.pi * (self.theta + i * self.omega))
        return out

    def rho_abs_array(self, a, b):
        al = self.alpha_array(a, b)
        return np.sqrt(np.maximum(1.0 - al * al, 0.0))


def verblunsky(seq, n):
    """(alpha_n, rho_n) exactly as defined, rho complex on odd indices."""
    return complex(seq.alpha(n)), seq.rho(n)


def cmv_block(alpha):
    """2x2 block [[conj(a), rho], [rho, -a]] with rho = sqrt(1-|a|^2) >= 0."""
    alpha = complex(alpha)
    mod2 = alpha.real * alpha.real + alpha.imag * alpha.imag
    if mod2 > 1.0:
        raise DomainError(f"|alpha|={math.sqrt(mod2):.6f} outside the closed unit disk")
    rho = math.sqrt(max(1.0 - mod2, 0.0))
    return np.array([[alpha.conjugate(), rho], [rho, -alpha]], dtype=np.complex128)


def _factor_diagonals(seq, a, b, parity, left_alpha=None, right_alpha=None):
    """Tridiagonal (sub, diag, super) of one restricted block-diagonal factor.

    parity 0 gives the even-block factor, parity 1 the odd-block factor.
    left_alpha/right_alpha override alpha_{a-1} and alpha_b (unitary closure).
    """
    n = b - a + 1
    g = np.arange(a, b + 1)
    starts = (np.mod(g, 2) == parity)
    alphas = seq.alpha_array(a - 1, b).astype(np.complex128)  # index g-a+1 holds alpha_g
    if left_alpha is not None:
        alphas[0] = left_alpha
    if right_alpha is not None:
        alphas[-1] = right_alpha
    rhos = np.sqrt(np.maximum(1.0 - np.abs(alphas) ** 2, 0.0))

    diag = np.where(starts, np.conj(alphas[1:]), -alphas[:-1])
    sup = np.zeros(n, dtype=np.complex128)
    sub = np.zeros(n, dtype=np.complex128)
    sup[:-1] = np.where(starts[:-1], rhos[1:-1], 0.0)
    sub[1:] = np.where(starts[:-1], rhos[1:-1], 0.0)
    return sub, diag, sup


def _banded_product(lf, mf):
    """Pentadiagonal product of two tridiagonal factors, as offset arrays -2..2."""
    lsub, ld, lsup = lf
    msub, md, msup = mf
    n = ld.shape[0]
    out = {o: np.zeros(n, dtype=np.complex128) for o in range(-2, 3)}
    # W[i, i+o] = sum_{p+q=o} L[i, i+p] M[i+p, i+p+q]
    out[2][: n - 2] = lsup[: n - 2] * msup[1: n - 1]
    out[1][: n - 1] = ld[: n - 1] * msup[: n - 1] + lsup[: n - 1] * md[1:]
    out[0] = ld * md
    out[0][: n - 1] += lsup[: n - 1] * msub[1:]
    out[0][1:] += lsub[1:] * msup[: n - 1]
    out[-1][1:] = lsub[1:] * md[: n - 1] + ld[1:] * msub[1:]
    out[-2][2:] = lsub[2:] * msub[1: n - 1]
    return out


@dataclass(frozen=True)
class FiniteCMV:
    """Banded finite restriction (bandwidth 2 each side) of the doubled operator."""

    a: int
    b: int
    boundary: str
    boundary_phase: float
    diagonals: dict  # offset -> ndarray over rows
    seq: VerblunskySequence

    @property
    def n(self):
        return self.b - self.a + 1

    def entry_arrays(self):
        return self.diagonals

    def to_dense(self):
        n = self.n
        w = np.zeros((n, n), dtype=np.complex128)
        for o, arr in self.diagonals.items():
            for i in range(max(0, -o), min(n, n - o)):
                w[i, i + o] = arr[i]
        return w

    def export_coo(self, fileobj):
        """Coordinate-list text dump: row col re im, one entry per line."""
        n = self.n
        for o in sorted(self.diagonals):
            arr = self.diagonals[o]
            for i in range(max(0, -o), min(n, n - o)):
                v = arr[i]
                if v != 0:
                    fileobj.write(f"{i} {i + o} {v.real!r} {v.imag!r}\n")


def restricted_factors(seq, a, b, boundary=DIRICHLET, boundary_phase=0.0):
    """The two tridiagonal factors of the restriction, even-parity first."""
    left = right = None
    if boundary == UNITARY_CLOSURE:
        w = cmath.exp(1j * boundary_phase)
        left, right = w, w
    lf_kw = {}
    mf_kw = {}
    if (a - 1) % 2 == 0:
        lf_kw["left_alpha"] = left
    else:
        mf_kw["left_alpha"] = left
    if b % 2 == 0:
        lf_kw["right_alpha"] = right
    else:
        mf_kw["right_alpha"] = right
    lf = _factor_diagonals(seq, a, b, 0, **lf_kw)
    mf = _factor_diagonals(seq, a, b, 1, **mf_kw)
    return lf, mf


def build_finite_cmv(seq, a, b, boundary=DIRICHLET, boundary_phase=0.0):
    """Assemble the banded restriction to [a, b] with the requested boundary."""
    if b - a < 2:
        raise IntervalTooSmall("finite restriction needs b - a >= 2")
    if boundary not in (DIRICHLET, UNITARY_CLOSURE):
        raise DomainError(f"unknown boundary {boundary!r}")
    lf, mf = restricted_factors(seq, a, b, boundary, boundary_phase)
    diagonals = _banded_product(lf, mf)
    return FiniteCMV(a=a, b=b, boundary=boundary, boundary_phase=boundary_phase,
                     diagonals=diagonals, seq=seq)


def apply_w(seq, start, values):
    """Apply the full-line operator to a finitely supported vector.

    Returns (new_start, new_values) with support grown by two sites; the
    full-line operator is unitary, so the norm is preserved.
    """
    values = np.asarray(values, dtype=np.complex128)
    if values.ndim != 1 or values.size == 0:
        raise DomainError("psi must be a nonempty one-dimensional sequence")
    a = start - 2
    b = start + values.size + 1
    n = b - a + 1
    psi = np.zeros(n, dtype=np.complex128)
    psi[2: 2 + values.size] = values

    def full_line_factor(parity):
        g = np.arange(a, b + 1)
        starts = (np.mod(g, 2) == parity)
        alphas = seq.alpha_array(a - 1, b + 1).astype(np.complex128)
        rhos = np.sqrt(np.maximum(1.0 - np.abs(alphas) ** 2, 0.0))
        diag = np.where(starts, np.conj(alphas[1:-1]), -alphas[:-2])
        sup = np.where(starts, rhos[1:-1], 0.0).astype(np.complex128)
        sup[-1] = 0.0
        sub = np.zeros(n, dtype=np.complex128)
        sub[1:] = np.where(starts[:-1], rhos[1:-2], 0.0)
        return sub, diag, sup

    def tri_apply(factor, x):
        sub, diag, sup = factor
        y = diag * x
        y[:-1] += sup[:-1] * x[1:]
        y[1:] += sub[1:] * x[:-1]
        return y

    out = tri_apply(full_line_factor(0), tri_apply(full_line_factor(1), psi))
    return a, out
