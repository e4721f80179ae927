"""Hot numeric kernels: numba @njit with a pure-Python/numpy fallback.

The fallback is selected automatically when numba is missing, or forced with
the environment flag UAMO_LAB_NO_NUMBA=1.  Both implementations are kept
importable so the benchmark and the equivalence tests can compare them.
"""

import math
import os

import numpy as np


def _numba_wanted():
    flag = os.environ.get("UAMO_LAB_NO_NUMBA", "").strip().lower()
    return flag not in ("1", "true", "yes", "on")


HAVE_NUMBA = False
if _numba_wanted():
    try:
        from numba import njit as _njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - environment without numba
        HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# Szego cocycle product with per-step renormalization.
#
# Index convention: CMV index n; even n carries the constant shift coefficient
# alpha = sqrt(1-l1^2), odd n = 2i+1 carries alpha = l2*sin(2*pi*(theta+i*omega)).
# The running 2x2 product is rescaled every step so its max entry magnitude is
# 1; the log of the scale accumulates in a Kahan-compensated sum.
# ---------------------------------------------------------------------------

def _transfer_product_py(l1, l2, theta, omega, z, start, count, rho_floor):
    l1p = math.sqrt(max(1.0 - l1 * l1, 0.0))
    m00 = 1.0 + 0.0j
    m01 = 0.0 + 0.0j
    m10 = 0.0 + 0.0j
    m11 = 1.0 + 0.0j
    log_scale = 0.0
    comp = 0.0
    det_log = 0.0  # per-step |det S| = (1-alpha^2)/rho^2, tracked to avoid cancellation
    for j in range(count):
        n = start + j
        if n % 2 == 0:
            alpha = l1p
            rho = l1
        else:
            i = (n - 1) // 2
            alpha = l2 * math.sin(2.0 * math.pi * (theta + i * omega))
            rho = math.sqrt(max(1.0 - alpha * alpha, 0.0))
        if rho < rho_floor:
            return m00, m01, m10, m11, log_scale, det_log, j, n
        det_log += math.log((1.0 - alpha * alpha) / (rho * rho))
        a00 = z * m00 - alpha * m10
        a01 = z * m01 - alpha * m11
        a10 = -alpha * z * m00 + m10
        a11 = -alpha * z * m01 + m11
        s = max(max(abs(a00), abs(a01)), max(abs(a10), abs(a11))) / rho
        inv = 1.0 / (s * rho)
        m00 = a00 * inv
        m01 = a01 * inv
        m10 = a10 * inv
        m11 = a11 * inv
        y = math.log(s) - comp
        t = log_scale + y
        comp = (t - log_scale) - y
        log_scale = t
    return m00, m01, m10, m11, log_scale, det_log, count, -1


# ---------------------------------------------------------------------------
# Log-domain banded LU determinant with partial pivoting.
#
# ab is LAPACK-style band storage with kl = ku = 2 and two extra fill rows:
# ab[4 + i - j, j] = A[i, j], shape (7, n).  The array is modified in place.
# Returns (log|det|, phase) with phase unreduced; log|det| = -inf for a
# singular matrix.
# ---------------------------------------------------------------------------

def _banded_logdet_py(ab, n):
    log_mag = 0.0
    phase = 0.0
    neg = False
    for j in range(n):
        rmax = j + 2
        if rmax > n - 1:
            rmax = n - 1
        p = j
        best = abs(ab[4, j])
        for i in range(j + 1, rmax + 1):
            v = abs(ab[4 + i - j, j])
            if v > best:
                best = v
                p = i
        if best == 0.0:
            return -np.inf, 0.0
        cmax = j + 4
        if cmax > n - 1:
            cmax = n - 1
        if p != j:
            neg = not neg
            for c in range(j, cmax + 1):
                r1 = 4 + j - c
                r2 = 4 + p - c
                tmp = ab[r1, c]
                ab[r1, c] = ab[r2, c]
                ab[r2, c] = tmp
        piv = ab[4, j]
        log_mag += math.log(abs(piv))
        phase += math.atan2(piv.imag, piv.real)
        for i in range(j + 1, rmax + 1):
            f = ab[4 + i - j, j] / piv
            if f != 0.0:
                for c in range(j + 1, cmax + 1):
                    ab[4 + i - c, c] -= f * ab[4 + j - c, c]
    if neg:
        phase += math.pi
    return log_mag, phase


# ---------------------------------------------------------------------------
# Node-sum helpers for the interpolation defect: sums of ln|x - nodes|.
# ---------------------------------------------------------------------------

def _logabs_grid_py(grid, nodes, out):
    for g in range(grid.shape[0]):
        acc = 0.0
        x = grid[g]
        for k in range(nodes.shape[0]):
            acc += math.log(abs(x - nodes[k]))
        out[g] = acc


def _logabs_pairwise_py(nodes, out):
    m = nodes.shape[0]
    for i in range(m):
        acc = 0.0
        xi = nodes[i]
        for k in range(m):
            if k != i:
                acc += math.log(abs(xi - nodes[k]))
        out[i] = acc


def _logabs_grid_np(grid, nodes, out):
    np.sum(np.log(np.abs(grid[:, None] - nodes[None, :])), axis=1, out=out)


def _logabs_pairwise_np(nodes, out):
    d = np.abs(nodes[:, None] - nodes[None, :])
    np.fill_diagonal(d, 1.0)
    np.sum(np.log(d), axis=1, out=out)


if HAVE_NUMBA:
    _transfer_product_nb = _njit(cache=True, nogil=True)(_transfer_product_py)
    _banded_logdet_nb = _njit(cache=True, nogil=True)(_banded_logdet_py)
    _logabs_grid_nb = _njit(cache=True, nogil=True)(_logabs_grid_py)
    _logabs_pairwise_nb = _njit(cache=True, nogil=True)(_logabs_pairwise_py)

    transfer_product_kernel = _transfer_product_nb
    banded_logdet_kernel = _banded_logdet_nb
    _logabs_grid = _logabs_grid_nb
    _logabs_pairwise = _logabs_pairwise_nb
else:
    transfer_product_kernel = _transfer_product_py
    banded_logdet_kernel = _banded_logdet_py
    _logabs_grid = _logabs_grid_np
    _logabs_pairwise = _logabs_pairwise_np


def banded_logdet(ab, n):
    """Determinant of a banded matrix in (7, n) working storage as (log_mag, phase).

    The input band is consumed (copied internally)."""
    work = np.array(ab, dtype=np.complex128, order="C", copy=True)
    log_mag, phase = banded_logdet_kernel(work, n)
    return log_mag, phase % (2.0 * math.pi)


def logabs_grid_sums(grid, nodes):
    """out[g] = sum_k ln|grid[g] - nodes[k]| (may contain -inf on exact hits)."""
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    nodes = np.ascontiguousarray(nodes, dtype=np.float64)
    out = np.empty(grid.shape[0], dtype=np.float64)
    with np.errstate(divide="ignore"):
        _logabs_grid(grid, nodes, out)
    return out


def logabs_pairwise_sums(nodes):
    """out[i] = sum_{k != i} ln|nodes[i] - nodes[k]|."""
    nodes = np.ascontiguousarray(nodes, dtype=np.float64)
    out = np.empty(nodes.shape[0], dtype=np.float64)
    with np.errstate(divide="ignore"):
        _logabs_pairwise(nodes, out)
    return out


def spectral_norm_2x2(m00, m01, m10, m11):
    """Largest singular value of a 2x2 complex matrix, in closed form."""
    g00 = abs(m00) ** 2 + abs(m10) ** 2
    g11 = abs(m01) ** 2 + abs(m11) ** 2
    g01 = m00.conjugate() * m01 + m10.conjugate() * m11
    tr = g00 + g11
    disc = math.sqrt(max((g00 - g11) ** 2 + 4.0 * abs(g01) ** 2, 0.0))
    return math.sqrt(max(tr + disc, 0.0) / 2.0)
