"""Hot numeric kernels.

Each kernel exists twice: a loop-style version compiled with ``numba.njit``
and a vectorised numpy/scipy version.  The numba path is used unless the
environment variable ``CTPT_NO_NUMBA`` is set to a truthy value or numba
cannot be imported.  Both paths are importable explicitly through
:data:`NUMBA` and :data:`NUMPY` (the benchmark and the equivalence tests do
this).
"""
import math
import os
from types import SimpleNamespace

import numpy as np
from scipy.linalg import solve_banded

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_PI_QUARTER = math.pi ** -0.25


def _njit(fn):
    if HAVE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def _flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


# ---------------------------------------------------------------------------
# loop implementations (compiled by numba when available)
# ---------------------------------------------------------------------------


@_njit
def _hermite_functions_loop(nmax, xi):
    npts = xi.shape[0]
    out = np.zeros((nmax, npts), dtype=np.complex128)
    for j in range(npts):
        z = xi[j]
        prev = _PI_QUARTER * np.exp(-0.5 * z * z)
        out[0, j] = prev
        if nmax > 1:
            cur = math.sqrt(2.0) * z * prev
            out[1, j] = cur
            for k in range(1, nmax - 1):
                nxt = math.sqrt(2.0 / (k + 1)) * z * cur - math.sqrt(k / (k + 1.0)) * prev
                out[k + 1, j] = nxt
                prev = cur
                cur = nxt
    return out


@_njit
def _cubic_interp_loop(x0, h, values, xq):
    n = values.shape[0]
    out = np.zeros(xq.shape[0], dtype=np.complex128)
    x_end = x0 + (n - 1) * h
    for q in range(xq.shape[0]):
        xv = xq[q]
        if xv < x0 - 1e-12 * h or xv > x_end + 1e-12 * h:
            continue
        s = (xv - x0) / h
        i = int(math.floor(s))
        if i < 1:
            i = 1
        elif i > n - 3:
            i = n - 3
        t = s - i
        wm = -t * (t - 1.0) * (t - 2.0) / 6.0
        w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
        w1 = -(t + 1.0) * t * (t - 2.0) / 2.0
        w2 = (t + 1.0) * t * (t - 1.0) / 6.0
        out[q] = wm * values[i - 1] + w0 * values[i] + w1 * values[i + 1] + w2 * values[i + 2]
    return out


@_njit
def _penta_matvec_loop(ab, v):
    # ab uses the scipy solve_banded layout with l = u = 2: ab[2 + i - j, j] = A[i, j]
    n = v.shape[0]
    out = np.zeros(n, dtype=np.complex128)
    for i in range(n):
        acc = 0j
        for j in range(max(0, i - 2), min(n, i + 3)):
            acc += ab[2 + i - j, j] * v[j]
        out[i] = acc
    return out


@_njit
def _penta_solve_loop(ab, rhs):
    # Gaussian elimination without pivoting; callers guarantee a positive
    # definite Hermitian part, which keeps every pivot away from zero.
    n = rhs.shape[0]
    a = ab.copy()
    r = rhs.copy()
    for k in range(n):
        piv = a[2, k]
        for i in range(k + 1, min(k + 3, n)):
            f = a[2 + i - k, k] / piv
            if f == 0:
                continue
            for j in range(k, min(k + 3, n)):
                a[2 + i - j, j] -= f * a[2 + k - j, j]
            r[i] -= f * r[k]
    x = np.zeros(n, dtype=np.complex128)
    for i in range(n - 1, -1, -1):
        s = r[i]
        for j in range(i + 1, min(i + 3, n)):
            s -= a[2 + i - j, j] * x[j]
        x[i] = s / a[2, i]
    return x


@_njit
def _cn_bands(x, kin, alpha, m0, omega2, tau, drive):
    """Bands of A = I + i*tau*H and B = I - i*tau*H for one midpoint alpha."""
    n = x.shape[0]
    a = np.zeros((5, n), dtype=np.complex128)
    b = np.zeros((5, n), dtype=np.complex128)
    sa = math.sqrt(alpha)
    for j in range(n):
        pot = 0.5 * alpha * m0 * omega2 * x[j] * x[j] + 1j * drive * x[j] * sa
        hd = 30.0 * kin + pot
        a[2, j] = 1.0 + 1j * tau * hd
        b[2, j] = 1.0 - 1j * tau * hd
        a[1, j] = -16.0j * tau * kin
        a[3, j] = -16.0j * tau * kin
        a[0, j] = 1j * tau * kin
        a[4, j] = 1j * tau * kin
        b[1, j] = 16.0j * tau * kin
        b[3, j] = 16.0j * tau * kin
        b[0, j] = -1j * tau * kin
        b[4, j] = -1j * tau * kin
    return a, b


@_njit
def _cn_propagate_loop(psi0, x, h, hbar, m0, omega2, alpha_mid, dt, stride, drive):
    nsteps = alpha_mid.shape[0]
    nsnap = nsteps // stride + 1
    snaps = np.zeros((nsnap, psi0.shape[0]), dtype=np.complex128)
    psi = psi0.copy()
    snaps[0] = psi
    tau = dt / (2.0 * hbar)
    k = 1
    for step in range(nsteps):
        alpha = alpha_mid[step]
        kin = hbar * hbar / (2.0 * m0 * alpha) / (12.0 * h * h)
        a, b = _cn_bands(x, kin, alpha, m0, omega2, tau, drive)
        psi = _penta_solve_loop(a, _penta_matvec_loop(b, psi))
        if (step + 1) % stride == 0:
            snaps[k] = psi
            k += 1
    return snaps


# ---------------------------------------------------------------------------
# numpy / scipy implementations
# ---------------------------------------------------------------------------


def _hermite_functions_np(nmax, xi):
    xi = np.asarray(xi, dtype=np.complex128)
    out = np.zeros((nmax, xi.shape[0]), dtype=np.complex128)
    out[0] = _PI_QUARTER * np.exp(-0.5 * xi * xi)
    if nmax > 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for k in range(1, nmax - 1):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * xi * out[k] - np.sqrt(k / (k + 1.0)) * out[k - 1]
    return out


def _cubic_interp_np(x0, h, values, xq):
    values = np.asarray(values, dtype=np.complex128)
    xq = np.asarray(xq, dtype=np.float64)
    n = values.shape[0]
    s = (xq - x0) / h
    inside = (s >= -1e-12) & (s <= n - 1 + 1e-12)
    i = np.clip(np.floor(s).astype(np.int64), 1, n - 3)
    t = s - i
    wm = -t * (t - 1.0) * (t - 2.0) / 6.0
    w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
    w1 = -(t + 1.0) * t * (t - 2.0) / 2.0
    w2 = (t + 1.0) * t * (t - 1.0) / 6.0
    out = wm * values[i - 1] + w0 * values[i] + w1 * values[i + 1] + w2 * values[i + 2]
    return np.where(inside, out, 0.0)


def _penta_matvec_np(ab, v):
    v = np.asarray(v, dtype=np.complex128)
    out = ab[2] * v
    out[:-1] += ab[1, 1:] * v[1:]
    out[:-2] += ab[0, 2:] * v[2:]
    out[1:] += ab[3, :-1] * v[:-1]
    out[2:] += ab[4, :-2] * v[:-2]
    return out


def _penta_solve_np(ab, rhs):
    return solve_banded((2, 2), ab, rhs, check_finite=False)


def _cn_bands_np(x, kin, alpha, m0, omega2, tau, drive):
    n = x.shape[0]
    pot = 0.5 * alpha * m0 * omega2 * x * x + 1j * drive * x * np.sqrt(alpha)
    hd = 30.0 * kin + pot
    a = np.empty((5, n), dtype=np.complex128)
    a[0] = a[4] = 1j * tau * kin
    a[1] = a[3] = -16.0j * tau * kin
    a[2] = 1.0 + 1j * tau * hd
    b = np.empty((5, n), dtype=np.complex128)
    b[0] = b[4] = -1j * tau * kin
    b[1] = b[3] = 16.0j * tau * kin
    b[2] = 1.0 - 1j * tau * hd
    return a, b


def _cn_propagate_np(psi0, x, h, hbar, m0, omega2, alpha_mid, dt, stride, drive=1.0):
    nsteps = alpha_mid.shape[0]
    snaps = np.zeros((nsteps // stride + 1, psi0.shape[0]), dtype=np.complex128)
    psi = np.array(psi0, dtype=np.complex128)
    snaps[0] = psi
    tau = dt / (2.0 * hbar)
    k = 1
    for step, alpha in enumerate(alpha_mid):
        kin = hbar * hbar / (2.0 * m0 * alpha) / (12.0 * h * h)
        a, b = _cn_bands_np(x, kin, alpha, m0, omega2, tau, drive)
        psi = _penta_solve_np(a, _penta_matvec_np(b, psi))
        if (step + 1) % stride == 0:
            snaps[k] = psi
            k += 1
    return snaps


NUMPY = SimpleNamespace(
    name="numpy",
    hermite_functions=_hermite_functions_np,
    cubic_interp=_cubic_interp_np,
    penta_matvec=_penta_matvec_np,
    penta_solve=_penta_solve_np,
    cn_propagate=_cn_propagate_np,
)

if HAVE_NUMBA:

    def _hermite_functions_nb_wrapped(nmax, xi):
        return _hermite_functions_loop(int(nmax), np.ascontiguousarray(xi, dtype=np.complex128))

    def _cubic_interp_nb_wrapped(x0, h, values, xq):
        return _cubic_interp_loop(
            float(x0),
            float(h),
            np.ascontiguousarray(values, dtype=np.complex128),
            np.ascontiguousarray(xq, dtype=np.float64),
        )

    def _cn_propagate_nb_wrapped(psi0, x, h, hbar, m0, omega2, alpha_mid, dt, stride, drive=1.0):
        return _cn_propagate_loop(
            np.ascontiguousarray(psi0, dtype=np.complex128),
            np.ascontiguousarray(x, dtype=np.float64),
            float(h),
            float(hbar),
            float(m0),
            float(omega2),
            np.ascontiguousarray(alpha_mid, dtype=np.float64),
            float(dt),
            int(stride),
            float(drive),
        )

    NUMBA = SimpleNamespace(
        name="numba",
        hermite_functions=_hermite_functions_nb_wrapped,
        cubic_interp=_cubic_interp_nb_wrapped,
        penta_matvec=lambda ab, v: _penta_matvec_loop(
            np.ascontiguousarray(ab, dtype=np.complex128), np.ascontiguousarray(v, dtype=np.complex128)
        ),
        penta_solve=lambda ab, rhs: _penta_solve_loop(
            np.ascontiguousarray(ab, dtype=np.complex128), np.ascontiguousarray(rhs, dtype=np.complex128)
        ),
        cn_propagate=_cn_propagate_nb_wrapped,
    )
else:  # pragma: no cover
    NUMBA = None


def active():
    """Return the kernel namespace selected for this process."""
    if NUMBA is None or _flag("CTPT_NO_NUMBA"):
        return NUMPY
    return NUMBA


def hermite_functions(nmax, xi):
    """Normalised Hermite functions psi_0..psi_{nmax-1} at complex points ``xi``."""
    return active().hermite_functions(nmax, xi)


def cubic_interp(x0, h, values, xq):
    """Four-point Lagrange interpolation on a uniform grid, zero outside it."""
    return active().cubic_interp(x0, h, values, xq)


def penta_matvec(ab, v):
    return active().penta_matvec(ab, v)


def penta_solve(ab, rhs):
    return active().penta_solve(ab, rhs)


def cn_propagate(psi0, x, h, hbar, m0, omega2, alpha_mid, dt, stride, drive=1.0):
    """Crank-Nicolson steps with a pentadiagonal 4th-order kinetic term.

    ``alpha_mid`` holds alpha at each step midpoint; ``drive`` scales the
    i*sqrt(alpha)*x potential (0 gives the Hermitian oscillator).
    """
    return active().cn_propagate(psi0, x, h, hbar, m0, omega2, alpha_mid, dt, stride, drive)
