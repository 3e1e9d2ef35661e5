"""Hermite polynomials, oscillator eigenfunctions and operator matrices."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import PhysicalParams, basis_functions

LABELS = ("x", "p", "xp_anticommutator", "x2", "p2", "h", "H0pt")


def hermite(n: int, z):
    """Physicists' Hermite polynomial H_n(z) by the three-term recurrence.

    Works for real or complex scalars and arrays.
    """
    if n < 0:
        raise ValueError("order must be non-negative")
    z = np.asarray(z)
    prev = np.ones_like(z, dtype=np.result_type(z, float))
    if n == 0:
        return prev if prev.ndim else prev.item()
    cur = 2 * z * prev
    for k in range(1, n):
        prev, cur = cur, 2 * z * cur - 2 * k * prev
    return cur if np.ndim(cur) else cur.item()


def phi(n: int, z, params: PhysicalParams):
    """Oscillator eigenfunction phi_n at (complex) z.

    Evaluated through the normalised Hermite-function recurrence, which
    agrees with the closed form [sqrt(m0 W0)/(n! 2^n sqrt(pi hbar))]^(1/2)
    exp(-m0 W0 z^2/2hbar) H_n(z sqrt(m0 W0/hbar)) but cannot overflow.
    """
    if n < 0:
        raise ValueError("order must be non-negative")
    z_arr = np.asarray(z, dtype=np.complex128)
    vals = basis_functions(params, n + 1, z_arr.ravel())[n].reshape(z_arr.shape)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError(f"phi_{n} is not finite at the requested point(s)")
    return vals if vals.ndim else complex(vals)


def energy(n: int, params: PhysicalParams) -> float:
    """Eigenvalue of p^2/2m0 + m0 W0^2 x^2/2 + i x.

    Completing the square gives hbar W0 (n + 1/2) + 1/(2 m0 W0^2); the
    constant is positive.
    """
    if n < 0:
        raise ValueError("order must be non-negative")
    return params.hbar * params.omega0 * (n + 0.5) + 0.5 * params.shift


def energy_printed(n: int, params: PhysicalParams) -> float:
    """The variant with a negative constant, kept for the sign adjudication."""
    return params.hbar * params.omega0 * (n + 0.5) - 0.5 * params.shift


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    label: str
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(f"{self.label}*{other.label}", self.entries @ other.entries)
        return self.entries @ other


def operator_matrix(label: str, params: PhysicalParams, dim: int) -> OperatorMatrix:
    """Dense matrix of an operator in the phi_n basis.

    ``x2``, ``p2`` and ``xp_anticommutator`` use exact matrix elements of the
    squared operators, so they agree with products of the truncated ``x``
    and ``p`` matrices everywhere except the last basis row/column.
    """
    if label not in LABELS:
        raise ValueError(f"unknown operator label {label!r}; expected one of {LABELS}")
    if dim < 4:
        raise ValueError("dim must be at least 4")
    entries = _operator_entries(label, params, dim).copy()
    entries.setflags(write=False)
    return OperatorMatrix(label, entries)


@lru_cache(maxsize=128)
def _operator_entries(label, params, dim):
    n = np.arange(dim, dtype=float)
    hb, m, w = params.hbar, params.m0, params.omega0
    sq1 = np.sqrt(n[1:])  # <n-1|a|n>
    sq2 = np.sqrt(n[1:-1] * n[2:])  # <n-2|a^2|n>
    if label == "x":
        s = np.sqrt(hb / (2 * m * w))
        out = s * (np.diag(sq1, 1) + np.diag(sq1, -1)).astype(complex)
    elif label == "p":
        s = np.sqrt(hb * m * w / 2)
        out = 1j * s * (np.diag(sq1, -1) - np.diag(sq1, 1))
    elif label == "x2":
        s = hb / (2 * m * w)
        out = s * (np.diag(2 * n + 1) + np.diag(sq2, 2) + np.diag(sq2, -2)).astype(complex)
    elif label == "p2":
        s = hb * m * w / 2
        out = s * (np.diag(2 * n + 1) - np.diag(sq2, 2) - np.diag(sq2, -2)).astype(complex)
    elif label == "xp_anticommutator":
        out = 1j * hb * (np.diag(sq2, -2) - np.diag(sq2, 2))
    elif label == "h":
        out = np.diag([energy(k, params) for k in range(dim)]).astype(complex)
    else:  # H0pt
        out = (_operator_entries("p2", params, dim) / (2 * m)
               + 0.5 * m * w**2 * _operator_entries("x2", params, dim)
               + 1j * _operator_entries("x", params, dim))
    return out
