"""Scattering and transfer matrices of a symmetric delta-function barrier.

Incoming waves ``A-``, ``B-`` and outgoing waves ``A+``, ``B+`` on the two
sides of the barrier are related by the unitary scattering matrix
``S = [[r, q], [q, r]]``; the transfer matrix ``M`` maps the amplitudes on
one side to those on the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularBarrierError

UNITARITY_TOL = 1e-12


@dataclass(frozen=True)
class ScatterCoefficients:
    q: complex
    r: complex
    s_hat: float

    @property
    def transmission(self) -> float:
        return abs(self.q) ** 2

    @property
    def reflection(self) -> float:
        return abs(self.r) ** 2

    @property
    def chi(self) -> complex:
        """Ratio q**2 / r**2; real and non-positive for a unitary barrier."""
        if self.r == 0:
            raise ZeroDivisionError("chi is undefined for a transparent barrier")
        return self.q**2 / self.r**2


@dataclass(frozen=True)
class ScatterMatrix:
    entries: np.ndarray

    def apply(self, a_in: complex, b_in: complex) -> tuple[complex, complex]:
        """Outgoing (A+, B+) for incoming (A-, B-)."""
        out = self.entries @ np.array([a_in, b_in], dtype=complex)
        return complex(out[0]), complex(out[1])


@dataclass(frozen=True)
class TransferMatrix:
    entries: np.ndarray

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.entries))

    def apply(self, a_out: complex, a_in: complex) -> tuple[complex, complex]:
        """(B-, B+) from (A+, A-)."""
        out = self.entries @ np.array([a_out, a_in], dtype=complex)
        return complex(out[0]), complex(out[1])


def delta_scatter(s_hat: float) -> ScatterCoefficients:
    """Transmission and reflection amplitudes for barrier strength ``s_hat``.

    ``s_hat = s*m/(k*hbar**2)`` is the dimensionless strength; the joint
    phase of ``q`` and ``r`` is fixed so that ``q = 1/(1 + i*s_hat)``.
    """
    s_hat = float(s_hat)
    if not math.isfinite(s_hat) or s_hat < 0:
        raise DomainError(f"s_hat must be finite and >= 0, got {s_hat!r}")
    denom = 1.0 + 1j * s_hat
    return ScatterCoefficients(q=1.0 / denom, r=-1j * s_hat / denom, s_hat=s_hat)


def scatter_matrix(c: ScatterCoefficients) -> ScatterMatrix:
    return ScatterMatrix(np.array([[c.r, c.q], [c.q, c.r]], dtype=complex))


def transfer_matrix(c: ScatterCoefficients) -> TransferMatrix:
    if c.q == 0:
        raise SingularBarrierError("transfer matrix is singular for an opaque barrier (q = 0)")
    q, r = c.q, c.r
    m = np.array([[1.0, -r], [r, q * q - r * r]], dtype=complex) / q
    return TransferMatrix(m)


def jump_partner(a: complex, s_hat: float) -> complex:
    """Standing-wave amplitude B on the far side for A+ = conj(A-) = a.

    Returns ``B`` with ``B+ = conj(B-) = B``; satisfies continuity of the wave
    function and the derivative jump imposed by the barrier.
    """
    return complex(np.conj(a) - 1j * s_hat * (a + np.conj(a)))
