"""Two-level dynamics of the partition states |A> and |B> of a mode pair.

A pair is anything exposing ``delta_omega`` (frequency splitting) and
``omega_0`` (mean frequency); both :class:`~decotunnel.spectral.ModePair`
and :class:`~decotunnel.spectral.NearResonantParams` qualify.  Amplitudes
are the volume-adjusted section amplitudes, so that ``|a|**2 + |b|**2 = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Protocol

import numpy as np

from .errors import DomainError, SelectionError

NORM_TOL = 1e-10


class PairLike(Protocol):
    delta_omega: float
    omega_0: float


class Section(str, Enum):
    A = "A"
    B = "B"

    @property
    def index(self) -> int:
        return 0 if self is Section.A else 1


@dataclass(frozen=True)
class PartitionAmplitudes:
    a: complex
    b: complex

    @classmethod
    def from_array(cls, v) -> "PartitionAmplitudes":
        return cls(complex(v[0]), complex(v[1]))

    @classmethod
    def in_section(cls, section: Section) -> "PartitionAmplitudes":
        return cls(1.0 + 0j, 0j) if section is Section.A else cls(0j, 1.0 + 0j)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b], dtype=complex)

    @property
    def norm(self) -> float:
        return math.sqrt(abs(self.a) ** 2 + abs(self.b) ** 2)

    @property
    def p_a(self) -> float:
        return abs(self.a) ** 2

    @property
    def p_b(self) -> float:
        return abs(self.b) ** 2

    def normalized(self) -> "PartitionAmplitudes":
        n = self.norm
        if n == 0:
            raise DomainError("cannot normalize the zero state")
        return PartitionAmplitudes(self.a / n, self.b / n)


@dataclass(frozen=True)
class TwoStateHamiltonian:
    h0: np.ndarray
    h1: np.ndarray
    xi: float
    e_plus: float
    e_minus: float

    @property
    def matrix(self) -> np.ndarray:
        return self.h0 + self.h1


def _xi_of(pair, xi: Optional[float]) -> float:
    if xi is not None:
        return float(xi)
    value = getattr(pair, "xi", None)
    if value is None:
        raise DomainError("xi must be given for this pair type")
    return float(value)


def hamiltonian(pair: PairLike, xi: Optional[float] = None) -> TwoStateHamiltonian:
    """Mean-energy part plus traceless coupling in the partition basis."""
    xi = _xi_of(pair, xi)
    dw, w0 = pair.delta_omega, pair.omega_0
    c = dw / (1.0 + xi * xi)
    h1 = c * np.array([[(1.0 - xi * xi) / 2.0, xi], [xi, (xi * xi - 1.0) / 2.0]], dtype=complex)
    h0 = w0 * np.eye(2, dtype=complex)
    return TwoStateHamiltonian(h0=h0, h1=h1, xi=xi, e_plus=w0 + dw / 2.0, e_minus=w0 - dw / 2.0)


def partition_transform(pair, xi: Optional[float] = None) -> tuple[float, np.ndarray]:
    """``xi`` and the orthogonal matrix taking (|+>, |->) components to (|A>, |B>).

    The matrix is symmetric and squares to the identity, so the same matrix
    converts partition amplitudes back into eigenmode amplitudes.
    """
    xi = _xi_of(pair, xi)
    t = np.array([[1.0, xi], [xi, -1.0]]) / math.sqrt(1.0 + xi * xi)
    return xi, t


def unitary_propagator(pair: PairLike, xi: Optional[float], t: float) -> np.ndarray:
    """Closed-form evolution matrix of the partition amplitudes over time ``t``."""
    xi = _xi_of(pair, xi)
    if not math.isfinite(t):
        raise DomainError("t must be finite")
    dw, w0 = pair.delta_omega, pair.omega_0
    om0 = np.exp(-1j * w0 * t)
    om = np.exp(-0.5j * dw * t)
    off = -2j * xi * math.sin(0.5 * dw * t)
    x2 = xi * xi
    u = np.array([[om + x2 / om, off], [off, x2 * om + 1.0 / om]], dtype=complex)
    return (om0 / (1.0 + x2)) * u


def evolve_amplitudes(
    init: PartitionAmplitudes, pair: PairLike, xi: Optional[float], t: float
) -> PartitionAmplitudes:
    return PartitionAmplitudes.from_array(unitary_propagator(pair, xi, t) @ init.as_array())


def extent_of_tunnelling(xi: float) -> float:
    """Bound on the coherent tunnelling amplitude; max P_B equals 4*ext**2."""
    a = abs(xi)
    if a > 1.0:
        # symmetric under xi -> 1/xi; folding avoids overflow
        a = 1.0 / a
    return a / (1.0 + a * a)


def born_probability(state: PartitionAmplitudes, section: Section) -> float:
    return state.p_a if Section(section) is Section.A else state.p_b


def abl_probability(
    forward: PartitionAmplitudes,
    backward: Optional[PartitionAmplitudes],
    section: Section,
) -> float:
    """Probability of ``section`` given pre-selection ``forward`` and post-selection ``backward``.

    Without a post-selected state the rule reduces to the Born value.
    """
    section = Section(section)
    if backward is None:
        return born_probability(forward, section)
    psi, phi = forward.as_array(), backward.as_array()
    weights = np.abs(np.conj(phi) * psi) ** 2
    total = float(weights.sum())
    if total == 0.0:
        raise SelectionError("pre- and post-selected states are orthogonal in every section")
    return float(weights[section.index] / total)


TRAJECTORY_COLUMNS = ("t", "re_a", "im_a", "re_b", "im_b", "p_a", "p_b")


def trajectory(
    pair: PairLike, xi: Optional[float], times, init: PartitionAmplitudes = PartitionAmplitudes(1.0, 0.0)
) -> list[tuple]:
    rows = []
    for t in np.asarray(times, dtype=float):
        s = evolve_amplitudes(init, pair, xi, float(t))
        rows.append((float(t), s.a.real, s.a.imag, s.b.real, s.b.imag, s.p_a, s.p_b))
    return rows
