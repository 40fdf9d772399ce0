"""Environment-induced decoherence of a mode pair.

Two couplings to an environment eigenstate ``l`` are modelled:

* ``EnergyDiagonal``: the environment shifts the pair frequencies without
  mixing them (``delta_omega -> delta_omega + delta_omega_l``,
  ``omega_0 -> omega_0 + omega_0l``);
* ``SectionA``: the environment shifts only the energy of the partition
  state |A> by ``omega_l``.

Environment energy phases drop out of the reduced density matrix and are
omitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from types import SimpleNamespace
from typing import Optional, Sequence

import numpy as np

from .decoherence import DensityMatrix
from .errors import DegenerateFrequencyError, DomainError
from .twostate import PartitionAmplitudes, hamiltonian, unitary_propagator

B0_MIN = 1e-300


class EnvModel(str, Enum):
    ENERGY_DIAGONAL = "EnergyDiagonal"
    SECTION_A = "SectionA"


@dataclass(frozen=True)
class EnvCoupling:
    model: EnvModel
    weights: tuple[float, ...]
    omega_l: tuple[float, ...] = field(default=())
    delta_omega_l: tuple[float, ...] = field(default=())
    omega_0l: tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "model", EnvModel(self.model))
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("weights must be a non-empty probability vector")
        n = w.size
        if self.model is EnvModel.SECTION_A:
            needed = {"omega_l": self.omega_l}
        else:
            needed = {"delta_omega_l": self.delta_omega_l, "omega_0l": self.omega_0l}
        for name, values in needed.items():
            if len(values) != n:
                raise DomainError(f"{name} needs {n} entries, got {len(values)}")
            if not all(math.isfinite(v) for v in values):
                raise DomainError(f"{name} entries must be finite")

    @property
    def size(self) -> int:
        return len(self.weights)


def _shifted(pair, delta_omega_l: float, omega_0l: float):
    return SimpleNamespace(delta_omega=pair.delta_omega + delta_omega_l, omega_0=pair.omega_0 + omega_0l)


def zurek_evolution(
    pair, xi: float, delta_omega_l: float, omega_0l: float, t: float,
    init: PartitionAmplitudes = PartitionAmplitudes(1.0, 0.0),
) -> PartitionAmplitudes:
    """Branch evolution for an environment state that shifts both pair frequencies."""
    u = unitary_propagator(_shifted(pair, delta_omega_l, omega_0l), xi, t)
    return PartitionAmplitudes.from_array(u @ init.as_array())


def _b_params(pair, xi: float, omega_l: float) -> tuple[float, float]:
    dw = pair.delta_omega
    c = (1.0 - xi * xi) / (1.0 + xi * xi)
    b1 = dw * c + omega_l
    b0sq = dw * dw + 2.0 * omega_l * dw * c + omega_l * omega_l
    b0 = math.sqrt(max(b0sq, 0.0))
    if b0 < B0_MIN or b0 <= 1e-15 * (abs(dw) + abs(omega_l)):
        raise DegenerateFrequencyError("b0 vanishes for these parameters")
    return b0, b1


def minimal_exchange_evolution(pair, xi: float, omega_l: float, t: float) -> PartitionAmplitudes:
    """Branch evolution from |A> when the environment shifts only the energy of |A>."""
    b0, b1 = _b_params(pair, xi, omega_l)
    dw = pair.delta_omega
    ph = np.exp(-1j * (pair.omega_0 + 0.5 * omega_l) * t)
    a = ((b0 - b1) * np.exp(0.5j * b0 * t) + (b0 + b1) * np.exp(-0.5j * b0 * t)) / (2.0 * b0)
    b = -2j * xi / (1.0 + xi * xi) * dw / b0 * math.sin(0.5 * b0 * t)
    return PartitionAmplitudes(complex(ph * a), complex(ph * b))


def minimal_exchange_propagator(pair, xi: float, omega_l: float, t: float) -> np.ndarray:
    """Full 2x2 evolution matrix of the section-A coupled branch."""
    b0, b1 = _b_params(pair, xi, omega_l)
    off = 2.0 * pair.delta_omega * xi / (1.0 + xi * xi)
    gen = np.array([[b1, off], [off, -b1]], dtype=complex)
    ph = np.exp(-1j * (pair.omega_0 + 0.5 * omega_l) * t)
    half = 0.5 * b0 * t
    return ph * (math.cos(half) * np.eye(2) - 1j * math.sin(half) / b0 * gen)


def section_a_hamiltonian(pair, xi: float, omega_l: float) -> np.ndarray:
    return hamiltonian(pair, xi).matrix + np.diag([omega_l, 0.0])


def schrodinger_residual(pair, xi: float, omega_l: float, t: float) -> float:
    """max |i d(psi)/dt - H psi| for the closed-form section-A branch, scaled by max(1, ||H||).

    The time derivative is taken analytically, so the residual measures only
    whether the closed form solves the equation.
    """
    b0, b1 = _b_params(pair, xi, omega_l)
    dw = pair.delta_omega
    w = pair.omega_0 + 0.5 * omega_l
    ph = np.exp(-1j * w * t)
    ep, em = np.exp(0.5j * b0 * t), np.exp(-0.5j * b0 * t)
    a = ((b0 - b1) * ep + (b0 + b1) * em) / (2.0 * b0)
    da = ((b0 - b1) * ep - (b0 + b1) * em) * 0.5j * b0 / (2.0 * b0)
    s = xi / (1.0 + xi * xi)
    b = -2j * s * dw / b0 * math.sin(0.5 * b0 * t)
    db = -1j * s * dw * math.cos(0.5 * b0 * t)
    psi = ph * np.array([a, b])
    dpsi = ph * np.array([da - 1j * w * a, db - 1j * w * b])
    h = section_a_hamiltonian(pair, xi, omega_l)
    res = 1j * dpsi - h @ psi
    return float(np.max(np.abs(res)) / max(1.0, np.linalg.norm(h, 2)))


def max_transfer_section_a(pair, xi: float, omega_l: float) -> float:
    """Largest |B~|**2 reached by the section-A branch: 4*ext**2*(dw/b0)**2."""
    b0, _ = _b_params(pair, xi, omega_l)
    s = abs(xi) / (1.0 + xi * xi)
    return 4.0 * s * s * (pair.delta_omega / b0) ** 2


def trace_out(joint: Sequence[tuple[float, PartitionAmplitudes]]) -> DensityMatrix:
    """Reduced system state: weighted mixture of the environment branches."""
    if not joint:
        raise DomainError("need at least one environment branch")
    total = sum(w for w, _ in joint)
    if abs(total - 1.0) > 1e-12 or any(w < 0 for w, _ in joint):
        raise DomainError("branch weights must form a probability vector")
    rho = np.zeros((2, 2), dtype=complex)
    for w, amp in joint:
        v = amp.as_array()
        rho += w * np.outer(v, v.conj())
    return DensityMatrix(rho)


def branch_states(pair, xi: float, coupling: EnvCoupling, t: float,
                  init: Optional[PartitionAmplitudes] = None) -> list[tuple[float, PartitionAmplitudes]]:
    init = init or PartitionAmplitudes(1.0, 0.0)
    out = []
    for i, w in enumerate(coupling.weights):
        if coupling.model is EnvModel.ENERGY_DIAGONAL:
            amp = zurek_evolution(pair, xi, coupling.delta_omega_l[i], coupling.omega_0l[i], t, init)
        else:
            u = minimal_exchange_propagator(pair, xi, coupling.omega_l[i], t)
            amp = PartitionAmplitudes.from_array(u @ init.as_array())
        out.append((w, amp))
    return out


ENV_COLUMNS = ("t", "rho_AA", "rho_BB", "re_rho_AB", "im_rho_AB", "purity")


def environment_trajectory(pair, xi: float, coupling: EnvCoupling, times) -> list[tuple]:
    rows = []
    for t in np.asarray(times, dtype=float):
        rho = trace_out(branch_states(pair, xi, coupling, float(t)))
        m = rho.entries
        rows.append((float(t), m[0, 0].real, m[1, 1].real, m[0, 1].real, m[0, 1].imag, rho.purity))
    return rows
