"""Brute-force reference solvers used to check the reduced models.

The box ``[-x_B, x_A]`` is discretised on ``N`` uniform points (walls
included, where the wave function vanishes).  The delta barrier becomes a
rectangular barrier of a few cells whose discrete area equals ``s_tilde``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal, LinAlgError
from scipy.sparse.linalg import splu

from .decoherence import DecoherenceChannel, DensityMatrix, _check_step
from .errors import DomainError, NumericError
from .spectral import BoxGeometry

MIN_POINTS = 2000
NORM_TOL = 1e-8


@dataclass(frozen=True)
class GridBarrier:
    v0: float
    width: float
    count: int
    area: float


@dataclass(frozen=True)
class Grid:
    g: BoxGeometry
    n: int

    @property
    def dx(self) -> float:
        return self.g.length / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return -self.g.x_B + self.dx * np.arange(self.n)

    @property
    def interior(self) -> np.ndarray:
        return self.x[1:-1]


@dataclass(frozen=True)
class GridWavefunction:
    values: np.ndarray
    dx: float
    x_min: float

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.values.size)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.dx)

    def check(self) -> None:
        if self.values[0] != 0 or self.values[-1] != 0:
            raise DomainError("wave function must vanish at the walls")
        if abs(self.norm - 1.0) > NORM_TOL:
            raise DomainError(f"wave function norm {self.norm} differs from 1")

    @classmethod
    def from_interior(cls, grid: Grid, inner) -> "GridWavefunction":
        v = np.zeros(grid.n, dtype=complex)
        v[1:-1] = inner
        return cls(v, grid.dx, -grid.g.x_B)


@dataclass(frozen=True)
class GridMode:
    k: float
    energy: float
    vector: np.ndarray

    def amplitude_ratio(self, g: BoxGeometry, dx: float) -> float:
        """B/A from projecting each section onto its standing wave."""
        x = -g.x_B + dx * np.arange(1, self.vector.size + 1)
        a_sel, b_sel = x > 0, x < 0
        a = 2.0 / g.x_A * np.sum(self.vector[a_sel] * np.sin(self.k * (x[a_sel] - g.x_A))) * dx
        b = 2.0 / g.x_B * np.sum(self.vector[b_sel] * np.sin(self.k * (x[b_sel] + g.x_B))) * dx
        return float(b / a)


def make_barrier(g: BoxGeometry, n: int, width: Optional[float] = None) -> GridBarrier:
    """Rectangular barrier centred on 0 with discrete area exactly ``s_tilde``.

    The default width is ``max(4*dx, x0/200)``.
    """
    grid = Grid(g, n)
    dx = grid.dx
    w = max(4.0 * dx, g.x0 / 200.0) if width is None else float(width)
    if w < 4.0 * dx * (1 - 1e-12):
        raise DomainError("barrier must span at least 4 grid cells")
    count = int(np.count_nonzero(np.abs(grid.interior) < 0.5 * w + 1e-12 * dx))
    if count == 0:
        raise DomainError("barrier width resolves no grid points")
    return GridBarrier(v0=g.s_tilde / (count * dx), width=w, count=count, area=g.s_tilde)


def _potential(grid: Grid, barrier: GridBarrier) -> np.ndarray:
    inside = np.abs(grid.interior) < 0.5 * barrier.width + 1e-12 * grid.dx
    return np.where(inside, barrier.v0, 0.0)


def _tridiagonal(grid: Grid, barrier: GridBarrier) -> tuple[np.ndarray, np.ndarray]:
    dx2 = grid.dx**2
    diag = 1.0 / dx2 + _potential(grid, barrier)
    off = np.full(grid.n - 3, -0.5 / dx2)
    return diag, off


def grid_hamiltonian(grid: Grid, barrier: GridBarrier) -> sp.csc_matrix:
    d, e = _tridiagonal(grid, barrier)
    return sp.diags([e, d, e], [-1, 0, 1], format="csc")


def grid_eigenmodes(g: BoxGeometry, barrier: GridBarrier, n: int, count: int) -> list[GridMode]:
    """Lowest ``count`` eigenpairs; vectors are interior values normalised in L2(dx)."""
    if n < MIN_POINTS:
        raise DomainError(f"need at least {MIN_POINTS} grid points, got {n}")
    grid = Grid(g, n)
    d, e = _tridiagonal(grid, barrier)
    try:
        w, v = eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1))
    except LinAlgError as exc:
        raise NumericError(f"tridiagonal eigensolver failed: {exc}") from exc
    modes = []
    for j in range(count):
        vec = v[:, j] / math.sqrt(grid.dx)
        k = math.sqrt(2.0 * w[j])
        # orient so the section-A standing-wave amplitude is positive
        x = grid.interior
        if np.sum(vec[x > 0] * np.sin(k * (x[x > 0] - g.x_A))) < 0:
            vec = -vec
        modes.append(GridMode(k=k, energy=float(w[j]), vector=vec))
    return modes


class CrankNicolson:
    """Time stepper factorised once for a fixed grid, barrier and ``dt``.

    The scheme is unconditionally stable, so ``dt`` is limited only by the
    phase accuracy the caller needs.  A negative ``dt`` inverts a positive one.
    """

    def __init__(self, g: BoxGeometry, barrier: GridBarrier, n: int, dt: float):
        if not (math.isfinite(dt) and dt != 0):
            raise DomainError("dt must be finite and nonzero")
        self.grid = Grid(g, n)
        self.dt = dt
        h = grid_hamiltonian(self.grid, barrier)
        ident = sp.identity(h.shape[0], dtype=complex, format="csc")
        self._h = h
        self._rhs = (ident - 0.5j * dt * h).tocsr()
        try:
            self._lu = splu((ident + 0.5j * dt * h).tocsc())
        except RuntimeError as exc:
            raise NumericError(f"Crank-Nicolson factorisation failed: {exc}") from exc

    def step(self, inner: np.ndarray) -> np.ndarray:
        out = self._lu.solve(self._rhs @ inner)
        if not np.all(np.isfinite(out)):
            raise NumericError("Crank-Nicolson solve produced non-finite values")
        return out

    def energy(self, inner: np.ndarray) -> float:
        return float(np.real(np.vdot(inner, self._h @ inner)) * self.grid.dx)

    def evolve(self, psi: GridWavefunction, steps: int, sample_every: int = 1) -> list[tuple[float, GridWavefunction]]:
        inner = psi.values[1:-1].astype(complex)
        out = [(0.0, psi)]
        for i in range(1, steps + 1):
            inner = self.step(inner)
            if i % sample_every == 0 or i == steps:
                out.append((i * self.dt, GridWavefunction.from_interior(self.grid, inner)))
        return out


def crank_nicolson_evolve(
    psi0: GridWavefunction, g: BoxGeometry, barrier: GridBarrier, dt: float, T: float, sample_every: int = 1
) -> list[tuple[float, GridWavefunction]]:
    n = psi0.values.size
    steps = int(round(abs(T / dt)))
    return CrankNicolson(g, barrier, n, dt).evolve(psi0, steps, sample_every)


def project_sections(psi: GridWavefunction, g: BoxGeometry, barrier: Optional[GridBarrier] = None) -> tuple[float, float]:
    """Section probabilities; points inside the barrier (or at 0) count half to each side."""
    x = psi.x
    dens = np.abs(psi.values) ** 2 * psi.dx
    half_w = 0.5 * barrier.width + 1e-12 * psi.dx if barrier is not None else 0.0
    split = (np.abs(x) < half_w) | (np.abs(x) <= 1e-12 * psi.dx)
    p_a = float(dens[(x > 0) & ~split].sum() + 0.5 * dens[split].sum())
    p_b = float(dens[(x < 0) & ~split].sum() + 0.5 * dens[split].sum())
    return p_a, p_b


def dense_lindblad(
    rho0: DensityMatrix, h: np.ndarray, basis: np.ndarray, tau_d: float, dt: float, T: float
) -> list[tuple[float, DensityMatrix]]:
    """Dephasing Lindblad trajectory sampled every ``dt``, from an adaptive high-order integrator."""
    h = np.asarray(h, dtype=complex)
    basis = np.asarray(basis, dtype=complex)
    n = h.shape[0]
    if n > 64:
        raise DomainError("dense integrator supports n <= 64")
    DecoherenceChannel(basis, 1.0, tau_d)
    _check_step(h, tau_d, dt)
    hb = basis.conj().T @ h @ basis
    r0 = basis.conj().T @ rho0.entries @ basis

    def rhs(_t, y):
        r = y.view(complex).reshape(n, n)
        d = -1j * (hb @ r - r @ hb) + (np.diag(np.diag(r)) - r) / tau_d
        return d.reshape(-1).view(float)

    steps = int(round(T / dt))
    t_eval = dt * np.arange(steps + 1)
    sol = solve_ivp(rhs, (0.0, t_eval[-1]), r0.reshape(-1).view(float).copy(), method="DOP853",
                    t_eval=t_eval, rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise NumericError(f"dense Lindblad integration failed: {sol.message}")
    out = []
    for i, t in enumerate(sol.t):
        r = sol.y[:, i].copy().view(complex).reshape(n, n)
        m = basis @ r @ basis.conj().T
        out.append((float(t), DensityMatrix(0.5 * (m + m.conj().T))))
    return out
