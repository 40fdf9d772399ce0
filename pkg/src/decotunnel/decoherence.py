"""Dephasing channels, Lindblad and Pauli dynamics, and tunnelling-rate regimes.

Dephasing is projective: the Kraus set is ``sqrt(lam)*|d_j><d_j|`` together
with ``sqrt(1 - lam)*I`` for an orthonormal basis ``{|d_j>}``.  Continuous
dephasing at rate ``1/tau_d`` uses the Lindblad operators ``|d_j><d_j|``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, InsufficientEventsError, NumericError, StepSizeError
from .spectral import BoxGeometry, ModeClass, near_resonant_params
from .twostate import extent_of_tunnelling, partition_transform, unitary_propagator

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-12
UNITARITY_TOL = 1e-8
MIN_EVENTS = 10
MAX_EVENTS = 200_000
FIT_WINDOW = (0.05, 0.4)
# largest dt * (generator scale) accepted by the RK4 step
STEP_LIMIT = 0.5


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise DomainError(f"density matrix must be square with n >= 2, got shape {m.shape}")
        object.__setattr__(self, "entries", m)

    @classmethod
    def from_pure(cls, psi) -> "DensityMatrix":
        v = np.asarray(psi, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        return cls(np.eye(n, dtype=complex) / n)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    @property
    def diagonal(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.entries + self.entries.conj().T))

    def entropy(self) -> float:
        """Von Neumann entropy in nats."""
        w = self.eigenvalues()
        w = w[w > 1e-300]
        return float(-np.sum(w * np.log(w)))

    def check(self) -> None:
        m = self.entries
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise DomainError("density matrix is not Hermitian")
        if abs(self.trace - 1.0) > TRACE_TOL:
            raise DomainError(f"density matrix trace {self.trace} differs from 1")
        if self.eigenvalues().min() < -PSD_TOL:
            raise DomainError("density matrix is not positive semidefinite")

    def in_basis(self, basis: np.ndarray) -> np.ndarray:
        """Entries in the basis whose vectors are the columns of ``basis``."""
        return basis.conj().T @ self.entries @ basis


@dataclass(frozen=True)
class DecoherenceChannel:
    basis: np.ndarray
    lam: float = 1.0
    tau_d: float = 1.0

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        object.__setattr__(self, "basis", b)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise DomainError("basis must be a square matrix with basis vectors as columns")
        if np.max(np.abs(b.conj().T @ b - np.eye(b.shape[0]))) > COMPLETENESS_TOL:
            raise DomainError("decoherence basis is not orthonormal")
        if not (0.0 <= self.lam <= 1.0):
            raise DomainError(f"lambda must lie in [0, 1], got {self.lam!r}")
        if not (math.isfinite(self.tau_d) and self.tau_d > 0):
            raise DomainError(f"tau_d must be finite and > 0, got {self.tau_d!r}")

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def omega_d(self) -> float:
        return 1.0 / self.tau_d

    def projectors(self) -> list[np.ndarray]:
        return [np.outer(self.basis[:, j], self.basis[:, j].conj()) for j in range(self.n)]


def computational_basis(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex)


def energy_basis(xi: float) -> np.ndarray:
    """Columns are |+> and |-> written in partition (A, B) coordinates."""
    return partition_transform(None, xi)[1].astype(complex)


def kraus_set(channel: DecoherenceChannel) -> list[np.ndarray]:
    ops = [math.sqrt(1.0 - channel.lam) * np.eye(channel.n, dtype=complex)]
    ops.extend(math.sqrt(channel.lam) * p for p in channel.projectors())
    return ops


def apply_kraus(rho: DensityMatrix, channel: DecoherenceChannel) -> DensityMatrix:
    out = sum(k @ rho.entries @ k.conj().T for k in kraus_set(channel))
    return DensityMatrix(0.5 * (out + out.conj().T))


def decoherence_event(rho: DensityMatrix, basis: np.ndarray) -> DensityMatrix:
    """Remove every coherence between the vectors of ``basis``."""
    return apply_kraus(rho, DecoherenceChannel(basis, lam=1.0))


def _dephased(m: np.ndarray, basis: np.ndarray) -> np.ndarray:
    r = basis.conj().T @ m @ basis
    return basis @ np.diag(np.diag(r)) @ basis.conj().T


def lindblad_rhs(m: np.ndarray, h: np.ndarray, channel: DecoherenceChannel) -> np.ndarray:
    return -1j * (h @ m - m @ h) + (_dephased(m, channel.basis) - m) / channel.tau_d


def _check_step(h: np.ndarray, tau_d: float, dt: float) -> None:
    n = h.shape[0]
    shifted = h - np.trace(h) / n * np.eye(n)
    scale = max(np.linalg.norm(shifted, 2), 1.0 / tau_d)
    if not (dt > 0 and dt * scale <= STEP_LIMIT):
        raise StepSizeError(f"dt={dt!r} too large for generator scale {scale:.3g} (limit dt <= {STEP_LIMIT / scale:.3g})")


def lindblad_step(rho: DensityMatrix, h: np.ndarray, channel: DecoherenceChannel, dt: float) -> DensityMatrix:
    """One classical Runge-Kutta step of the dephasing Lindblad equation."""
    h = np.asarray(h, dtype=complex)
    _check_step(h, channel.tau_d, dt)
    m = rho.entries
    k1 = lindblad_rhs(m, h, channel)
    k2 = lindblad_rhs(m + 0.5 * dt * k1, h, channel)
    k3 = lindblad_rhs(m + 0.5 * dt * k2, h, channel)
    k4 = lindblad_rhs(m + dt * k3, h, channel)
    out = m + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return DensityMatrix(0.5 * (out + out.conj().T))


def lindblad_evolve(rho: DensityMatrix, h: np.ndarray, channel: DecoherenceChannel, dt: float, steps: int) -> list[DensityMatrix]:
    out = [rho]
    for _ in range(steps):
        rho = lindblad_step(rho, h, channel, dt)
        out.append(rho)
    return out


def pauli_rates(u: np.ndarray, tau_d: float) -> np.ndarray:
    """Rate generator G with dP/dt = G @ P for populations dephased every ``tau_d``.

    ``G[j, k] = (|U[j, k]|**2 - delta_jk)/tau_d`` where ``U`` advances states
    over one dephasing interval.
    """
    u = np.asarray(u, dtype=complex)
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > UNITARITY_TOL:
        raise DomainError("propagator is not unitary")
    if not tau_d > 0:
        raise DomainError("tau_d must be > 0")
    return (np.abs(u) ** 2 - np.eye(u.shape[0])) / tau_d


def markov_evolve(p0, g: np.ndarray, t: float) -> np.ndarray:
    p = expm(np.asarray(g, dtype=float) * t) @ np.asarray(p0, dtype=float)
    return np.clip(p, 0.0, None) / p.clip(0.0, None).sum()


def markov_two_state(gamma: float, t) -> np.ndarray:
    """P_B(t) for a two-state chain with symmetric rate gamma, starting in A."""
    return 0.5 * (1.0 - np.exp(-2.0 * gamma * np.asarray(t, dtype=float)))


def transfer_probability(pair, xi: float, tau_d: float) -> float:
    """W = |U_AB|**2 over one dephasing interval."""
    return float(abs(unitary_propagator(pair, xi, tau_d)[0, 1]) ** 2)


def cycle_averaged_transfer(xi: float) -> float:
    """Average of |U_AB|**2 over one oscillation period."""
    return 2.0 * extent_of_tunnelling(xi) ** 2


# Rate formulas --------------------------------------------------------------


class RateFlag(str, Enum):
    OK = "ok"
    OUT_OF_REGIME = "out_of_regime"
    CAPPED = "capped"
    APPROXIMATE = "approximate"


@dataclass(frozen=True)
class RateEstimate:
    value: float
    flag: RateFlag
    regime: str


def oscillation_cap(mode_class: ModeClass, eta: float, s_hat: float, tau_0: float) -> float:
    """Unitary splitting of the pair, the ceiling for any relaxation rate."""
    if mode_class in (ModeClass.RESONANT, ModeClass.NEAR_RESONANT):
        return 1.0 / (tau_0 * s_hat)
    if mode_class is ModeClass.INTERMEDIATE:
        return abs(eta) / (s_hat * tau_0)
    return 1.0 / tau_0


def tunnel_rate_formula(
    mode_class: ModeClass, eta: float, s_hat: float, tau_0: float, omega_d: float
) -> RateEstimate:
    """Order-of-magnitude tunnelling frequency under dephasing at ``omega_d``.

    Values outside a formula's validity band are still returned but flagged;
    results above the pair's own oscillation frequency are clipped to it.
    """
    mode_class = ModeClass(mode_class)
    if not (omega_d > 0 and s_hat > 0 and tau_0 > 0):
        raise DomainError("omega_d, s_hat and tau_0 must be > 0")
    if s_hat < 10:
        warnings.warn(f"s_hat={s_hat:.3g} is small; rate formulas assume s_hat >> 1", RuntimeWarning, stacklevel=2)
    tau_d = 1.0 / omega_d
    flag = RateFlag.OK
    if tau_d <= tau_0:
        value, regime = 1.0 / (s_hat**2 * tau_0), "strong"
    elif mode_class in (ModeClass.RESONANT, ModeClass.NEAR_RESONANT):
        value, regime = tau_d / (tau_0**2 * s_hat**2), "zeno"
        if tau_d >= tau_0 * s_hat:
            flag = RateFlag.OUT_OF_REGIME
        elif mode_class is ModeClass.NEAR_RESONANT:
            flag = RateFlag.APPROXIMATE
    elif mode_class is ModeClass.INTERMEDIATE:
        switch = abs(eta) / (tau_0 * s_hat)
        if omega_d <= switch:
            value, regime = omega_d / eta**2, "intermediate_slow"
        else:
            value, regime = 1.0 / (tau_0**2 * s_hat**2 * omega_d), "intermediate_fast"
        if not (1.0 < abs(eta) < s_hat):
            flag = RateFlag.OUT_OF_REGIME
    else:
        value, regime = omega_d / s_hat**2, "non_resonant"
    cap = oscillation_cap(mode_class, eta, s_hat, tau_0)
    if value > cap:
        value, flag = cap, RateFlag.CAPPED
    return RateEstimate(value=value, flag=flag, regime=regime)


# Hybrid unitary + dephasing-event simulation ---------------------------------


@dataclass(frozen=True)
class HybridResult:
    times: np.ndarray
    p_a: np.ndarray
    p_b: np.ndarray
    gamma: float
    fit_points: int

    @property
    def events(self) -> int:
        return len(self.times) - 1


def _superoperator(k_ops: Sequence[np.ndarray], u: np.ndarray) -> np.ndarray:
    """Matrix of rho -> sum_j K_j U rho U^+ K_j^+ acting on row-major vec(rho)."""
    s = 0
    for k in k_ops:
        ku = k @ u
        s = s + np.kron(ku, ku.conj())
    return s


def fit_relaxation_rate(times, p_b, window=FIT_WINDOW) -> tuple[float, int]:
    """gamma from a least-squares line through log(1 - 2*P_B) inside ``window``."""
    times, p_b = np.asarray(times), np.asarray(p_b)
    sel = (p_b >= window[0]) & (p_b <= window[1])
    if sel.sum() < 3:
        raise NumericError(f"only {int(sel.sum())} samples inside the fit window {window}")
    slope = np.polyfit(times[sel], np.log(1.0 - 2.0 * p_b[sel]), 1)[0]
    return -0.5 * float(slope), int(sel.sum())


def hybrid_horizon(pair, xi: float, tau_d: float, max_events: int = MAX_EVENTS) -> float:
    """Horizon long enough for P_B to pass the fit window, within the event budget."""
    w = transfer_probability(pair, xi, tau_d)
    gamma = max(w / tau_d, 1e-300)
    t = 2.0 / gamma
    return float(min(max(t, 20.0 * tau_d), max_events * tau_d))


def simulate_hybrid(
    pair,
    xi: Optional[float],
    channel: DecoherenceChannel,
    T: float,
    *,
    stochastic: bool = False,
    rng: Optional[np.random.Generator] = None,
    init=(1.0, 0.0),
    fit: bool = True,
) -> HybridResult:
    """Exact unitary evolution interrupted by dephasing events.

    Events are spaced exactly ``tau_d`` apart, or at exponential waiting times
    with mean ``tau_d`` when ``stochastic`` is set.  Populations are recorded
    in the partition basis after each event.
    """
    if xi is None:
        xi = pair.xi
    tau_d = channel.tau_d
    if channel.n != 2:
        raise DomainError("hybrid simulation acts on the two partition states")
    if not T > 0:
        raise DomainError("horizon must be > 0")
    expected = T / tau_d
    if expected < MIN_EVENTS:
        raise InsufficientEventsError(f"horizon holds {expected:.3g} events, need at least {MIN_EVENTS}")
    k_ops = kraus_set(channel)
    rho = DensityMatrix.from_pure(init).entries.reshape(-1)
    times, pa, pb = [0.0], [rho[0].real], [rho[3].real]
    if not stochastic:
        n = int(math.floor(T / tau_d + 1e-9))
        if n > MAX_EVENTS:
            raise DomainError(f"{n} events exceed the budget of {MAX_EVENTS}")
        s = _superoperator(k_ops, unitary_propagator(pair, xi, tau_d))
        out = np.empty((n, 4), dtype=complex)
        for i in range(n):
            rho = s @ rho
            out[i] = rho
        times.extend(tau_d * np.arange(1, n + 1))
        pa.extend(out[:, 0].real)
        pb.extend(out[:, 3].real)
    else:
        if rng is None:
            raise DomainError("stochastic events need a seeded generator")
        t = 0.0
        while True:
            wait = rng.exponential(tau_d)
            if t + wait > T:
                break
            t += wait
            rho = _superoperator(k_ops, unitary_propagator(pair, xi, wait)) @ rho
            times.append(t)
            pa.append(rho[0].real)
            pb.append(rho[3].real)
            if len(times) > MAX_EVENTS + 1:
                raise DomainError(f"event count exceeds the budget of {MAX_EVENTS}")
        if len(times) - 1 < MIN_EVENTS:
            raise InsufficientEventsError(f"only {len(times) - 1} events occurred, need at least {MIN_EVENTS}")
    times_a, pa_a, pb_a = np.asarray(times), np.asarray(pa), np.asarray(pb)
    gamma, npts = (float("nan"), 0)
    if fit:
        gamma, npts = fit_relaxation_rate(times_a, pb_a)
    return HybridResult(times=times_a, p_a=pa_a, p_b=pb_a, gamma=gamma, fit_points=npts)


# Regime map -----------------------------------------------------------------


REGIME_COLUMNS = ("class", "eta", "omega_d", "omega_tilde_formula", "omega_tilde_sim", "flag")


@dataclass(frozen=True)
class RegimeRow:
    mode_class: ModeClass
    eta: float
    omega_d: float
    omega_tilde_formula: float
    omega_tilde_sim: Optional[float]
    flag: str


def _simulated_rate(g: BoxGeometry, k0: float, eta: float, tau_d: float, max_events: int,
                    stochastic: bool, seed: Optional[int]) -> Optional[float]:
    s_hat = g.s_tilde / k0
    params = near_resonant_params(eta / (2.0 * s_hat), k0, g)
    channel = DecoherenceChannel(computational_basis(2), 1.0, tau_d)
    horizon = hybrid_horizon(params, params.xi, tau_d, max_events)
    rng = np.random.default_rng(seed) if stochastic else None
    try:
        res = simulate_hybrid(params, params.xi, channel, horizon, stochastic=stochastic, rng=rng)
    except (NumericError, InsufficientEventsError, DomainError):
        return None
    return res.gamma


def regime_map(
    g: BoxGeometry,
    k0: float,
    curves: Sequence[tuple[ModeClass, float]],
    omega_d_grid: Sequence[float],
    *,
    simulate: bool = False,
    threads: int = 1,
    max_events: int = 20_000,
    stochastic: bool = False,
    seed: Optional[int] = None,
) -> list[RegimeRow]:
    """Formula (and optionally simulated) tunnelling frequency per curve and omega_d.

    Simulation is attempted only where the two-state picture holds
    (``tau_d > tau_0``) and for paired classes.  Rows are sorted by omega_d,
    then by curve order, independent of worker scheduling.
    """
    s_hat = g.s_tilde / k0
    tau_0 = g.tau0(k0)
    grid = sorted(float(w) for w in omega_d_grid)
    tasks = [(ci, ModeClass(c), float(eta), w) for wi, w in enumerate(grid) for ci, (c, eta) in enumerate(curves)]

    def run(task):
        ci, cls, eta, w = task
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            est = tunnel_rate_formula(cls, eta, s_hat, tau_0, w)
        sim = None
        if simulate and 1.0 / w > tau_0 and not cls.is_non_resonant:
            task_seed = None if seed is None else seed + 7919 * ci + grid.index(w)
            sim = _simulated_rate(g, k0, eta, 1.0 / w, max_events, stochastic, task_seed)
        return RegimeRow(cls, eta, w, est.value, sim, est.flag.value)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, tasks))
    else:
        rows = [run(t) for t in tasks]
    return rows
