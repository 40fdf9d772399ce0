"""Energy eigenmodes of a box ``[-x_B, x_A]`` split by a delta barrier at 0.

Natural units hbar = m = 1 are used throughout, so ``E = k**2/2`` and the
characteristic velocity of a mode equals its wavenumber.

A mode is written as ``A*sin(k*(x - x_A))`` in section A and
``B*sin(k*(x + x_B))`` in section B.  Its wavenumber solves

    cot(k*x_B) + cot(k*x_A) + 2*s_tilde/k = 0

which is strictly decreasing between consecutive poles of either cotangent,
so every pole-free interval holds exactly one root.  Where the pole lattices
of both sections coincide (double resonance) the mode has a node at the
barrier and ``k`` sits exactly on the shared pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, PoleError, RootFindingError

POLE_GUARD = 1e-14
ROOT_TOL = 1e-10
COINCIDENCE_RTOL = 1e-12


class ModeClass(str, Enum):
    RESONANT = "Resonant"
    NEAR_RESONANT = "NearResonant"
    INTERMEDIATE = "Intermediate"
    NON_RESONANT_A = "NonResonantA"
    NON_RESONANT_B = "NonResonantB"

    @property
    def is_non_resonant(self) -> bool:
        return self in (ModeClass.NON_RESONANT_A, ModeClass.NON_RESONANT_B)


@dataclass(frozen=True)
class ClassThresholds:
    """Bands on |eta| separating the resonance classes.

    Intermediate modes end where ``|eta| >= intermediate_fraction * s_hat``.
    """

    resonant: float = 0.3
    near_resonant: float = 3.0
    intermediate_fraction: float = 1.0 / 3.0


@dataclass(frozen=True)
class BoxGeometry:
    x_A: float
    x_B: float
    s_tilde: float

    def __post_init__(self):
        for name in ("x_A", "x_B", "s_tilde"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def length(self) -> float:
        return self.x_A + self.x_B

    @property
    def x0(self) -> float:
        """Characteristic section length 2*x_A*x_B/(x_A + x_B)."""
        return 2.0 * self.x_A * self.x_B / self.length

    def s_hat(self, k: float) -> float:
        return self.s_tilde / k

    def u0(self, k0: float) -> float:
        return k0

    def tau0(self, k0: float) -> float:
        """Fly time x0/u0 across a section."""
        return self.x0 / k0

    def base_wavenumber(self, j_A: int, j_B: int) -> float:
        """Wavenumber k0 resonant with detuning theta in both sections."""
        return math.pi * (j_A + j_B) / self.length

    def detuning(self, j_A: int, j_B: int) -> float:
        """Phase theta with k0*x_A = pi*j_A - theta and k0*x_B = pi*j_B + theta."""
        return math.pi * (j_A * self.x_B - j_B * self.x_A) / self.length


@dataclass(frozen=True)
class EigenMode:
    k: float
    energy: float
    amp_ratio: float
    j_A: int
    j_B: int
    theta: float
    eta: float
    mode_class: ModeClass
    sigma: int
    k0: float
    residual: float = 0.0
    double_pole: bool = False
    flag: str = ""

    @property
    def omega(self) -> float:
        return self.energy

    def volume_ratio(self, g: BoxGeometry) -> float:
        """Amplitude ratio of the volume-adjusted amplitudes B~/A~."""
        return math.sqrt(g.x_B / g.x_A) * self.amp_ratio


@dataclass(frozen=True)
class ModePair:
    minus: EigenMode
    plus: EigenMode
    delta_k: float
    xi: float
    delta_omega: float
    omega_0: float

    @property
    def eta(self) -> float:
        return self.plus.eta

    @property
    def sigma(self) -> int:
        return self.plus.sigma

    @property
    def k0(self) -> float:
        return self.plus.k0

    @property
    def indices(self) -> tuple[int, int]:
        return self.plus.j_A, self.plus.j_B

    def ratio_product(self, g: BoxGeometry) -> float:
        """(B~/A~)_- * (B~/A~)_+; equals -1 to leading order in 1/s_hat."""
        return self.minus.volume_ratio(g) * self.plus.volume_ratio(g)


@dataclass(frozen=True)
class NearResonantParams:
    """Leading-order solution around a doubly resonant base wavenumber."""

    k0: float
    theta: float
    s_hat: float
    eta: float
    sigma: int
    dk_minus: float
    dk_plus: float
    ratio_minus: float
    ratio_plus: float
    D: float
    F_minus: float
    F_plus: float
    xi: float
    delta_k: float
    delta_omega: float
    omega_0: float
    energies: tuple[float, float] = field(default=(0.0, 0.0))


def _cot(x):
    return np.cos(x) / np.sin(x)


def dispersion_residual(k: float, g: BoxGeometry) -> float:
    """cot(k x_B) + cot(k x_A) + 2 s~/k, refusing to evaluate on a pole."""
    if not k > 0:
        raise DomainError(f"k must be > 0, got {k!r}")
    sa, sb = math.sin(k * g.x_A), math.sin(k * g.x_B)
    if abs(sa) < POLE_GUARD or abs(sb) < POLE_GUARD:
        raise PoleError(f"k={k!r} lies within the pole guard band")
    return math.cos(k * g.x_B) / sb + math.cos(k * g.x_A) / sa + 2.0 * g.s_tilde / k


def regularized_residual(k: float, g: BoxGeometry) -> float:
    """Dispersion residual multiplied by sin(k x_A) sin(k x_B), scaled to O(1).

    Finite everywhere; vanishes at every eigenmode including double poles.
    """
    sa, sb = math.sin(k * g.x_A), math.sin(k * g.x_B)
    scale = 2.0 * g.s_tilde / k
    return (math.sin(k * g.length) + scale * sa * sb) / (1.0 + scale)


def pole_lattice(g: BoxGeometry, k_max: float) -> list[tuple[float, bool]]:
    """Sorted poles of either cotangent up to the first one beyond ``k_max``.

    Each entry is ``(k, coincident)``; coincident poles belong to both
    sections and host a double-resonant eigenmode.
    """
    poles = []
    for x in (g.x_A, g.x_B):
        n = int(math.floor(k_max * x / math.pi)) + 2
        poles.extend(math.pi * j / x for j in range(1, n + 1))
    poles.sort()
    merged: list[tuple[float, bool]] = []
    for p in poles:
        if merged and abs(p - merged[-1][0]) <= COINCIDENCE_RTOL * p:
            merged[-1] = (0.5 * (merged[-1][0] + p), True)
        else:
            merged.append((p, False))
    # keep one pole past k_max to close the last interval
    out = []
    for p, c in merged:
        out.append((p, c))
        if p > k_max:
            break
    return out


def _unguarded(k: float, g: BoxGeometry) -> float:
    return float(_cot(k * g.x_B) + _cot(k * g.x_A) + 2.0 * g.s_tilde / k)


def _root_in(lo: float, hi: float, g: BoxGeometry) -> float:
    width = hi - lo
    delta = width * 1e-9
    while True:
        a, b = lo + delta, hi - delta
        fa, fb = _unguarded(a, g), _unguarded(b, g)
        if fa > 0 and fb < 0:
            break
        delta *= 1e-3
        if delta < 4 * np.finfo(float).eps * hi:
            raise RootFindingError("could not bracket dispersion root", (lo, hi))
    try:
        k = brentq(_unguarded, a, b, args=(g,), xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)
    except RuntimeError as exc:
        raise RootFindingError(str(exc), (lo, hi)) from exc
    # one Newton polish step on the regularized form
    h = 1e-7 * k
    f0 = regularized_residual(k, g)
    df = (regularized_residual(k + h, g) - regularized_residual(k - h, g)) / (2 * h)
    if df != 0:
        k_new = k - f0 / df
        if lo < k_new < hi and abs(regularized_residual(k_new, g)) < abs(f0):
            k = k_new
    return k


def _round_half_down(v: float) -> int:
    return int(math.ceil(v - 0.5))


def resolve_indices(k: float, g: BoxGeometry) -> tuple[int, int, float, float]:
    """Nearest standing-wave indices (j_A, j_B) with their base k0 and theta."""
    j_A = _round_half_down(k * g.x_A / math.pi)
    j_B = _round_half_down(k * g.x_B / math.pi)
    if j_A + j_B == 0:
        if g.x_A >= g.x_B:
            j_A = 1
        else:
            j_B = 1
    return j_A, j_B, g.base_wavenumber(j_A, j_B), g.detuning(j_A, j_B)


def classify_mode(
    eta: float, s_hat: float, amp_ratio: float, thresholds: ClassThresholds = ClassThresholds()
) -> ModeClass:
    a = abs(eta)
    if a < thresholds.resonant:
        return ModeClass.RESONANT
    if a < thresholds.near_resonant:
        return ModeClass.NEAR_RESONANT
    if a < thresholds.intermediate_fraction * s_hat:
        return ModeClass.INTERMEDIATE
    return ModeClass.NON_RESONANT_A if abs(amp_ratio) < 1.0 else ModeClass.NON_RESONANT_B


def make_mode(k: float, g: BoxGeometry, thresholds: ClassThresholds = ClassThresholds(),
              double_pole: bool = False) -> EigenMode:
    j_A, j_B, k0, theta = resolve_indices(k, g)
    sigma = 1 if (j_A + j_B) % 2 == 0 else -1
    if double_pole:
        ratio = math.cos(k * g.x_A) / math.cos(k * g.x_B)
    else:
        ratio = -math.sin(k * g.x_A) / math.sin(k * g.x_B)
    s_hat0 = g.s_tilde / k0
    eta = 2.0 * s_hat0 * theta
    flag = ""
    for x in (g.x_A, g.x_B):
        frac = (k * x / math.pi) % 1.0
        if abs(frac - 0.5) < 1e-6:
            flag = "ambiguous_indices"
    return EigenMode(
        k=k,
        energy=0.5 * k * k,
        amp_ratio=ratio,
        j_A=j_A,
        j_B=j_B,
        theta=theta,
        eta=eta,
        mode_class=classify_mode(eta, s_hat0, ratio, thresholds),
        sigma=sigma,
        k0=k0,
        residual=regularized_residual(k, g),
        double_pole=double_pole,
        flag=flag,
    )


def find_modes(g: BoxGeometry, k_max: float, thresholds: ClassThresholds = ClassThresholds()) -> list[EigenMode]:
    """All eigenmodes with wavenumber in (0, k_max], sorted by k."""
    if not k_max > math.pi / max(g.x_A, g.x_B):
        raise DomainError("k_max must exceed pi/max(x_A, x_B)")
    lattice = pole_lattice(g, k_max)
    modes = []
    lo = 0.0
    for p, coincident in lattice:
        k = _root_in(lo, p, g)
        if k <= k_max:
            modes.append(make_mode(k, g, thresholds))
        if coincident and p <= k_max:
            modes.append(make_mode(p, g, thresholds, double_pole=True))
        lo = p
        if lo > k_max:
            break
    return modes


def near_resonant_params(theta: float, k0: float, g: BoxGeometry, sigma: int = 1) -> NearResonantParams:
    """Leading-order plus/minus branches for detuning ``theta`` around ``k0``.

    The quadratic for the wavenumber shift is solved in the cancellation-free
    form (larger root directly, smaller one from the product of roots), and
    the amplitude ratios use ``B/A = sigma/(1 + 2*s_hat*(x_B*dk + theta))``,
    which stays finite at exact resonance.
    """
    xa, xb, L = g.x_A, g.x_B, g.length
    s_hat = g.s_tilde / k0
    eta = 2.0 * s_hat * theta
    beta = xa * (1.0 + eta) + xb * (1.0 - eta)
    D = L * ((eta - 1.0) ** 2 * xb + (eta + 1.0) ** 2 * xa)
    sq = math.sqrt(D)
    den = 4.0 * s_hat * xa * xb
    prod = -(eta**2) / (4.0 * s_hat**2 * xa * xb)
    if beta >= 0:
        dk_minus = (-beta - sq) / den
        dk_plus = prod / dk_minus
    else:
        dk_plus = (-beta + sq) / den
        dk_minus = prod / dk_plus

    # the smaller denominator cancels for |eta| >> 1; take it from the product of ratios
    den_minus = 1.0 + 2.0 * s_hat * (xb * dk_minus + theta)
    den_plus = 1.0 + 2.0 * s_hat * (xb * dk_plus + theta)
    if abs(den_minus) >= abs(den_plus):
        r_minus = sigma / den_minus
        r_plus = -(xa / xb) / r_minus
    else:
        r_plus = sigma / den_plus
        r_minus = -(xa / xb) / r_plus
    f_scale = xb / (sigma * xa)
    e_minus = 0.5 * k0 * (k0 + 2.0 * dk_minus)
    e_plus = 0.5 * k0 * (k0 + 2.0 * dk_plus)
    delta_k = sq / (2.0 * s_hat * xa * xb)
    return NearResonantParams(
        k0=k0,
        theta=theta,
        s_hat=s_hat,
        eta=eta,
        sigma=sigma,
        dk_minus=dk_minus,
        dk_plus=dk_plus,
        ratio_minus=r_minus,
        ratio_plus=r_plus,
        D=D,
        F_minus=r_minus * f_scale,
        F_plus=r_plus * f_scale,
        xi=math.sqrt(xb / xa) * r_plus,
        delta_k=delta_k,
        delta_omega=k0 * delta_k,
        omega_0=0.5 * (e_minus + e_plus),
        energies=(e_minus, e_plus),
    )


def pair_modes(modes: list[EigenMode], g: BoxGeometry) -> list[ModePair]:
    """Pair adjacent modes sharing the same standing-wave indices.

    Non-resonant modes stay unpaired; they tunnel only to O(1/s_hat**2).
    """
    pairs = []
    i = 0
    while i < len(modes) - 1:
        lo, hi = modes[i], modes[i + 1]
        if (
            (lo.j_A, lo.j_B) == (hi.j_A, hi.j_B)
            and not lo.mode_class.is_non_resonant
            and not hi.mode_class.is_non_resonant
        ):
            xi = hi.volume_ratio(g)
            pairs.append(
                ModePair(
                    minus=lo,
                    plus=hi,
                    delta_k=hi.k - lo.k,
                    xi=xi,
                    delta_omega=hi.energy - lo.energy,
                    omega_0=0.5 * (hi.energy + lo.energy),
                )
            )
            i += 2
        else:
            i += 1
    return pairs


def find_pair(g: BoxGeometry, j_A: int, j_B: int, thresholds: ClassThresholds = ClassThresholds()) -> ModePair:
    """The plus/minus pair built on the standing-wave indices (j_A, j_B)."""
    k0 = g.base_wavenumber(j_A, j_B)
    modes = find_modes(g, k0 * 1.05 + math.pi / g.length, thresholds)
    for pair in pair_modes(modes, g):
        if pair.indices == (j_A, j_B):
            return pair
    raise DomainError(f"no resonant pair found for indices ({j_A}, {j_B})")


# Asymptotic mode families for s_hat >> 1 ------------------------------------


def symmetric_mode_asymptote(j: int, x0: float, s_tilde: float) -> float:
    """Symmetric (barrier-cusped) mode wavenumber in a symmetric box."""
    return math.pi * j / x0 * (1.0 - 1.0 / (x0 * s_tilde))


def antisymmetric_mode_wavenumber(j: int, x0: float) -> float:
    return math.pi * j / x0


def a_resonant_asymptote(j: int, g: BoxGeometry) -> tuple[float, float]:
    """(k, B/A) of a mode resonant in section A only."""
    sigma = (-1) ** j
    k = math.pi * j / g.x_A * (1.0 - 1.0 / (2.0 * g.x_A * g.s_tilde))
    ratio = sigma * (math.pi * j / (2.0 * g.x_A * g.s_tilde)) / math.sin(math.pi * j * g.x_B / g.x_A)
    return k, ratio


def b_resonant_asymptote(j: int, g: BoxGeometry) -> tuple[float, float]:
    """(k, B/A) of a mode resonant in section B only."""
    sigma = (-1) ** j
    k = math.pi * j / g.x_B * (1.0 - 1.0 / (2.0 * g.x_B * g.s_tilde))
    ratio = sigma * math.sin(math.pi * j * g.x_A / g.x_B) / (math.pi * j / (2.0 * g.x_B * g.s_tilde))
    return k, ratio


def resonance_limit(eta: float, s_hat: float, g: BoxGeometry, sigma: int = 1) -> dict[str, float]:
    """First-order expansion of the branches about eta = 0."""
    xa, xb = g.x_A, g.x_B
    return {
        "dk_minus": -((xa + xb) + (xa - xb) * eta) / (2.0 * s_hat * xa * xb),
        "dk_plus": eta**2 / (2.0 * s_hat * (xa + xb)),
        "ratio_minus": -sigma * xa / xb * (1.0 + eta),
        "ratio_plus": sigma * (1.0 - eta),
    }


def intermediate_limit(eta: float, s_hat: float, g: BoxGeometry, sigma: int = 1) -> dict[str, float]:
    """Leading behaviour of the branches for |eta| >> 1.

    The B-like and A-like solutions swap between the minus and plus branch
    when eta changes sign.
    """
    xa, xb, L = g.x_A, g.x_B, g.length
    b_like = (-(eta + 1.0) / (2.0 * s_hat * xb), -sigma * L / xb * eta)
    a_like = ((eta - 1.0) / (2.0 * s_hat * xa), sigma * xa / L / eta)
    minus, plus = (b_like, a_like) if eta >= 0 else (a_like, b_like)
    return {"dk_minus": minus[0], "dk_plus": plus[0], "ratio_minus": minus[1], "ratio_plus": plus[1]}


MODE_COLUMNS = ("k", "energy", "j_A", "j_B", "theta", "eta", "amp_ratio", "class")


def mode_rows(modes: list[EigenMode]) -> list[tuple]:
    return [(m.k, m.energy, m.j_A, m.j_B, m.theta, m.eta, m.amp_ratio, m.mode_class.value) for m in modes]
