"""Acceptance suite: each criterion compares a reduced model with an exact or brute-force reference."""

from __future__ import annotations

import json
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm

from . import barrier, decoherence, environment, oracle, spectral, twostate
from .spectral import BoxGeometry, ModeClass

REPORT_COLUMNS = ("name", "predicted", "observed", "rel_error", "pass")


@dataclass(frozen=True)
class Check:
    name: str
    predicted: float
    observed: float
    passed: Optional[bool]

    @property
    def rel_error(self) -> float:
        if self.predicted == 0:
            return abs(self.observed)
        return abs(self.observed - self.predicted) / abs(self.predicted)

    def row(self) -> tuple:
        status = "info" if self.passed is None else ("pass" if self.passed else "fail")
        return (self.name, self.predicted, self.observed, self.rel_error, status)


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed is not False for c in self.checks)

    def add(self, name: str, predicted: float, observed: float, passed: Optional[bool]) -> None:
        self.checks.append(Check(name, float(predicted), float(observed), None if passed is None else bool(passed)))

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        failed = [c.name for c in self.checks if c.passed is False]
        tail = f" failed: {', '.join(failed)}" if failed else ""
        if self.error:
            tail = f" error: {self.error}"
        return f"[{status}] criterion {self.number:2d}: {self.title} ({self.seconds:.2f} s){tail}"


def _timed(number: int, title: str):
    def wrap(fn: Callable[..., None]):
        def run(*args, **kwargs) -> CriterionResult:
            res = CriterionResult(number, title)
            t0 = time.perf_counter()
            try:
                fn(res, *args, **kwargs)
            except Exception as exc:  # reported, not swallowed: the criterion fails
                res.error = f"{type(exc).__name__}: {exc}"
            res.seconds = time.perf_counter() - t0
            return res

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


def _slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@_timed(1, "scattering exactness")
def scattering_exactness(res: CriterionResult) -> None:
    t0 = time.perf_counter()
    for s in (0.0, 0.5, 1.0, 10.0, 100.0):
        c = barrier.delta_scatter(s)
        exact = 1.0 / (1.0 + s * s)
        res.add(f"transmission s_hat={s:g}", exact, c.transmission, abs(c.transmission - exact) <= 1e-12)
    c10 = barrier.delta_scatter(10.0)
    res.add("transmission asymptote s_hat=10", 1e-2, c10.transmission, abs(c10.transmission / 1e-2 - 1) <= 0.01)
    elapsed = time.perf_counter() - t0
    res.add("runtime seconds (< 0.1)", 0.1, elapsed, elapsed < 0.1)


def symmetric_shift_errors(s_values=(1e2, 1e3, 1e4), j: int = 1) -> tuple[list[float], list[float], list[float]]:
    """Relative errors of the symmetric-mode wavenumber shift and of k itself, plus antisymmetric errors."""
    shift_err, k_err, anti_err = [], [], []
    for s in s_values:
        g = BoxGeometry(1.0, 1.0, s)
        base = math.pi * j / g.x0
        modes = [m for m in spectral.find_modes(g, base * 1.01) if m.j_A == j]
        sym = next(m for m in modes if not m.double_pole)
        anti = next(m for m in modes if m.double_pole)
        k_asym = spectral.symmetric_mode_asymptote(j, g.x0, s)
        shift_err.append(abs((sym.k - base) - (k_asym - base)) / abs(k_asym - base))
        k_err.append(abs(sym.k - k_asym) / sym.k)
        anti_err.append(abs(anti.k - spectral.antisymmetric_mode_wavenumber(j, g.x0)) / anti.k)
    return shift_err, k_err, anti_err


@_timed(2, "dispersion vs asymptotics")
def dispersion_asymptotics(res: CriterionResult) -> None:
    s_values = (1e2, 1e3, 1e4)
    shift_err, k_err, anti_err = symmetric_shift_errors(s_values)
    slope = _slope(s_values, shift_err)
    res.add("symmetric shift error slope", -1.0, slope, abs(slope + 1.0) <= 0.1)
    res.add("symmetric k error slope", -2.0, _slope(s_values, k_err), None)
    for s, e in zip(s_values, anti_err):
        res.add(f"antisymmetric root s_tilde={s:g}", 0.0, e, e <= spectral.ROOT_TOL)


@_timed(3, "pair identity")
def pair_identity(res: CriterionResult, samples: int = 100, seed: int = 3) -> None:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        eta = rng.uniform(-30, 30)
        ratio = rng.uniform(0.3, 3.0)
        sigma = int(rng.choice([-1, 1]))
        k0 = 1.0
        g = BoxGeometry(1.0, ratio, 1e3 * k0)
        p = spectral.near_resonant_params(eta / (2e3), k0, g, sigma)
        target = -g.x_A / g.x_B
        worst = max(worst, abs(p.ratio_minus * p.ratio_plus / target - 1.0))
    res.add("max relative deviation of branch product", 0.0, worst, worst <= 1e-6)


@_timed(4, "two-state propagator")
def propagator_oracle(res: CriterionResult, samples: int = 1000, seed: int = 4) -> None:
    rng = np.random.default_rng(seed)
    worst_exp, worst_comp = 0.0, 0.0
    for _ in range(samples):
        xi = rng.uniform(-5, 5)
        pair = spectral_pair(rng.uniform(0.01, 10), rng.uniform(-10, 10))
        t1, t2 = rng.uniform(-20, 20, size=2)
        u = twostate.unitary_propagator(pair, xi, t1)
        h = twostate.hamiltonian(pair, xi).matrix
        worst_exp = max(worst_exp, np.max(np.abs(u - expm(-1j * h * t1))))
        u12 = twostate.unitary_propagator(pair, xi, t1 + t2)
        comp = twostate.unitary_propagator(pair, xi, t2) @ u
        worst_comp = max(worst_comp, np.max(np.abs(u12 - comp)))
    res.add("max |U - expm(-iHt)|", 0.0, worst_exp, worst_exp < 1e-9)
    res.add("max composition error", 0.0, worst_comp, worst_comp < 1e-10)


@dataclass(frozen=True)
class _Pair:
    delta_omega: float
    omega_0: float


def spectral_pair(delta_omega: float, omega_0: float) -> _Pair:
    """Bare two-level parameters, for checks that need no geometry."""
    return _Pair(delta_omega, omega_0)


@dataclass(frozen=True)
class FidelityRun:
    times: np.ndarray
    p_b_grid: np.ndarray
    p_b_model: np.ndarray
    delta_omega_grid: float
    delta_omega_delta: float
    xi_grid: float


def resonant_fidelity(s_hat: float = 20.0, n: int = 4000, steps_per_period: int = 4000,
                      width: Optional[float] = None, sample_every: int = 20) -> FidelityRun:
    """Grid evolution of |A> built from the lowest grid pair, against the two-state prediction."""
    k0 = math.pi
    g = BoxGeometry(1.0, 1.0, s_hat * k0)
    bar = oracle.make_barrier(g, n, width)
    grid = oracle.Grid(g, n)
    minus, plus = oracle.grid_eigenmodes(g, bar, n, 2)
    xi = math.sqrt(g.x_B / g.x_A) * plus.amplitude_ratio(g, grid.dx)
    dw = plus.energy - minus.energy
    inner = (plus.vector + xi * minus.vector) / math.sqrt(1.0 + xi * xi)
    psi = oracle.GridWavefunction.from_interior(grid, inner)
    period = 2.0 * math.pi / dw
    cn = oracle.CrankNicolson(g, bar, n, period / steps_per_period)
    traj = cn.evolve(psi, steps_per_period, sample_every)
    times = np.array([t for t, _ in traj])
    pb = np.array([oracle.project_sections(w, g, bar)[1] for _, w in traj])
    ext = twostate.extent_of_tunnelling(xi)
    model = 4.0 * ext**2 * np.sin(0.5 * dw * times) ** 2
    exact = spectral.find_pair(g, 1, 1)
    return FidelityRun(times, pb, model, dw, exact.delta_omega, xi)


@_timed(5, "oracle fidelity")
def oracle_fidelity(res: CriterionResult, n: int = 4000, steps_per_period: int = 4000,
                    width: Optional[float] = None, s_hat: float = 20.0) -> None:
    t0 = time.perf_counter()
    run = resonant_fidelity(s_hat, n, steps_per_period, width)
    elapsed = time.perf_counter() - t0
    dev = float(np.max(np.abs(run.p_b_grid - run.p_b_model)))
    res.add("max |P_B grid - P_B two-state|", 0.0, dev, dev <= 0.05)
    res.add("grid delta_omega vs delta-barrier delta_omega", run.delta_omega_delta, run.delta_omega_grid, None)
    res.add("runtime seconds (< 120)", 120.0, elapsed, elapsed < 120.0)


def zeno_scan(s_hat: float = 100.0, points: int = 6) -> tuple[np.ndarray, np.ndarray, np.ndarray, float, float]:
    """Fitted relaxation rates of the exact resonant pair across the Zeno window."""
    k0 = math.pi
    g = BoxGeometry(1.0, 1.0, s_hat * k0)
    pair = spectral.find_pair(g, 1, 1)
    tau0 = g.tau0(k0)
    tau_r = tau0 * s_hat
    tau_d = np.geomspace(5.0 * tau0, tau_r / 10.0, points)
    gammas = []
    for td in tau_d:
        ch = decoherence.DecoherenceChannel(decoherence.computational_basis(2), 1.0, float(td))
        horizon = decoherence.hybrid_horizon(pair, pair.xi, float(td))
        gammas.append(decoherence.simulate_hybrid(pair, pair.xi, ch, horizon).gamma)
    formula = tau_d / (tau0**2 * s_hat**2)
    return tau_d, np.array(gammas), formula, tau0, pair.delta_omega


@_timed(6, "Zeno regime")
def zeno_regime(res: CriterionResult) -> None:
    tau_d, gammas, formula, _, _ = zeno_scan()
    for td, gm, fm in zip(tau_d, gammas, formula):
        ratio = gm / fm
        res.add(f"gamma vs formula tau_d={td:.4g}", fm, gm, 0.5 <= ratio <= 2.0)
    slope = _slope(tau_d, gammas)
    res.add("log-log slope of gamma vs tau_d", 1.0, slope, abs(slope - 1.0) <= 0.15)
    # variants reported for comparison only
    pair = spectral.find_pair(BoxGeometry(1.0, 1.0, 100.0 * math.pi), 1, 1)
    td = float(tau_d[0])
    w_inst = decoherence.transfer_probability(pair, pair.xi, td)
    res.add(f"cycle-averaged W / instantaneous W tau_d={td:.4g}", 1.0,
            decoherence.cycle_averaged_transfer(pair.xi) / w_inst, None)
    ch = decoherence.DecoherenceChannel(decoherence.computational_basis(2), 1.0, td)
    stoch = decoherence.simulate_hybrid(pair, pair.xi, ch, decoherence.hybrid_horizon(pair, pair.xi, td),
                                        stochastic=True, rng=np.random.default_rng(6))
    res.add(f"exponential waiting times gamma tau_d={td:.4g}", float(formula[0]), stoch.gamma, None)


FIG3_S_HAT = 100.0
FIG3_ETA = 10.0


def fig3_setup(num: int = 40) -> tuple[BoxGeometry, float, list, list[float]]:
    k0 = math.pi
    g = BoxGeometry(1.0, 1.0, FIG3_S_HAT * k0)
    tau0 = g.tau0(k0)
    tau_r = tau0 * FIG3_S_HAT
    grid = [float(w) for w in np.geomspace(1e-2 / tau_r, 10.0 / tau0, num)]
    curves = [(ModeClass.RESONANT, 0.0), (ModeClass.INTERMEDIATE, FIG3_ETA), (ModeClass.NON_RESONANT_A, FIG3_S_HAT)]
    return g, k0, curves, grid


def fig3_config() -> dict:
    """Configuration for the standard regime map: three mode classes at s_hat = 100."""
    return {
        "geometry": {"x_A": 1.0, "x_B": 1.0, "s_tilde": FIG3_S_HAT * math.pi},
        "modes": {"pair": [1, 1]},
        "decoherence": {
            "omega_d_grid": {"start": 1e-4, "stop": 10.0, "num": 40, "spacing": "log"},
            "grid_units": "inverse_tau0",
            "simulate": True,
            "max_events": 20000,
            "curves": [
                {"class": "Resonant", "eta": 0.0},
                {"class": "Intermediate", "eta": FIG3_ETA},
                {"class": "NonResonantA", "eta": FIG3_S_HAT},
            ],
        },
        "output": {"dir": "out/fig3"},
    }


@_timed(7, "regime-map shape")
def regime_shape(res: CriterionResult, threads: int = 1) -> None:
    t0 = time.perf_counter()
    g, k0, curves, grid = fig3_setup()
    rows = decoherence.regime_map(g, k0, curves, grid, threads=threads)
    s_hat, tau0 = g.s_tilde / k0, g.tau0(k0)

    def curve(cls):
        sel = [r for r in rows if r.mode_class is cls]
        return np.array([r.omega_d for r in sel]), np.array([r.omega_tilde_formula for r in sel])

    w, res_v = curve(ModeClass.RESONANT)
    _, non_v = curve(ModeClass.NON_RESONANT_A)
    _, int_v = curve(ModeClass.INTERMEDIATE)
    res.add("resonant non-increasing (max step up)", 0.0, float(np.max(np.diff(res_v))), np.all(np.diff(res_v) <= 0))
    res.add("non-resonant non-decreasing (max step down)", 0.0, float(-np.min(np.diff(non_v))), np.all(np.diff(non_v) >= 0))
    meet = 1.0 / (s_hat**2 * tau0)
    for cls, eta in curves:
        if cls is ModeClass.INTERMEDIATE:
            continue
        v = decoherence.tunnel_rate_formula(cls, eta, s_hat, tau0, 1.0 / tau0).value
        res.add(f"{cls.value} at omega_d = 1/tau_0", meet, v, 0.5 <= v / meet <= 2.0)
    peak = FIG3_ETA / (tau0 * s_hat)
    step = math.log(grid[1] / grid[0])
    found = w[int(np.argmax(int_v))]
    res.add("intermediate peak location", peak, found, abs(math.log(found / peak)) <= step * (1 + 1e-9))
    elapsed = time.perf_counter() - t0
    res.add("runtime seconds (< 60)", 60.0, elapsed, elapsed < 60.0)


@_timed(8, "Markov relaxation")
def markov_relaxation(res: CriterionResult) -> None:
    g = BoxGeometry(1.0, 1.0, 100.0 * math.pi)
    pair = spectral.find_pair(g, 1, 1)
    tau_d = 2.0
    u = twostate.unitary_propagator(pair, pair.xi, tau_d)
    gen = decoherence.pauli_rates(u, tau_d)
    gamma = abs(u[0, 1]) ** 2 / tau_d
    t_end = 10.0 / (2.0 * gamma)
    p = decoherence.markov_evolve([1.0, 0.0], gen, t_end)
    res.add("|P_B - 1/2| at t = 10/(2 gamma)", 0.0, abs(p[1] - 0.5), abs(p[1] - 0.5) < 1e-3)
    worst = 0.0
    for t in np.linspace(0.0, t_end, 25):
        p = decoherence.markov_evolve([1.0, 0.0], gen, float(t))
        worst = max(worst, abs(p[1] - float(decoherence.markov_two_state(gamma, t))))
    res.add("max deviation from closed form", 0.0, worst, worst < 1e-9)


def random_density(rng: np.random.Generator, n: int) -> decoherence.DensityMatrix:
    rank = int(rng.integers(1, n + 1))
    z = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    m = z @ z.conj().T
    return decoherence.DensityMatrix(m / np.trace(m))


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@_timed(9, "CPTP and entropy")
def cptp_entropy(res: CriterionResult, samples: int = 500, seed: int = 9) -> None:
    rng = np.random.default_rng(seed)
    tr_err, min_eig, ent_drop = 0.0, math.inf, -math.inf
    for i in range(samples):
        n = (2, 4, 8)[i % 3]
        rho = random_density(rng, n)
        ch = decoherence.DecoherenceChannel(random_unitary(rng, n), float(rng.uniform()), 1.0)
        out = decoherence.apply_kraus(rho, ch)
        tr_err = max(tr_err, abs(out.trace - 1.0))
        min_eig = min(min_eig, float(out.eigenvalues().min()))
        ent_drop = max(ent_drop, rho.entropy() - out.entropy())
    res.add("max trace error", 0.0, tr_err, tr_err < 1e-10)
    res.add("min eigenvalue", 0.0, min_eig, min_eig > -1e-10)
    res.add("max entropy decrease", 0.0, ent_drop, ent_drop <= 1e-12)


@_timed(10, "environment residual")
def environment_residual(res: CriterionResult, samples: int = 100, seed: int = 10) -> None:
    rng = np.random.default_rng(seed)
    worst, worst_abt = 0.0, 0.0
    for _ in range(samples):
        xi = rng.uniform(-3, 3)
        pair = spectral_pair(rng.uniform(0.01, 5), rng.uniform(0, 10))
        w_l = rng.uniform(-20, 20)
        t = rng.uniform(0, 50)
        worst = max(worst, environment.schrodinger_residual(pair, xi, w_l, t))
        a = environment.minimal_exchange_evolution(pair, xi, 0.0, t).as_array()
        b = twostate.evolve_amplitudes(twostate.PartitionAmplitudes(1.0, 0.0), pair, xi, t).as_array()
        worst_abt = max(worst_abt, float(np.max(np.abs(a - b))))
    res.add("max Schrodinger residual", 0.0, worst, worst < 1e-8)
    res.add("omega_l = 0 vs unperturbed evolution", 0.0, worst_abt, worst_abt < 1e-12)
    pair = spectral_pair(1.0, 5.0)
    w_l = 100.0
    b0, _ = environment._b_params(pair, 1.0, w_l)
    ts = np.linspace(0.0, 2.0 * math.pi / b0, 4001)
    peak = max(environment.minimal_exchange_evolution(pair, 1.0, w_l, float(t)).p_b for t in ts)
    ext = twostate.extent_of_tunnelling(1.0)
    predicted = 4.0 * ext**2 * (pair.delta_omega / w_l) ** 2
    res.add("extent suppression at omega_l = 100 delta_omega", predicted, peak, abs(peak / predicted - 1) <= 0.1)


@_timed(11, "ABL reduces to Born")
def abl_consistency(res: CriterionResult, samples: int = 100, seed: int = 11) -> None:
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(samples):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        s = twostate.PartitionAmplitudes.from_array(v / np.linalg.norm(v))
        for sec in twostate.Section:
            if twostate.abl_probability(s, None, sec) != twostate.born_probability(s, sec):
                mismatches += 1
    res.add("mismatches with Born value", 0.0, mismatches, mismatches == 0)


@_timed(12, "determinism")
def determinism(res: CriterionResult, config_path=None) -> None:
    from . import cli

    outputs = []
    with tempfile.TemporaryDirectory() as tmp:
        if config_path is None:
            config_path = Path(tmp) / "fig3.json"
            config_path.write_text(json.dumps(fig3_config(), indent=2), encoding="utf-8")
        for run in ("a", "b"):
            out = Path(tmp) / run
            code = cli.main(["regime-map", "-c", str(config_path), "--out", str(out), "--seed", "17"])
            if code != 0:
                raise RuntimeError(f"regime-map exited with {code}")
            outputs.append(sorted(out.glob("*.csv"))[0].read_bytes())
    res.add("regime CSV byte-identical", 1.0, float(outputs[0] == outputs[1]), outputs[0] == outputs[1])


CRITERIA = (
    scattering_exactness,
    dispersion_asymptotics,
    pair_identity,
    propagator_oracle,
    oracle_fidelity,
    zeno_regime,
    regime_shape,
    markov_relaxation,
    cptp_entropy,
    environment_residual,
    abl_consistency,
    determinism,
)


def run_all(oracle_cfg=None, threads: int = 1, config_path=None) -> list[CriterionResult]:
    kw5 = {}
    if oracle_cfg is not None:
        kw5 = dict(n=oracle_cfg.n, steps_per_period=oracle_cfg.steps_per_period,
                   width=oracle_cfg.barrier_width, s_hat=oracle_cfg.s_hat)
    out = []
    for fn in CRITERIA:
        if fn is oracle_fidelity:
            out.append(fn(**kw5))
        elif fn is regime_shape:
            out.append(fn(threads=threads))
        elif fn is determinism:
            out.append(fn(config_path=config_path))
        else:
            out.append(fn())
    return out


def report_rows(results: list[CriterionResult]) -> list[tuple]:
    rows = []
    for r in results:
        for c in r.checks:
            row = c.row()
            rows.append((f"{r.number}: {row[0]}",) + row[1:])
        if r.error:
            rows.append((f"{r.number}: error", float("nan"), float("nan"), float("nan"), "fail"))
    return rows
