"""Command-line runner: ``decotunnel <subcommand> -c config.json``.

Exit codes: 0 success, 1 configuration error, 2 numerical error,
3 validation failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import decoherence, environment, spectral, twostate, validation
from .config import ExperimentConfig, Units, dump_config, load_config
from .csvio import write_csv
from .errors import ConfigError, DecotunnelError
from .spectral import ModeClass

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATE = 0, 1, 2, 3


class Context:
    """Derived quantities shared by the subcommands."""

    def __init__(self, cfg: ExperimentConfig, out_dir: Path, normalized: bool, threads: int):
        self.cfg = cfg
        self.g = cfg.geometry.build()
        self.thresholds = cfg.modes.thresholds.build()
        self.out_dir = out_dir
        self.normalized = normalized
        self.threads = threads

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def require_pair(self) -> tuple[int, int]:
        if self.cfg.modes.pair is None:
            raise ConfigError(["modes.pair: required by this subcommand"])
        return self.cfg.modes.pair

    @property
    def k0(self) -> float:
        return self.g.base_wavenumber(*self.require_pair())

    @property
    def s_hat(self) -> float:
        return self.g.s_tilde / self.k0

    @property
    def tau0(self) -> float:
        return self.g.tau0(self.k0)

    def pair(self) -> spectral.ModePair:
        j_a, j_b = self.require_pair()
        return spectral.find_pair(self.g, j_a, j_b, self.thresholds)

    def omega_d_values(self) -> list[float]:
        d = self.cfg.decoherence
        if d.omega_d is not None:
            values = list(d.omega_d)
        elif d.omega_d_grid is not None:
            values = d.omega_d_grid.values()
        elif d.tau_d is not None:
            return [1.0 / d.tau_d]
        else:
            raise ConfigError(["decoherence: give omega_d, omega_d_grid or tau_d"])
        if d.grid_units is Units.INVERSE_TAU0:
            values = [w / self.tau0 for w in values]
        return values

    def curves(self) -> list[tuple[ModeClass, float]]:
        if self.cfg.decoherence.curves:
            return [(c.mode_class, c.eta) for c in self.cfg.decoherence.curves]
        p = self.pair()
        return [(p.plus.mode_class, p.eta)]

    def times(self, delta_omega: float) -> np.ndarray:
        t_max = self.cfg.evolve.t_max or 2.0 * math.pi / delta_omega
        return np.linspace(0.0, t_max, self.cfg.evolve.samples)

    def t_scale(self) -> float:
        return 1.0 / self.tau0 if self.normalized else 1.0

    def w_scale(self) -> float:
        return self.tau0 if self.normalized else 1.0

    def rate_scale(self) -> float:
        return self.tau0 * self.s_hat if self.normalized else 1.0


def cmd_modes(ctx: Context) -> int:
    k_max = ctx.cfg.modes.k_max
    if k_max is None:
        k_max = ctx.k0 * 1.05 + math.pi / ctx.g.length
    modes = spectral.find_modes(ctx.g, k_max, ctx.thresholds)
    path = write_csv(ctx.path(ctx.cfg.output.modes), spectral.MODE_COLUMNS, spectral.mode_rows(modes))
    print(f"{len(modes)} modes -> {path}")
    return EXIT_OK


def cmd_evolve(ctx: Context) -> int:
    pair = ctx.pair()
    rows = twostate.trajectory(pair, pair.xi, ctx.times(pair.delta_omega))
    ts = ctx.t_scale()
    rows = [(r[0] * ts,) + tuple(r[1:]) for r in rows]
    path = write_csv(ctx.path(ctx.cfg.output.trajectory), twostate.TRAJECTORY_COLUMNS, rows)
    print(f"{len(rows)} samples -> {path}")
    return EXIT_OK


RATE_COLUMNS = ("class", "eta", "omega_d", "omega_tilde", "regime", "flag")


def cmd_rates(ctx: Context) -> int:
    rows = []
    for cls, eta in ctx.curves():
        for w in ctx.omega_d_values():
            est = decoherence.tunnel_rate_formula(cls, eta, ctx.s_hat, ctx.tau0, w)
            rows.append((cls, eta, w * ctx.w_scale(), est.value * ctx.rate_scale(), est.regime, est.flag))
    path = write_csv(ctx.path(ctx.cfg.output.rates), RATE_COLUMNS, rows)
    print(f"{len(rows)} rates -> {path}")
    return EXIT_OK


def cmd_regime_map(ctx: Context) -> int:
    d = ctx.cfg.decoherence
    rows = decoherence.regime_map(
        ctx.g, ctx.k0, ctx.curves(), ctx.omega_d_values(),
        simulate=d.simulate, threads=ctx.threads, max_events=d.max_events,
        stochastic=d.events == "stochastic", seed=d.seed,
    )
    ws, rs = ctx.w_scale(), ctx.rate_scale()
    out = [
        (r.mode_class, r.eta, r.omega_d * ws, r.omega_tilde_formula * rs,
         None if r.omega_tilde_sim is None else r.omega_tilde_sim * rs, r.flag)
        for r in rows
    ]
    path = write_csv(ctx.path(ctx.cfg.output.regime), decoherence.REGIME_COLUMNS, out)
    print(f"{len(out)} rows -> {path}")
    return EXIT_OK


def cmd_env(ctx: Context) -> int:
    pair = ctx.pair()
    e = ctx.cfg.environment
    coupling = environment.EnvCoupling(
        model=e.model,
        weights=tuple(m.weight for m in e.ensemble),
        omega_l=tuple(m.omega_l for m in e.ensemble),
        delta_omega_l=tuple(m.delta_omega_l for m in e.ensemble),
        omega_0l=tuple(m.omega_0l for m in e.ensemble),
    )
    rows = environment.environment_trajectory(pair, pair.xi, coupling, ctx.times(pair.delta_omega))
    ts = ctx.t_scale()
    rows = [(r[0] * ts,) + tuple(r[1:]) for r in rows]
    path = write_csv(ctx.path(ctx.cfg.output.environment), environment.ENV_COLUMNS, rows)
    print(f"{len(rows)} samples -> {path}")
    return EXIT_OK


def cmd_validate(ctx: Context) -> int:
    results = validation.run_all(ctx.cfg.oracle, ctx.threads)
    for r in results:
        print(r.summary())
    path = write_csv(ctx.path(ctx.cfg.output.report), validation.REPORT_COLUMNS, validation.report_rows(results))
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} criteria passed -> {path}")
    return EXIT_OK if failed == 0 else EXIT_VALIDATE


COMMANDS = {
    "modes": cmd_modes,
    "evolve": cmd_evolve,
    "rates": cmd_rates,
    "regime-map": cmd_regime_map,
    "env": cmd_env,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decotunnel", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("-c", "--config", required=True, help="JSON experiment configuration")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    parser.add_argument("--seed", type=int, help="seed for stochastic event sampling")
    parser.add_argument("--threads", type=int, help="worker threads (fallback: DECOTUNNEL_THREADS)")
    parser.add_argument("--normalized", action="store_true", help="frequencies in 1/tau_0, rates in units of the resonant rate")
    parser.add_argument("--dump-config", action="store_true", help="print the validated configuration and exit")
    return parser


def _threads(arg: Optional[int], cfg: ExperimentConfig) -> int:
    if arg is not None:
        value, source = arg, "--threads"
    elif os.environ.get("DECOTUNNEL_THREADS"):
        raw = os.environ["DECOTUNNEL_THREADS"]
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError([f"DECOTUNNEL_THREADS: not an integer: {raw!r}"]) from None
        source = "DECOTUNNEL_THREADS"
    else:
        return cfg.threads
    if value < 1:
        raise ConfigError([f"{source}: must be >= 1"])
    return value


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError(["--seed: must be an unsigned 64-bit integer"])
            cfg = cfg.model_copy(update={"decoherence": cfg.decoherence.model_copy(update={"seed": args.seed})})
        threads = _threads(args.threads, cfg)
        if args.dump_config:
            sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        out_dir = Path(args.out) if args.out else Path(cfg.output.dir)
        ctx = Context(cfg, out_dir, args.normalized or cfg.normalized, threads)
        return COMMANDS[args.command](ctx)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DecotunnelError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
