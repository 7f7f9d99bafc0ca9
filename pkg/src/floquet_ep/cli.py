"""Command-line entry point ``floquet-ep``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from . import __version__, linalg
from .errors import ConfigError, FloquetEPError
from .experiments import (
    ExperimentConfig,
    emit,
    load_config,
    run_chirality,
    run_direction,
    run_single_cycle,
    run_sweep,
)
from .floquet import (
    build_floquet_state,
    build_generalized_state,
    predict_ep,
    quasi_energies,
)
from .propagate import period_propagators

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _signs(cfg: ExperimentConfig) -> list[int]:
    return cfg.directions()


def _first_sign(cfg: ExperimentConfig) -> int:
    return -1 if cfg.direction == "ccw" else 1


def cmd_spectrum(cfg, args):
    out = {}
    h0_vals = linalg.eig(cfg.hamiltonian(1).h0).values
    rep = predict_ep(h0_vals, cfg.omega_abs)
    for s in _signs(cfg):
        h = cfg.hamiltonian(s)
        spec = quasi_energies(period_propagators(h, 2, cfg.integrator).final, h.omega)
        out["cw" if s > 0 else "ccw"] = {
            "quasi_energies": spec.quasi_energies,
            "multipliers": spec.multipliers,
            "defectivity": spec.defectivity,
            "ep_flag": spec.ep_flag,
            "max_imag": spec.max_imag,
        }
    summary = {
        "h0_eigenvalues": h0_vals,
        "spectra": out,
        "subsets": [[i + 1 for i in g] for g in rep.subsets],
        "orders": rep.orders,
    }
    emit(summary, args.out, cfg.prefix, ("json",), cfg)
    flags = ", ".join(f"{k}: ep={v['ep_flag']} defect={v['defectivity']:.3g}" for k, v in out.items())
    return f"spectrum |omega|={cfg.omega_abs:g} subsets={summary['subsets']} {flags}"


def cmd_evolve(cfg, args):
    parts = []
    for s in _signs(cfg):
        name = "cw" if s > 0 else "ccw"
        if cfg.cycles == 1:
            res = run_single_cycle(cfg, name)
            emit(res, args.out, cfg.prefix, ("csv", "json"), cfg)
            parts.append(f"{name}: fidelity={res.fidelity:.6f} leakage={res.leakage:.3g}")
        else:
            run = run_direction(cfg, s)
            emit(run, args.out, cfg.prefix, ("csv", "json"), cfg)
            dom = "undecided" if run.dominant is None else run.dominant + 1
            parts.append(f"{name}: dominant={dom}")
    return f"evolve cycles={cfg.cycles} " + " ".join(parts)


def cmd_chirality(cfg, args):
    res = run_chirality(cfg)
    emit(res, args.out, cfg.prefix, ("csv", "json"), cfg)
    s = res.summary()
    return f"chirality dominant_cw={s['dominant_cw']} dominant_ccw={s['dominant_ccw']} chiral={s['chiral']}"


def _coeff_table(state):
    return {str(l): state.coeffs[l] for l in sorted(state.coeffs)}


def cmd_eigenstate(cfg, args):
    h = cfg.hamiltonian(_first_sign(cfg))
    n = args.level - 1
    if not 0 <= n < h.dim:
        raise ConfigError(f"level {args.level} outside 1..{h.dim}")
    st = build_floquet_state(h, n)
    ts = np.linspace(0, h.period, 21)
    summary = {
        "level": args.level,
        "omega": h.omega,
        "mu": st.mu,
        "energy": st.energy,
        "l_range": [st.l_min, st.l_max],
        "residual": st.residual(h, ts),
        "coeffs": _coeff_table(st),
    }
    emit(summary, args.out, f"{cfg.prefix}_eigenstate{args.level}", ("json",), cfg)
    return f"eigenstate level={args.level} mu={st.mu:.12g} residual={summary['residual']:.3g}"


def cmd_generalized(cfg, args):
    h = cfg.hamiltonian(_first_sign(cfg))
    y1, y2 = (p - 1 for p in args.pair)
    st = build_generalized_state(h, y1, y2)
    ts = np.linspace(0, 3 * h.period, 61)
    summary = {
        "pair": list(args.pair),
        "omega": h.omega,
        "mu": st.mu,
        "gamma": st.gamma,
        "solvability": st.solvability,
        "residual": st.residual(h, ts),
        "coeffs": _coeff_table(st),
        "secular_coeffs": {str(l): v for l, v in sorted((st.secular_coeffs or {}).items())},
    }
    emit(summary, args.out, f"{cfg.prefix}_generalized", ("json",), cfg)
    return f"generalized pair={tuple(args.pair)} gamma={complex(st.gamma):.6g} residual={summary['residual']:.3g}"


def cmd_sweep(cfg, args):
    grid = args.grid if args.grid is not None else list(cfg.omega_grid)
    rows = run_sweep(cfg, grid, dominance=not args.no_dominance)
    emit(rows, args.out, cfg.prefix, ("csv", "json"), cfg)
    flagged = [r.omega_abs for r in rows if r.ep_flag]
    failed = sum(r.error is not None for r in rows)
    return f"sweep points={len(rows)} ep_flagged={flagged} failed={failed}"


def _grid(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment JSON file")
    common.add_argument("--out", default=None, help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, default=None, help="accepted for uniformity; runs are deterministic")
    common.add_argument("--tol-scale", type=float, default=1.0, help="multiply integrator tolerances")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="floquet-ep", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="quasi-energies and predicted EPs")
    sub.add_parser("evolve", parents=[common], help="time evolution with adiabatic projection")
    sub.add_parser("chirality", parents=[common], help="compare both loop directions")
    e = sub.add_parser("eigenstate", parents=[common], help="Fourier-series Floquet eigenstate")
    e.add_argument("--level", type=int, default=1, help="1-based level of H0")
    g = sub.add_parser("generalized", parents=[common], help="order-2 generalized eigenstate")
    g.add_argument("--pair", type=int, nargs=2, required=True, metavar=("Y1", "Y2"))
    s = sub.add_parser("sweep", parents=[common], help="scan |omega|")
    s.add_argument("--grid", type=_grid, default=None, help="comma-separated |omega| values")
    s.add_argument("--no-dominance", action="store_true", help="skip the multi-cycle runs")
    return p


COMMANDS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "chirality": cmd_chirality,
    "eigenstate": cmd_eigenstate,
    "generalized": cmd_generalized,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if not args.tol_scale > 0:
            raise ConfigError("--tol-scale must be positive")
        cfg = load_config(args.config)
        if args.tol_scale != 1.0:
            cfg = replace(cfg, integrator=cfg.integrator.scaled(args.tol_scale))
        if args.out is None:
            args.out = cfg.output_dir
        line = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloquetEPError, ArithmeticError, OSError) as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(line)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
