"""Experiment configurations, multi-cycle runs, sweeps and file output.

Python-side indices are 0-based. Anything a user reads or writes (config
files, CSV headers, JSON summaries) is 1-based, so level ``n`` in a file is
``n - 1`` here.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import jsonschema
import numpy as np

from . import __version__, linalg
from .adiabatic import AdiabaticTrajectory, FrameSample, frame_along, project
from .errors import ConfigError, FloquetEPError
from .floquet import EPReport, FloquetSpectrum, predict_ep, quasi_energies
from .model import (
    PRESETS,
    DriveTerm,
    ModelPreset,
    PeriodicHamiltonian,
    preset,
)
from .propagate import IntegratorSettings, evolve, period_propagators

log = logging.getLogger(__name__)

DOMINANCE_THRESHOLD = 0.6
DOMINANCE_WINDOW = 10  # cycles averaged for the final fractions
RENORM_LIMIT = 1e6

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_MATRIX = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": _COMPLEX},
}
CONFIG_SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "omega_abs"],
    "properties": {
        "model": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["preset"],
                    "properties": {
                        "preset": {"enum": list(PRESETS)},
                        "parameters": {
                            "type": "object",
                            "additionalProperties": False,
                            "properties": {"Omega": {"type": "number"}, "R0": {"type": "number"}},
                        },
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["h0"],
                    "properties": {
                        "h0": _MATRIX,
                        "drives": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["matrix", "harmonics"],
                                "properties": {
                                    "matrix": _MATRIX,
                                    "harmonics": {
                                        "type": "object",
                                        "minProperties": 1,
                                        "additionalProperties": False,
                                        "patternProperties": {"^[1-9][0-9]*$": _COMPLEX},
                                    },
                                },
                            },
                        },
                    },
                },
            ]
        },
        "omega_abs": {"type": "number", "exclusiveMinimum": 0},
        "direction": {"enum": ["cw", "ccw", "both"]},
        "cycles": {"type": "integer", "minimum": 1},
        "initial": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["adiabatic_index"],
                    "properties": {"adiabatic_index": {"type": "integer", "minimum": 1}},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["vector"],
                    "properties": {"vector": {"type": "array", "minItems": 1, "items": _COMPLEX}},
                },
            ]
        },
        "samples_per_cycle": {"type": "integer", "minimum": 4},
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rel_tol": {"type": "number", "exclusiveMinimum": 0},
                "abs_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_step": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "initial_step": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "prefix": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                "record": {"enum": ["stroboscopic", "full"]},
            },
        },
        "omega_grid": {
            "type": "array",
            "items": {"type": "number", "exclusiveMinimum": 0},
        },
    },
}


@dataclass(frozen=True, eq=False)
class ExplicitModel:
    h0: np.ndarray
    drives: tuple[DriveTerm, ...] = ()


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """A fully validated experiment description.

    Attributes:
        model: a preset or explicit matrices.
        omega_abs: cycling rate; the sign comes from ``direction``.
        direction: ``cw`` (omega > 0), ``ccw`` (omega < 0) or ``both``.
        cycles: number of drive periods.
        initial: 0-based adiabatic level, or an explicit state vector.
        samples_per_cycle: output samples per period.
        integrator: step control.
        output_dir, prefix, record: where and how much to write.
        omega_grid: sweep grid of ``|omega|`` values.
    """

    model: ModelPreset | ExplicitModel
    omega_abs: float
    direction: str = "both"
    cycles: int = 300
    initial: int | np.ndarray = 0
    samples_per_cycle: int = 200
    integrator: IntegratorSettings = IntegratorSettings()
    output_dir: str = "."
    prefix: str = "run"
    record: str = "stroboscopic"
    omega_grid: tuple[float, ...] = ()

    def __post_init__(self):
        if not (math.isfinite(self.omega_abs) and self.omega_abs > 0):
            raise ConfigError("omega_abs must be positive and finite")
        if self.direction not in ("cw", "ccw", "both"):
            raise ConfigError(f"bad direction {self.direction!r}")
        if self.cycles < 1 or self.samples_per_cycle < 4:
            raise ConfigError("cycles >= 1 and samples_per_cycle >= 4 required")
        dim = self.hamiltonian(1).dim
        if isinstance(self.initial, (int, np.integer)):
            if not 0 <= self.initial < dim:
                raise ConfigError(f"adiabatic index {self.initial + 1} outside 1..{dim}")
        else:
            v = np.asarray(self.initial, dtype=complex)
            if v.shape != (dim,) or not np.any(v):
                raise ConfigError(f"initial vector must be a nonzero vector of length {dim}")

    def signed_omega(self, sign: int) -> float:
        return sign * self.omega_abs

    def hamiltonian(self, sign: int) -> PeriodicHamiltonian:
        try:
            if isinstance(self.model, ModelPreset):
                return preset(self.model, self.signed_omega(sign))
            return PeriodicHamiltonian(self.model.h0, self.model.drives, self.signed_omega(sign))
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def directions(self) -> list[int]:
        return {"cw": [1], "ccw": [-1], "both": [1, -1]}[self.direction]

    def with_omega(self, omega_abs: float) -> "ExperimentConfig":
        return replace(self, omega_abs=omega_abs)

    def to_dict(self) -> dict:
        """JSON-ready echo in file conventions (1-based, complex as pairs)."""
        if isinstance(self.model, ModelPreset):
            model = {"preset": self.model.name, "parameters": dict(self.model.parameters)}
        else:
            model = {
                "h0": _matrix_out(self.model.h0),
                "drives": [
                    {"matrix": _matrix_out(d.matrix),
                     "harmonics": {str(k): _c(c) for k, c in d.harmonics.items()}}
                    for d in self.model.drives
                ],
            }
        if isinstance(self.initial, (int, np.integer)):
            initial = {"adiabatic_index": int(self.initial) + 1}
        else:
            initial = {"vector": [_c(z) for z in self.initial]}
        integ = {
            "rel_tol": self.integrator.rel_tol,
            "abs_tol": self.integrator.abs_tol,
            "max_step": self.integrator.max_step,
        }
        if self.integrator.initial_step is not None:
            integ["initial_step"] = self.integrator.initial_step
        return {
            "model": model,
            "omega_abs": self.omega_abs,
            "direction": self.direction,
            "cycles": self.cycles,
            "initial": initial,
            "samples_per_cycle": self.samples_per_cycle,
            "integrator": integ,
            "outputs": {"dir": self.output_dir, "prefix": self.prefix, "record": self.record},
            "omega_grid": list(self.omega_grid),
        }


def _c(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _matrix_out(m) -> list:
    return [[_c(z) for z in row] for row in np.asarray(m)]


def _matrix_in(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def config_from_dict(doc: Mapping[str, Any]) -> ExperimentConfig:
    """Validate a config document against the strict schema and build it.

    Raises:
        ConfigError: unknown keys, wrong types or inconsistent values.
    """
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from exc
    m = doc["model"]
    try:
        if "preset" in m:
            model: ModelPreset | ExplicitModel = ModelPreset(m["preset"], dict(m.get("parameters", {})))
        else:
            drives = tuple(
                DriveTerm(_matrix_in(d["matrix"]),
                          {int(k): complex(*v) for k, v in d["harmonics"].items()})
                for d in m.get("drives", [])
            )
            model = ExplicitModel(_matrix_in(m["h0"]), drives)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    init_doc = doc.get("initial", {"adiabatic_index": 1})
    if "adiabatic_index" in init_doc:
        initial: int | np.ndarray = init_doc["adiabatic_index"] - 1
    else:
        initial = np.array([complex(re, im) for re, im in init_doc["vector"]])
    integ = doc.get("integrator", {})
    try:
        settings = IntegratorSettings(**integ)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = doc.get("outputs", {})
    return ExperimentConfig(
        model=model,
        omega_abs=float(doc["omega_abs"]),
        direction=doc.get("direction", "both"),
        cycles=int(doc.get("cycles", 300)),
        initial=initial,
        samples_per_cycle=int(doc.get("samples_per_cycle", 200)),
        integrator=settings,
        output_dir=out.get("dir", "."),
        prefix=out.get("prefix", "run"),
        record=out.get("record", "stroboscopic"),
        omega_grid=tuple(float(w) for w in doc.get("omega_grid", [])),
    )


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


# --------------------------------------------------------------------------- runs


def _frame_mode(h: PeriodicHamiltonian) -> str:
    if h.preset is not None and h.preset.name == "longhi3":
        return "analytic_longhi3"
    return "numeric"


def _initial_state(cfg: ExperimentConfig, frame0: FrameSample) -> np.ndarray:
    if isinstance(cfg.initial, (int, np.integer)):
        return np.array(frame0.e[cfg.initial])
    return np.asarray(cfg.initial, dtype=complex)


def _direction_name(sign: int) -> str:
    return "cw" if sign > 0 else "ccw"


@dataclass
class SingleCycleResult:
    direction: str
    trajectory: AdiabaticTrajectory
    initial_index: int
    fidelity: float
    leakage: float
    spectrum: FloquetSpectrum | None = None

    def summary(self) -> dict:
        return {
            "direction": self.direction,
            "initial_index": self.initial_index + 1,
            "return_fidelity": self.fidelity,
            "max_leakage": self.leakage,
            "reconstruction_error": self.trajectory.reconstruction_error(),
        }

    def table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = len(self.trajectory.times)
        return self.trajectory.times, self.trajectory.populations, np.zeros(n)


def run_single_cycle(cfg: ExperimentConfig, direction: str | None = None) -> SingleCycleResult:
    """Evolve one period and project onto the instantaneous eigenframe.

    The return fidelity is ``|f_init(T)|^2`` relative to ``sum_n |f_n(0)|^2``
    (which is 1 for an adiabatic initial state); the leakage is the largest
    other ``|f_m(T)|^2`` on the same scale.
    """
    if direction is None:
        direction = "cw" if cfg.direction == "both" else cfg.direction
    sign = 1 if direction == "cw" else -1
    h = cfg.hamiltonian(sign)
    times = np.linspace(0.0, h.period, cfg.samples_per_cycle + 1)
    frames = frame_along(h, times, _frame_mode(h))
    a0 = _initial_state(cfg, frames[0])
    traj = evolve(h, a0, (0.0, h.period), len(times), cfg.integrator)
    adt = project(traj, frames)
    pops = adt.populations
    if isinstance(cfg.initial, (int, np.integer)):
        init = int(cfg.initial)
    else:
        init = int(np.argmax(pops[0]))
    ref = float(np.sum(pops[0]))
    fid = float(pops[-1, init]) / ref
    others = np.delete(pops[-1], init)
    leak = float(others.max()) / ref if others.size else 0.0
    return SingleCycleResult(direction, adt, init, fid, leak)


@dataclass
class DirectionRun:
    """Multi-cycle evolution in one direction.

    ``populations`` are ``|f_n|^2`` of the stored (renormalised) state; the
    true state equals ``exp(log_scale)`` times the stored one.
    """

    direction: str
    omega: float
    times: np.ndarray
    populations: np.ndarray
    log_scale: np.ndarray
    fractions: np.ndarray
    dominant: int | None
    spectrum: FloquetSpectrum

    def table(self):
        return self.times, self.populations, self.log_scale


def run_direction(cfg: ExperimentConfig, sign: int) -> DirectionRun:
    """Evolve ``cfg.cycles`` periods using a one-period propagator table.

    By periodicity ``U(t + mT, 0) = U(t, 0) M^m``, so one integration over a
    single period serves every cycle. The raw state is rescaled to unit norm
    whenever its norm exceeds ``RENORM_LIMIT``.
    """
    h = cfg.hamiltonian(sign)
    T = h.period
    S = cfg.samples_per_cycle
    times = np.linspace(0.0, T, S + 1)
    frames = frame_along(h, times, _frame_mode(h))
    table = period_propagators(h, S + 1, cfg.integrator).states
    M = table[-1]
    spectrum = quasi_energies(M, h.omega)

    e_adj = np.array([f.e_adj for f in frames[:-1]])
    e = np.array([f.e for f in frames[:-1]])
    den = np.einsum("kni,kni->kn", e_adj.conj(), e)
    phase = np.array([f.phase_accum for f in frames])
    cycle_phase = phase[-1]

    def pops_at(a, k, m):
        f = (e_adj[k].conj() @ a) / den[k] * np.exp(1j * (phase[k] + m * cycle_phase))
        return np.abs(f) ** 2

    a = _initial_state(cfg, frames[0])
    full = cfg.record == "full"
    out_t, out_p, out_s = [], [], []
    strobe = []
    log_scale = 0.0
    for m in range(cfg.cycles + 1):
        if m:
            a = M @ a
            nrm = float(np.linalg.norm(a))
            if not math.isfinite(nrm) or nrm == 0.0:
                raise FloquetEPError(f"state norm degenerated at cycle {m}")
            if nrm > RENORM_LIMIT:
                a = a / nrm
                log_scale += math.log(nrm)
                log.debug("cycle %d: renormalised by %.3e (log scale %.6g)", m, nrm, log_scale)
        p0 = pops_at(a, 0, m)
        strobe.append(p0)
        if full and m < cfg.cycles:
            for k in range(S):
                out_t.append(m * T + times[k])
                out_p.append(p0 if k == 0 else pops_at(table[k] @ a, k, m))
                out_s.append(log_scale)
        elif not full or m == cfg.cycles:
            out_t.append(m * T)
            out_p.append(p0)
            out_s.append(log_scale)

    strobe = np.array(strobe)
    window = strobe[max(1, len(strobe) - DOMINANCE_WINDOW):]
    norm = window / window.sum(axis=1, keepdims=True)
    fractions = norm.mean(axis=0)
    fractions = fractions / fractions.sum()
    best = int(np.argmax(fractions))
    dominant = best if fractions[best] >= DOMINANCE_THRESHOLD else None
    return DirectionRun(
        _direction_name(sign), h.omega, np.array(out_t), np.array(out_p), np.array(out_s),
        fractions, dominant, spectrum,
    )


def _h0_values(cfg: ExperimentConfig) -> np.ndarray:
    return linalg.eig(cfg.hamiltonian(1).h0).values


@dataclass
class ChiralityResult:
    dominant_cw: int | None
    dominant_ccw: int | None
    dominance_fractions: dict[str, np.ndarray]
    chiral: bool
    ep_report: EPReport
    runs: dict[str, DirectionRun] = field(default_factory=dict)

    def summary(self) -> dict:
        rep = self.ep_report
        return {
            "dominant_cw": None if self.dominant_cw is None else self.dominant_cw + 1,
            "dominant_ccw": None if self.dominant_ccw is None else self.dominant_ccw + 1,
            "chiral": self.chiral,
            "dominance_fractions": {k: [float(x) for x in v] for k, v in self.dominance_fractions.items()},
            "quasi_energies": {k: [_c(z) for z in r.spectrum.quasi_energies] for k, r in self.runs.items()},
            "defectivity": {k: r.spectrum.defectivity for k, r in self.runs.items()},
            "max_imag_quasi_energy": {k: r.spectrum.max_imag for k, r in self.runs.items()},
            **_ep_summary(rep),
        }


def _ep_summary(rep: EPReport) -> dict:
    return {
        "subsets": [[i + 1 for i in s] for s in rep.subsets],
        "orders": list(rep.orders),
        "predicted_dominant_cw": [i + 1 for i in rep.dominant_cw],
        "predicted_dominant_ccw": [i + 1 for i in rep.dominant_ccw],
    }


def run_chirality(cfg: ExperimentConfig) -> ChiralityResult:
    """Run both loop directions from the same initial state and compare.

    Final fractions are normalised ``|f_n|^2`` at the stroboscopic times of
    the last ``DOMINANCE_WINDOW`` cycles, averaged. A direction is decided
    only when one level holds at least ``DOMINANCE_THRESHOLD``; the run is
    chiral when both are decided and differ.
    """
    with ThreadPoolExecutor(max_workers=2) as pool:
        cw, ccw = pool.map(lambda s: run_direction(cfg, s), (1, -1))
    report = predict_ep(_h0_values(cfg), cfg.omega_abs)
    chiral = cw.dominant is not None and ccw.dominant is not None and cw.dominant != ccw.dominant
    return ChiralityResult(
        cw.dominant, ccw.dominant, {"cw": cw.fractions, "ccw": ccw.fractions},
        chiral, report, {"cw": cw, "ccw": ccw},
    )


@dataclass
class SweepRow:
    omega_abs: float
    max_imag_mu: float | None = None
    defectivity: float | None = None
    ep_flag: bool | None = None
    subsets: list[tuple[int, ...]] = field(default_factory=list)
    orders: list[int] = field(default_factory=list)
    dominant_cw: int | None = None
    dominant_ccw: int | None = None
    chiral: bool | None = None
    error: str | None = None

    def summary(self) -> dict:
        shift = lambda i: None if i is None else i + 1  # noqa: E731
        return {
            "omega_abs": self.omega_abs,
            "max_imag_mu": self.max_imag_mu,
            "defectivity": self.defectivity,
            "ep_flag": self.ep_flag,
            "subsets": [[i + 1 for i in s] for s in self.subsets],
            "orders": list(self.orders),
            "dominant_cw": shift(self.dominant_cw),
            "dominant_ccw": shift(self.dominant_ccw),
            "chiral": self.chiral,
            "error": self.error,
        }


def sweep_row(cfg: ExperimentConfig, omega_abs: float, dominance: bool = True) -> SweepRow:
    """One sweep grid point; numerical failures are recorded, not raised."""
    row = SweepRow(float(omega_abs))
    try:
        point = cfg.with_omega(float(omega_abs))
        report = predict_ep(_h0_values(point), omega_abs)
        row.subsets, row.orders = list(report.subsets), list(report.orders)
        if dominance:
            res = run_chirality(point)
            spectra = [r.spectrum for r in res.runs.values()]
            row.dominant_cw, row.dominant_ccw, row.chiral = res.dominant_cw, res.dominant_ccw, res.chiral
        else:
            h = point.hamiltonian(1)
            spectra = [quasi_energies(period_propagators(h, 2, cfg.integrator).final, h.omega)]
        row.max_imag_mu = max(s.max_imag for s in spectra)
        row.defectivity = min(s.defectivity for s in spectra)
        row.ep_flag = any(s.ep_flag for s in spectra)
    except (FloquetEPError, ArithmeticError, ValueError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        log.warning("sweep point %g failed: %s", omega_abs, row.error)
    return row


def run_sweep(
    cfg: ExperimentConfig,
    omega_grid: Sequence[float] | None = None,
    dominance: bool = True,
    workers: int | None = None,
) -> list[SweepRow]:
    """Evaluate every ``|omega|`` of the grid; rows keep the grid order."""
    grid = list(cfg.omega_grid if omega_grid is None else omega_grid)
    if not grid:
        return []
    if workers == 1:
        return [sweep_row(cfg, w, dominance) for w in grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda w: sweep_row(cfg, w, dominance), grid))


# ------------------------------------------------------------------------ output


def _fmt(x: float) -> str:
    return format(float(x), ".15g")


def trajectory_csv(times, populations, log_scale) -> str:
    """CSV text with header ``t,f1_sq,...,fN_sq,norm_scale``.

    ``norm_scale`` is the natural log of the cumulative renormalisation
    factor (0 when the state was never rescaled).
    """
    populations = np.asarray(populations)
    n = populations.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"f{i + 1}_sq" for i in range(n)] + ["norm_scale"])
    for t, p, s in zip(times, populations, log_scale):
        w.writerow([_fmt(t)] + [_fmt(x) for x in p] + [_fmt(s)])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return _c(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def summary_json(summary: Mapping[str, Any], cfg: ExperimentConfig | None = None) -> str:
    doc = dict(summary)
    doc["version"] = __version__
    if cfg is not None:
        doc["config"] = cfg.to_dict()
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def emit(
    result,
    out_dir: str | os.PathLike,
    prefix: str = "run",
    formats: Sequence[str] = ("csv", "json"),
    cfg: ExperimentConfig | None = None,
) -> list[Path]:
    """Write a result as CSV trajectories and/or a JSON summary.

    Accepts :class:`SingleCycleResult`, :class:`DirectionRun`,
    :class:`ChiralityResult`, a list of :class:`SweepRow`, or a plain dict
    (JSON only). Output depends only on the inputs, so reruns are
    byte-identical.
    """
    out = Path(out_dir)
    written: list[Path] = []
    summary_name = f"{prefix}_summary.json"
    if isinstance(result, ChiralityResult):
        tables = {name: run.table() for name, run in result.runs.items()}
        summary = result.summary()
    elif isinstance(result, (SingleCycleResult, DirectionRun)):
        tables = {result.direction: result.table()}
        summary_name = f"{prefix}_{result.direction}_summary.json"
        summary = result.summary() if isinstance(result, SingleCycleResult) else {
            "direction": result.direction,
            "fractions": result.fractions,
            "dominant": None if result.dominant is None else result.dominant + 1,
            "quasi_energies": result.spectrum.quasi_energies,
        }
    elif isinstance(result, list):
        tables = {}
        summary = {"rows": [r.summary() for r in result]}
        if "csv" in formats:
            written.append(_write(out / f"{prefix}_sweep.csv", sweep_csv(result)))
    elif isinstance(result, Mapping):
        tables, summary = {}, dict(result)
    else:
        raise TypeError(f"cannot emit {type(result).__name__}")
    if "csv" in formats:
        for name in sorted(tables):
            written.append(_write(out / f"{prefix}_{name}.csv", trajectory_csv(*tables[name])))
    if "json" in formats:
        written.append(_write(out / summary_name, summary_json(summary, cfg)))
    return written


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["omega_abs", "max_imag_mu", "defectivity", "ep_flag", "subsets",
                "dominant_cw", "dominant_ccw", "chiral", "error"])

    def cell(x):
        if x is None:
            return ""
        if isinstance(x, float):
            return _fmt(x)
        return str(x)

    for r in rows:
        s = r.summary()
        subsets = ";".join("-".join(str(i) for i in g) for g in s["subsets"])
        w.writerow([cell(r.omega_abs), cell(r.max_imag_mu), cell(r.defectivity), cell(r.ep_flag),
                    subsets, cell(s["dominant_cw"]), cell(s["dominant_ccw"]), cell(r.chiral),
                    cell(r.error)])
    return buf.getvalue()
