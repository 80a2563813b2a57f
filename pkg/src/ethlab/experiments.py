"""Scenario runner: config in, CSV/JSON/SVG artifacts out.

A run is described by one JSON document::

    {"scenario": "syk-thermalize",
     "model": {"n_majorana": 6},
     "times": {"start": 0, "stop": 200, "points": 201},
     "trotter_steps": "auto",
     "realizations": 50,
     "seed": 0}

Gate-based scenarios use model-energy units (hbar = 1).  ``grape-syk``
works in physical units: positions in um, rates in rad/s, times in s.
"""

from __future__ import annotations

import copy
import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from . import __version__
from .diagnostics import (
    blockade_sector,
    late_time_mean,
    parity_sector,
    sector_uniformity,
    spectral_decomposition,
)
from .grape import (
    DEFAULT_DELTA_BOUND,
    DEFAULT_DURATION,
    DEFAULT_OMEGA,
    DEFAULT_SLICES,
    PulseSchedule,
    RydbergLattice,
    fidelity_error,
    grape_optimize,
    propagate,
    syk_targets,
)
from .models import PxpConfig, Sxy4Config, SykConfig, build_pxp, build_sxy4, build_syk, neel_label
from .otoc import OtocConfig, otoc_statistical
from .pauli import PauliString, PauliSum
from .rng import derive_seed
from .statevector import basis_labels, prepare_state
from .svgplot import histogram_svg, line_svg
from .trotter import DENSE_STEP_QUBITS, calibrate_steps, trotter_series

__all__ = ["SCENARIOS", "ConfigError", "ExperimentConfig", "load_config", "run_experiment", "resolve_output_dir"]

log = logging.getLogger(__name__)

SCENARIOS = ("pxp-revival", "pxp-thermalize", "syk-thermalize", "syk-plus-state", "sxy4-thermalize", "otoc", "grape-syk")
OUT_ENV = "ETHLAB_OUT"
TROTTER_TOL = 1e-3
N_HISTOGRAM_TIMES = 6
DENSE_MAX_STEPS = 1 << 32

_DEFAULTS = {
    "pxp-revival": dict(model={"n_qubits": 5}, times=dict(start=0.0, stop=30.0, points=301), realizations=1),
    "pxp-thermalize": dict(model={"n_qubits": 11}, times=dict(start=0.0, stop=60.0, points=121), realizations=1),
    "syk-thermalize": dict(model={"n_majorana": 6}, times=dict(start=0.0, stop=200.0, points=201), realizations=50),
    "syk-plus-state": dict(model={"n_majorana": 6}, times=dict(start=0.0, stop=200.0, points=201), realizations=50),
    "sxy4-thermalize": dict(model={"n_qubits": 3}, times=dict(start=0.0, stop=200.0, points=201), realizations=50),
    "otoc": dict(
        model={"kind": "syk", "n_qubits": 3, "coupling_variance": 1.0, "disorder_seed": 3},
        times=dict(start=0.0, stop=6.0, points=31),
        realizations=100,
    ),
    "grape-syk": dict(
        model={
            "n_atoms": 3,
            "spacing_um": 11.0,
            "spacing_growth": 1.15,
            "omega": DEFAULT_OMEGA,
            "duration": DEFAULT_DURATION,
            "n_slices": DEFAULT_SLICES,
            "delta_bound": DEFAULT_DELTA_BOUND,
            "syk_coupling_variance": 1.0,
            "tau": 0.5,
            "n_targets": 3,
            "max_iters": 500,
            "tol": 1e-4,
        },
        times=None,
        realizations=1,
    ),
}
_DEFAULT_INITIAL = {
    "pxp-revival": "neel",
    "pxp-thermalize": "zeros",
    "syk-thermalize": "zeros",
    "syk-plus-state": "zeros+",
    "sxy4-thermalize": "zeros",
    "otoc": "zeros",
    "grape-syk": "zeros",
}
_KNOWN_KEYS = {"scenario", "model", "times", "trotter_steps", "realizations", "seed", "initial_state", "output_dir", "workers"}


class ConfigError(ValueError):
    """Invalid run configuration (exit code 2)."""


@dataclass
class ExperimentConfig:
    scenario: str
    model: dict
    times: dict | None
    trotter_steps: int | str = "auto"
    realizations: int = 1
    seed: int = 0
    initial_state: str | None = None
    output_dir: str | None = None
    workers: int = 1

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        if "config" in doc and "scenario" not in doc:
            doc = doc["config"]  # a run manifest
        unknown = set(doc) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        scenario = doc.get("scenario")
        if scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {scenario!r}; expected one of {', '.join(SCENARIOS)}")
        d = _DEFAULTS[scenario]
        model = {**d["model"], **(doc.get("model") or {})}
        times = doc.get("times", d["times"])
        if d["times"] is not None:
            times = {**d["times"], **(times or {})}
        cfg = cls(
            scenario=scenario,
            model=model,
            times=times,
            trotter_steps=doc.get("trotter_steps", "auto"),
            realizations=doc.get("realizations", d["realizations"]),
            seed=doc.get("seed", 0),
            initial_state=doc.get("initial_state"),
            output_dir=doc.get("output_dir"),
            workers=doc.get("workers", 1),
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.times is not None:
            try:
                start, stop, points = float(self.times["start"]), float(self.times["stop"]), int(self.times["points"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"times needs numeric start, stop, points: {exc}") from None
            if points < 2:
                raise ConfigError("times.points must be >= 2")
            if not (math.isfinite(start) and math.isfinite(stop)) or start < 0 or stop <= start:
                raise ConfigError("times must satisfy 0 <= start < stop")
        if not (self.trotter_steps == "auto" or (isinstance(self.trotter_steps, int) and self.trotter_steps >= 1)):
            raise ConfigError("trotter_steps must be a positive integer or \"auto\"")
        if not isinstance(self.realizations, int) or self.realizations < 1:
            raise ConfigError("realizations must be an integer >= 1")
        if self.scenario == "otoc" and self.realizations < 2:
            raise ConfigError("otoc needs realizations >= 2")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers must be an integer >= 1")
        if self.scenario == "grape-syk" and "c6" not in self.model:
            raise ConfigError("grape-syk requires model.c6 (rad/s um^6)")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "model": copy.deepcopy(self.model),
            "times": copy.deepcopy(self.times),
            "trotter_steps": self.trotter_steps,
            "realizations": self.realizations,
            "seed": self.seed,
            "initial_state": self.initial_state,
            "output_dir": self.output_dir,
            "workers": self.workers,
        }

    def time_grid(self) -> np.ndarray:
        t = self.times
        return np.linspace(float(t["start"]), float(t["stop"]), int(t["points"]))


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    return ExperimentConfig.from_dict(doc)


def resolve_output_dir(cfg: ExperimentConfig, cli_out: str | None = None) -> Path:
    """``--out`` beats ``$ETHLAB_OUT`` beats ``output_dir`` in the config."""
    chosen = cli_out or os.environ.get(OUT_ENV) or cfg.output_dir or f"ethlab-out/{cfg.scenario}"
    return Path(chosen)


def _prepare_output(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {path} is not writable: {exc}") from None


def _resolve_initial(label: str | None, scenario: str, n: int) -> str:
    label = label or _DEFAULT_INITIAL[scenario]
    if label == "neel":
        return neel_label(n)
    if label == "zeros":
        return "0" * n
    if label == "zeros+":
        return "0" * (n - 1) + "+"
    if len(label) != n or set(label) - set("01+"):
        raise ConfigError(f"initial_state {label!r} is not a {n}-character label over 0, 1, +")
    return label


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _steps_for(h: PauliSum, psi0: np.ndarray, times: np.ndarray, fixed) -> int:
    """Steps per grid interval: fixed, or calibrated on the full horizon."""
    if fixed != "auto":
        return int(fixed)
    intervals = len(times) - 1
    # small registers step by dense matrix powers, so large counts are cheap
    cap = DENSE_MAX_STEPS if h.n_qubits <= DENSE_STEP_QUBITS else 1 << 22
    total, _ = calibrate_steps(h, psi0, times[-1], TROTTER_TOL, start=intervals, max_steps=cap)
    return -(-total // intervals)


# ---------------------------------------------------------------------------
# state-evolution scenarios


@dataclass
class _Realization:
    index: int
    seed: int
    h: PauliSum


def _build_realizations(cfg: ExperimentConfig) -> tuple[list[_Realization], int]:
    m = cfg.model
    try:
        if cfg.scenario.startswith("pxp"):
            pc = PxpConfig(int(m["n_qubits"]), m.get("projector_convention", "ground_is_zero"))
            return [_Realization(0, cfg.seed, build_pxp(pc))], pc.n_qubits
        out = []
        for r in range(cfg.realizations):
            s = derive_seed(cfg.seed, r)
            if cfg.scenario == "sxy4-thermalize":
                mc = Sxy4Config(int(m["n_qubits"]), m.get("coupling_variance"), m.get("sparsity_p", 0.0), s)
                out.append(_Realization(r, s, build_sxy4(mc)))
            else:
                mc = SykConfig(int(m["n_majorana"]), m.get("coupling_variance"), m.get("sparsity_p", 0.0), s)
                out.append(_Realization(r, s, build_syk(mc)))
        return out, out[0].h.n_qubits
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model block: {exc}") from None


def _sector_for(cfg: ExperimentConfig, label: str) -> tuple[np.ndarray, str]:
    n = len(label)
    if cfg.scenario.startswith("pxp"):
        sector = blockade_sector(n)
        if cfg.model.get("projector_convention", "ground_is_zero") == "ground_is_one":
            sector = np.sort(((1 << n) - 1) ^ sector)
        return sector, "blockade"
    if "+" in label:
        return np.arange(1 << n), "full"
    parity = 1 if label.count("1") % 2 == 0 else -1
    return parity_sector(n, parity), "even" if parity == 1 else "odd"


def _run_evolution(cfg: ExperimentConfig, out: Path, manifest: dict) -> dict:
    reals, n = _build_realizations(cfg)
    label = _resolve_initial(cfg.initial_state, cfg.scenario, n)
    psi0 = prepare_state(label)
    times = cfg.time_grid()
    even = parity_sector(n, 1)
    sector, sector_name = _sector_for(cfg, label)
    outside = np.setdiff1d(np.arange(1 << n), sector)

    if cfg.trotter_steps == "auto":
        steps = max(_steps_for(r.h, psi0, times, "auto") for r in reals)
    else:
        steps = int(cfg.trotter_steps)
    manifest["trotter_steps_per_interval"] = steps
    manifest["realization_seeds"] = [r.seed for r in reals]

    def one(r: _Realization):
        states = trotter_series(r.h, psi0, times, steps)
        probs = np.abs(states) ** 2
        surv = np.abs(states @ psi0.conj()) ** 2
        dec = spectral_decomposition(r.h, psi0)
        w = dec.weights
        exact_surv = np.array([abs(np.vdot(psi0, dec.evolve(t))) ** 2 for t in times])
        leak = float(np.max(probs[:, outside].sum(axis=1))) if outside.size else 0.0
        # infinite-time survival sum_i |c_i|^4 (nondegenerate spectrum)
        return probs, surv, exact_surv, leak, float(w @ w)

    if cfg.workers > 1 and len(reals) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(one, reals))
    else:
        results = [one(r) for r in reals]

    probs = np.mean([r[0] for r in results], axis=0)
    survival = np.mean([r[1] for r in results], axis=0)
    exact_surv = np.mean([r[2] for r in results], axis=0)
    even_mass = probs[:, even].sum(axis=1)
    unif = np.array([sector_uniformity(p, sector) for p in probs])

    _write_csv(
        out / "series.csv",
        ["time", "survival", "survival_exact", "even_mass", "L1_uniformity", "Linf_uniformity"],
        zip(times, survival, exact_surv, even_mass, unif[:, 0], unif[:, 1]),
    )
    labels = basis_labels(n)
    hist_idx = sorted(set(np.linspace(0, len(times) - 1, N_HISTOGRAM_TIMES).round().astype(int).tolist()))
    _write_csv(
        out / "histograms.csv",
        ["time", "label", "probability"],
        ((times[k], labels[j], probs[k, j]) for k in hist_idx for j in range(1 << n)),
    )

    late = late_time_mean(survival)
    late_probs = probs[-max(1, round(0.25 * len(times))) :].mean(axis=0)
    summary = {
        "scenario": cfg.scenario,
        "n_qubits": n,
        "initial_state": label,
        "realizations": len(reals),
        "trotter_steps_per_interval": steps,
        "sector": sector_name,
        "late_time_mean_survival": late,
        "late_time_mean_survival_exact": late_time_mean(exact_surv),
        "diagonal_ensemble_survival": float(np.mean([r[4] for r in results])),
        "max_sector_leak": max(r[3] for r in results),
        "late_time_probabilities": dict(zip(labels, late_probs.tolist())),
        "late_time_Linf_uniformity": late_time_mean(unif[:, 1]),
    }
    if cfg.scenario.startswith("pxp"):
        peaks, props = find_peaks(survival, height=0.2)
        summary["revival_peaks"] = [[float(times[p]), float(h)] for p, h in zip(peaks, props["peak_heights"])]

    (out / "survival.svg").write_text(
        line_svg(times, {"Trotter": survival, "exact": exact_surv}, f"{cfg.scenario}: survival of |{label}>", "t", "survival")
    )
    (out / "uniformity.svg").write_text(
        line_svg(times, {"L1": unif[:, 0], "Linf": unif[:, 1]}, f"distance to uniform on {sector_name} sector", "t", "distance")
    )
    (out / "histogram.svg").write_text(histogram_svg(labels, late_probs, "late-time basis probabilities"))
    return summary


# ---------------------------------------------------------------------------
# OTOC


def _pauli_from_spec(spec: str, n: int) -> PauliString:
    """``"Z0"`` (letter + 0-based qubit) or a full label such as ``"ZII"``."""
    if len(spec) == n and set(spec.upper()) <= set("IXYZ"):
        return PauliString.from_label(spec)
    try:
        return PauliString.single(spec[0], int(spec[1:]), n)
    except (ValueError, KeyError, IndexError):
        raise ConfigError(f"cannot parse operator {spec!r}") from None


def _run_otoc(cfg: ExperimentConfig, out: Path, manifest: dict) -> dict:
    m = cfg.model
    kind = m.get("kind", "syk")
    n = int(m.get("n_qubits", 3))
    try:
        if kind == "syk":
            h = build_syk(SykConfig(2 * n, m.get("coupling_variance"), m.get("sparsity_p", 0.0), int(m.get("disorder_seed", 0))))
        elif kind == "sxy4":
            h = build_sxy4(Sxy4Config(n, m.get("coupling_variance"), m.get("sparsity_p", 0.0), int(m.get("disorder_seed", 0))))
        else:
            raise ConfigError(f"otoc model kind must be 'syk' or 'sxy4', not {kind!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid model block: {exc}") from None
    pairs = m.get("pairs") or [["Z0", f"Z{n - 1}"], ["X0", f"X{n - 1}"]]
    label = _resolve_initial(cfg.initial_state, cfg.scenario, n)
    if "+" in label:
        raise ConfigError("otoc initial_state must be a basis bitstring")
    times = cfg.time_grid()
    summary = {"scenario": "otoc", "kind": kind, "n_qubits": n, "ensemble_size": cfg.realizations, "pairs": {}}
    manifest["pairs"] = {}
    curves = {}
    for w_spec, v_spec in pairs:
        W, V = _pauli_from_spec(w_spec, n), _pauli_from_spec(v_spec, n)
        oc = OtocConfig(
            W, V, times, cfg.realizations, label, cfg.seed,
            None if cfg.trotter_steps == "auto" else int(cfg.trotter_steps), TROTTER_TOL,
        )
        res = otoc_statistical(h, oc, with_exact=True, workers=cfg.workers)
        name = f"{w_spec}_{v_spec}"
        _write_csv(
            out / f"otoc_{name}.csv",
            ["time", "estimate", "stderr", "exact", "C_estimate"],
            zip(times, res.estimate, res.stderr, res.exact, res.commutator()),
        )
        z = np.abs(res.estimate - res.exact) / np.where(res.stderr > 0, res.stderr, np.inf)
        below = np.nonzero(res.estimate < 0.5)[0]
        summary["pairs"][name] = {
            "steps_per_interval": res.steps_per_interval,
            "max_abs_z": float(np.max(z)),
            "first_time_below_half": float(times[below[0]]) if below.size else None,
            "estimate_at_zero": float(res.estimate[0]),
        }
        manifest["pairs"][name] = {"trotter_steps_per_interval": res.steps_per_interval}
        curves[f"{name} estimate"] = res.estimate
        curves[f"{name} exact"] = res.exact
    manifest["unitary_seed"] = cfg.seed
    (out / "otoc.svg").write_text(line_svg(times, curves, f"OTOC ({kind}, R={cfg.realizations})", "t", "O(t)"))
    return summary


# ---------------------------------------------------------------------------
# GRAPE


def _run_grape(cfg: ExperimentConfig, out: Path, manifest: dict) -> dict:
    m = cfg.model
    try:
        n = int(m["n_atoms"])
        lattice = RydbergLattice.chain(n, float(m["spacing_um"]), float(m["c6"]), float(m["spacing_growth"]))
        omega = float(m["omega"])
        lattice.validate(omega)
        pulse0 = PulseSchedule.constant(
            0.0, int(m["n_slices"]), duration=float(m["duration"]), omega=omega, delta_bound=float(m["delta_bound"])
        )
        h_syk = build_syk(SykConfig(2 * n, m.get("syk_coupling_variance"), m.get("sparsity_p", 0.0), cfg.seed))
        label = _resolve_initial(cfg.initial_state, cfg.scenario, n)
        tau, n_targets = float(m["tau"]), int(m["n_targets"])
        max_iters, tol = int(m["max_iters"]), float(m["tol"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid grape-syk model block: {exc}") from None
    psi0 = prepare_state(label)
    targets = syk_targets(h_syk, psi0, tau, n_targets)
    manifest["blockade_radius_um"] = lattice.blockade_radius(omega)
    manifest["positions_um"] = lattice.positions.tolist()

    def one(tgt):
        return grape_optimize(pulse0, lattice, psi0, tgt, max_iters=max_iters, tol=tol)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(one, targets))
    else:
        results = [one(t) for t in targets]

    rows, traces = [], {}
    for k, (res, tgt) in enumerate(zip(results, targets), start=1):
        res.pulse.to_csv(out / f"pulse_target{k}.csv")
        (out / f"result_target{k}.json").write_text(res.to_json())
        check = fidelity_error(propagate(res.pulse, lattice, psi0), tgt)
        rows.append((k, k * tau, res.final_error, check, res.iterations, res.termination))
        traces[f"target {k}"] = res.trace
    _write_csv(out / "grape.csv", ["target", "syk_time", "final_error", "replayed_error", "iterations", "termination"], rows)
    longest = max(len(t) for t in traces.values())
    _write_csv(
        out / "traces.csv",
        ["iteration", *traces],
        ([i, *[t[min(i, len(t) - 1)] for t in traces.values()]] for i in range(longest)),
    )
    log_traces = {k: [math.log10(max(v, 1e-16)) for v in t] + [math.log10(max(t[-1], 1e-16))] * (longest - len(t)) for k, t in traces.items()}
    (out / "traces.svg").write_text(line_svg(range(longest), log_traces, "GRAPE error traces", "iteration", "log10 error"))
    dt_us = pulse0.dt * 1e6
    pulses = {f"target {k}": (r.pulse.delta / (2 * np.pi * 1e6)).tolist() for k, r in enumerate(results, start=1)}
    (out / "pulses.svg").write_text(
        line_svg([j * dt_us for j in range(pulse0.n_slices)], pulses, "optimized detunings", "t (us)", "Delta / 2pi (MHz)")
    )
    return {
        "scenario": "grape-syk",
        "n_atoms": n,
        "initial_state": label,
        "targets": [
            {"target": k, "syk_time": t, "final_error": e, "iterations": it, "termination": why}
            for k, t, e, _, it, why in rows
        ],
    }


_RUNNERS = {
    "pxp-revival": _run_evolution,
    "pxp-thermalize": _run_evolution,
    "syk-thermalize": _run_evolution,
    "syk-plus-state": _run_evolution,
    "sxy4-thermalize": _run_evolution,
    "otoc": _run_otoc,
    "grape-syk": _run_grape,
}


def run_experiment(cfg: ExperimentConfig, out: Path) -> dict:
    """Run one scenario into ``out`` and return its summary.

    Writes ``summary.json`` (deterministic) and ``manifest.json`` (config
    echo, code version, seeds, wall-clock, Trotter step counts).
    """
    _prepare_output(out)
    manifest: dict = {"config": cfg.to_dict(), "version": __version__, "seed": cfg.seed}
    t0 = time.perf_counter()
    summary = _RUNNERS[cfg.scenario](cfg, out, manifest)
    manifest["wall_clock_s"] = time.perf_counter() - t0
    _write_json(out / "summary.json", summary)
    _write_json(out / "manifest.json", manifest)
    return summary
