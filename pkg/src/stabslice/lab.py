"""Experiment configs, kappa sweeps, fits and the CSV/SVG artifacts they produce.

A config is one JSON document.  It may name a ``preset`` whose values are
used as defaults; every other key overrides them.  Unknown keys are
rejected with the line they appear on.

    {
      "preset": "fig-baconshor",
      "noise": {"kappa": {"start": 0.9, "stop": 1.0, "num": 11}},
      "output": {"csv": "bs.csv"}
    }
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
import re
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any
from xml.sax.saxutils import escape

import numpy as np

from .circuit import Circuit, to_text
from .codes import CODES, GaugeFrame, build_lookup_decoder, get_code
from .evaluator import (
    READOUTS,
    TrajectoryConfig,
    TrajectoryMode,
    exact_logical_error,
    improvement_ratio,
    trajectory_sample,
)
from .noise import (
    DephasingParams,
    OverrotationParams,
    epsilon_relation,
    epsilon_relation_inverse,
    infidelity_to_epsilon,
)
from .slicer import BASELINES, SlicingMode, build_extraction

CSV_HEADER = ("kappa", "eps1", "eps2", "eps3", "p_sliced", "p_unsliced", "ratio")
GATE_SETS = ("native3body", "iontrap2body")
CLASSES = ("one", "two", "three")


class ConfigError(ValueError):
    pass


_KAPPA_GRID = {"start": 0.0, "stop": 1.0, "num": 11}

PRESETS: dict[str, dict] = {
    "fig-surface3body": {
        "code": "surface17",
        "gate_set": "native3body",
        "noise": {"kappa": _KAPPA_GRID, "infidelity": {"one": 0.0, "two": 1e-3, "three": 1e-3}},
    },
    "fig-surface2body": {
        "code": "surface17",
        "gate_set": "iontrap2body",
        "noise": {"kappa": _KAPPA_GRID, "infidelity": {"two": 5e-4}, "linked": True},
    },
    "fig-baconshor": {
        "code": "baconshor13",
        "gate_set": "iontrap2body",
        "noise": {"kappa": _KAPPA_GRID, "infidelity": {"two": 5e-4}, "linked": True},
    },
    "fig-fullopt-baconshor": {
        "code": "baconshor13",
        "gate_set": "iontrap2body",
        "compiler": {"peephole": True},
        "noise": {"kappa": _KAPPA_GRID, "infidelity": {"two": 1e-3}, "linked": True, "dephasing": {}},
    },
    "fig-fullopt-surface17": {
        "code": "surface17",
        "gate_set": "iontrap2body",
        "compiler": {"peephole": True},
        "noise": {"kappa": _KAPPA_GRID, "infidelity": {"two": 1e-3}, "linked": True, "dephasing": {}},
    },
    "fig-sk1-baconshor": {
        "code": "baconshor13",
        "gate_set": "iontrap2body",
        "compiler": {"peephole": True},
        "noise": {
            "kappa": {"start": 0.9847, "stop": 1.0, "num": 6},
            "infidelity": {"two": 1e-3},
            "linked": True,
            "sk1": True,
        },
    },
    "fig-multiround": {
        "code": "baconshor13",
        "gate_set": "iontrap2body",
        "noise": {"kappa": [1.0], "infidelity": {"two": 5e-4}, "linked": True},
        "evaluator": {"kind": "trajectories", "readout": "ideal", "rounds": 10, "shots": 10000, "seed": 0},
    },
}

# allowed keys per section; nested dicts are validated recursively
_SCHEMA: dict[str, Any] = {
    "preset": str,
    "code": str,
    "gate_set": str,
    "mode": str,
    "noise": {
        "kappa": (list, dict),
        "infidelity": {"one": float, "two": float, "three": float},
        "eps": {"one": float, "two": float, "three": float},
        "linked": bool,
        "dephasing": {"t1q": float, "t2q": float, "T2": float},
        "sk1": bool,
    },
    "compiler": {"baseline": str, "peephole": bool},
    "evaluator": {
        "kind": str,
        "readout": str,
        "rounds": int,
        "shots": int,
        "seed": int,
        "chunk": int,
        "modes": list,
        "terminal_only": bool,
    },
    "output": {"csv": str, "svg": str, "fit": str, "multiround": str, "circuit": str, "decoder": str},
}


def _line_of(text: str, key: str) -> int | None:
    m = re.search(rf'"{re.escape(key)}"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _where(text: str | None, key: str) -> str:
    line = _line_of(text, key) if text else None
    return f"line {line}: " if line else ""


def _check_keys(obj: dict, schema: dict, text: str | None, path: str) -> None:
    for key, val in obj.items():
        if key not in schema:
            raise ConfigError(f"{_where(text, key)}unknown key '{path}{key}'")
        kind = schema[key]
        if isinstance(kind, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{_where(text, key)}{path}{key} must be an object")
            _check_keys(val, kind, text, f"{path}{key}.")
        elif kind is float:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(f"{_where(text, key)}{path}{key} must be a number")
        elif kind is int:
            if isinstance(val, bool) or not isinstance(val, int):
                raise ConfigError(f"{_where(text, key)}{path}{key} must be an integer")
        elif not isinstance(val, kind):
            raise ConfigError(f"{_where(text, key)}{path}{key} has the wrong type")


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "kappa":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class ExperimentConfig:
    code: str = "surface17"
    gate_set: str = "native3body"
    mode: SlicingMode = SlicingMode.SLICED
    kappas: tuple[float, ...] = (1.0,)
    eps1: float = 0.0
    eps2: float = 0.0
    eps3: float = 0.0
    linked: bool = False
    dephasing: DephasingParams | None = None
    sk1: bool = False
    baseline: str = "all-positive"
    peephole: bool = False
    evaluator: str = "exact"
    readout: str = "bare"
    rounds: int = 10
    shots: int = 10_000
    seed: int = 0
    chunk: int = 5_000
    modes: tuple[TrajectoryMode, ...] = tuple(TrajectoryMode)
    terminal_only: bool = False
    outputs: dict = field(default_factory=dict)

    def params(self, kappa: float) -> OverrotationParams:
        return OverrotationParams(kappa, self.eps1, self.eps2, self.eps3, self.linked)

    def compiler_opts(self) -> dict:
        if self.gate_set != "iontrap2body":
            return {}
        return {"baseline": self.baseline, "peephole": self.peephole, "sk1": self.sk1}

    def build(self, mode: SlicingMode, frame: GaugeFrame | None = None) -> Circuit:
        return build_extraction(get_code(self.code), self.gate_set, mode, frame, **self.compiler_opts())

    def output(self, name: str, default: str) -> str:
        return self.outputs.get(name, default)


def _kappa_grid(grid, text) -> tuple[float, ...]:
    if isinstance(grid, dict):
        extra = set(grid) - {"start", "stop", "num"}
        if extra or len(grid) != 3:
            raise ConfigError(f"{_where(text, 'kappa')}kappa range needs exactly start, stop, num")
        num = grid["num"]
        if not isinstance(num, int) or num < 1:
            raise ConfigError(f"{_where(text, 'num')}kappa num must be a positive integer")
        ks = [round(k, 12) for k in np.linspace(grid["start"], grid["stop"], num).tolist()]
    else:
        ks = list(grid)
    if not ks:
        raise ConfigError(f"{_where(text, 'kappa')}empty kappa list")
    for k in ks:
        if isinstance(k, bool) or not isinstance(k, (int, float)) or not 0.0 <= k <= 1.0:
            raise ConfigError(f"{_where(text, 'kappa')}kappa value {k!r} outside [0, 1]")
    return tuple(sorted(float(k) for k in ks))


def parse_config(data: dict | str, text: str | None = None) -> ExperimentConfig:
    """Validate a config document (dict or JSON text) and resolve its preset."""
    if isinstance(data, str):
        text = data
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"line {e.lineno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(data, _SCHEMA, text, "")
    if "preset" in data:
        name = data["preset"]
        if name not in PRESETS:
            raise ConfigError(f"{_where(text, 'preset')}unknown preset {name!r}; known: {sorted(PRESETS)}")
        data = _merge(PRESETS[name], {k: v for k, v in data.items() if k != "preset"})

    cfg = ExperimentConfig()
    cfg.code = data.get("code", cfg.code)
    if cfg.code not in CODES:
        raise ConfigError(f"{_where(text, 'code')}unknown code {cfg.code!r}")
    cfg.gate_set = data.get("gate_set", cfg.gate_set)
    if cfg.gate_set not in GATE_SETS:
        raise ConfigError(f"{_where(text, 'gate_set')}gate_set must be one of {GATE_SETS}")
    if cfg.gate_set == "native3body" and cfg.code != "surface17":
        raise ConfigError(f"{_where(text, 'gate_set')}native3body extraction needs weight <= 4 stabilizers")
    try:
        cfg.mode = SlicingMode(data.get("mode", "sliced"))
    except ValueError:
        raise ConfigError(f"{_where(text, 'mode')}unknown slicing mode {data['mode']!r}") from None

    noise = data.get("noise", {})
    cfg.kappas = _kappa_grid(noise.get("kappa", [1.0]), text)
    cfg.linked = noise.get("linked", False)
    infid, eps = noise.get("infidelity", {}), noise.get("eps", {})
    both = set(infid) & set(eps)
    if both:
        raise ConfigError(f"{_where(text, min(both))}class {min(both)!r} given both as infidelity and eps")
    angles = {}
    for cls in CLASSES:
        if cls in infid:
            try:
                angles[cls] = infidelity_to_epsilon(infid[cls])
            except ValueError as e:
                raise ConfigError(f"{_where(text, cls)}{e}") from None
        elif cls in eps:
            if eps[cls] < 0:
                raise ConfigError(f"{_where(text, cls)}eps.{cls} must be non-negative")
            angles[cls] = float(eps[cls])
    if cfg.linked:
        if "one" in angles and "two" in angles:
            raise ConfigError(f"{_where(text, 'linked')}linked noise derives one class from the other; give only one")
        if "two" in angles:
            angles["one"] = epsilon_relation_inverse(angles["two"])
        elif "one" in angles:
            angles["two"] = epsilon_relation(angles["one"])
    cfg.eps1, cfg.eps2, cfg.eps3 = (angles.get(c, 0.0) for c in CLASSES)
    if "dephasing" in noise:
        try:
            cfg.dephasing = DephasingParams(**noise["dephasing"])
        except ValueError as e:
            raise ConfigError(f"{_where(text, 'dephasing')}{e}") from None
    cfg.sk1 = noise.get("sk1", False)

    comp = data.get("compiler", {})
    cfg.baseline = comp.get("baseline", cfg.baseline)
    if cfg.baseline not in BASELINES:
        raise ConfigError(f"{_where(text, 'baseline')}baseline must be one of {BASELINES}")
    cfg.peephole = comp.get("peephole", False)

    ev = data.get("evaluator", {})
    cfg.evaluator = ev.get("kind", "exact")
    if cfg.evaluator not in ("exact", "trajectories"):
        raise ConfigError(f"{_where(text, 'kind')}evaluator kind must be 'exact' or 'trajectories'")
    cfg.readout = ev.get("readout", cfg.readout)
    if cfg.readout not in READOUTS:
        raise ConfigError(f"{_where(text, 'readout')}readout must be one of {READOUTS}")
    for key in ("rounds", "shots", "chunk"):
        val = ev.get(key, getattr(cfg, key))
        if val < 1:
            raise ConfigError(f"{_where(text, key)}{key} must be positive")
        setattr(cfg, key, val)
    cfg.seed = ev.get("seed", cfg.seed)
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError(f"{_where(text, 'seed')}seed must fit in an unsigned 64-bit integer")
    if "modes" in ev:
        try:
            cfg.modes = tuple(TrajectoryMode(m) for m in ev["modes"])
        except ValueError:
            raise ConfigError(f"{_where(text, 'modes')}unknown trajectory mode in {ev['modes']!r}") from None
    cfg.terminal_only = ev.get("terminal_only", False)
    cfg.outputs = dict(data.get("output", {}))
    return cfg


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    return parse_config(text)


# --- sweeps ------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    kappa: float
    eps1: float
    eps2: float
    eps3: float
    p_sliced: float
    p_unsliced: float
    ratio: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, k) for k in CSV_HEADER)


def _sweep_point(cfg: ExperimentConfig, kappa: float, mode: SlicingMode) -> float:
    code = get_code(cfg.code)
    circ = cfg.build(mode, GaugeFrame.trivial(code) if mode is SlicingMode.ADAPTIVE else None)
    return exact_logical_error(circ, cfg.params(kappa), code, cfg.dephasing, readout=cfg.readout).p_logical


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> list[SweepRow]:
    """Exact sliced and unsliced logical error for every kappa, sorted by kappa."""
    jobs = [(k, m) for k in cfg.kappas for m in (SlicingMode.SLICED, SlicingMode.UNSLICED)]
    if threads > 1:
        with ProcessPoolExecutor(threads) as ex:
            vals = list(ex.map(_sweep_point, [cfg] * len(jobs), *zip(*jobs)))
    else:
        vals = [_sweep_point(cfg, k, m) for k, m in jobs]
    res = dict(zip(jobs, vals))
    rows = []
    for k in sorted(set(cfg.kappas)):
        ps, pu = res[k, SlicingMode.SLICED], res[k, SlicingMode.UNSLICED]
        rows.append(SweepRow(k, cfg.eps1, cfg.eps2, cfg.eps3, ps, pu, improvement_ratio(pu, ps)))
    return rows


def run_multiround(cfg: ExperimentConfig, threads: int = 1) -> dict:
    """One trajectory run per requested mode, at the largest kappa of the config."""
    code = get_code(cfg.code)
    kappa = cfg.kappas[-1]

    def family(mode, frame):
        return cfg.build(mode, frame)

    out = {}
    for mode in cfg.modes:
        tc = TrajectoryConfig(mode, cfg.rounds, cfg.shots, cfg.seed, cfg.chunk, cfg.terminal_only, cfg.readout, threads)
        out[mode] = trajectory_sample(tc, family, cfg.params(kappa), code, cfg.dephasing)
    return out


# --- fits --------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    coefficients: tuple[float, ...]  # ascending powers
    rms: float

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coefficients)


def polyfit(points: Sequence[tuple[float, float]], degree: int) -> FitResult:
    """Least-squares polynomial of degree 1 or 2 with its RMS residual."""
    if degree not in (1, 2):
        raise ValueError("degree must be 1 or 2")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < degree + 1:
        raise ValueError(f"need at least {degree + 1} points for a degree-{degree} fit")
    x, y = pts[:, 0], pts[:, 1]
    if len(np.unique(x)) < degree + 1:
        raise ValueError("degenerate abscissae")
    coef = np.polynomial.polynomial.polyfit(x, y, degree)
    resid = y - np.polynomial.polynomial.polyval(x, coef)
    return FitResult(tuple(float(c) for c in coef), float(np.sqrt(np.mean(resid**2))))


# --- CSV ---------------------------------------------------------------------------

def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([repr(float(v)) for v in r.as_tuple()])
    return buf.getvalue()


def emit_csv(rows: Sequence[SweepRow], path: str | os.PathLike) -> None:
    if not rows:
        raise ValueError("no rows to write")
    Path(path).write_text(rows_to_csv(rows))


def parse_csv(text: str) -> list[SweepRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header!r}")
    return [SweepRow(*(float(v) for v in rec)) for rec in reader if rec]


def read_csv(path: str | os.PathLike) -> list[SweepRow]:
    return parse_csv(Path(path).read_text())


def emit_multiround_csv(results: dict, path: str | os.PathLike) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("mode", "round", "p", "stderr"))
    for mode, res in results.items():
        for r, p, se in zip(res.rounds, res.p_round, res.stderr):
            w.writerow((mode.value, int(r), repr(float(p)), repr(float(se))))
    Path(path).write_text(buf.getvalue())


# --- SVG ---------------------------------------------------------------------------

_W, _H, _PAD = 640, 420, 60
_COLORS = {"p_sliced": "#1f77b4", "p_unsliced": "#d62728"}
_LABELS = {"p_sliced": "sliced", "p_unsliced": "unsliced"}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def emit_svg(rows: Sequence[SweepRow], path: str | os.PathLike, fits: dict[str, FitResult] | None = None) -> None:
    """Both series against kappa; log y unless a series touches zero."""
    if not rows:
        raise ValueError("no rows to plot")
    Path(path).write_text(render_svg(rows, fits))


def render_svg(rows: Sequence[SweepRow], fits: dict[str, FitResult] | None = None) -> str:
    xs = [r.kappa for r in rows]
    ys = [v for r in rows for v in (r.p_sliced, r.p_unsliced)]
    log_y = all(v > 0 for v in ys)
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if log_y:
        lo, hi = math.floor(math.log10(min(ys))), math.ceil(math.log10(max(ys)))
        if hi == lo:
            hi += 1
        ty = lambda v: math.log10(v)
    else:
        lo, hi = 0.0, max(ys) * 1.05 or 1.0
        ty = lambda v: v

    def px(x):
        return _PAD + (x - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def py(y):
        return _H - _PAD - (ty(y) - lo) / (hi - lo) * (_H - 2 * _PAD)

    out = [
        (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}" '
            f'data-yscale="{"log" if log_y else "linear"}">'
        ),
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<text x="{_W / 2}" y="{_H - 15}" text-anchor="middle" font-size="14">kappa</text>',
        (
            f'<text x="15" y="{_H / 2}" text-anchor="middle" font-size="14" '
            f'transform="rotate(-90 15 {_H / 2})">logical error</text>'
        ),
    ]
    ticks = range(lo, hi + 1) if log_y else np.linspace(lo, hi, 5)
    for t in ticks:
        v = 10.0**t if log_y else t
        y = py(v) if log_y or v > 0 else _H - _PAD
        label = f"1e{t}" if log_y else f"{v:.2g}"
        out.append(f'<text x="{_PAD - 6}" y="{_fmt(y + 4)}" text-anchor="end" font-size="11">{escape(label)}</text>')
    for t in np.linspace(x0, x1, 6):
        out.append(f'<text x="{_fmt(px(t))}" y="{_H - _PAD + 16}" text-anchor="middle" font-size="11">{t:.2f}</text>')
    for key in ("p_sliced", "p_unsliced"):
        pts = " ".join(f"{_fmt(px(r.kappa))},{_fmt(py(getattr(r, key)))}" for r in rows)
        data = " ".join(f"{r.kappa!r}:{getattr(r, key)!r}" for r in rows)
        out.append(
            f'<polyline class="series" data-series="{key}" data-points="{data}" points="{pts}" '
            f'fill="none" stroke="{_COLORS[key]}" stroke-width="2"/>'
        )
        fit = (fits or {}).get(key)
        if fit is not None:
            grid = np.linspace(x0, x1, 50)
            vals = fit(grid)
            keep = [(x, v) for x, v in zip(grid, vals) if v > 0 or not log_y]
            if keep:
                fpts = " ".join(f"{_fmt(px(x))},{_fmt(py(max(v, 0.0)))}" for x, v in keep)
                out.append(
                    f'<polyline class="fit" data-series="{key}" points="{fpts}" fill="none" '
                    f'stroke="{_COLORS[key]}" stroke-dasharray="5,4"/>'
                )
    for i, key in enumerate(("p_sliced", "p_unsliced")):
        y = _PAD + 10 + 18 * i
        out.append(f'<line x1="{_W - 170}" y1="{y}" x2="{_W - 140}" y2="{y}" stroke="{_COLORS[key]}" stroke-width="2"/>')
        out.append(f'<text x="{_W - 134}" y="{y + 4}" font-size="12">{_LABELS[key]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def fit_rows(rows: Sequence[SweepRow], degree: int = 2) -> dict[str, FitResult]:
    return {key: polyfit([(r.kappa, getattr(r, key)) for r in rows], degree) for key in ("p_sliced", "p_unsliced")}


# --- compile -----------------------------------------------------------------------

def compile_command(cfg: ExperimentConfig) -> tuple[str, str]:
    """The exact circuit a sweep would simulate, plus the decoder table."""
    circ = cfg.build(cfg.mode, GaugeFrame.trivial(get_code(cfg.code)) if cfg.mode is SlicingMode.ADAPTIVE else None)
    header = [f"code {cfg.code}", f"gate_set {cfg.gate_set}", f"mode {cfg.mode.value}"]
    if cfg.gate_set == "iontrap2body":
        header.append(f"baseline {cfg.baseline} peephole {cfg.peephole} sk1 {cfg.sk1}")
    return to_text(circ, header), build_lookup_decoder(get_code(cfg.code)).dump()
