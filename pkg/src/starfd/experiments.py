"""Seeded Monte-Carlo sweeps over one system parameter.

Realization ``r`` of a sweep uses seed ``base_seed + r`` for both the
channel draw and the initialization restarts, so every scheme and every
sweep value sees the same channels unless the swept parameter changes how
they are generated (only the element count does; the RSI level rescales
one fixed Gaussian draw).
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import draw_channel_set
from .params import SimulationParams
from .schemes import SCHEMES, SchemeResult, run_scheme

__all__ = [
    "SWEEPS",
    "CSV_COLUMNS",
    "PRESETS",
    "ExperimentConfig",
    "SweepRow",
    "run_realization",
    "monte_carlo_ee",
    "summarize",
    "run_sweep",
    "rows_to_csv",
]

# sweep key -> parameter field it sets
SWEEPS = {
    "elements": "num_elements",
    "rsi": "sigma_si_db",
    "pumax": "p_u_max_dbm",
    "ps": "p_s_dbm",
}

CSV_COLUMNS = [
    "sweep_key", "sweep_value", "scheme", "mean_ee", "std_ee", "feasible_count",
    "realizations", "mean_ao_iters", "mean_dinkelbach_iters",
    "mean_outer_penalty_iters", "mean_inner_sca_iters",
]

PRESETS = {
    "fast": {
        "realizations": 20,
        "num_elements": 16,
        "values": {"elements": [8, 16, 24, 32], "rsi": [-110, -100, -90, -80],
                   "pumax": [5, 10, 15, 20], "ps": [0, 3, 6, 10]},
    },
    "paper": {
        "realizations": 100,
        "num_elements": 50,
        "values": {"elements": [10, 20, 30, 40, 50], "rsi": [-110, -100, -90, -80],
                   "pumax": [5, 10, 15, 20], "ps": [0, 3, 6, 10]},
    },
}


@dataclass
class ExperimentConfig:
    sweep: str = "elements"
    sweep_values: list = field(default_factory=lambda: [8, 16, 24, 32])
    schemes: list = field(default_factory=lambda: list(SCHEMES))
    realizations: int = 20
    base_seed: int = 0
    params: SimulationParams = field(default_factory=SimulationParams)
    jobs: int = 1

    def __post_init__(self):
        if self.sweep not in SWEEPS:
            raise ValueError(f"unknown sweep {self.sweep!r}; choose from {sorted(SWEEPS)}")
        if not self.sweep_values:
            raise ValueError("sweep_values must not be empty")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ValueError(f"unknown scheme(s) {bad}; choose from {SCHEMES}")

    def params_at(self, value) -> SimulationParams:
        key = SWEEPS[self.sweep]
        value = int(value) if key == "num_elements" else float(value)
        return self.params.with_(**{key: value})


@dataclass
class SweepRow:
    sweep_key: str
    sweep_value: float
    scheme: str
    mean_ee: float
    std_ee: float
    feasible_count: int
    realizations: int
    mean_ao_iters: float
    mean_dinkelbach_iters: float
    mean_outer_penalty_iters: float
    mean_inner_sca_iters: float

    def as_list(self):
        return [getattr(self, c) for c in CSV_COLUMNS]


def run_realization(scheme: str, params: SimulationParams, seed: int) -> SchemeResult:
    cs = draw_channel_set(params.geometry(), params.channel_params(), seed)
    return run_scheme(scheme, cs, params, seed)


def _task(args):
    scheme, params, seed = args
    return run_realization(scheme, params, seed)


def summarize(results):
    """``(mean, std, feasible_count, mean counters)`` over feasible runs."""
    ok = [r for r in results if r.feasible]
    if not ok:
        return math.nan, math.nan, 0, {k: math.nan for k in ("ao", "dinkelbach", "outer_penalty", "inner_sca")}
    ee = np.array([r.ee for r in ok])
    counters = {k: float(np.mean([r.iteration_counts[k] for r in ok]))
                for k in ("ao", "dinkelbach", "outer_penalty", "inner_sca")}
    return float(np.mean(ee)), float(np.std(ee)), len(ok), counters


def monte_carlo_ee(scheme, params, realizations, base_seed=0):
    """Mean and std of EE over the feasible realizations, and their count."""
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    res = [run_realization(scheme, params, base_seed + r) for r in range(realizations)]
    mean, std, n, _ = summarize(res)
    return mean, std, n


def _record(value, scheme, seed, r: SchemeResult):
    return {
        "sweep_value": value, "scheme": scheme, "seed": seed, "feasible": r.feasible,
        "ee": r.ee if r.feasible else None, "r_u": r.r_u if r.feasible else None,
        "r_d": r.r_d if r.feasible else None,
        "p_u": r.allocation.p_u if r.allocation else None,
        "p_d": r.allocation.p_d if r.allocation else None,
        "ao_trace": r.ao_trace, "iteration_counts": r.iteration_counts,
        "statuses": [list(s) if isinstance(s, tuple) else s for s in r.statuses],
    }


def run_sweep(config: ExperimentConfig, diagnostics=None):
    """Run every (value, scheme, realization) and return the sorted rows.

    ``diagnostics`` is an optional text stream that receives one JSON
    record per run.
    """
    tasks = []
    for value in config.sweep_values:
        p = config.params_at(value)
        for scheme in config.schemes:
            for r in range(config.realizations):
                tasks.append((value, scheme, p, config.base_seed + r))
    work = [(s, p, seed) for _, s, p, seed in tasks]
    if config.jobs > 1:
        with ProcessPoolExecutor(config.jobs) as ex:
            results = list(ex.map(_task, work, chunksize=4))
    else:
        results = [_task(w) for w in work]

    grouped = {}
    for (value, scheme, _, seed), res in zip(tasks, results):
        grouped.setdefault((value, scheme), []).append(res)
        if diagnostics is not None:
            diagnostics.write(json.dumps(_record(value, scheme, seed, res)) + "\n")

    rows = []
    for (value, scheme), res in grouped.items():
        mean, std, n, cnt = summarize(res)
        rows.append(SweepRow(config.sweep, float(value), scheme, mean, std, n, len(res),
                             cnt["ao"], cnt["dinkelbach"], cnt["outer_penalty"], cnt["inner_sca"]))
    rows.sort(key=lambda r: (r.sweep_value, SCHEMES.index(r.scheme)))
    return rows


def _fmt(x):
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def rows_to_csv(rows, path=None) -> str:
    """Serialize rows with a fixed column order; write to ``path`` if given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in r.as_list()])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
