"""Command line entry point.

Examples
--------
Fast element sweep for two schemes::

    starfd sweep --sweep elements --schemes SR-FD-EEM CR-FD-EEM --out m.csv

One realization with every per-iteration record::

    starfd single --scheme SR-FD-EEM --seed 3 --elements 16
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import yaml

from .experiments import PRESETS, SWEEPS, ExperimentConfig, rows_to_csv, run_realization, run_sweep
from .params import SimulationParams
from .schemes import SCHEMES

log = logging.getLogger("starfd")


def _parse_set(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k] = yaml.safe_load(v)
    return out


def _load_config(path):
    if not path:
        return {}
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise SystemExit("config file must hold a mapping")
    return data


def build_config(args) -> ExperimentConfig:
    """Merge preset, config file and flags (later wins)."""
    file_cfg = _load_config(args.config)
    preset = PRESETS[args.preset or file_cfg.get("preset", "fast")]
    sweep = args.sweep or file_cfg.get("sweep", "elements")
    if sweep not in SWEEPS:
        raise SystemExit(f"unknown sweep {sweep!r}; choose from {sorted(SWEEPS)}")
    params = {"num_elements": preset["num_elements"]}
    params.update(file_cfg.get("params", {}))
    params.update(_parse_set(args.set))
    values = args.values or file_cfg.get("values") or preset["values"][sweep]
    return ExperimentConfig(
        sweep=sweep,
        sweep_values=list(values),
        schemes=list(args.schemes or file_cfg.get("schemes", SCHEMES)),
        realizations=int(args.realizations or file_cfg.get("realizations", preset["realizations"])),
        base_seed=int(args.seed if args.seed is not None else file_cfg.get("seed", 0)),
        params=SimulationParams.from_dict(params),
        jobs=int(args.jobs or file_cfg.get("jobs", 1)),
    )


def cmd_sweep(args):
    cfg = build_config(args)
    log.info("sweep %s over %s, %d realizations, schemes %s",
             cfg.sweep, cfg.sweep_values, cfg.realizations, cfg.schemes)
    diag = open(args.diagnostics, "w") if args.diagnostics else None
    try:
        rows = run_sweep(cfg, diagnostics=diag)
    finally:
        if diag:
            diag.close()
    text = rows_to_csv(rows, args.out)
    if not args.out:
        sys.stdout.write(text)
    return 0


def cmd_single(args):
    file_cfg = _load_config(args.config)
    preset = PRESETS[args.preset or file_cfg.get("preset", "fast")]
    params = {"num_elements": preset["num_elements"]}
    params.update(file_cfg.get("params", {}))
    params.update(_parse_set(args.set))
    if args.elements is not None:
        params["num_elements"] = args.elements
    p = SimulationParams.from_dict(params)
    res = run_realization(args.scheme, p, args.seed)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        summary = {
            "record": "summary", "scheme": args.scheme, "seed": args.seed, "feasible": res.feasible,
            "ee": res.ee, "r_u": res.r_u, "r_d": res.r_d,
            "p_u": res.allocation.p_u if res.allocation else None,
            "p_d": res.allocation.p_d if res.allocation else None,
            "ao_trace": res.ao_trace, "iteration_counts": res.iteration_counts,
            "violations": res.report.violations if res.report else None,
        }
        out.write(json.dumps(summary) + "\n")
        for d in res.diagnostics:
            for rec in d["power"]:
                out.write(json.dumps({"record": "dinkelbach", "ao": d["ao"], **rec}) + "\n")
            for rec in d["beamforming"]:
                out.write(json.dumps({"record": "penalty", "ao": d["ao"], **rec}) + "\n")
            out.write(json.dumps({"record": "ao", "ao": d["ao"], "ee": d["ee"]}) + "\n")
        if res.profile is not None:
            out.write(json.dumps({
                "record": "profile",
                "beta_t": res.profile.beta_t.tolist(),
                "phi_t": res.profile.phi_t.tolist(),
                "phi_r": res.profile.phi_r.tolist(),
            }) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def make_parser():
    ap = argparse.ArgumentParser(prog="starfd", description="EE maximization for a STAR-RIS aided full-duplex link")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML/JSON file mirroring the experiment config")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a simulation parameter, e.g. --set p_s_dbm=3")

    sw = sub.add_parser("sweep", help="Monte-Carlo sweep over one parameter, written as CSV")
    common(sw)
    sw.add_argument("--sweep", choices=sorted(SWEEPS))
    sw.add_argument("--values", nargs="+", type=float)
    sw.add_argument("--schemes", nargs="+", choices=SCHEMES)
    sw.add_argument("--realizations", type=int)
    sw.add_argument("--seed", type=int)
    sw.add_argument("--jobs", type=int)
    sw.add_argument("--out", help="CSV path (stdout if omitted)")
    sw.add_argument("--diagnostics", help="JSON-lines file with one record per run")
    sw.set_defaults(func=cmd_sweep)

    si = sub.add_parser("single", help="one realization with full diagnostics as JSON lines")
    common(si)
    si.add_argument("--scheme", choices=SCHEMES, default="SR-FD-EEM")
    si.add_argument("--seed", type=int, default=0)
    si.add_argument("--elements", type=int)
    si.add_argument("--out", help="output path (stdout if omitted)")
    si.set_defaults(func=cmd_single)
    return ap


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
