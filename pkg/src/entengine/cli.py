"""Command-line front end.

Subcommands::

    feasibility TARGET.json        energy-conservation verdict and witness
    steady      --config C.json    steady state, heralded state, p_suc, fidelity
    pareto      FAMILY [N [L]]     fidelity / success-probability front (CSV)
    tempsweep   --config C.json    fidelity on a (T_h, T_c) grid (CSV)
    bell        FAMILY [N]         Bell values along the front (CSV)
    maxpsuc     N                  analytic maximal GHZ heralding probability

Exit codes: 0 success, 1 input error, 2 infeasible target, 3 capacity,
4 solver degeneracy.  CSV outputs are deterministic; run metadata (with a
timestamp) goes to a separate ``*.meta.json`` file next to each output.
"""

from __future__ import annotations

import argparse
import copy
import datetime as _dt
import io
import json
import logging
import math
import platform
import sys
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import bell, builder, dynamics, filtering, optimizer, qcore

log = logging.getLogger("entengine")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_CAPACITY, EXIT_DEGENERATE = 0, 1, 2, 3, 4

DEFAULT_CONFIG = {
    "machine": {"family": "ghz", "N": 3, "l": None, "delta": [1.0, 2.5]},
    "model": "reset",
    "couplings": {"g": 1.6e-3, "gamma_h": 1e-4, "gamma_c": 5e-3},
    "temperatures": {"T_h": "inf", "T_c": 0.0},
    "jumps": None,
    "sweep": {
        "resolution": optimizer.DEFAULT_RESOLUTION,
        "refine": True,
        "T_h": [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
        "T_c": [0.0, 0.05, 0.1, 0.2, 0.3, 0.5],
    },
    "tolerances": {"residual": dynamics.RESIDUAL_TOL, "degeneracy": dynamics.DEGENERACY_TOL},
}

CONFIG_SCHEMA_DOC = """\
machine.family   ghz | dicke | cluster | bell
machine.N        number of qutrits (2..5; cluster is always 4, bell always 2)
machine.l        excitations of the Dicke target (dicke only)
machine.delta    (Delta1, Delta2): hot gaps for ghz, cold gaps for dicke/cluster
model            reset | lindblad
couplings        g, gamma_h, gamma_c (positive; g may be 0)
temperatures     T_h, T_c: >= 0 numbers, "inf" for infinite
jumps            null (default transitions (0,1),(0,2) per qutrit) or a list of pair lists per qutrit
sweep            resolution, refine, T_h grid, T_c grid
tolerances       residual, degeneracy (steady-state solver)
"""


class InputError(ValueError):
    pass


# --------------------------------------------------------------------------- config


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if key not in out:
            raise InputError(f"unknown config key {key!r}")
        if isinstance(out[key], dict) and isinstance(value, dict):
            for sub in value:
                if sub not in out[key]:
                    raise InputError(f"unknown config key {key}.{sub}")
            out[key].update(value)
        else:
            out[key] = value
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError("config must be a JSON object")
    return _merge(DEFAULT_CONFIG, doc)


def parse_temperature(x) -> float:
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinite", "infinity"):
            return math.inf
        try:
            x = float(x)
        except ValueError as exc:
            raise InputError(f"bad temperature {x!r}") from exc
    t = float(x)
    if t < 0 or math.isnan(t):
        raise InputError(f"temperature must be >= 0, got {x!r}")
    return t


def _positive(name: str, x, allow_zero: bool = False) -> float:
    try:
        v = float(x)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} must be a number") from exc
    if not math.isfinite(v) or v < 0 or (v == 0 and not allow_zero):
        raise InputError(f"{name} must be {'>= 0' if allow_zero else '> 0'}, got {x!r}")
    return v


def machine_from_config(cfg: dict) -> builder.MachineSpec:
    m = cfg["machine"]
    cpl = cfg["couplings"]
    kw = dict(g=_positive("g", cpl["g"], allow_zero=True),
              gamma_h=_positive("gamma_h", cpl["gamma_h"]),
              gamma_c=_positive("gamma_c", cpl["gamma_c"]),
              t_hot=parse_temperature(cfg["temperatures"]["T_h"]),
              t_cold=parse_temperature(cfg["temperatures"]["T_c"]))
    family = str(m.get("family", "")).lower()
    delta = tuple(float(x) for x in m.get("delta") or (1.0, 2.5))
    if len(delta) != 2:
        raise InputError("machine.delta needs two gaps")
    if family == "ghz":
        return builder.ghz_machine(int(m["N"]), delta, **kw)
    if family == "dicke":
        if m.get("l") is None:
            raise InputError("dicke machine needs machine.l")
        return builder.dicke_machine(int(m["N"]), int(m["l"]), delta, **kw)
    if family == "cluster":
        return builder.cluster_machine(delta, **kw)
    if family == "bell":
        return builder.bell_machine(**kw)
    raise InputError(f"unknown machine family {family!r}")


def family_from_config(cfg: dict) -> optimizer.MachineFamily:
    m = cfg["machine"]
    kind = str(m.get("family", "")).lower()
    if kind == "cluster":
        return optimizer.MachineFamily("cluster")
    if kind == "ghz":
        return optimizer.MachineFamily("ghz", int(m["N"]))
    if kind == "dicke":
        return optimizer.MachineFamily("dicke", int(m["N"]), m.get("l"))
    raise InputError(f"sweeps support ghz, dicke and cluster machines, not {kind!r}")


def jumps_from_config(cfg: dict) -> dynamics.JumpConfig | None:
    if cfg.get("jumps") is None:
        return None
    try:
        return dynamics.JumpConfig(tuple(tuple(tuple(p) for p in site) for site in cfg["jumps"]))
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad jumps entry: {exc}") from exc


def _tolerances(cfg: dict) -> dict:
    tol = cfg["tolerances"]
    return {"residual_tol": _positive("tolerances.residual", tol["residual"]),
            "degeneracy_tol": _positive("tolerances.degeneracy", tol["degeneracy"])}


# --------------------------------------------------------------------------- output


def _versions() -> dict:
    try:
        own = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"entengine": own, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def metadata_block(cfg: dict, command: str, extra: dict | None = None) -> dict:
    jumps = jumps_from_config(cfg)
    return {
        "command": command,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "model": cfg["model"],
        "jump_config": (jumps.to_dict() if jumps else
                        {"transitions": "default: (0,1),(0,2) per qutrit", "rates": "bath rates"}),
        "tolerances": cfg["tolerances"],
        "config": cfg,
        "versions": _versions(),
        **(extra or {}),
    }


def _json_default(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    raise TypeError(f"not serializable: {type(x)}")


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, default=_json_default, allow_nan=True)


def emit(out_dir: str | None, name: str, text: str, meta: dict | None) -> None:
    """Write ``text`` to ``out_dir/name`` (plus metadata) or to stdout."""
    if out_dir is None:
        sys.stdout.write(text)
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text, encoding="utf-8")
    if meta is not None:
        (path / (Path(name).stem + ".meta.json")).write_text(_dump(meta) + "\n", encoding="utf-8")
    print(f"wrote {path / name}", file=sys.stderr)


# --------------------------------------------------------------------------- commands


def cmd_feasibility(args) -> int:
    try:
        target = builder.load_target(args.target)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise InputError(f"malformed target file: {exc}") from exc
    witness = builder.feasibility_single_hot(target)
    report = {"target": target.to_dict(), "feasible": witness is not None}
    if witness is not None:
        report.update(hot=witness.hot, r=list(witness.r),
                      energies={"delta1": list(witness.energies.delta1),
                                "delta2": list(witness.energies.delta2)})
    print(_dump(report))
    return EXIT_OK if witness is not None else EXIT_INFEASIBLE


def cmd_steady(args, cfg) -> int:
    spec = machine_from_config(cfg)
    liou = dynamics.build_liouvillian(spec, cfg["model"], jumps_from_config(cfg))
    rho = dynamics.steady_state(liou, **_tolerances(cfg))
    out = filtering.apply_filter(rho, spec.r)
    fid = filtering.fidelity(out.heralded, spec.target)
    summary = {"machine": spec.name, "N": spec.n, "model": cfg["model"], "p_suc": out.p_suc,
               "fidelity": fid, "gme_witness": filtering.genuinely_entangled(fid),
               "residual": dynamics.residual(liou, rho)}
    print(f"p_suc={out.p_suc:.12g} fidelity={fid:.12g}")
    if args.out:
        meta = metadata_block(cfg, "steady")
        emit(args.out, "summary.json", _dump(summary) + "\n", meta)
        emit(args.out, "steady_state.json", _dump(dynamics.state_to_dict(rho)) + "\n", None)
        emit(args.out, "heralded.json", _dump(out.to_dict(spec.target)) + "\n", None)
    return EXIT_OK


def _family_from_args(args, cfg) -> optimizer.MachineFamily:
    if args.family:
        words = [args.family] + [str(x) for x in args.params]
        try:
            return optimizer.MachineFamily.parse(":".join(words))
        except builder.CapacityError:
            raise
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    return family_from_config(cfg)


def cmd_pareto(args, cfg) -> int:
    family = _family_from_args(args, cfg)
    sweep = cfg["sweep"]
    front = optimizer.pareto_front(family, int(sweep["resolution"]), threads=args.threads,
                                   refine=bool(sweep["refine"]))
    buf = io.StringIO()
    optimizer.write_front_csv(front.points, family, buf)
    emit(args.out, f"pareto_{family.label}.csv", buf.getvalue(),
         metadata_block(cfg, "pareto", {"family": family.label, "evaluations": front.evaluations}))
    return EXIT_OK


def cmd_tempsweep(args, cfg) -> int:
    spec = machine_from_config(cfg)
    th = [parse_temperature(x) for x in cfg["sweep"]["T_h"]]
    tc = [parse_temperature(x) for x in cfg["sweep"]["T_c"]]
    _, points = optimizer.temperature_sweep(spec, cfg["model"], th, tc, threads=args.threads,
                                            jumps=jumps_from_config(cfg))
    buf = io.StringIO()
    optimizer.write_temperature_csv(points, spec, cfg["model"], buf)
    emit(args.out, f"tempsweep_{spec.name}_{cfg['model']}.csv", buf.getvalue(),
         metadata_block(cfg, "tempsweep"))
    return EXIT_OK


def cmd_bell(args, cfg) -> int:
    family = _family_from_args(args, cfg)
    sweep = cfg["sweep"]
    try:
        points = optimizer.bell_sweep(family, int(sweep["resolution"]), threads=args.threads,
                                      refine=bool(sweep["refine"]))
    except builder.CapacityError:
        raise
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    rows = [bell.bell_rows(family.label, p.p_suc, p.fidelity, family.bell_name, p.bell_value)
            for p in points]
    buf = io.StringIO()
    bell.write_bell_csv(rows, buf)
    emit(args.out, f"bell_{family.label}.csv", buf.getvalue(),
         metadata_block(cfg, "bell", {"family": family.label}))
    return EXIT_OK


def cmd_maxpsuc(args) -> int:
    try:
        value = filtering.max_psuc_ghz(args.n)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    print(f"{value:.12g}")
    return EXIT_OK


# --------------------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (see --print-config)")
    common.add_argument("--out", help="output directory (default: stdout)")
    common.add_argument("--model", choices=("reset", "lindblad"), help="override the dissipator model")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="entengine", description=__doc__.split("\n")[0],
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--print-config", action="store_true", help="print the default configuration and exit")
    sub = p.add_subparsers(dest="command")

    f = sub.add_parser("feasibility", parents=[common], help="check whether a target can be generated")
    f.add_argument("target", help="target-state JSON file")
    sub.add_parser("steady", parents=[common], help="solve one machine")
    for name, helptext in (("pareto", "fidelity vs success-probability front"),
                           ("bell", "Bell values along the front")):
        q = sub.add_parser(name, parents=[common], help=helptext)
        q.add_argument("family", nargs="?", help="ghz | dicke | cluster (default: from config)")
        q.add_argument("params", nargs="*", type=int, help="N (and l for dicke)")
    sub.add_parser("tempsweep", parents=[common], help="fidelity over a temperature grid")
    m = sub.add_parser("maxpsuc", parents=[common], help="analytic maximal GHZ success probability")
    m.add_argument("n", type=int)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_config:
        print(_dump(DEFAULT_CONFIG))
        print(CONFIG_SCHEMA_DOC, file=sys.stderr)
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "feasibility":
            return cmd_feasibility(args)
        if args.command == "maxpsuc":
            return cmd_maxpsuc(args)
        if args.threads < 1:
            raise InputError("--threads must be >= 1")
        cfg = load_config(args.config)
        if args.model:
            cfg["model"] = args.model
        if cfg["model"] not in ("reset", "lindblad"):
            raise InputError(f"unknown model {cfg['model']!r}")
        handler = {"steady": cmd_steady, "pareto": cmd_pareto,
                   "tempsweep": cmd_tempsweep, "bell": cmd_bell}[args.command]
        return handler(args, cfg)
    except builder.CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except builder.InfeasibleTargetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (dynamics.DegenerateSteadyStateError, filtering.HeraldNeverFiresError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputError, qcore.InvalidStateError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
