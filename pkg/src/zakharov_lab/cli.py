"""Command-line entry point: ``zakharov-lab {simulate,conserve,highlow-scan,estimates}``.

Every run reads one TOML config (see ``docs/config_schema.md``), writes a
``manifest.json`` before any output and finalizes it afterwards. Output CSV rows
carry a ``run_id`` derived from the config and seed, so identical configs give
identical files.

Exit codes: 0 success, 2 usage/config error, 3 blow-up, 4 envelope violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import tomli

from . import __version__
from .diagnostics import (
    ReportWriter,
    build_imultiplier,
    energy_report,
    fl_norm,
    hamiltonian,
    mass,
    sobolev_norm,
)
from .dynamics import BlowUpError, IntegratorConfig, evolve
from .estimates import (
    COUNT_ENVELOPE,
    SHELLS,
    bilinear_ratios,
    count_sweep,
    loglog_slope,
    resonance_fuzz,
    resonance_sweep,
)
from .highlow import (
    ConfigError,
    HighLowConfig,
    InsufficientSignalError,
    fit_loglog,
    growth_exponent,
    iterate_highlow,
    smoothing_scan,
)
from .spectral import GridSpec
from .state import DataError, DataRecipe, save_state

log = logging.getLogger("zakharov_lab")

OUT_ENV = "ZAKHAROV_LAB_OUT"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BLOWUP = 3
EXIT_ENVELOPE = 4

REQUIRED = object()

# section -> key -> (type, default); REQUIRED marks mandatory keys
SCHEMA: dict[str, dict[str, tuple[Any, Any]]] = {
    "": {"experiment": (str, None), "seed": (int, 0), "out": (str, "out")},
    "grid": {"M": (int, REQUIRED)},
    "integrator": {
        "dt": (float, REQUIRED),
        "T": (float, REQUIRED),
        "scheme": (str, "strang3"),
        "record_every": (int, 1),
    },
    "data": {
        "kind": (str, "smooth"),
        "s": (float, 0.6),
        "beta": (float, 0.45),
        "C1": (float, 1.0),
        "r": (float, -0.1),
        "epsilon": (float, 0.05),
        "kmin": (int, 1),
        "u_amplitude": (float, 0.5),
        "u_kmax": (int, 8),
        "plane_k": (int, 1),
        "coupled": (bool, True),
    },
    "diagnostics": {"s": (float, 0.6), "beta": (float, 0.45), "N_I": (int, 16)},
    "conserve": {"dt_list": (list, [4e-3, 2e-3, 1e-3]), "T": (float, 1.0), "mass_tol": (float, 1e-8)},
    "scan": {
        "s": (float, 0.6),
        "beta": (float, 0.45),
        "alpha": (float, None),
        "gamma": (float, None),
        "N_HL_list": (list, [16, 32, 64, 128]),
        "T": (float, None),
        "dt": (float, 1e-4),
        "M": (int, 512),
        "seed_list": (list, [0]),
        "epsilon0": (float, 0.05),
        "K": (float, None),
        "C1": (float, None),
        "strict": (bool, True),
        "growth_N_HL": (int, 16),
        "growth_T_list": (list, []),
    },
    "estimates": {
        "kmax": (int, 1000),
        "fuzz_count": (int, 1_000_000),
        "N_list": (list, [1, 2, 4, 8, 16, 32, 64]),
        "L_list": (list, [1, 2, 4, 8, 16, 32, 64]),
        "sign_pairs": (list, [[1, 1], [1, -1], [-1, 1], [-1, -1]]),
        "trials": (int, 1000),
        "shell_convention": (str, "dyadic"),
    },
}

# sections each command requires to be present
COMMAND_SECTIONS = {
    "simulate": ("grid", "integrator"),
    "conserve": ("grid",),
    "highlow-scan": (),
    "estimates": (),
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


def _coerce(value, typ, where: str):
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if (typ is int and isinstance(value, bool)) or not isinstance(value, typ):
        raise UsageError(f"{where}: expected {typ.__name__}, got {type(value).__name__}")
    return value


def validate_config(raw: dict, command: str) -> dict:
    """Check ``raw`` against SCHEMA, fill defaults and return a nested plain dict.

    Unknown sections/keys and missing required keys raise UsageError naming the key.
    """
    cfg: dict[str, Any] = {}
    top = {k: v for k, v in raw.items() if not isinstance(v, dict)}
    sections = {k: v for k, v in raw.items() if isinstance(v, dict)}
    for key in top:
        if key not in SCHEMA[""]:
            raise UsageError(f"unknown key {key!r}")
    for name in sections:
        if name not in SCHEMA or name == "":
            raise UsageError(f"unknown section [{name}]")
    if top.get("experiment") not in (None, command):
        raise UsageError(f"config is for {top['experiment']!r}, not {command!r}")
    for name in COMMAND_SECTIONS[command]:
        if name not in sections:
            raise UsageError(f"missing required section [{name}]")
    for name, keys in SCHEMA.items():
        given = top if name == "" else sections.get(name, {})
        out = {}
        for key in given:
            if key not in keys:
                raise UsageError(f"unknown key {key!r} in [{name}]")
        for key, (typ, default) in keys.items():
            where = key if name == "" else f"{name}.{key}"
            nullable = default is None or (default is REQUIRED and name not in COMMAND_SECTIONS[command])
            if key in given and given[key] is None and nullable:
                # manifests record unset optional keys as null
                out[key] = None
            elif key in given:
                out[key] = _coerce(given[key], typ, where)
            elif default is REQUIRED:
                if name in sections or name == "":
                    raise UsageError(f"missing required key {where!r}")
                out[key] = None
            else:
                out[key] = default
        if name == "":
            cfg.update(out)
        else:
            cfg[name] = out
    return cfg


def load_config(path, command: str) -> dict:
    """Read a TOML config, or the ``config`` record of a previous run's manifest.json."""
    try:
        with open(path, "rb") as fh:
            if str(path).endswith(".json"):
                manifest = json.load(fh)
                if manifest.get("experiment") != command:
                    raise UsageError(f"manifest is for {manifest.get('experiment')!r}, not {command!r}")
                raw = manifest["config"]
            else:
                raw = tomli.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    except (tomli.TOMLDecodeError, json.JSONDecodeError, KeyError) as exc:
        raise UsageError(f"invalid config: {exc}") from exc
    return validate_config(raw, command)


def run_id_for(cfg: dict, command: str) -> str:
    blob = json.dumps({"command": command, "config": cfg}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _recipe(cfg: dict, seed: int, **override) -> DataRecipe:
    params = dict(cfg["data"], seed=seed)
    params.update(override)
    return DataRecipe(**params)


# ---------------------------------------------------------------------------
# manifest and output helpers


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class RunManifest:
    """manifest.json: written at start (finished=None), finalized after outputs."""

    def __init__(self, out_dir: Path, experiment: str, cfg: dict, run_id: str):
        self.path = out_dir / "manifest.json"
        self.data = {
            "experiment": experiment,
            "run_id": run_id,
            "config": cfg,
            "seed": cfg["seed"],
            "code_version": __version__,
            "started": _now(),
            "finished": None,
            "status": "running",
            "outputs": [],
        }
        self._flush()

    def add_output(self, path: Path) -> Path:
        self.data["outputs"].append(path.name)
        return path

    def finalize(self, status: str) -> None:
        self.data["finished"] = _now()
        self.data["status"] = status
        self._flush()

    def _flush(self) -> None:
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n")


def _map(fn: Callable, items: list, workers: int) -> list:
    """Ordered map; a process pool when workers > 1 and there is more than one item."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(cfg: dict, out: Path, manifest: RunManifest, run_id: str, workers: int) -> int:
    grid = GridSpec(cfg["grid"]["M"])
    integ = cfg["integrator"]
    icfg = IntegratorConfig(integ["dt"], integ["scheme"], integ["record_every"])
    dg = cfg["diagnostics"]
    state0 = _recipe(cfg, cfg["seed"]).build(grid)
    I = build_imultiplier(dg["N_I"], dg["s"], grid)

    diag_path = manifest.add_output(out / "diagnostics.csv")
    final_path = manifest.add_output(out / "final_state.zks")
    summary_path = manifest.add_output(out / "summary.json")
    status, code, last = "ok", EXIT_OK, None
    with ReportWriter(diag_path, run_id) as writer:
        def observer(st):
            writer.write(energy_report(st, I, dg["s"], dg["beta"], state0))

        try:
            last = evolve(state0, integ["T"], icfg, observer=observer, record=False).final
        except BlowUpError as exc:
            log.error("%s", exc)
            status, code, last = "blow-up", EXIT_BLOWUP, exc.last_state
    save_state(last, final_path)
    write_json(summary_path, {
        "run_id": run_id,
        "status": status,
        "final_time": last.time,
        "mass": mass(last.u),
        "hamiltonian": hamiltonian(last),
    })
    manifest.finalize(status)
    return code


# ---------------------------------------------------------------------------
# conserve


def _drifts(state0, T: float, dt: float):
    m0 = mass(state0.u)
    e0 = hamiltonian(state0)
    dm = de = 0.0

    def observer(st):
        nonlocal dm, de
        dm = max(dm, abs(mass(st.u) - m0))
        de = max(de, abs(hamiltonian(st) - e0))

    evolve(state0, T, IntegratorConfig(dt), observer=observer, record=False)
    rel_m = dm / m0 if m0 > 0 else 0.0
    return rel_m, de


def _conserve_task(args):
    state0, T, dt = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return _drifts(state0, T, dt)


def cmd_conserve(cfg: dict, out: Path, manifest: RunManifest, run_id: str, workers: int) -> int:
    grid = GridSpec(cfg["grid"]["M"])
    cc = cfg["conserve"]
    dts = [float(x) for x in cc["dt_list"]]
    if not dts:
        raise UsageError("conserve.dt_list must not be empty")
    if any(not x > 0 for x in dts):
        raise UsageError("conserve.dt_list entries must be positive")
    state0 = _recipe(cfg, cfg["seed"]).build(grid)
    limit = 0.5 * (2 * np.pi / grid.num_modes) ** 2

    try:
        results = _map(_conserve_task, [(state0, cc["T"], dt) for dt in dts], workers)
    except BlowUpError as exc:
        log.error("%s", exc)
        manifest.finalize("blow-up")
        return EXIT_BLOWUP

    rows, orders = [], []
    for i, (dt, (dm, de)) in enumerate(zip(dts, results)):
        order = None
        if i > 0 and de > 0 and results[i - 1][1] > 0:
            order = math.log(results[i - 1][1] / de) / math.log(dts[i - 1] / dt)
            orders.append(order)
        flagged = dt > limit
        rows.append([run_id, dt, dm, de, "" if order is None else order, int(flagged)])
    write_csv(manifest.add_output(out / "conserve.csv"),
              ["run_id", "dt", "mass_drift_rel", "energy_drift", "order", "dt_flagged"], rows)
    mass_ok = all(dm <= cc["mass_tol"] for dm, _ in results)
    write_json(manifest.add_output(out / "summary.json"), {
        "run_id": run_id,
        "mass_ok": mass_ok,
        "max_mass_drift_rel": max(dm for dm, _ in results),
        "energy_orders": orders,
        "dt_flagged": [dt for dt in dts if dt > limit],
    })
    if not cfg.get("quiet"):
        print(f"{'dt':>10} {'mass drift':>12} {'energy drift':>13} {'order':>7}")
        for r in rows:
            order = f"{r[4]:7.3f}" if r[4] != "" else "      -"
            flag = "  (dt above 0.5(2pi/M)^2)" if r[5] else ""
            print(f"{r[1]:10.3g} {r[2]:12.3e} {r[3]:13.3e} {order}{flag}")
        print("mass: PASS" if mass_ok else "mass: FAIL")
    manifest.finalize("ok" if mass_ok else "envelope-violation")
    return EXIT_OK if mass_ok else EXIT_ENVELOPE


# ---------------------------------------------------------------------------
# highlow-scan


def _scan_template(cfg: dict, state0, N_HL: int) -> HighLowConfig:
    sc = cfg["scan"]
    K = sc["K"] if sc["K"] is not None else sobolev_norm(state0.u, sc["s"])
    C1 = sc["C1"] if sc["C1"] is not None else fl_norm(state0.n_plus, sc["beta"])
    return HighLowConfig.build(
        sc["s"], sc["beta"], N_HL, K=K, C1=C1, alpha=sc["alpha"], gamma=sc["gamma"],
        epsilon0=sc["epsilon0"], strict=sc["strict"],
    )


def _scan_data(cfg: dict, seed: int):
    sc = cfg["scan"]
    overrides = {"s": sc["s"], "beta": sc["beta"]}
    if sc["C1"] is not None:
        overrides["C1"] = sc["C1"]
    return _recipe(cfg, seed, **overrides).build(GridSpec(sc["M"]))


def _scan_cell(args):
    cfg, seed = args
    sc = cfg["scan"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        state0 = _scan_data(cfg, seed)
        template = _scan_template(cfg, state0, sc["N_HL_list"][0])
        res = smoothing_scan(
            state0.u, state0.n_plus, state0.n_minus, template, sc["N_HL_list"],
            IntegratorConfig(sc["dt"]), T=sc["T"], real=state0.real,
        )
    return seed, res


def _growth_cell(args):
    cfg, seed, T = args
    sc = cfg["scan"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        state0 = _scan_data(cfg, seed)
        hl = _scan_template(cfg, state0, sc["growth_N_HL"])
        ledger = iterate_highlow(state0.u, state0.n_plus, state0.n_minus, T, hl, IntegratorConfig(sc["dt"]), state0.real)
    return seed, T, hl, ledger


def cmd_highlow_scan(cfg: dict, out: Path, manifest: RunManifest, run_id: str, workers: int) -> int:
    sc = cfg["scan"]
    if len(sc["N_HL_list"]) < 4:
        raise UsageError("scan.N_HL_list needs at least four entries")
    if not sc["seed_list"]:
        raise UsageError("scan.seed_list must not be empty")
    try:
        cells = _map(_scan_cell, [(cfg, int(s)) for s in sc["seed_list"]], workers)
        growth = _map(_growth_cell, [(cfg, int(s), float(T)) for s in sc["seed_list"] for T in sc["growth_T_list"]], workers)
    except (ConfigError, DataError) as exc:
        raise UsageError(str(exc)) from exc
    except BlowUpError as exc:
        log.error("%s", exc)
        manifest.finalize("blow-up")
        return EXIT_BLOWUP

    rows = []
    for seed, res in cells:
        for N_HL, delta, value in zip(res.N_HL, res.deltas, res.values):
            rows.append([run_id, seed, N_HL, delta, value])
    write_csv(manifest.add_output(out / "scan.csv"), ["run_id", "seed", "N_HL", "delta", "remainder_norm"], rows)

    ledger_rows, growth_summary = [], []
    for seed, T, hl, ledger in growth:
        for e in ledger.entries:
            ledger_rows.append([run_id, seed, T, e.j, e.t_start, e.t_end, e.energy_start, e.energy_end,
                                e.energy_absorbed, e.v_norm, e.m_tilde_norm, e.nonlinear_part, e.audit_error])
        growth_summary.append({"seed": seed, "T": T, "max_nonlinear_part": ledger.max_nonlinear_part(),
                               "max_audit_error": ledger.max_audit_error(), "intervals": len(ledger.entries),
                               "complete": ledger.complete})
    write_csv(manifest.add_output(out / "growth_ledger.csv"),
              ["run_id", "seed", "T", "j", "t_start", "t_end", "energy_start", "energy_end", "energy_absorbed",
               "v_norm", "m_tilde_norm", "nonlinear_part", "audit_error"], ledger_rows)

    growth_slopes = {}
    for seed in sc["seed_list"]:
        pts = [(g["T"], g["max_nonlinear_part"]) for g in growth_summary if g["seed"] == seed]
        if len(pts) >= 2 and all(v > 0 for _, v in pts):
            growth_slopes[str(seed)] = fit_loglog(*zip(*pts))[0]
    bound = None
    if growth:
        hl = growth[0][2]
        bound = growth_exponent(hl.s, hl.beta, hl.alpha, hl.gamma)
    summary = {
        "run_id": run_id,
        "predicted_slope": sc["s"] - sc["beta"] - 0.5,
        "cells": [{"seed": seed, "slope": r.slope, "residual": r.residual} for seed, r in cells],
        "growth": growth_summary,
        "growth_slopes": growth_slopes,
        "growth_exponent": bound,
    }
    write_json(manifest.add_output(out / "summary.json"), summary)
    if not cfg.get("quiet"):
        for c in summary["cells"]:
            print(f"seed {c['seed']}: slope {c['slope']:+.3f} (predicted {summary['predicted_slope']:+.3f}), "
                  f"residual {c['residual']:.3f}")
        for seed, sl in growth_slopes.items():
            print(f"seed {seed}: growth slope {sl:+.3f} (exponent {bound:.3f})")
    manifest.finalize("ok")
    return EXIT_OK


# ---------------------------------------------------------------------------
# estimates


def _count_cell(args):
    N, L, signs, shell_name = args
    return count_sweep([N], [L], [tuple(signs)], SHELLS[shell_name])[0]


def _probe_cell(args):
    N, L, trials, seed = args
    return N, L, bilinear_ratios(N, L, trials, seed)


def cmd_estimates(cfg: dict, out: Path, manifest: RunManifest, run_id: str, workers: int) -> int:
    ec = cfg["estimates"]
    if not ec["N_list"] or not ec["L_list"] or not ec["sign_pairs"]:
        raise UsageError("estimates.N_list, L_list and sign_pairs must not be empty")
    if ec["shell_convention"] not in SHELLS:
        raise UsageError(f"estimates.shell_convention must be one of {sorted(SHELLS)}")
    for v in list(ec["N_list"]) + list(ec["L_list"]):
        if not (isinstance(v, int) and v >= 1 and v & (v - 1) == 0):
            raise UsageError(f"N_list/L_list entries must be dyadic integers, got {v!r}")
    seed = cfg["seed"]

    res_sweep = resonance_sweep(ec["kmax"]) if ec["kmax"] > 0 else 0
    res_fuzz = resonance_fuzz(ec["fuzz_count"], seed) if ec["fuzz_count"] > 0 else 0

    tasks = [(N, L, list(sg), ec["shell_convention"]) for N in ec["N_list"] for L in ec["L_list"] for sg in ec["sign_pairs"]]
    counts = _map(_count_cell, tasks, workers)
    write_csv(manifest.add_output(out / "sweep.csv"),
              ["run_id", "N", "L", "s1", "s2", "k", "tau", "count", "ratio"],
              [[run_id, c.N, c.L, c.signs[0], c.signs[1], c.argmax[0], c.argmax[1], c.max_count, c.ratio] for c in counts])
    worst = max(counts, key=lambda c: c.ratio)

    probe_rows, probe_max = [], {}
    if ec["trials"] > 0:
        probes = _map(_probe_cell, [(N, L, ec["trials"], seed) for N in ec["N_list"] for L in ec["L_list"]], workers)
        for N, L, ratios in probes:
            probe_rows.extend([run_id, N, L, i, r] for i, r in enumerate(ratios))
            probe_max[(N, L)] = float(ratios.max())
    write_csv(manifest.add_output(out / "probe.csv"), ["run_id", "N", "L", "trial_seed", "ratio"], probe_rows)

    per_N = {N: max(v for (n, _), v in probe_max.items() if n == N) for N in ec["N_list"]} if probe_max else {}
    tail = [N for N in sorted(per_N) if N >= 4]
    probe_slope = loglog_slope(tail, [per_N[N] for N in tail]) if len(tail) >= 2 else None

    envelope_ok = res_sweep == 0 and res_fuzz == 0 and worst.ratio <= COUNT_ENVELOPE
    write_json(manifest.add_output(out / "summary.json"), {
        "run_id": run_id,
        "shell_convention": ec["shell_convention"],
        "resonance_sweep_residual": res_sweep,
        "resonance_fuzz_residual": res_fuzz,
        "count_max_ratio": worst.ratio,
        "count_argmax": {"N": worst.N, "L": worst.L, "signs": list(worst.signs), "k": worst.argmax[0], "tau": worst.argmax[1]},
        "count_envelope": COUNT_ENVELOPE,
        "probe_max_by_N": {str(N): v for N, v in per_N.items()},
        "probe_slope_N_ge_4": probe_slope,
        "envelope_ok": envelope_ok,
    })
    if not cfg.get("quiet"):
        print(f"resonance residuals: sweep {res_sweep}, fuzz {res_fuzz}")
        print(f"count: max |B|/(LN) = {worst.ratio:.3f} at N={worst.N}, L={worst.L}, signs={worst.signs} "
              f"(envelope {COUNT_ENVELOPE})")
        if probe_slope is not None:
            print(f"bilinear probe: slope of max ratio for N >= 4: {probe_slope:+.3f}")
        print("envelope: PASS" if envelope_ok else "envelope: FAIL")
    manifest.finalize("ok" if envelope_ok else "envelope-violation")
    return EXIT_OK if envelope_ok else EXIT_ENVELOPE


# ---------------------------------------------------------------------------
# entry point

COMMANDS = {
    "simulate": cmd_simulate,
    "conserve": cmd_conserve,
    "highlow-scan": cmd_highlow_scan,
    "estimates": cmd_estimates,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zakharov-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="TOML config file")
        sp.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and the config)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="process pool size")
        sp.add_argument("--quiet", action="store_true")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.command)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        out = Path(args.out or os.environ.get(OUT_ENV) or cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        # the output location does not affect results, so it is left out of the run id
        run_id = run_id_for({k: v for k, v in cfg.items() if k != "out"}, args.command)
        cfg["quiet"] = args.quiet
        manifest = RunManifest(out, args.command, {k: v for k, v in cfg.items() if k != "quiet"}, run_id)
        return COMMANDS[args.command](cfg, out, manifest, run_id, args.workers)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, InsufficientSignalError) as exc:
        # ConfigError, DataError and GridError are ValueErrors, as are invalid integrator parameters
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
