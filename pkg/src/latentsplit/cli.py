"""Command-line front end: reproducible sweeps emitting CSV or JSON."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .behavior import Behavior
from .errors import LatentSplitError, NoTransition, NonMonotone, NumericallyAmbiguous, ZeroDivisor
from .fritz import classical_sanity, fritz_rows
from .inflation.pipeline import THRESHOLD_MODES, certify_rgb4, visibility_threshold
from .network import QuantumStrategy, pearl_do_quantum, quantum_behavior, strategy_from_json
from .scenarios import Rgb4Params, instrumental_default, rgb4_strategy, uc_default
from .splitting import interventional_behavior, isolating_splits, recover_do

COMMANDS = ("rgb4-scan", "rgb4-noise", "fritz-scan", "do-demo")
RGB4_PRESETS = ("rgb4-fig5", "rgb4-fig5-shared", "trivial")
ALL_PRESETS = RGB4_PRESETS + ("carrot",)

EXIT_OK, EXIT_USAGE, EXIT_AMBIGUOUS = 0, 1, 2

DEFAULTS: dict[str, Any] = {
    "command": None,
    "u_grid": "0.02:0.98:0.02",
    "u": 0.85,
    "eps_grid": "0:0.5:0.01",
    "visibility": 1.0,
    "v_range": "0.9:1.0",
    "tol_lp": 1e-8,
    "tol_bisect": 1e-4,
    "jobs": 1,
    "seed": 0,
    "out": "-",
    "format": "csv",
    "sanity": 0,
    "preset": "rgb4-fig5",
    "obs_only": False,
    "no_symmetry": False,
    "scenario": "all",
    "strategy": None,
}


class UsageError(ValueError):
    pass


def parse_grid(spec: str) -> list[float]:
    """``start:stop:step`` inclusive of ``stop``; a bare number is a one-point grid."""
    parts = str(spec).split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) != 3:
            raise ValueError
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"grid {spec!r} is not start:stop:step") from None
    if not step > 0:
        raise UsageError(f"grid step must be positive in {spec!r}")
    if stop < start:
        raise UsageError(f"grid {spec!r} is empty")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def parse_range(spec: str) -> tuple[float, float]:
    try:
        lo, hi = (float(p) for p in str(spec).split(":"))
    except ValueError:
        raise UsageError(f"range {spec!r} is not lo:hi") from None
    if lo > hi:
        raise UsageError(f"range {spec!r} has lo > hi")
    return lo, hi


@dataclass
class RunConfig:
    command: str
    u_grid: list[float]
    u: float
    eps_grid: list[float]
    visibility: float
    v_range: tuple[float, float]
    tol_lp: float
    tol_bisect: float
    jobs: int
    seed: int
    out: str
    format: str
    sanity: int
    preset: str
    obs_only: bool
    symmetry: bool
    scenario: str
    strategy: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def tol_feasible(self) -> float:
        return min(1e-9, self.tol_lp / 10)

    @classmethod
    def from_values(cls, values: Mapping[str, Any]) -> "RunConfig":
        unknown = set(values) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown configuration keys: {sorted(unknown)}")
        v = {**DEFAULTS, **{k: x for k, x in values.items() if x is not None}}
        if v["command"] not in COMMANDS:
            raise UsageError(f"--command must be one of {COMMANDS}")
        if v["format"] not in ("csv", "json"):
            raise UsageError("--format must be csv or json")
        if v["preset"] not in ALL_PRESETS:
            raise UsageError(f"--preset must be one of {ALL_PRESETS}")
        for key in ("tol_lp", "tol_bisect"):
            if not float(v[key]) > 0:
                raise UsageError(f"{key} must be positive")
        if int(v["jobs"]) < 1:
            raise UsageError("--jobs must be >= 1")
        if int(v["sanity"]) < 0:
            raise UsageError("--sanity must be >= 0")
        if not 0.0 <= float(v["visibility"]) <= 1.0:
            raise UsageError("--visibility must lie in [0, 1]")
        if v["scenario"] not in ("all", "instrumental", "uc", "triangle"):
            raise UsageError("--scenario must be all, instrumental, uc or triangle")
        return cls(
            command=v["command"],
            u_grid=parse_grid(v["u_grid"]),
            u=float(v["u"]),
            eps_grid=parse_grid(v["eps_grid"]),
            visibility=float(v["visibility"]),
            v_range=parse_range(v["v_range"]),
            tol_lp=float(v["tol_lp"]),
            tol_bisect=float(v["tol_bisect"]),
            jobs=int(v["jobs"]),
            seed=int(v["seed"]),
            out=str(v["out"]),
            format=v["format"],
            sanity=int(v["sanity"]),
            preset=v["preset"],
            obs_only=bool(v["obs_only"]),
            symmetry=not bool(v["no_symmetry"]),
            scenario=v["scenario"],
            strategy=v["strategy"],
        )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="latentsplit",
        description="Certify nonclassicality of quantum triangle-network strategies from split-source data.",
    )
    p.add_argument("--command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file with the same keys as the flags (underscored); flags win")
    p.add_argument("--u-grid", dest="u_grid", help="start:stop:step for rgb4-scan (default 0.02:0.98:0.02)")
    p.add_argument("--u", type=float, help="measurement parameter for rgb4-noise (default 0.85)")
    p.add_argument("--eps-grid", dest="eps_grid", help="start:stop:step for fritz-scan (default 0:0.5:0.01)")
    p.add_argument("--visibility", type=float, help="source visibility (rgb4-scan: all sources; fritz-scan: gamma)")
    p.add_argument("--v-range", dest="v_range", help="bisection bracket lo:hi for rgb4-noise (default 0.9:1.0)")
    p.add_argument("--tol-lp", dest="tol_lp", type=float, help="certificate tolerance (feasibility uses min(1e-9, tol/10))")
    p.add_argument("--tol-bisect", dest="tol_bisect", type=float, help="bisection width (default 1e-4)")
    p.add_argument("--jobs", type=int, help="worker processes for grid points")
    p.add_argument("--seed", type=int, help="seed for sampling")
    p.add_argument("--out", help="output path, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--sanity", type=int, help="classical models sampled per epsilon in fritz-scan")
    p.add_argument("--preset", choices=ALL_PRESETS, help="inflation wiring")
    p.add_argument("--obs-only", dest="obs_only", action="store_true", default=None, help="only the observational LP")
    p.add_argument("--no-symmetry", dest="no_symmetry", action="store_true", default=None, help="drop copy-exchange rows")
    p.add_argument("--scenario", help="do-demo scenario: all, instrumental, uc or triangle")
    p.add_argument("--strategy", help="do-demo: JSON strategy file replacing the default strategies")
    return p


def load_config(argv: Sequence[str] | None) -> RunConfig:
    args = build_parser().parse_args(argv)
    values: dict[str, Any] = {}
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc}") from None
        values.update({k.replace("-", "_"): v for k, v in loaded.items()})
    flags = {k: v for k, v in vars(args).items() if k != "config" and v is not None}
    values.update(flags)
    return RunConfig.from_values(values)


# -- output ----------------------------------------------------------------


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def render(rows: list[dict], fmt: str, meta: Mapping[str, Any] | None = None) -> str:
    if fmt == "json":
        payload = {"rows": rows}
        if meta:
            payload["meta"] = dict(meta)
        return json.dumps(payload, indent=1, sort_keys=True, default=float) + "\n"
    buf = io.StringIO()
    if rows:
        header = list(rows[0])
        for r in rows[1:]:
            header += [k for k in r if k not in header]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for r in rows:
            writer.writerow([_fmt(r.get(k)) for k in header])
    return buf.getvalue()


def _write(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))  # map keeps grid order


# -- commands --------------------------------------------------------------


def _rgb4_point(task: tuple) -> dict:
    u, visibility, preset, obs_only, symmetry, tol_feasible, tol_certificate = task
    params = Rgb4Params(u, visibilities=(visibility,) * 3)
    row: dict[str, Any] = {"u": u}
    modes = [("obs_only", True)] + ([] if obs_only else [("obs_plus_int", False)])
    for name, only in modes:
        try:
            cert = certify_rgb4(
                params,
                preset=preset,
                obs_only=only,
                symmetry=symmetry,
                tol_feasible=tol_feasible,
                tol_certificate=tol_certificate,
            )
        except NumericallyAmbiguous as exc:
            row[f"status_{name}"] = "ambiguous"
            row[f"phase1_{name}"] = exc.residual
            continue
        row[f"status_{name}"] = cert.verdict.status
        row[f"phase1_{name}"] = cert.verdict.phase1_value
        if not only:
            row["witness_value"] = cert.witness_value
            row["reference_witness_value"] = cert.reference_value
            if cert.verdict.check is not None:
                row["certificate_min_ATy"] = cert.verdict.check.min_aty
                row["certificate_bTy"] = cert.verdict.check.bty
    if obs_only:
        row["status_obs_plus_int"] = "skipped"
    return row


def cmd_rgb4_scan(cfg: RunConfig) -> tuple[list[dict], int]:
    if cfg.preset not in RGB4_PRESETS:
        raise UsageError(f"rgb4-scan needs one of {RGB4_PRESETS}")
    tasks = [
        (u, cfg.visibility, cfg.preset, cfg.obs_only, cfg.symmetry, cfg.tol_feasible, cfg.tol_lp) for u in cfg.u_grid
    ]
    rows = _map(_rgb4_point, tasks, cfg.jobs)
    columns = [
        "u",
        "status_obs_only",
        "status_obs_plus_int",
        "witness_value",
        "reference_witness_value",
        "phase1_obs_only",
        "phase1_obs_plus_int",
        "certificate_min_ATy",
        "certificate_bTy",
    ]
    rows = [{k: r.get(k) for k in columns} for r in rows]
    ambiguous = any(r[k] == "ambiguous" for r in rows for k in ("status_obs_only", "status_obs_plus_int"))
    return rows, EXIT_AMBIGUOUS if ambiguous else EXIT_OK


def _noise_point(task: tuple) -> dict:
    mode, u, lo, hi, tol, preset, symmetry, tol_feasible, tol_certificate = task
    free = THRESHOLD_MODES[mode]
    row: dict[str, Any] = {"mode": mode, "free": "+".join(free), "u": u}
    try:
        res = visibility_threshold(
            Rgb4Params(u),
            free,
            lo=lo,
            hi=hi,
            tol=tol,
            preset=preset,
            symmetry=symmetry,
            tol_feasible=tol_feasible,
            tol_certificate=tol_certificate,
        )
    except (NoTransition, NonMonotone, NumericallyAmbiguous) as exc:
        row.update(threshold=None, status=type(exc).__name__, probes=0, trace=str(exc))
        return row
    row.update(
        threshold=res.value,
        status="ok",
        probes=len(res.trace),
        trace=";".join(f"{v:.17g}:{s}" for v, s in res.trace),
    )
    return row


def cmd_rgb4_noise(cfg: RunConfig) -> tuple[list[dict], int]:
    if cfg.preset not in RGB4_PRESETS:
        raise UsageError(f"rgb4-noise needs one of {RGB4_PRESETS}")
    lo, hi = cfg.v_range
    tasks = [
        (mode, cfg.u, lo, hi, cfg.tol_bisect, cfg.preset, cfg.symmetry, cfg.tol_feasible, cfg.tol_lp)
        for mode in ("sym", "alpha", "gamma", "beta")
    ]
    rows = _map(_noise_point, tasks, cfg.jobs)
    code = EXIT_AMBIGUOUS if any(r["status"] == "NumericallyAmbiguous" for r in rows) else EXIT_OK
    return rows, code


def cmd_fritz_scan(cfg: RunConfig) -> tuple[list[dict], int]:
    rows = [dict(r) for r in fritz_rows(cfg.eps_grid, cfg.visibility)]
    for r in rows:
        if cfg.sanity > 0:
            rep = classical_sanity(r["epsilon"], cfg.sanity, cfg.seed)
            r.update(
                sanity_samples=rep.samples,
                sanity_min_S=rep.min_S,
                sanity_counterexamples=rep.counterexamples,
                sanity_argmin_digest=rep.argmin_model_digest,
            )
    return rows, EXIT_OK


def _event(names: Sequence[str], idx: Sequence[int]) -> str:
    return ";".join(f"{n}={int(v)}" for n, v in zip(names, idx))


def _behavior_rows(scenario: str, table: str, target: str, b: Behavior) -> list[dict]:
    rows = []
    for idx, p in b.rows():
        outs = _event(b.parties, idx[: len(b.parties)])
        conds = _event(b.conditions, idx[len(b.parties) :])
        rows.append({"scenario": scenario, "table": table, "target": target, "event": outs, "given": conds, "p": p})
    return rows


def do_demo_rows(name: str, strategy: QuantumStrategy) -> tuple[list[dict], bool]:
    net = strategy.network
    rows = _behavior_rows(name, "P_obs", "", quantum_behavior(strategy))
    failed = False
    worst = 0.0
    for target in net.parties:
        rows += _behavior_rows(name, "P_int", target, interventional_behavior(strategy, isolating_splits(net, target)))
        try:
            recovered = recover_do(strategy, target)
        except ZeroDivisor as exc:
            failed = True
            event = _event(list(exc.event), list(exc.event.values())) if exc.event else str(exc)
            rows.append({"scenario": name, "table": "ZeroDivisor", "target": target, "event": event, "given": "", "p": None})
            print(f"warning: {name}: {exc}", file=sys.stderr)
            continue
        oracle = pearl_do_quantum(strategy, target)
        rows += _behavior_rows(name, "do_recovered", target, recovered)
        worst = max(worst, float(np.max(np.abs(recovered.table - oracle.table), initial=0.0)))
    rows.append({"scenario": name, "table": "max_residual", "target": "", "event": "", "given": "", "p": worst})
    return rows, failed


def cmd_do_demo(cfg: RunConfig) -> tuple[list[dict], int]:
    if cfg.strategy:
        try:
            with open(cfg.strategy) as fh:
                strategies = {"custom": strategy_from_json(json.load(fh))}
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise UsageError(f"cannot load strategy {cfg.strategy!r}: {exc}") from None
    else:
        everything = {
            "instrumental": instrumental_default,
            "uc": uc_default,
            "triangle": lambda: rgb4_strategy(Rgb4Params(0.85)),
        }
        chosen = everything if cfg.scenario == "all" else {cfg.scenario: everything[cfg.scenario]}
        strategies = {k: f() for k, f in chosen.items()}
    rows: list[dict] = []
    failed = False
    for name, strategy in strategies.items():
        r, f = do_demo_rows(name, strategy)
        rows += r
        failed |= f
    return rows, EXIT_AMBIGUOUS if failed else EXIT_OK


HANDLERS: dict[str, Callable[[RunConfig], tuple[list[dict], int]]] = {
    "rgb4-scan": cmd_rgb4_scan,
    "rgb4-noise": cmd_rgb4_noise,
    "fritz-scan": cmd_fritz_scan,
    "do-demo": cmd_do_demo,
}


def run(cfg: RunConfig) -> int:
    rows, code = HANDLERS[cfg.command](cfg)
    meta = {"command": cfg.command, "seed": cfg.seed}
    _write(render(rows, cfg.format, meta), cfg.out)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = load_config(argv)
        return run(cfg)
    except SystemExit as exc:  # argparse
        return EXIT_USAGE if exc.code else EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LatentSplitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
