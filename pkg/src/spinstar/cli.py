"""Batch command-line driver.

Three subcommands:

* run <config.json>       -- evolve one model and write CSV time series
                             plus a JSON manifest into an output directory
* verify [--full]         -- run the invariant/cross-path suites
* benchmark <cases.json>  -- time build/decompose/evolve for (N, p) cases

Config files are strict JSON: unknown keys anywhere are rejected, so a
typo in a physics parameter fails loudly instead of being ignored.
Numbers in CSV output carry 17 significant digits; identical configs
(seeds included) reproduce output byte for byte.

Exit codes: 0 success, 1 validation error, 2 invariant or verification
failure, 3 resource cap (sector too large, oracle too large, or not
enough memory).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path
from typing import Any

import numpy as np
import psutil

from .companion import build_A, build_B, decompose
from .errors import (
    ConsistencyError,
    SectorSizeError,
    SpinStarError,
    ValidationError,
)
from .evolution import (
    DELTA_SIGN_LAB,
    Trajectory,
    closed_form_p0,
    evolve_closed_form,
    evolve_first_order,
    evolve_series,
    initial_derivatives,
    initial_state,
    to_lab_frame,
)
from .model import (
    InitialCondition,
    ModelParams,
    random_couplings,
    sector_dim_cap,
    sector_shape,
)
from .observables import (
    return_probability,
    site_occupations,
    sz_central,
)
from .oracle import embed_pair, project_to_sector, propagate_full
from .verify import random_model, run_checks

VERSION = "0.1.0"

#: Propagation paths the run subcommand understands.
RUN_PATHS = ("closed_form", "series", "first_order", "oracle", "analytic_p0")

#: Rough bytes needed to eigendecompose a dense n x n symmetric matrix
#: with the divide-and-conquer driver (matrix + workspace).
EIG_BYTES_PER_ENTRY = 24

#: Fraction of currently available memory the benchmark is allowed to plan for.
MEMORY_HEADROOM = 0.85

_SERIES_TERMS = 40
_SERIES_BOUND = 25.0


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ValidationError(f"unknown keys in {where}: {', '.join(unknown)}")


def _require(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise ValidationError(f"missing required key '{key}' in {where}")
    return obj[key]


def _load_json(path: Path) -> Any:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def _resolve_couplings(raw: Any, n_sites: int) -> tuple[float, ...]:
    if isinstance(raw, list):
        return tuple(float(x) for x in raw)
    if isinstance(raw, dict) and set(raw) == {"uniform"}:
        return (float(raw["uniform"]),) * n_sites
    if isinstance(raw, dict) and set(raw) == {"random"}:
        inner = raw["random"]
        if not isinstance(inner, dict):
            raise ValidationError("model.couplings.random must be an object")
        _reject_unknown(inner, {"low", "high", "seed"}, "model.couplings.random")
        return random_couplings(
            n_sites,
            float(_require(inner, "low", "model.couplings.random")),
            float(_require(inner, "high", "model.couplings.random")),
            int(_require(inner, "seed", "model.couplings.random")),
        )
    raise ValidationError(
        "model.couplings must be a list, {\"uniform\": value}, "
        "or {\"random\": {low, high, seed}}"
    )


def _resolve_model(cfg: dict) -> ModelParams:
    if not isinstance(cfg, dict):
        raise ValidationError("'model' must be an object")
    _reject_unknown(cfg, {"n_sites", "omega", "omega0", "couplings"}, "model")
    n_sites = int(_require(cfg, "n_sites", "model"))
    couplings = _resolve_couplings(_require(cfg, "couplings", "model"), n_sites)
    return ModelParams(
        n_sites,
        float(cfg.get("omega", 0.0)),
        float(cfg.get("omega0", 0.0)),
        couplings,
    )


def _resolve_grid(cfg: Any, params: ModelParams) -> tuple[np.ndarray, dict]:
    if cfg is None:
        w_e = params.effective_frequency
        t_max = 2 * 2 * math.pi / w_e if w_e > 0.0 else 10.0
        num_points = 1001
        source = "default"
    else:
        if not isinstance(cfg, dict):
            raise ValidationError("'grid' must be an object")
        _reject_unknown(cfg, {"t_max", "num_points"}, "grid")
        t_max = float(_require(cfg, "t_max", "grid"))
        num_points = int(_require(cfg, "num_points", "grid"))
        source = "config"
    if t_max <= 0.0:
        raise ValidationError(f"grid.t_max must be > 0, got {t_max}")
    if num_points < 2:
        raise ValidationError(f"grid.num_points must be >= 2, got {num_points}")
    times = np.linspace(0.0, t_max, num_points)
    return times, {"t_max": t_max, "num_points": num_points, "source": source}


def _series_trajectory(
    params: ModelParams, p: int, init: InitialCondition, times: np.ndarray
) -> tuple[Trajectory, list[str]]:
    shape = sector_shape(params, p)
    x0 = initial_state(init, shape)
    v0 = initial_derivatives(x0, params, p, delta_sign=DELTA_SIGN_LAB)
    ma = build_A(params, p)
    mb = build_B(params, p)
    warnings = []
    bound = max(
        float(np.abs(ma.matrix).sum(axis=1).max()) if ma.dim else 0.0,
        float(np.abs(mb.matrix).sum(axis=1).max()) if mb.dim else 0.0,
    )
    if bound * float(times[-1]) ** 2 > _SERIES_BOUND:
        warnings.append(
            f"series path outside its validity window (||X|| t^2 = "
            f"{bound * float(times[-1]) ** 2:.1f} > {_SERIES_BOUND}); "
            "expect truncation error"
        )
    a_rows = []
    b_rows = []
    for t in times:
        pair = evolve_series(x0, v0, ma, mb, float(t), terms=_SERIES_TERMS)
        a_rows.append(pair.a)
        b_rows.append(pair.b)
    traj = Trajectory(
        times=times,
        a=np.array(a_rows),
        b=np.array(b_rows),
        frame="rotating",
        n_sites=params.n_sites,
        p=p,
    )
    return traj, warnings


def _oracle_trajectory(
    params: ModelParams, p: int, init: InitialCondition, times: np.ndarray
) -> Trajectory:
    shape = sector_shape(params, p)
    x0 = initial_state(init, shape)
    psi0 = embed_pair(x0, shape.basis_a, shape.basis_b)
    full = propagate_full(params, psi0, times)
    a_rows = []
    b_rows = []
    for i, t in enumerate(times):
        pair = project_to_sector(
            full[i], p, shape.basis_a, shape.basis_b, params, float(t)
        )
        a_rows.append(pair.a)
        b_rows.append(pair.b)
    return Trajectory(
        times=times,
        a=np.array(a_rows),
        b=np.array(b_rows),
        frame="rotating",
        n_sites=params.n_sites,
        p=p,
    )


def _compute_path(
    name: str,
    params: ModelParams,
    p: int,
    init: InitialCondition,
    times: np.ndarray,
) -> tuple[Trajectory, dict[str, float], list[str]]:
    timings: dict[str, float] = {}
    warnings: list[str] = []
    tic = time.perf_counter()
    if name == "closed_form":
        shape = sector_shape(params, p)
        x0 = initial_state(init, shape)
        v0 = initial_derivatives(x0, params, p, delta_sign=DELTA_SIGN_LAB)
        ma = build_A(params, p)
        mb = build_B(params, p)
        timings["build"] = time.perf_counter() - tic
        tic = time.perf_counter()
        da = decompose(ma)
        db = decompose(mb)
        timings["decompose"] = time.perf_counter() - tic
        tic = time.perf_counter()
        traj = evolve_closed_form(x0, v0, da, db, times)
        timings["evolve"] = time.perf_counter() - tic
    elif name == "first_order":
        shape = sector_shape(params, p)
        x0 = initial_state(init, shape)
        traj = evolve_first_order(params, p, x0, times, delta_sign=DELTA_SIGN_LAB)
        timings["evolve"] = time.perf_counter() - tic
    elif name == "series":
        traj, warnings = _series_trajectory(params, p, init, times)
        timings["evolve"] = time.perf_counter() - tic
    elif name == "oracle":
        traj = _oracle_trajectory(params, p, init, times)
        timings["evolve"] = time.perf_counter() - tic
    elif name == "analytic_p0":
        if p != 0:
            raise ValidationError("path 'analytic_p0' requires an empty up_sites list")
        traj = closed_form_p0(params, times)
        timings["evolve"] = time.perf_counter() - tic
    else:
        raise ValidationError(
            f"unknown path '{name}'; choose from {', '.join(RUN_PATHS)}"
        )
    return traj, timings, warnings


def _observable_table(traj: Trajectory, init: InitialCondition) -> list[list[float]]:
    """Column-major table: t, block populations, central magnetization,
    return probability, per-site magnetizations."""
    cols = [traj.times]
    cols.append((np.abs(traj.a) ** 2).sum(axis=1))
    cols.append((np.abs(traj.b) ** 2).sum(axis=1))
    cols.append(sz_central(traj).values)
    cols.append(return_probability(traj, init).values)
    occ = site_occupations(traj)
    for j in range(traj.n_sites):
        cols.append(occ[:, j] - 0.5)
    return cols


def _csv_header(n_sites: int) -> str:
    names = [
        "t (1/frequency)",
        "sum_a_sq (prob)",
        "sum_b_sq (prob)",
        "sz_central (hbar)",
        "return_prob (prob)",
    ]
    names += [f"sz_site_{j} (hbar)" for j in range(1, n_sites + 1)]
    return ",".join(names)


def _write_csv(path: Path, header: str, cols: list) -> None:
    rows = len(cols[0])
    with path.open("w") as fh:
        fh.write(header + "\n")
        for i in range(rows):
            fh.write(",".join(_fmt(c[i]) for c in cols) + "\n")


def _write_amplitudes(path: Path, traj: Trajectory) -> None:
    names = ["t (1/frequency)"]
    names += [f"re_a_{k}" for k in range(traj.a.shape[1])]
    names += [f"im_a_{k}" for k in range(traj.a.shape[1])]
    names += [f"re_b_{k}" for k in range(traj.b.shape[1])]
    names += [f"im_b_{k}" for k in range(traj.b.shape[1])]
    with path.open("w") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(traj.n_times):
            parts = [_fmt(traj.times[i])]
            parts += [_fmt(x) for x in traj.a[i].real]
            parts += [_fmt(x) for x in traj.a[i].imag]
            parts += [_fmt(x) for x in traj.b[i].real]
            parts += [_fmt(x) for x in traj.b[i].imag]
            fh.write(",".join(parts) + "\n")


def _amplitude_delta(t1: Trajectory, t2: Trajectory, modulus: bool = False) -> float:
    if modulus:
        da = np.abs(np.abs(t1.a) - np.abs(t2.a)).max() if t1.a.size else 0.0
        db = np.abs(np.abs(t1.b) - np.abs(t2.b)).max() if t1.b.size else 0.0
    else:
        da = np.abs(t1.a - t2.a).max() if t1.a.size else 0.0
        db = np.abs(t1.b - t2.b).max() if t1.b.size else 0.0
    return float(max(da, db))


def cmd_run(config_path: str) -> int:
    cfg_file = Path(config_path)
    cfg = _load_json(cfg_file)
    if not isinstance(cfg, dict):
        raise ValidationError("config root must be a JSON object")
    _reject_unknown(
        cfg, {"model", "initial", "grid", "paths", "outputs", "frame"}, "config"
    )
    params = _resolve_model(_require(cfg, "model", "config"))

    initial_cfg = cfg.get("initial", {"up_sites": []})
    if not isinstance(initial_cfg, dict):
        raise ValidationError("'initial' must be an object")
    _reject_unknown(initial_cfg, {"up_sites"}, "initial")
    init = InitialCondition(tuple(int(s) for s in initial_cfg.get("up_sites", [])))
    init.validate_for(params)
    p = init.p

    times, grid_info = _resolve_grid(cfg.get("grid"), params)

    paths = cfg.get("paths", ["closed_form"])
    if not isinstance(paths, list) or not paths:
        raise ValidationError("'paths' must be a nonempty list")
    for name in paths:
        if name not in RUN_PATHS:
            raise ValidationError(
                f"unknown path '{name}'; choose from {', '.join(RUN_PATHS)}"
            )
    if len(set(paths)) != len(paths):
        raise ValidationError("'paths' contains duplicates")

    outputs_cfg = cfg.get("outputs", {})
    if not isinstance(outputs_cfg, dict):
        raise ValidationError("'outputs' must be an object")
    _reject_unknown(outputs_cfg, {"directory", "formats"}, "outputs")
    out_dir = Path(outputs_cfg.get("directory", "."))
    formats = outputs_cfg.get("formats", ["csv"])
    if not isinstance(formats, list) or not set(formats) <= {"csv", "amplitudes"}:
        raise ValidationError("outputs.formats entries must be 'csv' or 'amplitudes'")

    frame = cfg.get("frame", "rotating")
    if frame not in ("rotating", "lab"):
        raise ValidationError(f"frame must be 'rotating' or 'lab', got {frame!r}")

    shape = sector_shape(params, init)  # raises SectorSizeError citing both dims
    out_dir.mkdir(parents=True, exist_ok=True)

    warnings: list[str] = []
    if p == params.n_sites:
        warnings.append(
            "p=N eigenstate: the initial state is stationary, all observables are constant"
        )

    trajectories: dict[str, Trajectory] = {}
    timings: dict[str, dict[str, float]] = {}
    norm_drift: dict[str, float] = {}
    outputs: dict[str, list[str]] = {}
    for name in paths:
        traj, path_timings, path_warnings = _compute_path(name, params, p, init, times)
        warnings.extend(path_warnings)
        trajectories[name] = traj
        timings[name] = path_timings
        norm_drift[name] = traj.max_norm_drift()

        emitted = traj
        if frame == "lab" and name != "analytic_p0":
            emitted = to_lab_frame(traj, params)
        tic = time.perf_counter()
        files = []
        if "csv" in formats:
            csv_path = out_dir / f"{name}.csv"
            _write_csv(
                csv_path, _csv_header(params.n_sites), _observable_table(emitted, init)
            )
            files.append(csv_path.name)
        if "amplitudes" in formats:
            amp_path = out_dir / f"{name}_amplitudes.csv"
            _write_amplitudes(amp_path, emitted)
            files.append(amp_path.name)
        timings[name]["write"] = time.perf_counter() - tic
        outputs[name] = files

    agreement: dict[str, float] = {}
    reference = "closed_form" if "closed_form" in trajectories else paths[0]
    for name, traj in trajectories.items():
        if name == reference:
            continue
        modulus = "analytic_p0" in (name, reference)
        key = f"{name}_vs_{reference}" + ("_modulus" if modulus else "")
        agreement[key] = _amplitude_delta(traj, trajectories[reference], modulus=modulus)

    manifest = {
        "tool": "spinstar",
        "version": VERSION,
        "config_sha256": hashlib.sha256(cfg_file.read_bytes()).hexdigest(),
        "model": {
            "n_sites": params.n_sites,
            "omega": params.omega,
            "omega0": params.omega0,
            "couplings": list(params.couplings),
            "delta": params.delta,
            "alpha_eff": params.effective_frequency,
        },
        "initial": {"up_sites": list(init.up_sites), "p": p},
        "sector": {
            "dim_a": shape.dim_a,
            "dim_b": shape.dim_b,
            "dim_total": shape.dim_total,
        },
        "grid": grid_info,
        "frame": frame,
        "delta_sign": DELTA_SIGN_LAB,
        "paths": list(paths),
        "timings_s": timings,
        "max_norm_drift": norm_drift,
        "path_agreement": agreement,
        "warnings": warnings,
        "outputs": outputs,
    }
    with (out_dir / "manifest.json").open("w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"run complete: {len(paths)} path(s) -> {out_dir}")
    return 0


def cmd_verify(full: bool, max_sites: int | None, seeds: int | None) -> int:
    if max_sites is None:
        max_sites = 8 if full else 5
    if seeds is None:
        seeds = 20 if full else 5
    results = run_checks(max_sites=max_sites, n_seeds=seeds)
    width = max(len(r.name) for r in results)
    failures = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        if not r.passed:
            failures += 1
        print(
            f"{status}  {r.name:<{width}}  max_dev={r.max_deviation:.3e}  "
            f"tol={r.tolerance:.1e}  {r.detail}"
        )
    scope = "full" if full else "quick"
    print(
        f"verify ({scope}, N <= {max_sites}, {seeds} seeds): "
        f"{len(results) - failures}/{len(results)} checks passed"
    )
    return 0 if failures == 0 else 2


def _benchmark_case(n: int, p: int, num_points: int) -> dict[str, Any]:
    row: dict[str, Any] = {
        "n_sites": n,
        "p": p,
        "dim_a": math.comb(n, p),
        "dim_b": math.comb(n, p + 1),
    }
    cap = sector_dim_cap()
    dim_total = math.comb(n + 1, p + 1)
    if dim_total > cap:
        row["status"] = "skipped"
        row["reason"] = f"dimension cap: C({n + 1},{p + 1})={dim_total} > {cap}"
        return row
    biggest = max(row["dim_a"], row["dim_b"])
    need = EIG_BYTES_PER_ENTRY * biggest * biggest
    budget = MEMORY_HEADROOM * psutil.virtual_memory().available
    if need > budget:
        row["status"] = "skipped"
        row["reason"] = (
            f"memory: eigensolve of dim {biggest} needs ~{need / 1e9:.1f} GB, "
            f"budget is {budget / 1e9:.1f} GB"
        )
        return row

    params = random_model(n, 0)
    init = InitialCondition(tuple(range(1, p + 1)))
    shape = sector_shape(params, init)
    tic = time.perf_counter()
    ma = build_A(params, p)
    mb = build_B(params, p)
    row["build_s"] = round(time.perf_counter() - tic, 3)
    tic = time.perf_counter()
    da = decompose(ma)
    db = decompose(mb)
    row["decompose_s"] = round(time.perf_counter() - tic, 3)
    tic = time.perf_counter()
    x0 = initial_state(init, shape)
    v0 = initial_derivatives(x0, params, p, delta_sign=DELTA_SIGN_LAB)
    w_e = params.effective_frequency
    times = np.linspace(0.0, 2 * 2 * math.pi / w_e if w_e else 10.0, num_points)
    traj = evolve_closed_form(x0, v0, da, db, times)
    row["evolve_s"] = round(time.perf_counter() - tic, 3)
    row["total_s"] = round(row["build_s"] + row["decompose_s"] + row["evolve_s"], 3)
    row["norm_drift"] = float(traj.max_norm_drift())
    row["status"] = "ok"
    row["reason"] = ""
    return row


def cmd_benchmark(cases_path: str, output: str | None, num_points: int) -> int:
    cases = _load_json(Path(cases_path))
    if not isinstance(cases, list) or not cases:
        raise ValidationError("benchmark file must be a nonempty JSON list of [N, p]")
    parsed: list[tuple[int, int]] = []
    for entry in cases:
        if not (isinstance(entry, list) and len(entry) == 2):
            raise ValidationError(f"benchmark case {entry!r} is not an [N, p] pair")
        n, p = int(entry[0]), int(entry[1])
        if n < 1 or not 0 <= p <= n:
            raise ValidationError(f"benchmark case ({n}, {p}) out of range")
        parsed.append((n, p))

    fields = [
        "n_sites",
        "p",
        "dim_a",
        "dim_b",
        "build_s",
        "decompose_s",
        "evolve_s",
        "total_s",
        "status",
        "reason",
    ]
    lines = [",".join(fields)]
    for n, p in parsed:
        row = _benchmark_case(n, p, num_points)
        lines.append(",".join(str(row.get(f, "")) for f in fields))
        print(lines[-1], file=sys.stderr)
    text = "\n".join(lines) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinstar",
        description="Exact sector dynamics of a star of spins around a central spin-1/2",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="evolve one configured model")
    p_run.add_argument("config", help="path to a JSON run configuration")

    p_verify = sub.add_parser("verify", help="run the invariant suites")
    p_verify.add_argument(
        "--full", action="store_true", help="full scope (N <= 8, 20 seeds)"
    )
    p_verify.add_argument("--max-sites", type=int, default=None)
    p_verify.add_argument("--seeds", type=int, default=None)

    p_bench = sub.add_parser("benchmark", help="time build/decompose/evolve")
    p_bench.add_argument("cases", help="path to a JSON list of [N, p] pairs")
    p_bench.add_argument("--output", default=None, help="write the CSV table here")
    p_bench.add_argument(
        "--num-points", type=int, default=101, help="time samples per case"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config)
        if args.command == "verify":
            return cmd_verify(args.full, args.max_sites, args.seeds)
        if args.command == "benchmark":
            return cmd_benchmark(args.cases, args.output, args.num_points)
        raise ValidationError(f"unknown command {args.command!r}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConsistencyError as exc:
        print(f"consistency failure: {exc}", file=sys.stderr)
        return 2
    except SectorSizeError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 3
    except MemoryError:
        print("resource cap: out of memory", file=sys.stderr)
        return 3
    except SpinStarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
