"""Command-line experiment runner.

Subcommands: domain build, green compute, field sample, walk run,
levelsets extract, verify.  Parameters come from flags, optionally seeded
from a TOML config file; flags override the file.  Every CSV written here
starts with a metadata comment line carrying the package version, master
seed and a hash of the resolved configuration, so outputs are traceable
and byte-reproducible.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .continuum import sigma_D2
from .domain import DomainSpec, LatticeDomain, build_lattice
from .errors import ParameterError, WalkLabError
from .fields import export_samples_csv, sample_dgff
from .green import compute_green
from .levelsets import (export_measure_csv, extract_level_measure,
                        scale_sequences)
from .verify import CHECKS, verify_suite
from .walk import (WalkConfig, corner_vertex, cover_time, export_traces_csv,
                   fluctuations, run_walk, steps_for_time)

DEFAULTS = {
    "shape": "unit-square",
    "N": 32,
    "theta": 0.5,
    "lambda": 0.0,
    "kind": "thick",
    "reps": 1,
    "seed": 1,
    "start": "boundary",
    "radius": -1,
    "mode": "boundary",
    "horizon": 2.0,
    "width": 1.0,
    "height": 1.0,
    "disk_radius": 1.0,
    "plot": False,
}


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def resolve_config(args: argparse.Namespace) -> dict:
    """defaults < TOML file < explicit flags."""
    cfg = dict(DEFAULTS)
    cfg.update(_load_config(getattr(args, "config", None)))
    for key in cfg:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            cfg[key] = flag
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def metadata_line(cfg: dict) -> str:
    return f"walklab {__version__} seed={cfg['seed']} config={config_hash(cfg)}"


def _domain_spec(cfg: dict) -> DomainSpec:
    shape = cfg["shape"]
    if shape == "rectangle":
        return DomainSpec(shape, width=cfg["width"], height=cfg["height"])
    if shape == "disk":
        return DomainSpec(shape, radius=cfg["disk_radius"])
    return DomainSpec(shape)


def _build(cfg: dict) -> LatticeDomain:
    return build_lattice(_domain_spec(cfg), int(cfg["N"]))


def _start_vertex(domain: LatticeDomain, spec: str | int):
    if spec == "boundary":
        return "boundary"
    if spec == "corner":  # "arbitrary" start rule: the corner stresses it most
        return corner_vertex(domain)
    return int(spec)


def cmd_domain_build(args) -> int:
    cfg = resolve_config(args)
    domain = _build(cfg)
    text = domain.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    print(f"vertices={domain.n} deg_rho={domain.deg_rho} deg_total={domain.deg_total}",
          file=sys.stderr)
    return 0


def cmd_green_compute(args) -> int:
    cfg = resolve_config(args)
    if not args.out:
        raise ParameterError("green compute needs --out (binary output)")
    domain = _build(cfg)
    green = compute_green(domain)
    green.save(args.out)
    print(f"n={green.n} sigma_D2={sigma_D2(green, domain):.8g}", file=sys.stderr)
    return 0


def cmd_field_sample(args) -> int:
    cfg = resolve_config(args)
    if not args.out:
        raise ParameterError("field sample needs --out")
    domain = _build(cfg)
    green = compute_green(domain)
    samples = sample_dgff(green, int(cfg["seed"]), int(cfg["reps"]))
    export_samples_csv(samples, domain, args.out, metadata=metadata_line(cfg))
    if cfg["plot"]:
        from .plots import histogram_svg
        svg = str(Path(args.out).with_suffix(".svg"))
        histogram_svg(np.concatenate([s.values for s in samples]), svg,
                      "field values", "h(x)")
        print(f"figure: {svg}", file=sys.stderr)
    return 0


def cmd_walk_run(args) -> int:
    cfg = resolve_config(args)
    if not args.out:
        raise ParameterError("walk run needs --out")
    domain = _build(cfg)
    start = _start_vertex(domain, cfg["start"])
    mode = cfg["mode"]
    rows = []
    for r in range(int(cfg["reps"])):
        if mode == "cover":
            s = 0 if start == "boundary" else start
            steps = cover_time(domain, s, int(cfg["seed"]), r)
            rows.append({"replicate": r, "mode": "cover", "horizon": "",
                         "steps": steps, "covered": 1})
            continue
        f = run_walk(domain, WalkConfig(start=start, mode=mode,
                                        horizon=float(cfg["horizon"]),
                                        seed=int(cfg["seed"]), replicate=r))
        row = {"replicate": r, "mode": mode, "horizon": f.horizon,
               "steps": f.steps, "tau_rho": f.elapsed_time,
               "max_local_time": float(f.interior().max()),
               "min_local_time": float(f.interior().min()),
               "covered": int(np.all(f.values[:-1] > 0))}
        if mode == "boundary":
            rec = fluctuations(f, domain, f.horizon)
            row["U"] = rec.U
            row["T"] = rec.T
        rows.append(row)
    with open(args.out, "w", newline="") as fh:
        fh.write(f"# {metadata_line(cfg)}\n")
        export_traces_rows(fh, rows)
    if cfg["plot"] and rows and "max_local_time" in rows[0]:
        from .plots import histogram_svg
        svg = str(Path(args.out).with_suffix(".svg"))
        histogram_svg([row["max_local_time"] for row in rows], svg,
                      "max local time per run", "max L")
        print(f"figure: {svg}", file=sys.stderr)
    return 0


def export_traces_rows(fh, rows) -> None:
    cols = ["replicate", "mode", "horizon", "steps", "tau_rho", "U", "T",
            "max_local_time", "min_local_time", "covered"]
    w = csv.writer(fh)
    w.writerow(cols)
    for row in rows:
        w.writerow([row.get(c, "") for c in cols])


def cmd_levelsets_extract(args) -> int:
    cfg = resolve_config(args)
    if not args.out:
        raise ParameterError("levelsets extract needs --out")
    domain = _build(cfg)
    kind = cfg["kind"]
    scales = scale_sequences(int(cfg["N"]), float(cfg["theta"]),
                             float(cfg["lambda"]), kind)
    steps = steps_for_time(domain, scales.t_N)
    start = _start_vertex(domain, cfg["start"])
    radius = int(cfg["radius"])
    prof_r = radius if radius >= 0 else None
    logsq = math.log(int(cfg["N"])) ** 2
    masses, maxes, mins = [], [], []
    last = None
    for r in range(int(cfg["reps"])):
        f = run_walk(domain, WalkConfig(start=start, mode="discrete",
                                        horizon=steps, seed=int(cfg["seed"]),
                                        replicate=r))
        m = extract_level_measure(f, domain, scales, kind,
                                  profile_radius=prof_r, seed=int(cfg["seed"]))
        masses.append(m.total_mass)
        maxes.append(float(f.interior().max()) / logsq)
        mins.append(float(f.interior().min()) / logsq)
        last = m
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        fh.write(f"# {metadata_line(cfg)}\n")
        w = csv.writer(fh)
        w.writerow(["replicate", "total_mass", "max_L_over_logsq", "min_L_over_logsq"])
        for r, (ms, mx, mn) in enumerate(zip(masses, maxes, mins)):
            w.writerow([r, repr(ms), repr(mx), repr(mn)])
    atoms_path = out.with_name(out.stem + "_atoms.csv")
    export_measure_csv(last, atoms_path, metadata=metadata_line(cfg))
    q = np.percentile(masses, [25, 50, 75])
    summary = {
        "kind": kind, "N": int(cfg["N"]), "theta": float(cfg["theta"]),
        "lambda": float(cfg["lambda"]), "reps": int(cfg["reps"]),
        "seed": int(cfg["seed"]), "config": config_hash(cfg),
        "mass_quartiles": [float(v) for v in q],
        "median_max_L_over_logsq": float(np.median(maxes)),
        "median_min_L_over_logsq": float(np.median(mins)),
        "scales": {"t_N": scales.t_N, "a_N": scales.a_N, "W_N": scales.W_N,
                   "W_hat_N": scales.W_hat_N, "K_N": scales.K_N},
    }
    summary_path = out.with_suffix(".json")
    summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    if cfg["plot"]:
        from .plots import histogram_svg
        svg = str(out.with_suffix(".svg"))
        histogram_svg(masses, svg, f"{kind} measure mass over {cfg['reps']} runs",
                      "total mass")
        print(f"figure: {svg}", file=sys.stderr)
    print(f"summary: {summary_path}", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    overrides = {}
    for item in args.override or []:
        key, _, val = item.partition("=")
        overrides[key] = float(val)
    results = verify_suite(args.selector, seed=args.seed,
                           overrides=overrides or None)
    failed = 0
    for res in results:
        print(res.line())
        failed += not res.passed
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; flags override it")
    p.add_argument("--shape", choices=["unit-square", "rectangle", "disk", "polygon"])
    p.add_argument("--N", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--kind")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--start")
    p.add_argument("--radius", type=int)
    p.add_argument("--mode")
    p.add_argument("--horizon", type=float)
    p.add_argument("--plot", action="store_true", default=None)
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="walklab")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    dom = sub.add_parser("domain", help="lattice domain operations").add_subparsers(
        dest="action", required=True)
    p = dom.add_parser("build", help="build a lattice domain, emit JSON")
    _add_common(p)
    p.set_defaults(func=cmd_domain_build)

    grn = sub.add_parser("green", help="Green operator").add_subparsers(
        dest="action", required=True)
    p = grn.add_parser("compute", help="solve for the Green operator, emit binary")
    _add_common(p)
    p.set_defaults(func=cmd_green_compute)

    fld = sub.add_parser("field", help="Gaussian field sampling").add_subparsers(
        dest="action", required=True)
    p = fld.add_parser("sample", help="draw field replicates, emit CSV")
    _add_common(p)
    p.set_defaults(func=cmd_field_sample)

    wlk = sub.add_parser("walk", help="walk simulation").add_subparsers(
        dest="action", required=True)
    p = wlk.add_parser("run", help="simulate walks, emit trace CSV")
    _add_common(p)
    p.set_defaults(func=cmd_walk_run)

    lvl = sub.add_parser("levelsets", help="exceptional-point measures").add_subparsers(
        dest="action", required=True)
    p = lvl.add_parser("extract", help="run walks and extract point measures")
    _add_common(p)
    p.set_defaults(func=cmd_levelsets_extract)

    p = sub.add_parser("verify", help="run built-in verification checks")
    p.add_argument("selector", nargs="?", default="all",
                   help=f"all or one of: {', '.join(CHECKS)}")
    p.add_argument("--seed", type=int, default=20260826)
    p.add_argument("--override", action="append",
                   help="tolerance override, e.g. --override residual=1e-14")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if hasattr(args, "lambda_") and args.lambda_ is not None:
        setattr(args, "lambda", args.lambda_)
    try:
        return args.func(args)
    except WalkLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
