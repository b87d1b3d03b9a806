"""Batch command-line front end.

Subcommands:

    evaluate        score one design: mass, workspace radius, stiffness
                    indices, dexterity, constraint table -> JSON report
    optimize        run the genetic algorithm -> pareto.csv, history.csv,
                    fronts_by_architecture.csv, run.json
    sweep           re-emit one architecture's front as a plot-ready CSV
    print-defaults  dump the fully documented default configuration

Exit codes: 0 success, 2 config/usage error, 3 infeasible single design,
4 empty archive after the full budget, 5 empty requested front.
All CSV output uses LF line endings, '.' decimals and no trailing
separators; reruns with identical config and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys

from . import moga
from .errors import ConfigError, PpmError
from .kinematics import HOME_POSE
from .model import Architecture, DesignVector, mass, validate
from .performance import constraints_batch
from .runconfig import RunConfig, default_config_yaml, load_config
from .workspace import WorkspaceSpec, grid_array, max_regular_workspace_detail

PARETO_HEADER = ["d", "R", "r", "L_b", "r_j", "r_p", "mass_kg", "R_w_m",
                 "L_c_m", "seed"]
SWEEP_HEADER = ["R_w_m", "R", "r", "L_b", "r_j", "r_p"]

#: Provenance note embedded in every optimize run manifest.
OPTIMIZER_NOTE = ("reconstructed MOGA: roulette over directional crossover "
                  "0.5 / selection-copy 0.05 / bit mutation 0.1 / one-point "
                  "crossover 0.35, feasibility-first binary tournament, "
                  "elitist non-dominated archive")

_DESIGN_KEYS = ("d", "R", "r", "L_b", "r_j", "r_p")


def _num(v: float) -> str:
    """Deterministic shortest-round-trip decimal form."""
    return repr(float(v))


def parse_design(text: str) -> DesignVector:
    """Parse 'd=1,R=1.412,r=0.319,L_b=0.62,r_j=0.026,r_p=0.023'."""
    fields = {}
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError("design", f"expected key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in _DESIGN_KEYS:
            raise ConfigError(f"design.{key}", "unknown design variable")
        try:
            fields[key] = float(value)
        except ValueError:
            raise ConfigError(f"design.{key}", f"bad number {value!r}")
    missing = [k for k in _DESIGN_KEYS if k not in fields]
    if missing:
        raise ConfigError(f"design.{missing[0]}", "missing design variable")
    try:
        arch = Architecture(int(fields["d"]))
    except ValueError:
        raise ConfigError("design.d", "architecture must be 1, 2 or 3")
    return DesignVector(arch, fields["R"], fields["r"], fields["L_b"],
                        fields["r_j"], fields["r_p"])


def _design_row(design: DesignVector) -> dict:
    d, big_r, r, lb, rj, rp = design.as_tuple()
    return {"d": d, "R": big_r, "r": r, "L_b": lb, "r_j": rj, "r_p": rp}


def _report_dict(report) -> dict | None:
    return None if report is None else dataclasses.asdict(report)


def cmd_evaluate(cfg: RunConfig, design: DesignVector, out_path: str) -> int:
    """Write the single-design evaluation report; 0 feasible, 3 not."""
    doc: dict = {
        "design": _design_row(design),
        "working_mode": [b.name for b in cfg.ctx.mode],
        "stiffness_thresholds": dict(zip(("k_xy", "k_z", "k_phiz"),
                                         cfg.ctx.stiffness_limits())),
        "dexterity_threshold": cfg.ctx.dexterity.threshold,
    }
    feasible = False
    try:
        validate(design, cfg.bounds)
    except PpmError as exc:
        doc["error"] = str(exc)
        doc["mass_kg"] = mass(design, cfg.ctx.material)
    else:
        doc["error"] = None
        doc["mass_kg"] = mass(design, cfg.ctx.material)
        res = max_regular_workspace_detail(design, cfg.grid, cfg.ctx,
                                           cfg.bisection_tol, cfg.center,
                                           cfg.delta_phi)
        feasible = res.radius > 0.0
        doc["max_workspace_radius_m"] = res.radius
        doc["characteristic_length_m"] = (None if math.isnan(res.characteristic_length)
                                          else res.characteristic_length)
        home = constraints_batch(design, HOME_POSE.as_array()[None, :], cfg.ctx)
        doc["home"] = {
            "constraints": _report_dict(home.report(0)),
            "stiffness_indices": {"k_xy": float(home.kxy[0]),
                                  "k_z": float(home.kz[0]),
                                  "k_phiz": float(home.kphiz[0])},
        }
        spec = WorkspaceSpec(res.radius, cfg.center, cfg.delta_phi)
        grid_res = constraints_batch(design, grid_array(spec, cfg.grid), cfg.ctx)
        doc["workspace"] = {
            "feasible": feasible,
            "min_inverse_condition": float(grid_res.kinv.min()),
            "min_k_xy": float(grid_res.kxy.min()),
            "min_k_z": float(grid_res.kz.min()),
            "min_k_phiz": float(grid_res.kphiz.min()),
            "limiting_pose": (None if res.limiting_pose is None else
                              {"p_x": res.limiting_pose.p_x,
                               "p_y": res.limiting_pose.p_y,
                               "phi": res.limiting_pose.phi}),
            "limiting_constraints": _report_dict(res.limiting_report),
        }
    doc["feasible"] = feasible
    _write_text(out_path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"report written to {out_path}"
          + ("" if feasible else " (design infeasible)"))
    return 0 if feasible else 3


def _write_text(path: str, content: str):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)


def _pareto_rows(entries, seed: int) -> list[list[str]]:
    rows = []
    for e in entries:
        d, big_r, r, lb, rj, rp = e.design.as_tuple()
        lc = e.characteristic_length
        rows.append([str(d), _num(big_r), _num(r), _num(lb), _num(rj),
                     _num(rp), _num(e.mass), _num(e.r_w),
                     ("nan" if math.isnan(lc) else _num(lc)), str(seed)])
    return rows


def _write_csv(path: str, header: list[str], rows: list[list[str]]):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_optimize(cfg: RunConfig, out_dir: str) -> int:
    """Run the GA and export the archive, history and per-arch fronts."""
    def progress(stats):
        print(f"generation {stats.generation:4d}: archive hypervolume "
              f"{stats.hypervolume:.6g}, {stats.n_feasible} feasible",
              file=sys.stderr)

    result = moga.evolve(cfg.moga, cfg.bounds, cfg.grid, cfg.ctx,
                         cfg.bisection_tol, threads=cfg.threads,
                         progress=progress)
    os.makedirs(out_dir, exist_ok=True)

    _write_csv(os.path.join(out_dir, "pareto.csv"), PARETO_HEADER,
               _pareto_rows(result.archive.entries, cfg.moga.seed))
    _write_csv(os.path.join(out_dir, "history.csv"),
               ["generation", "hypervolume", "n_feasible"],
               [[str(h.generation), _num(h.hypervolume), str(h.n_feasible)]
                for h in result.history])

    fronts = moga.per_architecture_fronts(list(result.evaluations))
    front_rows: list[list[str]] = []
    for arch in Architecture:
        front_rows.extend(_pareto_rows(fronts[arch].entries, cfg.moga.seed))
    _write_csv(os.path.join(out_dir, "fronts_by_architecture.csv"),
               PARETO_HEADER, front_rows)

    manifest = {
        "seed": cfg.moga.seed,
        "population": cfg.moga.population,
        "generations": cfg.moga.generations,
        "total_evaluations": cfg.moga.population * cfg.moga.generations,
        "doe": cfg.moga.doe,
        "optimizer": OPTIMIZER_NOTE,
        "working_mode": [b.name for b in cfg.ctx.mode],
        "archive_size": len(result.archive),
        "n_feasible_total": int(sum(e.feasible for e in result.evaluations)),
    }
    _write_text(os.path.join(out_dir, "run.json"),
                json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    if len(result.archive) == 0:
        print("no feasible design found within the evaluation budget",
              file=sys.stderr)
        return 4
    print(f"archive of {len(result.archive)} designs written to {out_dir}")
    return 0


def _parse_architecture(text: str) -> Architecture:
    name = text.strip().upper()
    if name in Architecture.__members__:
        return Architecture[name]
    try:
        return Architecture(int(name))
    except ValueError:
        raise ConfigError("architecture", f"unknown architecture {text!r}")


def cmd_sweep(source: str, arch: Architecture, out_path: str) -> int:
    """Extract one architecture's front for plotting R_w trends."""
    path = source
    if os.path.isdir(source):
        path = os.path.join(source, "fronts_by_architecture.csv")
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            rows = [row for row in reader if int(row["d"]) == int(arch)]
    except OSError as exc:
        raise ConfigError(path, f"cannot read archive: {exc}")
    except (KeyError, ValueError, TypeError):
        raise ConfigError(path, "not a pareto/front CSV (missing columns)")
    if not rows:
        print(f"front for {arch.name} is empty", file=sys.stderr)
        return 5
    rows.sort(key=lambda r: float(r["R_w_m"]))
    out_rows = [[row["R_w_m"], row["R"], row["r"], row["L_b"], row["r_j"],
                 row["r_p"]] for row in rows]
    _write_csv(out_path, SWEEP_HEADER, out_rows)
    print(f"{len(out_rows)} front designs written to {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppmopt",
        description="Evaluate and optimize planar parallel manipulator designs")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="score a single design")
    p_eval.add_argument("--config", default=None, help="YAML run config")
    p_eval.add_argument("--design", required=True,
                        help="d=..,R=..,r=..,L_b=..,r_j=..,r_p=..")
    p_eval.add_argument("--out", default="report.json")

    p_opt = sub.add_parser("optimize", help="run the genetic algorithm")
    p_opt.add_argument("--config", default=None)
    p_opt.add_argument("--seed", type=int, default=None,
                       help="override moga.seed")
    p_opt.add_argument("--out", default=None, help="output directory")
    p_opt.add_argument("--threads", type=int, default=None,
                       help="fitness workers (0 = all cores)")

    p_sweep = sub.add_parser("sweep", help="per-architecture front CSV")
    p_sweep.add_argument("--from", dest="source", required=True,
                         help="optimize output dir or front CSV")
    p_sweep.add_argument("--architecture", required=True,
                         help="PRR | RPR | RRR | 1 | 2 | 3")
    p_sweep.add_argument("--out", default="sweep.csv")

    sub.add_parser("print-defaults", help="dump the default configuration")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "print-defaults":
            sys.stdout.write(default_config_yaml())
            return 0
        if args.command == "evaluate":
            cfg = load_config(args.config)
            design = parse_design(args.design)
            return cmd_evaluate(cfg, design, args.out)
        if args.command == "optimize":
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg = dataclasses.replace(
                    cfg, moga=dataclasses.replace(cfg.moga, seed=args.seed))
            if args.threads is not None:
                cfg = dataclasses.replace(cfg, threads=args.threads)
            return cmd_optimize(cfg, args.out or cfg.output_dir)
        if args.command == "sweep":
            return cmd_sweep(args.source, _parse_architecture(args.architecture),
                             args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
