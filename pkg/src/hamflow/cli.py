"""Command-line entry point.

Each subcommand reads one flat key = value config document (--config),
applies flag overrides, echoes the full effective configuration next to its
outputs, and writes deterministic CSV / JSONL / SVG artifacts.  The worker
count can be overridden with the HAMFLOW_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments, io, rkhs, walk as walk_mod
from .basis import TorusPoint
from .config import COMMANDS, ExperimentConfig, parse_config, serialize_config
from .errors import HamflowError
from .experiments import ResultRow, ResultTable
from .field import sample_hamiltonian
from .flow import BumpFunction
from .rng import derive


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hamflow",
                                     description="Random Hamiltonian flows on the 2-torus")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", type=Path, default=None,
                         help="key = value configuration document")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--samples", type=int, default=None)
        cmd.add_argument("--regularity", type=str, default=None,
                         help="comma-separated list")
        cmd.add_argument("--out", type=str, default=None, help="output directory")
        cmd.add_argument("--plot", action="store_true", default=None)
    return parser


def _load_config(args) -> ExperimentConfig:
    text = args.config.read_text() if args.config else ""
    overrides = {
        "seed": args.seed,
        "samples": args.samples,
        "out": args.out,
        "plot": args.plot,
    }
    if args.regularity is not None:
        overrides["regularity"] = tuple(float(p) for p in args.regularity.split(",") if p.strip())
    return parse_config(text, command=args.command, overrides=overrides)


def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(serialize_config(cfg))
    return out


def _law(cfg: ExperimentConfig, r_index: int = 0):
    return experiments._law_for(cfg, cfg.regularity[r_index])


def _cmd_sample_field(cfg: ExperimentConfig) -> None:
    out = _outdir(cfg)
    rows = []
    records = []
    for r_index, regularity in enumerate(cfg.regularity):
        osc = experiments.oscillation_samples(cfg, r_index)
        se = osc.std(ddof=1) / np.sqrt(len(osc)) if len(osc) > 1 else 0.0
        rows.append(ResultRow("osc", regularity, float(osc.mean()), float(se), len(osc)))
        records.extend({"regularity": regularity, "sample": i, "osc": float(v)}
                       for i, v in enumerate(osc))
    io.write_table(ResultTable(rows=tuple(rows)), out / "field_osc.csv")
    io.write_records(records, out / "field_samples.jsonl")
    if cfg.plot:
        draw = sample_hamiltonian(_law(cfg), derive(cfg.seed, 0, 0))
        io.render_field_svg(draw, cfg.field_time, out / "field.svg", cfg.arrow_grid)
    print(f"wrote {out / 'field_osc.csv'}")


def _cmd_flow(cfg: ExperimentConfig) -> None:
    out = _outdir(cfg)
    curves = experiments.advected_samples(cfg, 0, cfg.samples)
    records = [{"sample": i, "vertices": c.vertices.tolist(), "winding": list(c.winding)}
               for i, c in enumerate(curves)]
    io.write_records(records, out / "curves.jsonl")
    if cfg.plot:
        io.render_curves_svg(curves, out / "curves.svg")
    print(f"wrote {out / 'curves.jsonl'} ({len(curves)} curves)")


def _cmd_intersections(cfg: ExperimentConfig) -> None:
    out = _outdir(cfg)
    table = experiments.run_intersections(cfg)
    io.write_table(table, out / "intersections.csv")
    if table.failures:
        io.write_records([{"regularity": r, "sample": i, "error": msg}
                          for (r, i, msg) in table.failures], out / "failures.jsonl")
    print(f"wrote {out / 'intersections.csv'} ({len(table.rows)} rows)")


def _cmd_diffusion(cfg: ExperimentConfig) -> None:
    out = _outdir(cfg)
    result = experiments.run_diffusion(cfg)
    io.write_records(
        [{"time": t, "chi_square": float(chi), "counts": counts.tolist()}
         for t, chi, counts in zip(result.times, result.chi_square, result.grid_counts)],
        out / "diffusion.jsonl")
    io.write_records(
        [{"sample": i, "chi_square": row.tolist()}
         for i, row in enumerate(result.per_sample_chi_square)],
        out / "diffusion_samples.jsonl")
    print(f"wrote {out / 'diffusion.jsonl'}")


def _cmd_random_walk(cfg: ExperimentConfig) -> None:
    out = _outdir(cfg)
    law = _law(cfg)
    records = []
    for w_index in range(cfg.samples):
        state = walk_mod.sample_walk(law, cfg.walk_steps, walk_index=w_index,
                                     settings=experiments._settings_for(cfg))
        traj = walk_mod.induced_point_walk(state, TorusPoint(*cfg.probe))
        records.append({"walk": w_index,
                        "trajectory": [[p.x, p.y] for p in traj]})
    io.write_records(records, out / "walks.jsonl")
    print(f"wrote {out / 'walks.jsonl'} ({cfg.samples} walks x {cfg.walk_steps} steps)")


def _cmd_rkhs_norm(cfg: ExperimentConfig) -> None:
    out = _outdir(cfg)
    rows = []
    records = []
    for r_index, regularity in enumerate(cfg.regularity):
        law = experiments._law_for(cfg, regularity)
        norms = []
        sums = []
        for i in range(cfg.samples):
            draw = sample_hamiltonian(law, derive(cfg.seed, r_index, i))
            table = rkhs.coefficient_expansion(draw)
            norms.append(rkhs.rkhs_norm(table, law.regularity))
            sums.append(rkhs.weighted_coefficient_sum(table, cfg.smoothing_eps))
            records.append({"regularity": regularity, "sample": i,
                            "rkhs_norm": norms[-1], "weighted_sum": sums[-1]})
        for label, vals in (("rkhs_norm", norms), ("weighted_sum", sums)):
            arr = np.asarray(vals)
            se = arr.std(ddof=1) / np.sqrt(len(arr)) if len(arr) > 1 else 0.0
            rows.append(ResultRow(label, regularity, float(arr.mean()), float(se), len(arr)))
    io.write_table(ResultTable(rows=tuple(rows)), out / "rkhs.csv")
    io.write_records(records, out / "rkhs_samples.jsonl")
    print(f"wrote {out / 'rkhs.csv'}")


def _cmd_tails(cfg: ExperimentConfig) -> None:
    out = _outdir(cfg)
    stats = experiments.run_tail_stats(cfg)
    io.write_records(
        [{"u": float(u), "survival": float(s)}
         for u, s in zip(stats.thresholds, stats.survival)],
        out / "tail_survival.jsonl")
    io.write_records([{
        "regularity": stats.regularity, "mean": stats.mean,
        "tail_scale": stats.tail_scale, "heldout_u": stats.heldout_u,
        "heldout_exceedance": stats.heldout_exceedance,
        "heldout_bound": stats.heldout_bound, "bound_holds": stats.bound_holds,
    }], out / "tail_fit.jsonl")
    if cfg.plot:
        io.render_histogram_svg(stats.thresholds, out / "tails.svg",
                                title="oscillation exceedances")
    print(f"wrote {out / 'tail_fit.jsonl'} (bound_holds={stats.bound_holds})")


def _cmd_concentration(cfg: ExperimentConfig) -> None:
    out = _outdir(cfg)
    table = experiments.run_concentration(cfg)
    io.write_table(table, out / "concentration.csv")
    print(f"wrote {out / 'concentration.csv'}")


def _cmd_inversion(cfg: ExperimentConfig) -> None:
    out = _outdir(cfg)
    result = experiments.run_inversion_test(cfg)
    io.write_records([{
        "statistic": result.statistic, "p_value": result.p_value,
        "level": result.level, "passed": result.passed,
    }], out / "inversion.jsonl")
    io.write_records([{"branch": "forward", "sample": i, "displacement": float(d)}
                      for i, d in enumerate(result.forward)]
                     + [{"branch": "inverse", "sample": i, "displacement": float(d)}
                        for i, d in enumerate(result.inverse)],
                     out / "inversion_samples.jsonl")
    print(f"wrote {out / 'inversion.jsonl'} (passed={result.passed})")


_HANDLERS = {
    "sample-field": _cmd_sample_field,
    "flow": _cmd_flow,
    "diffusion": _cmd_diffusion,
    "intersections": _cmd_intersections,
    "random-walk": _cmd_random_walk,
    "rkhs-norm": _cmd_rkhs_norm,
    "tails": _cmd_tails,
    "concentration": _cmd_concentration,
    "inversion": _cmd_inversion,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        _HANDLERS[args.command](cfg)
    except HamflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
