"""Command line entry point.

    noisy-adiabatic run configs/model_a.ini --traj 2000 --seed 3
    noisy-adiabatic scan-time configs/fig1_linear_sweep.ini
    noisy-adiabatic scan-noise configs/fig3_model_a_noise.ini --figures
    noisy-adiabatic speedup configs/fig4_model_b_speedup.ini

Exit codes: 0 success, 2 configuration error, 3 numerical refusal.
"""

from __future__ import annotations

import argparse
import sys

from ..eigenframe import GapClosureError
from ..ensemble import EnsembleResult, metrics
from ..models import ModelError
from ..noise import UnsupportedNoiseError
from ..solver import ResolutionError
from . import output
from .config import ConfigError, load_config
from .runs import run_experiment, scan_noise, scan_passage_time, speedup_report

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _header(cfg):
    head = {
        "config": cfg.source,
        "model": cfg.model.kind.value,
        "noise": cfg.noise.kind.value,
        "gamma": cfg.noise.gamma,
        "method": cfg.solver.method.value,
        "steps": cfg.solver.steps,
        "t_end": cfg.solver.t_end,
        "n_traj": cfg.n_traj,
        "base_seed": cfg.base_seed,
    }
    if cfg.paper_j:
        head["paper_J_label"] = cfg.paper_j
    return head


def cmd_run(cfg):
    res = run_experiment(cfg)
    stem = cfg.out_dir / cfg.prefix
    summary = _header(cfg)
    summary["metrics"] = metrics(res)
    if isinstance(res, EnsembleResult):
        files = [output.write_ensemble(f"{stem}_ensemble.csv", res)]
        if res.purity is not None:
            summary["final_purity"] = float(res.purity[-1])
        fig = "ensemble_figure"
    else:
        files = [output.write_trajectory(f"{stem}_trajectory.csv", res)]
        fig = "trajectory_figure"
    if cfg.figures:
        from . import figures
        files.append(getattr(figures, fig)(res, f"{stem}.png"))
    return summary, files


def cmd_scan_time(cfg):
    rep = scan_passage_time(cfg)
    stem = cfg.out_dir / cfg.prefix
    files = [output.write_rows(f"{stem}_scan_time.csv", rep.rows)]
    summary = _header(cfg)
    summary.update(target=rep.target, threshold_T=rep.threshold, threshold_bracketed=rep.bracketed,
                   strictly_increasing=rep.strictly_increasing(), rows=rep.rows)
    if cfg.figures:
        from . import figures
        files.append(figures.time_scan_figure(rep, f"{stem}_scan_time.png"))
    return summary, files


def cmd_scan_noise(cfg):
    rep = scan_noise(cfg)
    stem = cfg.out_dir / cfg.prefix
    files = [output.write_rows(f"{stem}_scan_noise.csv", rep.rows)]
    for row, ens in zip(rep.rows, rep.ensembles):
        files.append(output.write_ensemble(f"{stem}_gamma{row['gamma']:g}_ensemble.csv", ens))
    summary = _header(cfg)
    summary.update(monotone=rep.monotone, saturation_gamma=rep.saturation_gamma,
                   steps=rep.steps(), rows=rep.rows)
    if cfg.figures:
        from . import figures
        files.append(figures.noise_scan_figure(rep, f"{stem}_scan_noise.png"))
    return summary, files


def cmd_speedup(cfg):
    rep = speedup_report(cfg)
    summary = _header(cfg)
    summary.update(target=rep.target, saturating_gamma=rep.gamma, T_free=rep.T_free,
                   T_noisy=rep.T_noisy, ratio=rep.ratio, reachable=rep.reachable)
    return summary, []


COMMANDS = {
    "run": cmd_run,
    "scan-time": cmd_scan_time,
    "scan-noise": cmd_scan_noise,
    "speedup": cmd_speedup,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="noisy-adiabatic",
                                 description="Target-eigenstate dynamics under dephasing noise")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config")
        p.add_argument("--seed", type=int, default=None, help="base seed for noise sub-streams")
        p.add_argument("--steps", type=int, default=None, help="solver steps")
        p.add_argument("--traj", type=int, default=None, help="number of trajectories")
        p.add_argument("--out-dir", default=None)
        p.add_argument("--figures", action="store_true", help="also write PNG figures (needs matplotlib)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config).with_overrides(args.seed, args.steps, args.traj,
                                                      args.out_dir, args.figures)
        summary, files = COMMANDS[args.command](cfg)
    except ResolutionError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except GapClosureError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ModelError, UnsupportedNoiseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeError as exc:  # figures requested without matplotlib
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    summary["command"] = args.command
    files.append(output.write_summary(cfg.out_dir / f"{cfg.prefix}_{args.command}_summary.json", summary))
    m = summary.get("metrics")
    if m:
        print(" ".join(f"{k}={v:.6g}" for k, v in m.items()))
    for key in ("threshold_T", "saturation_gamma", "ratio"):
        if key in summary:
            print(f"{key}={summary[key]}")
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
