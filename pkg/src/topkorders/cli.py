"""Command-line front end: fit / eval / sample / cv / stats / assign.

Exit codes: 0 success, 2 input error, 3 numeric failure. Every subcommand
is deterministic given its full flag set (seeds included) at --workers 1.
"""

import argparse
import json
import sys

import numpy as np

from . import assignment as asg
from . import dataio, evaluation
from .estimation import (
    ALL_VARIANTS,
    FitConfig,
    NonFiniteLossError,
    fit,
    grid_search,
)
from .orders import Dataset

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _add_fit_flags(p):
    p.add_argument("--model", required=True, choices=ALL_VARIANTS)
    p.add_argument("--covariates", help="agent_id,item_id,f1,... covariate table")
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--lambda-laplacian", type=float, default=0.0)
    p.add_argument("--lambda-l2", type=float, default=1e-5)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--eps-opt", type=float, default=1e-8)
    p.add_argument("--max-epochs", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--batch-size", default="full")
    p.add_argument("--seed", type=int, default=0)


def _fit_config(args) -> FitConfig:
    batch = args.batch_size
    if batch != "full":
        batch = int(batch)
    return FitConfig(
        learning_rate=args.lr,
        beta1=args.beta1,
        beta2=args.beta2,
        epsilon_opt=args.eps_opt,
        lambda_l2=args.lambda_l2,
        lambda_laplacian=args.lambda_laplacian,
        K=args.K,
        max_epochs=args.max_epochs,
        tol=args.tol,
        batch_size=batch,
        seed=args.seed,
    )


def _load_data(args) -> Dataset:
    D = dataio.parse_preflib(args.data)
    if getattr(args, "covariates", None):
        cov, _, missing = dataio.load_covariates(args.covariates, D.universe)
        if missing:
            print(f"covariates: {missing} missing (agent, item) pairs zero-filled")
        D = Dataset(D.universe, D.orders, covariates=cov)
    return D


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="topkorders",
        description="Fit, evaluate, and sample top-k partial order models.",
    )
    ap.add_argument("--workers", type=int, default=1,
                    help="parallelism cap; 1 guarantees bit-reproducibility")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset summary statistics")
    p.add_argument("--data", required=True, help="preflib ballot file")
    p.add_argument("--out", help="also write the block to this file")

    p = sub.add_parser("fit", help="fit a model and write a checkpoint")
    p.add_argument("--data", required=True)
    _add_fit_flags(p)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--trace", help="fit-trace file (epoch, objective, grad-norm)")

    p = sub.add_parser("eval", help="held-out NLL and synthetic-replicate report")
    p.add_argument("--model-ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--covariates")
    p.add_argument("--reps", type=int, default=0, help="synthetic replicates N")
    p.add_argument("--n", type=int, default=0, help="orders per replicate (default: |data|)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--condition-nonempty", action="store_true",
                   help="condition augmented likelihood on k >= 1")
    p.add_argument("--group-map", help="item_id,group_label file for demand bucketing")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("sample", help="write synthetic replicate datasets")
    p.add_argument("--model-ckpt", required=True)
    p.add_argument("--covariates")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-empty", action="store_true",
                   help="rejection-resample empty augmented draws")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("cv", help="k-fold CV grid search over (K, lambda_L)")
    p.add_argument("--data", required=True)
    _add_fit_flags(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--grid", required=True, help='e.g. "K=1,5,10;lapl=0,1e-3"')
    p.add_argument("--out", help="write the CV table to this file")

    p = sub.add_parser("assign", help="deferred-acceptance assignment harness")
    p.add_argument("--preferences", required=True, help="preflib ballot file")
    p.add_argument("--capacities", required=True, help="program_id,capacity file")
    p.add_argument("--seed", type=int, default=0, help="priority tie-break seed")
    p.add_argument("--synthetic-from", help="checkpoint to sample synthetic preferences")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--out", help="write the outcome table to this file")
    return ap


def _parse_grid(spec: str):
    parts = dict(
        kv.split("=", 1) for kv in (s.strip() for s in spec.split(";")) if kv
    )
    if "K" not in parts or "lapl" not in parts:
        raise ValueError(f'malformed grid {spec!r}; expected "K=...;lapl=..."')
    Ks = [int(v) for v in parts["K"].split(",")]
    lapls = [float(v) for v in parts["lapl"].split(",")]
    return Ks, lapls


def _read_capacities(path):
    caps = {}
    with open(path, encoding="utf-8") as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln or ln.startswith("#") or ln.startswith("program_id"):
                continue
            pid, cap = ln.split(",")
            caps[int(pid)] = int(cap)
    return caps


def _read_group_map(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln or ln.startswith("item_id"):
                continue
            item, group = ln.split(",", 1)
            out[int(item)] = group.strip()
    return out


def cmd_stats(args) -> int:
    D = dataio.parse_preflib(args.data)
    block = dataio.summary_stats(D).format()
    print(block)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(block + "\n")
    return EXIT_OK


def cmd_fit(args) -> int:
    if args.model == "c-ci" and not args.covariates:
        raise ValueError("--model c-ci requires --covariates")
    D = _load_data(args)
    cfg = _fit_config(args)
    result = fit(args.model, D, cfg)
    dataio.save_checkpoint(
        result.model,
        args.out,
        fit_config=_cfg_echo(cfg),
        data_hash=dataio.dataset_hash(D),
        seed=cfg.seed,
    )
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write("epoch\tobjective\tgrad_norm\n")
            for epoch, obj, gnorm in result.trace:
                fh.write(f"{epoch}\t{obj!r}\t{gnorm!r}\n")
    status = "converged" if result.converged else "max-epochs"
    print(
        f"fit {args.model}: {status} after {result.epochs_run} epochs,"
        f" objective {result.final_objective:.6f}"
    )
    return EXIT_OK


def _cfg_echo(cfg: FitConfig) -> dict:
    return {
        "learning_rate": cfg.learning_rate,
        "beta1": cfg.beta1,
        "beta2": cfg.beta2,
        "epsilon_opt": cfg.epsilon_opt,
        "lambda_l2": cfg.lambda_l2,
        "lambda_laplacian": cfg.lambda_laplacian,
        "K": cfg.K,
        "max_epochs": cfg.max_epochs,
        "tol": cfg.tol,
        "batch_size": cfg.batch_size,
        "seed": cfg.seed,
    }


def cmd_eval(args) -> int:
    model, _ = dataio.load_checkpoint(args.model_ckpt)
    D = _load_data(args)
    n_per = args.n or D.n
    group_map = _read_group_map(args.group_map) if args.group_map else None
    report = evaluation.build_eval_report(
        model_tag=model.variant,
        model=model,
        D_test=D,
        n_per_replicate=n_per if args.reps else 0,
        n_replicates=args.reps,
        seed=args.seed,
        covariates=D.covariates,
        condition_nonempty=args.condition_nonempty,
    )
    import os

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "eval_report.json"), "w", encoding="utf-8") as fh:
        json.dump(_report_doc(report), fh, indent=1, sort_keys=True)
        fh.write("\n")
    if args.reps:
        evaluation.emit_plot_data([report], args.out, group_map)
    print(f"test NLL ({model.variant}): {report.test.nll:.6f}")
    return EXIT_OK


def _report_doc(r: evaluation.EvalReport) -> dict:
    doc = {
        "model": r.model_tag,
        "test_nll": r.test.nll,
        "n_infinite": r.test.n_infinite,
    }
    if r.lengths is not None:
        doc["length_stats"] = {
            "mean_of_means": r.lengths.mean_of_means,
            "std_of_means": r.lengths.std_of_means,
            "mean_of_stds": r.lengths.mean_of_stds,
            "true_mean": r.lengths.true_mean,
            "true_std": r.lengths.true_std,
        }
        doc["tv_length"] = r.tv_length
        doc["demand"] = {
            "true_first_position": list(r.demand_true.first_position),
            "true_overall": list(r.demand_true.overall),
            "synthetic_first_position": list(r.demand_synthetic.first_position),
            "synthetic_overall": list(r.demand_synthetic.overall),
            "synthetic_empty_share": r.demand_synthetic.empty_share,
        }
    return doc


def cmd_sample(args) -> int:
    import os

    model, _ = dataio.load_checkpoint(args.model_ckpt)
    covariates = None
    if args.covariates:
        cov, _, _ = dataio.load_covariates(args.covariates, model.universe)
        covariates = cov
    reps = evaluation.replicate_sample(
        model, args.n, args.reps, args.seed, covariates, no_empty=args.no_empty
    )
    os.makedirs(args.out, exist_ok=True)
    for r, rep in enumerate(reps):
        dataio.write_dataset(rep, os.path.join(args.out, f"replicate_{r:03d}.txt"))
    print(f"wrote {len(reps)} replicates of {args.n} orders to {args.out}")
    return EXIT_OK


def cmd_cv(args) -> int:
    D = _load_data(args)
    cfg = _fit_config(args)
    Ks, lapls = _parse_grid(args.grid)
    (best_K, best_lapl), table = grid_search(
        args.model, D, Ks, lapls, cfg, folds=args.folds
    )
    lines = ["K\tlambda_laplacian\tmean_val_nll"]
    for K, lapl, mean_nll in table:
        lines.append(f"{K}\t{lapl!r}\t{mean_nll!r}")
    lines.append(f"best\tK={best_K}\tlambda_laplacian={best_lapl!r}")
    block = "\n".join(lines)
    print(block)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(block + "\n")
    return EXIT_OK


def cmd_assign(args) -> int:
    D = dataio.parse_preflib(args.preferences)
    caps_by_id = _read_capacities(args.capacities)
    capacities = [caps_by_id.get(p, 0) for p in range(1, D.universe.m + 1)]
    priorities = asg.uniform_priorities(D.n, D.universe.m, args.seed)

    def run(prefs):
        market = asg.Market(tuple(prefs), tuple(capacities), priorities)
        matching = asg.deferred_acceptance(market)
        return asg.outcome_stats(matching, prefs)

    rows = [("true", run(D.orders))]
    if args.synthetic_from:
        model, _ = dataio.load_checkpoint(args.synthetic_from)
        reps = evaluation.replicate_sample(
            model, D.n, args.reps, args.seed, no_empty=True
        )
        for r, rep in enumerate(reps):
            rows.append((f"synthetic_{r:03d}", run(rep.orders)))
    lines = ["source\ttop1\ttop3\tany_listed"]
    for tag, rates in rows:
        lines.append(f"{tag}\t{rates.top1!r}\t{rates.top3!r}\t{rates.any_listed!r}")
    if len(rows) > 1:
        arr = np.array([[r.top1, r.top3, r.any_listed] for _, r in rows[1:]])
        mean = [float(v) for v in arr.mean(axis=0)]
        std = [float(v) for v in arr.std(axis=0)]
        lines.append(f"synthetic_mean\t{mean[0]!r}\t{mean[1]!r}\t{mean[2]!r}")
        lines.append(f"synthetic_std\t{std[0]!r}\t{std[1]!r}\t{std[2]!r}")
    block = "\n".join(lines)
    print(block)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(block + "\n")
    return EXIT_OK


COMMANDS = {
    "stats": cmd_stats,
    "fit": cmd_fit,
    "eval": cmd_eval,
    "sample": cmd_sample,
    "cv": cmd_cv,
    "assign": cmd_assign,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NonFiniteLossError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
