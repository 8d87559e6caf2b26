"""Command-line interface: ``relboost {synth,train,predict,evaluate,ablate}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .boosting import load_model, save_model
from .collective import write_delta_trace
from .graph_store import load_graph, write_graph
from .harness import (ABLATION_MASKS, DEFAULT_FRACTIONS, Params, cell_known_mask, cell_seed,
                      predict_model, rmse, run_ablation, run_experiment, train_model)
from .mgb import write_training_log
from .relfeat import RELATIONAL, parse_mask
from .synthgen import SynthConfig, generate


class CliError(Exception):
    pass


def _fractions(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad fraction list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty fraction list")
    return vals


def _add_graph(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nodes", required=True, help="nodes CSV (id,y,x1..xp)")
    p.add_argument("--edges", required=True, help="edges CSV (src,dst)")


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trees", type=int, default=10, help="boosting stages M after the initial tree")
    p.add_argument("--leaves", type=int, default=5, help="max leaves per tree")
    p.add_argument("--ci-iters", type=int, default=50, help="max collective-inference sweeps")
    p.add_argument("--trials", type=int, default=3, help="CI trials per MGB stage")
    p.add_argument("--known-frac", type=float, default=0.8, help="labeled share in each CI trial")
    p.add_argument("--seed", type=int, default=0)


def _add_cell(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fraction", type=float, default=None,
                   help="reproduce one evaluation cell: training fraction")
    p.add_argument("--fold", type=int, default=0, help="starting fold of the cell")
    p.add_argument("--folds", type=int, default=5)


def _params(a) -> Params:
    if a.trees < 0:
        raise CliError("--trees must be non-negative")
    if a.leaves < 1:
        raise CliError("--leaves must be at least 1")
    if a.ci_iters < 1:
        raise CliError("--ci-iters must be at least 1")
    if a.trials < 1:
        raise CliError("--trials must be at least 1")
    if not 0.0 < a.known_frac < 1.0:
        raise CliError("--known-frac must lie strictly between 0 and 1")
    return Params(a.trees, a.leaves, a.ci_iters, a.trials, a.known_frac)


def _observed(a):
    """Graph as seen by the model plus the seed to use for it."""
    g = load_graph(a.nodes, a.edges)
    if a.fraction is None:
        return g, a.seed
    if np.isnan(g.y).any():
        raise CliError("--fraction needs a fully labeled graph")
    if not 0 <= a.fold < a.folds:
        raise CliError(f"--fold must lie in [0, {a.folds})")
    known = cell_known_mask(g, a.folds, a.seed, a.fraction, a.fold)
    return g.hide_labels(~known), cell_seed(a.seed, a.fraction, a.fold)


def cmd_synth(a) -> None:
    cfg = SynthConfig(n=a.n, avg_degree=a.avg_degree, clustering_target=a.clustering,
                      edge_label_corr_target=a.corr, skew=not a.no_skew, p=a.p,
                      attr_noise=a.attr_noise, seed=a.seed)
    g, stats = generate(cfg)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    write_graph(g, out / "nodes.csv", out / "edges.csv")
    (out / "stats.json").write_text(stats.to_json() + "\n")
    print(f"wrote {g.n} nodes, {g.n_edges} edges to {out} "
          f"(degree {stats.avg_degree:.3f}, clustering {stats.clustering:.3f}, r {stats.edge_corr:.4f})")


def cmd_train(a) -> None:
    params = _params(a)
    g_obs, seed = _observed(a)
    relational = parse_mask(a.mask) if a.mask else (("rf1",) if a.model == "rgb" else RELATIONAL)
    if a.model == "rgb" and relational != ("rf1",):
        raise CliError("rgb uses the fixed rf1 schema; --mask applies to mgb")
    if g_obs.known_nodes.size == 0:
        raise CliError("graph has no labeled nodes to train on")
    model = train_model(g_obs, a.model.upper(), params, seed, relational)
    save_model(model, a.out)
    if a.log and model.model_kind == "MGB":
        write_training_log(model, a.log)
    print(f"saved {model.model_kind} model with {len(model.stages)} trees to {a.out}")


def cmd_predict(a) -> None:
    params = Params(itr=a.ci_iters)
    if a.ci_iters < 1:
        raise CliError("--ci-iters must be at least 1")
    g_obs, seed = _observed(a)
    model = load_model(a.model_file)
    res = predict_model(g_obs, model, params, seed)
    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "prediction"])
        for i, v in zip(res.nodes, res.predictions):
            w.writerow([int(g_obs.ids[i]), repr(float(v))])
    if a.log:
        write_delta_trace(res, a.log)
    msg = f"predicted {res.nodes.size} nodes"
    if model.model_kind != "GB":
        msg += f" ({res.sweeps} sweeps, {'converged' if res.converged else 'not converged'})"
    if a.fraction is not None:
        g = load_graph(a.nodes, a.edges)
        msg += f"; rmse {rmse(res.predictions, g.y[res.nodes])!r}"
    print(msg)


def _write_report(rep, a) -> None:
    rep.write_csv(a.out)
    if a.plot:
        rep.write_plot_csv(a.plot)
    for frac, label, mean, sd in rep.aggregate():
        print(f"{frac:<5} {label:<16} mean_rmse={mean:.6g} std={sd:.6g}")
    bad = [k for k, d in rep.diagnostics.items() if not d["converged"]]
    if bad:
        print(f"{len(bad)} inference run(s) did not converge within --ci-iters")


def cmd_evaluate(a) -> None:
    params = _params(a)
    g = load_graph(a.nodes, a.edges)
    models = tuple(m.strip().upper() for m in a.models.split(",") if m.strip())
    masks = {"MGB": list(a.masks.split(";"))} if a.masks else None
    rep = run_experiment(g, models, a.fractions, a.folds, params, a.seed, masks,
                         a.audit, a.workers)
    _write_report(rep, a)


def cmd_ablate(a) -> None:
    params = _params(a)
    g = load_graph(a.nodes, a.edges)
    masks = a.masks.split(";") if a.masks else list(ABLATION_MASKS)
    rep = run_ablation(g, masks, params, a.seed, a.fractions, a.folds, a.audit, a.workers)
    _write_report(rep, a)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relboost", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic attributed graph")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--avg-degree", type=float, default=19.727)
    p.add_argument("--clustering", type=float, default=0.53947)
    p.add_argument("--corr", type=float, default=0.22699)
    p.add_argument("--p", type=int, default=29)
    p.add_argument("--attr-noise", type=float, default=0.2)
    p.add_argument("--no-skew", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit a model on the labeled nodes")
    _add_graph(p)
    _add_params(p)
    _add_cell(p)
    p.add_argument("--model", choices=("gb", "rgb", "mgb"), default="mgb")
    p.add_argument("--mask", default=None, help="relational features for mgb, e.g. all, rf1+rf4")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--log", default=None, help="per-stage training log CSV (mgb)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict the unlabeled nodes")
    _add_graph(p)
    _add_cell(p)
    p.add_argument("--model-file", required=True)
    p.add_argument("--ci-iters", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="predictions CSV (id,prediction)")
    p.add_argument("--log", default=None, help="per-sweep delta trace CSV")
    p.set_defaults(func=cmd_predict)

    for name, fn, helptext in (("evaluate", cmd_evaluate, "cross-validated model comparison"),
                               ("ablate", cmd_ablate, "MGB relational-feature ablation")):
        p = sub.add_parser(name, help=helptext)
        _add_graph(p)
        _add_params(p)
        p.add_argument("--folds", type=int, default=5)
        p.add_argument("--fractions", type=_fractions, default=DEFAULT_FRACTIONS)
        p.add_argument("--masks", default=None, help="';'-separated relational masks")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--audit", action="store_true", help="poison held-out labels and re-check")
        p.add_argument("--out", required=True, help="report CSV path")
        p.add_argument("--plot", default=None, help="plot-data CSV path")
        if name == "evaluate":
            p.add_argument("--models", default="gb,rgb,mgb")
        p.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        a.func(a)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
