"""Command-line driver: ingestion, label model, scoring, selection, sweeps.

Subcommands: score, select, sweep, synth-verify. Every output artifact embeds
the resolved configuration on its first line (CSV) or under a "config" key
(JSON), and a fixed seed makes outputs byte-identical across runs and thread
counts. Exit codes: 0 success, 1 usage error, 2 data-format error, 3
numeric/degenerate error.

Thread count for the numba backend follows NUMBA_NUM_THREADS; set
CUTSELECT_BACKEND=numpy to force the pure-numpy kernels.
"""

import argparse
import json
import sys

import numpy as np

from ._kernels import backend_name
from .data_model import Dataset, load_embeddings, load_gold, load_label_matrix
from .end_model import DEFAULT_BETAS, LinearModel, SelectorConfig, TrainConfig, beta_sweep, compute_scores
from .errors import DegenerateError, FormatError, ParameterError
from .label_models import dawid_skene_fit, dawid_skene_posteriors, majority_vote
from .selectors import select_stratified, select_top_beta
from .synth_theory import TwoViewConfig, tradeoff_curve, verify_lemma

USAGE_EXIT = 1
FORMAT_EXIT = 2
DEGENERATE_EXIT = 3


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _config_echo(args, command):
    skip = {"func"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg["command"] = command
    cfg["backend"] = backend_name()
    return cfg


def _fmt(value):
    # plain-float repr; numpy scalars would otherwise print their type name
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _write_csv(path, config, header, rows):
    lines = ["# config " + json.dumps(config, sort_keys=True), ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _write_json(path, doc):
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _load_dataset(args):
    labels = load_label_matrix(args.labels, args.num_classes)
    emb = load_embeddings(args.embeddings)
    gold = load_gold(args.train_gold, args.num_classes) if getattr(args, "train_gold", None) else None
    return Dataset(labels=labels, embeddings=emb, gold=gold)


def _pseudolabels(dataset, args):
    if args.label_model == "mv":
        return majority_vote(dataset.labels)
    model = dawid_skene_fit(dataset.labels, seed=args.seed)
    return dawid_skene_posteriors(model, dataset.labels)


def _selector_config(args):
    prior = None
    if getattr(args, "prior", None):
        prior = tuple(float(v) for v in args.prior.split(","))
    return SelectorConfig(
        method=args.selector,
        k=args.k,
        symmetric=args.symmetric_graph,
        stratified=getattr(args, "stratified", False),
        prior=prior,
    )


def cmd_score(args):
    dataset = _load_dataset(args)
    p = _pseudolabels(dataset, args)
    scores, covered = compute_scores(dataset, p, _selector_config(args))
    selection = select_top_beta(scores, args.beta, node_ids=covered,
                                method=args.selector)
    in_subset = np.zeros(selection.num_scored, dtype=np.int64)
    in_subset[selection.order[: selection.selected.size]] = 1
    rows = [
        (int(covered[pos]), float(scores[pos]), rank, int(in_subset[pos]))
        for rank, pos in enumerate(selection.order)
    ]
    _write_csv(
        args.output,
        _config_echo(args, "score"),
        ("example_index", "score", "rank", "selected_at_beta"),
        rows,
    )
    return 0


def cmd_select(args):
    dataset = _load_dataset(args)
    p = _pseudolabels(dataset, args)
    cfg = _selector_config(args)
    scores, covered = compute_scores(dataset, p, cfg)
    if cfg.stratified:
        selection = select_stratified(scores, p, args.beta,
                                      np.asarray(cfg.prior), method=cfg.method)
    else:
        selection = select_top_beta(scores, args.beta, node_ids=covered,
                                    method=cfg.method)
    pos_of = {int(node): i for i, node in enumerate(covered)}
    rank_of = {int(covered[pos]): rank for rank, pos in enumerate(selection.order)}
    rows = [
        (int(idx), float(scores[pos_of[int(idx)]]), rank_of[int(idx)])
        for idx in selection.selected
    ]
    _write_csv(
        args.output,
        _config_echo(args, "select"),
        ("example_index", "score", "rank"),
        rows,
    )
    return 0


def cmd_sweep(args):
    dataset = _load_dataset(args)
    p = _pseudolabels(dataset, args)
    val = (load_embeddings(args.val_embeddings), load_gold(args.val_gold, args.num_classes))
    test = None
    if args.test_embeddings and args.test_gold:
        test = (load_embeddings(args.test_embeddings), load_gold(args.test_gold, args.num_classes))
    betas = tuple(float(b) for b in args.betas.split(","))
    train_cfg = TrainConfig(lr=args.lr, l2=args.l2, epochs=args.epochs,
                            batch=args.batch, seed=args.seed)
    result = beta_sweep(dataset, p, _selector_config(args), betas=betas,
                        train_cfg=train_cfg, val=val, test=test)
    config = _config_echo(args, "sweep")
    header = ("beta", "n_selected", "subset_label_accuracy", "val_accuracy",
              "test_accuracy", "balanced_error")
    _write_csv(args.output_csv, config,
               header, [tuple(row[h] for h in header) for row in result.rows])
    _write_json(args.output_json, {
        "best": result.best,
        "best_beta": result.best["beta"],
        "config": config,
        "rows": list(result.rows),
    })
    return 0


def cmd_synth_verify(args):
    cfg = TwoViewConfig(
        n=args.n,
        alpha=args.alpha,
        gamma=args.gamma,
        abstain_rate=1.0 - args.coverage,
        class_prior=args.class_prior,
        view1_dim=args.dim,
        cluster_sep=args.sep,
    )
    rng = np.random.default_rng(args.seed)
    w = rng.standard_normal(args.dim)
    classifier = LinearModel(weights=np.vstack([np.zeros(args.dim), w]),
                             bias=np.zeros(2))
    lemma = verify_lemma(cfg, classifier, args.seed + 1)
    settings = []
    for triple in args.tradeoff.split(","):
        cov, alpha, gamma = (float(v) for v in triple.split(":"))
        settings.append((cov, alpha, gamma))
    curve = tradeoff_curve(settings, n=args.tradeoff_n, seed=args.seed,
                           n_seeds=args.n_seeds, n_test=args.n_test,
                           view1_dim=args.dim, cluster_sep=args.sep,
                           class_prior=args.class_prior)
    config = _config_echo(args, "synth-verify")
    ok = lemma["gap"] <= args.tol
    report = {
        "config": config,
        "lemma": {**lemma, "pass": bool(ok), "tol": args.tol},
        "tradeoff": curve,
    }
    _write_json(args.output, report)
    if args.tradeoff_csv:
        header = ("coverage", "alpha", "gamma", "mean_test_bal_err", "std", "bound_driver")
        _write_csv(args.tradeoff_csv, config, header,
                   [tuple(row[h] for h in header) for row in curve])
    return 0 if ok else DEGENERATE_EXIT


def _add_pipeline_args(sp, with_selector=True):
    sp.add_argument("--embeddings", required=True, help="embedding file (binary or CSV)")
    sp.add_argument("--labels", required=True, help="labeling-function matrix CSV")
    sp.add_argument("--num-classes", type=int, required=True, help="number of classes C")
    sp.add_argument("--label-model", choices=("mv", "ds"), default="mv",
                    help="majority vote or Dawid-Skene (default mv)")
    if with_selector:
        sp.add_argument("--selector", choices=("cut", "entropy"), default="cut",
                        help="ranking method (default cut)")
        sp.add_argument("--k", type=int, default=20,
                        help="neighbors per node for the cut statistic (default 20)")
        sp.add_argument("--symmetric-graph", action="store_true",
                        help="use the union edge set instead of asymmetric neighborhoods")
    sp.add_argument("--seed", type=int, default=0, help="seed for every stochastic step")


def build_parser():
    parser = _Parser(
        prog="cutselect",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("score", help="rank covered examples, write a score CSV",
                        description="Columns: example_index, score, rank, "
                                    "selected_at_beta (rows in rank order).")
    _add_pipeline_args(sp)
    sp.add_argument("--beta", type=float, default=1.0,
                    help="fraction kept for the selected_at_beta column (default 1.0)")
    sp.add_argument("--output", default="-", help="output CSV path, - for stdout")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("select", help="write the selected subset as CSV",
                        description="Columns: example_index, score, rank "
                                    "(selected rows only, in rank order).")
    _add_pipeline_args(sp)
    sp.add_argument("--beta", type=float, default=0.6,
                    help="fraction of covered examples to keep (default 0.6, the "
                         "no-validation fallback)")
    sp.add_argument("--stratified", action="store_true",
                    help="per-class quotas instead of a global ranking")
    sp.add_argument("--prior", default=None,
                    help="comma-separated class prior, required with --stratified")
    sp.add_argument("--output", default="-", help="output CSV path, - for stdout")
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("sweep", help="beta grid: select, train, evaluate",
                        description="CSV columns: beta, n_selected, "
                                    "subset_label_accuracy, val_accuracy, "
                                    "test_accuracy, balanced_error.")
    _add_pipeline_args(sp)
    sp.add_argument("--train-gold", default=None,
                    help="optional gold labels for the training split "
                         "(fills subset_label_accuracy)")
    sp.add_argument("--val-embeddings", required=True)
    sp.add_argument("--val-gold", required=True)
    sp.add_argument("--test-embeddings", default=None)
    sp.add_argument("--test-gold", default=None)
    sp.add_argument("--betas", default=",".join(str(b) for b in DEFAULT_BETAS),
                    help="comma-separated beta grid (default 0.1..1.0)")
    sp.add_argument("--stratified", action="store_true")
    sp.add_argument("--prior", default=None)
    sp.add_argument("--lr", type=float, default=1e-2)
    sp.add_argument("--l2", type=float, default=1e-4)
    sp.add_argument("--epochs", type=int, default=100)
    sp.add_argument("--batch", type=int, default=128)
    sp.add_argument("--output-csv", default="sweep.csv")
    sp.add_argument("--output-json", default="sweep.json")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("synth-verify",
                        help="check the noise lemma and the coverage tradeoff "
                             "on synthetic data",
                        description="Report JSON: config, lemma gap (exit 3 when "
                                    "above --tol), tradeoff table.")
    sp.add_argument("--n", type=int, default=200000, help="lemma sample size")
    sp.add_argument("--alpha", type=float, default=0.1)
    sp.add_argument("--gamma", type=float, default=0.15)
    sp.add_argument("--class-prior", type=float, default=0.5)
    sp.add_argument("--coverage", type=float, default=1.0)
    sp.add_argument("--dim", type=int, default=4)
    sp.add_argument("--sep", type=float, default=2.0)
    sp.add_argument("--tol", type=float, default=0.01, help="lemma gap tolerance")
    sp.add_argument("--tradeoff", default="1.0:0.3:0.3,0.5:0.05:0.05",
                    help="coverage:alpha:gamma triples, comma-separated")
    sp.add_argument("--tradeoff-n", type=int, default=20000)
    sp.add_argument("--n-seeds", type=int, default=3)
    sp.add_argument("--n-test", type=int, default=10000)
    sp.add_argument("--tradeoff-csv", default=None,
                    help="also write the tradeoff table as CSV")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--output", default="-", help="report JSON path, - for stdout")
    sp.set_defaults(func=cmd_synth_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"cutselect: error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except FormatError as exc:
        print(f"cutselect: data error: {exc}", file=sys.stderr)
        return FORMAT_EXIT
    except DegenerateError as exc:
        print(f"cutselect: degenerate input: {exc}", file=sys.stderr)
        return DEGENERATE_EXIT


if __name__ == "__main__":
    sys.exit(main())
