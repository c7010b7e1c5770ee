"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 runtime failure. Diagnostics go to stderr, results to ``--out`` or stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path


from . import __version__
from .agreement import summarize_rounds, weighted_agreement
from .analytics import (
    StdMode,
    group_comparison_table,
    render_table,
    type_frequency_table,
)
from .corpus import (
    Dataset,
    Group,
    SplitTag,
    check_phrase_label_consistency,
    complex_only,
    load_dataset,
    load_records,
    modeling_subset,
    save_labels,
    scan_instances,
    select_splits,
    upgrade_contains_mwe,
)
from .errors import DataError, MweComplexityError
from .evaluation import (
    ExperimentConfig,
    Target,
    View,
    ablation,
    evaluate_test_splits,
    genre_test_views,
    group_experiment,
    kfold_cv,
    targets,
)
from .features import (
    BigramFrequencyTable,
    FeatureGroup,
    FeatureResources,
    HeuristicScorer,
    LexiconScorer,
    UnigramTable,
)
from .model import MlpConfig, MlpModel, fit_model, round_many
from .optim import LbfgsConfig
from .upstream import convert as convert_upstream

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("mwe_complexity")

FORMATS = ("tsv", "json", "markdown")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- argument groups ---------------------------------------------------------

def _add_data(p):
    g = p.add_argument_group("data")
    g.add_argument("--data", type=Path, metavar="DIR",
                   help="directory holding instances.tsv and mwe_labels.tsv")
    g.add_argument("--instances", type=Path, metavar="PATH", help="instances TSV")
    g.add_argument("--labels", type=Path, metavar="PATH", help="MWE labels TSV")
    g.add_argument("--end-inclusive", action="store_true",
                   help="input end offsets point at the last character")


def _add_output(p, formats=FORMATS):
    p.add_argument("--format", choices=formats, default="tsv")
    p.add_argument("--out", type=Path, metavar="PATH", help="write here instead of stdout")


def _add_resources(p):
    g = p.add_argument_group("feature resources")
    g.add_argument("--bigram-freq", type=Path, metavar="PATH",
                   help="bigram TSV (token1, token2, count); default: count the "
                        "dataset's own sentences")
    cw = g.add_mutually_exclusive_group()
    cw.add_argument("--cw-lexicon", type=Path, metavar="PATH",
                    help="word complexity TSV (word, score in [0,1])")
    cw.add_argument("--cw-heuristic", action="store_true",
                    help="length/frequency word complexity (default)")
    g.add_argument("--unigram-freq", type=Path, metavar="PATH",
                   help="unigram TSV (word, count) for --cw-heuristic; default: count "
                        "the dataset's own sentences")
    g.add_argument("--cw-default", type=float, default=0.5,
                   help="lexicon score for unknown words (default 0.5)")
    g.add_argument("--smoothing", type=float, default=0.0, metavar="K",
                   help="add-K smoothing for bigram counts (default 0)")


def _add_model(p):
    g = p.add_argument_group("model")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--hidden", default="100x6",
                   help="hidden layers, WIDTHxDEPTH or comma list (default 100x6)")
    g.add_argument("--activation", choices=("relu", "tanh"), default="relu")
    g.add_argument("--l2", type=float, default=1e-4, help="L2 penalty on weights")
    g.add_argument("--lbfgs-m", type=int, default=10, help="L-BFGS memory")
    g.add_argument("--max-iters", type=int, default=500)
    g.add_argument("--grad-tol", type=float, default=1e-6)
    g.add_argument("--grid", type=float, default=None,
                   help="label grid (default 0.05, or 0.1 for group targets)")


def _add_experiment(p, folds=True):
    g = p.add_argument_group("experiment")
    g.add_argument("--features", default="all",
                   help="comma list of mwe,genre,mean_cw,max_cw,length,frequency")
    g.add_argument("--view", choices=[v.value for v in View], default=View.MODELING.value)
    if folds:
        g.add_argument("--folds", type=int, default=5)
    g.add_argument("--jobs", type=int, default=1, help="parallel worker processes")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mwe-complexity",
                 description="Complexity assessment for multiword expressions.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--config", type=Path, metavar="PATH",
                    help="TOML file with flag defaults (flags override it)")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("convert", help="convert the upstream release to canonical TSV")
    p.add_argument("upstream_dir", type=Path)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--end-inclusive", action="store_true")
    p.add_argument("--mwe-column", type=int, default=11,
                   help="0-based column holding the MWE type (default 11)")
    p.add_argument("--repair-spans", action="store_true",
                   help="move offsets to the nearest occurrence of the phrase")

    p = sub.add_parser("validate", help="check canonical files and report every problem")
    _add_data(p)

    p = sub.add_parser("stats", help="per-type frequency and complexity table")
    _add_data(p)
    p.add_argument("--view", choices=("original", "complex-only", "modeling"),
                   default="original")
    p.add_argument("--group-compare", action="store_true",
                   help="native vs non-native means per type instead")
    p.add_argument("--std-mode", choices=[m.value for m in StdMode],
                   default=StdMode.POPULATION.value)
    _add_output(p)

    p = sub.add_parser("agreement", help="per-round agreement and weighted totals")
    p.add_argument("--records", type=Path, required=True)
    _add_output(p)

    p = sub.add_parser("check", help="phrase label consistency report")
    _add_data(p)
    p.add_argument("--records", type=Path)
    p.add_argument("--upgrade-contains-mwe", action="store_true",
                   help="also relabel not-MWE phrases that contain an MWE")
    p.add_argument("--write-labels", type=Path, metavar="PATH",
                   help="with --upgrade-contains-mwe, write the updated labels here")
    _add_output(p)

    p = sub.add_parser("bigrams", help="count bigram/unigram tables from the sentences")
    _add_data(p)
    p.add_argument("--bigrams-out", type=Path, required=True)
    p.add_argument("--unigrams-out", type=Path)

    p = sub.add_parser("train", help="train the regressor and save it")
    _add_data(p)
    _add_resources(p)
    _add_model(p)
    _add_experiment(p, folds=False)
    p.add_argument("--target", choices=[t.value for t in Target], default="combined")
    p.add_argument("--splits", default="Train,Dev",
                   help="splits to train on (default Train,Dev)")
    p.add_argument("--model-out", type=Path, required=True)

    p = sub.add_parser("predict", help="predict complexity with a saved model")
    p.add_argument("--model", type=Path, required=True)
    _add_data(p)
    _add_resources(p)
    p.add_argument("--grid", type=float, default=0.05)
    _add_output(p, ("tsv", "json"))

    p = sub.add_parser("eval", help="train on Train+Dev, score each genre's Test split")
    _add_data(p)
    _add_resources(p)
    _add_model(p)
    _add_experiment(p, folds=False)
    p.add_argument("--constant", type=float, default=0.05,
                   help="constant baseline value (default 0.05)")
    _add_output(p)

    p = sub.add_parser("cv", help="k-fold cross-validation")
    _add_data(p)
    _add_resources(p)
    _add_model(p)
    _add_experiment(p)
    p.add_argument("--target", choices=[t.value for t in Target], default="combined")
    _add_output(p)

    p = sub.add_parser("ablate", help="leave-one-feature-group-out cross-validation")
    _add_data(p)
    _add_resources(p)
    _add_model(p)
    _add_experiment(p)
    _add_output(p)

    p = sub.add_parser("group", help="native or non-native target experiment")
    who = p.add_mutually_exclusive_group(required=True)
    who.add_argument("--native", action="store_true")
    who.add_argument("--non-native", action="store_true")
    p.add_argument("--minus-mwe", action="store_true",
                   help="also report the run without the MWE feature")
    _add_data(p)
    _add_resources(p)
    _add_model(p)
    _add_experiment(p)
    _add_output(p)
    return ap


# -- helpers -----------------------------------------------------------------

def _data_paths(args):
    if args.data is not None:
        inst = args.instances or args.data / "instances.tsv"
        labels = args.labels or args.data / "mwe_labels.tsv"
    else:
        inst, labels = args.instances, args.labels
    if inst is None or labels is None:
        raise UsageError("give --data DIR or both --instances and --labels")
    for path in (inst, labels):
        if not Path(path).is_file():
            raise DataError(f"{path}: no such file")
    return inst, labels


def _load(args) -> Dataset:
    inst, labels = _data_paths(args)
    return load_dataset(inst, labels, end_inclusive=args.end_inclusive)


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _resources(args, d: Dataset) -> tuple[FeatureResources, dict]:
    sentences = sorted({i.sentence for i in d})
    refs = {}
    if args.bigram_freq:
        bigrams = BigramFrequencyTable.load(args.bigram_freq)
        refs["bigram_freq"] = str(args.bigram_freq)
    else:
        bigrams = BigramFrequencyTable.from_texts(sentences, "dataset sentences")
    if args.cw_lexicon:
        scorer = LexiconScorer.load(args.cw_lexicon, default=args.cw_default)
        refs["cw_lexicon"] = str(args.cw_lexicon)
    else:
        if args.unigram_freq:
            unigrams = UnigramTable.load(args.unigram_freq)
            refs["unigram_freq"] = str(args.unigram_freq)
        else:
            unigrams = UnigramTable.from_texts(sentences, "dataset sentences")
        scorer = HeuristicScorer(unigrams)
    return FeatureResources(bigrams, scorer, args.smoothing), refs


def _mlp(args) -> MlpConfig:
    try:
        hidden = MlpConfig.parse_hidden(args.hidden)
    except ValueError:
        raise UsageError(f"bad --hidden value {args.hidden!r}") from None
    return MlpConfig(hidden, args.activation, args.l2, args.seed)


def _lbfgs(args) -> LbfgsConfig:
    return LbfgsConfig(memory=args.lbfgs_m, max_iters=args.max_iters, grad_tol=args.grad_tol)


def _features(args) -> frozenset[FeatureGroup]:
    try:
        groups = FeatureGroup.parse_list(args.features)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not groups:
        raise UsageError("--features selects nothing")
    return groups


def _experiment(args, target=Target.COMBINED) -> ExperimentConfig:
    return ExperimentConfig(
        target=target, grid=args.grid, features=_features(args),
        folds=getattr(args, "folds", 5), seed=args.seed, mlp=_mlp(args),
        lbfgs=_lbfgs(args), jobs=args.jobs,
        baseline_constant=getattr(args, "constant", 0.05),
    )


def _report_out(args, report, refs):
    if refs:
        report.config["resource_paths"] = refs
    _emit(args, report.render(args.format))


# -- commands ----------------------------------------------------------------

def cmd_convert(args):
    stats = convert_upstream(args.upstream_dir, args.out_dir,
                             end_inclusive=args.end_inclusive,
                             mwe_column=args.mwe_column, repair_spans=args.repair_spans)
    print(f"files: {stats.files}  rows: {stats.rows}  phrases: {stats.kept}  "
          f"single-token skipped: {stats.skipped_single_token}  "
          f"spans repaired: {stats.repaired_spans}", file=sys.stderr)
    return 0


def cmd_validate(args):
    inst_path, labels_path = _data_paths(args)
    instances, errors = scan_instances(inst_path, args.end_inclusive)
    for lineno, exc in errors:
        print(f"{inst_path}:{lineno}: {exc}", file=sys.stderr)
    if errors:
        print(f"{len(errors)} invalid rows, {len(instances)} valid", file=sys.stderr)
        return 2
    d = load_dataset(inst_path, labels_path, args.end_inclusive)
    m = modeling_subset(d)
    print(f"instances: {len(d)}  modeling: {len(m)}  "
          f"modeling with prob 0: {sum(1 for i in m if i.prob == 0)}  "
          f"complex: {len(complex_only(d))}")
    return 0


def cmd_stats(args):
    d = _load(args)
    if args.view == "complex-only":
        d = complex_only(d)
    elif args.view == "modeling":
        d = modeling_subset(d)
    if args.group_compare:
        rows = group_comparison_table(d)
    else:
        rows = type_frequency_table(d, StdMode(args.std_mode))
    _emit(args, render_table(rows, args.format))
    return 0


def cmd_agreement(args):
    summaries = summarize_rounds(load_records(args.records))
    if not summaries:
        raise DataError(f"{args.records}: no annotation records")
    sizes = [s.n_items for s in summaries]
    totals = {
        "observed_agreement": weighted_agreement(
            (s.observed_agreement, n) for s, n in zip(summaries, sizes)),
        "unanimous_agreement": weighted_agreement(
            (s.unanimous_agreement, n) for s, n in zip(summaries, sizes)),
        "kappa": weighted_agreement((s.kappa, n) for s, n in zip(summaries, sizes)),
        "n_items": sum(sizes),
    }
    if args.format == "json":
        text = json.dumps({"rounds": [asdict(s) for s in summaries], "weighted": totals},
                          indent=2) + "\n"
    else:
        text = render_table(summaries, args.format)
        if args.format == "tsv":
            text += (f"weighted\t{totals['n_items']}\t{totals['observed_agreement']:.4f}\t"
                     f"{totals['unanimous_agreement']:.4f}\t{totals['kappa']:.4f}\n")
        else:
            text += (f"| weighted | {totals['n_items']} | "
                     f"{totals['observed_agreement']:.4f} | "
                     f"{totals['unanimous_agreement']:.4f} | {totals['kappa']:.4f} |\n")
    _emit(args, text)
    return 0


def cmd_check(args):
    d = _load(args)
    records = load_records(args.records) if args.records else ()
    report = check_phrase_label_consistency(d, records)
    changed = []
    if args.upgrade_contains_mwe:
        upgraded, changed = upgrade_contains_mwe(d)
        if args.write_labels:
            save_labels(upgraded, args.write_labels)
    if args.format == "json":
        payload = {
            "conflicts": [{
                "phrase": c.phrase,
                "labels": {t.value: n for t, n in c.label_counts},
                "instances": list(c.instance_ids),
                "proposed": c.proposed.value if c.proposed else None,
                "dissenting_instances": list(c.dissenting_instances),
                "dissenting_records": [
                    {"instance_id": r.instance_id, "annotator_id": r.annotator_id,
                     "round": r.round, "label": r.label.value}
                    for r in c.dissenting_records],
            } for c in report.conflicts],
            "upgraded_to_contains_mwe": changed,
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        sep = "\t" if args.format == "tsv" else " | "
        head = ["phrase", "labels", "proposed", "dissenting_instances"]
        lines = [sep.join(head)]
        if args.format == "markdown":
            lines.append(sep.join(["---"] * len(head)))
        for c in report.conflicts:
            labels = ";".join(f"{t.value}={n}" for t, n in c.label_counts)
            lines.append(sep.join([c.phrase, labels,
                                   c.proposed.value if c.proposed else "-",
                                   ",".join(c.dissenting_instances) or "-"]))
        if args.format == "markdown":
            lines = ["| " + ln + " |" for ln in lines]
        text = "\n".join(lines) + "\n"
    _emit(args, text)
    print(f"{len(report)} conflicting phrases; {len(changed)} instances upgraded to "
          f"contains-MWE", file=sys.stderr)
    return 0


def cmd_bigrams(args):
    d = _load(args)
    sentences = sorted({i.sentence for i in d})
    BigramFrequencyTable.from_texts(sentences).save(args.bigrams_out)
    if args.unigrams_out:
        UnigramTable.from_texts(sentences).save(args.unigrams_out)
    print(f"counted {len(sentences)} distinct sentences", file=sys.stderr)
    return 0


def _parse_splits(text):
    try:
        return [SplitTag(s.strip()) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad --splits value {text!r}") from None


def cmd_train(args):
    d = _load(args)
    resources, refs = _resources(args, d)
    view = select_splits(View(args.view).apply(d), _parse_splits(args.splits))
    cfg = _experiment(args, Target(args.target))
    vecs = [resources.extract(i) for i in view]
    model = fit_model(vecs, targets(view, cfg.target), cfg.mlp, cfg.lbfgs, cfg.features)
    model.resource_refs = {**refs, **resources.fingerprints()}
    if set(refs) != {"bigram_freq", "cw_lexicon"}:
        # something was built in memory, so embed it for predict to reuse
        model.resources = resources
    model.save(args.model_out)
    print(f"trained on {len(view)} instances; optimizer status {model.status.value}",
          file=sys.stderr)
    return 0


def cmd_predict(args):
    model = MlpModel.load(args.model)
    d = _load(args)
    if model.resources is not None and not (args.bigram_freq or args.cw_lexicon
                                            or args.unigram_freq):
        resources = model.resources
    else:
        resources, _ = _resources(args, d)
        want = model.resource_refs
        got = resources.fingerprints()
        for key in ("bigrams", "scorer"):
            if key in want and want[key] != got[key]:
                log.warning("%s resource differs from the one used in training", key)
    d = modeling_subset(d)
    raw = model.predict_features([resources.extract(i) for i in d])
    snapped = round_many(raw, args.grid)
    if args.format == "json":
        text = json.dumps([{"id": i.id, "raw": float(r), "prediction": float(s)}
                           for i, r, s in zip(d, raw, snapped)], indent=2) + "\n"
    else:
        lines = ["id\traw\tprediction"]
        lines += [f"{i.id}\t{r!r}\t{s:.2f}" for i, r, s in zip(d, raw.tolist(), snapped)]
        text = "\n".join(lines) + "\n"
    _emit(args, text)
    return 0


def cmd_eval(args):
    d = _load(args)
    resources, refs = _resources(args, d)
    train_view, tests = genre_test_views(d, View(args.view))
    report = evaluate_test_splits(train_view, tests, resources, _experiment(args))
    _report_out(args, report, refs)
    return 0


def cmd_cv(args):
    d = _load(args)
    resources, refs = _resources(args, d)
    report = kfold_cv(View(args.view).apply(d), resources,
                      _experiment(args, Target(args.target)))
    _report_out(args, report, refs)
    return 0


def cmd_ablate(args):
    d = _load(args)
    resources, refs = _resources(args, d)
    report = ablation(View(args.view).apply(d), resources, _experiment(args))
    _report_out(args, report, refs)
    return 0


def cmd_group(args):
    d = _load(args)
    resources, refs = _resources(args, d)
    group = Group.NATIVE if args.native else Group.NON_NATIVE
    cfg = _experiment(args)
    report = group_experiment(View(args.view).apply(d), group, resources,
                              cfg.features, cfg, minus_mwe=args.minus_mwe)
    _report_out(args, report, refs)
    return 0


COMMANDS = {
    "convert": cmd_convert, "validate": cmd_validate, "stats": cmd_stats,
    "agreement": cmd_agreement, "check": cmd_check, "bigrams": cmd_bigrams,
    "train": cmd_train, "predict": cmd_predict, "eval": cmd_eval, "cv": cmd_cv,
    "ablate": cmd_ablate, "group": cmd_group,
}


def _apply_config(parser, argv):
    """Re-parse with values from ``--config`` as defaults beneath the flags."""
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        with open(args.config, "rb") as fh:
            values = tomllib.load(fh)
    except OSError as exc:
        raise DataError(f"{args.config}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    known = set(vars(args))
    values = {k.replace("-", "_"): v for k, v in values.items()}
    unknown = sorted(set(values) - known)
    if unknown:
        raise UsageError(f"{args.config}: unknown keys {', '.join(unknown)}")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    sub.set_defaults(**values)
    return parser.parse_args(argv)


def run(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if not argv:
            raise UsageError("no command given")
        args = _apply_config(parser, argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        logging.basicConfig(
            level=logging.DEBUG if args.verbose > 1 else
            logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s: %(message)s", stream=sys.stderr)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        if not argv:
            parser.print_help(sys.stderr)
        else:
            print(str(exc), file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (MweComplexityError, OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main():
    sys.exit(run())
