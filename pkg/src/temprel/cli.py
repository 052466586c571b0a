"""Command-line entry point.

Every command reads files, writes its artifacts into ``--out`` and leaves a
``manifest.json`` there recording the version, the full argument set, and
content hashes of inputs and outputs.  ``temprel rerun MANIFEST --out DIR``
replays a run and checks that every output is byte-identical.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Sequence


from . import __version__
from .algebra import TemporalGraph, check_consistency
from .bcdc import BcdcConfig, Featurizer, classify_document, fit, gold_examples, run_bcdc
from .classifier import TrainConfig, model_to_json
from .consistency import objective, repair
from .corpus import (
    SCHEME_LABELS, CorpusError, Scheme, convert_corpus, corpus_pairs, corpus_stats, gold_labels,
    import_timeml_file, read_corpus, serialize_corpus,
)
from .emtrl import (
    EmConfig, EmModel, init_random, init_rules, init_supervised, map_clusters_to_labels, predict,
    predict_posteriors, run_em,
)
from .evaluation import (
    EvaluationError, PredictionRecord, accuracy, cross_validate, evaluate, majority_baseline,
    prediction_map, read_predictions, serialize_predictions, stratified_shuffling,
)
from .features import FeatureSet
from .rules import load_rulebase
from .synth import SynthConfig, describe_planted, generate, rule_files

log = logging.getLogger("temprel")

MANIFEST = "manifest.json"
# argument names that are bookkeeping rather than configuration
_UNRECORDED = {"command", "out", "config", "handler", "verbose"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# small helpers

def _json(obj) -> bytes:
    return (json.dumps(obj, indent=1, sort_keys=True) + "\n").encode("utf-8")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Outputs:
    """Collects output files so the manifest can hash them."""

    def __init__(self, root: Path):
        self.root = root
        root.mkdir(parents=True, exist_ok=True)
        self.names: list[str] = []

    def write(self, name: str, data: bytes | str):
        if isinstance(data, str):
            data = data.encode("utf-8")
        (self.root / name).write_bytes(data)
        self.names.append(name)


def _scheme(args) -> Scheme:
    return Scheme.parse(args.scheme)


def _load(path: str, scheme: Scheme | None = None):
    corpus = read_corpus(path)
    return convert_corpus(corpus, scheme) if scheme is not None else corpus


def _informativeness(text: str):
    """``0.9`` or ``default=0.9,tense=0.7,word=1.0``."""
    if "=" not in text:
        return float(text)
    out = {}
    for part in text.split(","):
        key, _, value = part.partition("=")
        out[key.strip()] = float(value)
    return out


def _holdout(text: str | None) -> list[str]:
    if not text:
        return []
    path = Path(text)
    if path.is_file():
        return [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    return [t for t in (s.strip() for s in text.split(",")) if t]


def _posterior_dict(labels, post) -> dict[str, float]:
    return {lab: float(p) for lab, p in zip(labels, post)}


def _records_from(pred: dict, posts: dict | None, labels) -> list[PredictionRecord]:
    out = []
    for (doc_id, a, b), label in pred.items():
        post = _posterior_dict(labels, posts[(doc_id, a, b)]) if posts is not None else None
        out.append(PredictionRecord(doc_id, a, b, label, post))
    return out


def repair_records(records: Sequence[PredictionRecord], scheme: Scheme, method: str):
    """Make each document's predicted graph consistent; returns records and per-document stats."""
    labels = SCHEME_LABELS[scheme]
    by_doc: dict[str, list[PredictionRecord]] = {}
    for r in records:
        by_doc.setdefault(r.doc_id, []).append(r)
    out, stats = [], []
    for doc_id in sorted(by_doc):
        g = TemporalGraph(scheme)
        kept, dup = [], []
        for r in sorted(by_doc[doc_id], key=lambda r: r.pair):
            if g.key(r.source, r.target) is not None:
                dup.append(r)
                continue
            dist = r.posterior if r.posterior is not None else {lab: float(lab == r.label) for lab in labels}
            g.add_edge(r.source, r.target, dist)
            kept.append(r)
        before = objective(g, {(r.source, r.target): r.label for r in kept})
        result = repair(g, method)
        for r in kept:
            out.append(PredictionRecord(r.doc_id, r.source, r.target, result.labels[(r.source, r.target)],
                                        r.posterior, r.confidence))
        out.extend(dup)
        stats.append({
            "doc_id": doc_id, "edges": len(kept), "objective_before": before,
            "objective_after": result.objective, "flagged": [list(k) for k in result.flagged],
            "changed": sum(result.labels[(r.source, r.target)] != r.label for r in kept),
            "consistent": check_consistency(result.graph).consistent,
        })
    return out, stats


# ---------------------------------------------------------------------------
# commands

def cmd_synth(args, out: Outputs):
    lo, hi = args.min_events, args.max_events
    cfg = SynthConfig(
        seed=args.seed, documents=args.docs, topics=args.topics, events_per_doc=(lo, hi),
        pair_link_density=args.density, scheme=_scheme(args),
        feature_informativeness=_informativeness(args.informativeness),
        annotation_noise_rate=args.noise, intra_sentence_fraction=args.intra_fraction,
        total_pairs=args.pairs, max_duration=args.max_duration, narrative_order=args.narrative_order,
    )
    corpus, planted = generate(cfg)
    out.write("corpus.jsonl", serialize_corpus(corpus))
    out.write("planted.txt", describe_planted(planted))
    for name, text in sorted(rule_files(planted).items()):
        out.write(name, text)
    stats = corpus_stats(corpus, cfg.scheme)
    out.write("report.json", _json({
        "documents": len(corpus), "pairs": stats.total, "label_counts": stats.counts,
        "majority": stats.majority, "majority_fraction": stats.majority_fraction,
        "topic_spread": planted.topic_spread,
    }))


def cmd_import_timeml(args, out: Outputs):
    docs, skipped = [], {}
    for path in args.inputs:
        result = import_timeml_file(path)
        docs.append(result.document)
        skipped[result.document.doc_id] = result.skipped_tlinks
    ids = [d.doc_id for d in docs]
    if len(set(ids)) != len(ids):
        raise CorpusError("two input files produced the same doc_id")
    scheme = _scheme(args)
    docs = convert_corpus(docs, scheme)
    out.write("corpus.jsonl", serialize_corpus(docs))
    stats = corpus_stats(docs, scheme)
    out.write("report.json", _json({"documents": len(docs), "pairs": stats.total,
                                    "label_counts": stats.counts, "skipped_tlinks": skipped}))


def cmd_normalize(args, out: Outputs):
    scheme = _scheme(args)
    before = read_corpus(args.corpus)
    docs = convert_corpus(before, scheme)
    out.write("corpus.jsonl", serialize_corpus(docs))
    stats = corpus_stats(docs, scheme)
    out.write("report.json", _json({
        "documents": len(docs), "pairs_in": sum(len(d.tlinks) for d in before), "pairs": stats.total,
        "label_counts": stats.counts, "majority": stats.majority, "majority_fraction": stats.majority_fraction,
    }))


def _em_init(args, corpus, pairs, scheme):
    if args.init == "random":
        return init_random(pairs, scheme, args.seed)
    if args.init == "supervised":
        return init_supervised(pairs, gold_labels(corpus), args.fraction, args.seed, scheme)
    if not (args.rules_file or args.lexical_rules or args.signal_rules):
        raise UsageError("--init rules needs at least one of --rules-file, --lexical-rules, --signal-rules")
    rb = load_rulebase(args.rules_file, args.lexical_rules, args.signal_rules)
    return init_rules(pairs, corpus, rb, scheme)


def cmd_train_em(args, out: Outputs):
    scheme = _scheme(args)
    corpus = _load(args.corpus, scheme)
    pairs = corpus_pairs(corpus)
    if not pairs:
        raise CorpusError("corpus has no tlink pairs to learn from")
    init = _em_init(args, corpus, pairs, scheme)
    cfg = EmConfig(max_iters=args.max_iters, param_tol=args.param_tol, repair=args.repair)
    result = run_em(corpus, init, cfg)
    out.write("model.txt", result.model.dump())
    rows = ["iteration\tflips\tparam_change\tlog_likelihood\tobjective"]
    rows += [f"{r.iteration}\t{r.flips}\t{r.param_change!r}\t{r.log_likelihood!r}\t{r.objective!r}"
             for r in result.trace]
    out.write("trace.tsv", "\n".join(rows) + "\n")
    labels = {p: lab for p, lab in result.assignment.labels.items() if lab is not None}
    out.write("assignment.jsonl", serialize_predictions(_records_from(labels, None, SCHEME_LABELS[scheme])))
    gold = gold_labels(corpus)
    report = {
        "scheme": scheme.value, "init": args.init, "repair": args.repair, "pairs": len(pairs),
        "iterations": len(result.trace), "converged": result.converged,
        "final_flips": result.trace[-1].flips if result.trace else None,
    }
    if set(labels) == set(gold):
        report["training_accuracy"] = accuracy(labels, gold)
        if args.init == "random":
            mapping, mapped = map_clusters_to_labels(labels, gold, scheme)
            report["cluster_mapping"] = mapping
            report["mapped_training_accuracy"] = mapped
    out.write("report.json", _json(report))


def cmd_predict_em(args, out: Outputs):
    model = EmModel.load(args.model)
    scheme = model.scheme
    corpus = _load(args.corpus, scheme)
    pairs = corpus_pairs(corpus)
    pred = predict(model, corpus, pairs)
    posts = predict_posteriors(model, corpus, pairs)
    records = _records_from(pred, posts, model.labels)
    report = {"scheme": scheme.value, "pairs": len(pairs), "repair": args.repair}
    if args.repair != "none":
        records, stats = repair_records(records, scheme, args.repair)
        report["documents"] = stats
    out.write("predictions.jsonl", serialize_predictions(records))
    gold = gold_labels(corpus)
    if pairs:
        report["accuracy"] = accuracy(prediction_map(records), gold)
        report["majority"] = list(majority_baseline(corpus, scheme))
    out.write("report.json", _json(report))


def _bcdc_config(args) -> BcdcConfig:
    return BcdcConfig(
        related_docs=args.related_docs, confident_relations_per_round=args.confident_per_round,
        max_rounds=args.max_rounds, reuse_models_for_related_tests=not args.no_reuse,
        scheme=_scheme(args), feature_set=FeatureSet(args.feature_set),
        split_intra_inter=args.split_intra_inter, train=TrainConfig(seed=args.seed),
    )


def cmd_train_bcdc(args, out: Outputs):
    cfg = _bcdc_config(args)
    corpus = read_corpus(args.corpus)
    feats = Featurizer(cfg.feature_set)
    feats.register(corpus)
    examples = gold_examples(corpus, cfg.scheme, feats)
    if not examples:
        raise CorpusError("training corpus has no tlinks")
    model = fit(examples, cfg, len(feats.index))
    out.write("model.json", model_to_json(model))
    out.write("features.tsv", feats.index.to_text())
    records = []
    for doc in corpus:
        for p in classify_document(model, doc, feats):
            records.append(PredictionRecord(doc.doc_id, p.source, p.target, p.label, confidence=p.confidence))
    gold = {e.key: e.label for e in examples}
    pred = {r.pair: r.label for r in records}
    out.write("report.json", _json({
        "scheme": cfg.scheme.value, "feature_set": cfg.feature_set.value, "dimensions": len(feats.index),
        "examples": len(examples), "training_accuracy": accuracy({k: pred[k] for k in gold}, gold),
    }))


def _link_records(preds: dict) -> list[PredictionRecord]:
    return [PredictionRecord(doc_id, p.source, p.target, p.label, confidence=p.confidence)
            for doc_id, links in preds.items() for p in links]


def cmd_run_bcdc(args, out: Outputs):
    cfg = _bcdc_config(args)
    train, tests, pool = read_corpus(args.train), read_corpus(args.test), read_corpus(args.pool)
    run = run_bcdc(train, tests, pool, cfg)
    out.write("predictions.jsonl", serialize_predictions(_link_records(run.predictions)))
    out.write("general_predictions.jsonl", serialize_predictions(_link_records(run.general_predictions)))
    out.write("report.json", _json(run.report))
    rows = ["doc_id\ttopic\trounds\tpseudo_labels\treused_from\taccuracy\tgeneral_accuracy"]
    topics = {d.doc_id: d.topic or "" for d in tests}
    for d in run.report["documents"]:
        injected = sum(len(r["injected"]) for r in d["rounds"])
        rows.append(f"{d['doc_id']}\t{topics[d['doc_id']]}\t{len(d['rounds'])}\t{injected}\t"
                    f"{d['reused_from'] or ''}\t{d['accuracy']!r}\t{d['general_accuracy']!r}")
    out.write("documents.tsv", "\n".join(rows) + "\n")


def cmd_repair(args, out: Outputs):
    if args.repair == "none":
        raise UsageError("repair needs --repair greedy or --repair ilp")
    records = read_predictions(args.predictions)
    records, stats = repair_records(records, _scheme(args), args.repair)
    out.write("predictions.jsonl", serialize_predictions(records))
    out.write("report.json", _json({"method": args.repair, "documents": stats,
                                    "all_consistent": all(s["consistent"] for s in stats)}))


def _learner(args, scheme: Scheme) -> Callable:
    if args.learner == "em":
        def learn(train, test):
            pairs = corpus_pairs(train)
            init = (init_random(pairs, scheme, args.seed) if args.init == "random"
                    else _em_init(args, train, pairs, scheme))
            result = run_em(train, init, EmConfig(max_iters=args.max_iters, param_tol=args.param_tol,
                                                  repair=args.repair))
            pred = predict(result.model, test, corpus_pairs(test))
            if args.repair != "none":
                posts = predict_posteriors(result.model, test, corpus_pairs(test))
                records, _ = repair_records(_records_from(pred, posts, SCHEME_LABELS[scheme]), scheme, args.repair)
                pred = prediction_map(records)
            return pred
        return learn

    def learn_ovo(train, test):
        cfg = BcdcConfig(scheme=scheme, train=TrainConfig(seed=args.seed))
        feats = Featurizer(cfg.feature_set)
        feats.register(train)
        model = fit(gold_examples(train, scheme, feats), cfg, len(feats.index))
        return {(d.doc_id, p.source, p.target): p.label for d in test for p in classify_document(model, d, feats)}
    return learn_ovo


def cmd_evaluate(args, out: Outputs):
    scheme = _scheme(args)
    corpus = _load(args.corpus, scheme)
    if args.predictions is None and args.folds is None:
        raise UsageError("evaluate needs --predictions or --folds")
    if args.predictions is not None:
        report = evaluate(prediction_map(read_predictions(args.predictions)), corpus, scheme)
        out.write("report.json", report.to_json())
        out.write("report.txt", report.to_text())
    if args.folds is not None:
        cv = cross_validate(corpus, _learner(args, scheme), args.folds, args.seed, _holdout(args.holdout))
        label, frac = majority_baseline(corpus, scheme)
        out.write("cv.json", _json({
            "learner": args.learner, "folds": cv.folds, "fold_accuracies": cv.fold_accuracies,
            "mean_accuracy": cv.mean, "holdout": cv.holdout, "majority": [label, frac],
        }))
        rows = ["fold\tdocuments\taccuracy"] + [f"{k}\t{len(f)}\t{a!r}"
                                                for k, (f, a) in enumerate(zip(cv.folds, cv.fold_accuracies))]
        out.write("folds.tsv", "\n".join(rows) + "\n")


def cmd_significance(args, out: Outputs):
    scheme = _scheme(args)
    gold = gold_labels(_load(args.corpus, scheme))
    a = prediction_map(read_predictions(args.pred_a))
    b = prediction_map(read_predictions(args.pred_b))
    res = stratified_shuffling(a, b, gold, nt=args.shuffles, seed=args.seed)
    out.write("report.json", _json({
        "accuracy_a": accuracy(a, gold), "accuracy_b": accuracy(b, gold),
        "observed_diff": res.observed_diff, "nc": res.nc, "nt": res.nt, "p_value": res.p_value,
    }))


# ---------------------------------------------------------------------------
# parser

_INPUT_ARGS = ("corpus", "inputs", "model", "train", "test", "pool", "predictions", "pred_a", "pred_b",
               "rules_file", "lexical_rules", "signal_rules")


def _common(p: argparse.ArgumentParser, scheme_default: str = "coarse3"):
    p.add_argument("--scheme", choices=["raw14", "norm6", "coarse3"], default=scheme_default, type=str.lower)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="cap on numeric worker threads")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON file of option defaults; flags override it")


def _em_flags(p: argparse.ArgumentParser):
    p.add_argument("--init", choices=["random", "supervised", "rules"], default="supervised")
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--rules-file")
    p.add_argument("--lexical-rules")
    p.add_argument("--signal-rules")
    p.add_argument("--repair", choices=["none", "greedy", "ilp"], default="none")
    p.add_argument("--max-iters", type=int, default=30)
    p.add_argument("--param-tol", type=float, default=1e-6)


def _bcdc_flags(p: argparse.ArgumentParser):
    p.add_argument("--related-docs", type=int, default=25)
    p.add_argument("--confident-per-round", type=int, default=40)
    p.add_argument("--max-rounds", type=int, default=10)
    p.add_argument("--no-reuse", action="store_true", help="bootstrap every test document separately")
    p.add_argument("--feature-set", choices=[f.value for f in FeatureSet if f is not FeatureSet.EMTRL],
                   default=FeatureSet.BCDC_BASIC.value)
    p.add_argument("--split-intra-inter", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="temprel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"temprel {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus with planted structure")
    _common(p)
    p.add_argument("--docs", type=int, default=50)
    p.add_argument("--topics", type=int, default=5)
    p.add_argument("--pairs", type=int, help="stop once this many tlinks exist (overrides --docs)")
    p.add_argument("--min-events", type=int, default=4)
    p.add_argument("--max-events", type=int, default=8)
    p.add_argument("--density", type=float, default=0.6)
    p.add_argument("--informativeness", default="0.9", help="0.9 or default=0.9,tense=0.7,...")
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--intra-fraction", type=float, default=0.5)
    p.add_argument("--max-duration", type=int, default=8)
    p.add_argument("--narrative-order", type=float, default=0.0)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("import-timeml", help="read TimeML files into a corpus")
    p.add_argument("inputs", nargs="+")
    _common(p, "raw14")
    p.set_defaults(handler=cmd_import_timeml)

    p = sub.add_parser("normalize", help="convert a corpus to another label scheme")
    p.add_argument("corpus")
    _common(p)
    p.add_argument("--to", dest="scheme", choices=["raw14", "norm6", "coarse3"], type=str.lower)
    p.set_defaults(handler=cmd_normalize)

    p = sub.add_parser("train-em", help="fit the EM relation model")
    p.add_argument("corpus")
    _common(p)
    _em_flags(p)
    p.set_defaults(handler=cmd_train_em)

    p = sub.add_parser("predict-em", help="label pairs with a fitted EM model")
    p.add_argument("corpus")
    p.add_argument("--model", required=True)
    _common(p)
    p.add_argument("--repair", choices=["none", "greedy", "ilp"], default="none")
    p.set_defaults(handler=cmd_predict_em)

    p = sub.add_parser("train-bcdc", help="train the general one-vs-one model")
    p.add_argument("corpus")
    _common(p)
    _bcdc_flags(p)
    p.set_defaults(handler=cmd_train_bcdc)

    p = sub.add_parser("run-bcdc", help="bootstrapped per-document classification")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--pool", required=True)
    _common(p)
    _bcdc_flags(p)
    p.set_defaults(handler=cmd_run_bcdc)

    p = sub.add_parser("repair", help="make predicted graphs consistent")
    p.add_argument("predictions")
    _common(p)
    p.add_argument("--repair", choices=["none", "greedy", "ilp"], default="greedy")
    p.set_defaults(handler=cmd_repair)

    p = sub.add_parser("evaluate", help="accuracy, baseline and cross-validation")
    p.add_argument("corpus")
    p.add_argument("--predictions")
    _common(p)
    p.add_argument("--folds", type=int)
    p.add_argument("--holdout", help="comma-separated doc ids or a file with one id per line")
    p.add_argument("--learner", choices=["em", "ovo"], default="em")
    _em_flags(p)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("significance", help="stratified-shuffling test of two prediction files")
    p.add_argument("corpus")
    p.add_argument("--pred-a", required=True)
    p.add_argument("--pred-b", required=True)
    _common(p)
    p.add_argument("--shuffles", type=int, default=10000)
    p.set_defaults(handler=cmd_significance)

    p = sub.add_parser("rerun", help="replay a manifest and verify identical outputs")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(handler=None)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            defaults = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(defaults, dict):
            raise UsageError("config file must hold a JSON object")
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = sorted(set(defaults) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {unknown}")
        subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _recorded(args: argparse.Namespace) -> dict:
    rec = {}
    for key, value in sorted(vars(args).items()):
        if key in _UNRECORDED:
            continue
        if key in _INPUT_ARGS and value is not None:
            value = [str(Path(v).resolve()) for v in value] if isinstance(value, list) else str(Path(value).resolve())
        rec[key] = value
    return rec


def _input_hashes(rec: dict) -> dict[str, str]:
    out = {}
    for key in _INPUT_ARGS:
        value = rec.get(key)
        for path in (value if isinstance(value, list) else [value] if value else []):
            out[path] = _sha256(Path(path))
    return out


def execute(command: str, rec: dict, out_dir: Path, threads: int) -> dict:
    """Run ``command`` with recorded arguments; returns the manifest written."""
    from threadpoolctl import threadpool_limits

    handler = _HANDLERS[command]
    args = argparse.Namespace(**rec, command=command, out=str(out_dir))
    inputs = _input_hashes(rec)
    out = Outputs(out_dir)
    with threadpool_limits(limits=max(1, threads)):
        handler(args, out)
    manifest = {
        "tool": "temprel", "version": __version__, "command": command, "args": rec,
        "inputs": inputs, "outputs": {name: _sha256(out_dir / name) for name in sorted(out.names)},
    }
    (out_dir / MANIFEST).write_bytes(_json(manifest))
    return manifest


def rerun(manifest_path: str, out_dir: str, threads: int | None = None) -> list[str]:
    """Replay a manifest into ``out_dir``; returns the outputs that differ."""
    manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    if manifest.get("tool") != "temprel":
        raise UsageError(f"{manifest_path} is not a temprel manifest")
    for path, digest in manifest["inputs"].items():
        if not Path(path).exists():
            raise CorpusError(f"input {path} no longer exists")
        if _sha256(Path(path)) != digest:
            raise CorpusError(f"input {path} changed since the recorded run")
    if manifest.get("version") != __version__:
        log.warning("manifest was written by version %s, running %s", manifest.get("version"), __version__)
    rec = manifest["args"]
    new = execute(manifest["command"], rec, Path(out_dir), threads if threads is not None else rec.get("threads", 1))
    old, now = manifest["outputs"], new["outputs"]
    return sorted(name for name in set(old) | set(now) if old.get(name) != now.get(name))


_HANDLERS = {
    "synth": cmd_synth, "import-timeml": cmd_import_timeml, "normalize": cmd_normalize,
    "train-em": cmd_train_em, "predict-em": cmd_predict_em, "train-bcdc": cmd_train_bcdc,
    "run-bcdc": cmd_run_bcdc, "repair": cmd_repair, "evaluate": cmd_evaluate, "significance": cmd_significance,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"temprel: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "rerun":
            diff = rerun(args.manifest, args.out, args.threads)
            if diff:
                print(f"temprel: outputs differ from the manifest: {', '.join(diff)}", file=sys.stderr)
                return 1
            print(f"rerun reproduced all outputs in {args.out}")
            return 0
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be at least 1")
        execute(args.command, _recorded(args), Path(args.out), args.threads)
        return 0
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"temprel: error: {exc}", file=sys.stderr)
        return 2
    except (CorpusError, EvaluationError, ValueError, KeyError, OSError) as exc:
        print(f"temprel: error: {exc}", file=sys.stderr)
        return 1


__all__ = ["build_parser", "execute", "main", "repair_records", "rerun"]
