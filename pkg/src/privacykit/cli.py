"""Command-line pipeline: split, train, evaluate, curves, tag analytics,
fusion and baselines. Every command snapshots its configuration into the
output directory and writes deterministic artifacts."""

import argparse
import json
import os
import sys

import numpy as np

from . import baselines, corpus, evaluation, svm, synthetic, tag_stats, tag_vectors
from .corpus import PRIVATE


class CliError(Exception):
    pass


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    snap = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    with open(os.path.join(args.out, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(snap, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return args.out


def _get_block(rec, block):
    if block not in rec.features:
        raise CliError(
            "record %s has no feature block %r; available: %s"
            % (rec.id, block, ", ".join(sorted(rec.features)) or "(none)")
        )
    return rec.features[block]


def records_to_xy(records, block, tag_vocab=None, pool="user", k_deep=10, standardize=False):
    """Feature matrix and +/-1 labels (private positive) for SVM training."""
    rows = []
    for rec in records:
        vec = _get_block(rec, block) if block else np.zeros(0)
        if tag_vocab is not None:
            bits = tag_vectors.bot_encode(corpus.record_tags(rec, pool=pool, k_deep=k_deep), tag_vocab)
            vec = tag_vectors.fuse_features(vec, bits)
        rows.append(vec)
    X = np.stack(rows)
    if standardize:
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        sd[sd == 0] = 1.0
        X = (X - mu) / sd
    y = np.array([1.0 if r.label == PRIVATE else -1.0 for r in records])
    return X, y


def _select_records(records, ids):
    by_id = {r.id: r for r in records}
    return [by_id[i] for i in ids]


def _grid_from_args(args):
    if args.c:
        c_values = tuple(args.c)
    else:
        c_values = svm.PAPER_DEFAULT_C
    kernels = []
    if args.kernel in ("rbf", "both"):
        for g in (args.gamma or [0.05, 0.5]):
            kernels.append(svm.KernelSpec("rbf", gamma=g))
    if args.kernel in ("poly", "both"):
        for d in (args.degree or [1, 2]):
            kernels.append(svm.KernelSpec("poly", degree=d))
    return svm.GridSpec(c_values, tuple(kernels), folds=args.folds)


def _single_kernel(args):
    if args.kernel == "poly":
        return svm.KernelSpec("poly", degree=(args.degree or [2])[0])
    return svm.KernelSpec("rbf", gamma=(args.gamma or [0.5])[0])


def _default_sizes(records, args):
    n = len(records)
    train_n = args.train_n or int(n * 27 / 32)
    test_n = args.test_n or int(n * 5 / 32)
    return train_n, test_n


def _write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


# --- commands ---------------------------------------------------------------

def cmd_synth(args):
    out = _outdir(args)
    records = synthetic.make_synthetic_corpus(args.n, seed=args.seed, ratio=args.ratio)
    corpus.save_corpus(records, os.path.join(out, "corpus.jsonl"))
    print("wrote %d records" % len(records))


def cmd_split(args):
    out = _outdir(args)
    records = corpus.load_corpus(args.corpus)
    train_n, test_n = _default_sizes(records, args)
    plan = corpus.make_split(records, args.seed, train_n, test_n, ratio=args.ratio)
    _write_json(plan.to_json_obj(), os.path.join(out, "split.json"))
    print("train=%d test=%d" % (len(plan.train_ids), len(plan.test_ids)))


def _train_svm_on(records, args, tag_vocab=None):
    X, y = records_to_xy(records, args.block, tag_vocab=tag_vocab,
                         pool=args.pool, k_deep=args.k_deep_tags,
                         standardize=args.standardize)
    table = None
    if args.grid:
        spec, c, table = svm.grid_search_cv(X, y, _grid_from_args(args), seed=args.seed)
    else:
        spec, c = _single_kernel(args), (args.c or [1.0])[0]
    model = svm.train_calibrated(X, y, c, spec, seed=args.seed)
    return model, spec, c, table


def cmd_train_svm(args):
    out = _outdir(args)
    records = corpus.load_corpus(args.corpus)
    if args.split:
        with open(args.split, "r", encoding="utf-8") as fh:
            records = _select_records(records, json.load(fh)["train_ids"])
    try:
        model, spec, c, table = _train_svm_on(records, args)
    except (svm.SvmError, CliError) as exc:
        raise CliError(str(exc))
    model.save(os.path.join(out, "svm_model.txt"))
    if table is not None:
        with open(os.path.join(out, "cv_table.tsv"), "w", encoding="utf-8") as fh:
            fh.write("kernel\tc\tmean_weighted_f1\terror\n")
            for row in table:
                fh.write("%s\t%g\t%s\t%s\n" % (
                    row["kernel"], row["c"],
                    "" if row["mean_weighted_f1"] is None else "%.6f" % row["mean_weighted_f1"],
                    row["error"] or ""))
    _write_json({"kernel": spec.label(), "c": c}, os.path.join(out, "selected.json"))
    print("trained %s C=%g, %d SVs" % (spec.label(), c, len(model.dual_coefs)))


def cmd_train_tagcnn(args):
    from . import tag_cnn

    out = _outdir(args)
    records = corpus.load_corpus(args.corpus)
    if args.split:
        with open(args.split, "r", encoding="utf-8") as fh:
            records = _select_records(records, json.load(fh)["train_ids"])
    seqs = [corpus.record_tags(r, pool=args.pool, k_deep=args.k_deep_tags) for r in records]
    labels = [0 if r.label == PRIVATE else 1 for r in records]
    vocab = tag_vectors.build_vocab(seqs).tags
    n_dev = max(1, len(seqs) // 10)
    cfg = tag_cnn.TagCnnConfig(vocab, embed_dim=args.embed_dim,
                               num_filters=args.filters, max_len=args.max_len)
    model = tag_cnn.TagCnnModel(cfg, seed=args.seed)
    if args.embeddings:
        model.params["emb"] = tag_cnn.load_pretrained_embeddings(
            args.embeddings, vocab, args.embed_dim, seed=args.seed)
    tc = tag_cnn.TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                             learning_rate=args.lr, seed=args.seed)
    history = model.train(seqs[n_dev:], labels[n_dev:], seqs[:n_dev], labels[:n_dev], tc)
    model.save(os.path.join(out, "tagcnn_model.npz"))
    _write_json(history, os.path.join(out, "history.json"))
    print("trained %d epochs, best dev F1 %.4f" % (
        len(history), max(h["dev_weighted_f1"] for h in history)))


def _eval_scores_file(args, out):
    labels, scores = [], []
    with open(args.scores_file, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("id"):
                continue
            _, label, score = line.split("\t" if "\t" in line else ",")[:3]
            labels.append(label)
            scores.append(float(score))
    preds = [1 if s >= args.threshold else -1 for s in scores]
    rep = evaluation.metrics(evaluation.confusion(preds, labels))
    evaluation.write_report_table([("scores", rep.as_row())], os.path.join(out, "report.tsv"))
    curve = evaluation.score_curves(scores, labels)
    evaluation.write_curve_table(curve, os.path.join(out, "curve.tsv"))
    print("accuracy %.4f overall F1 %.4f" % (rep.accuracy, rep.overall["f1"]))


def cmd_eval(args):
    """Full protocol: per seed, split / train / test; then average across seeds."""
    out = _outdir(args)
    if args.scores_file:
        _eval_scores_file(args, out)
        return
    records = corpus.load_corpus(args.corpus)
    train_n, test_n = _default_sizes(records, args)
    rows, reports = [], []
    for seed in range(args.seeds):
        plan = corpus.make_split(records, seed, train_n, test_n, ratio=args.ratio)
        train = _select_records(records, plan.train_ids)
        test = _select_records(records, plan.test_ids)
        tag_vocab = None
        if args.top_tags:
            full = tag_vectors.build_vocab(
                corpus.record_tags(r, pool=args.pool, k_deep=args.k_deep_tags) for r in train)
            tag_vocab = tag_vectors.select_top_tags(
                train, full, min(args.top_tags, len(full)),
                pool=args.pool, k_deep=args.k_deep_tags)
        model, spec, c, _ = _train_svm_on(train, args, tag_vocab=tag_vocab)
        Xte, yte = records_to_xy(test, args.block, tag_vocab=tag_vocab,
                                 pool=args.pool, k_deep=args.k_deep_tags,
                                 standardize=args.standardize)
        probs = model.predict_proba(Xte)
        preds = np.where(probs >= args.threshold, 1, -1)
        rep = evaluation.metrics(evaluation.confusion(preds, yte))
        reports.append(rep)
        rows.append(("seed%d" % seed, rep.as_row()))
    mean = evaluation.average_over_seeds(reports)
    rows.append(("mean", mean.as_row()))
    evaluation.write_report_table(rows, os.path.join(out, "report.tsv"))
    print("mean accuracy %.4f overall F1 %.4f" % (mean.accuracy, mean.overall["f1"]))


def cmd_curves(args):
    out = _outdir(args)
    records = corpus.load_corpus(args.corpus)
    if args.split:
        with open(args.split, "r", encoding="utf-8") as fh:
            records = _select_records(records, json.load(fh)["test_ids"])
    model = svm.SvmModel.load(args.model)
    X, y = records_to_xy(records, args.block, standardize=args.standardize)
    scores = model.predict_proba(X)
    curve = evaluation.score_curves(scores, y)
    evaluation.write_curve_table(curve, os.path.join(out, "curve.tsv"))
    t, v = evaluation.breakeven(curve)
    _write_json({"threshold": t, "value": v}, os.path.join(out, "breakeven.json"))
    print("breakeven %.4f at threshold %.4f" % (v, t))


def cmd_tagstats(args):
    out = _outdir(args)
    records = corpus.load_corpus(args.corpus)
    kw = dict(pool=args.pool, k_deep=args.k_deep_tags)
    if args.action == "rank":
        ranked = tag_stats.rank_by_ig(records, **kw)[: args.top]
        tag_stats.write_ranked_tags(ranked, os.path.join(out, "ig_top%d.tsv" % args.top))
        print("wrote %d ranked tags" % len(ranked))
    elif args.action == "freq":
        for label in ("private", "public"):
            table = tag_stats.frequency_table(records, label, top_n=args.top, **kw)
            with open(os.path.join(out, "freq_%s.tsv" % label), "w", encoding="utf-8") as fh:
                fh.write("tag\tcount\n")
                for t, cnt in table:
                    fh.write("%s\t%d\n" % (t, cnt))
        print("wrote frequency tables")
    elif args.action == "cooc":
        for label in ("private", "public"):
            graph = tag_stats.cooc_graph(records, label, anchor=args.anchor,
                                         threshold=args.cooc_threshold, **kw)
            tag_stats.write_graph(graph, os.path.join(out, "cooc_%s.tsv" % label))
        print("wrote co-occurrence graphs")
    elif args.action == "ratio":
        counts = tag_stats.count_tags(records, **kw)
        top = sorted(counts, key=lambda t: (-counts[t].present, t))[: args.top]
        with open(os.path.join(out, "ratio.tsv"), "w", encoding="utf-8") as fh:
            fh.write("tag\tprivate_share\n")
            for t in top:
                fh.write("%s\t%.6f\n" % (t, tag_stats.private_public_ratio(records, t, **kw)))
        print("wrote private/public ratios")


def cmd_fuse(args):
    """Train and evaluate an SVM on visual features fused with top-scored tags."""
    args.top_tags = args.top_tags or 350
    cmd_eval(args)


def cmd_baseline(args):
    out = _outdir(args)
    records = corpus.load_corpus(args.corpus)
    if args.mode == "rule":
        preds = [baselines.rule_tag_classify(r.user_tags) for r in records]
        rep = evaluation.metrics(evaluation.confusion(preds, [r.label for r in records]))
        evaluation.write_report_table([("rule", rep.as_row())], os.path.join(out, "report.tsv"))
        print("rule accuracy %.4f" % rep.accuracy)
    elif args.mode == "gist":
        bank = baselines.gabor_bank()
        n = 0
        for rec in records:
            rec.features["gist"] = baselines.gist_extract(
                baselines.load_pgm(os.path.join(args.images, rec.id + ".pgm")), bank)
            n += 1
        corpus.save_corpus(records, os.path.join(out, "corpus_gist.jsonl"))
        print("encoded GIST for %d records" % n)
    elif args.mode == "bovw":
        descs = {r.id: np.loadtxt(os.path.join(args.descriptors, r.id + ".txt"), ndmin=2)
                 for r in records}
        all_desc = np.concatenate(list(descs.values()))
        vocab = baselines.kmeans_fit(all_desc, k=args.visual_words, seed=args.seed)
        for rec in records:
            rec.features["bovw"] = baselines.bovw_encode(descs[rec.id], vocab)
        corpus.save_corpus(records, os.path.join(out, "corpus_bovw.jsonl"))
        print("encoded BoVW for %d records" % len(records))


# --- parser -----------------------------------------------------------------

def _add_common(p, corpus_required=True):
    p.add_argument("--corpus", required=corpus_required)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)


def _add_svm_flags(p):
    p.add_argument("--block", default="fc-R")
    p.add_argument("--grid", action="store_true")
    p.add_argument("--kernel", choices=["rbf", "poly", "both"], default="rbf")
    p.add_argument("--c", type=float, action="append")
    p.add_argument("--gamma", type=float, action="append")
    p.add_argument("--degree", type=int, action="append")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--pool", choices=["user", "deep", "both"], default="user")
    p.add_argument("--k-deep-tags", type=int, default=10)


def build_parser():
    ap = argparse.ArgumentParser(prog="privacykit",
                                 description="Image privacy prediction toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=4000)
    p.add_argument("--ratio", type=float, default=3.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="seeded train/test split")
    _add_common(p)
    p.add_argument("--train-n", type=int)
    p.add_argument("--test-n", type=int)
    p.add_argument("--ratio", type=float, default=3.0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train-svm", help="train a kernel SVM on a feature block")
    _add_common(p)
    _add_svm_flags(p)
    p.add_argument("--split")
    p.set_defaults(func=cmd_train_svm)

    p = sub.add_parser("train-tagcnn", help="train the tag CNN")
    _add_common(p)
    p.add_argument("--split")
    p.add_argument("--pool", choices=["user", "deep", "both"], default="both")
    p.add_argument("--k-deep-tags", type=int, default=10)
    p.add_argument("--embed-dim", type=int, default=300)
    p.add_argument("--filters", type=int, default=128)
    p.add_argument("--max-len", type=int, default=32)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--embeddings")
    p.set_defaults(func=cmd_train_tagcnn)

    for name, func in (("eval", cmd_eval), ("fuse", cmd_fuse)):
        p = sub.add_parser(name, help="multi-seed split/train/test protocol"
                           if name == "eval" else "visual+tag fusion protocol")
        _add_common(p, corpus_required=False)
        _add_svm_flags(p)
        p.add_argument("--seeds", type=int, default=5)
        p.add_argument("--train-n", type=int)
        p.add_argument("--test-n", type=int)
        p.add_argument("--ratio", type=float, default=3.0)
        p.add_argument("--threshold", type=float, default=0.5)
        p.add_argument("--top-tags", type=int, default=0 if name == "eval" else 350)
        p.add_argument("--scores-file")
        p.set_defaults(func=func)

    p = sub.add_parser("curves", help="PR/threshold curves from a trained model")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--block", default="fc-R")
    p.add_argument("--split")
    p.add_argument("--standardize", action="store_true")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("tagstats", help="tag analytics")
    _add_common(p)
    p.add_argument("action", choices=["rank", "freq", "cooc", "ratio"])
    p.add_argument("--pool", choices=["user", "deep", "both"], default="both")
    p.add_argument("--k-deep-tags", type=int, default=10)
    p.add_argument("--top", type=int, default=50)
    p.add_argument("--anchor")
    p.add_argument("--cooc-threshold", type=float, default=0.2)
    p.set_defaults(func=cmd_tagstats)

    p = sub.add_parser("baseline", help="rule / GIST / BoVW baselines")
    _add_common(p)
    p.add_argument("--mode", choices=["rule", "gist", "bovw"], required=True)
    p.add_argument("--images")
    p.add_argument("--descriptors")
    p.add_argument("--visual-words", type=int, default=128)
    p.set_defaults(func=cmd_baseline)

    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CliError, corpus.CorpusError, svm.SvmError,
            baselines.BaselineError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
