"""Acceptance suite: one test per criterion, each printing a PASS line with
its measured numbers. Run with `pytest tests/test_acceptance.py -s` to see
the per-criterion report."""

import os
import time

import numpy as np
import pytest

import oracles
from privacykit import baselines, corpus, evaluation, svm, synthetic, tag_cnn, tag_vectors
from privacykit.cli import main as cli_main, records_to_xy
from privacykit.tag_stats import TagClassCounts, information_gain
from test_tag_cnn import check_gradients, small_config


def _report(name, detail):
    print("PASS %s: %s" % (name, detail))


class TestSmoOracleEquivalence:
    def test_200_random_instances(self):
        rng = np.random.default_rng(2024)
        t0 = time.time()
        worst_rel, worst_agree = -np.inf, 1.0
        for trial in range(200):
            n = int(rng.integers(6, 41))
            d = int(rng.integers(2, 9))
            X = rng.normal(size=(n, d))
            y = np.ones(n)
            y[: n // 2] = -1
            rng.shuffle(y)
            if trial % 2:
                spec = svm.KernelSpec("rbf", gamma=float(rng.uniform(0.05, 2.0)))
            else:
                spec = svm.KernelSpec("poly", degree=int(rng.integers(1, 4)))
            c = float(rng.choice([0.1, 1.0, 10.0]))
            model = svm.smo_train(X, y, c, spec)
            alpha_o, obj_o = oracles.pg_dual_solve(X, y, c, spec)
            rel = (obj_o - model.train_objective_) / max(abs(obj_o), 1e-9)
            worst_rel = max(worst_rel, rel)
            assert rel <= 1e-3, "trial %d: SMO objective off by %.2e relative" % (trial, rel)
            K = svm.kernel_matrix(spec, X)
            bias_o = oracles.pg_bias(alpha_o, y, c, K)
            probe = rng.normal(size=(60, d))
            dv_o = svm.kernel_matrix(spec, probe, X) @ (alpha_o * y) + bias_o
            agree = float(np.mean(np.sign(dv_o) == np.sign(model.decision_values(probe))))
            worst_agree = min(worst_agree, agree)
            assert agree >= 0.95, "trial %d: only %.0f%% prediction agreement" % (trial, 100 * agree)
        elapsed = time.time() - t0
        assert elapsed < 60.0, "took %.1f s" % elapsed
        _report("smo-oracle-equivalence",
                "200 instances, worst rel gap %.2e, worst agreement %.3f, %.1f s"
                % (worst_rel, worst_agree, elapsed))


class TestTagCnnGradients:
    def test_20_random_models(self):
        rng = np.random.default_rng(99)
        t0 = time.time()
        for trial in range(20):
            cfg = small_config(
                vocab_size=int(rng.integers(6, 12)),
                embed_dim=int(rng.integers(3, 6)),
                num_filters=int(rng.integers(2, 5)),
                max_len=int(rng.integers(6, 10)),
            )
            model = tag_cnn.TagCnnModel(cfg, seed=trial)
            batch = [list(rng.choice(cfg.vocab, size=int(rng.integers(1, 6)), replace=False))
                     for _ in range(int(rng.integers(1, 4)))]
            ids = model.encode_batch(batch)
            labels = rng.integers(0, 2, size=len(batch))
            check_gradients(model, ids, labels, rtol=1e-4)
        elapsed = time.time() - t0
        assert elapsed < 30.0, "took %.1f s" % elapsed
        _report("tagcnn-gradient-check",
                "20 models, all gradients within 1e-4 of central differences, %.1f s" % elapsed)


class TestSyntheticEndToEnd:
    def test_full_protocol(self):
        t0 = time.time()
        records = synthetic.make_synthetic_corpus(4000, seed=0, ratio=3.0)
        grid = svm.GridSpec((1.0, 10.0),
                            (svm.KernelSpec("rbf", gamma=0.5), svm.KernelSpec("rbf", gamma=2.0)),
                            folds=3)
        svm_accs, cnn_accs, fuse_accs, reports = [], [], [], []
        for seed in range(5):
            plan = corpus.make_split(records, seed, 3000, 1000, ratio=3.0)
            by_id = {r.id: r for r in records}
            train = [by_id[i] for i in plan.train_ids]
            test = [by_id[i] for i in plan.test_ids]

            # SVM on visual features, grid-searched
            Xtr, ytr = records_to_xy(train, "fc-R")
            Xte, yte = records_to_xy(test, "fc-R")
            spec, c, _ = svm.grid_search_cv(Xtr, ytr, grid, seed=seed)
            model = svm.train_calibrated(Xtr, ytr, c, spec, seed=seed)
            preds = model.predict(Xte)
            rep = evaluation.metrics(evaluation.confusion(preds, yte))
            svm_accs.append(rep.accuracy)
            reports.append(rep)

            # Tag CNN on tags
            tr_seqs = [r.user_tags for r in train]
            tr_labels = [0 if r.label == "private" else 1 for r in train]
            vocab = tag_vectors.build_vocab(tr_seqs).tags
            cfg = tag_cnn.TagCnnConfig(vocab, embed_dim=8, num_filters=8,
                                       max_len=8, dropout=0.2)
            cnn = tag_cnn.TagCnnModel(cfg, seed=seed)
            n_dev = 300
            cnn.train(tr_seqs[n_dev:], tr_labels[n_dev:], tr_seqs[:n_dev], tr_labels[:n_dev],
                      tag_cnn.TrainConfig(epochs=8, batch_size=64, learning_rate=5e-3,
                                          seed=seed, early_stop_patience=3))
            probs = cnn.predict_proba_batch([r.user_tags for r in test])
            cnn_pred = np.where(probs >= 0.5, 1, -1)
            cnn_accs.append(evaluation.metrics(evaluation.confusion(cnn_pred, yte)).accuracy)

            # fusion: features + top-tag bits, same SVM config
            full_vocab = tag_vectors.build_vocab(tr_seqs)
            top = tag_vectors.select_top_tags(train, full_vocab, min(20, len(full_vocab)),
                                              pool="user")
            Xtr_f, _ = records_to_xy(train, "fc-R", tag_vocab=top)
            Xte_f, _ = records_to_xy(test, "fc-R", tag_vocab=top)
            fmodel = svm.smo_train(Xtr_f, ytr, c, spec)
            fpred = fmodel.predict(Xte_f)
            fuse_accs.append(evaluation.metrics(evaluation.confusion(fpred, yte)).accuracy)

        mean = evaluation.average_over_seeds(reports)
        assert mean.accuracy is not None  # averaged report produced
        svm_acc = float(np.mean(svm_accs))
        cnn_acc = float(np.mean(cnn_accs))
        fuse_acc = float(np.mean(fuse_accs))
        elapsed = time.time() - t0
        assert svm_acc >= 0.98, "SVM accuracy %.4f" % svm_acc
        assert cnn_acc >= 0.95, "Tag CNN accuracy %.4f" % cnn_acc
        assert fuse_acc >= max(svm_acc, cnn_acc) - 0.01, "fusion accuracy %.4f" % fuse_acc
        assert elapsed < 300.0, "took %.1f s"
        _report("synthetic-end-to-end",
                "SVM %.4f, Tag CNN %.4f, fusion %.4f, 5-seed mean acc %.4f, %.1f s"
                % (svm_acc, cnn_acc, fuse_acc, mean.accuracy, elapsed))


class TestInformationGainOracle:
    def test_1000_random_quadruples(self):
        rng = np.random.default_rng(7)
        checked = 0
        while checked < 1000:
            q = [int(v) for v in rng.integers(0, 50, size=4)]
            if sum(q) == 0:
                continue
            got = information_gain(TagClassCounts(*q))
            assert abs(got - oracles.ig_oracle(*q)) < 1e-12
            checked += 1
        hand = information_gain(TagClassCounts(3, 1, 1, 3))
        assert abs(hand - 0.1887) <= 1e-4
        _report("information-gain", "1000 quadruples within 1e-12; (3,1,1,3) = %.4f" % hand)


class TestMetricsAndCurves:
    def test_oracle_agreement_and_naive_baseline(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            n = int(rng.integers(1, 51))
            labels = rng.choice([1, -1], size=n)
            preds = rng.choice([1, -1], size=n)
            rep = evaluation.metrics(evaluation.confusion(preds, labels))
            ref = oracles.brute_force_metrics(preds, labels)
            assert abs(rep.accuracy - ref["accuracy"]) < 1e-12
            for cls in ("private", "public"):
                for m in ("precision", "recall", "f1"):
                    assert abs(rep.per_class[cls][m] - ref[cls][m]) < 1e-12
        for _ in range(100):
            n = int(rng.integers(2, 51))
            scores = np.round(rng.random(n), 3)
            labels = rng.choice([1, -1], size=n)
            curve = evaluation.score_curves(scores, labels)
            for p in curve:
                ref = oracles.brute_force_curve_point(scores, labels, p.threshold)
                assert np.allclose((p.precision, p.recall, p.f1, p.fpr, p.fnr), ref, atol=1e-12)
            row = next(p for p in curve if p.threshold == 0.5)
            rep = evaluation.metrics(evaluation.confusion(np.where(scores >= 0.5, 1, -1), labels))
            assert row.precision == rep.per_class["private"]["precision"]
            assert row.recall == rep.per_class["private"]["recall"]
            assert row.f1 == rep.per_class["private"]["f1"]
        # the naive all-public baseline on a 3:1 corpus
        labels = np.array([1] * 250 + [-1] * 750)
        preds = np.full(1000, -1)
        rep = evaluation.metrics(evaluation.confusion(preds, labels))
        assert abs(rep.accuracy - 0.750) <= 0.001
        _report("metrics-and-curves",
                "100+100 random instances match brute force; naive 3:1 accuracy %.3f" % rep.accuracy)


class TestGist:
    def test_dimension_constant_determinism(self):
        rng = np.random.default_rng(21)
        img = rng.random((48, 64))
        v1 = baselines.gist_extract(img)
        v2 = baselines.gist_extract(img)
        assert len(v1) == 512
        np.testing.assert_array_equal(v1, v2)
        flat = baselines.gist_extract(np.full((32, 32), 0.25))
        assert np.abs(flat).max() < 1e-6
        _report("gist", "length 512, constant-image max |entry| %.2e, bit-identical" % np.abs(flat).max())


class TestCliDeterminism:
    def _artifacts(self, out):
        files = {}
        for name in sorted(os.listdir(out)):
            if name == "config.json":  # records the differing output path
                continue
            with open(os.path.join(out, name), "rb") as fh:
                files[name] = fh.read()
        return files

    def test_commands_rerun_byte_identical(self, tmp_path):
        data = str(tmp_path / "data")
        assert cli_main(["synth", "--out", data, "--n", "240", "--seed", "3"]) == 0
        cpath = os.path.join(data, "corpus.jsonl")
        commands = {
            "synth": ["synth", "--n", "240", "--seed", "3"],
            "split": ["split", "--corpus", cpath, "--train-n", "160", "--test-n", "40", "--seed", "1"],
            "train-svm": ["train-svm", "--corpus", cpath, "--block", "fc-R",
                          "--kernel", "rbf", "--gamma", "0.5", "--c", "10", "--seed", "1"],
            "train-tagcnn": ["train-tagcnn", "--corpus", cpath, "--pool", "user",
                             "--embed-dim", "6", "--filters", "3", "--epochs", "2", "--seed", "1"],
            "eval": ["eval", "--corpus", cpath, "--block", "fc-R", "--kernel", "rbf",
                     "--gamma", "0.5", "--c", "10", "--seeds", "1",
                     "--train-n", "160", "--test-n", "40"],
            "tagstats": ["tagstats", "rank", "--corpus", cpath, "--top", "10"],
            "fuse": ["fuse", "--corpus", cpath, "--block", "fc-R", "--kernel", "rbf",
                     "--gamma", "0.5", "--c", "10", "--seeds", "1", "--top-tags", "10",
                     "--train-n", "160", "--test-n", "40"],
            "baseline": ["baseline", "--corpus", cpath, "--mode", "rule"],
        }
        for name, args in commands.items():
            runs = []
            for tag in ("x", "y"):
                out = str(tmp_path / ("%s_%s" % (name, tag)))
                assert cli_main(args + ["--out", out]) == 0, name
                runs.append(self._artifacts(out))
            assert runs[0] == runs[1], "command %r not byte-identical" % name
        _report("cli-determinism", "%d commands byte-identical across reruns" % len(commands))


class TestPairedTTest:
    def test_reference_case(self):
        r = evaluation.paired_ttest([0, 0, 0, 0, 0], [1, 2, 3, 4, 5])
        assert abs(r.t_statistic - 4.2426) <= 1e-3
        assert r.degrees_of_freedom == 4
        assert r.significant_at_05
        _report("paired-ttest", "t=%.4f df=%d significant" % (r.t_statistic, r.degrees_of_freedom))
