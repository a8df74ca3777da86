import json

import numpy as np
import pytest

from privacykit import corpus

from pkextract.extract import ExtractionJob, discover_images, extract_features
from pkextract.models import ARCH_BLOCKS, ExtractorError, top_deep_tags


def run_job(tmp_path, images, arch, **kw):
    out = tmp_path / ("%s.jsonl" % arch)
    job = ExtractionJob(image_dir=str(images), arch=arch, out_path=str(out), **kw)
    n = extract_features(job)
    return n, corpus.load_corpus(out)


class TestContract:
    """Every emitted block has its documented dimension, prob sums to one,
    and top-10 deep tags match the toolkit's own ranking."""

    def test_alexnet_ten_image_sample(self, toy_sample, tmp_path):
        root, ids = toy_sample
        n, records = run_job(tmp_path, root, "alexnet")
        assert n == len(records) == 10
        for rec in records:
            for block, dim in ARCH_BLOCKS["alexnet"].items():
                assert len(rec.features[block]) == dim, block
            assert abs(sum(rec.prob_values) - 1.0) <= 1e-4
            expected = corpus.deep_tags_topk(rec.prob_values, rec.prob_names, 10)
            assert top_deep_tags(rec.prob_values, 10, rec.prob_names) == expected
            assert len(set(expected)) == 10

    @pytest.mark.parametrize("arch", ["vgg16", "googlenet", "resnet101"])
    def test_other_architectures_dimensions(self, tmp_path, arch):
        from conftest import write_toy_images
        images = tmp_path / "imgs"
        images.mkdir()
        write_toy_images(images, 2, seed=3)
        _, records = run_job(tmp_path, images, arch, batch_size=2)
        for rec in records:
            for block, dim in ARCH_BLOCKS[arch].items():
                assert len(rec.features[block]) == dim, block
            assert abs(sum(rec.prob_values) - 1.0) <= 1e-4

    def test_records_load_through_toolkit_corpus(self, toy_sample, tmp_path):
        root, ids = toy_sample
        _, records = run_job(tmp_path, root, "alexnet", blocks=("fc8", "prob"))
        assert sorted(r.id for r in records) == sorted(i for i, _ in ids)
        labels = {r.id: r.label for r in records}
        for image_id, label in ids:
            assert labels[image_id] == label


class TestJobValidation:
    def test_missing_block_is_job_error(self, toy_sample):
        root, _ = toy_sample
        with pytest.raises(ExtractorError, match="fc6"):
            ExtractionJob(image_dir=str(root), arch="resnet101",
                          out_path="x.jsonl", blocks=("fc6",))

    def test_unknown_arch(self):
        with pytest.raises(ExtractorError):
            ExtractionJob(image_dir=".", arch="lenet", out_path="x.jsonl")

    def test_empty_dir(self, tmp_path):
        with pytest.raises(ExtractorError):
            discover_images(str(tmp_path), "public")


class TestDeterminismAndRobustness:
    def test_rerun_byte_identical(self, toy_sample, tmp_path):
        root, _ = toy_sample
        outs = []
        for name in ("a", "b"):
            out = tmp_path / ("%s.jsonl" % name)
            job = ExtractionJob(image_dir=str(root), arch="alexnet",
                                out_path=str(out), blocks=("fc8", "prob"))
            extract_features(job)
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_unreadable_image_skipped(self, tmp_path):
        from conftest import write_toy_images
        images = tmp_path / "imgs"
        images.mkdir()
        write_toy_images(images, 4, seed=5)
        (images / "broken.png").write_bytes(b"not an image")
        out = tmp_path / "out.jsonl"
        job = ExtractionJob(image_dir=str(images), arch="alexnet",
                            out_path=str(out), blocks=("prob",))
        assert extract_features(job) == 4

    def test_tags_file_applied(self, tmp_path):
        from conftest import write_toy_images
        images = tmp_path / "imgs"
        images.mkdir()
        ids = write_toy_images(images, 2, seed=7)
        tags = {ids[0][0]: ["beach", "friends"]}
        tags_file = tmp_path / "tags.json"
        tags_file.write_text(json.dumps(tags))
        out = tmp_path / "out.jsonl"
        job = ExtractionJob(image_dir=str(images), arch="alexnet",
                            out_path=str(out), blocks=("prob",),
                            tags_file=str(tags_file))
        extract_features(job)
        by_id = {r.id: r for r in corpus.load_corpus(out)}
        assert by_id[ids[0][0]].user_tags == ["beach", "friends"]
        assert by_id[ids[1][0]].user_tags == []

    def test_batching_invariant(self, toy_sample, tmp_path):
        root, _ = toy_sample
        vecs = []
        for bs in (3, 10):
            out = tmp_path / ("bs%d.jsonl" % bs)
            job = ExtractionJob(image_dir=str(root), arch="alexnet",
                                out_path=str(out), blocks=("fc8",), batch_size=bs)
            extract_features(job)
            recs = corpus.load_corpus(out)
            vecs.append(np.stack([r.features["fc8"] for r in recs]))
        np.testing.assert_allclose(vecs[0], vecs[1], atol=1e-4)
