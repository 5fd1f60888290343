import io

import numpy as np
import pytest

from coldpair.backends import BackendConfig
from coldpair.corpus import Document
from coldpair.doc2vec import TrainConfig
from coldpair.evaluation import (EvalError, load_truth, precision_at_k,
                                 recall_at_k, run_benchmark, save_truth)
from coldpair.synthetic import boilerplate_corpus, truth_from_clusters


class TestPrecision:
    def test_perfect(self):
        assert precision_at_k(["a", "b"], {"a", "b"}, 2) == 1.0

    def test_half(self):
        retrieved = [f"r{i}" for i in range(5)] + [f"x{i}" for i in range(5)]
        assert precision_at_k(retrieved, {f"r{i}" for i in range(10)}, 10) == 0.5

    def test_min_clamp(self):
        # 3 retrieved, 2 relevant among them, k=10 -> 2/3
        assert precision_at_k(["a", "b", "c"], {"a", "b"}, 10) \
            == pytest.approx(2 / 3)

    def test_empty_retrieval(self):
        assert precision_at_k([], {"a"}, 10) == 0.0

    def test_in_unit_interval(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            retrieved = [f"d{i}" for i in rng.integers(0, 30, size=15)]
            seen = list(dict.fromkeys(retrieved))
            relevant = {f"d{i}" for i in rng.integers(0, 30, size=10)}
            assert 0.0 <= precision_at_k(seen, relevant, 10) <= 1.0


class TestRecall:
    def test_superset(self):
        assert recall_at_k(["a", "b", "c"], {"a", "b"}, 10) == 1.0

    def test_disjoint(self):
        assert recall_at_k(["x", "y"], {"a"}, 10) == 0.0

    def test_counting(self):
        retrieved = ["a", "b", "c"] + [f"x{i}" for i in range(17)]
        assert recall_at_k(retrieved, {"a", "b", "c", "d"}, 20) == 0.75

    def test_empty_relevant_error(self):
        with pytest.raises(EvalError):
            recall_at_k(["a"], set(), 10)

    def test_monotone_in_k(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            retrieved = [f"d{i}" for i in range(30)]
            rng.shuffle(retrieved)
            relevant = set(f"d{i}" for i in rng.integers(0, 30, size=8))
            values = [recall_at_k(retrieved, relevant, k)
                      for k in (5, 10, 20, 30)]
            assert values == sorted(values)


class TestTruthIO:
    def test_round_trip(self):
        truth = {"q1": {"a", "b"}, "q2": {"c"}}
        buf = io.StringIO()
        save_truth(truth, buf)
        buf.seek(0)
        assert load_truth(buf) == truth


def small_cluster_docs():
    docs = boilerplate_corpus(n_docs=60, n_clusters=3, doc_len=40,
                              boiler_frac=0.5, seed=6)
    truth = truth_from_clusters(docs, n_queries=10, seed=6)
    return docs, truth


def fast_config(name: str) -> BackendConfig:
    return BackendConfig(name=name, seed=1, min_count=1, n_topics=3, sweeps=30,
                         fold_in_sweeps=20,
                         train=TrainConfig(dim=24, epochs=3, seed=1))


@pytest.fixture(scope="module")
def report():
    docs, truth = small_cluster_docs()
    return run_benchmark(docs, truth, ["tfidf", "doc2vec"],
                         ks=(10, 20, 30, 50), seed=1,
                         config_factory=fast_config)


class TestRunBenchmark:
    def test_row_order_and_ks(self, report):
        assert [r.backend for r in report.rows] == ["tfidf", "doc2vec"]
        assert report.ks == (10, 20, 30, 50)

    def test_metrics_in_range(self, report):
        for row in report.rows:
            assert 0.0 <= row.precision_at_10 <= 1.0
            for v in row.recall_at.values():
                assert 0.0 <= v <= 1.0
            assert row.runtime_seconds >= 0.0

    def test_recall_monotone_across_ks(self, report):
        for row in report.rows:
            values = [row.recall_at[k] for k in report.ks]
            assert values == sorted(values)

    def test_missing_query_raises(self):
        docs, truth = small_cluster_docs()
        truth["ghost"] = {"d0001"}
        with pytest.raises(EvalError):
            run_benchmark(docs, truth, ["tfidf"], config_factory=fast_config)

    def test_duplicate_doc_perfect_recall_tfidf(self):
        docs, _ = small_cluster_docs()
        twin = Document(id="twin", body=docs[0].body,
                        classification=docs[0].classification, warm=True)
        truth = {docs[0].id: {"twin"}}
        report = run_benchmark(docs + [twin], truth, ["tfidf"],
                               config_factory=fast_config)
        assert report.rows[0].recall_at[10] == 1.0

    def test_query_order_invariance(self):
        docs, truth = small_cluster_docs()
        reversed_truth = dict(reversed(list(truth.items())))
        a = run_benchmark(docs, truth, ["tfidf"], config_factory=fast_config)
        b = run_benchmark(docs, reversed_truth, ["tfidf"],
                          config_factory=fast_config)
        assert a.rows[0].precision_at_10 == pytest.approx(
            b.rows[0].precision_at_10, abs=1e-12)

    def test_per_query_metrics_recomputed_independently(self):
        # recompute the averaged metrics from raw retrievals with separate code
        from coldpair.backends import Embedder
        from coldpair.matcher import top_k_similar
        docs, truth = small_cluster_docs()
        cfg = fast_config("tfidf")
        embedder = Embedder(cfg).fit(docs)
        index = embedder.build_index(docs)
        report = run_benchmark(docs, truth, ["tfidf"], ks=(10,),
                               config_factory=fast_config)
        prec_total = 0.0
        for q, relevant in truth.items():
            hits = top_k_similar(index, index.vector(q), 10, exclude=q)
            top = [d for d, _ in hits][:10]
            prec_total += len(set(top) & relevant) / min(10, len(top))
        assert report.rows[0].precision_at_10 == pytest.approx(
            prec_total / len(truth), abs=1e-9)

    def test_report_text_runtime_toggle(self, report):
        with_rt = report.to_text(include_runtime=True)
        without = report.to_text(include_runtime=False)
        assert "seconds" in with_rt and "seconds" not in without
