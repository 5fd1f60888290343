import io
import math

import numpy as np
import pytest

from coldpair.corpus import (CorpusError, TokenizedDocument, build_vocabulary,
                             tokenize_documents)
from coldpair.doc2vec import (Doc2VecModel, TrainConfig, exact_softmax_probs,
                              infer_doc_vector, load_doc2vec,
                              negative_sampling_grads, negative_sampling_loss,
                              save_doc2vec, train_doc2vec)
from coldpair.synthetic import two_cluster_corpus


def fixture_corpus(seed=7):
    docs = two_cluster_corpus(n_docs_per_cluster=30, vocab_size=30,
                              doc_len=60, seed=seed)
    tokenized = tokenize_documents(docs)
    vocab = build_vocabulary(tokenized, min_count=1)
    return tokenized, vocab


@pytest.fixture(scope="module")
def trained():
    tokenized, vocab = fixture_corpus()
    config = TrainConfig(dim=32, epochs=5, seed=7)
    return train_doc2vec(tokenized, config, vocab), tokenized, vocab


class TestLoss:
    def test_all_zero_vectors(self):
        word_out = np.zeros((3, 4))
        h = np.zeros(4)
        # sigma(0)=0.5 twice
        assert negative_sampling_loss(h, 0, [1], word_out) \
            == pytest.approx(2 * math.log(2), abs=1e-12)

    def test_zero_negatives_zero_dot(self):
        word_out = np.zeros((2, 4))
        assert negative_sampling_loss(np.zeros(4), 0, [], word_out) \
            == pytest.approx(math.log(2), abs=1e-12)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(0)
        h_step = 1e-5
        for _ in range(100):
            dim = int(rng.integers(2, 17))
            n_words = int(rng.integers(3, 10))
            word_out = rng.normal(scale=0.8, size=(n_words, dim))
            h = rng.normal(scale=0.8, size=dim)
            target = int(rng.integers(0, n_words))
            negatives = rng.integers(0, n_words, size=int(rng.integers(1, 4)))
            negatives = [int(n) for n in negatives if n != target]

            grad_h, grad_rows = negative_sampling_grads(h, target, negatives,
                                                        word_out)
            # central differences wrt context mean
            for d in range(dim):
                hp, hm = h.copy(), h.copy()
                hp[d] += h_step
                hm[d] -= h_step
                fd = (negative_sampling_loss(hp, target, negatives, word_out)
                      - negative_sampling_loss(hm, target, negatives, word_out)) \
                    / (2 * h_step)
                denom = max(abs(fd), abs(grad_h[d]), 1e-8)
                assert abs(fd - grad_h[d]) / denom <= 1e-4
            # central differences wrt each touched output row
            for row, grad in grad_rows.items():
                for d in range(dim):
                    wp, wm = word_out.copy(), word_out.copy()
                    wp[row, d] += h_step
                    wm[row, d] -= h_step
                    fd = (negative_sampling_loss(h, target, negatives, wp)
                          - negative_sampling_loss(h, target, negatives, wm)) \
                        / (2 * h_step)
                    denom = max(abs(fd), abs(grad[d]), 1e-8)
                    assert abs(fd - grad[d]) / denom <= 1e-4


class TestTrain:
    def test_dim_shapes(self, trained):
        model, tokenized, vocab = trained
        assert model.doc_vecs.shape == (len(tokenized), 32)
        assert model.word_in.shape == (vocab.size, 32)
        assert model.word_out.shape == (vocab.size, 32)

    def test_default_dim_100(self):
        docs = [TokenizedDocument("d0", ["aa", "bb", "cc", "aa"] * 3)]
        vocab = build_vocabulary(docs)
        model = train_doc2vec(docs, TrainConfig(epochs=1, seed=0), vocab)
        assert model.doc_vecs.shape == (1, 100)

    def test_empty_corpus(self):
        docs = [TokenizedDocument("d0", ["aa", "aa"])]
        vocab = build_vocabulary(docs)
        with pytest.raises(CorpusError):
            train_doc2vec([], TrainConfig(), vocab)

    def test_cluster_separation(self, trained):
        model, _, _ = trained
        vecs = model.doc_vecs / np.linalg.norm(model.doc_vecs, axis=1,
                                               keepdims=True)
        sims = vecs @ vecs.T
        n = 30
        within = (sims[:n, :n].sum() - n) / (n * (n - 1)) / 2 \
            + (sims[n:, n:].sum() - n) / (n * (n - 1)) / 2
        cross = sims[:n, n:].mean()
        assert within > cross

    def test_loss_decreases(self, trained):
        model, _, _ = trained
        assert model.epoch_losses[-1] < model.epoch_losses[0]

    def test_deterministic(self):
        tokenized, vocab = fixture_corpus()
        config = TrainConfig(dim=16, epochs=1, seed=3)
        a = train_doc2vec(tokenized, config, vocab)
        b = train_doc2vec(tokenized, config, vocab)
        assert (a.doc_vecs == b.doc_vecs).all()
        assert (a.word_in == b.word_in).all()
        assert (a.word_out == b.word_out).all()

    def test_finite_parameters(self, trained):
        model, _, _ = trained
        for mat in (model.word_in, model.word_out, model.doc_vecs):
            assert np.isfinite(mat).all()


class TestExactSoftmax:
    def test_probs_normalized_during_training(self):
        docs = [TokenizedDocument(f"d{i}",
                                  [f"w{j:02d}" for j in range(20)] * 2)
                for i in range(4)]
        vocab = build_vocabulary(docs)
        assert vocab.size <= 50
        sums = []
        config = TrainConfig(dim=8, epochs=1, negative_k=0, seed=1)
        train_doc2vec(docs, config, vocab, prob_sum_hook=sums)
        assert len(sums) > 0
        for s in sums:
            assert abs(s - 1.0) <= 1e-9

    def test_rejects_large_vocab(self):
        docs = [TokenizedDocument("d0", [f"t{i:04d}" for i in range(2500)])]
        vocab = build_vocabulary(docs)
        with pytest.raises(ValueError):
            train_doc2vec(docs, TrainConfig(negative_k=0), vocab)

    def test_probs_sum_to_one_directly(self):
        rng = np.random.default_rng(2)
        word_out = rng.normal(size=(30, 8)).astype(np.float32)
        probs = exact_softmax_probs(rng.normal(size=8).astype(np.float32),
                                    word_out)
        assert abs(probs.sum() - 1.0) <= 1e-9


class TestInfer:
    def test_empty_tokens_error(self, trained):
        model, _, _ = trained
        with pytest.raises(CorpusError):
            infer_doc_vector(model, [])

    def test_steps_zero_returns_seeded_init(self, trained):
        model, _, _ = trained
        vec = infer_doc_vector(model, ["cl0tok000"], steps=0, seed=5)
        assert (np.abs(vec) <= 0.5 / model.dim).all()
        again = infer_doc_vector(model, ["cl0tok000"], steps=0, seed=5)
        assert (vec == again).all()

    def test_reinferred_training_doc_ranks_high(self, trained):
        model, tokenized, _ = trained
        doc = tokenized[0]
        inferred = infer_doc_vector(model, doc.tokens, steps=50, seed=3)
        stored = model.doc_vecs / np.linalg.norm(model.doc_vecs, axis=1,
                                                 keepdims=True)
        sims = stored @ (inferred / np.linalg.norm(inferred))
        own = sims[0]
        rank = int((sims > own).sum())
        assert rank < max(1, int(0.10 * len(sims)))

    def test_model_not_mutated(self, trained):
        model, tokenized, _ = trained
        before = (model.word_in.tobytes(), model.word_out.tobytes(),
                  model.doc_vecs.tobytes())
        infer_doc_vector(model, tokenized[3].tokens, steps=20, seed=1)
        after = (model.word_in.tobytes(), model.word_out.tobytes(),
                 model.doc_vecs.tobytes())
        assert before == after


class TestDocVectorLookup:
    def test_known_id(self, trained):
        model, tokenized, _ = trained
        assert model.doc_vector(tokenized[0].id).shape == (32,)

    def test_unknown_id(self, trained):
        model, _, _ = trained
        with pytest.raises(KeyError):
            model.doc_vector("nope")

    def test_rows_independent(self, trained):
        model, tokenized, _ = trained
        a = model.doc_vector(tokenized[0].id)
        b_before = model.doc_vector(tokenized[1].id).copy()
        a[:] = 999.0  # mutating the copy must not touch other rows
        assert (model.doc_vector(tokenized[1].id) == b_before).all()


class TestPersistence:
    def test_round_trip(self, trained):
        model, _, _ = trained
        buf = io.BytesIO()
        save_doc2vec(model, buf)
        buf.seek(0)
        loaded = load_doc2vec(buf)
        assert (loaded.word_in == model.word_in).all()
        assert (loaded.word_out == model.word_out).all()
        assert (loaded.doc_vecs == model.doc_vecs).all()
        assert loaded.doc_ids == model.doc_ids
        assert loaded.vocab.index_to_token == model.vocab.index_to_token
