import math

import numpy as np
import pytest

from memechat.corpus import (
    Corpus,
    Dialogue,
    Utterance,
    Vocab,
    flatten_dialogue,
)
from memechat.corpus.vocab import EOS
from memechat.evalkit import (
    EvalConfig,
    EvalError,
    bleu_n,
    distinct_n,
    evaluate_model,
    perplexity,
    recall_at_k,
    recall_core,
    seen_unseen_breakdown,
    usage_accuracy,
)
from memechat.evalkit.protocols import emotion_accuracy
from memechat.decoding import SamplerConfig
from memechat.model import forward
from memechat.numerics import Tensor
from oracles import bleu_reference, distinct_reference


# --- BLEU -----------------------------------------------------------------


def test_bleu_identity_is_one():
    cand = [["a", "b", "c", "d", "e"]]
    assert math.isclose(bleu_n(cand, cand, 2), 1.0, rel_tol=1e-12)
    assert math.isclose(bleu_n(cand, cand, 4), 1.0, rel_tol=1e-12)


def test_bleu_zero_unigram_overlap_is_zero():
    assert bleu_n([["x", "y"]], [["a", "b"]], 2) == 0.0


def test_bleu_frozen_toy_corpus():
    # hand-computed: p1=5/6, p2=(2+1)/(4+1), bp=exp(1-7/6)
    cands = [["a", "b", "c", "d"], ["e", "f"]]
    refs = [["a", "b", "x", "d"], ["e", "f", "g"]]
    assert math.isclose(bleu_n(cands, refs, 2), 0.5985529678206387, rel_tol=1e-12)
    assert math.isclose(bleu_n(cands, refs, 4), 0.4548019047027907, rel_tol=1e-12)


def test_bleu_empty_candidate_contributes_brevity_penalty():
    cands = [[], ["a", "b"]]
    refs = [["q", "r"], ["a", "b"]]
    score = bleu_n(cands, refs, 2)
    assert 0.0 < score < bleu_n([["a", "b"]], [["a", "b"]], 2)


def test_bleu_matches_brute_force_oracle_on_random_cases():
    rng = np.random.default_rng(17)
    for case in range(20):
        n_pairs = int(rng.integers(1, 6))
        cands, refs = [], []
        for _ in range(n_pairs):
            cands.append([int(t) for t in rng.integers(0, 8, rng.integers(0, 10))])
            refs.append([int(t) for t in rng.integers(0, 8, rng.integers(1, 10))])
        for order in (2, 4):
            mine = bleu_n(cands, refs, order)
            ref = bleu_reference(cands, refs, order)
            assert abs(mine - ref) < 1e-9, (case, order)


def test_bleu_validates_alignment():
    with pytest.raises(EvalError):
        bleu_n([["a"]], [], 2)


# --- distinct-n -------------------------------------------------------------


def test_distinct_repeated_token():
    assert math.isclose(distinct_n([["a", "a", "a"]], 1), 1 / 3)


def test_distinct_all_unique():
    assert distinct_n([["a", "b", "c"], ["d", "e"]], 1) == 1.0


def test_distinct_pooled_two_sentences():
    # pooled: unigrams 5 total 3 unique; bigrams 3 total 3 unique
    cands = [["a", "b", "a"], ["b", "c"]]
    assert math.isclose(distinct_n(cands, 1), 3 / 5)
    assert math.isclose(distinct_n(cands, 2), 1.0)


def test_distinct_matches_oracle_on_random_cases():
    rng = np.random.default_rng(23)
    for case in range(20):
        cands = [
            [int(t) for t in rng.integers(0, 5, rng.integers(2, 8))]
            for _ in range(int(rng.integers(1, 5)))
        ]
        for n in (1, 2):
            assert abs(distinct_n(cands, n) - distinct_reference(cands, n)) < 1e-9


def test_distinct_errors_without_ngrams():
    with pytest.raises(EvalError):
        distinct_n([], 1)
    with pytest.raises(EvalError):
        distinct_n([["a"]], 2)


# --- perplexity ---------------------------------------------------------------


def test_perplexity_uniform_model_equals_vocab_size(toy_model, toy_corpus):
    cfg, params = toy_model
    uniform = {n: Tensor(p.data.copy(), requires_grad=True) for n, p in params.items()}
    uniform["lm_head.w"].data[:] = 0.0
    uniform["lm_head.b"].data[:] = 0.0
    ppl = perplexity(uniform, cfg, toy_corpus, max_len=cfg.max_positions)
    assert abs(ppl - cfg.vocab_size) < 1e-3


def test_perplexity_memorized_corpus_tends_to_one(toy_model, toy_corpus):
    cfg, params = toy_model
    # all responses are meme-only, so every supervised target is [eos];
    # a huge [eos] bias is an exact memorizer
    utts = [Utterance(speaker=1, text=(10, 11))]
    for i in range(3):
        utts.append(Utterance(speaker=2 - i % 2, text=(), meme_id=i))
    corpus = Corpus([Dialogue(tuple(utts))], toy_corpus.catalog, toy_corpus.vocab)
    rigged = {n: Tensor(p.data.copy(), requires_grad=True) for n, p in params.items()}
    rigged["lm_head.w"].data[:] = 0.0
    rigged["lm_head.b"].data[:] = -40.0
    rigged["lm_head.b"].data[EOS] = 40.0
    ppl = perplexity(rigged, cfg, corpus, max_len=cfg.max_positions)
    assert abs(ppl - 1.0) < 1e-6


def test_perplexity_matches_scalar_recomputation(toy_model, toy_corpus):
    cfg, params = toy_model
    corpus = Corpus(toy_corpus.dialogues[:1], toy_corpus.catalog, toy_corpus.vocab)
    seq = flatten_dialogue(corpus.dialogues[0], corpus.vocab, corpus.catalog,
                           cfg.max_positions)
    out = forward(seq, params, cfg)
    total = 0.0
    count = 0
    for pos, target in enumerate(seq.lm_targets):
        if target < 0:
            continue
        row = out.lm_logits.data[pos].astype(np.float64)
        z = np.log(np.exp(row - row.max()).sum()) + row.max()
        total += z - row[target]
        count += 1
    expected = math.exp(total / count)
    got = perplexity(params, cfg, corpus, max_len=cfg.max_positions)
    assert math.isclose(got, expected, rel_tol=1e-6)


def test_perplexity_errors_without_tokens(toy_model, sample_catalog):
    cfg, params = toy_model
    with pytest.raises(EvalError):
        perplexity(params, cfg, Corpus([], sample_catalog, Vocab()), max_len=64)


# --- recall ---------------------------------------------------------------------


def test_recall_k_equals_n_is_one(toy_model, toy_corpus):
    cfg, params = toy_model
    assert recall_at_k(params, cfg, toy_corpus, 4, 4, seed=0,
                       max_len=cfg.max_positions) == 1.0


def test_recall_gold_strictly_smallest_is_one_at_k1():
    gold_ids = [3, 1, 4]

    def rank_fn(turn_idx, candidates):
        gold = gold_ids[turn_idx]
        return [gold] + sorted(c for c in candidates if c != gold)

    assert recall_core(gold_ids, rank_fn, list(range(10)), 5, 1, seed=0) == 1.0


def test_recall_random_ranker_matches_binomial_baseline():
    rng = np.random.default_rng(31)
    gold_ids = [int(g) for g in rng.integers(0, 20, 600)]

    def rank_fn(turn_idx, candidates):
        order = list(candidates)
        rng.shuffle(order)
        return order

    score = recall_core(gold_ids, rank_fn, list(range(20)), 10, 1, seed=0)
    sigma = math.sqrt(0.1 * 0.9 / len(gold_ids))
    assert abs(score - 0.1) < 3 * sigma


def test_recall_validates_inputs(toy_model, toy_corpus):
    cfg, params = toy_model
    with pytest.raises(EvalError, match="exceeds catalog"):
        recall_at_k(params, cfg, toy_corpus, 999, 1, seed=0, max_len=96)
    no_memes = Corpus([], toy_corpus.catalog, toy_corpus.vocab)
    with pytest.raises(EvalError):
        recall_at_k(params, cfg, no_memes, 4, 1, seed=0, max_len=96)


def test_recall_full_catalog_mode(toy_model, toy_corpus):
    cfg, params = toy_model
    score = recall_at_k(params, cfg, toy_corpus, None, len(toy_corpus.catalog),
                        seed=0, max_len=cfg.max_positions)
    assert score == 1.0  # k covers the whole catalog


# --- usage / emotion accuracy -----------------------------------------------------


def majority_corpus(catalog, vocab):
    # one dialogue, 10 response turns, 3 carry memes: always-no scores 0.7
    utts = [Utterance(speaker=1, text=(9,))]
    for i in range(10):
        meme = 0 if i in (1, 4, 8) else None
        utts.append(Utterance(speaker=2 - i % 2, text=(9, 10), meme_id=meme))
    return Corpus([Dialogue(tuple(utts))], catalog, vocab)


def test_usage_accuracy_majority_baseline(toy_model, toy_corpus):
    cfg, params = toy_model
    corpus = majority_corpus(toy_corpus.catalog, toy_corpus.vocab)
    rigged = {n: Tensor(p.data.copy(), requires_grad=True) for n, p in params.items()}
    rigged["usage.w2"].data[:] = 0.0
    rigged["usage.b2"].data[:] = [10.0, -10.0]
    assert usage_accuracy(rigged, cfg, corpus, max_len=cfg.max_positions) == 0.7


def test_usage_accuracy_requires_turns(toy_model, sample_catalog):
    cfg, params = toy_model
    with pytest.raises(EvalError):
        usage_accuracy(params, cfg, Corpus([], sample_catalog, Vocab()), max_len=96)


def test_emotion_accuracy_requires_labelled_turns(toy_model, toy_corpus):
    cfg, params = toy_model
    # memes but no emotion labels
    corpus = majority_corpus(toy_corpus.catalog, toy_corpus.vocab)
    with pytest.raises(EvalError):
        emotion_accuracy(params, cfg, corpus, ["joy"], max_len=cfg.max_positions)


def test_emotion_topk_is_monotone(toy_model, toy_corpus):
    cfg, params = toy_model
    from memechat.corpus import EMOTIONS

    top1 = emotion_accuracy(params, cfg, toy_corpus, EMOTIONS, top_k=1, max_len=96)
    top5 = emotion_accuracy(params, cfg, toy_corpus, EMOTIONS, top_k=5, max_len=96)
    assert 0.0 <= top1 <= top5 <= 1.0


# --- seen/unseen -------------------------------------------------------------------


def test_seen_unseen_partition(toy_model, toy_corpus):
    cfg, params = toy_model
    train_ids = {0, 1, 2, 3}
    out = seen_unseen_breakdown(params, cfg, toy_corpus, train_ids, 4, 1, seed=0,
                                max_len=cfg.max_positions)
    meme_turns = sum(
        1 for d in toy_corpus.dialogues for i in range(1, len(d.utterances))
        if d.utterances[i].meme_id is not None
    )
    assert out["seen"]["turns"] + out["unseen"]["turns"] == meme_turns


def test_seen_unseen_all_seen_has_no_unseen_partition(toy_model, toy_corpus):
    cfg, params = toy_model
    out = seen_unseen_breakdown(
        params, cfg, toy_corpus, set(toy_corpus.catalog.ids), 4, 1, seed=0,
        max_len=cfg.max_positions,
    )
    assert "unseen" not in out
    assert out["seen"]["turns"] > 0


# --- full report ---------------------------------------------------------------------


def test_evaluate_model_is_pure(toy_model, toy_corpus):
    cfg, params = toy_model
    corpus = Corpus(toy_corpus.dialogues[:3], toy_corpus.catalog, toy_corpus.vocab)
    eval_cfg = EvalConfig(
        recall_ns=(4,), recall_ks=(1, 2), include_full_catalog=True,
        sampler=SamplerConfig(max_new_tokens=6, seed=3), seed=5,
        max_len=cfg.max_positions,
    )
    a = evaluate_model(params, cfg, corpus, eval_cfg)
    b = evaluate_model(params, cfg, corpus, eval_cfg)
    assert a.to_json() == b.to_json()
    parsed = a.recalls
    assert set(parsed) == {"R_4@1", "R_4@2", "R_T@5"}
    assert all(0.0 <= v <= 1.0 for v in parsed.values())
    assert parsed["R_4@1"] <= parsed["R_4@2"]
    assert a.counts["dialogues"] == 3
    assert "# BLEU" in a.to_table()
