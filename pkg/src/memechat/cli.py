"""Command-line entry points for every pipeline stage.

Environment variables MOD_CHECKPOINT, MOD_CATALOG, and MOD_PORT supply
defaults for the model-serving commands; the matching flags win on conflict.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .corpus.io import load_catalog, load_corpus, save_catalog, save_corpus
from .corpus.split import split_corpus
from .corpus.stats import corpus_stats
from .corpus.synth import synth_corpus
from .corpus.types import Corpus, Utterance
from .corpus.vocab import Vocab
from .decoding.pipeline import respond
from .decoding.sampler import SamplerConfig
from .evalkit.report import EvalConfig, evaluate_model
from .model.checkpoint import load_checkpoint, save_checkpoint
from .model.config import ModelConfig
from .model.network import init_params
from .numerics import write_tensor_blob
from .training.loop import train
from .training.losses import TrainConfig
from .training.pretrain import (
    install_projection,
    pretrain_emotion,
    pretrain_meme_features,
    select_emotion_labels,
)

USER_SPEAKER = 1


def _env_default(var: str, flag_value, cast=str):
    if flag_value is not None:
        return flag_value
    raw = os.environ.get(var)
    return cast(raw) if raw is not None else None


def _load_corpus_arg(corpus_path: str, catalog_path: str, vocab: Vocab | None = None) -> Corpus:
    return load_corpus(corpus_path, load_catalog(catalog_path), vocab=vocab)


def _load_model(checkpoint_path: str):
    cfg, params, extra = load_checkpoint(checkpoint_path)
    vocab = Vocab.from_json(extra["vocab"]) if "vocab" in extra else None
    return cfg, params, vocab, extra


def cmd_stats(args) -> int:
    corpus = _load_corpus_arg(args.corpus, args.catalog)
    stats = corpus_stats(corpus)
    if args.json:
        print(json.dumps(stats.display(), indent=2, sort_keys=True))
    else:
        for key, value in stats.display().items():
            print(f"{key:<32} {value:>12}")
    return 0


def cmd_synth(args) -> int:
    corpus = synth_corpus(
        args.dialogues, args.memes, args.vocab_size, args.seed,
        feature_dim=args.feature_dim,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, out / "corpus.jsonl")
    save_catalog(corpus.catalog, out / "catalog.json")
    corpus.vocab.save(out / "vocab.json")
    print(f"wrote {len(corpus.dialogues)} dialogues to {out}")
    return 0


def cmd_split(args) -> int:
    corpus = _load_corpus_arg(args.corpus, args.catalog)
    ratios = tuple(float(x) for x in args.ratios.split(","))
    hard = {int(x) for x in args.hard_memes.split(",")} if args.hard_memes else set()
    splits = split_corpus(corpus, args.seed, ratios, hard)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, sub in splits.items():
        save_corpus(sub, out / f"{name}.jsonl")
        print(f"{name}: {len(sub.dialogues)} dialogues")
    return 0


def cmd_pretrain_memes(args) -> int:
    catalog = load_catalog(args.catalog)
    model_cfg = ModelConfig(vocab_size=8, d_model=args.d_model)
    projection, info = pretrain_meme_features(
        catalog, model_cfg, seed=args.seed, steps=args.steps
    )
    Path(args.out).write_bytes(
        write_tensor_blob({name: t.data for name, t in projection.items()})
    )
    print(f"group accuracy {info['accuracy']:.3f}; projection saved to {args.out}")
    return 0


def cmd_pretrain_emotion(args) -> int:
    model_cfg, params, vocab, extra = _load_model(args.checkpoint)
    corpus = _load_corpus_arg(args.corpus, args.catalog, vocab=vocab)
    info = pretrain_emotion(
        corpus, params, model_cfg, seed=args.seed, steps=args.steps,
        max_len=args.max_len,
    )
    save_checkpoint(args.out, model_cfg, params, extra=extra)
    print(f"emotion accuracy {info['accuracy']:.3f}; checkpoint saved to {args.out}")
    return 0


def cmd_train(args) -> int:
    catalog = load_catalog(args.catalog)
    corpus = load_corpus(args.corpus, catalog)
    splits = {"train": corpus}
    if args.valid:
        splits["valid"] = load_corpus(args.valid, catalog, vocab=corpus.vocab)

    labels = tuple(select_emotion_labels(corpus, 100))
    if args.init:
        model_cfg, params, vocab, _ = _load_model(args.init)
        if vocab is not None:
            corpus = load_corpus(args.corpus, catalog, vocab=vocab)
            splits["train"] = corpus
            if args.valid:
                splits["valid"] = load_corpus(args.valid, catalog, vocab=vocab)
    else:
        model_cfg = ModelConfig(
            vocab_size=len(corpus.vocab),
            d_model=args.d_model,
            n_layers=args.layers,
            n_heads=args.heads,
            d_ff=args.d_ff,
            max_positions=args.max_positions,
            meme_feat_dim=catalog.feature_dim,
            n_emotions=max(1, len(labels)),
            dropout_p=args.dropout,
            emotion_labels=labels,
        )
        params = init_params(model_cfg, seed=args.seed)

    cfg = TrainConfig(
        lr=args.lr,
        lambda_usage=args.lambda1,
        lambda_meme=args.lambda2,
        batch_size=args.batch_size,
        max_len=args.max_len,
        epochs=args.epochs,
        seed=args.seed,
        max_steps=args.max_steps,
        pretrain_memes=args.pretrain_memes,
        pretrain_emotion=args.pretrain_emotion,
    )
    if cfg.pretrain_memes:
        projection, info = pretrain_meme_features(catalog, model_cfg, seed=args.seed)
        install_projection(params, projection)
        print(f"meme-feature pretraining: group accuracy {info['accuracy']:.3f}")
    if cfg.pretrain_emotion:
        info = pretrain_emotion(
            corpus, params, model_cfg, seed=args.seed, max_len=cfg.max_len
        )
        print(f"emotion pretraining: accuracy {info['accuracy']:.3f}")

    result = train(splits, params, model_cfg, cfg, args.out)
    final = str(Path(args.out) / "final.ckpt")
    save_checkpoint(
        final, model_cfg, params,
        extra={
            "vocab": corpus.vocab.to_json(),
            "seed": args.seed,
            "train_config": vars(cfg),
        },
    )
    print(
        f"steps={result.steps} best_valid_ppl={result.best_valid_ppl:.3f} "
        f"checkpoint={final} log={result.log_path}"
    )
    return 1 if result.aborted else 0


def cmd_eval(args) -> int:
    model_cfg, params, vocab, _ = _load_model(args.checkpoint)
    if vocab is None:
        raise ValueError("checkpoint carries no vocab; cannot evaluate")
    corpus = _load_corpus_arg(args.corpus, args.catalog, vocab=vocab)
    train_memes = (
        {int(x) for x in args.seen_memes.split(",")} if args.seen_memes else None
    )
    cfg = EvalConfig(
        recall_ns=tuple(int(x) for x in args.recall_ns.split(",")) if args.recall_ns else (10,),
        sampler=SamplerConfig(seed=args.seed, max_new_tokens=args.max_new_tokens),
        seed=args.seed,
        max_len=args.max_len,
    )
    report = evaluate_model(params, model_cfg, corpus, cfg, train_meme_ids=train_memes)
    print(report.to_json() if args.format == "json" else report.to_table())
    return 0


def _speaker_for_history(history: list[Utterance]) -> int:
    return USER_SPEAKER if not history else 3 - history[-1].speaker


def cmd_generate(args) -> int:
    model_cfg, params, vocab, _ = _load_model(args.checkpoint)
    if vocab is None:
        raise ValueError("checkpoint carries no vocab; cannot generate")
    catalog = load_catalog(args.catalog)
    text_ids = tuple(vocab.encode_text(args.prompt)) if args.prompt else ()
    history = [Utterance(speaker=USER_SPEAKER, text=text_ids, meme_id=args.meme_id)]
    sampler = SamplerConfig(
        top_p=args.top_p,
        temperature=args.temperature,
        max_new_tokens=args.max_new_tokens,
        seed=args.seed,
    )
    result, _ = respond(history, params, model_cfg, catalog, sampler)
    print(
        json.dumps(
            {
                "text": vocab.decode(result.text),
                "meme_id": result.meme_id,
                "usage_prob": result.usage_prob,
                "ranked_memes": [
                    {"id": i, "distance": d} for i, d in result.ranked_memes
                ],
            },
            indent=2,
        )
    )
    return 0


def cmd_chat(args) -> int:
    if args.server:
        return _chat_remote(args)
    model_cfg, params, vocab, _ = _load_model(args.checkpoint)
    if vocab is None:
        raise ValueError("checkpoint carries no vocab; cannot chat")
    catalog = load_catalog(args.catalog)
    history: list[Utterance] = []
    turn = 0
    print("memechat repl; '/meme ID [text]' attaches a meme, '/quit' exits")
    for line in sys.stdin:
        line = line.strip()
        if line == "/quit":
            break
        if not line:
            continue
        meme_id = None
        if line.startswith("/meme"):
            parts = line.split(maxsplit=2)
            meme_id = int(parts[1])
            line = parts[2] if len(parts) > 2 else ""
        text = tuple(vocab.encode_text(line)) if line else ()
        history.append(Utterance(speaker=_speaker_for_history(history), text=text, meme_id=meme_id))
        sampler = SamplerConfig(
            max_new_tokens=args.max_new_tokens,
            seed=args.seed + turn,
        )
        result, _ = respond(history, params, model_cfg, catalog, sampler)
        reply_meme = result.meme_id
        if not result.text and reply_meme is None and result.ranked_memes:
            reply_meme = result.ranked_memes[0][0]
        history.append(
            Utterance(
                speaker=_speaker_for_history(history),
                text=result.text,
                meme_id=reply_meme,
            )
        )
        meme_note = f" [meme #{reply_meme}]" if reply_meme is not None else ""
        print(f"model> {vocab.decode(result.text)}{meme_note} (p_use={result.usage_prob:.2f})")
        turn += 1
    return 0


def _chat_remote(args) -> int:
    import httpx

    base = args.server.rstrip("/")
    with httpx.Client(base_url=base, timeout=60.0) as client:
        created = client.post("/api/v1/sessions", json={"seed": args.seed})
        created.raise_for_status()
        session_id = created.json()["session_id"]
        print(f"session {session_id}; '/meme ID [text]' attaches a meme, '/quit' exits")
        for line in sys.stdin:
            line = line.strip()
            if line == "/quit":
                break
            if not line:
                continue
            payload: dict = {}
            if line.startswith("/meme"):
                parts = line.split(maxsplit=2)
                payload["meme_id"] = int(parts[1])
                if len(parts) > 2:
                    payload["text"] = parts[2]
            else:
                payload["text"] = line
            reply = client.post(f"/api/v1/sessions/{session_id}/messages", json=payload)
            reply.raise_for_status()
            body = reply.json()["reply"]
            meme_note = f" [meme #{body['meme_id']}]" if body["meme_id"] is not None else ""
            print(f"model> {body['text']}{meme_note} (p_use={body['usage_prob']:.2f})")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import ModelRuntime, create_app

    checkpoint = _env_default("MOD_CHECKPOINT", args.checkpoint)
    catalog_path = _env_default("MOD_CATALOG", args.catalog)
    port = _env_default("MOD_PORT", args.port, int) or 8000
    if not checkpoint or not catalog_path:
        raise ValueError("serve needs --checkpoint/--catalog or MOD_CHECKPOINT/MOD_CATALOG")

    model_cfg, params, vocab, _ = _load_model(checkpoint)
    if vocab is None:
        raise ValueError("checkpoint carries no vocab; cannot serve")
    runtime = ModelRuntime(
        params=params,
        model_cfg=model_cfg,
        vocab=vocab,
        catalog=load_catalog(catalog_path),
        max_len=args.max_len,
    )
    app = create_app(runtime, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memechat")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="corpus statistics table")
    p.add_argument("--corpus", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("synth", help="generate a synthetic planted-topic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--dialogues", type=int, default=32)
    p.add_argument("--memes", type=int, default=8)
    p.add_argument("--vocab-size", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--feature-dim", type=int, default=16)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("split", help="train/valid/easy/hard split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratios", default="0.8,0.1,0.05,0.05")
    p.add_argument("--hard-memes", default="")
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("pretrain-memes", help="fit the meme projection on group labels")
    p.add_argument("--catalog", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_pretrain_memes)

    p = sub.add_parser("pretrain-emotion", help="train the emotion head on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-len", type=int, default=500)
    p.set_defaults(fn=cmd_pretrain_emotion)

    p = sub.add_parser("train", help="multi-task training loop")
    p.add_argument("--corpus", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--valid")
    p.add_argument("--out", required=True)
    p.add_argument("--init", help="checkpoint to continue from")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--lr", type=float, default=5e-5)
    p.add_argument("--lambda1", type=float, default=1.0)
    p.add_argument("--lambda2", type=float, default=1.0)
    p.add_argument("--max-len", type=int, default=500)
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--d-ff", type=int, default=256)
    p.add_argument("--max-positions", type=int, default=512)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--pretrain-memes", action="store_true")
    p.add_argument("--pretrain-emotion", action="store_true")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="full metric suite on a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-len", type=int, default=500)
    p.add_argument("--max-new-tokens", type=int, default=24)
    p.add_argument("--recall-ns", default="")
    p.add_argument("--seen-memes", default="", help="comma ids for seen/unseen split")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("generate", help="one response for a prompt")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--prompt", default="")
    p.add_argument("--meme-id", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top-p", type=float, default=0.9)
    p.add_argument("--temperature", type=float, default=0.7)
    p.add_argument("--max-new-tokens", type=int, default=24)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("chat", help="terminal REPL (local model or --server URL)")
    p.add_argument("--checkpoint")
    p.add_argument("--catalog")
    p.add_argument("--server", help="base URL of a running memechat service")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-new-tokens", type=int, default=24)
    p.set_defaults(fn=cmd_chat)

    p = sub.add_parser("serve", help="HTTP chat service")
    p.add_argument("--checkpoint")
    p.add_argument("--catalog")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int)
    p.add_argument("--max-len", type=int, default=500)
    p.add_argument("--ui-dir", help="static web client directory to mount at /ui")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # one-line machine-parsable failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
