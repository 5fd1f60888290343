"""Batch pipeline driver: train / pair / cf-build / recommend / eval.

Config precedence: command-line flags > COLDPAIR_* environment variables >
key=value config file > built-in defaults. All outputs are written
atomically (temp file + rename) so interrupted runs never leave truncated
artifacts behind.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import cf as cf_mod
from . import doc2vec as d2v
from . import lda as lda_mod
from . import matcher, pairing, tfidf as tfidf_mod
from .backends import BackendConfig, Embedder, parse_backend_name
from .corpus import CorpusError, Vocabulary, load_corpus
from .enrichment import FIELD_ORDER, EnrichmentConfig
from .evaluation import DEFAULT_KS, EvalError, load_truth, run_benchmark

logger = logging.getLogger("coldpair")

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

ENV_PREFIX = "COLDPAIR_"

DEFAULTS = {
    "corpus": "",
    "ratings": "",
    "backend": "doc2vec",
    "out_dir": "out",
    "seed": "0",
    "enrich_n": "3",
    "enrich_fields": ",".join(FIELD_ORDER),
    "dim": "100",
    "epochs": "1",
    "window": "5",
    "negative": "5",
    "lr_start": "0.025",
    "lr_end": "0.0001",
    "min_count": "",
    "topics": "10",
    "sweeps": "100",
    "top_m": "1",
    "threshold": "0.5",
    "metric": "cosine",
    "cf_k": "20",
    "max_len": "20",
    "workers": "1",
    "stopwords": "1",
}


class UsageError(Exception):
    pass


def _read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            key = key.strip()
            if key not in DEFAULTS:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = value.strip()
    return out


def resolve_config(args: argparse.Namespace) -> dict[str, str]:
    config = dict(DEFAULTS)
    if getattr(args, "config", None):
        config.update(_read_config_file(args.config))
    for key in DEFAULTS:
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            config[key] = env
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            config[key] = str(flag)
    return config


def config_hash(config: dict[str, str]) -> str:
    blob = "\n".join(f"{k}={config[k]}" for k in sorted(config))
    return hashlib.sha256(blob.encode()).hexdigest()


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def atomic_write_bytes(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _enrichment_config(config: dict[str, str]) -> EnrichmentConfig:
    fields = tuple(f for f in config["enrich_fields"].split(",") if f)
    return EnrichmentConfig(n_repeats=int(config["enrich_n"]),
                            fields_to_inject=fields)


def backend_config(config: dict[str, str]) -> BackendConfig:
    try:
        parse_backend_name(config["backend"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    min_count = int(config["min_count"]) if config["min_count"] else None
    return BackendConfig(
        name=config["backend"],
        seed=int(config["seed"]),
        min_count=min_count,
        use_stopwords=config["stopwords"] not in ("0", "false", ""),
        enrichment=_enrichment_config(config),
        n_topics=int(config["topics"]),
        sweeps=int(config["sweeps"]),
        train=d2v.TrainConfig(
            dim=int(config["dim"]),
            epochs=int(config["epochs"]),
            lr_start=float(config["lr_start"]),
            lr_end=float(config["lr_end"]),
            negative_k=int(config["negative"]),
            window=int(config["window"]),
            seed=int(config["seed"]),
            workers=int(config["workers"]),
        ),
    )


def _require(config: dict[str, str], key: str) -> str:
    if not config[key]:
        raise UsageError(f"missing required config value: {key}")
    return config[key]


def _model_paths(out_dir: Path, backend: str) -> tuple[Path, Path]:
    safe = backend.replace("+", "_")
    return out_dir / f"model_{safe}.bin", out_dir / f"vocab_{safe}.tsv"


def _save_vocab(vocab: Vocabulary, path: Path) -> None:
    lines = [f"min_count={vocab.min_count}"]
    lines += [f"{t}\t{vocab.frequency[t]}" for t in vocab.index_to_token]
    atomic_write_text(path, "\n".join(lines) + "\n")


def _load_vocab(path: Path) -> Vocabulary:
    lines = path.read_text(encoding="utf-8").splitlines()
    min_count = int(lines[0].split("=", 1)[1])
    tokens, freq = [], {}
    for line in lines[1:]:
        tok, count = line.split("\t")
        tokens.append(tok)
        freq[tok] = int(count)
    return Vocabulary(token_to_index={t: i for i, t in enumerate(tokens)},
                      index_to_token=tokens, frequency=freq,
                      min_count=min_count)


def _save_model(embedder: Embedder, out_dir: Path, backend: str) -> list[Path]:
    model_path, vocab_path = _model_paths(out_dir, backend)
    import io
    if embedder.kind == "tfidf":
        buf = io.StringIO()
        tfidf_mod.save_tfidf(embedder.model, buf)
        atomic_write_text(model_path, buf.getvalue())
    elif embedder.kind == "lda":
        bio = io.BytesIO()
        lda_mod.save_lda(embedder.model, bio)
        atomic_write_bytes(model_path, bio.getvalue())
    else:
        bio = io.BytesIO()
        d2v.save_doc2vec(embedder.model, bio)
        atomic_write_bytes(model_path, bio.getvalue())
    _save_vocab(embedder.vocab, vocab_path)
    return [model_path, vocab_path]


def _load_embedder(cfg: BackendConfig, out_dir: Path) -> Embedder:
    model_path, vocab_path = _model_paths(out_dir, cfg.name)
    if not model_path.exists():
        raise CorpusError(f"model file not found: {model_path} (run train first)")
    vocab = _load_vocab(vocab_path)
    if cfg.base == "tfidf":
        with open(model_path, "r", encoding="utf-8") as fh:
            model = tfidf_mod.load_tfidf(fh, vocab)
    elif cfg.base == "lda":
        with open(model_path, "rb") as fh:
            model = lda_mod.load_lda(fh, vocab)
    else:
        with open(model_path, "rb") as fh:
            model = d2v.load_doc2vec(fh)
            vocab = model.vocab
    return Embedder(cfg, model=model, vocab=vocab)


def _write_manifest(out_dir: Path, command: str, config: dict[str, str],
                    outputs: list[Path], started: float) -> None:
    manifest = {
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "outputs": [str(p) for p in outputs],
        "elapsed_seconds": round(time.time() - started, 3),
    }
    atomic_write_text(out_dir / f"manifest_{command}.json",
                      json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- commands

def cmd_ingest_check(config: dict[str, str]) -> int:
    docs = load_corpus(_require(config, "corpus"))
    warm = [d for d in docs if d.warm]
    print(f"documents: {len(docs)} ({len(warm)} warm, {len(docs) - len(warm)} cold)")
    if config["ratings"]:
        ratings = cf_mod.load_ratings(config["ratings"])
        missing = [d.id for d in warm if d.id not in ratings.by_item]
        if missing:
            raise CorpusError(
                f"warm items missing from rating matrix: {missing[:5]}"
                f" ({len(missing)} total)")
        print(f"ratings: {sum(len(v) for v in ratings.by_user.values())} "
              f"({len(ratings.by_user)} users, {len(ratings.by_item)} items)")
    return 0


def cmd_train(config: dict[str, str]) -> int:
    started = time.time()
    docs = load_corpus(_require(config, "corpus"))
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = backend_config(config)
    embedder = Embedder(cfg).fit(docs)
    outputs = _save_model(embedder, out_dir, cfg.name)
    _write_manifest(out_dir, "train", config, outputs, started)
    print(f"trained {cfg.name} on {len(docs)} documents -> {outputs[0]}")
    return 0


def cmd_pair(config: dict[str, str]) -> int:
    started = time.time()
    docs = load_corpus(_require(config, "corpus"))
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = backend_config(config)
    embedder = _load_embedder(cfg, out_dir)
    warm = [d for d in docs if d.warm]
    cold = [d for d in docs if not d.warm]
    if not warm:
        raise CorpusError("no warm items: nothing to pair against")
    pairs_path = out_dir / "pairs.tsv"
    import io
    buf = io.StringIO()
    if not cold:
        logger.warning("no cold items in corpus; writing empty pairing table")
        matcher.save_pairs(matcher.PairingTable(), buf)
    else:
        warm_index = embedder.build_index(warm)
        cold_index = embedder.build_index(cold)
        table = matcher.pair_cold_items(
            cold_index, warm_index, top_m=int(config["top_m"]),
            threshold=float(config["threshold"]))
        matcher.save_pairs(table, buf)
        print(f"paired {len(table.paired_ids())} cold items, "
              f"{len(table.unpaired_ids())} unpaired")
    atomic_write_text(pairs_path, buf.getvalue())
    _write_manifest(out_dir, "pair", config, [pairs_path], started)
    return 0


def cmd_cf_build(config: dict[str, str]) -> int:
    started = time.time()
    ratings = cf_mod.load_ratings(_require(config, "ratings"))
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    nbrs = cf_mod.build_item_neighborhoods(
        ratings, metric=config["metric"], k=int(config["cf_k"]))
    import io
    buf = io.StringIO()
    cf_mod.save_neighborhoods(nbrs, buf)
    path = out_dir / "neighborhoods.tsv"
    atomic_write_text(path, buf.getvalue())
    _write_manifest(out_dir, "cf-build", config, [path], started)
    print(f"built neighborhoods for {len(nbrs)} items -> {path}")
    return 0


def cmd_recommend(config: dict[str, str], user: str, n: int) -> int:
    started = time.time()
    ratings = cf_mod.load_ratings(_require(config, "ratings"))
    out_dir = Path(config["out_dir"])
    nbrs_path = out_dir / "neighborhoods.tsv"
    if not nbrs_path.exists():
        raise CorpusError(f"neighborhoods file not found: {nbrs_path}")
    with open(nbrs_path, "r", encoding="utf-8") as fh:
        nbrs = cf_mod.load_neighborhoods(fh)
    pairs_path = out_dir / "pairs.tsv"
    if pairs_path.exists():
        with open(pairs_path, "r", encoding="utf-8") as fh:
            pairs = matcher.load_pairs(fh)
    else:
        logger.warning("pairing file %s not found; emitting CF list only",
                       pairs_path)
        pairs = matcher.PairingTable()
    rec = cf_mod.recommend(ratings, nbrs, user, n=n)
    augmented = pairing.augment(rec, pairs, max_len=int(config["max_len"]))
    lines = [f"{user}\t{rank}\t{item}\t{tag}"
             for rank, (item, tag) in enumerate(augmented.items, start=1)]
    out_path = out_dir / f"recommend_{user}.tsv"
    atomic_write_text(out_path, "".join(line + "\n" for line in lines))
    sys.stdout.write("".join(line + "\n" for line in lines))
    _write_manifest(out_dir, "recommend", config, [out_path], started)
    return 0


def cmd_eval(config: dict[str, str], truth_path: str, backends: list[str]) -> int:
    started = time.time()
    docs = load_corpus(_require(config, "corpus"))
    with open(truth_path, "r", encoding="utf-8") as fh:
        truth = load_truth(fh)
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    base_cfg = backend_config(config)

    def factory(name: str) -> BackendConfig:
        return dataclasses.replace(base_cfg, name=name)

    report = run_benchmark(docs, truth, backends, ks=DEFAULT_KS,
                           seed=int(config["seed"]), config_factory=factory)
    path = out_dir / "report.tsv"
    # persisted report omits runtimes so reruns are byte-identical
    atomic_write_text(path, report.to_text(include_runtime=False))
    sys.stdout.write(report.to_text(include_runtime=True))
    _write_manifest(out_dir, "eval", config, [path], started)
    return 0


def cmd_pipeline(config: dict[str, str], user: str | None, n: int) -> int:
    cmd_train(config)
    cmd_pair(config)
    if config["ratings"]:
        cmd_cf_build(config)
        if user is not None:
            cmd_recommend(config, user, n)
    return 0


# ---------------------------------------------------------------- argparse

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--corpus", help="corpus JSONL path")
    p.add_argument("--ratings", help="ratings TSV path")
    p.add_argument("--backend", help="tfidf | lda | doc2vec (+context suffix)")
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--enrich-n", dest="enrich_n", type=int,
                   help="times each contextual field is injected (default 3)")
    p.add_argument("--enrich-fields", dest="enrich_fields",
                   help="comma list from: " + ",".join(FIELD_ORDER))
    p.add_argument("--dim", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--negative", type=int)
    p.add_argument("--lr-start", dest="lr_start", type=float)
    p.add_argument("--lr-end", dest="lr_end", type=float)
    p.add_argument("--min-count", dest="min_count", type=int)
    p.add_argument("--topics", type=int)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--top-m", dest="top_m", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--metric", choices=["pearson", "cosine"])
    p.add_argument("--cf-k", dest="cf_k", type=int)
    p.add_argument("--max-len", dest="max_len", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--stopwords", choices=["0", "1"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coldpair",
        description="Cold-start pairing pipeline for item-based CF")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("ingest-check", "train", "pair", "cf-build"):
        _add_common(sub.add_parser(name))

    p_rec = sub.add_parser("recommend")
    _add_common(p_rec)
    p_rec.add_argument("--user", required=True)
    p_rec.add_argument("-n", type=int, default=10)

    p_eval = sub.add_parser("eval")
    _add_common(p_eval)
    p_eval.add_argument("--truth", required=True, help="query\\trelevant TSV")
    p_eval.add_argument("--backends", default="tfidf,lda,doc2vec",
                        help="comma list of backends to benchmark")

    p_pipe = sub.add_parser("pipeline")
    _add_common(p_pipe)
    p_pipe.add_argument("--user")
    p_pipe.add_argument("-n", type=int, default=10)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    try:
        config = resolve_config(args)
        if args.command == "ingest-check":
            return cmd_ingest_check(config)
        if args.command == "train":
            return cmd_train(config)
        if args.command == "pair":
            return cmd_pair(config)
        if args.command == "cf-build":
            return cmd_cf_build(config)
        if args.command == "recommend":
            return cmd_recommend(config, args.user, args.n)
        if args.command == "eval":
            backends = [b for b in args.backends.split(",") if b]
            for b in backends:
                try:
                    parse_backend_name(b)
                except ValueError as exc:
                    raise UsageError(str(exc)) from exc
            return cmd_eval(config, args.truth, backends)
        if args.command == "pipeline":
            return cmd_pipeline(config, args.user, args.n)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, cf_mod.RatingsError, EvalError, OSError,
            matcher.SimilarityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
