"""Command-line entry point for every workflow in the package.

Subcommands:
    render        rasterize a string or codepoint to PGM/PNG
    index build   build a nearest-neighbor table from a font or embedding file
    perturb       perturb one word, or a newline-delimited word list
    dataset       derive | stats | hard | ingest over annotation JSONL
    train         train a legibility scorer on annotations
    eval          evaluate a scorer or baseline on annotations
    attack run    legibility-filtered corpus attack against a victim
    recovery run  word recovery evaluation over (original, perturbed) pairs
    serve         run the live annotation HTTP service

Conventions: stdout carries data only (JSON, JSONL, or CSV); logs and the
effective-config line go to stderr. Exit codes: 0 success, 1 domain
error, 2 usage error. Randomized subcommands require --seed (or a seed in
the config file); there is no nondeterministic default.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds
from .atlas import Atlas, load_atlas
from .attack import (
    DEFAULT_ATTACK_PRIOR,
    DEFAULT_N_LEVELS,
    DictionaryRecoverer,
    ExternalRecoverer,
    attack_sweep,
    recovery_csv,
    recovery_eval,
)
from .baselines import (
    LogRegPhi,
    MajorityClassifier,
    MajorityRanker,
    imgdot_classify,
    imgdot_classify_fit,
    imgdot_rank,
)
from .config import GlobalConfig
from .errors import LegitError, MissingMetadata
from .index import (
    EmbeddingMatrix,
    NeighborTable,
    build_imgdot_matrix,
    build_neighbor_table,
    load_embeddings,
)
from .metrics import accuracy as accuracy_metric
from .metrics import precision_recall_f1
from .perturb import ParamPrior, PerturbParams, derive_seed, perturb_word, sample_params
from .scorer import FeatureExtractor, LegibilityScorer, TrainConfig, TrainExample, train
from .scorer import load_default_scorer
from .service import AnnotationService, ServiceConfig, load_gold_pairs
from .server import serve_annotation
from .victim import ToyVictim, load_labeled_corpus, open_victim


class UsageError(Exception):
    """Bad flag combination; maps to exit code 2."""


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _emit(doc) -> None:
    print(json.dumps(doc, ensure_ascii=False, indent=2))


def _announce(command: str, cfg: GlobalConfig, flags: dict) -> None:
    """One reproducibility line: the merged config plus the flags used."""
    block = {"command": command, "config": cfg.to_dict(),
             "flags": {k: v for k, v in flags.items() if v is not None}}
    _log("effective-config " + json.dumps(block, ensure_ascii=False, sort_keys=True))


def _resolve_seed(args, cfg: GlobalConfig) -> int:
    seed = getattr(args, "seed", None)
    if seed is None:
        seed = cfg.seed
    if seed is None:
        raise UsageError("--seed is required (or set seed in the config file)")
    return int(seed)


def _build_atlas(cfg: GlobalConfig) -> Atlas:
    return load_atlas(cfg.font)


def _build_index(cfg: GlobalConfig) -> tuple[Atlas, EmbeddingMatrix, NeighborTable]:
    atlas = _build_atlas(cfg)
    cpset = atlas.build_codepoint_set(cfg.cp_start, cfg.cp_end)
    matrix = build_imgdot_matrix(atlas, cpset)
    return atlas, matrix, build_neighbor_table(matrix, top=cfg.top)


def _load_tables(cfg: GlobalConfig) -> dict[str, NeighborTable]:
    """Neighbor tables from config entries, else the built-in font index."""
    if cfg.tables:
        tables: dict[str, NeighborTable] = {}
        for entry in cfg.tables:
            alias, sep, path = entry.partition("=")
            table = NeighborTable.load(path if sep else entry)
            tables[alias if sep else table.model_id] = table
        return tables
    _, _, table = _build_index(cfg)
    return {table.model_id: table}


def _load_scorer(spec: str | None, extractor: FeatureExtractor) -> LegibilityScorer | None:
    if spec is None or spec == "none":
        return None
    if spec == "default":
        return load_default_scorer(extractor)
    return LegibilityScorer.load(spec, extractor=extractor)


# ---------------------------------------------------------------------------
# render

def cmd_render(args, cfg: GlobalConfig) -> int:
    cfg = cfg.merged(font=args.font)
    _announce("render", cfg, {"text": args.text, "cp": args.cp, "out": args.out})
    if (args.text is None) == (args.cp is None):
        raise UsageError("exactly one of --text or --cp is required")
    atlas = _build_atlas(cfg)
    if args.text is not None:
        bitmap = atlas.render_string(args.text)
    else:
        bitmap = atlas.render_glyph(int(args.cp, 0))
    out = Path(args.out)
    suffix = out.suffix.lower()
    if suffix == ".pgm":
        out.write_bytes(bitmap.to_pgm())
    elif suffix == ".png":
        out.write_bytes(bitmap.to_png())
    else:
        raise UsageError(f"--out must end in .pgm or .png, got {out.name!r}")
    _emit({"out": str(out), "width": int(bitmap.pixels.shape[1]),
           "height": int(bitmap.pixels.shape[0])})
    return 0


# ---------------------------------------------------------------------------
# index build

def cmd_index_build(args, cfg: GlobalConfig) -> int:
    cfg = cfg.merged(font=args.font, top=args.top,
                     cp_start=args.start, cp_end=args.end)
    _announce("index build", cfg, {"model": args.model, "out": args.out})
    if args.model == "imgdot":
        _, matrix, table = _build_index(cfg)
    elif args.model.startswith("file:"):
        matrix = load_embeddings(args.model[len("file:"):])
        table = build_neighbor_table(matrix, top=cfg.top)
    else:
        raise UsageError("--model must be 'imgdot' or 'file:<path>'")
    table.save(args.out)
    _emit({"model_id": table.model_id, "codepoints": len(matrix.codepoints),
           "top": table.top, "out": args.out})
    return 0


# ---------------------------------------------------------------------------
# perturb

def cmd_perturb(args, cfg: GlobalConfig) -> int:
    cfg = cfg.merged(font=args.font)
    seed = _resolve_seed(args, cfg)
    _announce("perturb", cfg, {"word": args.word, "corpus": args.corpus,
                               "n": args.n, "k": args.k, "model": args.model,
                               "seed": seed})
    tables = _load_tables(cfg)
    if (args.word is None) == (args.corpus is None):
        raise UsageError("exactly one of --word or --corpus is required")
    if args.word is not None:
        if args.n is None or args.k is None:
            raise UsageError("--n and --k are required with --word")
        model = args.model or sorted(tables)[0]
        if model not in tables:
            raise UsageError(
                f"unknown model {model!r}; available: {sorted(tables)}")
        phi = PerturbParams(n=args.n, k=args.k, model_id=model)
        result = perturb_word(args.word, phi, tables[model], seed)
        _emit(result.to_dict())
        return 0
    prior = ParamPrior(mu_k=args.mu_k, var_k=args.var_k,
                       mu_n=args.mu_n, var_n=args.var_n)
    models = sorted(tables)
    words = [line.strip() for line in
             Path(args.corpus).read_text(encoding="utf-8").splitlines()
             if line.strip()]
    for i, word in enumerate(words):
        rng = np.random.default_rng(derive_seed(seed, i))
        phi = sample_params(prior, models, rng)
        word_seed = int(rng.integers(2 ** 63))
        result = perturb_word(word, phi, tables[phi.model_id], word_seed)
        print(json.dumps({"w": word, "wi": result.perturbed,
                          "phi": phi.to_dict(),
                          "positions": list(result.replaced_positions),
                          "seed": word_seed}, ensure_ascii=False))
    return 0


# ---------------------------------------------------------------------------
# dataset

def _resolved_annotations(path: str) -> list[ds.PairAnnotation]:
    """Annotations with triple-annotated splits majority-resolved."""
    data = ds.LegitDataset(ds.load_annotations(path))
    out: list[ds.PairAnnotation] = []
    for split in ds.SPLITS:
        out.extend(data.resolved(split))
    return out


def cmd_dataset(args, cfg: GlobalConfig) -> int:
    _announce(f"dataset {args.action}", cfg,
              {"in": getattr(args, "infile", None),
               "out": getattr(args, "out", None),
               "dir": getattr(args, "dir", None)})
    if args.action == "derive":
        annotations = _resolved_annotations(args.infile)
        classification = ds.derive_classification(annotations)
        ranking = ds.derive_ranking(annotations)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "classification.jsonl", "w", encoding="utf-8") as fh:
            for ex in classification:
                fh.write(json.dumps(ex.to_dict(), ensure_ascii=False) + "\n")
        with open(outdir / "ranking.jsonl", "w", encoding="utf-8") as fh:
            for ex in ranking:
                fh.write(json.dumps(ex.to_dict(), ensure_ascii=False) + "\n")
        _emit({"annotations": len(annotations),
               "classification": len(classification),
               "ranking": len(ranking), "out": str(outdir)})
    elif args.action == "stats":
        annotations = ds.load_annotations(args.infile)
        by_label: dict[str, int] = {}
        by_split: dict[str, int] = {}
        for a in annotations:
            by_label[a.label] = by_label.get(a.label, 0) + 1
            by_split[a.split] = by_split.get(a.split, 0) + 1
        doc = {"annotations": len(annotations),
               "pairs": len({a.key for a in annotations}),
               "by_label": dict(sorted(by_label.items())),
               "by_split": dict(sorted(by_split.items())),
               "agreement": None}
        test = [a for a in annotations if a.split == "test"]
        counts: dict = {}
        for a in test:
            counts[a.key] = counts.get(a.key, 0) + 1
        complete = [a for a in test if counts[a.key] == 3]
        if complete:
            report = ds.agreement_stats(complete)
            doc["agreement"] = {"all3": report.frac_all3,
                                "two_of3": report.frac_2of3,
                                "none": report.frac_none}
        _emit(doc)
    elif args.action == "hard":
        annotations = _resolved_annotations(args.infile)
        ranking = ds.derive_ranking(annotations)
        classification = ds.derive_classification(annotations)
        hard_rank = ds.hard_ranking_subset(ranking)
        hard_cls = ds.hard_classification_subset(classification)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "hard_ranking.jsonl", "w", encoding="utf-8") as fh:
            for ex in hard_rank:
                fh.write(json.dumps(ex.to_dict(), ensure_ascii=False) + "\n")
        with open(outdir / "hard_classification.jsonl", "w", encoding="utf-8") as fh:
            for ex in hard_cls:
                fh.write(json.dumps(ex.to_dict(), ensure_ascii=False) + "\n")
        _emit({"ranking": len(ranking), "hard_ranking": len(hard_rank),
               "classification": len(classification),
               "hard_classification": len(hard_cls), "out": str(outdir)})
    else:  # ingest
        data, report = ds.ingest_legit(args.dir)
        for warning in report.warnings:
            _log(f"warning: {warning}")
        _emit({"rows": [{"split": s, "stat": st, "actual": a, "expected": e}
                        for s, st, a, e in report.rows],
               "warnings": len(report.warnings)})
    return 0


# ---------------------------------------------------------------------------
# train / eval

def _train_examples(annotations, extractor: FeatureExtractor) -> list[TrainExample]:
    return [TrainExample(f1=extractor.extract(a.word, a.w1),
                         f2=extractor.extract(a.word, a.w2), label=a.label)
            for a in annotations]


def cmd_train(args, cfg: GlobalConfig) -> int:
    cfg = cfg.merged(font=args.font)
    seed = _resolve_seed(args, cfg)
    _announce("train", cfg, {"data": args.data, "val": args.val,
                             "kind": args.kind, "hidden": args.hidden,
                             "lr": args.lr, "epochs": args.epochs,
                             "seed": seed, "out": args.out})
    _, matrix, table = _build_index(cfg)
    extractor = FeatureExtractor(matrix, table)
    train_anns = ds.load_annotations(args.data)
    if args.val is not None:
        val_anns = ds.load_annotations(args.val)
    else:
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(train_anns))
        n_val = max(1, int(round(len(train_anns) * args.val_fraction)))
        val_idx = set(int(i) for i in order[:n_val])
        val_anns = [train_anns[i] for i in sorted(val_idx)]
        train_anns = [a for i, a in enumerate(train_anns) if i not in val_idx]
        _log(f"held out {len(val_anns)} annotations for validation")
    train_set = _train_examples(train_anns, extractor)
    val_set = _train_examples(val_anns, extractor)
    if args.kind == "mlp":
        model = LegibilityScorer.mlp(extractor.dim, hidden=args.hidden,
                                     dropout=args.dropout, seed=seed,
                                     feature_config=extractor.config(),
                                     extractor=extractor)
    else:
        model = LegibilityScorer.linear(extractor.dim,
                                        feature_config=extractor.config(),
                                        extractor=extractor)
    config = TrainConfig(lr=args.lr, batch_size=args.batch_size,
                         max_epochs=args.epochs, patience=args.patience,
                         seed=seed, dropout=args.dropout)
    model, history = train(model, train_set, val_set, config)
    model.save(args.out)
    best = min(history, key=lambda h: h["val_loss"])
    _emit({"out": args.out, "epochs": len(history),
           "best_epoch": best["epoch"], "val_loss": best["val_loss"]})
    return 0


def _eval_classification(predict, examples) -> dict:
    y_true = [ex.legible for ex in examples]
    y_pred = [predict(ex) for ex in examples]
    precision, recall, f1 = precision_recall_f1(y_true, y_pred)
    return {"n": len(examples),
            "accuracy": accuracy_metric(y_true, y_pred),
            "precision": precision, "recall": recall, "f1": f1}


def _eval_ranking(predict, examples) -> dict:
    correct = sum(1 for ex in examples if predict(ex) == ex.preferred)
    return {"n": len(examples),
            "ranking_accuracy": correct / len(examples) if examples else 0.0}


def _phi_features(phi: PerturbParams | None) -> list[float]:
    if phi is None:
        raise MissingMetadata("logreg baseline needs phi metadata on examples")
    return [phi.n, float(phi.k)]


def cmd_eval(args, cfg: GlobalConfig) -> int:
    cfg = cfg.merged(font=args.font)
    _announce("eval", cfg, {"model": args.model, "task": args.task,
                            "data": args.data, "train": args.train,
                            "hard": args.hard})
    eval_anns = _resolved_annotations(args.data)
    train_anns = (_resolved_annotations(args.train)
                  if args.train is not None else eval_anns)
    needs_index = args.model.startswith("baseline:imgdot") or \
        not args.model.startswith("baseline:")
    matrix = table = None
    if needs_index:
        _, matrix, table = _build_index(cfg)
    doc = {"model": args.model, "task": args.task}
    if args.task == "classification":
        examples = ds.derive_classification(eval_anns)
        train_examples = ds.derive_classification(train_anns)
        if not examples:
            raise ValueError("no classification examples in --data")
        if args.model == "baseline:majority":
            clf = MajorityClassifier.fit([ex.legible for ex in train_examples])
            predict = lambda ex: clf.predict()
        elif args.model == "baseline:logreg":
            model = LogRegPhi.fit(
                [_phi_features(ex.phi) for ex in train_examples],
                [ex.legible for ex in train_examples])
            predict = lambda ex: model.predict_one(*_phi_features(ex.phi))
        elif args.model == "baseline:imgdot":
            clf = imgdot_classify_fit(
                [(ex.word, ex.perturbed, ex.legible) for ex in train_examples],
                matrix)
            predict = lambda ex: imgdot_classify(clf, ex.word, ex.perturbed, matrix)
        else:
            scorer = _load_scorer(args.model, FeatureExtractor(matrix, table))
            predict = lambda ex: scorer.classify(ex.word, ex.perturbed)
        doc.update(_eval_classification(predict, examples))
        if args.hard:
            hard = ds.hard_classification_subset(examples)
            doc["hard"] = _eval_classification(predict, hard)
    else:
        examples = ds.derive_ranking(eval_anns)
        train_examples = ds.derive_ranking(train_anns)
        if not examples:
            raise ValueError("no ranking examples in --data")
        if args.model == "baseline:majority":
            ranker = MajorityRanker.fit([ex.preferred for ex in train_examples])
            predict = lambda ex: ranker.predict()
        elif args.model == "baseline:logreg":
            model = LogRegPhi.fit(
                [_phi_features(ex.phi1) for ex in train_examples]
                + [_phi_features(ex.phi2) for ex in train_examples],
                [ex.preferred == 1 for ex in train_examples]
                + [ex.preferred == 2 for ex in train_examples])
            def predict(ex):
                d1 = float(model.decision(_phi_features(ex.phi1))[0])
                d2 = float(model.decision(_phi_features(ex.phi2))[0])
                return 1 if d1 >= d2 else 2
        elif args.model == "baseline:imgdot":
            predict = lambda ex: imgdot_rank(ex.word, ex.w1, ex.w2, matrix)
        else:
            scorer = _load_scorer(args.model, FeatureExtractor(matrix, table))
            predict = lambda ex: scorer.rank(ex.word, ex.w1, ex.w2)
        doc.update(_eval_ranking(predict, examples))
        if args.hard:
            hard = ds.hard_ranking_subset(examples)
            doc["hard"] = _eval_ranking(predict, hard)
    _emit(doc)
    return 0


# ---------------------------------------------------------------------------
# attack / recovery

def cmd_attack_run(args, cfg: GlobalConfig) -> int:
    cfg = cfg.merged(font=args.font, scorer=args.scorer)
    seed = _resolve_seed(args, cfg)
    levels = tuple(float(x) for x in args.n_levels.split(","))
    _announce("attack run", cfg, {"corpus": args.corpus, "victim": args.victim,
                                  "n_levels": args.n_levels, "seed": seed,
                                  "threshold": args.threshold,
                                  "out_dir": args.out_dir})
    texts, labels = load_labeled_corpus(args.corpus)
    _, matrix, table = _build_index(cfg)
    tables = {table.model_id: table}
    extractor = FeatureExtractor(matrix, table)
    scorer = _load_scorer(cfg.scorer or "default", extractor)
    if args.victim == "toy":
        _log("training toy victim on the clean corpus")
        client = ToyVictim.train(texts, labels)
        closer = None
    else:
        client = open_victim(args.victim)
        closer = client
    try:
        report = attack_sweep(texts, labels, client, tables, matrix, scorer,
                              threshold=args.threshold, n_levels=levels,
                              seed=seed)
    finally:
        if closer is not None:
            closer.close()
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    report.degradation.save_csv(outdir / "degradation.csv")
    (outdir / "recovery.csv").write_text(recovery_csv(report.recovery),
                                         encoding="utf-8")
    (outdir / "report.json").write_text(report.to_json() + "\n",
                                        encoding="utf-8")
    _log(f"wrote degradation.csv, recovery.csv, report.json to {outdir}")
    print(report.to_json())
    return 0


def cmd_recovery_run(args, cfg: GlobalConfig) -> int:
    cfg = cfg.merged(font=args.font)
    _announce("recovery run", cfg, {"pairs": args.pairs, "vocab": args.vocab,
                                    "recoverer": args.recoverer,
                                    "levels": args.levels})
    pairs = []
    with open(args.pairs, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            n = doc["n"] if "n" in doc else doc["phi"]["n"]
            pairs.append((doc["w"], doc["wi"], float(n)))
    if not pairs:
        raise ValueError(f"{args.pairs}: no pairs found")
    levels = tuple(float(x) for x in args.levels.split(","))
    if args.recoverer is not None:
        with ExternalRecoverer(args.recoverer) as recoverer:
            reports = recovery_eval(pairs, recoverer, levels=levels)
    else:
        if args.vocab is not None:
            vocab = [w for w in Path(args.vocab).read_text(
                encoding="utf-8").split() if w]
        else:
            vocab = sorted({w for w, _, _ in pairs})
        _, matrix, _ = _build_index(cfg)
        reports = recovery_eval(pairs, DictionaryRecoverer(vocab, matrix),
                                levels=levels)
    print(recovery_csv(reports), end="")
    return 0


# ---------------------------------------------------------------------------
# serve

def cmd_serve(args, cfg: GlobalConfig) -> int:
    cfg = cfg.merged(font=args.font, vocab=args.vocab, gold=args.gold,
                     host=args.host, port=args.port)
    seed = _resolve_seed(args, cfg)
    _announce("serve", cfg, {"seed": seed, "log": args.log,
                             "resume": args.resume})
    if cfg.vocab is None:
        raise UsageError("--vocab is required (or set vocab in the config file)")
    atlas, matrix, table = _build_index(cfg)
    tables = {table.model_id: table}
    if args.resume:
        if args.log is None:
            raise UsageError("--resume requires --log")
        service = AnnotationService.from_log(args.log, tables, resume=True)
    else:
        vocab = [w for w in Path(cfg.vocab).read_text(
            encoding="utf-8").split() if w]
        gold = load_gold_pairs(cfg.gold) if cfg.gold else None
        service = AnnotationService(
            vocab, tables, config=ServiceConfig(), gold=gold, seed=seed,
            log_path=args.log)
        service.advance_round()
    server = serve_annotation(service, atlas, host=cfg.host, port=cfg.port)
    _log(f"annotation service listening on {server.url}")
    try:
        server._thread.join()
    except KeyboardInterrupt:
        _log("shutting down")
        server.stop()
    return 0


# ---------------------------------------------------------------------------
# parser and dispatch

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="legit",
        description="Visually similar perturbations, legibility scoring, "
                    "attack and recovery evaluation, live annotation.")
    parser.add_argument("--config", help="config file (else $LEGIT_CONFIG)")
    parser.add_argument("--json", action="store_true",
                        help="emit errors as JSON on stderr")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("render", help="rasterize a string or codepoint")
    p.add_argument("--text")
    p.add_argument("--cp", help="codepoint, e.g. 0x0435")
    p.add_argument("--font")
    p.add_argument("--out", required=True, help="output .pgm or .png path")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("index", help="similarity index commands")
    index_sub = p.add_subparsers(dest="action")
    b = index_sub.add_parser("build", help="build a neighbor table")
    b.add_argument("--model", default="imgdot", help="imgdot or file:<path>")
    b.add_argument("--font")
    b.add_argument("--top", type=int)
    b.add_argument("--start", type=lambda s: int(s, 0))
    b.add_argument("--end", type=lambda s: int(s, 0))
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_index_build)

    p = sub.add_parser("perturb", help="perturb a word or word list")
    p.add_argument("--word")
    p.add_argument("--corpus", help="newline-delimited word list")
    p.add_argument("--n", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--model")
    p.add_argument("--seed", type=int)
    p.add_argument("--font")
    p.add_argument("--mu-k", type=float, default=25.0)
    p.add_argument("--var-k", type=float, default=10.0)
    p.add_argument("--mu-n", type=float, default=0.5)
    p.add_argument("--var-n", type=float, default=0.2)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("dataset", help="annotation dataset commands")
    data_sub = p.add_subparsers(dest="action")
    d = data_sub.add_parser("derive", help="derive classification/ranking sets")
    d.add_argument("--in", dest="infile", required=True)
    d.add_argument("--out", required=True, help="output directory")
    d.set_defaults(func=cmd_dataset)
    d = data_sub.add_parser("stats", help="label/split/agreement statistics")
    d.add_argument("--in", dest="infile", required=True)
    d.set_defaults(func=cmd_dataset)
    d = data_sub.add_parser("hard", help="hard subsets of the derived sets")
    d.add_argument("--in", dest="infile", required=True)
    d.add_argument("--out", required=True, help="output directory")
    d.set_defaults(func=cmd_dataset)
    d = data_sub.add_parser("ingest", help="load a corpus and check statistics")
    d.add_argument("--dir", required=True,
                   help="annotation file or directory of <split>.jsonl files")
    d.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", help="train a legibility scorer")
    p.add_argument("--data", required=True, help="training annotations JSONL")
    p.add_argument("--val", help="validation annotations JSONL")
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--kind", choices=("linear", "mlp"), default="mlp")
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--seed", type=int)
    p.add_argument("--font")
    p.add_argument("--out", required=True, help="model JSON output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a scorer or baseline")
    p.add_argument("--model", required=True,
                   help="model JSON path, 'default', or baseline:"
                        "{majority,logreg,imgdot}")
    p.add_argument("--task", choices=("classification", "ranking"),
                   required=True)
    p.add_argument("--data", required=True, help="evaluation annotations JSONL")
    p.add_argument("--train", help="training annotations (default: --data)")
    p.add_argument("--hard", action="store_true",
                   help="also evaluate on the hard subset")
    p.add_argument("--font")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("attack", help="attack pipeline commands")
    attack_sub = p.add_subparsers(dest="action")
    a = attack_sub.add_parser("run", help="legibility-filtered attack sweep")
    a.add_argument("--corpus", required=True,
                   help="labeled corpus JSONL with text/label fields")
    a.add_argument("--victim", required=True,
                   help="cmd:<argv>, http:<url>, or 'toy'")
    a.add_argument("--scorer", help="model path, 'default', or 'none'")
    a.add_argument("--n-levels", default=",".join(str(x) for x in DEFAULT_N_LEVELS))
    a.add_argument("--threshold", type=float, default=0.0)
    a.add_argument("--seed", type=int)
    a.add_argument("--font")
    a.add_argument("--out-dir", default=".")
    a.set_defaults(func=cmd_attack_run)

    p = sub.add_parser("recovery", help="recovery evaluation commands")
    recovery_sub = p.add_subparsers(dest="action")
    r = recovery_sub.add_parser("run", help="evaluate word recovery")
    r.add_argument("--pairs", required=True,
                   help="JSONL with w/wi and n (or phi.n) fields")
    r.add_argument("--vocab", help="vocabulary word list (default: originals)")
    r.add_argument("--recoverer", help="external recoverer command")
    r.add_argument("--levels", default=",".join(str(x) for x in DEFAULT_N_LEVELS))
    r.add_argument("--font")
    r.set_defaults(func=cmd_recovery_run)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--vocab")
    p.add_argument("--gold")
    p.add_argument("--seed", type=int)
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--log", help="event log path")
    p.add_argument("--resume", action="store_true",
                   help="replay --log and continue serving")
    p.add_argument("--font")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_err:
        return int(exit_err.code or 0)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = GlobalConfig.load(args.config)
        return args.func(args, cfg) or 0
    except UsageError as e:
        _log(f"usage error: {e}")
        return 2
    except (LegitError, ValueError, OSError) as e:
        if getattr(args, "json", False):
            _log(json.dumps({"error": type(e).__name__, "message": str(e)}))
        else:
            _log(f"error: {type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
