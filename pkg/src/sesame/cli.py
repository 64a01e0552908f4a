"""Command-line entry point wiring the pipeline stages together.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
The SESAME_SEED environment variable supplies the seed when a command
does not pass --seed explicitly.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import embednet, gnn, metrics, sampler, simgraph, synth
from .corpus import BucketSpec
from .errors import DataError, NumericError, SesameError, ShapeError, UsageError


def _default_seed(value) -> int:
    if value is not None:
        return int(value)
    return int(os.environ.get("SESAME_SEED", "0"))


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


# ---------------------------------------------------------------- wer

def cmd_wer(args) -> int:
    refs = Path(args.ref).read_text(encoding="utf-8").splitlines()
    hyps = Path(args.hyp).read_text(encoding="utf-8").splitlines()
    if len(refs) != len(hyps):
        raise DataError(f"{len(refs)} reference lines vs {len(hyps)} hypothesis lines")
    tot_s = tot_d = tot_i = tot_n = 0
    for lineno, (ref, hyp) in enumerate(zip(refs, hyps), start=1):
        ref_tokens = corpus_mod.normalize_text(ref)
        hyp_tokens = corpus_mod.normalize_text(hyp)
        if not ref_tokens:
            raise DataError(f"line {lineno}: empty reference after normalization")
        score = corpus_mod.compute_wer(ref_tokens, hyp_tokens)
        tot_s += score.substitutions
        tot_d += score.deletions
        tot_i += score.insertions
        tot_n += score.reference_length
        print(f"line {lineno}: S={score.substitutions} D={score.deletions} "
              f"I={score.insertions} N={score.reference_length} WER={score.value:.4f}")
    print(f"total: S={tot_s} D={tot_d} I={tot_i} N={tot_n} "
          f"WER={(tot_s + tot_d + tot_i) / tot_n:.4f}")
    return 0


# ---------------------------------------------------------- graph commands

def _load_labeled_corpus(path, buckets: BucketSpec):
    utterances = corpus_mod.load_corpus(path)
    missing = [u.id for u in utterances if u.wer is None]
    if missing:
        raise DataError(f"{len(missing)} utterance(s) without wer "
                        f"(first: {missing[0]}); training corpus must be labeled")
    corpus_mod.label_corpus(utterances, buckets)
    return utterances


def cmd_build_graph(args) -> int:
    buckets = BucketSpec()
    utterances = _load_labeled_corpus(args.corpus, buckets)
    embeddings = corpus_mod.load_embeddings(args.embeddings, len(utterances))
    labels = np.array([u.class_label for u in utterances], dtype=np.int16)
    graph = simgraph.build_graph(embeddings, k=args.k, threshold=args.threshold,
                                 labels=labels, mode=args.mode,
                                 seed=_default_seed(args.seed))
    simgraph.save_graph(graph, args.out)
    print(f"graph: {graph.node_count} nodes, {graph.edge_count} edges -> {args.out}")
    return 0


def cmd_extend_graph(args) -> int:
    holdout_utts = corpus_mod.load_corpus(args.holdout_corpus)
    train_emb = corpus_mod.load_embeddings(args.embeddings)
    graph = simgraph.load_graph(args.graph, features=train_emb)
    holdout_emb = corpus_mod.load_embeddings(args.holdout_embeddings,
                                             len(holdout_utts))
    extended = simgraph.extend_graph(graph, holdout_emb, k=args.k,
                                     threshold=args.threshold, mode=args.mode,
                                     seed=_default_seed(args.seed))
    simgraph.save_graph(extended, args.out)
    isolated = extended.diagnostics.get("isolated_holdout", 0)
    print(f"extended graph: {extended.node_count} nodes, "
          f"{extended.edge_count} edges, {isolated} isolated holdout -> {args.out}")
    return 0


def cmd_refine_embeddings(args) -> int:
    buckets = BucketSpec()
    utterances = _load_labeled_corpus(args.corpus, buckets)
    embeddings = corpus_mod.load_embeddings(args.embeddings, len(utterances))
    labels = np.array([u.class_label for u in utterances])
    config = embednet.RefinerConfig(temperature=args.temperature,
                                    epochs=args.epochs,
                                    seed=_default_seed(args.seed))
    refined = embednet.refine_embeddings(embeddings, labels, config)
    corpus_mod.save_embeddings(refined, args.out)
    print(f"refined embeddings: {refined.shape[0]}x{refined.shape[1]} -> {args.out}")
    return 0


# ---------------------------------------------------------- model commands

def cmd_train(args) -> int:
    embeddings = corpus_mod.load_embeddings(args.embeddings)
    graph = simgraph.load_graph(args.graph, features=embeddings)
    config = gnn.GnnConfig(architecture=args.arch, epochs=args.epochs,
                           input_dim=graph.dim, k=args.classes,
                           seed=_default_seed(args.seed))
    model, history = gnn.train_gnn(graph, config)
    gnn.save_model(model, args.out)
    last = history[-1]
    msg = (f"trained {args.arch}: train_loss={last['train_loss']:.4f} "
           f"train_acc={last['train_acc']:.4f}")
    if "val_acc" in last:
        msg += f" val_acc={last['val_acc']:.4f} val_ofa={last['val_ofa']:.4f}"
    print(msg + f" -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = gnn.load_model(args.model)
    train_emb = corpus_mod.load_embeddings(args.embeddings)
    holdout_utts = corpus_mod.load_corpus(args.holdout_corpus)
    holdout_emb = corpus_mod.load_embeddings(args.holdout_embeddings,
                                             len(holdout_utts))
    features = np.concatenate([train_emb, holdout_emb])
    graph = simgraph.load_graph(args.graph, features=features)
    idx, classes, scores = gnn.predict(model, graph)
    n_train = train_emb.shape[0]
    with Path(args.out).open("w", encoding="utf-8") as fh:
        for node, cls, row in zip(idx, classes, scores):
            utt = holdout_utts[int(node) - n_train]
            fh.write(json.dumps({"id": utt.id, "predicted_class": int(cls),
                                 "scores": [round(float(s), 6) for s in row]},
                                sort_keys=True) + "\n")
    print(f"predicted {len(idx)} holdout nodes -> {args.out}")
    return 0


def cmd_sample(args) -> int:
    predictions = {}
    with Path(args.labels).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            predictions[rec["id"]] = int(rec["predicted_class"])
    result = sampler.sample_difficult(predictions, args.k,
                                      seed=_default_seed(args.seed))
    with Path(args.out).open("w", encoding="utf-8") as fh:
        for rank, uid in enumerate(result.selected):
            fh.write(json.dumps({"id": uid,
                                 "predicted_class": predictions[uid],
                                 "rank": rank,
                                 "boundary_bucket": result.boundary_bucket},
                                sort_keys=True) + "\n")
    note = " (shortage)" if result.shortage else ""
    print(f"sampled {len(result.selected)}/{result.requested}{note}, "
          f"boundary bucket {result.boundary_bucket} -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    buckets = BucketSpec()
    truth_utts = _load_labeled_corpus(args.truth, buckets)
    truth_by_id = {u.id: u.class_label for u in truth_utts}
    pred, truth = [], []
    with Path(args.pred).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec["id"] not in truth_by_id:
                raise DataError(f"prediction for unknown id '{rec['id']}'")
            pred.append(int(rec["predicted_class"]))
            truth.append(truth_by_id[rec["id"]])
    report = metrics.evaluate(pred, truth, k=buckets.k)
    print(report.summary())
    for row in report.confusion:
        print("  " + " ".join(f"{c:5d}" for c in row))
    if args.out:
        with Path(args.out).open("w", encoding="utf-8") as fh:
            fh.write(json.dumps({"accuracy": report.accuracy, "ofa": report.ofa,
                                 "mse": report.mse, "n": report.n},
                                sort_keys=True) + "\n")
    return 0


def cmd_synth(args) -> int:
    spec = synth.PlantedSpec(n=args.n, k=args.k, dim=args.dim,
                             label_noise=args.noise,
                             cluster_noise=args.cluster_noise,
                             seed=_default_seed(args.seed))
    utterances, embeddings, planted = synth.generate_planted(spec)
    corpus_path = Path(f"{args.out_prefix}.jsonl")
    emb_path = Path(f"{args.out_prefix}.emb")
    corpus_mod.save_corpus(utterances, corpus_path)
    corpus_mod.save_embeddings(embeddings, emb_path)
    print(f"planted corpus: {spec.n} points, {spec.k} classes -> "
          f"{corpus_path}, {emb_path}")
    return 0


# ---------------------------------------------------------- pipeline passes

_CONFIG_DEFAULTS = {
    "corpus": None, "embeddings": None,
    "holdout_corpus": None, "holdout_embeddings": None,
    "out_dir": "runs", "k": 10, "threshold": 0.7, "mode": "exact",
    "refine": False, "refine_epochs": 200, "temperature": 0.1,
    "arch": "gcn", "epochs": 2100, "classes": 7,
    "sample_size": 100, "seed": 0,
}

_CONFIG_TYPES = {"k": int, "refine_epochs": int, "epochs": int,
                 "classes": int, "sample_size": int, "seed": int,
                 "threshold": float, "temperature": float,
                 "refine": lambda v: str(v).lower() in ("1", "true", "yes")}


def _load_pipeline_config(args) -> dict:
    config = dict(_CONFIG_DEFAULTS)
    if args.config:
        for lineno, line in enumerate(
                Path(args.config).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{args.config}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in config:
                raise UsageError(f"{args.config}:{lineno}: unknown key '{key}'")
            config[key] = _CONFIG_TYPES.get(key, str)(value)
    for key in config:
        override = getattr(args, key, None)
        if override is not None:
            config[key] = override
    if os.environ.get("SESAME_SEED") and args.seed is None and "seed" not in _file_keys(args):
        config["seed"] = int(os.environ["SESAME_SEED"])
    return config


def _file_keys(args) -> set:
    if not args.config:
        return set()
    keys = set()
    for line in Path(args.config).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#") and "=" in line:
            keys.add(line.split("=", 1)[0].strip())
    return keys


class _RunLock:
    """One process per output directory."""

    def __init__(self, out_dir: Path):
        self.path = out_dir / ".lock"

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise UsageError(f"output directory is locked by {self.path}")
        os.close(fd)
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)


def _manifest_append(records: list, stage: str, **fields) -> None:
    records.append({"stage": stage, **fields})


def _manifest_write(records: list, path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def run_train_pass(config: dict) -> dict:
    """bucketize -> (optional refine) -> build graph -> train -> eval."""
    if not config["corpus"] or not config["embeddings"]:
        raise UsageError("train pass needs 'corpus' and 'embeddings' paths")
    for key in ("corpus", "embeddings"):
        if not Path(config[key]).exists():
            raise DataError(f"missing input file: {config[key]}")
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest: list = []
    stage = "load"
    with _RunLock(out_dir):
        try:
            buckets = BucketSpec()
            utterances = _load_labeled_corpus(config["corpus"], buckets)
            embeddings = corpus_mod.load_embeddings(config["embeddings"],
                                                    len(utterances))
            labels = np.array([u.class_label for u in utterances], dtype=np.int16)
            _manifest_append(manifest, "load", corpus=str(config["corpus"]),
                             corpus_sha256=_sha256(Path(config["corpus"])),
                             embeddings_sha256=_sha256(Path(config["embeddings"])),
                             n=len(utterances))

            if config["refine"]:
                stage = "refine"
                refiner = embednet.RefinerConfig(
                    temperature=config["temperature"],
                    epochs=config["refine_epochs"], seed=config["seed"])
                refined = embednet.refine_embeddings(embeddings, labels, refiner)
                refined_path = out_dir / "refined.emb"
                corpus_mod.save_embeddings(refined, refined_path)
                embeddings = refined
                _manifest_append(manifest, "refine", artifact=refined_path.name,
                                 sha256=_sha256(refined_path),
                                 epochs=config["refine_epochs"])

            stage = "build_graph"
            graph = simgraph.build_graph(embeddings, k=config["k"],
                                         threshold=config["threshold"],
                                         labels=labels, mode=config["mode"],
                                         seed=config["seed"])
            graph_path = out_dir / "graph.sgrf"
            simgraph.save_graph(graph, graph_path)
            emb_path = out_dir / "graph.emb"
            corpus_mod.save_embeddings(graph.features, emb_path)
            _manifest_append(manifest, "build_graph", artifact=graph_path.name,
                             sha256=_sha256(graph_path),
                             nodes=graph.node_count, edges=graph.edge_count)

            stage = "train"
            gconfig = gnn.GnnConfig(architecture=config["arch"],
                                    epochs=config["epochs"],
                                    input_dim=graph.dim, k=config["classes"],
                                    seed=config["seed"])
            model, history = gnn.train_gnn(graph, gconfig)
            model_path = out_dir / "model.sckp"
            gnn.save_model(model, model_path)
            last = history[-1]
            _manifest_append(manifest, "train", artifact=model_path.name,
                             sha256=_sha256(model_path),
                             arch=config["arch"], epochs=config["epochs"],
                             final=last)

            stage = "eval"
            rng = np.random.default_rng(gconfig.seed)
            labeled = np.where((graph.labels >= 0) & ~graph.holdout)[0]
            perm = rng.permutation(labeled)
            n_val = int(round(gconfig.val_fraction * labeled.size))
            val_nodes = perm[:n_val] if n_val else labeled
            pred = gnn.decode_ordinal_batch(model.scores(graph)[val_nodes])
            report = metrics.evaluate(pred, labels[val_nodes].astype(np.int64),
                                      k=config["classes"])
            _manifest_append(manifest, "eval", accuracy=report.accuracy,
                             ofa=report.ofa, mse=report.mse, n=report.n)
            _manifest_append(manifest, "config", **{
                k: v for k, v in sorted(config.items())
                if k != "out_dir"})
        except SesameError:
            _manifest_append(manifest, "aborted", failed_stage=stage)
            _manifest_write(manifest, out_dir / "manifest.jsonl")
            print(f"train pass aborted at stage '{stage}'", file=sys.stderr)
            raise
        _manifest_write(manifest, out_dir / "manifest.jsonl")
    return {"graph": str(graph_path), "model": str(model_path),
            "report": report, "manifest": str(out_dir / "manifest.jsonl")}


def run_finetune_pass(config: dict) -> dict:
    """extend graph -> predict holdout -> sample difficult."""
    if not config["holdout_corpus"] or not config["holdout_embeddings"]:
        raise UsageError("fine-tune pass needs 'holdout_corpus' and "
                         "'holdout_embeddings' paths")
    if config["sample_size"] < 1:
        raise UsageError("sample_size must be >= 1")
    out_dir = Path(config["out_dir"])
    graph_path = out_dir / "graph.sgrf"
    model_path = out_dir / "model.sckp"
    emb_path = out_dir / "graph.emb"
    for path in (graph_path, model_path, emb_path):
        if not path.exists():
            raise DataError(f"missing train-pass artifact: {path}")
    manifest: list = []
    stage = "extend_graph"
    with _RunLock(out_dir):
        try:
            train_emb = corpus_mod.load_embeddings(emb_path)
            graph = simgraph.load_graph(graph_path, features=train_emb)
            holdout_utts = corpus_mod.load_corpus(config["holdout_corpus"])
            holdout_emb = corpus_mod.load_embeddings(
                config["holdout_embeddings"], len(holdout_utts))
            extended = simgraph.extend_graph(graph, holdout_emb,
                                             k=config["k"],
                                             threshold=config["threshold"],
                                             mode=config["mode"],
                                             seed=config["seed"])
            extended_path = out_dir / "extended.sgrf"
            simgraph.save_graph(extended, extended_path)
            _manifest_append(manifest, "extend_graph",
                             artifact=extended_path.name,
                             sha256=_sha256(extended_path),
                             isolated_holdout=extended.diagnostics.get(
                                 "isolated_holdout", 0))

            stage = "predict"
            model = gnn.load_model(model_path)
            idx, classes, scores = gnn.predict(model, extended)
            labels_path = out_dir / "labels.jsonl"
            n_train = graph.node_count
            with labels_path.open("w", encoding="utf-8") as fh:
                for node, cls, row in zip(idx, classes, scores):
                    utt = holdout_utts[int(node) - n_train]
                    fh.write(json.dumps(
                        {"id": utt.id, "predicted_class": int(cls),
                         "scores": [round(float(s), 6) for s in row]},
                        sort_keys=True) + "\n")
            hist = np.bincount(classes, minlength=model.config.k).tolist()
            _manifest_append(manifest, "predict", artifact=labels_path.name,
                             sha256=_sha256(labels_path),
                             per_bucket_histogram=hist)

            stage = "sample"
            predictions = {holdout_utts[int(node) - n_train].id: int(cls)
                           for node, cls in zip(idx, classes)}
            result = sampler.sample_difficult(predictions,
                                              config["sample_size"],
                                              seed=config["seed"])
            sample_path = out_dir / "sample.jsonl"
            with sample_path.open("w", encoding="utf-8") as fh:
                for rank, uid in enumerate(result.selected):
                    fh.write(json.dumps(
                        {"id": uid, "predicted_class": predictions[uid],
                         "rank": rank,
                         "boundary_bucket": result.boundary_bucket},
                        sort_keys=True) + "\n")
            _manifest_append(manifest, "sample", artifact=sample_path.name,
                             sha256=_sha256(sample_path),
                             selected=len(result.selected),
                             boundary_bucket=result.boundary_bucket,
                             shortage=result.shortage)
            _manifest_append(manifest, "config", **{
                k: v for k, v in sorted(config.items())
                if k != "out_dir"})
        except SesameError:
            _manifest_append(manifest, "aborted", failed_stage=stage)
            _manifest_write(manifest, out_dir / "finetune_manifest.jsonl")
            print(f"fine-tune pass aborted at stage '{stage}'", file=sys.stderr)
            raise
        _manifest_write(manifest, out_dir / "finetune_manifest.jsonl")
    return {"extended": str(extended_path), "labels": str(labels_path),
            "sample": str(sample_path), "result": result,
            "manifest": str(out_dir / "finetune_manifest.jsonl")}


def cmd_run_train_pass(args) -> int:
    config = _load_pipeline_config(args)
    out = run_train_pass(config)
    print(f"train pass complete: {out['report'].summary()}")
    print(f"artifacts: {out['graph']}, {out['model']}, {out['manifest']}")
    return 0


def cmd_run_finetune_pass(args) -> int:
    config = _load_pipeline_config(args)
    out = run_finetune_pass(config)
    result = out["result"]
    print(f"fine-tune pass complete: sampled {len(result.selected)} ids, "
          f"boundary bucket {result.boundary_bucket}")
    print(f"artifacts: {out['labels']}, {out['sample']}, {out['manifest']}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sesame",
        description="Predict per-utterance difficulty buckets from "
                    "semantic similarity graphs and sample the hardest data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wer", help="score hypothesis lines against references")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.set_defaults(func=cmd_wer)

    p = sub.add_parser("build-graph", help="build the training similarity graph")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--k", type=int, default=simgraph.DEFAULT_K)
    p.add_argument("--threshold", type=float, default=simgraph.DEFAULT_THRESHOLD)
    p.add_argument("--mode", choices=("exact", "ann"), default="exact")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("extend-graph", help="append holdout nodes to a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--embeddings", required=True,
                   help="embeddings of the training graph nodes")
    p.add_argument("--holdout-corpus", required=True)
    p.add_argument("--holdout-embeddings", required=True)
    p.add_argument("--k", type=int, default=simgraph.DEFAULT_K)
    p.add_argument("--threshold", type=float, default=simgraph.DEFAULT_THRESHOLD)
    p.add_argument("--mode", choices=("exact", "ann"), default="exact")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extend_graph)

    p = sub.add_parser("refine-embeddings",
                       help="contrastively refine embeddings with class labels")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--temperature", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_refine_embeddings)

    p = sub.add_parser("train", help="train a difficulty prediction model")
    p.add_argument("--graph", required=True)
    p.add_argument("--embeddings", required=True,
                   help="embeddings of the graph nodes")
    p.add_argument("--arch", choices=gnn.ARCHITECTURES, default="gcn")
    p.add_argument("--epochs", type=int, default=2100)
    p.add_argument("--classes", type=int, default=7)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict classes for holdout nodes")
    p.add_argument("--model", required=True)
    p.add_argument("--graph", required=True, help="extended graph file")
    p.add_argument("--embeddings", required=True,
                   help="embeddings of the training nodes")
    p.add_argument("--holdout-corpus", required=True)
    p.add_argument("--holdout-embeddings", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sample", help="select the hardest predicted utterances")
    p.add_argument("--labels", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="score predictions against a labeled corpus")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a planted synthetic corpus")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--k", type=int, default=7)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--noise", type=float, default=0.1,
                   help="label noise rate")
    p.add_argument("--cluster-noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_synth)

    for name, fn in (("run-train-pass", cmd_run_train_pass),
                     ("run-finetune-pass", cmd_run_finetune_pass)):
        p = sub.add_parser(name, help=f"{name.replace('-', ' ')} pipeline")
        p.add_argument("--config", default=None,
                       help="key=value configuration file")
        p.add_argument("--corpus", default=None)
        p.add_argument("--embeddings", default=None)
        p.add_argument("--holdout-corpus", dest="holdout_corpus", default=None)
        p.add_argument("--holdout-embeddings", dest="holdout_embeddings",
                       default=None)
        p.add_argument("--out-dir", dest="out_dir", default=None)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--threshold", type=float, default=None)
        p.add_argument("--mode", choices=("exact", "ann"), default=None)
        p.add_argument("--refine", action="store_const", const=True,
                       default=None)
        p.add_argument("--refine-epochs", dest="refine_epochs", type=int,
                       default=None)
        p.add_argument("--temperature", type=float, default=None)
        p.add_argument("--arch", choices=gnn.ARCHITECTURES, default=None)
        p.add_argument("--epochs", type=int, default=None)
        p.add_argument("--classes", type=int, default=None)
        p.add_argument("--sample-size", dest="sample_size", type=int,
                       default=None)
        p.add_argument("--seed", type=int, default=None)
        p.set_defaults(func=fn)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (NumericError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
