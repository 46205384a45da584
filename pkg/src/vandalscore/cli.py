"""Command-line interface wiring the corpus, model, and service modules."""

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import context, gbm, ingest, metrics, pipeline, synth, timesplit
from .errors import SchemaMismatch, VandalScoreError
from .gbm import GBMParams

log = logging.getLogger(__name__)


def _utc_date(text):
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _add_split_flags(p):
    p.add_argument("--train-start", type=_utc_date, default=None)
    p.add_argument("--valid-start", type=_utc_date, default=None)
    p.add_argument("--test-start", type=_utc_date, default=None)
    p.add_argument("--test-end", type=_utc_date, default=None)


def _split_from(args):
    kwargs = {}
    for name in ("train_start", "valid_start", "test_start", "test_end"):
        value = getattr(args, name, None)
        if value is not None:
            kwargs[name] = value
    return timesplit.TimeSplit(**kwargs)


def _read_lines(path):
    if not path:
        return []
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _check_schema_flag(args, store):
    """--schema points at a schema.tsv to cross-check against the state."""
    path = getattr(args, "schema", None)
    if not path:
        return
    slots = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            _, name, kind = line.split("\t")
            slots.append((name, kind))
    expected = context.FeatureSchema(slots)
    if expected.hash_hex() != store.schema.hash_hex():
        raise SchemaMismatch("--schema file does not match the state archive")


def _load_scorer(args, use_sil=True):
    store = context.load_state(args.state)
    _check_schema_flag(args, store)
    model = gbm.load_model(args.model)
    return pipeline.RevisionScorer(model, store, use_sil=use_sil)


# ---------------------------------------------------------------- commands

def cmd_synth(args):
    os.makedirs(args.out, exist_ok=True)
    config = synth.SynthConfig(
        n=args.n, seed=args.seed, vandalism_rate=args.vandalism_rate,
        mean_session_len=args.mean_session_len, marker_rate=args.marker_rate)
    stats = synth.generate(
        config,
        os.path.join(args.out, "corpus.xml"),
        os.path.join(args.out, "metadata.csv"),
        os.path.join(args.out, "truth.csv"),
        os.path.join(args.out, "privileged.txt"),
        os.path.join(args.out, "bots.txt"),
    )
    print(f"wrote {stats['revisions']} revisions "
          f"({stats['vandal_revisions']} vandalism, {stats['sessions']} sessions) "
          f"to {args.out}")
    return 0


def cmd_extract(args):
    pairs = ingest.stream_corpus(args.xml, args.meta)
    split = _split_from(args)
    parts = timesplit.split_corpus(pairs, split)
    store = context.build_state_store(
        parts["train"],
        privileged=_read_lines(args.privileged),
        bots=_read_lines(args.bots))
    usable = [p for name in ("train", "valid", "test") for p in parts[name]]
    usable.sort(key=lambda p: (p[0].timestamp, p[0].revision_id))
    matrix = pipeline.extract_matrix(usable, store)
    context.save_state(store, args.state_out)
    pipeline.save_matrix(args.features_out, matrix, store.schema.hash_hex())
    print(f"state -> {args.state_out} ({len(store.schema)} slots); "
          f"features -> {args.features_out} ({matrix['X'].shape[0]} rows, "
          f"{len(parts['excluded'])} excluded)")
    return 0


def _range_mask(matrix, split, name):
    ts = matrix["ts"]
    if name == "all":
        return np.ones(len(ts), dtype=bool)
    ranges = {
        "train": [split.range_of("train")],
        "valid": [split.range_of("valid")],
        "test": [split.range_of("test")],
        "train+valid": [split.range_of("train"), split.range_of("valid")],
    }[name]
    mask = np.zeros(len(ts), dtype=bool)
    for start, end in ranges:
        mask |= (ts >= int(start.timestamp())) & (ts < int(end.timestamp()))
    return mask


def cmd_train(args):
    store = context.load_state(args.state)
    _check_schema_flag(args, store)
    matrix = pipeline.load_matrix(args.features, store.schema.hash_hex())
    truth = ingest.read_truth_csv(args.truth)
    mask = _range_mask(matrix, _split_from(args), args.range)
    ids = matrix["ids"][mask]
    y = np.array([truth[int(i)] for i in ids], dtype=np.float64)
    params = GBMParams(max_depth=args.max_depth, rounds=args.rounds,
                       learning_rate=args.eta, l2_penalty=args.l2,
                       min_split_gain=args.gamma)
    model = gbm.train(matrix["X"][mask], y, params,
                      schema_hash=store.schema.hash_hex())
    gbm.save_model(model, args.model_out)
    print(f"trained {len(model)} trees (depth {params.max_depth}) on "
          f"{int(mask.sum())} rows [{args.range}] -> {args.model_out}")
    return 0


def _write_scores(path, ids, scores):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("revisionId,score\n")
        for rid, s in zip(ids, scores):
            fh.write(f"{int(rid)},{s:.9f}\n")


def cmd_score(args):
    if not args.features and not (args.xml and args.meta):
        raise VandalScoreError("score needs either --features or --xml with --meta")
    store = context.load_state(args.state)
    _check_schema_flag(args, store)
    model = gbm.load_model(args.model)
    if model.schema_hash and model.schema_hash != store.schema.hash_hex():
        raise SchemaMismatch("model was trained against a different feature schema")
    if args.features:
        matrix = pipeline.load_matrix(args.features, store.schema.hash_hex())
    else:
        pairs = ingest.stream_corpus(args.xml, args.meta)
        matrix = pipeline.extract_matrix(pairs, store)
    raw = gbm.predict_many(model, matrix["X"])
    scores = raw if args.no_sil else pipeline.apply_sil(
        raw, matrix["sessions"], matrix["creations"])
    mask = _range_mask(matrix, _split_from(args), args.range)
    _write_scores(args.out, matrix["ids"][mask], scores[mask])
    print(f"scored {int(mask.sum())} revisions [{args.range}] -> {args.out}")
    return 0


def _read_scores(path):
    ids, scores = [], []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "revisionId,score":
            raise VandalScoreError(f"bad scores header: {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rid, s = line.split(",")
            ids.append(int(rid))
            scores.append(float(s))
    return ids, scores


def cmd_evaluate(args):
    ids, scores = _read_scores(args.scores)
    truth = ingest.read_truth_csv(args.truth)
    paired = [(s, truth[i]) for s, i in zip(scores, ids) if i in truth]
    if not paired:
        print("no overlap between scores and truth", file=sys.stderr)
        return 2
    ss = [p[0] for p in paired]
    ll = [p[1] for p in paired]
    roc = metrics.roc_auc(ss, ll)
    pr = metrics.pr_auc(ss, ll)
    doc = {"rocAuc": roc, "prAuc": pr, "count": len(paired),
           "positives": sum(ll), "negatives": len(ll) - sum(ll)}
    if args.json:
        print(json.dumps(doc))
    else:
        print(f"ROC-AUC {roc:.5f}  PR-AUC {pr:.5f}  "
              f"({doc['positives']} positive / {doc['count']} scored)")
    return 0


def cmd_split(args):
    pairs = ingest.stream_corpus(args.xml, args.meta) if args.meta else \
        ingest.stream_corpus(args.xml, {})
    parts = timesplit.split_corpus(pairs, _split_from(args))
    for name in ("train", "valid", "test", "excluded"):
        print(f"{name:9s} {len(parts[name]):>10d}")
    return 0


def cmd_serve_client(args):
    from .service import run_client

    scorer = _load_scorer(args)
    summary = run_client(args.host, args.port, args.token, scorer)
    print(json.dumps(summary))
    return 0 if summary.get("note") is None else 1


def cmd_simulate_server(args):
    from .service import run_simulator_server

    report = run_simulator_server(
        args.xml, args.meta, truth_path=args.truth, host=args.host,
        port=args.port, window=args.window, token=args.token)
    print(json.dumps(report.summary()))
    return 0 if report.error is None else 1


def cmd_serve_http(args):
    from .service import make_http_server

    scorer = _load_scorer(args)
    server = make_http_server(args.host, args.port, scorer)
    print(f"scoring endpoint: POST http://{server.server_address[0]}:"
          f"{server.server_address[1]}/score")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_benchmark(args):
    scorer = _load_scorer(args)
    result = pipeline.benchmark_throughput(
        args.xml, args.meta, scorer, limit=args.limit)
    print(f"{result['scored']} revisions in {result['seconds']:.2f}s = "
          f"{result['rate']:.0f} revisions/second")
    return 0


# ---------------------------------------------------------------- parser

def build_parser():
    parser = argparse.ArgumentParser(
        prog="vandalscore",
        description="Streaming vandalism scorer for Wikidata-style revision feeds")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=50000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--vandalism-rate", type=float, default=0.01)
    p.add_argument("--mean-session-len", type=float, default=2.2)
    p.add_argument("--marker-rate", type=float, default=0.80)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="build state + feature matrix from a corpus")
    p.add_argument("--xml", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--state-out", required=True)
    p.add_argument("--features-out", required=True)
    p.add_argument("--privileged")
    p.add_argument("--bots")
    _add_split_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train the boosted-tree model")
    p.add_argument("--features", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--schema")
    p.add_argument("--model-out", required=True)
    p.add_argument("--rounds", type=int, default=200)
    p.add_argument("--max-depth", type=int, default=7)
    p.add_argument("--eta", type=float, default=0.3)
    p.add_argument("--l2", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--range", choices=("train", "train+valid", "all"), default="train")
    _add_split_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score a corpus (batch mode)")
    p.add_argument("--model", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--schema")
    p.add_argument("--features")
    p.add_argument("--xml")
    p.add_argument("--meta")
    p.add_argument("--out", required=True)
    p.add_argument("--range", choices=("all", "train", "valid", "test", "train+valid"),
                   default="all")
    p.add_argument("--no-sil", action="store_true",
                   help="emit raw model probabilities without session smoothing")
    _add_split_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="ROC/PR metrics of a scores file")
    p.add_argument("--scores", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("split", help="print time-split partition counts")
    p.add_argument("--xml", required=True)
    p.add_argument("--meta")
    _add_split_flags(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("serve-client", help="run the scoring client against a server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--token", default="")
    p.add_argument("--model", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--schema")
    p.set_defaults(func=cmd_serve_client)

    p = sub.add_parser("simulate-server", help="replay a corpus over the window protocol")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--xml", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--truth")
    p.add_argument("--token")
    p.add_argument("--window", type=int, default=16)
    p.set_defaults(func=cmd_simulate_server)

    p = sub.add_parser("serve-http", help="HTTP scoring endpoint (POST /score)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--model", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--schema")
    p.set_defaults(func=cmd_serve_http)

    p = sub.add_parser("benchmark", help="single-threaded scoring throughput")
    p.add_argument("--xml", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--schema")
    p.add_argument("--limit", type=int, default=None)
    p.set_defaults(func=cmd_benchmark)

    return parser


def main(argv=None):
    logging.basicConfig(level=os.environ.get("VANDALSCORE_LOGLEVEL", "WARNING"))
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VandalScoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
