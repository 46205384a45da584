#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure NumPy/Python fallback.

Times the three hot kernels (tree growing, ensemble margins, windowed indel
distance) and the end-to-end scoring path under each backend, and checks
that both backends produce the same trees and scores.

Usage: python benchmarks/compare_backends.py [--n 20000] [--rounds 40]
"""

import argparse
import random
import sys
import tempfile
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import numpy as np

from vandalscore import _accel, context, gbm, ingest, pipeline, synth, timesplit
from vandalscore.gbm import GBMParams


def timed(fn, repeat=1):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_kernels(backend, X, g, h, order, strings):
    _accel.set_backend(backend)
    t_tree, tree = timed(lambda: _accel.build_tree(X, g, h, order, 7, 1.0, 0.0, 1.0))
    feat, thr, left, right = tree
    starts = np.zeros(1, dtype=np.int64)
    t_pred, margins = timed(
        lambda: _accel.predict_margins(X, feat, thr, left, right, starts), repeat=3)

    def run_indel():
        total = 0
        for a, b in strings:
            total += _accel.min_window_indel(a, b) if len(a) <= len(b) \
                else _accel.min_window_indel(b, a)
        return total

    t_indel, checksum = timed(run_indel)
    return {"tree_s": t_tree, "predict_s": t_pred, "indel_s": t_indel,
            "tree": tree, "margins": margins, "indel_sum": checksum}


def bench_end_to_end(backend, paths, rounds):
    _accel.set_backend(backend)
    pairs = ingest.stream_corpus(paths["xml"], paths["meta"])
    parts = timesplit.split_corpus(pairs)
    store = context.build_state_store(parts["train"])
    mat = pipeline.extract_matrix(pairs, store)
    truth = ingest.read_truth_csv(paths["truth"])
    y = np.array([truth[int(i)] for i in mat["ids"]], dtype=float)
    t_train, model = timed(lambda: gbm.train(
        mat["X"], y, GBMParams(max_depth=7, rounds=rounds),
        schema_hash=store.schema.hash_hex()))
    scorer = pipeline.RevisionScorer(model, store)
    bench = pipeline.benchmark_throughput(paths["xml"], paths["meta"], scorer,
                                          limit=min(2000, len(pairs) - 200))
    return {"train_s": t_train, "rate": bench["rate"], "model": model, "X": mat["X"]}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20000, help="synthetic corpus size")
    ap.add_argument("--rounds", type=int, default=40)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    backends = _accel.available_backends()
    if len(backends) < 2:
        print(f"only {backends} available; build the extension first "
              f"(python setup.py build_ext --inplace)")

    rng = np.random.default_rng(args.seed)
    n, f = 20000, 40
    X = np.ascontiguousarray(rng.normal(size=(n, f)))
    y = (X[:, 0] + 0.5 * X[:, 1] + rng.normal(scale=0.5, size=n) > 0).astype(float)
    p = np.full(n, 0.5)
    g = p - y
    h = p * (1 - p)
    order = _accel.presort_columns(X)
    sr = random.Random(args.seed)
    strings = [("".join(sr.choice("abcdef ") for _ in range(sr.randint(5, 30))),
                "".join(sr.choice("abcdef ") for _ in range(sr.randint(5, 60))))
               for _ in range(2000)]

    with tempfile.TemporaryDirectory() as tmp:
        paths = {"xml": f"{tmp}/c.xml", "meta": f"{tmp}/m.csv", "truth": f"{tmp}/t.csv"}
        synth.generate(synth.SynthConfig(n=args.n, seed=args.seed, vandalism_rate=0.03),
                       paths["xml"], paths["meta"], paths["truth"])

        results = {}
        for backend in backends:
            kern = bench_kernels(backend, X, g, h, order, strings)
            full = bench_end_to_end(backend, paths, args.rounds)
            results[backend] = {**kern, **full}
            print(f"[{backend:8s}] tree {kern['tree_s']*1e3:8.1f} ms | "
                  f"margins {kern['predict_s']*1e3:7.1f} ms | "
                  f"indel {kern['indel_s']*1e3:7.1f} ms | "
                  f"train({args.rounds}r) {full['train_s']:6.1f} s | "
                  f"serve {full['rate']:7.0f} rev/s")

        if len(results) == 2:
            a, b = (results[name] for name in backends)
            same_trees = all((x == y).all() for x, y in zip(a["tree"], b["tree"]))
            dm = float(np.max(np.abs(a["margins"] - b["margins"])))
            da = a["indel_sum"] == b["indel_sum"]
            pa = gbm.predict_many(a["model"], a["X"])
            pb = gbm.predict_many(b["model"], b["X"])
            dp = float(np.max(np.abs(pa - pb)))
            print(f"agreement: trees identical={same_trees}, "
                  f"max |margin delta|={dm:.3e}, indel equal={da}, "
                  f"max |model prediction delta|={dp:.3e}")
            speedup = results["pure"]["train_s"] / results["compiled"]["train_s"]
            print(f"compiled core trains {speedup:.1f}x faster than the fallback")
    return 0


if __name__ == "__main__":
    sys.exit(main())
