"""Backend fixture for the UI round-trip test.

`serve`  : start the annotation service on an ephemeral port against the
           reference pool, print PORT/SEEDS lines, and print a FINAL line
           with the committed membership sets once the run ends.
`replay` : rebuild the identical engine and feed it the recorded decision
           log instead of live posts; print the same FINAL line.
"""

import json
import sys

import numpy as np

from asm.core import Hyperparameters
from asm.engine import EngineConfig, MiningEngine, Mode, Strategy
from asm.learner import SgdConfig
from asm.oracle import initial_annotations, make_synthetic_pool
from asm.service import AnnotationService, ReplayAnnotationSource

SEED = 17
BUDGET = 12


def build_engine():
    data = make_synthetic_pool(n=2000, m=4, d=2, undefined_fraction=0.2,
                               separation=4.0, tangential_spread=4.0,
                               class_priors=[0.5, 0.25, 0.15, 0.10],
                               seed=SEED)
    pool = data.pool
    rng = np.random.default_rng(SEED)
    seed_ids = rng.choice(len(pool), size=len(pool) // 10, replace=False)
    seeds = initial_annotations(pool, 4, seed_ids)
    engine = MiningEngine(
        pool, Hyperparameters(m=4, seed=SEED, al_batch_size=30),
        Strategy(mode=Mode.ASM, annotation_budget=BUDGET),
        EngineConfig(minibatches_per_round=10, max_rounds=3,
                     warmup_iterations=5,
                     sgd=SgdConfig(learning_rate=0.05, batch_size=32)),
        seeds,
        val_features=data.val_features, val_truth=data.val_truth,
        test_features=data.test_features, test_truth=data.test_truth)
    return engine, seeds


def final_line(engine):
    payload = {
        "annotations": {str(k): v
                        for k, v in sorted(engine.curriculum.annotations.items())},
        "rejections": sorted(engine.curriculum.rejections),
    }
    print("FINAL " + json.dumps(payload, sort_keys=True), flush=True)


def serve(log_path):
    engine, seeds = build_engine()
    service = AnnotationService(engine, port=0, decision_log=log_path,
                                queue_timeout=60.0)
    service.start()
    annotated = sum(1 for _, d in seeds if not d.is_reject)
    print(f"PORT {service.port}", flush=True)
    print(f"SEEDS {annotated} {len(seeds) - annotated}", flush=True)
    service.join_engine(timeout=180.0)
    final_line(engine)
    service.stop()


def replay(log_path):
    engine, _ = build_engine()
    engine.run(ReplayAnnotationSource.from_log(log_path))
    final_line(engine)


if __name__ == "__main__":
    command, log_path = sys.argv[1], sys.argv[2]
    if command == "serve":
        serve(log_path)
    elif command == "replay":
        replay(log_path)
    else:
        raise SystemExit(f"unknown command {command}")
