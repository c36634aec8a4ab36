"""Driving the live annotation service from a script.

Starts the HTTP service on an ephemeral port, waits for the engine to
publish its first annotation queue, labels a couple of items through the
JSON API, and watches the counters move.  A browser UI does exactly this.

Run:  python demos/05_annotation_service.py
"""

import json
import time
import urllib.request

import numpy as np

from asm import (EngineConfig, Hyperparameters, MiningEngine, Mode, SgdConfig,
                 Strategy, initial_annotations, make_synthetic_pool)
from asm.service import AnnotationService


def get(base, path):
    with urllib.request.urlopen(base + path) as resp:
        return json.loads(resp.read())


def post(base, path, payload):
    req = urllib.request.Request(base + path,
                                 data=json.dumps(payload).encode(),
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read())


data = make_synthetic_pool(n=400, m=4, d=2, undefined_fraction=0.15,
                           separation=3.0, seed=3)
pool = data.pool
rng = np.random.default_rng(3)
seeds = initial_annotations(pool, 4, rng.choice(len(pool), 40, replace=False))
engine = MiningEngine(
    pool, Hyperparameters(m=4, seed=3, al_batch_size=20),
    Strategy(mode=Mode.ASM, annotation_budget=20),
    EngineConfig(minibatches_per_round=15, max_rounds=3,
                 warmup_iterations=60,
                 sgd=SgdConfig(learning_rate=0.05, batch_size=16)),
    seeds, val_features=data.val_features, val_truth=data.val_truth,
    test_features=data.test_features, test_truth=data.test_truth)

service = AnnotationService(engine, port=0, queue_timeout=10.0)
service.start()
base = f"http://127.0.0.1:{service.port}"
print("service listening at", base)

while get(base, "/api/status")["state"] != "AWAITING_LABELS":
    time.sleep(0.05)
print("status:", get(base, "/api/status"))

queue = get(base, "/api/queue?limit=5")
print(f"\nqueue has {len(queue)} items; most uncertain first:")
for item in queue[:3]:
    print(f"  sample {item['sample_id']}: total loss {item['total_loss']:.2f}"
          f" predictions {np.round(item['predictions'], 2)}")

first, second = queue[0]["sample_id"], queue[1]["sample_id"]
print("\nlabel one, reject one:")
print(" ", post(base, "/api/annotations",
                {"sample_id": first, "decision": {"label": 0}}))
print(" ", post(base, "/api/annotations",
                {"sample_id": second, "decision": "reject"}))
print("duplicate submit is idempotent:",
      post(base, "/api/annotations",
           {"sample_id": first, "decision": {"label": 0}})[1])
print("conflicting submit is refused:",
      post(base, "/api/annotations",
           {"sample_id": first, "decision": "reject"})[0])

time.sleep(0.3)
print("\ncounters after the commits:", get(base, "/api/status"))
service.stop()
