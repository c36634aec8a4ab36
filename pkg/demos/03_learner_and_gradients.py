"""The m-head model: forward pass, weighted objective, gradient check, SGD.

Run:  python demos/03_learner_and_gradients.py
"""

import numpy as np

from asm import SgdConfig, SgdOptimizer, init_mlp, predict, overall_accuracy
from asm.learner import objective_gradient, weighted_objective
from asm.oracle import make_synthetic_pool

rng = np.random.default_rng(0)
params = init_mlp(d=2, m=3, hidden=16, rng=rng)

x = rng.normal(size=2)
print("probabilities for one sample:", np.round(predict(params, x), 3))

# gradient of the weighted objective vs central finite differences
X = rng.normal(size=(6, 2))
Y = rng.choice([-1, 1], size=(6, 3))
W = rng.uniform(0, 1, size=(6, 3))
analytic = objective_gradient(params, X, Y, W)
key = "W1"
idx = (0, 0)
h = 1e-5
plus, minus = params.copy(), params.copy()
plus.arrays[key][idx] += h
minus.arrays[key][idx] -= h
fd = (weighted_objective(plus, X, Y, W)
      - weighted_objective(minus, X, Y, W)) / (2 * h)
print(f"d objective / d {key}{idx}: analytic {analytic[key][idx]:.8f}, "
      f"finite difference {fd:.8f}")

# train on a small fully labeled mixture and watch accuracy climb
data = make_synthetic_pool(n=600, m=3, d=2, undefined_fraction=0.0,
                           separation=4.0, seed=1)
pool = data.pool
labels = -np.ones((len(pool), 3), dtype=np.int8)
for i, t in enumerate(pool.hidden_truth):
    labels[i, t] = 1
mu, sd = pool.features.mean(0), pool.features.std(0)
X_train = (pool.features - mu) / sd
X_test = (data.test_features - mu) / sd

params = init_mlp(d=2, m=3, hidden=16, rng=np.random.default_rng(2))
opt = SgdOptimizer(SgdConfig(learning_rate=0.01, momentum=0.5))
order = np.random.default_rng(3)
for step in range(1, 1501):
    idx = order.choice(len(pool), size=32)
    params = opt.step(params, X_train[idx], labels[idx], np.ones((32, 3)))
    if step % 500 == 0:
        acc = overall_accuracy(params, X_test, data.test_truth)
        print(f"step {step}: test accuracy {acc:.3f}")
