"""Self-labeling a batch: the constrained label search and the ambiguity rule.

Admissible labels have at most one positive class, so only m+1 candidates
exist.  The winner minimizes the weight-scaled log loss; samples claimed
by two or more heads are ambiguous and go to the annotation queue instead.

Run:  python demos/02_pseudo_labeling.py
"""

import numpy as np

from asm import assign_labels, detect_ambiguous, enumerate_label_candidates

print("label candidates for m=3:")
for y in enumerate_label_candidates(3):
    print("  ", y)
print()

weights = np.array([0.5, 0.5, 0.5])

cases = [
    ("one confident head", np.array([0.95, 0.02, 0.03])),
    ("nothing confident -> undefined", np.array([0.10, 0.20, 0.10])),
    ("two heads claim it -> ambiguous", np.array([0.90, 0.80, 0.10])),
]

for label, phi in cases:
    if detect_ambiguous(phi):
        print(f"{label}: phi={phi} -> queued for a human")
        continue
    y = assign_labels(phi, weights, u=0)
    print(f"{label}: phi={phi} -> pseudo-label {y}")

# an annotation-flagged sample is never self-labeled, whatever it predicts
print("\nflagged sample (u=1):",
      assign_labels(np.array([0.99, 0.01, 0.01]), weights, u=1))

# zero weight on every class means there is nothing to train, so skip
print("all-zero weights:",
      assign_labels(np.array([0.99, 0.01, 0.01]), np.zeros(3), u=0))
