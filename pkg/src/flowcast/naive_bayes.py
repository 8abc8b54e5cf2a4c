"""Incrementally trained Naive Bayes over mixed feature vectors.

One-hot (binary) slots use Laplace-smoothed Bernoulli counts; real-valued
slots use Gaussian likelihoods from running moments with a variance
floor.  Class priors are smoothed with the same constant, and all
accumulation happens in log space at prediction time.
"""

from __future__ import annotations

import math

import numpy as np

from .encoding import BINARY_SLOT, NUMERIC_SLOT

_VAR_FLOOR = 1e-9
_LOG_2PI = math.log(2.0 * math.pi)


class NaiveBayes:
    """Classifier mapping feature vectors to a distribution over labels."""

    def __init__(self, slot_kinds, alpha: float = 1.0):
        if alpha <= 0:
            raise ValueError("smoothing constant must be > 0")
        for kind in slot_kinds:
            if kind not in (BINARY_SLOT, NUMERIC_SLOT):
                raise ValueError(f"unknown slot kind {kind!r}")
        self.slot_kinds = tuple(slot_kinds)
        self.alpha = float(alpha)
        self._counts: dict = {}  # label -> instance count
        self._ones: dict = {}  # label -> per-slot count of value 1 (binary slots)
        self._sums: dict = {}  # label -> per-slot sum (numeric slots)
        self._sqsums: dict = {}  # label -> per-slot sum of squares

    @property
    def dimension(self) -> int:
        return len(self.slot_kinds)

    @property
    def classes(self) -> tuple:
        return tuple(self._counts)

    @property
    def total(self) -> int:
        return sum(self._counts.values())

    def update(self, x, label) -> None:
        """Fold one labelled instance into the statistics."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"expected {self.dimension} features, got {x.shape}")
        if label not in self._counts:
            self._counts[label] = 0
            self._ones[label] = np.zeros(self.dimension)
            self._sums[label] = np.zeros(self.dimension)
            self._sqsums[label] = np.zeros(self.dimension)
        self._counts[label] += 1
        for k, kind in enumerate(self.slot_kinds):
            if kind == BINARY_SLOT:
                if x[k] > 0.5:
                    self._ones[label][k] += 1.0
            else:
                self._sums[label][k] += x[k]
                self._sqsums[label][k] += x[k] * x[k]

    def _log_joint(self, x, label) -> float:
        n = self._counts[label]
        a = self.alpha
        score = math.log(n + a) - math.log(self.total + a * len(self._counts))
        ones = self._ones[label]
        sums = self._sums[label]
        sqsums = self._sqsums[label]
        for k, kind in enumerate(self.slot_kinds):
            if kind == BINARY_SLOT:
                matches = ones[k] if x[k] > 0.5 else n - ones[k]
                score += math.log(matches + a) - math.log(n + 2.0 * a)
            else:
                mean = sums[k] / n
                var = max(sqsums[k] / n - mean * mean, _VAR_FLOOR)
                score += -0.5 * (_LOG_2PI + math.log(var) + (x[k] - mean) ** 2 / var)
        return score

    def predict(self, x) -> dict:
        """Normalized posterior distribution over the known labels."""
        if not self._counts:
            raise ValueError("classifier has no training instances")
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"expected {self.dimension} features, got {x.shape}")
        scores = {label: self._log_joint(x, label) for label in self._counts}
        peak = max(scores.values())
        weights = {label: math.exp(s - peak) for label, s in scores.items()}
        total = sum(weights.values())
        return {label: w / total for label, w in weights.items()}

    def predict_class(self, x):
        """Maximum a-posteriori label."""
        dist = self.predict(x)
        return max(dist, key=lambda label: (dist[label], repr(label)))

    def to_dict(self, encode_label=repr) -> dict:
        """Exact statistics for reconstruction; labels via ``encode_label``."""
        return {
            "slot_kinds": list(self.slot_kinds),
            "alpha": self.alpha,
            "classes": [
                {
                    "label": encode_label(label),
                    "count": self._counts[label],
                    "ones": self._ones[label].tolist(),
                    "sums": self._sums[label].tolist(),
                    "sqsums": self._sqsums[label].tolist(),
                }
                for label in self._counts
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, decode_label=lambda s: s) -> "NaiveBayes":
        model = cls(tuple(data["slot_kinds"]), data["alpha"])
        for entry in data["classes"]:
            label = decode_label(entry["label"])
            model._counts[label] = int(entry["count"])
            model._ones[label] = np.asarray(entry["ones"], dtype=float)
            model._sums[label] = np.asarray(entry["sums"], dtype=float)
            model._sqsums[label] = np.asarray(entry["sqsums"], dtype=float)
        return model
