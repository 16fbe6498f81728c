"""Synthetic feature matrices with a known planted signal.

Used to validate the experiment harness without a live crawl: beacon rows
draw their URL digit count from {8..15} while normal rows stay in {0..5}, so
a single threshold separates the classes perfectly by construction, and the
remaining informative features are merely correlated.  The blocked-flag and
top-domain dummies are generated independently of the label on both sides;
a learner restricted to those columns can do no better than chance.
"""

from __future__ import annotations

import numpy as np

from .classifier import Dataset
from .features import FEATURE_COLUMNS, FeatureVector

__all__ = ["planted_signal_vectors", "planted_signal_dataset", "vectors_to_dataset"]

BLCK_DTOP_COLUMNS = ("blck", "dtop_1", "dtop_2", "dtop_3", "dtop_4", "dtop_5")


def planted_signal_vectors(n_beacons: int = 235, n_normal: int = 30337,
                           seed: int = 7) -> list[FeatureVector]:
    rng = np.random.default_rng(seed)
    rows: list[FeatureVector] = []
    for label in (True, False):
        count = n_beacons if label else n_normal
        for _ in range(count):
            if label:
                unum = int(rng.integers(8, 16))
                qurl = rng.random() < 0.95
                corg = rng.random() < 0.8
                cook = rng.random() < 0.9
                noch = rng.random() < 0.85
                etag = rng.random() < 0.1
                aalt = rng.random() < 0.2
                asty = rng.random() < 0.5
                mage = 0 if rng.random() < 0.7 else -1
                mime = rng.choice(["gif", "png", "svg"], p=[0.7, 0.2, 0.1])
            else:
                unum = int(rng.integers(0, 6))
                qurl = rng.random() < 0.4
                corg = rng.random() < 0.5
                cook = rng.random() < 0.1
                noch = rng.random() < 0.15
                etag = rng.random() < 0.7
                aalt = rng.random() < 0.7
                asty = rng.random() < 0.3
                mage = int(rng.integers(60, 86400)) if rng.random() < 0.8 else -1
                mime = rng.choice(["jpeg", "png", "gif", "other"],
                                  p=[0.5, 0.25, 0.2, 0.05])
            qdom = qurl and rng.random() < (0.6 if label else 0.1)
            blck = rng.random() < 0.5
            dtop = [False] * 5
            if rng.random() < 0.5:
                dtop[int(rng.integers(0, 5))] = True
            rows.append(FeatureVector(
                qurl=qurl, qdom=qdom, unum=unum, corg=corg, blck=blck,
                aalt=aalt, asty=asty, etag=etag, cook=cook, noch=noch,
                mage=mage,
                mime_dummies=tuple(mime == c for c in
                                   ("gif", "jpeg", "png", "svg", "other")),
                dtop_dummies=tuple(dtop),
                label=label,
            ))
    return rows


def vectors_to_dataset(vectors: list[FeatureVector]) -> Dataset:
    matrix = np.asarray([v.as_row() for v in vectors], dtype=np.float64)
    return Dataset(matrix[:, :-1], matrix[:, -1].astype(bool), FEATURE_COLUMNS)


def planted_signal_dataset(n_beacons: int = 235, n_normal: int = 30337,
                           seed: int = 7) -> Dataset:
    return vectors_to_dataset(planted_signal_vectors(n_beacons, n_normal, seed))
