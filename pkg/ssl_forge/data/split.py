"""
Labeled / unlabeled splitting for experiments.
"""
from dataclasses import dataclass
from typing import Dict

import numpy as np

from ssl_forge.core.dataset import SSLDataset, as_feature_matrix, frozen_array
from ssl_forge.core.exceptions import DataValidationError
from ssl_forge.core.rng import make_stream


@dataclass(frozen=True)
class LabeledSplit:
    """An SSLDataset plus the held-back labels of its unlabeled rows."""
    dataset: SSLDataset
    unlabeled_y: np.ndarray
    labeled_index: np.ndarray
    unlabeled_index: np.ndarray

    def to_dict(self) -> Dict[str, int]:
        return {"n_labeled": len(self.labeled_index), "n_unlabeled": len(self.unlabeled_index)}


def stratified_counts(class_sizes: np.ndarray, n_labeled: int) -> np.ndarray:
    """
    Per-class labeled counts summing to n_labeled, at least one per class.

    Proportional quotas are floored, lifted to one, and the remainder is
    handed out by largest fractional part (ties to the lower class index).
    """
    n = class_sizes.sum()
    quotas = n_labeled * class_sizes / n
    counts = np.maximum(np.floor(quotas).astype(np.int64), 1)
    counts = np.minimum(counts, class_sizes)
    while counts.sum() > n_labeled:
        excess = counts - quotas
        excess[counts <= 1] = -np.inf
        counts[int(np.argmax(excess))] -= 1
    while counts.sum() < n_labeled:
        deficit = quotas - counts
        deficit[counts >= class_sizes] = -np.inf
        counts[int(np.argmax(deficit))] += 1
    return counts


def split_labeled_unlabeled(X, y, n_labeled: int, stratified: bool = True, seed: int = 0) -> LabeledSplit:
    """Choose n_labeled rows to keep their labels; the rest become unlabeled_X."""
    X = as_feature_matrix(X, "X")
    y = np.asarray(y)
    n = X.shape[0]
    if y.shape[0] != n:
        raise DataValidationError(f"label count {y.shape[0]} does not match {n} rows")
    if not 1 <= n_labeled <= n:
        raise DataValidationError(f"n_labeled must lie in [1, {n}], got {n_labeled}")
    stream = make_stream(seed)

    if stratified:
        classes, encoded = np.unique(y, return_inverse=True)
        if n_labeled < len(classes):
            raise DataValidationError(
                f"infeasible stratification: n_labeled={n_labeled} is below the class count {len(classes)}"
            )
        counts = stratified_counts(np.bincount(encoded, minlength=len(classes)), n_labeled)
        chosen = []
        for c, count in enumerate(counts):
            members = np.flatnonzero(encoded == c)
            chosen.append(members[stream.permutation(len(members))[:count]])
        labeled_index = np.sort(np.concatenate(chosen))
    else:
        labeled_index = np.sort(stream.permutation(n)[:n_labeled])

    mask = np.zeros(n, dtype=bool)
    mask[labeled_index] = True
    unlabeled_index = np.flatnonzero(~mask)
    dataset = SSLDataset(
        X=frozen_array(X[labeled_index]),
        y=frozen_array(y[labeled_index]),
        unlabeled_X=frozen_array(X[unlabeled_index]),
    )
    return LabeledSplit(
        dataset=dataset,
        unlabeled_y=frozen_array(y[unlabeled_index]),
        labeled_index=frozen_array(labeled_index),
        unlabeled_index=frozen_array(unlabeled_index),
    )
