"""
Demo script: one estimator per algorithm family on generated two-moons data.
"""
import logging

import numpy as np

from ssl_forge.core.exceptions import SSLForgeError
from ssl_forge.core.registry import estimator_fit
from ssl_forge.data.generators import generate
from ssl_forge.data.split import split_labeled_unlabeled
from ssl_forge.evaluation.metrics import accuracy
from ssl_forge.settings import configure_logging, load_environment


logger = logging.getLogger(__name__)

# (algorithm, params) per family
DEMO_ALGORITHMS = [
    ("knn", {"k": 1}),
    ("label_spreading", {"alpha": 0.99, "k": 7}),
    ("label_propagation", {"k": 7, "mode": "connectivity"}),
    ("ssgmm", {}),
    ("tsvm", {}),
    ("co_training", {}),
    ("tri_training", {}),
    ("assemble", {"T": 10}),
    ("constrained_seed_kmeans", {}),
    ("mean_teacher", {"epochs": 30, "hidden": [16]}),
]


def main():
    """Fit every demo algorithm on the same split and log an accuracy table."""
    load_environment()
    configure_logging()
    logging.getLogger("ssl_forge").setLevel(logging.WARNING)

    data = generate("two_moons", {"n": 200, "noise_sd": 0.05}, seed=0)
    split = split_labeled_unlabeled(data.X, data.y, n_labeled=10, stratified=True, seed=0)
    logger.info(f"two_moons: {split.dataset.n_labeled} labeled, {split.dataset.n_unlabeled} unlabeled rows")

    rows = []
    for name, params in DEMO_ALGORITHMS:
        try:
            model = estimator_fit(name, params, split.dataset, seed=0)
            score = accuracy(split.unlabeled_y, model.predict(split.dataset.unlabeled_X).labels)
        except SSLForgeError as e:
            logger.error(f"{name} failed: {e}")
            score = np.nan
        rows.append((name, score))

    width = max(len(name) for name, _ in rows)
    logger.info(f"{'algorithm'.ljust(width)}  accuracy")
    for name, score in rows:
        logger.info(f"{name.ljust(width)}  {score:.4f}")


if __name__ == "__main__":
    main()
