import numpy as np
import pytest

from hierfl import datasets, models


@pytest.fixture(scope="session")
def small_dataset():
    return datasets.generate_synthetic(num_classes=4, dim=5, samples_per_class=60, seed=11)


@pytest.fixture(scope="session")
def small_test_set():
    return datasets.generate_synthetic(num_classes=4, dim=5, samples_per_class=25, seed=11, split=1)


@pytest.fixture(scope="session")
def topology_8x2():
    return datasets.Topology(num_clients=8, num_edges=2)


@pytest.fixture(scope="session")
def logistic_spec(small_dataset):
    return models.ModelSpec(
        kind="logistic_regression",
        input_dim=small_dataset.dim,
        num_classes=small_dataset.num_classes,
    )


def finite_diff_gradient(f, w, h=1e-5):
    """Central-difference gradient oracle, independent of any analytic path."""
    g = np.zeros_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (f(w + e) - f(w - e)) / (2.0 * h)
    return g
