"""Shared fixtures: the Wine dataset and seeded synthetic mixtures."""
from pathlib import Path

import numpy as np
import pytest

from ulca.dataio import load_csv_dataset
from ulca.group_stats import Dataset, standardize

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def wine_raw() -> Dataset:
    return load_csv_dataset(DATA_DIR / "wine.csv", label_col="cultivar")


@pytest.fixture(scope="session")
def wine(wine_raw) -> Dataset:
    """Wine with z-scored attributes, the form the walkthrough uses."""
    return standardize(wine_raw)


def make_mixture(n: int, d: int, c: int, seed: int) -> Dataset:
    """Anisotropic Gaussian blobs, one per group, labels 1..c."""
    rng = np.random.default_rng(seed)
    sizes = [n // c + (1 if j < n % c else 0) for j in range(c)]
    rows, labels = [], []
    for j, size in enumerate(sizes, start=1):
        mean = rng.normal(scale=2.0, size=d)
        Q = np.linalg.qr(rng.standard_normal((d, d)))[0]
        A = Q * rng.uniform(0.5, 2.0, size=d)
        rows.append(rng.standard_normal((size, d)) @ A.T + mean)
        labels.append(np.full(size, j))
    return Dataset(X=np.vstack(rows), y=np.concatenate(labels), n_groups=c)


@pytest.fixture
def mixture3() -> Dataset:
    return make_mixture(n=300, d=6, c=3, seed=11)


@pytest.fixture
def mixture2() -> Dataset:
    return make_mixture(n=200, d=5, c=2, seed=3)
