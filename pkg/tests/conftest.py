import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp


def random_distribution(rng, m, floor=0.01):
    p = rng.dirichlet(np.ones(m)) + floor
    return p / p.sum()


def random_pair(rng, m, floor=0.01):
    while True:
        p1, p2 = random_distribution(rng, m, floor), random_distribution(rng, m, floor)
        if np.max(np.abs(p1 - p2)) > 1e-3:
            return p1, p2


def random_mechanism(rng, m, sparsity=0.0):
    w = rng.dirichlet(np.ones(m), size=m)
    if sparsity:
        w = np.where(rng.random((m, m)) < sparsity, 0.0, w)
        w[np.arange(m), rng.integers(0, m, size=m)] += 1e-3
    return w / w.sum(axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def _normalise(x):
    return x / x.sum()


@st.composite
def distributions(draw, m):
    raw = draw(hnp.arrays(float, m, elements=st.floats(0.02, 1.0)))
    return _normalise(raw)


@st.composite
def mechanisms(draw, m):
    raw = draw(hnp.arrays(float, (m, m), elements=st.floats(0.0, 1.0)))
    raw[:, 0] += 1e-3
    return raw / raw.sum(axis=1, keepdims=True)


@st.composite
def instances(draw, sizes=(2, 3, 4, 5)):
    m = draw(st.sampled_from(sizes))
    return m, draw(distributions(m)), draw(distributions(m)), draw(mechanisms(m))
