from functools import lru_cache

import numpy as np
import pytest

from qsnm.expr import Evaluator
from qsnm.manifold import E1_SPEC, ManifoldSpec, QSManifold, RandomManifoldConfig, random_manifold


def rel_err(lhs, rhs) -> float:
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    diff = np.max(np.abs(lhs - rhs))
    return float(diff / (1.0 + max(np.abs(lhs).max(), np.abs(rhs).max())))


def values(field, points):
    """Evaluate a TensorField (or anything with .field) at an (N, n) array of points."""
    f = getattr(field, "field", field)
    return f.evaluate(Evaluator(np.atleast_2d(points)))


def fd_partial(func, point, h=1e-5):
    """Central differences of an array-valued func; result [i, ...] = d_i func."""
    point = np.asarray(point, dtype=float)
    out = []
    for i in range(point.size):
        e = np.zeros_like(point)
        e[i] = h
        out.append((func(point + e) - func(point - e)) / (2 * h))
    return np.array(out)


@lru_cache(maxsize=None)
def random_qs(seed: int, dimension: int, **kw) -> QSManifold:
    return QSManifold.from_spec(random_manifold(RandomManifoldConfig(seed=seed, dimension=dimension, **kw)))


@pytest.fixture(scope="session")
def e1() -> QSManifold:
    return QSManifold.from_spec(E1_SPEC)


@pytest.fixture(scope="session")
def e1_path(tmp_path_factory):
    p = tmp_path_factory.mktemp("specs") / "e1.json"
    p.write_text(E1_SPEC.to_json())
    return p


@pytest.fixture(scope="session")
def m3() -> QSManifold:
    return random_qs(7, 3)


@pytest.fixture(scope="session")
def pts3():
    return np.random.default_rng(11).uniform(-0.8, 0.8, size=(4, 3))


def asymmetric_v_spec() -> ManifoldSpec:
    """3D manifold with non-constant A and pi, so V is not symmetric in X, Y."""
    return ManifoldSpec(
        3, ["x", "y", "z"],
        [["1 + 0.1*x^2", "0.5*z + 0.2", "0.3*x*y"],
         ["-0.5*z - 0.2", "1 + 0.1*y*z", "sin(x) + 0.4"],
         ["-0.3*x*y", "-sin(x) - 0.4", "1"]],
        ["1 + y", "x*z", "0.5 - x"],
    )
