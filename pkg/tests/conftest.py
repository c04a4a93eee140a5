import numpy as np
import pytest

from dagpolicy import LABELS, Dag, ModelParams
from dagpolicy.bayesnet import _SIGNAL_BLOCK
from dagpolicy.linalg_gauss import GaussianJoint


@pytest.fixture
def params():
    return ModelParams()


def random_joint(rng, labels=("theta", "a", "t", "e", "pi", "y"), rank=None):
    k = len(labels)
    rank = k if rank is None else rank
    root = rng.normal(size=(k, rank))
    return GaussianJoint(tuple(labels), rng.normal(size=k), root @ root.T + (1e-3 * np.eye(k) if rank == k else 0))


def embedded_dag(pi_parents):
    """The true DAG with the causes of pi replaced by ``pi_parents``."""
    edges = _SIGNAL_BLOCK + [("pi", "y"), ("e", "y")] + [(p, "pi") for p in pi_parents]
    return Dag.from_edges(LABELS, edges)


def random_params(rng, signal=None):
    """Log-uniform variances on [1e-2, 1e2] and lambda uniform on [0.05, 1]."""
    ve, vh, vt = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), size=3))
    kw = {} if signal is None else {"signal": signal}
    return ModelParams(float(rng.uniform(0.05, 1.0)), float(ve), float(vh), float(vt), **kw)
