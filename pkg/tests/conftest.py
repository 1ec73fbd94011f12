import os

# On low-core boxes, multithreaded BLAS sync costs dwarf the useful work for
# the p~600 solves this suite runs; pin to one thread for stable timings.
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")

import numpy as np
import pytest

try:
    from threadpoolctl import threadpool_limits

    threadpool_limits(1)
except ImportError:
    pass

# keep acceptance CSVs in a stable place so the figures package can reuse them
RESULTS_DIR = os.path.join(os.path.dirname(__file__), "..", "results", "acceptance")


@pytest.fixture(scope="session")
def results_dir():
    path = os.path.abspath(RESULTS_DIR)
    os.makedirs(path, exist_ok=True)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
