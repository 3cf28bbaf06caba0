import os
import warnings

# Allow the parallel acceptance criterion to request 4 workers even on
# smaller hosts; must be set before numba is first imported.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(4, os.cpu_count() or 1)))

import pytest

from hoaxrank import kernels

warnings.filterwarnings("ignore", message=".*TBB.*")


@pytest.fixture(scope="session", autouse=True)
def _jit_warmup():
    """Compile the hot kernels once so timed tests measure the algorithm."""
    kernels.warmup()
