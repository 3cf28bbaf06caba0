"""Hot numeric kernels for the propagation phases.

Two interchangeable backends compute the user and item phases over CSR
adjacency:

* ``numba`` (default when importable): ``@njit(parallel=True)`` loops over
  nodes. Each node accumulates only its own edge slice, so results are
  bit-identical for any thread count.
* ``numpy``: vectorized ``bincount`` segment sums over the same CSR-ordered
  edge arrays. Per-bin accumulation follows array position order, which is
  the CSR within-node order, so this path is bit-identical to the numba one.

Select with the ``HOAXRANK_BACKEND`` environment variable (``numba`` or
``numpy``); ``benchmarks/bench_fixpoint.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

ENV_BACKEND = "HOAXRANK_BACKEND"

try:
    import numba
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
    HAS_NUMBA = False


def active_backend() -> str:
    """Resolve the backend name from the environment, defaulting to numba."""
    forced = os.environ.get(ENV_BACKEND, "").strip().lower()
    if forced in ("numba", "numpy"):
        if forced == "numba" and not HAS_NUMBA:
            raise RuntimeError("HOAXRANK_BACKEND=numba but numba is not importable")
        return forced
    if forced:
        raise RuntimeError(f"unrecognized {ENV_BACKEND}={forced!r} (use numba or numpy)")
    return "numba" if HAS_NUMBA else "numpy"


def set_threads(n: int) -> None:
    """Cap engine parallelism; n = 1 gives a sequential reference run.

    Requests above the process-wide numba maximum (NUMBA_NUM_THREADS,
    fixed at interpreter start) are clamped rather than rejected.
    """
    if HAS_NUMBA:
        limit = numba.config.NUMBA_NUM_THREADS
        numba.set_num_threads(min(max(1, int(n)), limit))


def max_threads() -> int:
    return numba.config.NUMBA_NUM_THREADS if HAS_NUMBA else 1


# ----------------------------------------------------------------------
# numpy backend
# ----------------------------------------------------------------------


def _phase_numpy(indptr, edge_other, edge_pol, edge_owner, other_q, c, alpha, beta, q, skip):
    """One half-iteration: recompute alpha/beta/q of the owner side.

    skip is an int8 mask of owner rows to leave untouched (seed items), or
    None when every row is recomputed (sources).
    """
    n = indptr.size - 1
    x = edge_pol * other_q[edge_other]
    pos = np.where(x > 0.0, x, 0.0)
    neg = np.where(x < 0.0, x, 0.0)
    a = c + np.bincount(edge_owner, weights=pos, minlength=n)
    b = c - np.bincount(edge_owner, weights=neg, minlength=n)
    new_q = (a - b) / (a + b)
    if skip is None:
        alpha[:] = a
        beta[:] = b
        q[:] = new_q
    else:
        keep = skip == 0
        alpha[keep] = a[keep]
        beta[keep] = b[keep]
        q[keep] = new_q[keep]


# ----------------------------------------------------------------------
# numba backend
# ----------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True, parallel=True)
    def _source_phase_numba(indptr, edge_item, edge_pol, item_q, c, alpha, beta, q):
        for s in prange(indptr.size - 1):
            pos = 0.0
            neg = 0.0
            for e in range(indptr[s], indptr[s + 1]):
                x = edge_pol[e] * item_q[edge_item[e]]
                if x > 0.0:
                    pos += x
                elif x < 0.0:
                    neg += x
            a = c + pos
            b = c - neg
            alpha[s] = a
            beta[s] = b
            q[s] = (a - b) / (a + b)

    @njit(cache=True, parallel=True)
    def _item_phase_numba(indptr, edge_src, edge_pol, src_q, seed, c, alpha, beta, q):
        for i in prange(indptr.size - 1):
            if seed[i] != 0:
                continue
            pos = 0.0
            neg = 0.0
            for e in range(indptr[i], indptr[i + 1]):
                x = edge_pol[e] * src_q[edge_src[e]]
                if x > 0.0:
                    pos += x
                elif x < 0.0:
                    neg += x
            a = c + pos
            b = c - neg
            alpha[i] = a
            beta[i] = b
            q[i] = (a - b) / (a + b)


# ----------------------------------------------------------------------
# dispatch
# ----------------------------------------------------------------------


def source_phase(view, item_q, c, alpha, beta, q, backend=None):
    """Recompute every source from current item reputations (in place)."""
    backend = backend or active_backend()
    if backend == "numba":
        _source_phase_numba(
            view.src_indptr, view.src_edge_item, view.src_edge_pol, item_q, c, alpha, beta, q
        )
    else:
        _phase_numpy(
            view.src_indptr,
            view.src_edge_item,
            view.src_edge_pol,
            view.src_edge_owner,
            item_q,
            c,
            alpha,
            beta,
            q,
            None,
        )


def item_phase(view, src_q, seed, c, alpha, beta, q, backend=None):
    """Recompute every non-seed item from current source reputations."""
    backend = backend or active_backend()
    if backend == "numba":
        _item_phase_numba(
            view.item_indptr, view.item_edge_src, view.item_edge_pol, src_q, seed, c, alpha, beta, q
        )
    else:
        _phase_numpy(
            view.item_indptr,
            view.item_edge_src,
            view.item_edge_pol,
            view.item_edge_owner,
            src_q,
            c,
            alpha,
            beta,
            q,
            seed,
        )


def warmup() -> None:
    """Trigger JIT compilation on tiny arrays so timed runs exclude it."""
    if not HAS_NUMBA or active_backend() != "numba":
        return
    indptr = np.array([0, 1], dtype=np.int64)
    other = np.zeros(1, dtype=np.int64)
    pol = np.ones(1, dtype=np.float64)
    qs = np.zeros(1, dtype=np.float64)
    a = np.zeros(1, dtype=np.float64)
    b = np.zeros(1, dtype=np.float64)
    out_q = np.zeros(1, dtype=np.float64)
    seed = np.zeros(1, dtype=np.int8)
    _source_phase_numba(indptr, other, pol, qs, 0.02, a, b, out_q)
    _item_phase_numba(indptr, other, pol, qs, seed, 0.02, a, b, out_q)
