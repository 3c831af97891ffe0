"""Certified finishing step for projections onto ``{p : A p <= b}``.

Dykstra's algorithm crawls when facet hyperplanes meet at a small angle. Its
last iterate still tends to reveal the active rows; projecting exactly onto
their affine hull and checking the optimality conditions turns that guess
into the exact answer, or into a refusal.
"""

import numpy as np

from . import _kernels

ACTIVE_THRESHOLDS = (1e-10, 1e-8, 1e-6, 1e-4, 1e-2)
# a run needing more cycles than this is in the slow regime, where the
# per-cycle displacement understates the distance to the limit
SLOW_CYCLES = 50


def _certify(A, b, x, active, feas_tol, mult_tol, max_iter):
    if active.size == 0:
        p = x.copy()
    else:
        As = A[active]
        # least-norm correction straight from As (not As As^T, which squares
        # the conditioning); exact at a vertex
        delta, *_ = np.linalg.lstsq(As, As @ x - b[active], rcond=None)
        p = x - delta
    if np.max(A @ p - b) > feas_tol:
        return None
    d = x - p
    nd = float(np.linalg.norm(d))
    if nd <= feas_tol:
        return p
    if active.size == 0:
        return None
    # x - p must be a nonnegative combination of the active normals
    if np.linalg.matrix_rank(As) == active.size:
        # independent rows: the multipliers are unique, a sign check decides
        mult, *_ = np.linalg.lstsq(As.T, d, rcond=None)
        ok = np.min(mult) >= -mult_tol * max(1.0, float(np.max(np.abs(mult))))
        return p if ok and np.linalg.norm(As.T @ mult - d) <= mult_tol * max(1.0, nd) else None
    gens = np.ascontiguousarray(As)
    lipschitz = float(np.linalg.eigvalsh(gens @ gens.T)[-1])
    res_tol = mult_tol * max(1.0, nd)
    _, best, _, _ = _kernels.nnls(gens, d, lipschitz, res_tol, 1e-3 * res_tol, max_iter)
    return p if best <= res_tol else None


def polish_projection(A, b, x, z, tol: float = 1e-12, mult_tol: float = 1e-10, max_iter: int = 10_000):
    """Exact projection of ``x`` onto ``{p : A p <= b}`` guided by an approximate point ``z``.

    Active-set guesses are the rows within a growing slack threshold of
    ``z``, then the ``k`` tightest rows for ``k = 1..n``. A candidate is
    returned only if it is feasible to ``tol`` (relative) and ``x - p`` lies
    in the conic hull of the active rows, which certifies it as the
    projection. Returns None when no guess yields a certified point.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    scale = max(1.0, float(np.linalg.norm(x)), float(np.max(np.abs(b), initial=0.0)))
    feas_tol = max(tol, 1e-13) * scale
    slack = b - A @ np.asarray(z, dtype=float)
    order = np.argsort(slack, kind="stable")
    guesses = [np.flatnonzero(slack <= delta * scale) for delta in ACTIVE_THRESHOLDS]
    guesses += [np.sort(order[:k]) for k in range(1, min(A.shape[0], x.shape[0]) + 1)]
    tried = set()
    for active in guesses:
        key = tuple(active)
        if key in tried:
            continue
        tried.add(key)
        p = _certify(A, b, x, active, feas_tol, mult_tol, max_iter)
        if p is not None:
            return p
    return None
