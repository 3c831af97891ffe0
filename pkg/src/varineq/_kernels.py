"""Hot loops: Dykstra cycles over packed convex sets and projected-gradient NNLS.

Each kernel exists twice. The ``*_numba`` variants are written with scalar
loops and compiled with ``numba.njit``; the ``*_numpy`` variants use vector
operations and run without compilation. Set ``VARINEQ_DISABLE_NUMBA=1`` to
force the numpy path (numba is also skipped silently when not importable).

Sets are packed into flat arrays so the compiled loop never touches Python
objects::

    kinds[i]  0 = halfspace {<a, z> <= b}    vec1 = a,      scal = b
              1 = box [lo, hi]               vec1 = lo,     vec2 = hi
              2 = ball B[c, r]               vec1 = c,      scal = r
"""

import os

import numpy as np

KIND_HALFSPACE = 0
KIND_BOX = 1
KIND_BALL = 2

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda func: func


def _flag_disabled(value):
    return value.strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = NUMBA_AVAILABLE and not _flag_disabled(
    os.environ.get("VARINEQ_DISABLE_NUMBA", "")
)


# ---------------------------------------------------------------------------
# Dykstra
# ---------------------------------------------------------------------------

def dykstra_numpy(kinds, vec1, vec2, scal, x0, tol, max_cycles):
    """Dykstra's alternating projections, vectorised numpy version.

    Parameters
    ----------
    kinds, vec1, vec2, scal : ndarray
        Packed member sets, see module docstring.
    x0 : ndarray, shape (n,)
        Point to project.
    tol : float
        Absolute bound on the largest single-member displacement in one
        full cycle; the loop stops once a cycle stays below it.
    max_cycles : int
        Cycle cap.

    Returns
    -------
    x : ndarray
        Last iterate.
    displacement : float
        Largest member displacement seen in the last cycle.
    cycles : int
        Number of completed cycles.
    corr_mid, corr_end : float
        Total correction-vector norm at the half-way cycle and at exit; a
        ratio well above one at the cap signals an empty intersection.
    """
    n_sets = kinds.shape[0]
    x = x0.copy()
    corr = np.zeros((n_sets, x.shape[0]))
    displacement = np.inf
    corr_mid = 0.0
    half = max_cycles // 2
    cycles = 0
    while cycles < max_cycles:
        displacement = 0.0
        for i in range(n_sets):
            y = x + corr[i]
            kind = kinds[i]
            if kind == KIND_HALFSPACE:
                viol = vec1[i] @ y - scal[i]
                z = y - viol * vec1[i] if viol > 0.0 else y.copy()
            elif kind == KIND_BOX:
                z = np.minimum(np.maximum(y, vec1[i]), vec2[i])
            else:
                d = y - vec1[i]
                nd = np.sqrt(d @ d)
                z = vec1[i] + d * (scal[i] / nd) if nd > scal[i] else y.copy()
            step = np.sqrt((z - x) @ (z - x))
            if step > displacement:
                displacement = step
            corr[i] = y - z
            x = z
        cycles += 1
        if cycles == half:
            corr_mid = float(np.sqrt(np.sum(corr * corr)))
        if displacement <= tol:
            break
    corr_end = float(np.sqrt(np.sum(corr * corr)))
    return x, displacement, cycles, corr_mid, corr_end


@njit(cache=True)
def _dykstra_numba_impl(kinds, vec1, vec2, scal, x0, tol, max_cycles):
    n_sets = kinds.shape[0]
    n = x0.shape[0]
    x = x0.copy()
    y = np.empty(n)
    corr = np.zeros((n_sets, n))
    displacement = np.inf
    corr_mid = 0.0
    half = max_cycles // 2
    cycles = 0
    while cycles < max_cycles:
        displacement = 0.0
        for i in range(n_sets):
            for j in range(n):
                y[j] = x[j] + corr[i, j]
            kind = kinds[i]
            step2 = 0.0
            if kind == KIND_HALFSPACE:
                viol = -scal[i]
                for j in range(n):
                    viol += vec1[i, j] * y[j]
                if viol < 0.0:
                    viol = 0.0
                for j in range(n):
                    zj = y[j] - viol * vec1[i, j]
                    step2 += (zj - x[j]) ** 2
                    corr[i, j] = y[j] - zj
                    x[j] = zj
            elif kind == KIND_BOX:
                for j in range(n):
                    zj = y[j]
                    if zj < vec1[i, j]:
                        zj = vec1[i, j]
                    if zj > vec2[i, j]:
                        zj = vec2[i, j]
                    step2 += (zj - x[j]) ** 2
                    corr[i, j] = y[j] - zj
                    x[j] = zj
            else:
                nd2 = 0.0
                for j in range(n):
                    nd2 += (y[j] - vec1[i, j]) ** 2
                nd = np.sqrt(nd2)
                shrink = 1.0
                if nd > scal[i]:
                    shrink = scal[i] / nd
                for j in range(n):
                    zj = vec1[i, j] + (y[j] - vec1[i, j]) * shrink
                    if shrink == 1.0:
                        zj = y[j]
                    step2 += (zj - x[j]) ** 2
                    corr[i, j] = y[j] - zj
                    x[j] = zj
            step = np.sqrt(step2)
            if step > displacement:
                displacement = step
        cycles += 1
        if cycles == half:
            corr_mid = np.sqrt(np.sum(corr * corr))
        if displacement <= tol:
            break
    corr_end = np.sqrt(np.sum(corr * corr))
    return x, displacement, cycles, corr_mid, corr_end


def dykstra_numba(kinds, vec1, vec2, scal, x0, tol, max_cycles):
    """Compiled twin of :func:`dykstra_numpy` (same arguments and returns)."""
    x, displacement, cycles, corr_mid, corr_end = _dykstra_numba_impl(
        kinds, vec1, vec2, scal, x0, float(tol), int(max_cycles)
    )
    return x, float(displacement), int(cycles), float(corr_mid), float(corr_end)


# ---------------------------------------------------------------------------
# NNLS by accelerated projected gradient
# ---------------------------------------------------------------------------

def nnls_numpy(gens, z, lipschitz, res_tol, kkt_tol, max_iter):
    """Minimise ``||gens.T @ lam - z||`` over ``lam >= 0``.

    Projected gradient with Nesterov momentum and function-value restart.
    Stops as soon as the residual drops to ``res_tol`` (membership is then
    decided) or the projected gradient falls under ``kkt_tol``.

    Returns
    -------
    lam : ndarray
    best_residual : float
    iterations : int
    converged : bool
    """
    r = gens.shape[0]
    lam = np.zeros(r)
    lam_prev = lam.copy()
    mom = lam.copy()
    t = 1.0
    step = 1.0 / lipschitz
    resid = gens.T @ lam - z
    best = float(np.sqrt(resid @ resid))
    f_prev = best
    best_lam = lam.copy()
    for it in range(1, max_iter + 1):
        grad = gens @ (gens.T @ mom - z)
        lam_prev = lam
        lam = np.maximum(mom - step * grad, 0.0)
        resid = gens.T @ lam - z
        f = float(np.sqrt(resid @ resid))
        if f < best:
            best = f
            best_lam = lam.copy()
        if best <= res_tol:
            return best_lam, best, it, True
        g_full = gens @ resid
        pg = lam - np.maximum(lam - g_full, 0.0)
        if np.sqrt(pg @ pg) <= kkt_tol:
            return best_lam, best, it, True
        if f > f_prev:
            t = 1.0
            mom = lam.copy()
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            mom = lam + ((t - 1.0) / t_next) * (lam - lam_prev)
            t = t_next
        f_prev = f
    return best_lam, best, max_iter, False


@njit(cache=True)
def _nnls_numba_impl(gens, z, lipschitz, res_tol, kkt_tol, max_iter):
    r = gens.shape[0]
    m = gens.shape[1]
    lam = np.zeros(r)
    lam_prev = np.zeros(r)
    mom = np.zeros(r)
    resid = np.empty(m)
    grad = np.empty(r)
    t = 1.0
    step = 1.0 / lipschitz

    def _residual(vec, out):
        total = 0.0
        for j in range(m):
            acc = -z[j]
            for i in range(r):
                acc += gens[i, j] * vec[i]
            out[j] = acc
            total += acc * acc
        return np.sqrt(total)

    best = _residual(lam, resid)
    f_prev = best
    best_lam = lam.copy()
    for it in range(1, max_iter + 1):
        _residual(mom, resid)
        for i in range(r):
            acc = 0.0
            for j in range(m):
                acc += gens[i, j] * resid[j]
            grad[i] = acc
        for i in range(r):
            lam_prev[i] = lam[i]
            v = mom[i] - step * grad[i]
            lam[i] = v if v > 0.0 else 0.0
        f = _residual(lam, resid)
        if f < best:
            best = f
            best_lam[:] = lam
        if best <= res_tol:
            return best_lam, best, it, True
        pg2 = 0.0
        for i in range(r):
            acc = 0.0
            for j in range(m):
                acc += gens[i, j] * resid[j]
            v = lam[i] - acc
            if v < 0.0:
                v = 0.0
            pg2 += (lam[i] - v) ** 2
        if np.sqrt(pg2) <= kkt_tol:
            return best_lam, best, it, True
        if f > f_prev:
            t = 1.0
            mom[:] = lam
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            beta = (t - 1.0) / t_next
            for i in range(r):
                mom[i] = lam[i] + beta * (lam[i] - lam_prev[i])
            t = t_next
        f_prev = f
    return best_lam, best, max_iter, False


def nnls_numba(gens, z, lipschitz, res_tol, kkt_tol, max_iter):
    """Compiled twin of :func:`nnls_numpy`."""
    lam, best, it, ok = _nnls_numba_impl(
        gens, z, float(lipschitz), float(res_tol), float(kkt_tol), int(max_iter)
    )
    return lam, float(best), int(it), bool(ok)


if USE_NUMBA:
    dykstra = dykstra_numba
    nnls = nnls_numba
else:
    dykstra = dykstra_numpy
    nnls = nnls_numpy


def backend():
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"
