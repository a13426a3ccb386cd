"""Hot numeric kernels: Jacobi eigensolver, RK4 integrator, spectral pair sums.

Each kernel exists in two flavors: a numba ``@njit`` build and a pure-numpy
build. The active flavor is chosen once at import time: numba is used when it
imports cleanly and the environment variable ``RESONET_NO_NUMBA`` is not set
to ``1``/``true``/``yes``. Both flavors are always importable (``*_nb`` /
``*_np``) so benchmarks/bench_kernels.py can time them side by side.

The two flavors accumulate sums in different orders, so results may differ
at the few-ulp level; callers must not rely on bit equality across flavors.
"""

from __future__ import annotations

import math
import os

import numpy as np

_NO_NUMBA = os.environ.get("RESONET_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _NO_NUMBA:
        raise ImportError("numba disabled via RESONET_NO_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    njit = None
    NUMBA_ENABLED = False

JACOBI_MAX_SWEEPS = 100
JACOBI_REL_TOL = 1e-12


# ---------------------------------------------------------------------------
# Cyclic Jacobi eigensolver for dense symmetric matrices.
#
# Sweeps rotate every (p, q) pair; convergence is declared when the
# off-diagonal Frobenius norm drops below JACOBI_REL_TOL times the full
# Frobenius norm. Returns (diag, vectors, sweeps) with sweeps = -1 when the
# sweep cap was hit before convergence. Eigenvalues are returned unsorted.
# ---------------------------------------------------------------------------

def _jacobi_scalar(mat):
    n = mat.shape[0]
    a = mat.copy()
    v = np.eye(n)
    norm_f = 0.0
    for i in range(n):
        for j in range(n):
            norm_f += a[i, j] * a[i, j]
    norm_f = math.sqrt(norm_f)
    tol = JACOBI_REL_TOL * norm_f
    sweeps_done = -1
    for sweep in range(JACOBI_MAX_SWEEPS + 1):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * a[i, j] * a[i, j]
        if math.sqrt(off) <= tol:
            sweeps_done = sweep
            break
        if sweep == JACOBI_MAX_SWEEPS:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # rotation cannot move the diagonal: flush the entry and skip
                g = 100.0 * abs(apq)
                if abs(a[p, p]) + g == abs(a[p, p]) and abs(a[q, q]) + g == abs(a[q, q]):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                elif theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                app = a[p, p]
                aqq = a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(n):
                    if i != p and i != q:
                        aip = a[i, p]
                        aiq = a[i, q]
                        a[i, p] = c * aip - s * aiq
                        a[i, q] = s * aip + c * aiq
                        a[p, i] = a[i, p]
                        a[q, i] = a[i, q]
                for i in range(n):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = c * vip - s * viq
                    v[i, q] = s * vip + c * viq
    diag = np.empty(n)
    for i in range(n):
        diag[i] = a[i, i]
    return diag, v, sweeps_done


def jacobi_eig_np(mat: np.ndarray):
    """Pure-numpy cyclic Jacobi: python pair loop, vectorized row/col updates."""
    n = mat.shape[0]
    a = np.array(mat, dtype=float)
    v = np.eye(n)
    norm_f = float(np.linalg.norm(a))
    tol = JACOBI_REL_TOL * norm_f
    sweeps_done = -1
    for sweep in range(JACOBI_MAX_SWEEPS + 1):
        off = a.copy()
        np.fill_diagonal(off, 0.0)
        if float(np.linalg.norm(off)) <= tol:
            sweeps_done = sweep
            break
        if sweep == JACOBI_MAX_SWEEPS:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                g = 100.0 * abs(apq)
                if abs(a[p, p]) + g == abs(a[p, p]) and abs(a[q, q]) + g == abs(a[q, q]):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                app, aqq = a[p, p], a[q, q]
                rp = c * a[p, :] - s * a[q, :]
                rq = s * a[p, :] + c * a[q, :]
                a[p, :] = rp
                a[q, :] = rq
                a[:, p] = rp
                a[:, q] = rq
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = c * v[:, p] - s * v[:, q]
                vq = s * v[:, p] + c * v[:, q]
                v[:, p] = vp
                v[:, q] = vq
    return np.diag(a).copy(), v, sweeps_done


# ---------------------------------------------------------------------------
# Classical RK4 for  x'' + damp @ x' + stiff @ x = f * cos(nu * t).
#
# Records ||x(t)||^2 over the leading norm_dim components every `stride`
# steps (sample 0 is the initial state). Optionally records the full state.
# Returns (norms, x, v, bad, xs, vs) with bad = index of the first
# non-finite recorded sample, or -1 when the run stayed finite.
# ---------------------------------------------------------------------------

def _rk4_impl(stiff, damp, f, nu, dt, n_steps, x0, v0, stride, norm_dim,
              record_state):
    n = stiff.shape[0]
    n_rec = n_steps // stride + 1
    norms = np.zeros(n_rec)
    xs = np.zeros((n_rec if record_state else 1, n))
    vs = np.zeros((n_rec if record_state else 1, n))
    x = x0.copy()
    v = v0.copy()
    acc = 0.0
    for i in range(norm_dim):
        acc += x[i] * x[i]
    norms[0] = acc
    if record_state:
        xs[0] = x
        vs[0] = v
    bad = -1
    rec = 1
    for step in range(n_steps):
        t = step * dt
        k1x = v
        k1v = f * math.cos(nu * t) - damp @ v - stiff @ x
        k2x = v + 0.5 * dt * k1v
        k2v = (f * math.cos(nu * (t + 0.5 * dt))
               - damp @ k2x - stiff @ (x + 0.5 * dt * k1x))
        k3x = v + 0.5 * dt * k2v
        k3v = (f * math.cos(nu * (t + 0.5 * dt))
               - damp @ k3x - stiff @ (x + 0.5 * dt * k2x))
        k4x = v + dt * k3v
        k4v = (f * math.cos(nu * (t + dt))
               - damp @ k4x - stiff @ (x + dt * k3x))
        x = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        v = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if (step + 1) % stride == 0:
            acc = 0.0
            for i in range(norm_dim):
                acc += x[i] * x[i]
            norms[rec] = acc
            if record_state:
                xs[rec] = x
                vs[rec] = v
            if bad == -1 and not math.isfinite(acc):
                bad = rec
            rec += 1
    return norms, x, v, bad, xs, vs


def rk4_forced_np(stiff, damp, f, nu, dt, n_steps, x0, v0, stride=1,
                  norm_dim=None, record_state=False):
    if norm_dim is None:
        norm_dim = stiff.shape[0]
    return _rk4_impl(np.asarray(stiff, float), np.asarray(damp, float),
                     np.asarray(f, float), float(nu), float(dt), int(n_steps),
                     np.asarray(x0, float), np.asarray(v0, float),
                     int(stride), int(norm_dim), bool(record_state))


# ---------------------------------------------------------------------------
# Spectral pair sums for the closed-form expected squared amplitude.
#
# bracket(x, y) = (h^2 + x^2 + y^2) / (x^4 * P(x, y))
# P(x, y)       = h^4 + 2 h^2 (x^2 + y^2) + (x^2 - y^2)^2
#
# pair_sum      -> sum_{k,j} bracket(om[k], om[j])
# pair_sum_grad -> d(pair_sum)/d(om[k]) as a vector
# ---------------------------------------------------------------------------

def _pair_sum_scalar(om, h):
    n = om.shape[0]
    h2 = h * h
    h4 = h2 * h2
    total = 0.0
    for k in range(n):
        wk2 = om[k] * om[k]
        wk4 = wk2 * wk2
        for j in range(n):
            wj2 = om[j] * om[j]
            d = wk2 - wj2
            p = h4 + 2.0 * h2 * (wk2 + wj2) + d * d
            total += (h2 + wk2 + wj2) / (wk4 * p)
    return total


def _pair_sum_grad_scalar(om, h):
    n = om.shape[0]
    h2 = h * h
    h4 = h2 * h2
    grad = np.zeros(n)
    for k in range(n):
        x = om[k]
        x2 = x * x
        x3 = x2 * x
        x4 = x2 * x2
        x5 = x4 * x
        for j in range(n):
            y = om[j]
            y2 = y * y
            d = x2 - y2
            p = h4 + 2.0 * h2 * (x2 + y2) + d * d
            a = h2 + x2 + y2
            # d bracket(x, y) / dx: x in the response slot
            grad[k] += (2.0 / (x3 * p)
                        - 4.0 * a / (x5 * p)
                        - 4.0 * a * (h2 + d) / (x3 * p * p))
            # d bracket(y, x) / dx: x in the center slot
            y4 = y2 * y2
            grad[k] += (2.0 * x / (y4 * p)
                        - 4.0 * a * x * (h2 + d) / (y4 * p * p))
    return grad


def pair_sum_np(om: np.ndarray, h: float) -> float:
    om = np.asarray(om, float)
    w2 = om * om
    xk = w2[:, None]
    yj = w2[None, :]
    p = h**4 + 2.0 * h * h * (xk + yj) + (xk - yj) ** 2
    return float(np.sum((h * h + xk + yj) / (xk * xk * p)))


def pair_sum_grad_np(om: np.ndarray, h: float) -> np.ndarray:
    om = np.asarray(om, float)
    h2 = h * h
    x = om[:, None]
    y = om[None, :]
    x2, y2 = x * x, y * y
    d = x2 - y2
    p = h2 * h2 + 2.0 * h2 * (x2 + y2) + d * d
    a = h2 + x2 + y2
    row = 2.0 / (x**3 * p) - 4.0 * a / (x**5 * p) - 4.0 * a * (h2 + d) / (x**3 * p * p)
    col = 2.0 * y / (x**4 * p) - 4.0 * a * y * (h2 - d) / (x**4 * p * p)
    # row: x is the response frequency; col: x is the center frequency, so
    # the col contribution to grad[k] sums bracket(y, x) terms over y
    return np.sum(row, axis=1) + np.sum(col.T, axis=1)


if NUMBA_ENABLED:
    _jacobi_nb_impl = njit(cache=True)(_jacobi_scalar)
    _rk4_nb_impl = njit(cache=True)(_rk4_impl)
    pair_sum_nb = njit(cache=True)(_pair_sum_scalar)
    pair_sum_grad_nb = njit(cache=True)(_pair_sum_grad_scalar)

    def jacobi_eig_nb(mat):
        return _jacobi_nb_impl(np.ascontiguousarray(mat, dtype=np.float64))

    def rk4_forced_nb(stiff, damp, f, nu, dt, n_steps, x0, v0, stride=1,
                      norm_dim=None, record_state=False):
        if norm_dim is None:
            norm_dim = stiff.shape[0]
        return _rk4_nb_impl(
            np.ascontiguousarray(stiff, np.float64),
            np.ascontiguousarray(damp, np.float64),
            np.ascontiguousarray(f, np.float64), float(nu), float(dt),
            int(n_steps), np.ascontiguousarray(x0, np.float64),
            np.ascontiguousarray(v0, np.float64), int(stride), int(norm_dim),
            bool(record_state))

    def jacobi_eig(mat):
        return jacobi_eig_nb(mat)

    def rk4_forced(*args, **kwargs):
        return rk4_forced_nb(*args, **kwargs)

    def pair_sum(om, h):
        return pair_sum_nb(np.ascontiguousarray(om, np.float64), float(h))

    def pair_sum_grad(om, h):
        return pair_sum_grad_nb(np.ascontiguousarray(om, np.float64), float(h))
else:
    jacobi_eig_nb = None
    rk4_forced_nb = None
    pair_sum_nb = None
    pair_sum_grad_nb = None

    jacobi_eig = jacobi_eig_np
    rk4_forced = rk4_forced_np
    pair_sum = pair_sum_np
    pair_sum_grad = pair_sum_grad_np
