"""Hot quadrature kernels with a numba lane and a pure-numpy fallback.

The contour quadrature spends its time in three memory-bound steps that are
worth fusing: the Hamilton product over node batches, the assembly of the
realified pseudo-resolvent from a batch of complex matrices, and the
node-weighted accumulation K_k @ (L(w_k) (x) I_n).  Each has a numba @njit
implementation and an einsum-based numpy implementation producing identical
results.

Lane selection: the env flag QFINE_NUMBA picks the lane at import time
("0" forces numpy; anything else tries numba and falls back when numba is
missing).  `set_backend` overrides at runtime, used by the benchmark.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    _HAVE_NUMBA = False

_I4 = np.eye(4)


# ---------------------------------------------------------------- numpy lane


def _qmul_many_np(a, b):
    aw, ax, ay, az = a[:, 0], a[:, 1], a[:, 2], a[:, 3]
    bw, bx, by, bz = b[:, 0], b[:, 1], b[:, 2], b[:, 3]
    out = np.empty_like(a)
    out[:, 0] = aw * bw - ax * bx - ay * by - az * bz
    out[:, 1] = aw * bx + ax * bw + ay * bz - az * by
    out[:, 2] = aw * by - ax * bz + ay * bw + az * bx
    out[:, 3] = aw * bz + ax * by - ay * bx + az * bw
    return out


def _embed_left_batch(w):
    N = w.shape[0]
    L = np.empty((N, 4, 4))
    ww, wx, wy, wz = w[:, 0], w[:, 1], w[:, 2], w[:, 3]
    L[:, 0, 0], L[:, 0, 1], L[:, 0, 2], L[:, 0, 3] = ww, -wx, -wy, -wz
    L[:, 1, 0], L[:, 1, 1], L[:, 1, 2], L[:, 1, 3] = wx, ww, -wz, wy
    L[:, 2, 0], L[:, 2, 1], L[:, 2, 2], L[:, 2, 3] = wy, wz, ww, -wx
    L[:, 3, 0], L[:, 3, 1], L[:, 3, 2], L[:, 3, 3] = wz, -wy, wx, ww
    return L


def _assemble_np(X, Y, LJ):
    N, n, _ = X.shape
    out = np.einsum("ab,kij->kaibj", _I4, X) + np.einsum("ab,kij->kaibj", LJ, Y)
    return out.reshape(N, 4 * n, 4 * n)


def _accum_left_np(K, w, n):
    N, m, _ = K.shape
    Lw = _embed_left_batch(w)
    # sum_k K_k @ (L(w_k) (x) I_n)
    K4 = K.reshape(N, m, 4, n)
    return np.einsum("kraj,kab->rbj", K4, Lw).reshape(m, m)


def _accum_right_np(w, K, n):
    N, m, _ = K.shape
    Lw = _embed_left_batch(w)
    K4 = K.reshape(N, 4, n, m)
    return np.einsum("kab,kbjc->ajc", Lw, K4).reshape(m, m)


# ---------------------------------------------------------------- numba lane

if _HAVE_NUMBA:

    @njit(cache=True)
    def _qmul_many_nb(a, b):  # pragma: no cover - exercised via dispatch
        N = a.shape[0]
        out = np.empty((N, 4))
        for k in range(N):
            aw, ax, ay, az = a[k, 0], a[k, 1], a[k, 2], a[k, 3]
            bw, bx, by, bz = b[k, 0], b[k, 1], b[k, 2], b[k, 3]
            out[k, 0] = aw * bw - ax * bx - ay * by - az * bz
            out[k, 1] = aw * bx + ax * bw + ay * bz - az * by
            out[k, 2] = aw * by - ax * bz + ay * bw + az * bx
            out[k, 3] = aw * bz + ax * by - ay * bx + az * bw
        return out

    @njit(cache=True)
    def _assemble_nb(X, Y, LJ):  # pragma: no cover
        N, n, _ = X.shape
        m = 4 * n
        out = np.zeros((N, m, m))
        for k in range(N):
            for a in range(4):
                for b in range(4):
                    lj = LJ[a, b]
                    if a == b:
                        for i in range(n):
                            for j in range(n):
                                out[k, a * n + i, b * n + j] = (
                                    X[k, i, j] + lj * Y[k, i, j]
                                )
                    elif lj != 0.0:
                        for i in range(n):
                            for j in range(n):
                                out[k, a * n + i, b * n + j] = lj * Y[k, i, j]
        return out

    @njit(cache=True)
    def _accum_left_nb(K, w, n):  # pragma: no cover
        N, m, _ = K.shape
        out = np.zeros((m, m))
        L = np.empty((4, 4))
        for k in range(N):
            ww, wx, wy, wz = w[k, 0], w[k, 1], w[k, 2], w[k, 3]
            L[0, 0], L[0, 1], L[0, 2], L[0, 3] = ww, -wx, -wy, -wz
            L[1, 0], L[1, 1], L[1, 2], L[1, 3] = wx, ww, -wz, wy
            L[2, 0], L[2, 1], L[2, 2], L[2, 3] = wy, wz, ww, -wx
            L[3, 0], L[3, 1], L[3, 2], L[3, 3] = wz, -wy, wx, ww
            for r in range(m):
                for b in range(4):
                    for j in range(n):
                        acc = 0.0
                        for a in range(4):
                            acc += K[k, r, a * n + j] * L[a, b]
                        out[r, b * n + j] += acc
        return out

    @njit(cache=True)
    def _accum_right_nb(w, K, n):  # pragma: no cover
        N, m, _ = K.shape
        out = np.zeros((m, m))
        L = np.empty((4, 4))
        for k in range(N):
            ww, wx, wy, wz = w[k, 0], w[k, 1], w[k, 2], w[k, 3]
            L[0, 0], L[0, 1], L[0, 2], L[0, 3] = ww, -wx, -wy, -wz
            L[1, 0], L[1, 1], L[1, 2], L[1, 3] = wx, ww, -wz, wy
            L[2, 0], L[2, 1], L[2, 2], L[2, 3] = wy, wz, ww, -wx
            L[3, 0], L[3, 1], L[3, 2], L[3, 3] = wz, -wy, wx, ww
            for a in range(4):
                for b in range(4):
                    lab = L[a, b]
                    if lab != 0.0:
                        for i in range(n):
                            for c in range(m):
                                out[a * n + i, c] += lab * K[k, b * n + i, c]
        return out


# ------------------------------------------------------------------ dispatch

_backend = "numpy"


def set_backend(name):
    """Select 'numba' or 'numpy'; returns the lane actually in effect."""
    global _backend
    if name == "numba" and not _HAVE_NUMBA:
        _backend = "numpy"
    elif name in ("numba", "numpy"):
        _backend = name
    else:
        raise ValueError(f"unknown backend {name!r}")
    return _backend


def backend():
    return _backend


def qmul_many(a, b):
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    if _backend == "numba":
        return _qmul_many_nb(a, b)
    return _qmul_many_np(a, b)


def assemble_slice_operator(X, Y, LJ):
    """Realify a batch of slice-plane matrices: I4 (x) X_k + L(J) (x) Y_k."""
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    LJ = np.ascontiguousarray(LJ, dtype=float)
    if _backend == "numba":
        return _assemble_nb(X, Y, LJ)
    return _assemble_np(X, Y, LJ)


def accumulate_embed_left(K, w, n):
    """sum_k K_k @ (L(w_k) (x) I_n) over a node batch."""
    K = np.ascontiguousarray(K, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    if _backend == "numba":
        return _accum_left_nb(K, w, n)
    return _accum_left_np(K, w, n)


def accumulate_embed_right(w, K, n):
    """sum_k (L(w_k) (x) I_n) @ K_k over a node batch."""
    K = np.ascontiguousarray(K, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    if _backend == "numba":
        return _accum_right_nb(w, K, n)
    return _accum_right_np(w, K, n)


set_backend("numpy" if os.environ.get("QFINE_NUMBA", "1") == "0" else "numba")
