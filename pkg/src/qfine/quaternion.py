"""Quaternion scalar arithmetic on (..., 4) float arrays.

A quaternion w + x e1 + y e2 + z e3 is stored as the array [w, x, y, z].
All operations broadcast over leading axes and are pure; the unit relations
are e1 e2 = -e2 e1 = e3 and cyclic, with e_i^2 = -1.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import QfineError

ONE = np.array([1.0, 0.0, 0.0, 0.0])
E1 = np.array([0.0, 1.0, 0.0, 0.0])
E2 = np.array([0.0, 0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 0.0, 1.0])

#: minimum modulus accepted by qinv before raising ZeroDivisionError
INV_FLOOR = 1e-300


def quaternion(w=0.0, x=0.0, y=0.0, z=0.0):
    """Build a quaternion array from real components."""
    return np.array([w, x, y, z], dtype=float)


def from_real(w):
    out = np.zeros(np.shape(w) + (4,))
    out[..., 0] = w
    return out


def qmul(a, b):
    """Hamilton product, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def qconj(a):
    a = np.asarray(a, dtype=float)
    out = a.copy()
    out[..., 1:] *= -1.0
    return out


def qnorm2(a):
    a = np.asarray(a, dtype=float)
    return np.sum(a * a, axis=-1)


def qnorm(a):
    return np.sqrt(qnorm2(a))


def qinv(a, floor=INV_FLOOR):
    """Inverse conj(a)/|a|^2; raises ZeroDivisionError below `floor`."""
    a = np.asarray(a, dtype=float)
    n2 = qnorm2(a)
    if np.any(np.sqrt(n2) < floor):
        raise ZeroDivisionError(f"quaternion modulus below floor {floor:.1e}")
    return qconj(a) / n2[..., None]


def qpow(a, k):
    """Integer power by repeated multiplication (k >= 0, exact formula)."""
    out = np.broadcast_to(ONE, np.shape(a)).copy()
    for _ in range(k):
        out = qmul(out, a)
    return out


def real_part(a):
    return np.asarray(a, dtype=float)[..., 0]


def imag_part(a):
    out = np.asarray(a, dtype=float).copy()
    out[..., 0] = 0.0
    return out


class SliceCoords(NamedTuple):
    """Slice decomposition q = u + J v with v >= 0 and |J| = 1, J^2 = -1."""

    u: float
    v: float
    J: np.ndarray


def slice_decompose(q) -> SliceCoords:
    """Decompose q = u + J v; real points get the default J = e1."""
    q = np.asarray(q, dtype=float)
    u = float(q[0])
    vec = q[1:]
    v = float(np.linalg.norm(vec))
    if v == 0.0:
        return SliceCoords(u, 0.0, E1.copy())
    J = np.zeros(4)
    J[1:] = vec / v
    return SliceCoords(u, v, J)


def slice_recompose(u, v, J):
    return u * ONE + v * np.asarray(J, dtype=float)


def to_complex(q):
    """Slice coordinates of q as the complex number u + i v (v >= 0)."""
    u, v, _ = slice_decompose(q)
    return complex(u, v)


def from_complex(z, J):
    """u + J v for z = u + i v; broadcasting over z."""
    z = np.asarray(z, dtype=complex)
    J = np.asarray(J, dtype=float)
    out = np.zeros(z.shape + (4,))
    out[..., 0] = z.real
    out += z.imag[..., None] * J
    return out


def embed_left(q):
    """Real 4x4 matrix of left multiplication v -> q v (batched)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rows = [
        np.stack([w, -x, -y, -z], axis=-1),
        np.stack([x, w, -z, y], axis=-1),
        np.stack([y, z, w, -x], axis=-1),
        np.stack([z, -y, x, w], axis=-1),
    ]
    return np.stack(rows, axis=-2)


def embed_right(q):
    """Real 4x4 matrix of right multiplication v -> v q (batched)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rows = [
        np.stack([w, -x, -y, -z], axis=-1),
        np.stack([x, w, z, -y], axis=-1),
        np.stack([y, -z, w, x], axis=-1),
        np.stack([z, y, -x, w], axis=-1),
    ]
    return np.stack(rows, axis=-2)


def random_unit_imaginary(rng):
    """Uniform J on the sphere of unit purely imaginary quaternions."""
    vec = rng.standard_normal(3)
    nrm = np.linalg.norm(vec)
    while nrm < 1e-12:
        vec = rng.standard_normal(3)
        nrm = np.linalg.norm(vec)
    J = np.zeros(4)
    J[1:] = vec / nrm
    return J


def random_quaternion(rng, scale=1.0):
    return scale * rng.standard_normal(4)


def check_unit_imaginary(J, tol=1e-10):
    J = np.asarray(J, dtype=float)
    if abs(J[0]) > tol or abs(qnorm(J) - 1.0) > tol:
        raise QfineError("J must be a unit purely imaginary quaternion")
    return J
