"""Operators with commuting real components and their realification.

A tuple (T0, T1, T2, T3) of pairwise commuting real n x n matrices carries
the right-linear operator T = T0 + e1 T1 + e2 T2 + e3 T3 on H^n.  All
operator work happens on the real 4n x 4n matrix

    M = sum_l L(e_l) (x) T_l          (component-major Kronecker ordering)

so that every operator identity becomes a plain real-matrix identity.  The
S-spectrum is the set of spheres [u + J v] on which

    Q_{c,s}(T) = s^2 I - 2 s T0 + (T0^2 + T1^2 + T2^2 + T3^2)

fails to be invertible; it is computed from the companion linearization of
the quadratic matrix polynomial z^2 I - 2 z T0 + P.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quaternion as qt
from .errors import (
    CommutationViolation,
    DimensionMismatch,
    EigenSolverFailure,
    QfineError,
    SingularOperator,
)

#: default relative tolerance for the pairwise commutation check
COMMUTATION_TOL = 1e-10

#: default condition-number cap for every inversion
COND_CAP = 1e12

#: merging tolerance for spectral spheres
SPHERE_MERGE_TOL = 1e-8

_L_UNITS = [qt.embed_left(u) for u in (qt.ONE, qt.E1, qt.E2, qt.E3)]


def embed_scalar(q, n):
    """Left scalar multiplication q on H^n as a real 4n x 4n matrix."""
    return np.kron(qt.embed_left(q), np.eye(n))


def embed_real_matrix(B):
    """A real matrix acting componentwise, I4 (x) B."""
    B = np.asarray(B, dtype=float)
    return np.kron(np.eye(4), B)


@dataclass
class CommutingTuple:
    """Four commuting real n x n matrices; treat as immutable."""

    n: int
    T0: np.ndarray
    T1: np.ndarray
    T2: np.ndarray
    T3: np.ndarray
    commutation_tol: float = COMMUTATION_TOL
    _spectrum: "SSpectrum | None" = field(default=None, repr=False, compare=False)

    @property
    def components(self):
        return (self.T0, self.T1, self.T2, self.T3)

    def conj(self) -> "CommutingTuple":
        return CommutingTuple(
            self.n, self.T0, -self.T1, -self.T2, -self.T3, self.commutation_tol
        )

    @property
    def P(self):
        """T Tbar = sum of squared components (real by commutation)."""
        return sum(Tl @ Tl for Tl in self.components)

    def to_json_dict(self):
        return {
            "n": self.n,
            "T0": self.T0.tolist(),
            "T1": self.T1.tolist(),
            "T2": self.T2.tolist(),
            "T3": self.T3.tolist(),
        }

    @staticmethod
    def from_json_dict(d) -> "CommutingTuple":
        mats = [np.asarray(d[key], dtype=float) for key in ("T0", "T1", "T2", "T3")]
        t = make_tuple(*mats)
        if t.n != int(d["n"]):
            raise DimensionMismatch(f"declared n={d['n']} but matrices are {t.n}x{t.n}")
        return t


def make_tuple(T0, T1, T2, T3, commutation_tol=COMMUTATION_TOL) -> CommutingTuple:
    """Validate shapes and pairwise commutation; reject non-commuting input."""
    mats = [np.atleast_2d(np.asarray(M, dtype=float)) for M in (T0, T1, T2, T3)]
    n = mats[0].shape[0]
    for M in mats:
        if M.shape != (n, n):
            raise DimensionMismatch(
                f"components must all be {n}x{n}, got {M.shape}"
            )
    norms = [np.linalg.norm(M) for M in mats]
    for i in range(4):
        for j in range(i + 1, 4):
            resid = np.linalg.norm(mats[i] @ mats[j] - mats[j] @ mats[i])
            scale = max(1.0, norms[i] * norms[j])
            if resid > commutation_tol * scale:
                raise CommutationViolation(i, j, resid / scale, commutation_tol)
    return CommutingTuple(n, *mats, commutation_tol=commutation_tol)


@dataclass
class QOperator:
    """Realified right-linear operator on H^n (a real 4n x 4n matrix)."""

    n: int
    M: np.ndarray

    def right_linearity_defect(self):
        """Max commutator norm with right multiplication by the units."""
        worst = 0.0
        scale = max(1.0, np.linalg.norm(self.M))
        for u in (qt.E1, qt.E2, qt.E3):
            R = np.kron(qt.embed_right(u), np.eye(self.n))
            worst = max(worst, np.linalg.norm(self.M @ R - R @ self.M) / scale)
        return worst

    def apply(self, v):
        return self.M @ np.asarray(v, dtype=float)


def realify(t: CommutingTuple) -> QOperator:
    M = np.zeros((4 * t.n, 4 * t.n))
    for L, Tl in zip(_L_UNITS, t.components):
        M += np.kron(L, Tl)
    return QOperator(t.n, M)


def op_compose(A: QOperator, B: QOperator) -> QOperator:
    if A.n != B.n:
        raise DimensionMismatch("operator dimensions differ")
    return QOperator(A.n, A.M @ B.M)


def op_add(A: QOperator, B: QOperator) -> QOperator:
    if A.n != B.n:
        raise DimensionMismatch("operator dimensions differ")
    return QOperator(A.n, A.M + B.M)


def op_scale_left(A: QOperator, q) -> QOperator:
    """q A : v -> q (A v)."""
    return QOperator(A.n, embed_scalar(q, A.n) @ A.M)


def op_scale_right(A: QOperator, q) -> QOperator:
    """A q : v -> A (q v)."""
    return QOperator(A.n, A.M @ embed_scalar(q, A.n))


def op_inverse(A: QOperator, cond_cap=COND_CAP) -> QOperator:
    cond = np.linalg.cond(A.M)
    if not np.isfinite(cond) or cond > cond_cap:
        raise SingularOperator(cond, cond_cap)
    return QOperator(A.n, np.linalg.inv(A.M))


def extract_components(M, n, check_tol=1e-8):
    """Recover (M0..M3) with M = sum L(e_l) (x) M_l from a right-linear M.

    Uses trace orthogonality of the unit embeddings; the reconstruction
    defect doubles as a right-linearity check.
    """
    M = np.asarray(M, dtype=float)
    blocks = M.reshape(4, n, 4, n)
    comps = []
    for L in _L_UNITS:
        comps.append(np.einsum("ab,aibj->ij", L, blocks) / 4.0)
    recon = sum(np.kron(L, C) for L, C in zip(_L_UNITS, comps))
    defect = np.linalg.norm(recon - M) / max(1.0, np.linalg.norm(M))
    if defect > check_tol:
        raise QfineError(
            f"matrix is not right-linear: component reconstruction defect {defect:.3e}"
        )
    return comps


@dataclass
class SSpectrum:
    """Axially symmetric S-spectrum as a list of spheres (center, radius)."""

    spheres: list

    def distance(self, u, v):
        """Slice-plane distance from the point u + J|v| to the spectrum."""
        v = abs(v)
        best = np.inf
        for (c, r) in self.spheres:
            best = min(best, float(np.hypot(u - c, v - r)), float(np.hypot(u - c, v + r)))
        return best

    def bound(self):
        """Radius of a disk around the origin covering all slice traces."""
        if not self.spheres:
            return 0.0
        return max(abs(c) + r for (c, r) in self.spheres)


def _merge_spheres(points, tol=SPHERE_MERGE_TOL):
    points = sorted(points)
    merged = []
    for (u, v) in points:
        if merged and abs(u - merged[-1][0]) <= tol and abs(v - merged[-1][1]) <= tol:
            continue
        merged.append((u, v))
    return merged


def s_spectrum(t: CommutingTuple) -> SSpectrum:
    """Spheres (u, v) from the companion linearization [[2 T0, -P], [I, 0]].

    Real spectral points are double roots of the quadratic pencil, so their
    companion eigenvalues split by about sqrt(eps); eigenvalues whose
    imaginary part is below the snap threshold are paired along the real
    axis (pair means recover the centers to full accuracy).
    """
    n = t.n
    comp = np.block(
        [[2.0 * t.T0, -t.P], [np.eye(n), np.zeros((n, n))]]
    )
    try:
        eig = np.linalg.eigvals(comp)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigenSolverFailure(str(exc)) from exc
    scale = max(1.0, float(np.abs(eig).max(initial=0.0)))
    snap = 1e-7 * scale
    pts = [
        (float(z.real), float(z.imag)) for z in eig if z.imag > snap
    ]
    reals = sorted(float(z.real) for z in eig if abs(z.imag) <= snap)
    i = 0
    while i + 1 < len(reals):
        pts.append((0.5 * (reals[i] + reals[i + 1]), 0.0))
        i += 2
    if i < len(reals):  # odd leftover from a conjugate pair near the snap edge
        pts.append((reals[i], 0.0))
    tol = max(SPHERE_MERGE_TOL, SPHERE_MERGE_TOL * scale)
    return SSpectrum(_merge_spheres(pts, tol))


def random_commuting_tuple(
    rng, n, zero_component=None, spread=1.0, return_frame=False
):
    """T_l = S D_l S^-1 with a shared well-conditioned similarity S.

    Simultaneous diagonalization guarantees commutation, real component
    spectra, and a closed-form S-spectrum: joint eigenvalue columns
    (d0, d1, d2, d3) give spheres (d0, sqrt(d1^2 + d2^2 + d3^2)).
    `spread` scales the eigenvalue range (large values mimic wide spectra).
    """
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    S = Q @ np.diag(np.exp(rng.uniform(-0.3, 0.3, size=n)))
    Sinv = np.linalg.inv(S)
    D = rng.uniform(-2.0, 2.0, size=(4, n)) * spread
    if zero_component is not None:
        D[zero_component] = 0.0
    mats = [S @ np.diag(D[l]) @ Sinv for l in range(4)]
    t = make_tuple(*mats)
    if return_frame:
        return t, S, D
    return t
