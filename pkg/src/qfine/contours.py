r"""Slice Cauchy contours and adaptive trapezoidal quadrature.

Contours are finite unions of non-intersecting circles in a slice plane
C_J, each with an orientation; counterclockwise (+1) is positive, and the
boundary of a domain is oriented so the domain lies on the left.  With the
line element ds_J = ds (-J) and the parameterization s = c + r e^{J t} this
gives

    (1/2pi) \oint K(s) ds_J f(s)  ~  (1/N) sum_k K(s_k) [r e^{J t_k}] f(s_k)

per positively oriented circle, which the trapezoid rule resolves with
spectral accuracy for analytic integrands.  Node counts double until the
successive results agree to `rtol`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _accel, quaternion as qt
from .errors import CannotSeparate, KernelSingularity, NoConvergence
from .linalg import SSpectrum

#: default adaptive-quadrature controls
RTOL = 1e-10
NODES_START = 16
NODES_CAP = 2**14
_CHUNK = 4096


@dataclass(frozen=True)
class Circle:
    u: float
    v: float
    r: float
    orient: int = 1

    def nodes(self, N):
        """Complex nodes z_k and slice weights w_k = orient * r e^{i t_k} / N."""
        t = 2.0 * np.pi * np.arange(N) / N
        e = np.exp(1j * t)
        z = complex(self.u, self.v) + self.r * e
        w = (self.orient * self.r / N) * e
        return z, w

    def center_distance(self, u, v):
        return float(np.hypot(self.u - u, self.v - v))


@dataclass
class SliceContour:
    J: np.ndarray
    circles: list
    unbounded: bool = False
    diagnostics: dict = field(default_factory=dict, repr=False)

    def to_json_dict(self):
        return {
            "J": list(self.J),
            "circles": [
                {"u": c.u, "v": c.v, "r": c.r, "orient": c.orient}
                for c in self.circles
            ],
            "unbounded": self.unbounded,
        }

    @staticmethod
    def from_json_dict(d):
        circles = [
            Circle(c["u"], c["v"], c["r"], c.get("orient", 1)) for c in d["circles"]
        ]
        return SliceContour(np.asarray(d["J"], dtype=float), circles, d["unbounded"])


def _cover_circle(a: Circle, b: Circle) -> Circle:
    d = np.hypot(a.u - b.u, a.v - b.v)
    if d + b.r <= a.r:
        return a
    if d + a.r <= b.r:
        return b
    r = 0.5 * (d + a.r + b.r)
    t = 0.5 * (1.0 + (b.r - a.r) / d)
    return Circle(a.u + t * (b.u - a.u), a.v + t * (b.v - a.v), r, a.orient)


def _axis_cover(c: Circle) -> Circle:
    """Axis-centered circle covering c and its mirror image."""
    return Circle(c.u, 0.0, abs(c.v) + c.r, c.orient)


def _normalize_item(c: Circle) -> Circle:
    """An upper circle that crosses the real axis becomes an axis cover."""
    if 0.0 < c.v < c.r:
        return _axis_cover(c)
    return c


def _merge_symmetric(items):
    """Merge intersecting circles while preserving v -> -v symmetry.

    `items` are axis-centered circles (v = 0, standing for themselves) or
    upper-half circles (v > 0, implicitly paired with their mirror).  A
    cross-axis intersection between two mirror pairs collapses everything
    into one axis-centered cover, so the output set stays symmetric by
    construction.
    """
    items = [_normalize_item(c) for c in items]
    changed = True
    while changed:
        changed = False
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                a, b = items[i], items[j]
                same = np.hypot(a.u - b.u, a.v - b.v) < a.r + b.r
                cross = a.v > 0 and b.v > 0 and (
                    np.hypot(a.u - b.u, a.v + b.v) < a.r + b.r
                )
                if not (same or cross):
                    continue
                if cross and not same:
                    # pairs touch through the axis: one axis-centered cover
                    merged = _axis_cover(
                        _cover_circle(a, Circle(b.u, -b.v, b.r, b.orient))
                    )
                else:
                    # a cover involving an axis circle always crosses the
                    # axis, so normalization keeps the mirrors covered
                    merged = _normalize_item(_cover_circle(a, b))
                items = [c for k, c in enumerate(items) if k not in (i, j)]
                items.append(merged)
                changed = True
                break
            if changed:
                break
    return sorted(items, key=lambda c: (c.u, c.v, c.r))


def _expand_items(items):
    """Materialize mirror circles for the upper-half items."""
    out = []
    for c in items:
        out.append(c)
        if c.v > 0:
            out.append(Circle(c.u, -c.v, c.r, c.orient))
    return sorted(out, key=lambda c: (c.u, c.v, c.r))


def enclose_spectrum(
    spectrum: SSpectrum, margin, avoid=(), J=None, unbounded=False
) -> SliceContour:
    """Build the slice boundary used by the functional calculi.

    Bounded: positively oriented circles of radius margin*(1 + sphere
    radius) around every slice trace of the spectrum, merged while
    intersecting; `avoid` points (poles, transform points) must stay
    outside.  Unbounded: the boundary of the complement of closed balls
    around the avoid points - negatively oriented circles of radius
    `margin` around each avoid trace, with the spectrum inside the domain.
    """
    if margin <= 0:
        raise CannotSeparate("margin must be positive")
    J = qt.E1.copy() if J is None else qt.check_unit_imaginary(np.asarray(J, float))
    avoid = [(float(a), 0.0) if np.isscalar(a) else (float(a[0]), float(a[1])) for a in avoid]

    if not unbounded:
        items = [
            Circle(u, v, margin * (1.0 + abs(v)), 1) for (u, v) in spectrum.spheres
        ]
        circles = _expand_items(_merge_symmetric(items))
        for (au, av) in avoid:
            for trace in ((au, av), (au, -av)):
                for c in circles:
                    gap = c.center_distance(*trace) - c.r
                    if gap < 0.5 * margin:
                        raise CannotSeparate(
                            f"avoid point {trace} within {gap:.3e} of a spectrum circle"
                        )
        return SliceContour(J, circles, False)

    # unbounded: punctures around the avoid set, spectrum stays inside U
    if not avoid:
        raise CannotSeparate("unbounded contour needs at least one avoid point")
    for (au, av) in avoid:
        if spectrum.spheres and spectrum.distance(au, av) <= 2.0 * margin:
            raise CannotSeparate(
                f"avoid point ({au}, {av}) within 2*margin of the spectrum"
            )
    items = [Circle(u, v, margin, -1) for (u, v) in avoid]
    circles = _expand_items(_merge_symmetric(items))
    for c in circles:
        for (u, v) in spectrum.spheres:
            if (
                c.center_distance(u, v) <= c.r
                or c.center_distance(u, -v) <= c.r
            ):
                raise CannotSeparate("merged puncture swallowed a spectral point")
    return SliceContour(J, circles, True)


def _norm(val):
    return float(np.linalg.norm(val))


def _eval_circle(kernel, f, circle, J, N, side):
    r"""One trapezoid pass of (1/2pi) \oint K ds_J f over one circle."""
    total = None
    for start in range(0, N, _CHUNK):
        count = min(_CHUNK, N - start)
        t = 2.0 * np.pi * (np.arange(start, start + count)) / N
        e = np.exp(1j * t)
        z = complex(circle.u, circle.v) + circle.r * e
        w = qt.from_complex((circle.orient * circle.r / N) * e, J)
        s = qt.from_complex(z, J)
        K = kernel(s)
        if not np.all(np.isfinite(K)):
            raise KernelSingularity("kernel not finite on a quadrature node")
        fv = (
            np.broadcast_to(qt.ONE, (count, 4)).copy()
            if f is None
            else f.eval_on_slice(z, J)
        )
        if K.ndim == 2:  # scalar quaternion kernel values (N, 4)
            if side == "left":
                part = _accel.qmul_many(K, _accel.qmul_many(w, fv)).sum(axis=0)
            else:
                part = _accel.qmul_many(_accel.qmul_many(fv, w), K).sum(axis=0)
        else:
            n = K.shape[1] // 4
            if side == "left":
                part = _accel.accumulate_embed_left(K, _accel.qmul_many(w, fv), n)
            else:
                part = _accel.accumulate_embed_right(_accel.qmul_many(fv, w), K, n)
        total = part if total is None else total + part
    return total


class IntegrationResult:
    """Value of a contour integral plus adaptive-quadrature diagnostics."""

    def __init__(self, value, nodes_used, gaps):
        self.value = value
        self.nodes_used = nodes_used
        self.gaps = gaps


def integrate(
    kernel,
    f,
    contour: SliceContour,
    side="left",
    *,
    rtol=RTOL,
    nodes_start=NODES_START,
    nodes_cap=NODES_CAP,
) -> IntegrationResult:
    r"""(1/2pi) \oint K(s) ds_J f(s) (left) or mirrored (right), adaptively.

    `kernel` maps a batch of quaternion nodes (N, 4) to values (N, 4) for
    scalar kernels or (N, 4n, 4n) for operator kernels.  Node counts double
    per circle until successive results differ by less than `rtol`
    relative; exceeding `nodes_cap` raises NoConvergence with the last two
    iterates.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if not contour.circles:
        raise CannotSeparate("contour has no circles")
    total = None
    nodes_used = 0
    gap_history = []
    for circle in contour.circles:
        N = nodes_start
        prev = _eval_circle(kernel, f, circle, contour.J, N, side)
        gaps = []
        while True:
            N *= 2
            cur = _eval_circle(kernel, f, circle, contour.J, N, side)
            gap = _norm(cur - prev) / max(1.0, _norm(cur))
            gaps.append(gap)
            if gap < rtol:
                break
            if N >= nodes_cap:
                raise NoConvergence(cur, prev, gap, N)
            prev = cur
        gap_history.append(gaps)
        nodes_used += N
        total = cur if total is None else total + cur
    return IntegrationResult(total, nodes_used, gap_history)
