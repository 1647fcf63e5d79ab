"""Slice hyperholomorphic functions via holomorphic stems.

A stem is a holomorphic function F(z) = alpha(u, v) + i beta(u, v) with the
even-odd symmetry alpha(u,-v) = alpha(u,v), beta(u,-v) = -beta(u,v); its
slice extension is f(u + J v) = alpha + J beta.  Polynomial stems may carry
quaternion coefficients (on the right for left slice functions); intrinsic
stems have real alpha, beta and evaluate through ordinary complex
arithmetic.

The module also provides the closed-form Cauchy-type kernels

    S_L^-1(s,q)        = (s - conj q) Qc^-1
    F_L(s,q)           = -4 (s - conj q) Qc^-2
    D S_L^-1(s,q)      = -2 Qc^-1
    Dbar S_L^-1(s,q)   =  4 Qc^-1 + 4 imag(q) (s - conj q) Qc^-2

with Qc = Q_{c,s}(q) = s^2 - 2 q0 s + |q|^2, their right-sided mirrors, and
finite-difference realizations of D, Dbar, Delta and D^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quaternion as qt
from .errors import (
    MissingValueAtInfinity,
    NotIntrinsic,
    PoleProximity,
    QfineError,
    SphereCollision,
)

_UNITS = (qt.E1, qt.E2, qt.E3)
_AXES = (qt.ONE, qt.E1, qt.E2, qt.E3)


# ---------------------------------------------------------------------- stems


class Stem:
    """Holomorphic stem; subclasses fill in evaluation and metadata."""

    intrinsic: bool = True
    f_inf = None  # quaternion value at infinity, or None
    poles: tuple = ()  # pole spheres (u, v) in the slice half-plane

    def eval_complex(self, z):
        raise NotIntrinsic(f"{type(self).__name__} has no complex evaluation")

    def eval_slice(self, z, J, side="left"):
        """Values at u + J v for z = u + i v (vectorized over z)."""
        vals = self.eval_complex(np.asarray(z, dtype=complex))
        return qt.from_complex(vals, J)

    def value_at_real(self, x):
        return self.eval_slice(np.array([complex(x)]), qt.E1)[0]

    def derivative_at_real(self, x, h=1e-5):
        """d/du at the real point u = x along the real axis."""
        if self.intrinsic:
            # complex-step derivative, exact to machine for analytic stems
            step = 1e-100
            return qt.from_real(
                float(self.eval_complex(np.array([x + 1j * step]))[0].imag) / step
            )
        lo = self.value_at_real(x - h)
        hi = self.value_at_real(x + h)
        lo2 = self.value_at_real(x - h / 2)
        hi2 = self.value_at_real(x + h / 2)
        d_h = (hi - lo) / (2 * h)
        d_h2 = (hi2 - lo2) / h
        return (4.0 * d_h2 - d_h) / 3.0


class PolyStem(Stem):
    """f(q) = sum_k q^k a_k with quaternion right coefficients a_k."""

    def __init__(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim == 0:
            coeffs = coeffs.reshape(1)
        if coeffs.ndim == 1:
            # real coefficient list [a0, a1, ...]
            coeffs = np.stack(
                [coeffs] + [np.zeros(coeffs.size)] * 3, axis=-1
            )
        elif coeffs.ndim != 2 or coeffs.shape[1] != 4:
            raise QfineError(
                "polynomial coefficients must be a real list or an (m, 4) array"
            )
        self.coeffs = coeffs
        self.intrinsic = bool(np.all(coeffs[:, 1:] == 0.0))
        self.poles = ()
        deg = self.degree
        self.f_inf = coeffs[0].copy() if deg == 0 else None

    @property
    def degree(self):
        nz = np.nonzero(np.any(self.coeffs != 0.0, axis=1))[0]
        return int(nz[-1]) if nz.size else 0

    def eval_complex(self, z):
        if not self.intrinsic:
            raise NotIntrinsic("polynomial has quaternion coefficients")
        out = np.zeros_like(z)
        for c in self.coeffs[::-1, 0]:
            out = out * z + c
        return out

    def eval_slice(self, z, J, side="left"):
        z = np.asarray(z, dtype=complex)
        if self.intrinsic:
            return qt.from_complex(self.eval_complex(z), J)
        out = np.zeros(z.shape + (4,))
        zk = np.ones_like(z)
        for k in range(self.coeffs.shape[0]):
            a = self.coeffs[k]
            if np.any(a != 0.0):
                qk = qt.from_complex(zk, J)
                term = qt.qmul(qk, a) if side == "left" else qt.qmul(a, qk)
                out += term
            zk = zk * z
        return out

    def derivative_at_real(self, x, h=1e-5):
        out = np.zeros(4)
        for k in range(1, self.coeffs.shape[0]):
            out += k * self.coeffs[k] * x ** (k - 1)
        return out


class RationalStem(Stem):
    """Intrinsic rational p(z) / prod (z - g_i) with real poles g_i."""

    def __init__(self, num_coeffs, pole_points):
        self.num = np.asarray(num_coeffs, dtype=float).ravel()
        self.pole_points = [float(g) for g in pole_points]
        self.poles = tuple((g, 0.0) for g in sorted(set(self.pole_points)))
        self.intrinsic = True
        deg_num = len(self.num) - 1
        deg_den = len(self.pole_points)
        if deg_num < deg_den:
            self.f_inf = qt.quaternion(0.0)
        elif deg_num == deg_den:
            self.f_inf = qt.quaternion(self.num[-1])
        else:
            self.f_inf = None

    def eval_complex(self, z):
        num = np.zeros_like(z)
        for c in self.num[::-1]:
            num = num * z + c
        den = np.ones_like(z)
        for g in self.pole_points:
            den = den * (z - g)
        return num / den


class ExpStem(Stem):
    """Entire intrinsic stem a exp(c z)."""

    def __init__(self, rate, scale=1.0):
        self.rate = float(rate)
        self.scale = float(scale)
        self.intrinsic = True
        self.poles = ()
        self.f_inf = None

    def eval_complex(self, z):
        return self.scale * np.exp(self.rate * z)


def _map_pole_through_phi(u, v, alpha):
    """Image of the sphere (u, v) under s -> (s - alpha)^-1, None if at inf."""
    d = (u - alpha) ** 2 + v**2
    if d < 1e-30:
        return None  # the pole sits at alpha and maps to infinity
    return ((u - alpha) / d, v / d)


class PhiStem(Stem):
    """Composition with the inverse transform: phi(p) = f(1/p + alpha)."""

    def __init__(self, base: Stem, alpha):
        self.base = base
        self.alpha = float(alpha)
        self.intrinsic = base.intrinsic
        pole_spheres = [
            img
            for (u, v) in base.poles
            if (img := _map_pole_through_phi(u, v, alpha)) is not None
        ]
        if base.f_inf is None:
            pole_spheres.append((0.0, 0.0))
        self.poles = tuple(pole_spheres)
        if any(abs(u - alpha) < 1e-30 and v < 1e-30 for (u, v) in base.poles):
            self.f_inf = None  # phi(inf) = f(alpha) undefined at a pole
        else:
            self.f_inf = base.value_at_real(self.alpha)

    def _pull_back(self, z):
        z = np.asarray(z, dtype=complex)
        zero = z == 0
        if np.any(zero) and self.base.f_inf is None:
            raise MissingValueAtInfinity(
                "phi(0) requires the base function's value at infinity"
            )
        safe = np.where(zero, 1.0, z)
        return zero, 1.0 / safe + self.alpha

    def eval_complex(self, z):
        if not self.intrinsic:
            raise NotIntrinsic("base stem has quaternion coefficients")
        zero, w = self._pull_back(z)
        vals = self.base.eval_complex(w)
        if np.any(zero):
            vals = np.where(zero, complex(self.base.f_inf[0]), vals)
        return vals

    def eval_slice(self, z, J, side="left"):
        if self.intrinsic:
            return qt.from_complex(self.eval_complex(z), J)
        zero, w = self._pull_back(z)
        vals = self.base.eval_slice(w, J, side)
        if np.any(zero):
            vals[zero] = self.base.f_inf
        return vals


class MonomialScaledStem(Stem):
    """z^k times a base stem (left factor is intrinsic, so sides are safe)."""

    def __init__(self, base: Stem, k):
        self.base = base
        self.k = int(k)
        self.intrinsic = base.intrinsic
        self.poles = base.poles
        self.f_inf = None

    def eval_complex(self, z):
        return z**self.k * self.base.eval_complex(z)

    def eval_slice(self, z, J, side="left"):
        z = np.asarray(z, dtype=complex)
        zk = qt.from_complex(z**self.k, J)
        bv = self.base.eval_slice(z, J, side)
        return qt.qmul(zk, bv) if side == "left" else qt.qmul(bv, zk)


class SumStem(Stem):
    def __init__(self, a: Stem, b: Stem):
        self.a, self.b = a, b
        self.intrinsic = a.intrinsic and b.intrinsic
        self.poles = tuple(set(a.poles) | set(b.poles))
        if a.f_inf is not None and b.f_inf is not None:
            self.f_inf = a.f_inf + b.f_inf
        else:
            self.f_inf = None

    def eval_complex(self, z):
        return self.a.eval_complex(z) + self.b.eval_complex(z)

    def eval_slice(self, z, J, side="left"):
        return self.a.eval_slice(z, J, side) + self.b.eval_slice(z, J, side)


class ScaledStem(Stem):
    """Right scalar multiple f(q) a (left side) or a f(q) (right side)."""

    def __init__(self, base: Stem, a):
        self.base = base
        self.a = np.asarray(a, dtype=float).reshape(4)
        self.intrinsic = base.intrinsic and bool(np.all(self.a[1:] == 0.0))
        self.poles = base.poles
        self.f_inf = None if base.f_inf is None else qt.qmul(base.f_inf, self.a)

    def eval_complex(self, z):
        if not self.intrinsic:
            raise NotIntrinsic("scale factor is not real")
        return self.a[0] * self.base.eval_complex(z)

    def eval_slice(self, z, J, side="left"):
        bv = self.base.eval_slice(z, J, side)
        return qt.qmul(bv, self.a) if side == "left" else qt.qmul(self.a, bv)


class ProductStem(Stem):
    """Pointwise product; the slice-preserving factor must be intrinsic."""

    def __init__(self, a: Stem, b: Stem, side="left"):
        if side == "left" and not a.intrinsic:
            raise NotIntrinsic("left factor of a left product must be intrinsic")
        if side == "right" and not b.intrinsic:
            raise NotIntrinsic("right factor of a right product must be intrinsic")
        self.a, self.b = a, b
        self.intrinsic = a.intrinsic and b.intrinsic
        self.poles = tuple(set(a.poles) | set(b.poles))
        if a.f_inf is not None and b.f_inf is not None:
            self.f_inf = qt.qmul(a.f_inf, b.f_inf)
        else:
            self.f_inf = None

    def eval_complex(self, z):
        return self.a.eval_complex(z) * self.b.eval_complex(z)

    def eval_slice(self, z, J, side="left"):
        return qt.qmul(self.a.eval_slice(z, J, side), self.b.eval_slice(z, J, side))


# ------------------------------------------------------------ slice functions

#: minimum slice distance from any pole sphere during evaluation
POLE_GUARD = 1e-8


@dataclass
class SliceFunction:
    """A stem together with a side (left / right / intrinsic)."""

    stem: Stem
    side: str = "left"

    def __post_init__(self):
        if self.side not in ("left", "right", "intrinsic"):
            raise QfineError(f"unknown side {self.side!r}")
        if self.side == "intrinsic" and not self.stem.intrinsic:
            raise NotIntrinsic("stem is not intrinsic")

    @property
    def intrinsic(self):
        return self.stem.intrinsic

    @property
    def poles(self):
        return self.stem.poles

    @property
    def f_inf(self):
        return self.stem.f_inf

    def _eval_side(self):
        return "right" if self.side == "right" else "left"

    def guard(self, u, v, margin=POLE_GUARD):
        for (pu, pv) in self.stem.poles:
            if np.hypot(u - pu, abs(v) - pv) <= margin:
                raise PoleProximity(
                    f"point at slice distance <= {margin:.1e} from pole sphere "
                    f"({pu}, {pv})"
                )

    def evaluate(self, q):
        u, v, J = qt.slice_decompose(q)
        self.guard(u, v)
        return self.stem.eval_slice(np.array([complex(u, v)]), J, self._eval_side())[0]

    def eval_on_slice(self, z, J):
        """Vectorized values at u + J v for z = u + i v (no pole guard)."""
        return self.stem.eval_slice(z, J, self._eval_side())

    def __call__(self, q):
        return self.evaluate(q)

    def plus(self, other: "SliceFunction") -> "SliceFunction":
        side = self.side if self.side == other.side else "left"
        return SliceFunction(SumStem(self.stem, other.stem), side)

    def times_right(self, a) -> "SliceFunction":
        return SliceFunction(ScaledStem(self.stem, a), self.side)

    def value_at_infinity(self):
        if self.stem.f_inf is None:
            raise MissingValueAtInfinity("function has no value at infinity")
        return self.stem.f_inf


def evaluate(f: SliceFunction, q):
    return f.evaluate(q)


def fmul(f: SliceFunction, g: SliceFunction) -> SliceFunction:
    """Pointwise product fg; requires the order-preserving factor intrinsic."""
    if f.side != "right" and not f.intrinsic:
        raise NotIntrinsic("product fg needs f intrinsic (or a right-sided f)")
    side = g.side if g.side != "intrinsic" else f.side
    return SliceFunction(ProductStem(f.stem, g.stem, "left"), side)


def monomial_times(f: SliceFunction, k) -> SliceFunction:
    """q^k f(q) (left) - used to build the q^2 phi(q) auxiliaries."""
    return SliceFunction(MonomialScaledStem(f.stem, k), f.side)


def poly(coeffs, side="left") -> SliceFunction:
    return SliceFunction(PolyStem(coeffs), side)


def rational(num_coeffs, pole_points) -> SliceFunction:
    return SliceFunction(RationalStem(num_coeffs, pole_points), "intrinsic")


def constant(c) -> SliceFunction:
    return SliceFunction(PolyStem(np.asarray(c, dtype=float).reshape(1, 4)), "left")


def fueter_tf1(stem: Stem) -> SliceFunction:
    """Slice extension alpha(q0,|q'|) + (q'/|q'|) beta(q0,|q'|) of a stem."""
    if not stem.intrinsic:
        raise NotIntrinsic("the slice extension map requires a real stem")
    return SliceFunction(stem, "intrinsic")


def compose_phi_alpha_inv(f: SliceFunction, alpha) -> SliceFunction:
    """phi(p) = f(p^-1 + alpha), with phi(0) = f(inf) and phi(inf) = f(alpha)."""
    return SliceFunction(PhiStem(f.stem, alpha), f.side)


# ----------------------------------------------------- differential operators

DIFF_OPS = ("D", "Dbar", "Delta", "D_squared")

#: default step and the advertised accuracy of the diagram checks
FD_STEP = 1e-3
FD_TOL = 1e-4


def _as_callable(f):
    if isinstance(f, SliceFunction):
        return f.evaluate, ("right" if f.side == "right" else "left")
    return f, "left"


def _richardson1(g, q, axis, h):
    def central(hh):
        return (g(q + hh * axis) - g(q - hh * axis)) / (2.0 * hh)

    return (4.0 * central(h / 2) - central(h)) / 3.0


def _richardson2(g, q, axis, h, center):
    def second(hh):
        return (g(q + hh * axis) - 2.0 * center + g(q - hh * axis)) / (hh * hh)

    return (4.0 * second(h / 2) - second(h)) / 3.0


def _richardson_mixed(g, q, a0, a1, h):
    def mixed(hh):
        return (
            g(q + hh * a0 + hh * a1)
            - g(q + hh * a0 - hh * a1)
            - g(q - hh * a0 + hh * a1)
            + g(q - hh * a0 - hh * a1)
        ) / (4.0 * hh * hh)

    return (4.0 * mixed(h / 2) - mixed(h)) / 3.0


def apply_diff(op, f, q, h=FD_STEP, side=None):
    """Finite-difference D, Dbar, Delta or D^2 at q (one Richardson step).

    `f` may be a SliceFunction or any callable q -> quaternion; for
    SliceFunctions a ball of radius 2h around q must stay clear of poles.
    """
    if op not in DIFF_OPS:
        raise QfineError(f"unknown differential operator {op!r}")
    q = np.asarray(q, dtype=float)
    g, inferred = _as_callable(f)
    side = side or inferred
    if isinstance(f, SliceFunction):
        u, v, _ = qt.slice_decompose(q)
        f.guard(u, v, margin=2.0 * h + POLE_GUARD)

    if op in ("D", "Dbar"):
        sign = 1.0 if op == "D" else -1.0
        out = _richardson1(g, q, qt.ONE, h)
        for e in _UNITS:
            d = _richardson1(g, q, e, h)
            term = qt.qmul(e, d) if side == "left" else qt.qmul(d, e)
            out = out + sign * term
        return out

    center = g(q)
    if op == "Delta":
        out = np.zeros(4)
        for e in _AXES:
            out = out + _richardson2(g, q, e, h, center)
        return out

    # D_squared = d00 - sum_i d_ii + 2 sum_i e_i d_0i (left ordering)
    out = _richardson2(g, q, qt.ONE, h, center)
    for e in _UNITS:
        out = out - _richardson2(g, q, e, h, center)
        m = _richardson_mixed(g, q, qt.ONE, e, h)
        term = qt.qmul(e, m) if side == "left" else qt.qmul(m, e)
        out = out + 2.0 * term
    return out


DIAGRAM_CHAINS = {
    "Delta(D f)": ("D", "Delta"),
    "D^2(Dbar f)": ("Dbar", "D_squared"),
    "D(Delta f)": ("Delta", "D"),
}


def diagram_residuals(f, points, h=FD_STEP):
    """Max pointwise norms of Delta(Df), D^2(Dbar f), D(Delta f).

    The outer operator runs at 10h: second differences divide the inner
    finite-difference noise by the square of the outer step, so the outer
    step must dominate the inner one to stay inside FD_TOL.
    """
    worst = {label: 0.0 for label in DIAGRAM_CHAINS}
    for q in points:
        for label, (inner, outer) in DIAGRAM_CHAINS.items():
            g = lambda p, op=inner: apply_diff(op, f, p, h=h)
            val = apply_diff(outer, g, q, h=10.0 * h)
            worst[label] = max(worst[label], float(qt.qnorm(val)))
    return worst


# -------------------------------------------------------------------- kernels


def _pseudo_denominator(s, q):
    """Q_{c,s}(q) = s^2 - 2 q0 s + |q|^2 as a quaternion (batched in s)."""
    s = np.asarray(s, dtype=float)
    q = np.asarray(q, dtype=float)
    return (
        qt.qmul(s, s)
        - 2.0 * q[0] * s
        + qt.qnorm2(q) * np.broadcast_to(qt.ONE, s.shape)
    )


def _check_sphere(s, q, tol=1e-10):
    s = np.asarray(s, dtype=float)
    su = s[..., 0]
    sv = np.linalg.norm(s[..., 1:], axis=-1)
    qu, qv, _ = qt.slice_decompose(q)
    dist = np.min(np.hypot(su - qu, sv - qv))
    if dist <= tol:
        raise SphereCollision(f"s lies on the sphere [q] within {tol:.1e}")


def kernel_SL(s, q):
    """(s - conj q)(s^2 - 2 q0 s + |q|^2)^-1."""
    _check_sphere(s, q)
    Q = _pseudo_denominator(s, q)
    return qt.qmul(np.asarray(s, dtype=float) - qt.qconj(q), qt.qinv(Q))


def kernel_SR(s, q):
    _check_sphere(s, q)
    Q = _pseudo_denominator(s, q)
    return qt.qmul(qt.qinv(Q), np.asarray(s, dtype=float) - qt.qconj(q))


def kernel_FL(s, q):
    """-4 (s - conj q) Q_{c,s}(q)^-2."""
    _check_sphere(s, q)
    Q = _pseudo_denominator(s, q)
    Q2inv = qt.qinv(qt.qmul(Q, Q))
    return -4.0 * qt.qmul(np.asarray(s, dtype=float) - qt.qconj(q), Q2inv)


def kernel_FR(s, q):
    _check_sphere(s, q)
    Q = _pseudo_denominator(s, q)
    Q2inv = qt.qinv(qt.qmul(Q, Q))
    return -4.0 * qt.qmul(Q2inv, np.asarray(s, dtype=float) - qt.qconj(q))


def kernel_DSL(s, q):
    """D_q S_L^-1(s, q) = -2 Q_{c,s}(q)^-1."""
    _check_sphere(s, q)
    return -2.0 * qt.qinv(_pseudo_denominator(s, q))


def kernel_DbarSL(s, q):
    """Dbar_q S_L^-1(s, q) = 4 Q^-1 + 4 imag(q)(s - conj q) Q^-2."""
    _check_sphere(s, q)
    s = np.asarray(s, dtype=float)
    Q = _pseudo_denominator(s, q)
    Q2inv = qt.qinv(qt.qmul(Q, Q))
    tail = qt.qmul(qt.imag_part(q), qt.qmul(s - qt.qconj(q), Q2inv))
    return 4.0 * qt.qinv(Q) + 4.0 * tail


def kernel_DbarSR(s, q):
    _check_sphere(s, q)
    s = np.asarray(s, dtype=float)
    Q = _pseudo_denominator(s, q)
    Q2inv = qt.qinv(qt.qmul(Q, Q))
    tail = qt.qmul(Q2inv, qt.qmul(s - qt.qconj(q), qt.imag_part(q)))
    return 4.0 * qt.qinv(Q) + 4.0 * tail


def axial_components(values, Js):
    """Split axial values f(u + J v) = A + J B given two or more J's.

    Returns (A, B) solved from the first two samples; extra samples are the
    caller's to check.
    """
    (v1, v2), (J1, J2) = values[:2], Js[:2]
    B = qt.qmul(qt.qinv(J1 - J2), v1 - v2)
    A = v1 - qt.qmul(J1, B)
    return A, B


def descriptor_to_function(d) -> SliceFunction:
    """Build a SliceFunction from the JSON descriptor format."""
    kind = d["kind"]
    side = d.get("side", "left")
    if kind == "poly":
        coeffs = np.asarray(d["coeffs"], dtype=float)
        fn = SliceFunction(PolyStem(coeffs), side)
    elif kind == "rational":
        coeffs = np.asarray(d["coeffs"], dtype=float)
        if coeffs.ndim == 2:
            if np.any(coeffs[:, 1:] != 0.0):
                raise NotIntrinsic("rational descriptors must have real coefficients")
            coeffs = coeffs[:, 0]
        fn = SliceFunction(RationalStem(coeffs, d.get("poles", [])), side)
    elif kind == "exp":
        fn = SliceFunction(ExpStem(d.get("rate", 1.0), d.get("scale", 1.0)), side)
    else:
        raise QfineError(f"unknown function kind {kind!r}")
    return fn


def function_to_descriptor(f: SliceFunction):
    stem = f.stem
    if isinstance(stem, PolyStem):
        return {
            "kind": "poly",
            "coeffs": stem.coeffs.tolist(),
            "poles": [],
            "f_inf": None if stem.f_inf is None else stem.f_inf.tolist(),
            "side": f.side,
        }
    if isinstance(stem, RationalStem):
        return {
            "kind": "rational",
            "coeffs": [[c, 0.0, 0.0, 0.0] for c in stem.num.tolist()],
            "poles": list(stem.pole_points),
            "f_inf": None if stem.f_inf is None else stem.f_inf.tolist(),
            "side": f.side,
        }
    if isinstance(stem, ExpStem):
        return {
            "kind": "exp",
            "rate": stem.rate,
            "scale": stem.scale,
            "poles": [],
            "f_inf": None,
            "side": f.side,
        }
    raise QfineError(f"no descriptor for stem {type(stem).__name__}")
