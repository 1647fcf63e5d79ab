r"""Resolvent families and the four functional calculi on the S-spectrum.

Bounded form (contour around the spectrum, positively oriented):

    S : (1/2pi) \oint S_L^-1(s,T) ds_J f(s)
    Q : -(1/pi) \oint Q_{c,s}(T)^-1 ds_J f(s)          (harmonic)
    F : (1/2pi) \oint F_L(s,T) ds_J f(s)               (monogenic)
    P2: (1/2pi) \oint P2_L(s,T) ds_J f(s)              (polyanalytic)

Unbounded form, via A = (T - alpha I)^-1 and phi = f o phi_alpha^-1: the
transform mode composes bounded calculi at A so that it always agrees with
the integral mode (negatively oriented punctures around the poles of f and
alpha, plus f(inf) I for S).  The composition constants are fixed by the
resolvent transformation identities (Sunbou / protQAQT / NEWFAP / the P2
relation) together with ds_J = -p^-2 dp_J under p = (s - alpha)^-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quaternion as qt
from ._accel import assemble_slice_operator
from .contours import RTOL, NODES_CAP, NODES_START, SliceContour, enclose_spectrum, integrate
from .errors import CannotSeparate, PreconditionViolated, QfineError, SpectrumHit
from .functions import SliceFunction, compose_phi_alpha_inv, monomial_times
from .linalg import (
    COND_CAP,
    CommutingTuple,
    QOperator,
    SSpectrum,
    embed_real_matrix,
    embed_scalar,
    extract_components,
    make_tuple,
    realify,
    s_spectrum,
)

RESOLVENT_KINDS = ("pseudo", "S", "F", "P2")
CALCULUS_KINDS = ("S", "F", "Q", "P2")

#: margin (slice distance) under which a point counts as on the spectrum
SPECTRUM_TOL = 1e-8
#: admissibility margin for the real transform point alpha
ALPHA_TOL = 1e-6
#: section-5 gates for the unbounded F- and P2-calculi
GATE_F_TOL = 1e-10
GATE_P2_TOL = 1e-8


def spectrum_of(T: CommutingTuple) -> SSpectrum:
    if T._spectrum is None:
        T._spectrum = s_spectrum(T)
    return T._spectrum


class ResolventFactory:
    """Precomputed realifications plus batched kernel evaluation for one tuple."""

    def __init__(self, T: CommutingTuple):
        self.T = T
        self.n = T.n
        self.T0 = T.T0
        self.P = T.P
        self.Top = realify(T).M
        self.Cop = realify(T.conj()).M
        self.T0op = embed_real_matrix(T.T0)

    def spectrum(self):
        return spectrum_of(self.T)

    def check_resolvent_point(self, u, v, tol=SPECTRUM_TOL):
        d = self.spectrum().distance(u, v)
        if d <= tol:
            raise SpectrumHit((u, v), d, tol)

    def _slice_inverse(self, z):
        """(z^2 I - 2 z T0 + P)^-1 for a batch of slice coordinates z."""
        n = self.n
        eye = np.eye(n)
        z = np.asarray(z, dtype=complex).ravel()
        mats = (
            (z**2)[:, None, None] * eye
            - (2.0 * z)[:, None, None] * self.T0
            + self.P
        )
        return np.linalg.inv(mats)

    def _assemble(self, W, LJ):
        return assemble_slice_operator(W.real, W.imag, LJ)

    def kernel(self, kind, side="left", J=None):
        """Batched kernel s -> (N, 4n, 4n) for nodes in the slice C_J."""
        if kind not in RESOLVENT_KINDS:
            raise QfineError(f"unknown resolvent kind {kind!r}")
        J = qt.E1 if J is None else np.asarray(J, dtype=float)
        LJ = qt.embed_left(J)
        LJn = np.kron(LJ, np.eye(self.n))

        def eval_batch(s):
            s = np.atleast_2d(np.asarray(s, dtype=float))
            z = s[:, 0] + 1j * (s[:, 1:] @ J[1:])
            W = self._slice_inverse(z)
            if kind == "pseudo":
                return self._assemble(W, LJ)
            zW = z[:, None, None] * W
            if kind == "S":
                if side == "left":
                    return self._assemble(zW, LJ) - self.Cop @ self._assemble(W, LJ)
                return self._assemble(zW, LJ) - self._assemble(W, LJ) @ self.Cop
            W2 = W @ W
            zW2 = z[:, None, None] * W2
            if side == "left":
                F = -4.0 * (self._assemble(zW2, LJ) - self.Cop @ self._assemble(W2, LJ))
            else:
                F = -4.0 * (self._assemble(zW2, LJ) - self._assemble(W2, LJ) @ self.Cop)
            if kind == "F":
                return F
            # P2 left: -F_L s + T0 F_L, the s acting inside (F compose L(s));
            # P2 right: -s F_R + T0 F_R, the s acting outside (L(s) compose F)
            u = s[:, 0][:, None, None]
            v = (s[:, 1:] @ J[1:])[:, None, None]
            Fs = u * F + v * (F @ LJn if side == "left" else LJn @ F)
            return -Fs + self.T0op @ F

        return eval_batch


def resolvent(kind, s, T: CommutingTuple, side="left", tol=SPECTRUM_TOL) -> QOperator:
    """Pseudo / S / F / P2 resolvent at a single quaternion point s."""
    if kind not in RESOLVENT_KINDS:
        raise QfineError(f"unknown resolvent kind {kind!r}")
    fac = ResolventFactory(T)
    u, v, J = qt.slice_decompose(np.asarray(s, dtype=float))
    fac.check_resolvent_point(u, v, tol)
    M = fac.kernel(kind, side, J)(np.asarray(s, dtype=float).reshape(1, 4))[0]
    return QOperator(T.n, M)


def s_right_variants(T: CommutingTuple, s):
    """Product vs split right S-resolvent, with the noncommutative arbiter.

    Returns (product, split, noncommutative, split_defect) where the defect
    is the relative gap between the split and product forms.
    """
    fac = ResolventFactory(T)
    u, v, J = qt.slice_decompose(np.asarray(s, dtype=float))
    fac.check_resolvent_point(u, v)
    LJ = qt.embed_left(J)
    W = fac._slice_inverse(np.array([complex(u, v)]))
    Qinv = fac._assemble(W, LJ)[0]
    zW = complex(u, v) * W
    product = fac._assemble(zW, LJ)[0] - Qinv @ fac.Cop
    split = fac._assemble(zW, LJ)[0] - fac.Cop @ Qinv
    # noncommutative form -(T - sbar I) Q_s(T)^-1 with real-coefficient Q_s
    m = 4 * T.n
    Qs = fac.Top @ fac.Top - 2.0 * u * fac.Top + (u * u + v * v) * np.eye(m)
    noncomm = -(fac.Top - embed_scalar(qt.qconj(np.asarray(s, float)), T.n)) @ np.linalg.inv(Qs)
    defect = np.linalg.norm(split - product) / max(1.0, np.linalg.norm(product))
    return product, split, noncomm, defect


@dataclass
class CalculusResult:
    op: QOperator
    nodes_used: int = 0
    contour: SliceContour | None = None
    meta: dict = field(default_factory=dict)


@dataclass
class CalculusRequest:
    """One calculus invocation: kind, mode, function, tuple, transform point."""

    kind: str
    mode: str  # bounded | unbounded-transform | unbounded-integral
    f: SliceFunction
    T: CommutingTuple
    alpha: float | None = None
    side: str = "left"
    margin: float = 0.3
    rtol: float = RTOL
    nodes_cap: int = NODES_CAP

    def run(self) -> CalculusResult:
        quad = {"rtol": self.rtol, "nodes_cap": self.nodes_cap}
        if self.mode == "bounded":
            return calculus_bounded(
                self.kind, self.f, self.T, self.side, margin=self.margin, **quad
            )
        if self.alpha is None:
            raise PreconditionViolated(
                "alpha in rho_S(T) and real", "unbounded modes need alpha"
            )
        mode = "transform" if self.mode == "unbounded-transform" else "integral"
        return calculus_unbounded(
            self.kind, self.f, self.T, self.alpha, mode=mode, side=self.side,
            margin=self.margin, **quad,
        )


def _quad_opts(opts):
    out = {"rtol": RTOL, "nodes_start": NODES_START, "nodes_cap": NODES_CAP}
    out.update(opts)
    return out


def calculus_bounded(
    kind,
    f: SliceFunction,
    T: CommutingTuple,
    side="left",
    *,
    contour: SliceContour | None = None,
    margin=0.3,
    J=None,
    **quad,
) -> CalculusResult:
    """Bounded functional calculus of `kind` applied to f at T."""
    if kind not in CALCULUS_KINDS:
        raise QfineError(f"unknown calculus kind {kind!r}")
    fac = ResolventFactory(T)
    if contour is None:
        contour = enclose_spectrum(fac.spectrum(), margin, avoid=f.poles, J=J)
    kname = "pseudo" if kind == "Q" else kind
    kern = fac.kernel(kname, side, contour.J)
    res = integrate(kern, f, contour, side, **_quad_opts(quad))
    value = res.value if kind != "Q" else -2.0 * res.value
    return CalculusResult(QOperator(T.n, value), res.nodes_used, contour)


def transform_operator(T: CommutingTuple, alpha, cond_cap=COND_CAP) -> CommutingTuple:
    """A = (T - alpha I)^-1 as a commuting tuple, for real alpha in rho_S."""
    alpha = float(alpha)
    d = spectrum_of(T).distance(alpha, 0.0)
    if d <= ALPHA_TOL:
        raise SpectrumHit((alpha, 0.0), d, ALPHA_TOL)
    M = realify(T).M - alpha * np.eye(4 * T.n)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > cond_cap:
        raise SpectrumHit((alpha, 0.0), 1.0 / cond if cond else 0.0, ALPHA_TOL)
    comps = extract_components(np.linalg.inv(M), T.n)
    return make_tuple(*comps, commutation_tol=1e-8)


def phi_alpha_image(spectrum: SSpectrum, alpha) -> SSpectrum:
    """Per-sphere image of the spectrum under s -> (s - alpha)^-1."""
    spheres = []
    for (u, v) in spectrum.spheres:
        d = (u - alpha) ** 2 + v**2
        spheres.append(((u - alpha) / d, v / d))
    return SSpectrum(sorted(spheres))


def _gate_check(kind, f: SliceFunction, alpha):
    if kind in ("F", "P2"):
        val = qt.qnorm(f.stem.value_at_real(alpha))
        if val > GATE_F_TOL:
            raise PreconditionViolated("f(alpha)=0", f"|f(alpha)| = {val:.3e}")
    if kind == "P2":
        der = qt.qnorm(f.stem.derivative_at_real(alpha))
        if der > GATE_P2_TOL:
            raise PreconditionViolated(
                "d_alpha f(alpha)=0", f"|f'(alpha)| = {der:.3e}"
            )


def _enclose_with_retry(spectrum, margin, avoid, J, max_halvings=8):
    """Shrink the margin until merged circles clear the avoid points.

    Merging overlapping spectrum circles can grow a cover circle far beyond
    the per-sphere radius; halving the margin always separates eventually
    (the avoid set keeps a positive distance from the spectrum).
    """
    for _ in range(max_halvings):
        try:
            return enclose_spectrum(spectrum, margin, avoid=avoid, J=J)
        except CannotSeparate:
            margin *= 0.5
    return enclose_spectrum(spectrum, margin, avoid=avoid, J=J)


def _auto_margin(spectrum: SSpectrum, avoid, scale=0.35):
    """Largest safe enclose margin given the avoid set, scaled down."""
    sep = np.inf
    for (au, av) in avoid:
        sep = min(sep, spectrum.distance(au, av))
    if not np.isfinite(sep):
        sep = max(1.0, spectrum.bound())
    vmax = max((v for (_, v) in spectrum.spheres), default=0.0)
    if sep <= 0:
        raise PreconditionViolated("alpha in rho_S(T)", "avoid point on the spectrum")
    return scale * sep / (1.0 + vmax)


def calculus_unbounded(
    kind,
    f: SliceFunction,
    T: CommutingTuple,
    alpha,
    mode="transform",
    side="left",
    *,
    margin=0.3,
    margin_scale=0.35,
    J=None,
    **quad,
) -> CalculusResult:
    """Unbounded-operator calculus via the (T - alpha I)^-1 transform.

    transform mode composes bounded calculi at A; integral mode evaluates
    the unbounded-domain contour integral directly (punctures around the
    poles of f and around alpha, with the f(inf) term for S).  The two
    modes agree for admissible f; section-5 gates are enforced up front.
    """
    if kind not in CALCULUS_KINDS:
        raise QfineError(f"unknown calculus kind {kind!r}")
    if mode not in ("transform", "integral"):
        raise QfineError(f"unknown mode {mode!r}")
    alpha = float(alpha)
    spec = spectrum_of(T)
    d = spec.distance(alpha, 0.0)
    if d <= ALPHA_TOL:
        raise PreconditionViolated(
            "alpha in rho_S(T) and real", f"slice distance {d:.3e}"
        )
    _gate_check(kind, f, alpha)

    n = T.n
    G = alpha**2 * np.eye(n) - 2.0 * alpha * T.T0 + T.P  # (A Abar)^-1, real
    AAbar = np.linalg.inv(G)

    if mode == "integral":
        if f.f_inf is None:
            raise PreconditionViolated(
                "f in SH(closed sigma_S(T))",
                "value at infinity required for the integral mode",
            )
        avoid = list(f.poles) + [(alpha, 0.0)]
        contour = enclose_spectrum(spec, margin, avoid=avoid, J=J, unbounded=True)
        fac = ResolventFactory(T)
        kname = "pseudo" if kind == "Q" else kind
        res = integrate(fac.kernel(kname, side, contour.J), f, contour, side, **_quad_opts(quad))
        value = res.value if kind != "Q" else -2.0 * res.value
        if kind == "S":
            value = value + embed_scalar(f.value_at_infinity(), n)
        return CalculusResult(QOperator(n, value), res.nodes_used, contour)

    # transform mode
    A = transform_operator(T, alpha)
    phi = compose_phi_alpha_inv(f, alpha)
    specA = spectrum_of(A)
    mA = _auto_margin(specA, phi.poles, margin_scale)
    contourA = _enclose_with_retry(specA, mA, phi.poles, J)
    AAop = embed_real_matrix(AAbar)

    def B(kind_, g):
        return calculus_bounded(kind_, g, A, side, contour=contourA, **quad)

    nodes = 0
    if kind == "S":
        r = B("S", phi)
        nodes += r.nodes_used
        value = r.op.M
    elif kind == "Q":
        r = B("Q", phi)
        nodes += r.nodes_used
        value = -AAop @ r.op.M
    elif kind == "F":
        rF = B("F", monomial_times(phi, 2))
        rQ = B("Q", monomial_times(phi, 1))
        nodes = rF.nodes_used + rQ.nodes_used
        value = AAop @ (rF.op.M - 2.0 * rQ.op.M)
    else:  # P2
        rP = B("P2", monomial_times(phi, 2))
        rS = B("S", monomial_times(phi, 1))
        rQ1 = B("Q", monomial_times(phi, 1))
        rQ0 = B("Q", phi)
        nodes = sum(r.nodes_used for r in (rP, rS, rQ1, rQ0))
        front = embed_real_matrix((T.T0 - alpha * np.eye(n)) @ AAbar)
        value = (
            -rP.op.M
            + 4.0 * rS.op.M
            - 2.0 * front @ rQ1.op.M
            + 2.0 * AAop @ rQ0.op.M
        )
    return CalculusResult(
        QOperator(n, value), nodes, contourA, meta={"alpha": alpha}
    )
