"""The homogeneous background walk ``U0 = S C0``.

Spectral bands, the dispersion variable ``zeta``, the Fourier integral
``I(x, kappa)`` in closed form, the Green kernel ``G0(x, kappa)`` of
``(U0 - e^{i kappa})^{-1}`` and its boundary values on the real axis, the
free resolvent ``R0(theta +- i0)``, plane waves and the truncated B* norm.

Boundary values
---------------
``side="+"`` is the limit from ``kappa = theta - i log(1 - eps)`` (upper
half plane) and ``side="-"`` the limit from ``theta - i log(1 + eps)``.
For non-real ``kappa`` both sides give the same value; the side only picks
which branch of ``zeta`` is returned.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .errors import ThresholdSingularity, ValidationError, WindowTooSmall
from .lattice import (
    FREE_PARAMS,
    THETA_GUARD,
    TWO_PI,
    HomogeneousParams,
    PlaneWaveTail,
    StateWindow,
    validate_theta,
    walk_with,
)

Side = Literal["+", "-"]

SIN_ZETA_FLOOR = 1e-14
SQRT_2PI = math.sqrt(TWO_PI)


def _check_side(side: Optional[str]) -> None:
    if side not in (None, "+", "-"):
        raise ValidationError(f"side must be '+' or '-', got {side!r}")


@dataclass(frozen=True)
class SpectralBands:
    band1: tuple
    band2: tuple
    thresholds: tuple

    def contains(self, theta: float) -> bool:
        """Whether ``e^{i theta}`` lies on one of the two arcs."""
        for lo, hi in (self.band1, self.band2):
            if (theta - lo) % TWO_PI <= hi - lo:
                return True
        return False


def free_spectrum(params: HomogeneousParams = FREE_PARAMS) -> SpectralBands:
    """Arcs of ``sigma(U0)`` in angle form."""
    ac = math.acos(params.p)
    shift = params.gamma / 2.0
    band1 = (ac + shift, math.pi - ac + shift)
    band2 = (math.pi + ac + shift, TWO_PI - ac + shift)
    return SpectralBands(band1, band2, band1 + band2)


def _threshold_distance(theta: float, params: HomogeneousParams) -> float:
    best = math.inf
    for t in free_spectrum(params).thresholds:
        d = math.fmod(abs(theta - t), TWO_PI)
        best = min(best, d, TWO_PI - d)
    return best


def dispersion_zeta(kappa: complex, params: HomogeneousParams = FREE_PARAMS,
                    side: Optional[Side] = None, guard: float = THETA_GUARD) -> complex:
    """Return ``zeta`` with ``cos zeta = cos(kappa - gamma/2) / p``.

    With ``side=None`` (non-real ``kappa`` only) the principal ``arccos`` is
    returned.  ``side="+"`` returns the root with ``Im zeta > 0``, ``"-"``
    the root with ``Im zeta < 0``.  For real ``kappa`` inside a band both
    roots are real; the one returned is the boundary value reached from the
    requested side, which is ``sign(sin(theta - gamma/2)) * arccos(...)``
    on either side.
    """
    _check_side(side)
    kappa = complex(kappa)
    w = cmath.cos(kappa - params.gamma / 2.0) / params.p
    real_axis = kappa.imag == 0.0
    if real_axis and side is None:
        raise ValidationError("a real kappa needs side='+' or side='-'")
    if real_axis and _threshold_distance(kappa.real, params) <= guard:
        raise ThresholdSingularity(f"theta = {kappa.real!r} is at a band threshold")
    if real_axis and abs(w.real) <= 1.0:
        theta = kappa.real
        zeta = complex(math.copysign(1.0, math.sin(theta - params.gamma / 2.0))
                       * math.acos(max(-1.0, min(1.0, w.real))))
    else:
        zeta = cmath.acos(w)
        if side == "+" and zeta.imag < 0 or side == "-" and zeta.imag > 0:
            zeta = -zeta
    if abs(cmath.sin(zeta)) < SIN_ZETA_FLOOR:
        raise ThresholdSingularity(f"sin(zeta) = {abs(cmath.sin(zeta)):.3e} at kappa = {kappa!r}")
    return zeta


def _zeta_sign(kappa: complex, params: HomogeneousParams, side: Optional[Side],
               guard: float) -> tuple:
    """``(zeta, s)`` such that the closed formulas use ``e^{s i |x| zeta}``."""
    zeta = dispersion_zeta(kappa, params, side, guard)
    if zeta.imag != 0.0:
        return zeta, 1 if zeta.imag > 0 else -1
    return zeta, 1 if side == "+" else -1


def contour_integral_I(x: int, kappa: complex, params: HomogeneousParams = FREE_PARAMS,
                       side: Optional[Side] = None, guard: float = THETA_GUARD) -> complex:
    """Closed form of ``int_{-pi}^{pi} e^{i x eta} / (-cos eta + cos(kappa - gamma/2)/p) d eta``.

    Equals ``+-2 pi i e^{+-i|x| zeta} / sin zeta`` for ``+-Im zeta > 0``.
    """
    zeta, s = _zeta_sign(kappa, params, side, guard)
    return s * 2j * math.pi * cmath.exp(s * 1j * abs(int(x)) * zeta) / cmath.sin(zeta)


@dataclass(frozen=True)
class GreenKernel:
    x: int
    kappa: complex
    r11: complex
    r12: complex
    r21: complex
    r22: complex

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.r11, self.r12], [self.r21, self.r22]], dtype=complex)


def green_homogeneous(x: int, kappa: complex, params: HomogeneousParams = FREE_PARAMS,
                      side: Optional[Side] = None, guard: float = THETA_GUARD) -> GreenKernel:
    """Kernel ``G0(x, kappa)`` of ``(U0 - e^{i kappa})^{-1}`` for general ``C0``.

    Columns solve ``(U0 - e^{i kappa}) u = delta^(L)`` and ``= delta^(R)``.
    A real ``kappa`` gives the boundary value from ``side``.
    """
    x = int(x)
    p, q = params.p, params.q
    al, be, ga = params.alpha, params.beta, params.gamma
    zeta, s = _zeta_sign(kappa, params, side, guard)
    kappa = complex(kappa)

    def e(m: int) -> complex:
        return cmath.exp(s * 1j * abs(m) * zeta)

    pref = s * 1j * cmath.exp(1j * x * (-al + ga / 2.0)) / (2.0 * p * cmath.exp(1j * kappa)
                                                            * cmath.sin(zeta))
    shift = cmath.exp(1j * (kappa - ga / 2.0))
    r11 = pref * (p * e(x - 1) - shift * e(x))
    r22 = pref * (p * e(x + 1) - shift * e(x))
    if q == 0.0:
        r12 = r21 = 0j
    else:
        r21 = pref * q * cmath.exp(1j * (al - be)) * e(x - 1)
        r12 = -pref * q * cmath.exp(1j * (be - al)) * e(x + 1)
    return GreenKernel(x, kappa, r11, r12, r21, r22)


def green_table(kappa: complex, params: HomogeneousParams, x_min: int, x_max: int,
                side: Optional[Side] = None, guard: float = THETA_GUARD) -> list:
    """``green_homogeneous`` at every site of ``[x_min, x_max]``."""
    return [green_homogeneous(x, kappa, params, side, guard) for x in range(x_min, x_max + 1)]


def green_defect_residual(kappa: complex, params: HomogeneousParams, x_min: int, x_max: int,
                          side: Optional[Side] = None) -> float:
    """Sup-norm of ``(U0 - e^{i kappa}) G0(., kappa) - delta_0`` for both columns.

    Each column of the kernel is sampled on ``[x_min, x_max]`` (which must
    contain 0) and the walk is applied with unknown values outside, so the
    residual covers ``[x_min + 1, x_max - 1]``.
    """
    if not x_min < 0 < x_max:
        raise WindowTooSmall("the window must contain 0 in its interior")
    table = green_table(kappa, params, x_min, x_max, side)
    lam = cmath.exp(1j * complex(kappa))
    worst = 0.0
    for col in (0, 1):
        u = StateWindow(x_min, [[g.matrix[0, col], g.matrix[1, col]] for g in table])
        out = apply_homogeneous(params, u, outside="unknown")
        res = out.values - lam * u.values[1:-1]
        res[-out.x_min, col] -= 1.0
        worst = max(worst, float(np.abs(res).max()))
    return worst


def _step_fn(x: int) -> int:
    return 1 if x >= 0 else 0


def green_free_limit(x: int, theta: float, side: Side,
                     guard: float = THETA_GUARD) -> GreenKernel:
    """Boundary value ``G0(x, theta +- i0)`` of the free walk ``U0 = S``."""
    _check_side(side)
    theta = validate_theta(theta, guard)
    x = int(x)
    if side == "+":
        r11 = _step_fn(x - 1) * cmath.exp(1j * theta * (x - 1))
        r22 = _step_fn(-x - 1) * cmath.exp(-1j * theta * (x + 1))
    else:
        r11 = -_step_fn(-x) * cmath.exp(1j * theta * (x - 1))
        r22 = -_step_fn(x) * cmath.exp(-1j * theta * (x + 1))
    return GreenKernel(x, complex(theta), complex(r11), 0j, 0j, complex(r22))


def free_resolvent_apply(theta: float, side: Side, f: StateWindow, x_min: int, x_max: int,
                         guard: float = THETA_GUARD) -> StateWindow:
    """``R0(theta +- i0) f`` for the free walk, evaluated on ``[x_min, x_max]``."""
    _check_side(side)
    theta = validate_theta(theta, guard)
    if f.tail is not None:
        raise ValidationError("the source must be compactly supported (no tail)")
    ys = f.sites
    wl = np.exp(-1j * theta * ys) * f.psi_l
    wr = np.exp(1j * theta * ys) * f.psi_r
    # cl[k] = sum of wl over the first k sites of f's window
    cl = np.concatenate([[0j], np.cumsum(wl)])
    cr = np.concatenate([[0j], np.cumsum(wr)])
    m = len(ys)

    def upto(c, y):  # sum over sites <= y
        return c[int(np.clip(y - f.x_min + 1, 0, m))]

    xs = np.arange(x_min, x_max + 1)
    out = np.zeros((len(xs), 2), dtype=complex)
    for k, x in enumerate(xs):
        if side == "+":
            sl = upto(cl, x - 1)
            sr = cr[m] - upto(cr, x)
            out[k] = (cmath.exp(1j * theta * (x - 1)) * sl,
                      cmath.exp(-1j * theta * (x + 1)) * sr)
        else:
            sl = cl[m] - upto(cl, x - 1)
            sr = upto(cr, x)
            out[k] = (-cmath.exp(1j * theta * (x - 1)) * sl,
                      -cmath.exp(-1j * theta * (x + 1)) * sr)
    return StateWindow(x_min, out)


def plane_wave(theta: float, phi_l: complex, phi_r: complex, x_min: int, x_max: int,
               guard: float = THETA_GUARD) -> StateWindow:
    """Free generalized eigenfunction ``(2 pi)^{-1/2} [phi_l e^{i theta x}, phi_r e^{-i theta x}]``."""
    theta = validate_theta(theta, guard)
    xs = np.arange(x_min, x_max + 1)
    vals = np.column_stack([phi_l * np.exp(1j * theta * xs),
                            phi_r * np.exp(-1j * theta * xs)]) / SQRT_2PI
    return StateWindow(x_min, vals, PlaneWaveTail(theta, phi_l / SQRT_2PI, phi_r / SQRT_2PI))


def bstar_norm(u: StateWindow, r_max: int) -> float:
    """``max_{2 <= R <= r_max} R^{-1} sum_{|x| < R} |u(x)|^2``.

    This is the squared B* norm truncated to ``R <= r_max``.
    """
    r_max = int(r_max)
    if r_max < 2:
        raise ValidationError("r_max must be at least 2")
    if u.x_min > -(r_max - 1) or u.x_max < r_max - 1:
        raise WindowTooSmall(f"window must cover [{-(r_max - 1)}, {r_max - 1}]")
    dens = np.sum(np.abs(u.values) ** 2, axis=1)
    centre = -u.x_min
    best = 0.0
    total = dens[centre]
    for R in range(2, r_max + 1):
        total += dens[centre + R - 1] + dens[centre - R + 1]
        best = max(best, total / R)
    return float(best)


def apply_homogeneous(params: HomogeneousParams, state: StateWindow,
                      outside: str = "zero") -> StateWindow:
    """One step of ``U0 = S C0`` with the same coin ``C0`` at every site."""
    c0 = params.coin()

    def entries(xs):
        shape = np.shape(xs)
        return tuple(np.full(shape, v, dtype=complex) for v in (c0.a, c0.b, c0.c, c0.d))

    if state.tail is not None:
        raise ValidationError("plane-wave tails are only defined for the free walk")
    return walk_with(entries, state, outside)


@dataclass(frozen=True)
class AsymptoticsReport:
    theta: float
    side: str
    X: int
    residual_plus: float
    residual_minus: float

    @property
    def residual(self) -> float:
        return max(self.residual_plus, self.residual_minus)


def resolvent_asymptotics_check(theta: float, f: StateWindow, X: int, side: Side = "+",
                                guard: float = THETA_GUARD) -> AsymptoticsReport:
    """Compare ``R0(theta +- i0) f`` at ``x = +-X`` with its plane-wave asymptote.

    The asymptote's amplitude is the Fourier coefficient
    ``(2 pi)^{-1/2} sum_y e^{-+ i theta y} f(y)`` of the component that
    travels outwards.  Beyond the support of ``f`` the free formulas are
    exact, so the residuals are pure rounding.
    """
    theta = validate_theta(theta, guard)
    X = int(X)
    support = np.nonzero(np.any(f.values != 0, axis=1))[0] + f.x_min
    reach = int(np.max(np.abs(support))) if support.size else 0
    if X <= reach:
        raise ValidationError(f"X = {X} must exceed the support radius {reach}")
    u = free_resolvent_apply(theta, side, f, -X, X, guard)
    ys = f.sites
    fl = np.sum(np.exp(-1j * theta * ys) * f.psi_l) / SQRT_2PI   # (F f)(+theta), L part
    fr = np.sum(np.exp(1j * theta * ys) * f.psi_r) / SQRT_2PI    # (F f)(-theta), R part
    pre = SQRT_2PI * cmath.exp(-1j * theta)
    if side == "+":
        at_plus = np.array([pre * cmath.exp(1j * theta * X) * fl, 0])
        at_minus = np.array([0, pre * cmath.exp(1j * theta * X) * fr])
    else:
        at_plus = np.array([0, -pre * cmath.exp(-1j * theta * X) * fr])
        at_minus = np.array([-pre * cmath.exp(-1j * theta * X) * fl, 0])
    res_p = float(np.max(np.abs(u.values[-1] - at_plus)))
    res_m = float(np.max(np.abs(u.values[0] - at_minus)))
    return AsymptoticsReport(theta, side, X, res_p, res_m)
