"""Independent reference computations used by the test suite and ``selftest``.

Nothing here is on the production path; each routine reaches the same
quantity as a library function by a different method:

* ``contour_integral_quadrature`` / ``green_quadrature``: rigorous
  ball-arithmetic quadrature (python-flint / Arb) of the Fourier integrals
  that the closed forms evaluate by residues.
* ``smatrix_via_transfer``: scattering coefficients from the 2x2 transfer
  recursion of the eigen-equation, with no reference to the interior matrix.
* random coins and fields for property sweeps.
"""

from __future__ import annotations

import math
from typing import Sequence

import flint
import numpy as np

from .lattice import (
    TWO_PI,
    Coin,
    CoinField,
    HomogeneousParams,
    coin_from_params,
    validate_theta,
)

DEFAULT_PREC = 96  # bits of working precision for the ball-arithmetic integrals


def _integrate(fn, prec: int, half: bool = False) -> tuple:
    """Integral of an analytic ``acb -> acb`` over ``[-pi, pi]`` (``[0, pi]`` if ``half``) and its error radius."""
    old = flint.ctx.prec
    flint.ctx.prec = prec
    try:
        # limits are built at working precision; a 53-bit pi would widen the ball
        lo = flint.arb(0) if half else -flint.arb.pi()
        hi = flint.arb.pi()
        tol = flint.arb(2) ** -(prec - 10)
        val = flint.acb.integral(lambda t, _: fn(t), lo, hi, rel_tol=tol, abs_tol=tol)
        return complex(val), float(max(val.real.rad(), val.imag.rad()))
    finally:
        flint.ctx.prec = old


def _acb(z: complex):
    return flint.acb(z.real, z.imag)


def contour_integral_quadrature(xs: Sequence[int], kappa: complex, params: HomogeneousParams,
                                prec: int = DEFAULT_PREC, with_error: bool = False):
    """``int_{-pi}^{pi} e^{i x eta} / (-cos eta + cos(kappa - gamma/2)/p) d eta`` by quadrature.

    Uses arbitrary-precision ball arithmetic, so the returned values carry a
    rigorous error radius (returned as a second array when ``with_error``).
    The integrand is even in ``eta``, so ``2 int_0^pi cos(x eta) / (..)`` is
    integrated instead.
    """
    kappa = complex(kappa)
    old = flint.ctx.prec
    flint.ctx.prec = prec
    try:
        w = flint.acb.cos(_acb(kappa) - flint.arb(params.gamma) / 2) / flint.arb(params.p)
    finally:
        flint.ctx.prec = old
    vals, errs = [], []
    for x in xs:
        v, e = _integrate(lambda t, x=int(x): (x * t).cos() / (w - t.cos()), prec, half=True)
        vals.append(2 * v)
        errs.append(2 * e)
    if with_error:
        return np.array(vals), np.array(errs)
    return np.array(vals)


def green_quadrature(xs: Sequence[int], kappa: complex, params: HomogeneousParams,
                     prec: int = DEFAULT_PREC) -> np.ndarray:
    """Entries ``r11, r12, r21, r22`` of ``G0(x, kappa)`` from their Fourier integrals.

    Integrates ``(2 pi)^{-1} e^{i x xi} adj(U0hat(xi) - e^{i kappa}) / det(...)``
    directly; returns an array of shape ``(4, len(xs))``.
    """
    acb, arb = flint.acb, flint.arb
    old = flint.ctx.prec
    flint.ctx.prec = prec
    try:
        p, q = arb(params.p), arb(params.q)
        e_al = acb(0, params.alpha).exp()
        e_be = acb(0, params.beta).exp()
        e_gb = acb(0, arb(params.gamma) - arb(params.beta)).exp()
        e_ga = acb(0, arb(params.gamma) - arb(params.alpha)).exp()
        lam = (acb(0, 1) * _acb(complex(kappa))).exp()
        two_pi = 2 * arb.pi()
    finally:
        flint.ctx.prec = old

    def entry(k, x):
        ix = acb(0, int(x))

        def fn(t):
            e = (acb(0, 1) * t).exp()
            u11, u12 = p * e_al * e, q * e_be * e
            u21, u22 = -q * e_gb / e, p * e_ga / e
            det = (u11 - lam) * (u22 - lam) - u12 * u21
            num = (u22 - lam, -u12, -u21, u11 - lam)[k]
            return (ix * t).exp() * num / (two_pi * det)

        return _integrate(fn, prec)[0]

    return np.array([[entry(k, x) for x in xs] for k in range(4)])


def random_params(rng: np.random.Generator, p_min: float = 0.01) -> HomogeneousParams:
    """Uniform ``p`` in ``[p_min, 1]`` and uniform phases."""
    p = rng.uniform(p_min, 1.0)
    al, be, ga = rng.uniform(0.0, TWO_PI, 3)
    return HomogeneousParams.from_angles(p, al, be, ga)


FIELD_P_MIN = 0.1


def random_coin(rng: np.random.Generator, p_min: float = FIELD_P_MIN) -> Coin:
    """Coin built from uniform ``(p, alpha, beta, gamma)``, ``p`` in ``[p_min, 1]``.

    The floor keeps ``|tau|`` (bounded above by roughly the product of the
    ``|a(x)|``) well clear of the ``1e-8`` positivity threshold.
    """
    return coin_from_params(random_params(rng, p_min))


def random_field(rng: np.random.Generator, n: int, p_min: float = FIELD_P_MIN) -> CoinField:
    return CoinField(tuple(random_coin(rng, p_min) for _ in range(n + 1)))


def random_theta(rng: np.random.Generator, size: int, margin: float = 1e-3) -> np.ndarray:
    """Quasi-energies drawn uniformly from the valid set, ``margin`` away from thresholds."""
    out = []
    while len(out) < size:
        t = rng.uniform(0.0, TWO_PI)
        if min(t, abs(t - math.pi), TWO_PI - t) > margin:
            out.append(t)
    return np.array(out)


def smatrix_via_transfer(field: CoinField, theta: float):
    """Scattering coefficients from the transfer recursion alone.

    Propagates the two left boundary forms ``[e^{i theta x}, 0]`` and
    ``[0, e^{-i theta x}]`` (``x <= -1``) to ``x = n + 1`` and solves the
    2x2 matching problem for ``tau, rho, tau_tilde, rho_tilde``.
    """
    from .scattering import ScatteringMatrix, transfer_extend

    theta = validate_theta(theta)
    n = field.n
    cols = []
    for start in ([np.exp(-1j * theta), 0.0], [0.0, np.exp(1j * theta)]):
        u = np.array(start, dtype=complex)
        for x in range(-1, n + 1):
            u = transfer_extend(u, field, x, theta)
        # amplitudes of e^{i theta x}[1,0] and e^{-i theta x}[0,1] at n+1
        cols.append([u[0] * np.exp(-1j * theta * (n + 1)), u[1] * np.exp(1j * theta * (n + 1))])
    T = np.array(cols).T  # right amplitudes = T @ left amplitudes
    # incoming from the right (alpha_L = 1): left = [tau, 0], right = [1, rho]
    tau = 1.0 / T[0, 0]
    rho = T[1, 0] * tau
    # incoming from the left (alpha_R = 1): left = [rho~, 1], right = [0, tau~]
    rho_t = -T[0, 1] / T[0, 0]
    tau_t = T[1, 0] * rho_t + T[1, 1]
    return ScatteringMatrix(theta, tau, rho, tau_t, rho_t)
